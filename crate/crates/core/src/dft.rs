//! Unitary discrete Fourier transform of arbitrary length.
//!
//! `[F_n]_{j,k} = n^{-1/2} exp(-2 pi i j k / n)`. Only this normalization is
//! exposed. Transforms are planned through a thread-local planner so repeated
//! calls at the same length reuse twiddles without shared mutable state.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Clone, Copy)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

fn plan(n: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        match dir {
            Direction::Forward => p.plan_fft_forward(n),
            Direction::Inverse => p.plan_fft_inverse(n),
        }
    })
}

/// Unnormalized in-place transform (sum without the `n^{-1/2}` factor).
pub(crate) fn transform_in_place(buf: &mut [Complex64], dir: Direction) {
    if buf.len() <= 1 {
        return;
    }
    plan(buf.len(), dir).process(buf);
}

fn check(v: &[Complex64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::EmptyVector);
    }
    if let Some(index) = v
        .iter()
        .position(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::NonFinite { index });
    }
    Ok(())
}

fn unitary(v: &[Complex64], dir: Direction) -> Result<Vec<Complex64>> {
    check(v)?;
    let mut out = v.to_vec();
    transform_in_place(&mut out, dir);
    let scale = 1.0 / (v.len() as f64).sqrt();
    out.iter_mut().for_each(|z| *z *= scale);
    Ok(out)
}

/// Returns `F_n g`.
pub fn dft_forward(g: &[Complex64]) -> Result<Vec<Complex64>> {
    unitary(g, Direction::Forward)
}

/// Returns `F_n^* w`, the inverse of [`dft_forward`].
pub fn dft_inverse(w: &[Complex64]) -> Result<Vec<Complex64>> {
    unitary(w, Direction::Inverse)
}

/// Largest complex modulus over the entries (0 for an empty slice).
pub fn sup_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
