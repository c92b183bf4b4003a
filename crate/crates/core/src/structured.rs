//! Hankel and circulant operators.
//!
//! A Hankel matrix `G` of shape `(n - m) x m` with `G[j, k] = g[j + k]` sits
//! inside the `n x n` circulant `C` whose first column is `g`: with the input
//! reversed and zero padded, rows `m - 1 ..= n - 2` of `C [J_m; 0] x` are
//! exactly `G x`. `C` is diagonalized by the DFT, so products cost
//! `O(n log n)` and `||G||_2 <= ||C||_2 = sqrt(n) ||F_n g||_inf`.

use num_complex::Complex64;

use crate::dense::CMatrix;
use crate::dft::{self, Direction};
use crate::error::{Error, Result};

/// Default cap on the number of entries [`HankelOperator::to_dense`] will materialize.
pub const DEFAULT_DENSE_CAP: usize = 100_000_000;

/// A matrix-free linear operator over complex vectors.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `A x`; `x.len()` must equal `ncols()`.
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64>;
    /// `A^* v`; `v.len()` must equal `nrows()`.
    fn apply_adjoint(&self, v: &[Complex64]) -> Vec<Complex64>;
}

impl LinearOperator for CMatrix {
    fn nrows(&self) -> usize {
        self.rows()
    }
    fn ncols(&self) -> usize {
        self.cols()
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.matvec(x)
    }
    fn apply_adjoint(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.adjoint_matvec(v)
    }
}

/// The adjoint of a borrowed operator.
pub struct Adjoint<'a, T: ?Sized>(pub &'a T);

impl<T: LinearOperator + ?Sized> LinearOperator for Adjoint<'_, T> {
    fn nrows(&self) -> usize {
        self.0.ncols()
    }
    fn ncols(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.0.apply_adjoint(x)
    }
    fn apply_adjoint(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.0.apply(v)
    }
}

/// Circulant matrix with first column `g`, stored through its eigenvalues
/// `lambda = sqrt(n) F_n g`.
#[derive(Clone, Debug)]
pub struct CirculantOperator {
    first_column: Vec<Complex64>,
    eigenvalues: Vec<Complex64>,
}

impl CirculantOperator {
    pub fn new(g: &[Complex64]) -> Result<Self> {
        let n = g.len();
        let mut eigenvalues = dft::dft_forward(g)?;
        let root_n = (n as f64).sqrt();
        eigenvalues.iter_mut().for_each(|z| *z *= root_n);
        Ok(CirculantOperator {
            first_column: g.to_vec(),
            eigenvalues,
        })
    }

    pub fn dim(&self) -> usize {
        self.first_column.len()
    }

    pub fn first_column(&self) -> &[Complex64] {
        &self.first_column
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// `C x` via `F^* diag(lambda) F x`.
    pub fn matvec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(x, self.dim())?;
        Ok(self.apply_spectrum(x.to_vec(), false))
    }

    /// `C^* x`.
    pub fn adjoint_matvec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(x, self.dim())?;
        Ok(self.apply_spectrum(x.to_vec(), true))
    }

    fn apply_spectrum(&self, mut buf: Vec<Complex64>, conjugate: bool) -> Vec<Complex64> {
        let n = buf.len();
        dft::transform_in_place(&mut buf, Direction::Forward);
        for (b, l) in buf.iter_mut().zip(&self.eigenvalues) {
            *b *= if conjugate { l.conj() } else { *l };
        }
        dft::transform_in_place(&mut buf, Direction::Inverse);
        // forward and inverse are unnormalized; lambda already carries sqrt(n) F
        let s = 1.0 / n as f64;
        buf.iter_mut().for_each(|z| *z *= s);
        buf
    }

    pub fn to_dense(&self) -> CMatrix {
        let n = self.dim();
        CMatrix::from_fn(n, n, |i, j| self.first_column[(i + n - j) % n])
    }
}

/// Lazy `(n - m) x m` Hankel matrix with entries `g[j + k]`.
#[derive(Clone, Debug)]
pub struct HankelOperator {
    rows: usize,
    cols: usize,
    circulant: CirculantOperator,
}

impl HankelOperator {
    /// Builds the Hankel operator from `y` with `m` columns, `1 <= m <= n - 1`.
    pub fn new(y: &[Complex64], m: usize) -> Result<Self> {
        let n = y.len();
        if n < 2 || m == 0 || m >= n {
            return Err(Error::ShapeOutOfRange {
                m,
                n,
                max: n.saturating_sub(1),
            });
        }
        Ok(HankelOperator {
            rows: n - m,
            cols: m,
            circulant: CirculantOperator::new(y)?,
        })
    }

    /// Square-ish default shape, `m = floor(n / 2)`.
    pub fn with_default_shape(y: &[Complex64]) -> Result<Self> {
        Self::new(y, y.len() / 2)
    }

    pub fn data(&self) -> &[Complex64] {
        self.circulant.first_column()
    }

    pub fn len(&self) -> usize {
        self.circulant.dim()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn min_dim(&self) -> usize {
        self.rows.min(self.cols)
    }

    pub fn entry(&self, j: usize, k: usize) -> Complex64 {
        self.data()[j + k]
    }

    /// `G x` in `O(n log n)`.
    pub fn matvec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(x, self.cols)?;
        Ok(self.matvec_unchecked(x))
    }

    /// `G^* v` in `O(n log n)`.
    pub fn adjoint_matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(v, self.rows)?;
        Ok(self.adjoint_unchecked(v))
    }

    fn matvec_unchecked(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        let m = self.cols;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (slot, xi) in buf[..m].iter_mut().zip(x.iter().rev()) {
            *slot = *xi;
        }
        let out = self.circulant.apply_spectrum(buf, false);
        out[m - 1..m - 1 + self.rows].to_vec()
    }

    fn adjoint_unchecked(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        let m = self.cols;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[m - 1..m - 1 + self.rows].copy_from_slice(v);
        let out = self.circulant.apply_spectrum(buf, true);
        out[..m].iter().rev().copied().collect()
    }

    /// Dense materialization, refused above [`DEFAULT_DENSE_CAP`] entries.
    pub fn to_dense(&self) -> Result<CMatrix> {
        self.to_dense_with_cap(DEFAULT_DENSE_CAP)
    }

    pub fn to_dense_with_cap(&self, cap: usize) -> Result<CMatrix> {
        let entries = self.rows.saturating_mul(self.cols);
        if entries > cap {
            return Err(Error::DenseCapExceeded { entries, cap });
        }
        Ok(CMatrix::from_fn(self.rows, self.cols, |j, k| {
            self.entry(j, k)
        }))
    }
}

impl LinearOperator for HankelOperator {
    fn nrows(&self) -> usize {
        self.rows
    }
    fn ncols(&self) -> usize {
        self.cols
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols);
        self.matvec_unchecked(x)
    }
    fn apply_adjoint(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.rows);
        self.adjoint_unchecked(v)
    }
}

fn check_len(x: &[Complex64], expected: usize) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: x.len(),
        });
    }
    Ok(())
}

/// Free-function form of [`HankelOperator::new`].
pub fn hankel_from_signal(y: &[Complex64], m: usize) -> Result<HankelOperator> {
    HankelOperator::new(y, m)
}

/// `sqrt(n) ||F_n g||_inf`, an upper bound on the 2-norm of every Hankel
/// matrix built from `g`.
pub fn dft_norm_bound(g: &[Complex64]) -> Result<f64> {
    let f = dft::dft_forward(g)?;
    Ok((g.len() as f64).sqrt() * dft::sup_norm(&f))
}
