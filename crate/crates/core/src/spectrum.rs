//! Singular values of Hankel operators.
//!
//! Dense spectra come from the one-sided Jacobi SVD. Large operators use
//! Golub-Kahan bidiagonalization driven by matrix-free products, with full
//! reorthogonalization of both Krylov bases. Ritz values of the bidiagonal
//! are obtained from the `2j x 2j` Golub-Kahan tridiagonal (zero diagonal,
//! off-diagonal `alpha_1, beta_1, alpha_2, ...`) so no Gram matrix is formed.

use num_complex::Complex64;

use crate::dense::{self, CMatrix};
use crate::error::{Error, Result};
use crate::stochastics::SeededGenerator;
use crate::structured::{Adjoint, LinearOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Dense,
    Lanczos,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dense => "dense",
            Method::Lanczos => "lanczos",
        }
    }
}

/// Leading singular values, descending, with per-value convergence data.
#[derive(Clone, Debug)]
pub struct SingularSpectrum {
    pub values: Vec<f64>,
    pub converged: Vec<bool>,
    pub residual_norms: Vec<f64>,
    pub method: Method,
    /// `min(rows, cols)` of the decomposed operator.
    pub full_rank_dim: usize,
    /// Seed of the Lanczos start vector, when one was used.
    pub seed: Option<u64>,
}

impl SingularSpectrum {
    pub fn k_computed(&self) -> usize {
        self.values.len()
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

/// Result of thresholding a spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ThresholdCount {
    pub count: usize,
    /// False when uncomputed singular values might also reach the threshold,
    /// so `count` is only a lower count.
    pub certified: bool,
}

/// Full spectrum of a dense matrix.
pub fn dense_singular_values(m: &CMatrix) -> Result<SingularSpectrum> {
    let values = dense::singular_values(m)?;
    let k = values.len();
    Ok(SingularSpectrum {
        values,
        converged: vec![true; k],
        residual_norms: vec![0.0; k],
        method: Method::Dense,
        full_rank_dim: m.rows().min(m.cols()),
        seed: None,
    })
}

/// `#{k : sigma_k >= tau}`.
pub fn count_at_or_above(spec: &SingularSpectrum, tau: f64) -> ThresholdCount {
    let count = spec.values.iter().filter(|&&s| s >= tau).count();
    let certified = spec.method == Method::Dense
        || spec.k_computed() >= spec.full_rank_dim
        || spec.values.last().is_some_and(|&s| s < tau);
    ThresholdCount { count, certified }
}

/// Settings for the Golub-Kahan-Lanczos solver.
#[derive(Clone, Copy, Debug)]
pub struct LanczosConfig {
    /// Value `i` is converged when its residual is at most `tol * sigma_1`.
    pub tol: f64,
    /// Upper bound on bidiagonalization steps (further capped by `min(rows, cols)`).
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        LanczosConfig {
            tol: 1e-10,
            max_iter: usize::MAX,
            seed: 0x5eed,
        }
    }
}

/// Truncated SVD from the Lanczos path.
#[derive(Clone, Debug)]
pub struct PartialSvd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
    pub spectrum: SingularSpectrum,
}

/// Leading `k` singular values of `op`.
pub fn lanczos_singular_values<Op: LinearOperator + ?Sized>(
    op: &Op,
    k: usize,
    config: &LanczosConfig,
) -> Result<SingularSpectrum> {
    let p = op.nrows().min(op.ncols());
    if k == 0 || k > p {
        return Err(Error::domain(format!("k = {k} must satisfy 1 <= k <= {p}")));
    }
    if !(config.tol > 0.0) {
        return Err(Error::domain("tol must be positive"));
    }
    let run = if op.ncols() <= op.nrows() {
        bidiagonalize(op, k, config)
    } else {
        bidiagonalize(&Adjoint(op), k, config)
    };
    Ok(run.spectrum)
}

/// Leading `k` singular triplets of `op`.
pub fn lanczos_svd<Op: LinearOperator + ?Sized>(
    op: &Op,
    k: usize,
    config: &LanczosConfig,
) -> Result<PartialSvd> {
    let p = op.nrows().min(op.ncols());
    if k == 0 || k > p {
        return Err(Error::domain(format!("k = {k} must satisfy 1 <= k <= {p}")));
    }
    let flipped = op.ncols() > op.nrows();
    let run = if flipped {
        bidiagonalize(&Adjoint(op), k, config)
    } else {
        bidiagonalize(op, k, config)
    };
    let (left, right) = run.ritz_vectors(k)?;
    let s = run.spectrum.values.clone();
    let (u, v) = if flipped {
        (right, left)
    } else {
        (left, right)
    };
    Ok(PartialSvd {
        u,
        s,
        v,
        spectrum: run.spectrum,
    })
}

/// `||op||_2` by Lanczos (a Ritz value, so never above the true norm).
pub fn spectral_norm<Op: LinearOperator + ?Sized>(op: &Op, seed: u64) -> f64 {
    let config = LanczosConfig {
        tol: 1e-12,
        max_iter: usize::MAX,
        seed,
    };
    let p = op.nrows().min(op.ncols());
    if p == 0 {
        return 0.0;
    }
    let run = if op.ncols() <= op.nrows() {
        bidiagonalize(op, 1, &config)
    } else {
        bidiagonalize(&Adjoint(op), 1, &config)
    };
    run.spectrum.largest()
}

struct Bidiagonalization {
    u: Vec<Vec<Complex64>>,
    v: Vec<Vec<Complex64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    spectrum: SingularSpectrum,
}

impl Bidiagonalization {
    fn ritz_vectors(&self, k: usize) -> Result<(CMatrix, CMatrix)> {
        let j = self.alpha.len();
        let mut b = CMatrix::zeros(j, j);
        for i in 0..j {
            b[(i, i)] = Complex64::new(self.alpha[i], 0.0);
            if i + 1 < j {
                b[(i, i + 1)] = Complex64::new(self.beta[i], 0.0);
            }
        }
        let d = dense::svd(&b, true)?;
        let k = k.min(j);
        let rows_u = self.u[0].len();
        let rows_v = self.v[0].len();
        let left = CMatrix::from_fn(rows_u, k, |r, c| {
            (0..j).map(|i| self.u[i][r] * d.u[(i, c)]).sum()
        });
        let right = CMatrix::from_fn(rows_v, k, |r, c| {
            (0..j).map(|i| self.v[i][r] * d.v[(i, c)]).sum()
        });
        Ok((left, right))
    }
}

fn vnorm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Two passes of classical Gram-Schmidt against `basis`.
fn orthogonalize(x: &mut [Complex64], basis: &[Vec<Complex64>]) {
    for _ in 0..2 {
        for b in basis {
            let c: Complex64 = b.iter().zip(x.iter()).map(|(bi, xi)| bi.conj() * xi).sum();
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi -= c * bi;
            }
        }
    }
}

fn random_unit(
    dim: usize,
    gen: &mut SeededGenerator,
    basis: &[Vec<Complex64>],
) -> Option<Vec<Complex64>> {
    for _ in 0..4 {
        let mut x: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(gen.standard_normal(), gen.standard_normal()))
            .collect();
        orthogonalize(&mut x, basis);
        let nrm = vnorm(&x);
        if nrm > 1e-8 {
            x.iter_mut().for_each(|z| *z /= nrm);
            return Some(x);
        }
    }
    None
}

/// Golub-Kahan bidiagonalization on an operator with `ncols <= nrows`.
fn bidiagonalize<Op: LinearOperator + ?Sized>(
    op: &Op,
    k: usize,
    config: &LanczosConfig,
) -> Bidiagonalization {
    let p = op.ncols();
    let limit = config.max_iter.min(p).max(k);
    let mut gen = SeededGenerator::new(config.seed, 0);

    let mut us: Vec<Vec<Complex64>> = Vec::new();
    let mut vs: Vec<Vec<Complex64>> =
        vec![random_unit(p, &mut gen, &[]).expect("nonzero start vector")];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut scale = 0.0f64;

    let mut next_check = k;
    let mut last: Option<(Vec<f64>, Vec<f64>)> = None;

    for j in 0..limit {
        // u_j = G v_j - beta_{j-1} u_{j-1}
        let mut u = op.apply(&vs[j]);
        if let Some(prev) = us.last() {
            let b = beta[j - 1];
            for (ui, pi) in u.iter_mut().zip(prev) {
                *ui -= b * pi;
            }
        }
        orthogonalize(&mut u, &us);
        let mut a = vnorm(&u);
        scale = scale.max(a);
        if a <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
            a = 0.0;
            u = random_unit(op.nrows(), &mut gen, &us)
                .unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); op.nrows()]);
        } else {
            u.iter_mut().for_each(|z| *z /= a);
        }
        alpha.push(a);
        us.push(u);

        // v_{j+1} = G^* u_j - alpha_j v_j
        let mut v = op.apply_adjoint(&us[j]);
        for (vi, pi) in v.iter_mut().zip(&vs[j]) {
            *vi -= a * pi;
        }
        orthogonalize(&mut v, &vs);
        let mut b = vnorm(&v);
        scale = scale.max(b);
        // once V spans the whole domain, b is rounding noise and only feeds the residual
        let exhausted = j + 1 >= p;
        if !exhausted {
            if b <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
                b = 0.0;
                v = random_unit(p, &mut gen, &vs)
                    .unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); p]);
            } else {
                v.iter_mut().for_each(|z| *z /= b);
            }
            vs.push(v);
        }
        beta.push(b);

        let steps = j + 1;
        let done = steps == limit;
        if steps >= next_check || done {
            let (theta, resid) = ritz_values(&alpha, &beta);
            let top = theta.first().copied().unwrap_or(0.0);
            let ok = (0..k.min(theta.len())).all(|i| resid[i] <= config.tol * top);
            last = Some((theta, resid));
            if ok && steps >= k {
                break;
            }
            next_check = steps + (steps / 8).max(1);
        }
    }

    let (theta, resid) = last.unwrap_or_else(|| ritz_values(&alpha, &beta));
    let top = theta.first().copied().unwrap_or(0.0);
    let kk = k.min(theta.len());
    let values = theta[..kk].to_vec();
    let residual_norms = resid[..kk].to_vec();
    let converged = residual_norms
        .iter()
        .map(|&r| r <= config.tol * top)
        .collect();
    vs.truncate(alpha.len());
    Bidiagonalization {
        u: us,
        v: vs,
        alpha,
        beta,
        spectrum: SingularSpectrum {
            values,
            converged,
            residual_norms,
            method: Method::Lanczos,
            full_rank_dim: p,
            seed: Some(config.seed),
        },
    }
}

/// Singular values of the `j x j` upper bidiagonal (diagonal `alpha`,
/// superdiagonal `beta[..j-1]`), descending, with residual bounds
/// `beta_j |p_i[j]|`.
fn ritz_values(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let j = alpha.len();
    let n = 2 * j;
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    // e[i] couples i-1 and i: (v1,u1)=alpha1, (u1,v2)=beta1, ...
    for i in 1..n {
        e[i] = if i % 2 == 1 {
            alpha[i / 2]
        } else {
            beta[i / 2 - 1]
        };
    }
    let last_row = symmetric_tridiagonal_eigen(&mut d, &mut e);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
    let beta_j = beta.get(j - 1).copied().unwrap_or(0.0);
    let theta = order[..j].iter().map(|&i| d[i].max(0.0)).collect();
    let resid = order[..j]
        .iter()
        .map(|&i| beta_j * std::f64::consts::SQRT_2 * last_row[i].abs())
        .collect();
    (theta, resid)
}

/// Implicit QL on a symmetric tridiagonal matrix (diagonal `d`, subdiagonal
/// `e[1..]`). Overwrites `d` with eigenvalues and returns the last component
/// of each eigenvector.
fn symmetric_tridiagonal_eigen(d: &mut [f64], e: &mut [f64]) -> Vec<f64> {
    let n = d.len();
    let mut z = vec![0.0; n];
    if n == 0 {
        return z;
    }
    z[n - 1] = 1.0;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    break;
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let zh = z[i + 1];
                    z[i + 1] = s * z[i] + c * zh;
                    z[i] = c * z[i] - s * zh;
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    z
}
