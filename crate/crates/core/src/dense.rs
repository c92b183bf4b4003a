//! Small dense complex matrices and the Jacobi-type decompositions built on them.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

const MAX_SWEEPS: usize = 80;

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Builds from row-major data; panics if `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        CMatrix { rows, cols, data }
    }

    pub fn from_diagonal(d: &[Complex64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Sub-block of rows `r0..r1`, all columns.
    pub fn row_range(&self, r0: usize, r1: usize) -> Self {
        Self::from_row_major(
            r1 - r0,
            self.cols,
            self.data[r0 * self.cols..r1 * self.cols].to_vec(),
        )
    }

    /// Leading `k` columns.
    pub fn leading_columns(&self, k: usize) -> Self {
        Self::from_fn(self.rows, k, |i, j| self[(i, j)])
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn adjoint_matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![ZERO; self.cols];
        for (i, vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * vi;
            }
        }
        out
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        CMatrix::from_row_major(self.rows, self.cols, data)
    }

    /// Largest entrywise deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Thin singular value decomposition `A = U diag(s) V^*` with `s` descending.
///
/// `u` is `rows x p` and `v` is `cols x p`, `p = min(rows, cols)`. Columns of
/// `u` belonging to zero singular values are left as zero vectors.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Applies `(x, y) <- (c x - s e y, s x + c e y)` with `e` a unit phase.
fn rotate_pair(x: &mut [Complex64], y: &mut [Complex64], c: f64, s: f64, e: Complex64) {
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let a = *xi;
        let b = *yi * e;
        *xi = a * c - b * s;
        *yi = a * s + b * c;
    }
}

fn two_columns(
    cols: &mut [Vec<Complex64>],
    p: usize,
    q: usize,
) -> (&mut [Complex64], &mut [Complex64]) {
    debug_assert!(p < q);
    let (lo, hi) = cols.split_at_mut(q);
    (&mut lo[p], &mut hi[0])
}

/// Rotation `(c, s)` annihilating the off-diagonal of `[[a, r], [r, b]]`.
fn jacobi_angle(a: f64, b: f64, r: f64) -> (f64, f64) {
    let zeta = (b - a) / (2.0 * r);
    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
    let c = 1.0 / (1.0 + t * t).sqrt();
    (c, c * t)
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd(a: &CMatrix, want_vectors: bool) -> Result<Svd> {
    if !a.is_finite() {
        return Err(Error::domain("matrix has non-finite entries"));
    }
    if a.rows() < a.cols() {
        let t = svd(&a.conj_transpose(), want_vectors)?;
        return Ok(Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        });
    }
    let (m, n) = (a.rows(), a.cols());
    let mut w: Vec<Vec<Complex64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<Complex64>> = if want_vectors {
        (0..n)
            .map(|j| {
                let mut e = vec![ZERO; n];
                e[j] = ONE;
                e
            })
            .collect()
    } else {
        Vec::new()
    };
    let tol = f64::EPSILON * (m as f64).sqrt();

    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let (wp, wq) = two_columns(&mut w, p, q);
                let a_pp = norm_sqr(wp);
                let a_qq = norm_sqr(wq);
                let g = dot_conj(wp, wq);
                let r = g.norm();
                if r == 0.0 || r <= tol * (a_pp * a_qq).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = (g / r).conj();
                let (c, s) = jacobi_angle(a_pp, a_qq, r);
                rotate_pair(wp, wq, c, s, phase);
                if want_vectors {
                    let (vp, vq) = two_columns(&mut v, p, q);
                    rotate_pair(vp, vq, c, s, phase);
                }
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: "one-sided Jacobi SVD",
            iterations: MAX_SWEEPS,
        });
    }

    let sigma: Vec<f64> = w.iter().map(|col| norm_sqr(col).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));

    let s: Vec<f64> = order.iter().map(|&j| sigma[j]).collect();
    let (u, vmat) = if want_vectors {
        let u = CMatrix::from_fn(m, n, |i, k| {
            let j = order[k];
            if sigma[j] > 0.0 {
                w[j][i] / sigma[j]
            } else {
                ZERO
            }
        });
        let vm = CMatrix::from_fn(n, n, |i, k| v[order[k]][i]);
        (u, vm)
    } else {
        (CMatrix::zeros(m, 0), CMatrix::zeros(n, 0))
    };
    Ok(Svd { u, s, v: vmat })
}

/// Singular values only, descending.
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    Ok(svd(a, false)?.s)
}

/// Eigen-decomposition `A = Q diag(lambda) Q^*` of a Hermitian matrix,
/// eigenvalues ascending, via cyclic complex Jacobi rotations.
pub fn hermitian_eigen(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.cols(),
        });
    }
    if !a.is_finite() {
        return Err(Error::domain("matrix has non-finite entries"));
    }
    let scale = a.frobenius_norm();
    let defect = a.hermitian_defect();
    if defect > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian { asymmetry: defect });
    }
    // Work column-wise on the symmetrized matrix.
    let mut cols: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| 0.5 * (a[(i, j)] + a[(j, i)].conj()))
                .collect()
        })
        .collect();
    let mut q: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            let mut e = vec![ZERO; n];
            e[j] = ONE;
            e
        })
        .collect();

    let off = |cols: &Vec<Vec<Complex64>>| -> f64 {
        let mut s = 0.0;
        for (j, col) in cols.iter().enumerate() {
            for (i, z) in col.iter().enumerate() {
                if i != j {
                    s += z.norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let target = 1e-15 * scale;
    let mut sweeps = 0;
    while n > 1 && off(&cols) > target {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                what: "Hermitian Jacobi eigensolver",
                iterations: MAX_SWEEPS,
            });
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for r in p + 1..n {
                let apq = cols[r][p];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let app = cols[p][p].re;
                let aqq = cols[r][r].re;
                // column r picks up the phase conj(apq)/|apq| so the pivot becomes real
                let phase = (apq / mag).conj();
                let (c, s) = jacobi_angle(app, aqq, mag);
                {
                    let (cp, cq) = two_columns(&mut cols, p, r);
                    rotate_pair(cp, cq, c, s, phase);
                }
                // rows p, r get the conjugate transform
                let rphase = phase.conj();
                for col in cols.iter_mut() {
                    let x = col[p];
                    let y = col[r] * rphase;
                    col[p] = x * c - y * s;
                    col[r] = x * s + y * c;
                }
                cols[r][p] = ZERO;
                cols[p][r] = ZERO;
                let (qp, qq) = two_columns(&mut q, p, r);
                rotate_pair(qp, qq, c, s, phase);
            }
        }
    }

    let lambda: Vec<f64> = (0..n).map(|j| cols[j][j].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| lambda[i].total_cmp(&lambda[j]));
    let values = order.iter().map(|&j| lambda[j]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, k| q[order[k]][i]);
    Ok((values, vectors))
}

/// Moore-Penrose pseudo-inverse, discarding singular values below
/// `rel_cutoff * sigma_1`.
pub fn pseudo_inverse(a: &CMatrix, rel_cutoff: f64) -> Result<CMatrix> {
    let d = svd(a, true)?;
    let s1 = d.s.first().copied().unwrap_or(0.0);
    let mut out = CMatrix::zeros(a.cols(), a.rows());
    for (k, &sk) in d.s.iter().enumerate() {
        if sk <= rel_cutoff * s1 || sk == 0.0 {
            continue;
        }
        let inv = 1.0 / sk;
        for i in 0..a.cols() {
            let vik = d.v[(i, k)] * inv;
            for j in 0..a.rows() {
                out[(i, j)] += vik * d.u[(j, k)].conj();
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn to_na(a: &CMatrix) -> DMatrix<Complex64> {
        DMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)])
    }

    #[test]
    fn diagonal_singular_values() {
        let a = CMatrix::from_diagonal(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, -3.0)]);
        let s = singular_values(&a).unwrap();
        assert!((s[0] - 3.0).abs() < 1e-15 && (s[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_values_match_gram_eigenvalues() {
        // Gram-matrix oracle: eigenvalues of M^* M from nalgebra's Hermitian solver.
        for (rows, cols, seed) in [(20, 13, 1), (13, 20, 2), (7, 7, 3)] {
            let m = random(rows, cols, seed);
            let s = singular_values(&m).unwrap();
            let na = to_na(&m);
            let gram = na.adjoint() * &na;
            let mut ev: Vec<f64> = gram
                .symmetric_eigenvalues()
                .iter()
                .map(|x| x.max(0.0).sqrt())
                .collect();
            ev.sort_by(|a, b| b.total_cmp(a));
            for (x, y) in s.iter().zip(&ev) {
                assert!((x - y).abs() <= 1e-9 * y.max(1e-3), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn svd_reconstructs() {
        let a = random(9, 6, 4);
        let d = svd(&a, true).unwrap();
        let us = CMatrix::from_fn(9, 6, |i, k| d.u[(i, k)] * d.s[k]);
        let back = us.matmul(&d.v.conj_transpose());
        assert!(back.sub(&a).frobenius_norm() < 1e-12 * a.frobenius_norm());
        let utu = d.u.conj_transpose().matmul(&d.u);
        assert!(utu.sub(&CMatrix::identity(6)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn hermitian_eigen_reconstructs() {
        let b = random(8, 8, 5);
        let a = b.matmul(&b.conj_transpose());
        let (lam, q) = hermitian_eigen(&a).unwrap();
        assert!(lam.windows(2).all(|w| w[0] <= w[1]));
        let ql = CMatrix::from_fn(8, 8, |i, k| q[(i, k)] * lam[k]);
        let back = ql.matmul(&q.conj_transpose());
        assert!(back.sub(&a).frobenius_norm() < 1e-12 * a.frobenius_norm());
    }

    #[test]
    fn non_hermitian_rejected() {
        let a = random(3, 3, 6);
        assert!(matches!(
            hermitian_eigen(&a),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn pseudo_inverse_of_full_column_rank() {
        let a = random(7, 3, 8);
        let p = pseudo_inverse(&a, 1e-12).unwrap();
        let pa = p.matmul(&a);
        assert!(pa.sub(&CMatrix::identity(3)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn non_finite_rejected() {
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 1)] = Complex64::new(f64::NAN, 0.0);
        assert!(svd(&a, false).is_err());
    }
}
