//! Degree estimators and realization.
//!
//! [`degree_lower_bound`] thresholds the noisy Hankel spectrum at
//! `alpha * eps * sqrt(n)`; [`empirical_degree_lower_bound`] replaces that
//! threshold by a Monte Carlo percentile of `||G||_2`. [`ho_kalman_realization`]
//! and [`aic_scan`] provide the model-selection cross-check.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bounds::{alpha_for_prob, hankel_norm_threshold, Variant};
use crate::dense::{self, CMatrix};
use crate::error::{Error, Result};
use crate::spectrum::{
    count_at_or_above, dense_singular_values, lanczos_singular_values, lanczos_svd, spectral_norm,
    LanczosConfig, SingularSpectrum,
};
use crate::stochastics::{sample_noise, NoiseModel, SeededGenerator};
use crate::structured::HankelOperator;

/// Largest Hankel (rows x cols) the estimators decompose densely.
pub const DEFAULT_SVD_DENSE_CAP: usize = 1 << 16;

const LANCZOS_START_K: usize = 32;

/// State-space triple `x_{j+1} = A x_j`, `y_{j+1} = c^* x_{j+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    pub a: CMatrix,
    pub c: Vec<Complex64>,
    pub x0: Vec<Complex64>,
}

impl Realization {
    pub fn new(a: CMatrix, c: Vec<Complex64>, x0: Vec<Complex64>) -> Result<Self> {
        let q = a.rows();
        if q == 0 {
            return Err(Error::domain("realization must have order q >= 1"));
        }
        if a.cols() != q {
            return Err(Error::DimensionMismatch {
                expected: q,
                found: a.cols(),
            });
        }
        for v in [&c, &x0] {
            if v.len() != q {
                return Err(Error::DimensionMismatch {
                    expected: q,
                    found: v.len(),
                });
            }
        }
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        if !a.is_finite() || !c.iter().all(finite) || !x0.iter().all(finite) {
            return Err(Error::domain("realization has non-finite entries"));
        }
        Ok(Realization { a, c, x0 })
    }

    pub fn order(&self) -> usize {
        self.a.rows()
    }
}

/// Impulse response `y_j = c^* A^{j+1} x0`, `j = 0..n`.
pub fn simulate_lti(r: &Realization, n: usize) -> Vec<Complex64> {
    let mut x = r.x0.clone();
    (0..n)
        .map(|_| {
            x = r.a.matvec(&x);
            r.c.iter().zip(&x).map(|(ci, xi)| ci.conj() * xi).sum()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimateMethod {
    Theorem,
    Empirical,
}

impl fmt::Display for EstimateMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimateMethod::Theorem => "theorem",
            EstimateMethod::Empirical => "empirical",
        })
    }
}

/// A counted lower bound on the McMillan degree.
#[derive(Clone, Debug)]
pub struct DegreeEstimate {
    pub lower_bound: usize,
    pub threshold: f64,
    /// `p_hat` for the theorem bound, `gamma / 100` for the empirical one.
    pub probability: f64,
    pub method: EstimateMethod,
    pub variant: Option<Variant>,
    pub n: usize,
    pub m: usize,
    pub spectrum: SingularSpectrum,
    /// False when a truncated Lanczos spectrum makes the count a loose lower bound.
    pub certified: bool,
}

/// Knobs shared by the estimators.
#[derive(Clone, Copy, Debug)]
pub struct EstimatorOptions {
    /// Hankel column count; `floor(n / 2)` when `None`.
    pub m: Option<usize>,
    /// Hankel matrices with at most this many entries are decomposed densely.
    pub dense_cap: usize,
    pub lanczos_tol: f64,
    pub lanczos_seed: u64,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        EstimatorOptions {
            m: None,
            dense_cap: DEFAULT_SVD_DENSE_CAP,
            lanczos_tol: 1e-10,
            lanczos_seed: 0x5eed,
        }
    }
}

impl EstimatorOptions {
    pub fn with_m(m: usize) -> Self {
        EstimatorOptions {
            m: Some(m),
            ..Default::default()
        }
    }

    fn columns(&self, n: usize) -> usize {
        self.m.unwrap_or(n / 2)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::domain(format!("eps must be positive, got {eps}")));
    }
    Ok(())
}

/// Spectrum of `H` sufficient to count values `>= tau`: dense when small,
/// otherwise Lanczos with `k` doubled until a computed value falls below `tau`.
pub fn spectrum_for_threshold(
    h: &HankelOperator,
    tau: f64,
    opts: &EstimatorOptions,
) -> Result<SingularSpectrum> {
    let (rows, cols) = h.shape();
    if rows.saturating_mul(cols) <= opts.dense_cap {
        return dense_singular_values(&h.to_dense_with_cap(opts.dense_cap)?);
    }
    let p = h.min_dim();
    let mut k = LANCZOS_START_K.min(p);
    let config = LanczosConfig {
        tol: opts.lanczos_tol,
        max_iter: usize::MAX,
        seed: opts.lanczos_seed,
    };
    loop {
        let spec = lanczos_singular_values(h, k, &config)?;
        let below = spec.values.last().is_some_and(|&s| s < tau);
        if below || k == p {
            return Ok(spec);
        }
        k = (2 * k).min(p);
    }
}

fn estimate_with_threshold(
    y: &[Complex64],
    threshold: f64,
    opts: &EstimatorOptions,
) -> Result<(usize, SingularSpectrum, bool, usize)> {
    let m = opts.columns(y.len());
    let h = HankelOperator::new(y, m)?;
    let spectrum = spectrum_for_threshold(&h, threshold, opts)?;
    let counted = count_at_or_above(&spectrum, threshold);
    Ok((counted.count, spectrum, counted.certified, m))
}

/// McMillan degree lower bound holding with probability `p_hat`.
pub fn degree_lower_bound(
    y_noisy: &[Complex64],
    eps: f64,
    model: &NoiseModel,
    p_hat: f64,
    variant: Variant,
    opts: &EstimatorOptions,
) -> Result<DegreeEstimate> {
    let n = y_noisy.len();
    if n < 3 {
        return Err(Error::domain(format!("need at least 3 samples, got {n}")));
    }
    check_eps(eps)?;
    model.check_dim(n)?;
    let alpha = alpha_for_prob(p_hat, model, n, variant)?;
    let threshold = hankel_norm_threshold(alpha, eps, n);
    let (lower_bound, spectrum, certified, m) = estimate_with_threshold(y_noisy, threshold, opts)?;
    Ok(DegreeEstimate {
        lower_bound,
        threshold,
        probability: p_hat,
        method: EstimateMethod::Theorem,
        variant: Some(variant),
        n,
        m,
        spectrum,
        certified,
    })
}

/// Nearest-rank percentile: the value at 1-based rank `ceil(gamma N / 100)`
/// of the ascending sample.
pub fn nearest_rank_percentile(values: &[f64], gamma: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyVector);
    }
    if !(gamma > 0.0 && gamma < 100.0) {
        return Err(Error::domain(format!(
            "gamma must lie in (0, 100), got {gamma}"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = ((gamma * n as f64 / 100.0).ceil() as usize).clamp(1, n);
    Ok(sorted[rank - 1])
}

/// Minimum number of Monte Carlo trials accepted by [`empirical_threshold`].
pub const MIN_TRIALS: usize = 10;

/// `||G||_2` for each of `trials` unit-scale noise draws; trial `t` uses
/// stream `t` of `root_seed`, so the result is schedule independent.
pub fn sample_noise_norms(
    model: &NoiseModel,
    n: usize,
    m: usize,
    trials: usize,
    root_seed: u64,
) -> Result<Vec<f64>> {
    model.check_dim(n)?;
    HankelOperator::new(&vec![Complex64::new(0.0, 0.0); n], m)?;
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut gen = SeededGenerator::new(root_seed, t);
            let g = sample_noise(model, n, &mut gen)?;
            let h = HankelOperator::new(&g, m)?;
            Ok(spectral_norm(&h, root_seed ^ t.rotate_left(32)))
        })
        .collect()
}

/// `eps` times the `gamma`-th percentile of `||G_k||_2` over `trials` draws.
pub fn empirical_threshold(
    model: &NoiseModel,
    n: usize,
    m: usize,
    eps: f64,
    trials: usize,
    gamma: f64,
    root_seed: u64,
) -> Result<f64> {
    if trials < MIN_TRIALS {
        return Err(Error::InsufficientTrials {
            trials,
            min: MIN_TRIALS,
        });
    }
    check_eps(eps)?;
    if !(gamma > 0.0 && gamma < 100.0) {
        return Err(Error::domain(format!(
            "gamma must lie in (0, 100), got {gamma}"
        )));
    }
    let norms = sample_noise_norms(model, n, m, trials, root_seed)?;
    Ok(eps * nearest_rank_percentile(&norms, gamma)?)
}

/// Degree lower bound using the Monte Carlo threshold.
#[allow(clippy::too_many_arguments)]
pub fn empirical_degree_lower_bound(
    y_noisy: &[Complex64],
    eps: f64,
    model: &NoiseModel,
    gamma: f64,
    trials: usize,
    root_seed: u64,
    opts: &EstimatorOptions,
) -> Result<DegreeEstimate> {
    let n = y_noisy.len();
    if n < 3 {
        return Err(Error::domain(format!("need at least 3 samples, got {n}")));
    }
    let m = opts.columns(n);
    let threshold = empirical_threshold(model, n, m, eps, trials, gamma, root_seed)?;
    let (lower_bound, spectrum, certified, m) = estimate_with_threshold(y_noisy, threshold, opts)?;
    Ok(DegreeEstimate {
        lower_bound,
        threshold,
        probability: gamma / 100.0,
        method: EstimateMethod::Empirical,
        variant: None,
        n,
        m,
        spectrum,
        certified,
    })
}

/// Leading singular triplets of the data Hankel matrix.
struct TruncatedSvd {
    u: CMatrix,
    s: Vec<f64>,
}

fn leading_svd(h: &HankelOperator, q: usize, opts: &EstimatorOptions) -> Result<TruncatedSvd> {
    let (rows, cols) = h.shape();
    if rows.saturating_mul(cols) <= opts.dense_cap {
        let d = dense::svd(&h.to_dense_with_cap(opts.dense_cap)?, true)?;
        Ok(TruncatedSvd {
            u: d.u.leading_columns(q),
            s: d.s[..q].to_vec(),
        })
    } else {
        let config = LanczosConfig {
            tol: opts.lanczos_tol,
            max_iter: usize::MAX,
            seed: opts.lanczos_seed,
        };
        let d = lanczos_svd(h, q, &config)?;
        Ok(TruncatedSvd { u: d.u, s: d.s })
    }
}

fn check_order(q: usize, h: &HankelOperator) -> Result<()> {
    let limit = h.min_dim().saturating_sub(1);
    if q == 0 || q > limit {
        return Err(Error::domain(format!(
            "model order q = {q} must satisfy 1 <= q <= {limit} for a {}x{} Hankel matrix",
            h.shape().0,
            h.shape().1
        )));
    }
    Ok(())
}

/// Ho-Kalman factorization of the order-`q` truncation, with `x0` fitted to
/// the data by least squares.
fn realize(y: &[Complex64], svd: &TruncatedSvd, q: usize) -> Result<Realization> {
    let s1 = svd.s[0];
    let sq = svd.s[q - 1];
    if !(s1 > 0.0) || sq < 1e-13 * s1 {
        return Err(Error::RankDeficient {
            q,
            ratio: if s1 > 0.0 { sq / s1 } else { 0.0 },
        });
    }
    let rows = svd.u.rows();
    let root: Vec<f64> = svd.s[..q].iter().map(|s| s.sqrt()).collect();
    // observability factor O = U_q S_q^{1/2}
    let obs = CMatrix::from_fn(rows, q, |i, k| svd.u[(i, k)] * root[k]);
    let upper = obs.row_range(0, rows - 1);
    let lower = obs.row_range(1, rows);
    let a = dense::pseudo_inverse(&upper, 1e-12)?.matmul(&lower);
    let c: Vec<Complex64> = obs.row(0).iter().map(|z| z.conj()).collect();

    // regressors phi_j = c^* A^{j+1}, so y_j = phi_j x0
    let n = y.len();
    let at = a.conj_transpose();
    let mut w = c.clone();
    let phi = {
        let mut data = Vec::with_capacity(n * q);
        for _ in 0..n {
            w = at.matvec(&w);
            data.extend(w.iter().map(|z| z.conj()));
        }
        CMatrix::from_row_major(n, q, data)
    };
    let x0 = dense::pseudo_inverse(&phi, 1e-12)?.matvec(y);
    Realization::new(a, c, x0)
}

/// Order-`q` realization of `y` from its `(n - m) x m` Hankel matrix.
pub fn ho_kalman_realization(y: &[Complex64], q: usize, m: usize) -> Result<Realization> {
    ho_kalman_with_options(y, q, &EstimatorOptions::with_m(m))
}

pub fn ho_kalman_with_options(
    y: &[Complex64],
    q: usize,
    opts: &EstimatorOptions,
) -> Result<Realization> {
    let h = HankelOperator::new(y, opts.columns(y.len()))?;
    check_order(q, &h)?;
    let svd = leading_svd(&h, q, opts)?;
    realize(y, &svd, q)
}

/// AIC scores over model orders `1..=q_max`.
#[derive(Clone, Debug)]
pub struct AicScan {
    pub scores: BTreeMap<usize, f64>,
    /// Unweighted misfit `||y - y_hat||_2` per order.
    pub residuals: BTreeMap<usize, f64>,
    /// Orders whose fit failed, with the reason.
    pub failures: BTreeMap<usize, String>,
    pub argmin_q: usize,
}

/// `2 ||eps^{-1} Sigma^{-1/2} (y - y_hat)||^2 + 4 q` for each order.
///
/// Each order is fitted by HSVD (the Ho-Kalman factorization of one shared
/// truncated SVD) rather than a full nonlinear minimization. The penalty
/// counts `4q` real parameters even for real-valued data.
pub fn aic_scan(
    y_noisy: &[Complex64],
    eps: f64,
    model: &NoiseModel,
    q_max: usize,
    opts: &EstimatorOptions,
) -> Result<AicScan> {
    check_eps(eps)?;
    let n = y_noisy.len();
    model.check_dim(n)?;
    let h = HankelOperator::new(y_noisy, opts.columns(n))?;
    check_order(q_max, &h)?;
    let svd = leading_svd(&h, q_max, opts)?;

    let mut scores = BTreeMap::new();
    let mut residuals = BTreeMap::new();
    let mut failures = BTreeMap::new();
    for q in 1..=q_max {
        match realize(y_noisy, &svd, q) {
            Ok(r) => {
                let fit = simulate_lti(&r, n);
                let resid: Vec<Complex64> = y_noisy.iter().zip(&fit).map(|(a, b)| a - b).collect();
                let weighted = match model.covariance() {
                    Some(cov) => cov.apply_inverse_sqrt(&resid),
                    None => resid.clone(),
                };
                let wss = weighted.iter().map(|z| z.norm_sqr()).sum::<f64>() / (eps * eps);
                let score = 2.0 * wss + 4.0 * q as f64;
                if score.is_finite() {
                    scores.insert(q, score);
                    residuals.insert(q, resid.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
                } else {
                    failures.insert(q, "non-finite misfit".to_string());
                }
            }
            Err(e) => {
                failures.insert(q, e.to_string());
            }
        }
    }
    // ties go to the smaller order: BTreeMap iterates ascending and only a strict improvement replaces
    let argmin_q = scores
        .iter()
        .fold(None::<(usize, f64)>, |best, (&q, &s)| match best {
            Some((_, bs)) if bs <= s => best,
            _ => Some((q, s)),
        })
        .map(|(q, _)| q)
        .ok_or_else(|| Error::domain("AIC fit failed for every model order"))?;
    Ok(AicScan {
        scores,
        residuals,
        failures,
        argmin_q,
    })
}
