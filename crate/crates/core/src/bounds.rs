//! Probability that a random Hankel matrix satisfies `||G||_2 <= alpha sqrt(n)`.
//!
//! Two formula families are offered. [`Variant::Paper`] evaluates the published
//! bound for each noise model; it is conservative under the sampling
//! conventions of [`crate::stochastics`]. [`Variant::ExactIid`] is the exact
//! CDF of `||F_n g||_inf` for the i.i.d. models under those conventions, and
//! is pointwise at least as large.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::special::{erf, regularized_lower_gamma};
use crate::stochastics::{NoiseKind, NoiseModel};

const BISECTION_TOL: f64 = 1e-9;
const BISECTION_CAP: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Paper,
    ExactIid,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Paper => "paper",
            Variant::ExactIid => "exact-iid",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Variant::Paper),
            "exact-iid" | "exact" => Ok(Variant::ExactIid),
            _ => Err(Error::domain(format!("unknown variant '{s}'"))),
        }
    }
}

/// A threshold on `||F_n g||_inf` together with its probability.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundResult {
    pub alpha: f64,
    pub probability: f64,
    pub n: usize,
    pub kind: NoiseKind,
    pub variant: Variant,
    /// `alpha * eps * sqrt(n)` when a noise scale was supplied.
    pub hankel_threshold: Option<f64>,
}

impl BoundResult {
    /// Bound on `||G||_2` at unit noise scale, `alpha sqrt(n)`.
    pub fn unit_threshold(&self) -> f64 {
        self.alpha * (self.n as f64).sqrt()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || alpha.is_nan() {
        return Err(Error::domain(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    Ok(())
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("n must be positive"));
    }
    Ok(())
}

/// `(1 - exp(-t))^k` evaluated in log space.
fn pow_one_minus_exp(t: f64, k: f64) -> f64 {
    if k == 0.0 {
        return 1.0;
    }
    (k * (-(-t).exp()).ln_1p()).exp()
}

/// Real i.i.d. shape shared by both variants: `erf(a)^r (1 - exp(-b))^c`
/// with `r` real-valued DFT bins and `c` independent complex bins.
fn real_iid_shape(n: usize, erf_arg: f64, exp_arg: f64) -> f64 {
    let (real_bins, complex_bins) = if n % 2 == 1 {
        (1, (n - 1) / 2)
    } else {
        (2, n / 2 - 1)
    };
    erf(erf_arg).powi(real_bins) * pow_one_minus_exp(exp_arg, complex_bins as f64)
}

/// Published probability `p(alpha)` for the model's distribution.
pub fn prob_paper(alpha: f64, model: &NoiseModel, n: usize) -> Result<f64> {
    check_alpha(alpha)?;
    check_n(n)?;
    let a2 = alpha * alpha;
    Ok(match model.kind() {
        NoiseKind::RealIid => real_iid_shape(n, alpha / 2.0, a2 / 2.0),
        NoiseKind::ComplexIid => pow_one_minus_exp(a2 / 2.0, n as f64),
        NoiseKind::RealCov | NoiseKind::ComplexCov => {
            let cov = model
                .covariance()
                .ok_or_else(|| Error::domain("covariance model without a covariance"))?;
            let h2 = cov.half_norm().powi(2);
            if h2 == 0.0 {
                return Ok(1.0);
            }
            if model.kind() == NoiseKind::RealCov {
                regularized_lower_gamma(n as f64 / 2.0, a2 / (2.0 * h2))?
            } else {
                regularized_lower_gamma(n as f64, a2 / h2)?
            }
        }
    })
}

/// Exact CDF of `||F_n g||_inf` for i.i.d. real or proper complex noise.
pub fn prob_exact_iid(alpha: f64, kind: NoiseKind, n: usize) -> Result<f64> {
    check_alpha(alpha)?;
    check_n(n)?;
    let a2 = alpha * alpha;
    match kind {
        NoiseKind::RealIid => Ok(real_iid_shape(n, alpha / std::f64::consts::SQRT_2, a2)),
        NoiseKind::ComplexIid => Ok(pow_one_minus_exp(a2, n as f64)),
        k => Err(Error::domain(format!(
            "the exact-iid variant does not apply to {k}"
        ))),
    }
}

/// Probability for the requested variant.
pub fn prob(alpha: f64, model: &NoiseModel, n: usize, variant: Variant) -> Result<f64> {
    match variant {
        Variant::Paper => prob_paper(alpha, model, n),
        Variant::ExactIid => prob_exact_iid(alpha, model.kind(), n),
    }
}

/// Solves `prob(alpha) = p_hat` by geometric bracketing and bisection.
pub fn alpha_for_prob(p_hat: f64, model: &NoiseModel, n: usize, variant: Variant) -> Result<f64> {
    if !(p_hat > 0.0 && p_hat < 1.0) {
        return Err(Error::domain(format!(
            "probability must lie in (0, 1), got {p_hat}"
        )));
    }
    check_n(n)?;
    if variant == Variant::ExactIid && model.kind().has_covariance() {
        return Err(Error::domain(format!(
            "the exact-iid variant does not apply to {}",
            model.kind()
        )));
    }
    if model.kind().has_covariance() && model.half_norm() == 0.0 {
        return Err(Error::domain(
            "zero covariance: every alpha has probability 1",
        ));
    }
    let f = |a: f64| prob(a, model, n, variant);

    let (mut lo, mut hi) = (1e-6, 8.0);
    let mut grow = 0;
    while f(lo)? > p_hat {
        lo /= 8.0;
        grow += 1;
        if grow > BISECTION_CAP {
            return Err(Error::NoConvergence {
                what: "alpha bracket",
                iterations: grow,
            });
        }
    }
    while f(hi)? < p_hat {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > BISECTION_CAP {
            return Err(Error::NoConvergence {
                what: "alpha bracket",
                iterations: grow,
            });
        }
    }

    for _ in 0..BISECTION_CAP {
        let mid = 0.5 * (lo + hi);
        let p = f(mid)?;
        if (p - p_hat).abs() <= BISECTION_TOL || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(mid);
        }
        if p < p_hat {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence {
        what: "alpha bisection",
        iterations: BISECTION_CAP,
    })
}

/// `sqrt(-2 log(1 - p_hat^{1/n}))`, the closed-form inverse of the complex
/// i.i.d. published bound.
pub fn asymptotic_alpha(p_hat: f64, n: usize) -> Result<f64> {
    if !(p_hat > 0.0 && p_hat < 1.0) {
        return Err(Error::domain(format!(
            "probability must lie in (0, 1), got {p_hat}"
        )));
    }
    check_n(n)?;
    // 1 - p^{1/n} = -expm1(ln(p) / n)
    let tail = -(p_hat.ln() / n as f64).exp_m1();
    Ok((-2.0 * tail.ln()).sqrt())
}

/// `alpha * eps * sqrt(n)`: the singular value threshold at noise scale `eps`.
pub fn hankel_norm_threshold(alpha: f64, eps: f64, n: usize) -> f64 {
    alpha * eps * (n as f64).sqrt()
}

/// Bundles `alpha_for_prob` with the probability it attains.
pub fn bound_for_prob(
    p_hat: f64,
    model: &NoiseModel,
    n: usize,
    variant: Variant,
    eps: Option<f64>,
) -> Result<BoundResult> {
    let alpha = alpha_for_prob(p_hat, model, n, variant)?;
    bound_for_alpha(alpha, model, n, variant, eps)
}

/// Evaluates the probability of a given `alpha`.
pub fn bound_for_alpha(
    alpha: f64,
    model: &NoiseModel,
    n: usize,
    variant: Variant,
    eps: Option<f64>,
) -> Result<BoundResult> {
    if let Some(e) = eps {
        if !(e > 0.0) {
            return Err(Error::domain(format!("eps must be positive, got {e}")));
        }
    }
    Ok(BoundResult {
        alpha,
        probability: prob(alpha, model, n, variant)?,
        n,
        kind: model.kind(),
        variant,
        hankel_threshold: eps.map(|e| hankel_norm_threshold(alpha, e, n)),
    })
}
