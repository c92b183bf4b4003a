//! Seeded Gaussian noise for the four supported noise models.
//!
//! Conventions: real noise has unit variance per entry; proper complex noise
//! has `E|g_k|^2 = 1` with independent real and imaginary parts of variance
//! 1/2. Covariance models draw `Sigma^{1/2} w` from the matching i.i.d. model.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dense::{hermitian_eigen, CMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    RealIid,
    ComplexIid,
    RealCov,
    ComplexCov,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 4] = [
        NoiseKind::RealIid,
        NoiseKind::ComplexIid,
        NoiseKind::RealCov,
        NoiseKind::ComplexCov,
    ];

    pub fn is_complex(self) -> bool {
        matches!(self, NoiseKind::ComplexIid | NoiseKind::ComplexCov)
    }

    pub fn has_covariance(self) -> bool {
        matches!(self, NoiseKind::RealCov | NoiseKind::ComplexCov)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::RealIid => "real-iid",
            NoiseKind::ComplexIid => "complex-iid",
            NoiseKind::RealCov => "real-cov",
            NoiseKind::ComplexCov => "complex-cov",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        NoiseKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::domain(format!("unknown noise distribution '{s}'")))
    }
}

/// A validated Hermitian PSD covariance with its eigen-decomposition cached.
#[derive(Clone, Debug)]
pub struct Covariance {
    sigma: CMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
    sqrt: CMatrix,
}

impl Covariance {
    pub fn new(sigma: CMatrix) -> Result<Self> {
        let (eigenvalues, eigenvectors) = hermitian_eigen(&sigma)?;
        let scale = eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
        if let Some(&min) = eigenvalues.first() {
            if min < -1e-10 * scale {
                return Err(Error::NotPsd { eigenvalue: min });
            }
        }
        let sqrt = spectral_function(&eigenvalues, &eigenvectors, |l| l.max(0.0).sqrt());
        Ok(Covariance {
            sigma,
            eigenvalues,
            eigenvectors,
            sqrt,
        })
    }

    pub fn dim(&self) -> usize {
        self.sigma.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.sigma
    }

    /// Hermitian square root `S` with `S S^* = Sigma`.
    pub fn sqrt(&self) -> &CMatrix {
        &self.sqrt
    }

    /// `||Sigma^{1/2}||_2 = sqrt(lambda_max)`.
    pub fn half_norm(&self) -> f64 {
        self.eigenvalues.last().map_or(0.0, |l| l.max(0.0).sqrt())
    }

    /// `Sigma^{-1/2} v`, treating eigenvalues below `1e-14 lambda_max` as null.
    pub fn apply_inverse_sqrt(&self, v: &[Complex64]) -> Vec<Complex64> {
        let lmax = self.eigenvalues.last().copied().unwrap_or(0.0);
        let proj = self.eigenvectors.adjoint_matvec(v);
        let scaled: Vec<Complex64> = proj
            .iter()
            .zip(&self.eigenvalues)
            .map(|(p, &l)| {
                if l > 1e-14 * lmax {
                    p / l.sqrt()
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        self.eigenvectors.matvec(&scaled)
    }
}

fn spectral_function(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = values.len();
    let fv: Vec<f64> = values.iter().map(|&l| f(l)).collect();
    CMatrix::from_fn(n, n, |i, j| {
        (0..n)
            .map(|k| vectors[(i, k)] * fv[k] * vectors[(j, k)].conj())
            .sum()
    })
}

/// Hermitian square root of a PSD matrix.
pub fn covariance_sqrt(sigma: &CMatrix) -> Result<CMatrix> {
    Ok(Covariance::new(sigma.clone())?.sqrt)
}

/// `||Sigma^{1/2}||_2`.
pub fn sigma_half_norm(sigma: &CMatrix) -> Result<f64> {
    Ok(Covariance::new(sigma.clone())?.half_norm())
}

/// Unit-scale Gaussian noise distribution.
#[derive(Clone, Debug)]
pub struct NoiseModel {
    kind: NoiseKind,
    covariance: Option<Covariance>,
}

impl NoiseModel {
    pub fn real_iid() -> Self {
        NoiseModel {
            kind: NoiseKind::RealIid,
            covariance: None,
        }
    }

    pub fn complex_iid() -> Self {
        NoiseModel {
            kind: NoiseKind::ComplexIid,
            covariance: None,
        }
    }

    pub fn real_cov(sigma: CMatrix) -> Result<Self> {
        if !sigma.is_real() {
            return Err(Error::domain("real-cov requires a real covariance matrix"));
        }
        Ok(NoiseModel {
            kind: NoiseKind::RealCov,
            covariance: Some(Covariance::new(sigma)?),
        })
    }

    pub fn complex_cov(sigma: CMatrix) -> Result<Self> {
        Ok(NoiseModel {
            kind: NoiseKind::ComplexCov,
            covariance: Some(Covariance::new(sigma)?),
        })
    }

    /// Builds a model from its kind; covariance kinds require `sigma`.
    pub fn from_kind(kind: NoiseKind, sigma: Option<CMatrix>) -> Result<Self> {
        match (kind, sigma) {
            (NoiseKind::RealIid, _) => Ok(Self::real_iid()),
            (NoiseKind::ComplexIid, _) => Ok(Self::complex_iid()),
            (NoiseKind::RealCov, Some(s)) => Self::real_cov(s),
            (NoiseKind::ComplexCov, Some(s)) => Self::complex_cov(s),
            (k, None) => Err(Error::domain(format!("{k} requires a covariance matrix"))),
        }
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn covariance(&self) -> Option<&Covariance> {
        self.covariance.as_ref()
    }

    /// `||Sigma^{1/2}||_2`, 1 for the i.i.d. kinds.
    pub fn half_norm(&self) -> f64 {
        self.covariance.as_ref().map_or(1.0, Covariance::half_norm)
    }

    /// Checks that the model can produce vectors of length `n`.
    pub fn check_dim(&self, n: usize) -> Result<()> {
        match &self.covariance {
            Some(c) if c.dim() != n => Err(Error::DimensionMismatch {
                expected: n,
                found: c.dim(),
            }),
            _ => Ok(()),
        }
    }
}

/// Deterministic generator keyed by `(seed, stream)`.
#[derive(Clone, Debug)]
pub struct SeededGenerator {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl SeededGenerator {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        SeededGenerator { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Draws one unit-scale noise vector of length `n`.
pub fn sample_noise(
    model: &NoiseModel,
    n: usize,
    gen: &mut SeededGenerator,
) -> Result<Vec<Complex64>> {
    model.check_dim(n)?;
    let complex = model.kind.is_complex();
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let w: Vec<Complex64> = (0..n)
        .map(|_| {
            if complex {
                let re = gen.standard_normal() * half;
                let im = gen.standard_normal() * half;
                Complex64::new(re, im)
            } else {
                Complex64::new(gen.standard_normal(), 0.0)
            }
        })
        .collect();
    Ok(match &model.covariance {
        None => w,
        Some(cov) => {
            let mut g = cov.sqrt.matvec(&w);
            if !complex {
                g.iter_mut().for_each(|z| z.im = 0.0);
            }
            g
        }
    })
}
