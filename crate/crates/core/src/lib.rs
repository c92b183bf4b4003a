//! Probabilistic 2-norm bounds for random Hankel matrices and the McMillan
//! degree lower bounds they yield for noisy impulse-response data.
//!
//! The pipeline: build the Hankel matrix of the measurements
//! ([`structured`]), pick a threshold that bounds the noise Hankel matrix's
//! 2-norm with a chosen probability ([`bounds`]) or by Monte Carlo
//! ([`identification::empirical_threshold`]), and count singular values at or
//! above it ([`spectrum`]). Weyl's inequality makes that count a lower bound on
//! the rank of the noise-free Hankel matrix, i.e. on the McMillan degree.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod dense;
pub mod dft;
pub mod error;
pub mod identification;
pub mod signals;
pub mod special;
pub mod spectrum;
pub mod stochastics;
pub mod structured;

pub use error::{Error, Result};
pub use num_complex::Complex64;
