//! Gaussian importance sampling with optimal low-rank covariance projection.
//!
//! The crate estimates `E = ∫ φ f` for a standard Gaussian `f` using a
//! Gaussian proposal whose covariance is the identity corrected along a few
//! directions picked from an estimate of the zero-variance covariance.

pub mod bench;
pub mod error;
pub mod estimator;
pub mod gaussian;
pub mod linalg;
pub mod oracle;
pub mod problems;
pub mod projection;
pub mod rng;
pub mod special;
pub mod zero_variance;

pub use error::{Error, Result};
pub use gaussian::{Covariance, DenseCovariance, GaussianLaw, LowRankCovariance};
pub use linalg::{sym_eigendecompose, DenseSym, Eigenpair, Spectrum};
pub use problems::{AnalyticRecord, PhiKind, TestProblem};
pub use projection::{choose_k, ell, ell_order, optimal_projection, EllOrderedSpectrum};
pub use rng::RandomStream;
