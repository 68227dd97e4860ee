//! Linear instrumental-variables estimation with a partialling-out engine.
//!
//! The crate implements the full family of linear IV estimators (OLS, 2SLS,
//! K-class with LIML and Fuller members, linear GMM, two-step optimal GMM),
//! sandwich covariance estimators (homoskedastic, HC0-HC5, HAC, cluster
//! CV1), and machinery that mechanically verifies when coefficients,
//! residuals, and covariance matrices agree between a full regression and
//! its residualized (partialled-out) counterpart.
//!
//! The numerical core is generic over the scalar type through the
//! [`scalar::Scalar`] trait (`f32` or `f64`); concrete `f64` aliases live at
//! the crate root.

pub mod covariance;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod model;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Relative R-diagonal / singular-value threshold for rank decisions.
pub const RANK_REL_TOL: f64 = 1e-10;
/// Default relative tolerance for the theorem equality checks.
pub const DEFAULT_REL_TOL: f64 = 1e-8;
/// Largest N for which dense N-by-N operators may be materialized.
pub const DENSE_PROJECTOR_CAP: usize = 2000;

pub type Mat64 = linalg::Mat<f64>;
pub type Mat32 = linalg::Mat<f32>;
pub type Dataset64 = dataset::Dataset<f64>;
pub type Design64 = model::ValidatedDesign<f64>;
pub type Fit64 = estimators::FitResult<f64>;
pub type CovSpec64 = covariance::CovSpec<f64>;
pub type Report64 = engine::ComparisonReport<f64>;
