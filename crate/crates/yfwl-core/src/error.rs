//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide error.
///
/// Variants are split between *validation* problems (bad column names, bad
/// configuration, unparseable input) and *numerical* problems (rank
/// deficiency, singular systems, failed factorizations). The CLI maps the
/// former to exit code 2 and the latter to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    ShapeMismatch(String),

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("column `{0}` is assigned to more than one role")]
    OverlappingRoles(String),

    #[error("order condition violated: {instruments} instruments for {endogenous} endogenous regressors")]
    OrderConditionViolated { instruments: usize, endogenous: usize },

    #[error("the set of interest is empty")]
    EmptyInterestSet,

    #[error("{0} requires leverages but none were supplied")]
    MissingLeverages(String),

    #[error("leverage h[{index}] = {value} is too close to one")]
    LeverageAtOne { index: usize, value: f64 },

    #[error("cluster-robust covariance needs at least two clusters, found {0}")]
    SingleCluster(usize),

    #[error("first-step residual at observation {0} is exactly zero")]
    ZeroResidual(usize),

    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("file has a header but no data rows")]
    EmptyFile,

    #[error("duplicate column name `{0}` in header")]
    DuplicateHeader(String),

    #[error("missing value at line {line} in column `{col}` (enable drop-missing to drop such rows)")]
    MissingValue { line: usize, col: String },

    #[error("dataset needs at least 2 rows, found {0}")]
    TooFewRows(usize),

    #[error("dense projector for N = {n} exceeds the cap of {cap}")]
    DenseCapExceeded { n: usize, cap: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that arise before any numerical work starts.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::UnknownColumn(_)
                | Error::OverlappingRoles(_)
                | Error::OrderConditionViolated { .. }
                | Error::EmptyInterestSet
                | Error::Parse { .. }
                | Error::EmptyFile
                | Error::DuplicateHeader(_)
                | Error::MissingValue { .. }
                | Error::TooFewRows(_)
                | Error::InvalidConfig(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
