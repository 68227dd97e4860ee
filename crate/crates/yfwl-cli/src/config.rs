//! Flag surface and its validation into a coherent run configuration.

use clap::{Parser, ValueEnum};
use std::path::PathBuf;
use yfwl_core::covariance::{CovKind, CovSpec};
use yfwl_core::engine::EstimatorSpec;
use yfwl_core::error::{Error, Result};

#[derive(Parser, Debug, Clone)]
#[command(
    name = "yfwl",
    version,
    about = "Linear IV estimators with partialling-out: fit full or residualized models, \
             compare the two, and run the built-in demonstrations",
    after_help = "EXIT CODES:\n  0  success (including expected-failure demonstrations)\n  \
                  2  configuration or validation error\n  3  numerical error"
)]
pub struct Cli {
    /// CSV data file (header row, decimal reals)
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,

    /// Outcome column (Y)
    #[arg(long, value_name = "NAME")]
    pub outcome: Option<String>,

    /// Endogenous columns of interest (W2), comma separated
    #[arg(long, value_name = "CSV-LIST", value_delimiter = ',')]
    pub endogenous: Vec<String>,

    /// Exogenous conditioning columns (W1), comma separated
    #[arg(long, value_name = "CSV-LIST", value_delimiter = ',')]
    pub exogenous: Vec<String>,

    /// Excluded instrument columns (Z2), comma separated
    #[arg(long, value_name = "CSV-LIST", value_delimiter = ',')]
    pub instruments: Vec<String>,

    /// Cluster column (categorical labels allowed)
    #[arg(long, value_name = "NAME")]
    pub cluster: Option<String>,

    #[arg(long, value_enum, value_name = "ESTIMATOR")]
    pub estimator: Option<EstimatorArg>,

    /// K value for --estimator kclass
    #[arg(long, value_name = "REAL")]
    pub kappa: Option<f64>,

    /// Fuller adjustment, default 1
    #[arg(long, value_name = "REAL")]
    pub fuller_alpha: Option<f64>,

    #[arg(long, value_enum, value_name = "KIND")]
    pub vcov: Option<VcovArg>,

    /// Lag window for --vcov hac (Bartlett weights)
    #[arg(long, value_name = "INT")]
    pub hac_lags: Option<usize>,

    #[arg(long, value_enum, default_value = "full")]
    pub mode: ModeArg,

    /// Relative tolerance for equality verdicts
    #[arg(long, value_name = "REAL", default_value_t = 1e-8)]
    pub tolerance: f64,

    /// Do not prepend an intercept column to the exogenous block
    #[arg(long)]
    pub no_intercept: bool,

    /// Drop rows with missing cells instead of rejecting the file
    #[arg(long)]
    pub drop_missing: bool,

    #[arg(long, value_enum, default_value = "table")]
    pub format: FormatArg,

    /// RNG seed for the data-free modes (sweep, limitation-demo)
    #[arg(long, value_name = "INT")]
    pub seed: Option<u64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorArg {
    Ols,
    Iv,
    #[value(name = "2sls")]
    Tsls,
    Kclass,
    Liml,
    Fuller,
    Igmm,
    #[value(name = "2sgmm")]
    TwoStepGmm,
}

impl EstimatorArg {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorArg::Ols => "ols",
            EstimatorArg::Iv => "iv",
            EstimatorArg::Tsls => "2sls",
            EstimatorArg::Kclass => "kclass",
            EstimatorArg::Liml => "liml",
            EstimatorArg::Fuller => "fuller",
            EstimatorArg::Igmm => "igmm",
            EstimatorArg::TwoStepGmm => "2sgmm",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum VcovArg {
    Homo,
    Hc0,
    Hc1,
    Hc2,
    Hc3,
    Hc4,
    Hc5,
    Hac,
    #[value(name = "cluster-cv1")]
    ClusterCv1,
}

impl VcovArg {
    pub fn kind(&self) -> CovKind {
        match self {
            VcovArg::Homo => CovKind::Homoskedastic,
            VcovArg::Hc0 => CovKind::Hc0,
            VcovArg::Hc1 => CovKind::Hc1,
            VcovArg::Hc2 => CovKind::Hc2,
            VcovArg::Hc3 => CovKind::Hc3,
            VcovArg::Hc4 => CovKind::Hc4,
            VcovArg::Hc5 => CovKind::Hc5,
            VcovArg::Hac => CovKind::Hac,
            VcovArg::ClusterCv1 => CovKind::ClusterCv1,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeArg {
    Full,
    Partial,
    Compare,
    #[value(name = "limitation-demo")]
    LimitationDemo,
    Sweep,
}

impl ModeArg {
    pub fn name(&self) -> &'static str {
        match self {
            ModeArg::Full => "full",
            ModeArg::Partial => "partial",
            ModeArg::Compare => "compare",
            ModeArg::LimitationDemo => "limitation-demo",
            ModeArg::Sweep => "sweep",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormatArg {
    Json,
    Table,
}

impl Cli {
    /// Cross-flag consistency checks, run before any data is touched.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));

        match self.mode {
            ModeArg::Full | ModeArg::Partial | ModeArg::Compare => {
                if self.data.is_none() {
                    return fail(format!("--data is required for --mode {}", self.mode.name()));
                }
                if self.outcome.is_none() {
                    return fail("--outcome is required".into());
                }
                if self.endogenous.is_empty() {
                    return fail("--endogenous needs at least one column".into());
                }
                if self.estimator.is_none() {
                    return fail("--estimator is required".into());
                }
                if self.seed.is_some() {
                    return fail("--seed only applies to sweep and limitation-demo".into());
                }
            }
            ModeArg::LimitationDemo => {
                if let Some(_path) = &self.data {
                    if self.outcome.is_none()
                        || self.endogenous.is_empty()
                        || self.exogenous.is_empty()
                        || self.instruments.is_empty()
                    {
                        return fail(
                            "limitation-demo on data needs --outcome, --endogenous (the \
                             endogenous conditioning block), --exogenous (the block of \
                             interest) and --instruments"
                                .into(),
                        );
                    }
                } else if self.seed.is_none() {
                    return fail("limitation-demo needs --data or --seed".into());
                }
                if self.vcov.is_some() {
                    return fail("--vcov does not apply to limitation-demo".into());
                }
            }
            ModeArg::Sweep => {
                if self.data.is_some() {
                    return fail("--mode sweep uses the built-in process; drop --data".into());
                }
                match self.estimator {
                    Some(
                        EstimatorArg::Liml
                        | EstimatorArg::Fuller
                        | EstimatorArg::Kclass
                        | EstimatorArg::Tsls
                        | EstimatorArg::Ols,
                    ) => {}
                    Some(other) => {
                        return fail(format!(
                            "--mode sweep covers K-class estimators, not {}",
                            other.name()
                        ))
                    }
                    None => return fail("--estimator is required for --mode sweep".into()),
                }
                if self.vcov.is_some() {
                    return fail("--vcov does not apply to sweep".into());
                }
            }
        }

        if self.kappa.is_some() && self.estimator != Some(EstimatorArg::Kclass) {
            return fail("--kappa only applies to --estimator kclass".into());
        }
        if self.estimator == Some(EstimatorArg::Kclass) && self.kappa.is_none() {
            return fail("--estimator kclass needs --kappa".into());
        }
        if self.fuller_alpha.is_some() && self.estimator != Some(EstimatorArg::Fuller) {
            return fail("--fuller-alpha only applies to --estimator fuller".into());
        }
        if self.hac_lags.is_some() && self.vcov != Some(VcovArg::Hac) {
            return fail("--hac-lags only applies to --vcov hac".into());
        }
        if self.vcov == Some(VcovArg::ClusterCv1) && self.cluster.is_none() {
            return fail("--vcov cluster-cv1 needs --cluster".into());
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return fail("--tolerance must be a positive real".into());
        }
        Ok(())
    }

    pub fn estimator_spec(&self) -> EstimatorSpec<f64> {
        match self.estimator.expect("validated") {
            EstimatorArg::Ols => EstimatorSpec::Ols,
            EstimatorArg::Iv | EstimatorArg::Tsls => EstimatorSpec::Tsls,
            EstimatorArg::Kclass => EstimatorSpec::KClass { k: self.kappa.expect("validated") },
            EstimatorArg::Liml => EstimatorSpec::Liml,
            EstimatorArg::Fuller => {
                EstimatorSpec::Fuller { alpha: self.fuller_alpha.unwrap_or(1.0) }
            }
            EstimatorArg::Igmm => EstimatorSpec::Igmm,
            EstimatorArg::TwoStepGmm => EstimatorSpec::TwoStepGmm,
        }
    }

    /// Build the covariance spec; cluster labels come from the design.
    pub fn cov_spec(&self, cluster_labels: Option<&[String]>) -> Result<Option<CovSpec<f64>>> {
        let Some(arg) = self.vcov else { return Ok(None) };
        let spec = match arg {
            VcovArg::Hac => CovSpec::hac(self.hac_lags.unwrap_or(0)),
            VcovArg::ClusterCv1 => {
                let labels = cluster_labels.ok_or_else(|| {
                    Error::InvalidConfig("cluster-cv1 needs a cluster column".into())
                })?;
                CovSpec::cluster_cv1(labels.to_vec())
            }
            other => CovSpec::new(other.kind()),
        };
        Ok(Some(spec))
    }
}
