//! Report envelope: versioned JSON schema and the aligned-table renderer.
//!
//! JSON is deterministic: struct field order is fixed and every float is
//! printed with 17 significant digits, so identical runs produce identical
//! bytes and the file re-parses to the exact same values.

use serde::Serialize;
use std::io::{self, Write};
use yfwl_core::covariance::VcovResult;
use yfwl_core::engine::{ComparisonReport, LimitationDemo, SweepRow};
use yfwl_core::estimators::FitResult;

pub const SCHEMA: &str = "yfwl-report/1";

#[derive(Serialize, Debug)]
pub struct Report {
    pub schema: &'static str,
    pub config: ConfigEcho,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fits: Vec<FitReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonReport<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limitation_demo: Option<LimitationDemo<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepReport>,
    pub diagnostics: Diagnostics,
}

#[derive(Serialize, Debug)]
pub struct ConfigEcho {
    pub data: Option<String>,
    pub outcome: Option<String>,
    pub endogenous: Vec<String>,
    pub exogenous: Vec<String>,
    pub instruments: Vec<String>,
    pub cluster: Option<String>,
    pub estimator: Option<String>,
    pub kappa: Option<f64>,
    pub fuller_alpha: Option<f64>,
    pub vcov: Option<String>,
    pub hac_lags: Option<usize>,
    pub mode: String,
    pub tolerance: f64,
    pub intercept: bool,
    pub drop_missing: bool,
    pub seed: Option<u64>,
}

#[derive(Serialize, Debug)]
pub struct FitReport {
    pub model_form: String,
    pub estimator: String,
    pub coefficients: Vec<CoefReport>,
    pub residual_summary: ResidualSummary,
}

#[derive(Serialize, Debug)]
pub struct CoefReport {
    pub name: String,
    pub estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se: Option<f64>,
}

#[derive(Serialize, Debug)]
pub struct ResidualSummary {
    pub n: usize,
    pub sse: f64,
    pub max_abs: f64,
}

#[derive(Serialize, Debug)]
pub struct SweepReport {
    pub estimator: String,
    pub rows: Vec<SweepRow<f64>>,
}

#[derive(Serialize, Debug, Default)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    pub dropped_rows: usize,
}

impl FitReport {
    pub fn from_fit(fit: &FitResult<f64>, vcov: Option<&VcovResult<f64>>) -> Self {
        let ses: Option<Vec<f64>> = vcov.map(|v| {
            (0..v.matrix.rows()).map(|j| v.matrix[(j, j)].max(0.0).sqrt()).collect()
        });
        let coefficients = fit
            .names
            .iter()
            .zip(&fit.coefficients)
            .enumerate()
            .map(|(j, (name, &estimate))| CoefReport {
                name: name.clone(),
                estimate,
                se: ses.as_ref().map(|s| s[j]),
            })
            .collect();
        let max_abs = fit.residuals.iter().fold(0.0f64, |m, &u| m.max(u.abs()));
        FitReport {
            model_form: match fit.model_form {
                yfwl_core::estimators::ModelForm::Full => "full".into(),
                yfwl_core::estimators::ModelForm::Partial => "partial".into(),
            },
            estimator: fit.estimator.label(),
            coefficients,
            residual_summary: ResidualSummary { n: fit.residuals.len(), sse: fit.sse(), max_abs },
        }
    }
}

/// serde_json formatter that prints every float with 17 significant digits.
struct SigFig17;

impl serde_json::ser::Formatter for SigFig17 {
    fn write_f64<W: Write + ?Sized>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: Write + ?Sized>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{:.16e}", value as f64)
    }
}

/// Serialize with fixed field order and 17-significant-digit floats.
pub fn to_json(report: &Report) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFig17);
    report.serialize(&mut ser).expect("report serialization cannot fail");
    String::from_utf8(out).expect("JSON is UTF-8")
}

/// Fixed-width table rendering of the same report.
pub fn to_table(report: &Report) -> String {
    let mut s = String::new();
    use std::fmt::Write as _;

    for fit in &report.fits {
        let _ = writeln!(s, "model: {:<8}  estimator: {}", fit.model_form, fit.estimator);
        let show_se = fit.coefficients.iter().any(|c| c.se.is_some());
        if show_se {
            let _ = writeln!(s, "{:<16} {:>22} {:>22}", "name", "estimate", "se");
        } else {
            let _ = writeln!(s, "{:<16} {:>22}", "name", "estimate");
        }
        for c in &fit.coefficients {
            match c.se {
                Some(se) => {
                    let _ = writeln!(s, "{:<16} {:>22.10} {:>22.10}", c.name, c.estimate, se);
                }
                None => {
                    let _ = writeln!(s, "{:<16} {:>22.10}", c.name, c.estimate);
                }
            }
        }
        let r = &fit.residual_summary;
        let _ = writeln!(s, "residuals: n = {}  sse = {:.10e}  max|u| = {:.10e}", r.n, r.sse, r.max_abs);
        let _ = writeln!(s);
    }

    if let Some(cmp) = &report.comparison {
        let _ = writeln!(
            s,
            "comparison: {}   tolerance = {:.1e}   partition: {:?}",
            cmp.estimator, cmp.tolerance, cmp.partition_case.tag
        );
        if cmp.expected_failure {
            let _ = writeln!(s, "note: no exact equality theorem for this estimator (expected failure allowed)");
        }
        let _ = writeln!(s, "{:<26} {:>14} {:>14} {:>9}", "quantity", "max |delta|", "rel delta", "verdict");
        let verdict = |pass: bool| if pass { "pass" } else { "FAIL" };
        let _ = writeln!(
            s,
            "{:<26} {:>14.3e} {:>14.3e} {:>9}",
            "coefficients (interest)",
            cmp.max_abs_coef_delta,
            cmp.max_rel_coef_delta,
            verdict(cmp.coef_pass)
        );
        let _ = writeln!(
            s,
            "{:<26} {:>14.3e} {:>14.3e} {:>9}",
            "residuals", cmp.max_abs_resid_delta, cmp.max_rel_resid_delta, verdict(cmp.resid_pass)
        );
        for check in &cmp.vcov_checks {
            let label = match check.leverage_source {
                Some(yfwl_core::engine::LeverageSource::PartialDesign) => {
                    format!("vcov {:?} (naive h)", check.kind)
                }
                Some(yfwl_core::engine::LeverageSource::FullViaPartition) => {
                    format!("vcov {:?} (full h)", check.kind)
                }
                None => format!("vcov {:?} (df {:.6})", check.kind, check.df_factor),
            };
            let _ = writeln!(
                s,
                "{:<26} {:>14} {:>14.3e} {:>9}{}",
                label.to_lowercase(),
                "-",
                check.max_rel_delta,
                verdict(check.pass),
                if check.expected_failure && !check.pass { " (expected)" } else { "" }
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<16} {:>22} {:>22}", "coefficient", "full", "partial");
        for ((name, full), (_, partial)) in cmp.coef_full_b2.iter().zip(&cmp.coef_partial) {
            let _ = writeln!(s, "{:<16} {:>22.10} {:>22.10}", name, full, partial);
        }
        if let (Some(kf), Some(kp)) = (cmp.kappa_full, cmp.kappa_partial) {
            let _ = writeln!(s, "kappa: full = {kf:.10}  partial = {kp:.10}");
        }
        let _ = writeln!(s);
    }

    if let Some(demo) = &report.limitation_demo {
        let _ = writeln!(s, "limitation demo (endogenous conditioning set)");
        let _ = writeln!(s, "{:<10} {:>22} {:>22} {:>22}", "coef", "full (iv)", "partial (ols)", "partial (iv)");
        for i in 0..demo.b2_full_eq17.len() {
            let _ = writeln!(
                s,
                "{:<10} {:>22.10} {:>22.10} {:>22.10}",
                format!("b2[{i}]"),
                demo.b2_full_eq17[i],
                demo.b2_partial_ols_eq19[i],
                demo.b2_partial_iv_eq20[i]
            );
        }
        let _ = writeln!(
            s,
            "max |full - partial(ols)| = {:.6e}   max |full - partial(iv)| = {:.6e}",
            demo.max_abs_delta_ols, demo.max_abs_delta_iv
        );
        let _ = writeln!(s);
    }

    if let Some(sweep) = &report.sweep {
        let _ = writeln!(s, "convergence sweep: {}", sweep.estimator);
        let _ = writeln!(s, "{:>8} {:>18} {:>18}", "N", "max |delta coef|", "kappa");
        for row in &sweep.rows {
            let _ = writeln!(s, "{:>8} {:>18.6e} {:>18.12}", row.n, row.max_abs_coef_delta, row.kappa);
        }
        let _ = writeln!(s);
    }

    if report.diagnostics.dropped_rows > 0 {
        let _ = writeln!(s, "dropped rows with missing cells: {}", report.diagnostics.dropped_rows);
    }
    if let Some(k) = report.diagnostics.kappa {
        let _ = writeln!(s, "kappa: {k:.12}");
    }
    s
}
