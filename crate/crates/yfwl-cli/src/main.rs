//! `yfwl` binary: CSV in, estimates and equality reports out.

mod config;
mod report;

use clap::Parser;
use config::{Cli, FormatArg, ModeArg};
use report::{ConfigEcho, Diagnostics, FitReport, Report, SweepReport};
use std::process::ExitCode;
use yfwl_core::covariance::{sandwich_full, sandwich_partial};
use yfwl_core::dataset::{ingest_csv, Dataset, IngestOptions};
use yfwl_core::engine::{self, dgp, EstimatorSpec};
use yfwl_core::error::Result;
use yfwl_core::estimators::{self, ModelForm};
use yfwl_core::linalg::Mat;
use yfwl_core::model::{validate, ModelSpec, ValidatedDesign};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(rendered) => {
            println!("{rendered}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("yfwl: error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn run(cli: &Cli) -> Result<String> {
    cli.validate()?;
    let report = match cli.mode {
        ModeArg::Full => fit_mode(cli, ModelForm::Full)?,
        ModeArg::Partial => fit_mode(cli, ModelForm::Partial)?,
        ModeArg::Compare => compare_mode(cli)?,
        ModeArg::LimitationDemo => limitation_mode(cli)?,
        ModeArg::Sweep => sweep_mode(cli)?,
    };
    Ok(match cli.format {
        FormatArg::Json => report::to_json(&report),
        FormatArg::Table => report::to_table(&report),
    })
}

fn config_echo(cli: &Cli) -> ConfigEcho {
    ConfigEcho {
        data: cli.data.as_ref().map(|p| p.display().to_string()),
        outcome: cli.outcome.clone(),
        endogenous: cli.endogenous.clone(),
        exogenous: cli.exogenous.clone(),
        instruments: cli.instruments.clone(),
        cluster: cli.cluster.clone(),
        estimator: cli.estimator.map(|e| e.name().to_string()),
        kappa: cli.kappa,
        fuller_alpha: cli.fuller_alpha,
        vcov: cli.vcov.map(|v| format!("{:?}", v.kind()).to_lowercase()),
        hac_lags: cli.hac_lags,
        mode: cli.mode.name().to_string(),
        tolerance: cli.tolerance,
        intercept: !cli.no_intercept,
        drop_missing: cli.drop_missing,
        seed: cli.seed,
    }
}

fn load(cli: &Cli) -> Result<(Dataset<f64>, ValidatedDesign<f64>)> {
    let path = cli.data.as_ref().expect("validated");
    let data = ingest_csv::<f64>(
        path,
        &IngestOptions { drop_missing: cli.drop_missing, cluster: cli.cluster.clone() },
    )?;
    let spec = ModelSpec {
        outcome: cli.outcome.clone().expect("validated"),
        conditioning: cli.exogenous.clone(),
        of_interest: cli.endogenous.clone(),
        instruments: cli.instruments.clone(),
        intercept: !cli.no_intercept,
        cluster: cli.cluster.clone(),
    };
    let design = validate(&spec, &data)?;
    Ok((data, design))
}

fn kappa_diagnostic(design: &ValidatedDesign<f64>, spec: &EstimatorSpec<f64>) -> Result<Option<f64>> {
    Ok(match spec {
        EstimatorSpec::Liml | EstimatorSpec::Fuller { .. } => {
            Some(estimators::liml_kappa(design)?)
        }
        _ => None,
    })
}

fn fit_mode(cli: &Cli, form: ModelForm) -> Result<Report> {
    let (data, design) = load(cli)?;
    let spec = cli.estimator_spec();
    let fit = match form {
        ModelForm::Full => spec.fit_full(&design)?,
        ModelForm::Partial => spec.fit_partial(&design)?,
    };
    let cov = cli.cov_spec(design.cluster_labels())?;
    let vcov = match &cov {
        None => None,
        Some(c) => Some(match form {
            ModelForm::Full => sandwich_full(&design, &fit, c)?,
            ModelForm::Partial => sandwich_partial(&design, &fit, c)?,
        }),
    };
    Ok(Report {
        schema: report::SCHEMA,
        config: config_echo(cli),
        fits: vec![FitReport::from_fit(&fit, vcov.as_ref())],
        comparison: None,
        limitation_demo: None,
        sweep: None,
        diagnostics: Diagnostics {
            kappa: kappa_diagnostic(&design, &spec)?,
            dropped_rows: data.dropped_rows(),
        },
    })
}

fn compare_mode(cli: &Cli) -> Result<Report> {
    let (data, design) = load(cli)?;
    let spec = cli.estimator_spec();
    let cov_specs: Vec<_> = cli.cov_spec(design.cluster_labels())?.into_iter().collect();
    let comparison = engine::compare(&design, &spec, &cov_specs, cli.tolerance)?;
    let full = spec.fit_full(&design)?;
    let partial = spec.fit_partial(&design)?;
    Ok(Report {
        schema: report::SCHEMA,
        config: config_echo(cli),
        fits: vec![FitReport::from_fit(&full, None), FitReport::from_fit(&partial, None)],
        comparison: Some(comparison),
        limitation_demo: None,
        sweep: None,
        diagnostics: Diagnostics {
            kappa: kappa_diagnostic(&design, &spec)?,
            dropped_rows: data.dropped_rows(),
        },
    })
}

fn limitation_mode(cli: &Cli) -> Result<Report> {
    let (demo, dropped) = match &cli.data {
        Some(path) => {
            let data = ingest_csv::<f64>(
                path,
                &IngestOptions { drop_missing: cli.drop_missing, cluster: None },
            )?;
            // swapped roles: --endogenous is the conditioning block W1,
            // --exogenous is the block of interest W2, --instruments is Z1;
            // no intercept is added in this mode
            let y = Mat::col_vec(data.column(cli.outcome.as_ref().expect("validated"))?);
            let w1 = data.columns(&cli.endogenous)?;
            let w2 = data.columns(&cli.exogenous)?;
            let z1 = data.columns(&cli.instruments)?;
            (engine::limitation_demo(&y, &w1, &w2, &z1)?, data.dropped_rows())
        }
        None => {
            let seed = cli.seed.expect("validated");
            let (y, w1, w2, z1) = dgp::limitation_design::<f64>(seed, 100);
            (engine::limitation_demo(&y, &w1, &w2, &z1)?, 0)
        }
    };
    Ok(Report {
        schema: report::SCHEMA,
        config: config_echo(cli),
        fits: Vec::new(),
        comparison: None,
        limitation_demo: Some(demo),
        sweep: None,
        diagnostics: Diagnostics { kappa: None, dropped_rows: dropped },
    })
}

const SWEEP_SIZES: [usize; 4] = [50, 200, 1000, 5000];

fn sweep_mode(cli: &Cli) -> Result<Report> {
    let spec = cli.estimator_spec();
    let rows = engine::convergence_sweep(cli.seed.unwrap_or(0), &SWEEP_SIZES, &spec)?;
    Ok(Report {
        schema: report::SCHEMA,
        config: config_echo(cli),
        fits: Vec::new(),
        comparison: None,
        limitation_demo: None,
        sweep: Some(SweepReport { estimator: spec.label(), rows }),
        diagnostics: Diagnostics::default(),
    })
}
