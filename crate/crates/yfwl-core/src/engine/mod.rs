//! Orchestration: run an estimator in full and partial form, check the
//! equality ledger, demonstrate where the equalities break, and sweep a
//! fixed process across sample sizes.

pub mod dgp;

use crate::covariance::{partial_inference_hc2_family, sandwich_full, sandwich_partial, CovKind, CovSpec};
use crate::error::{Error, Result};
use crate::estimators::{self, FitResult, WeightingMatrix};
use crate::linalg::{rel_max_delta, rel_max_delta_slice, solve_ls, solve_square, Mat};
use crate::model::{classify_partition, PartitionCase, ValidatedDesign};
use crate::scalar::Scalar;
use serde::Serialize;
use std::collections::BTreeSet;

/// Estimator selection for the engine and the CLI.
#[derive(Clone, Debug, PartialEq)]
pub enum EstimatorSpec<T> {
    Ols,
    Tsls,
    KClass { k: T },
    Liml,
    Fuller { alpha: T },
    /// Linear GMM with the identity weighting matrix.
    Igmm,
    TwoStepGmm,
}

impl<T: Scalar> EstimatorSpec<T> {
    pub fn label(&self) -> String {
        match self {
            EstimatorSpec::Ols => "ols".into(),
            EstimatorSpec::Tsls => "2sls".into(),
            EstimatorSpec::KClass { k } => format!("kclass(K={})", k.as_f64()),
            EstimatorSpec::Liml => "liml".into(),
            EstimatorSpec::Fuller { alpha } => format!("fuller({})", alpha.as_f64()),
            EstimatorSpec::Igmm => "igmm".into(),
            EstimatorSpec::TwoStepGmm => "2sgmm".into(),
        }
    }

    /// True when full-vs-partial equality is an exact theorem for this
    /// estimator; the others are demonstrations and are reported with
    /// `expected_failure` set.
    pub fn has_exact_theorem(&self) -> bool {
        matches!(self, EstimatorSpec::Ols | EstimatorSpec::Tsls | EstimatorSpec::TwoStepGmm)
    }

    /// Fit the full model.
    pub fn fit_full(&self, design: &ValidatedDesign<T>) -> Result<FitResult<T>> {
        match self {
            EstimatorSpec::Ols => estimators::ols_full(design),
            EstimatorSpec::Tsls => estimators::tsls_full(design),
            EstimatorSpec::KClass { k } => estimators::kclass(design, *k),
            EstimatorSpec::Liml => estimators::liml(design),
            EstimatorSpec::Fuller { alpha } => estimators::fuller(design, *alpha),
            EstimatorSpec::Igmm => {
                let wn = WeightingMatrix::identity(design.instrument_count());
                estimators::gmm(design, &wn)
            }
            EstimatorSpec::TwoStepGmm => estimators::two_step_gmm(design),
        }
    }

    /// Fit the partial (residualized) model.
    pub fn fit_partial(&self, design: &ValidatedDesign<T>) -> Result<FitResult<T>> {
        match self {
            EstimatorSpec::Ols => estimators::ols_partial(design),
            EstimatorSpec::Tsls => estimators::tsls_partial(design),
            EstimatorSpec::KClass { k } => estimators::kclass_partial(design, *k),
            EstimatorSpec::Liml => estimators::liml_partial(design),
            EstimatorSpec::Fuller { alpha } => estimators::fuller_partial(design, *alpha),
            EstimatorSpec::Igmm => {
                let wn = WeightingMatrix::identity(design.k3_effective());
                estimators::gmm_partial(design, &wn)
            }
            EstimatorSpec::TwoStepGmm => estimators::two_step_gmm_partial(design),
        }
    }
}

/// Which leverages fed a HC2-family covariance check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeverageSource {
    PartialDesign,
    FullViaPartition,
}

/// One covariance-equality verdict in a [`ComparisonReport`].
#[derive(Clone, Debug, Serialize)]
pub struct VcovCheck<T> {
    pub kind: CovKind,
    /// Multiplier applied to the full-model block before comparison, so
    /// `Var_partial = df_factor * Var_full` is the tested identity.
    pub df_factor: T,
    pub max_rel_delta: T,
    pub pass: bool,
    pub expected_failure: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leverage_source: Option<LeverageSource>,
}

/// Per-quantity full-vs-partial comparison.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport<T> {
    pub estimator: String,
    pub coef_full_b2: Vec<(String, T)>,
    pub coef_partial: Vec<(String, T)>,
    pub max_abs_coef_delta: T,
    pub max_abs_resid_delta: T,
    pub max_rel_coef_delta: T,
    pub max_rel_resid_delta: T,
    pub coef_pass: bool,
    pub resid_pass: bool,
    pub vcov_checks: Vec<VcovCheck<T>>,
    pub partition_case: PartitionCase,
    pub tolerance: T,
    /// Set for estimators without an exact equality theorem; a failing
    /// verdict on such an estimator is a demonstration, not an error.
    pub expected_failure: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_full: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_partial: Option<T>,
}

impl<T: Scalar> ComparisonReport<T> {
    pub fn all_pass(&self) -> bool {
        self.coef_pass && self.resid_pass && self.vcov_checks.iter().all(|c| c.pass)
    }
}

fn max_abs_delta<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()))
}

/// Run `estimator` on the full and partial models and compare coefficients,
/// residuals, and the requested covariance estimates.
pub fn compare<T: Scalar>(
    design: &ValidatedDesign<T>,
    estimator: &EstimatorSpec<T>,
    cov_specs: &[CovSpec<T>],
    tolerance: T,
) -> Result<ComparisonReport<T>> {
    let full = estimator
        .fit_full(design)
        .map_err(|e| Error::InvalidConfig(format!("full model: {e}")))?;
    let partial = estimator
        .fit_partial(design)
        .map_err(|e| Error::InvalidConfig(format!("partial model: {e}")))?;

    let b2_full = full.interest_coefficients();
    let b2_partial = &partial.coefficients;
    let rel_coef = rel_max_delta_slice(b2_full, b2_partial);

    // K-class residuals are orthogonal to W1 (first block of the normal
    // equations), so the partial residual vector reproduces the full one
    // elementwise. GMM moment conditions do not impose W1'u = 0; there the
    // comparable identity is u~ = M_{W1} u, so the full residuals are
    // projected off W1 before comparison.
    let full_resid = match estimator {
        EstimatorSpec::Igmm | EstimatorSpec::TwoStepGmm => {
            crate::linalg::residualize(
                design.w1(),
                &Mat::col_vec(full.residuals.clone()),
                "W1 (conditioning block)",
            )?
            .into_vector()
        }
        _ => full.residuals.clone(),
    };
    let rel_resid = rel_max_delta_slice(&full_resid, &partial.residuals);

    let mut vcov_checks = Vec::new();
    let supports_sandwich = matches!(estimator, EstimatorSpec::Ols | EstimatorSpec::Tsls);
    if supports_sandwich {
        let n = design.n();
        let (k1, k2) = (design.k1(), design.k2());
        let k = k1 + k2;
        for spec in cov_specs {
            let vf = sandwich_full(design, &full, spec)?;
            if spec.kind.needs_leverages() {
                // naive partial-design leverages: not equal in general
                let vp = sandwich_partial(design, &partial, spec)?;
                vcov_checks.push(vcov_check(
                    spec.kind,
                    T::one(),
                    &vp.interest_block,
                    &vf.interest_block,
                    tolerance,
                    true,
                    Some(LeverageSource::PartialDesign),
                ));
                // partitioned-inverse full-design leverages: equality restored
                let vp = partial_inference_hc2_family(design, spec)?;
                vcov_checks.push(vcov_check(
                    spec.kind,
                    T::one(),
                    &vp.interest_block,
                    &vf.interest_block,
                    tolerance,
                    false,
                    Some(LeverageSource::FullViaPartition),
                ));
            } else {
                let df_factor = match spec.kind {
                    CovKind::Homoskedastic | CovKind::Hc1 | CovKind::ClusterCv1 => {
                        T::of((n - k). max(1) as f64) / T::of((n - k2).max(1) as f64)
                    }
                    _ => T::one(),
                };
                let vp = sandwich_partial(design, &partial, spec)?;
                vcov_checks.push(vcov_check(
                    spec.kind,
                    df_factor,
                    &vp.interest_block,
                    &vf.interest_block,
                    tolerance,
                    false,
                    None,
                ));
            }
        }
    }

    let endogenous: BTreeSet<String> = if design.is_ols() {
        BTreeSet::new()
    } else {
        design.w2_names().iter().cloned().collect()
    };
    let of_interest: BTreeSet<String> = design.w2_names().iter().cloned().collect();
    let all: BTreeSet<String> = design.w_names().into_iter().collect();
    let partition_case = classify_partition(&endogenous, &of_interest, &all)?;

    let (kappa_full, kappa_partial) = match estimator {
        EstimatorSpec::Liml | EstimatorSpec::Fuller { .. } => (
            Some(estimators::liml_kappa(design)?),
            Some(estimators::liml_kappa_partial(design)?),
        ),
        _ => (None, None),
    };

    let names = full.interest_names().to_vec();
    Ok(ComparisonReport {
        estimator: estimator.label(),
        coef_full_b2: names.iter().cloned().zip(b2_full.iter().copied()).collect(),
        coef_partial: names.into_iter().zip(b2_partial.iter().copied()).collect(),
        max_abs_coef_delta: max_abs_delta(b2_full, b2_partial),
        max_abs_resid_delta: max_abs_delta(&full_resid, &partial.residuals),
        max_rel_coef_delta: rel_coef,
        max_rel_resid_delta: rel_resid,
        coef_pass: rel_coef <= tolerance,
        resid_pass: rel_resid <= tolerance,
        vcov_checks,
        partition_case,
        tolerance,
        expected_failure: !estimator.has_exact_theorem(),
        kappa_full,
        kappa_partial,
    })
}

#[allow(clippy::too_many_arguments)]
fn vcov_check<T: Scalar>(
    kind: CovKind,
    df_factor: T,
    partial_block: &Mat<T>,
    full_block: &Mat<T>,
    tolerance: T,
    expected_failure: bool,
    leverage_source: Option<LeverageSource>,
) -> VcovCheck<T> {
    let scaled_full = full_block.scale(df_factor);
    let delta = rel_max_delta(partial_block, &scaled_full);
    VcovCheck {
        kind,
        df_factor,
        max_rel_delta: delta,
        pass: delta <= tolerance,
        expected_failure,
        leverage_source,
    }
}

/// The three closed-form estimates of the swapped-roles model, where the
/// conditioning block is endogenous (instrumented by Z1) and the block of
/// interest is exogenous.
#[derive(Clone, Debug, Serialize)]
pub struct LimitationDemo<T> {
    pub b2_full_eq17: Vec<T>,
    pub b2_partial_ols_eq19: Vec<T>,
    pub b2_partial_iv_eq20: Vec<T>,
    pub max_abs_delta_ols: T,
    pub max_abs_delta_iv: T,
}

/// Evaluate the swapped-roles estimates.
///
/// The closed forms invert Z1'W1 and Z1'W2~, so the demo requires equally
/// sized blocks: k3 = k1 (exactly identified conditioning block) and
/// k3 = k2.
pub fn limitation_demo<T: Scalar>(
    y: &Mat<T>,
    w1: &Mat<T>,
    w2: &Mat<T>,
    z1: &Mat<T>,
) -> Result<LimitationDemo<T>> {
    let n = y.rows();
    for (m, what) in [(w1, "W1"), (w2, "W2"), (z1, "Z1")] {
        if m.rows() != n {
            return Err(Error::ShapeMismatch(format!("{what} row count differs from Y")));
        }
    }
    let (k1, k2, k3) = (w1.cols(), w2.cols(), z1.cols());
    if k3 < k1 {
        return Err(Error::OrderConditionViolated { instruments: k3, endogenous: k1 });
    }
    if k3 != k1 || k3 != k2 {
        return Err(Error::InvalidConfig(format!(
            "the limitation demo needs square cross-moment matrices (k1 = k2 = k3), got k1 = {k1}, k2 = {k2}, k3 = {k3}"
        )));
    }

    // inner operator V -> (I - W1 (Z1'W1)^-1 Z1') V, applied without N-by-N
    let z1w1 = z1.t().dot(w1);
    let apply_inner = |v: &Mat<T>| -> Result<Mat<T>> {
        let coef = solve_square(&z1w1, &z1.t().dot(v), "Z1'W1")?;
        Ok(v.sub(&w1.dot(&coef)))
    };

    let inner_w2 = apply_inner(w2)?;
    let inner_y = apply_inner(y)?;
    let b17 = solve_square(&w2.t().dot(&inner_w2), &w2.t().dot(&inner_y), "W2'(I - W1(Z1'W1)^-1 Z1')W2")?;

    let y_t = crate::linalg::residualize(w1, y, "W1 (endogenous conditioning block)")?;
    let w2_t = crate::linalg::residualize(w1, w2, "W1 (endogenous conditioning block)")?;
    let b19 = solve_ls(&w2_t, &y_t, "W2~")?;
    let b20 = solve_square(&z1.t().dot(&w2_t), &z1.t().dot(&y_t), "Z1'W2~")?;

    let b17 = b17.into_vector();
    let b19 = b19.into_vector();
    let b20 = b20.into_vector();
    Ok(LimitationDemo {
        max_abs_delta_ols: max_abs_delta(&b17, &b19),
        max_abs_delta_iv: max_abs_delta(&b17, &b20),
        b2_full_eq17: b17,
        b2_partial_ols_eq19: b19,
        b2_partial_iv_eq20: b20,
    })
}

/// One row of a convergence sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow<T> {
    pub n: usize,
    pub max_abs_coef_delta: T,
    pub kappa: T,
}

/// Fit full and partial forms of a K-class estimator on the built-in
/// process at each sample size and record the coefficient gap and the LIML
/// kappa. Sizes must be strictly increasing.
pub fn convergence_sweep<T: Scalar>(
    seed: u64,
    sizes: &[usize],
    estimator: &EstimatorSpec<T>,
) -> Result<Vec<SweepRow<T>>> {
    if sizes.windows(2).any(|w| w[0] >= w[1]) || sizes.is_empty() {
        return Err(Error::InvalidConfig("sample sizes must be strictly increasing".into()));
    }
    if !matches!(
        estimator,
        EstimatorSpec::KClass { .. } | EstimatorSpec::Liml | EstimatorSpec::Fuller { .. }
            | EstimatorSpec::Ols | EstimatorSpec::Tsls
    ) {
        return Err(Error::InvalidConfig(format!(
            "the convergence sweep covers K-class estimators, not {}",
            estimator.label()
        )));
    }

    let dgp = dgp::SyntheticDgp::new(seed);
    let designs = dgp.nested_designs::<T>(sizes)?;
    designs
        .iter()
        .zip(sizes)
        .map(|(design, &n)| {
            let full = estimator.fit_full(design)?;
            let partial = estimator.fit_partial(design)?;
            Ok(SweepRow {
                n,
                max_abs_coef_delta: max_abs_delta(
                    full.interest_coefficients(),
                    &partial.coefficients,
                ),
                kappa: estimators::liml_kappa(design)?,
            })
        })
        .collect()
}
