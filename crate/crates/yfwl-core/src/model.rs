//! Model specification and validation: the W = [W1 : W2] partition with
//! excluded instruments Z2, identification checks, and the classifier that
//! says when partialling-out is available for a given split of the
//! regressors.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{rank_of, residualize, Mat};
use crate::scalar::Scalar;
use serde::Serialize;
use std::collections::BTreeSet;

/// Which columns play which role. `conditioning` is the exogenous block W1
/// (the intercept is appended to it when `intercept` is set), `of_interest`
/// is W2, `instruments` is the excluded block Z2. An empty instrument list
/// means W2 is treated as exogenous and the model is OLS.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub outcome: String,
    pub conditioning: Vec<String>,
    pub of_interest: Vec<String>,
    pub instruments: Vec<String>,
    pub intercept: bool,
    pub cluster: Option<String>,
}

pub const INTERCEPT_NAME: &str = "const";

/// Materialized design blocks, validated for identification.
///
/// Immutable after construction; all estimators read from it.
#[derive(Clone, Debug)]
pub struct ValidatedDesign<T> {
    y: Mat<T>,
    w1: Mat<T>,
    w2: Mat<T>,
    z2: Mat<T>,
    w1_names: Vec<String>,
    w2_names: Vec<String>,
    z2_names: Vec<String>,
    cluster_labels: Option<Vec<String>>,
}

impl<T: Scalar> ValidatedDesign<T> {
    /// Validate raw blocks directly (generators and tests use this; CSV-born
    /// designs go through [`validate`]).
    pub fn from_parts(
        y: Mat<T>,
        w1: Mat<T>,
        w2: Mat<T>,
        z2: Mat<T>,
        w1_names: Vec<String>,
        w2_names: Vec<String>,
        z2_names: Vec<String>,
    ) -> Result<Self> {
        let n = y.rows();
        if y.cols() != 1 {
            return Err(Error::ShapeMismatch("outcome must be a single column".into()));
        }
        for (m, what) in [(&w1, "W1"), (&w2, "W2"), (&z2, "Z2")] {
            if m.rows() != n {
                return Err(Error::ShapeMismatch(format!("{what} row count differs from Y")));
            }
            if !m.all_finite() {
                return Err(Error::InvalidConfig(format!("{what} contains non-finite values")));
            }
        }
        if w1_names.len() != w1.cols() || w2_names.len() != w2.cols() || z2_names.len() != z2.cols()
        {
            return Err(Error::ShapeMismatch("name lists must match block widths".into()));
        }
        let (k1, k2, k3) = (w1.cols(), w2.cols(), z2.cols());
        if k2 == 0 {
            return Err(Error::EmptyInterestSet);
        }
        if k3 > 0 && k3 < k2 {
            return Err(Error::OrderConditionViolated { instruments: k3, endogenous: k2 });
        }

        let design = ValidatedDesign {
            y,
            w1,
            w2,
            z2,
            w1_names,
            w2_names,
            z2_names,
            cluster_labels: None,
        };
        design.check_identification(n, k1, k2)?;
        Ok(design)
    }

    fn check_identification(&self, n: usize, k1: usize, k2: usize) -> Result<()> {
        if k1 > 0 && rank_of(&self.w1) < k1 {
            return Err(Error::RankDeficient("W1 (conditioning block)".into()));
        }
        if rank_of(&self.w2) < k2 {
            return Err(Error::RankDeficient("W2 (block of interest)".into()));
        }
        let w = self.w();
        if n < w.cols() || rank_of(&w) < w.cols() {
            return Err(Error::RankDeficient("W = [W1:W2]".into()));
        }
        let z = self.z();
        if n < z.cols() || rank_of(&z) < z.cols() {
            return Err(Error::RankDeficient("Z = [W1:Z2]".into()));
        }
        // relevance: Z'W2 must have rank k2
        if rank_of(&z.t().dot(&self.w2)) < k2 {
            return Err(Error::RankDeficient("Z'W2 (instrument relevance)".into()));
        }
        Ok(())
    }

    pub fn with_cluster_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::ShapeMismatch("cluster labels must match the row count".into()));
        }
        self.cluster_labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.y.rows()
    }
    pub fn k1(&self) -> usize {
        self.w1.cols()
    }
    pub fn k2(&self) -> usize {
        self.w2.cols()
    }
    /// Number of excluded instruments; zero means OLS.
    pub fn k3(&self) -> usize {
        self.z2.cols()
    }
    /// With no excluded instruments the block of interest instruments itself.
    pub fn is_ols(&self) -> bool {
        self.z2.cols() == 0
    }
    /// Width of the effective excluded-instrument block.
    pub fn k3_effective(&self) -> usize {
        if self.is_ols() {
            self.k2()
        } else {
            self.k3()
        }
    }
    /// Total instrument count k1 + k3 of the full model.
    pub fn instrument_count(&self) -> usize {
        self.k1() + self.k3_effective()
    }

    pub fn y(&self) -> &Mat<T> {
        &self.y
    }
    pub fn w1(&self) -> &Mat<T> {
        &self.w1
    }
    pub fn w2(&self) -> &Mat<T> {
        &self.w2
    }
    /// Effective excluded instruments: Z2, or W2 itself in the OLS case.
    pub fn z2(&self) -> &Mat<T> {
        if self.is_ols() {
            &self.w2
        } else {
            &self.z2
        }
    }
    /// Full regressor matrix W = [W1 : W2].
    pub fn w(&self) -> Mat<T> {
        Mat::hstack(&[&self.w1, &self.w2])
    }
    /// Full instrument matrix Z = [W1 : Z2] (Z2 := W2 when OLS).
    pub fn z(&self) -> Mat<T> {
        Mat::hstack(&[&self.w1, self.z2()])
    }

    pub fn w1_names(&self) -> &[String] {
        &self.w1_names
    }
    pub fn w2_names(&self) -> &[String] {
        &self.w2_names
    }
    pub fn z2_names(&self) -> &[String] {
        &self.z2_names
    }
    pub fn w_names(&self) -> Vec<String> {
        self.w1_names.iter().chain(&self.w2_names).cloned().collect()
    }
    pub fn cluster_labels(&self) -> Option<&[String]> {
        self.cluster_labels.as_deref()
    }

    /// The residualized system (Y~, W2~, Z2~): everything partialled out
    /// with respect to W1.
    pub fn partial_system(&self) -> Result<PartialSystem<T>> {
        let what = "W1 (conditioning block)";
        Ok(PartialSystem {
            y: residualize(&self.w1, &self.y, what)?,
            w2: residualize(&self.w1, &self.w2, what)?,
            z2: residualize(&self.w1, self.z2(), what)?,
        })
    }
}

/// Residualized blocks of the partial regression model.
#[derive(Clone, Debug)]
pub struct PartialSystem<T> {
    pub y: Mat<T>,
    pub w2: Mat<T>,
    pub z2: Mat<T>,
}

/// Build and validate the design blocks named by `spec` against `data`.
///
/// Deterministic: the same spec and data produce bit-identical blocks.
pub fn validate<T: Scalar>(spec: &ModelSpec, data: &Dataset<T>) -> Result<ValidatedDesign<T>> {
    // pairwise-disjoint roles
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let roles = std::iter::once(&spec.outcome)
        .chain(&spec.conditioning)
        .chain(&spec.of_interest)
        .chain(&spec.instruments);
    for name in roles {
        if !seen.insert(name.as_str()) {
            return Err(Error::OverlappingRoles(name.clone()));
        }
    }
    if spec.of_interest.is_empty() {
        return Err(Error::EmptyInterestSet);
    }
    if spec.intercept && seen.contains(INTERCEPT_NAME) {
        return Err(Error::InvalidConfig(format!(
            "a column named `{INTERCEPT_NAME}` conflicts with the implicit intercept; disable the intercept or rename the column"
        )));
    }

    let y = Mat::col_vec(data.column(&spec.outcome)?);
    let mut w1 = data.columns(&spec.conditioning)?;
    let mut w1_names = spec.conditioning.clone();
    if spec.intercept {
        let ones = Mat::ones(data.n_rows());
        w1 = Mat::hstack(&[&ones, &w1]);
        w1_names.insert(0, INTERCEPT_NAME.to_string());
    }
    let w2 = data.columns(&spec.of_interest)?;
    let z2 = data.columns(&spec.instruments)?;

    let design = ValidatedDesign::from_parts(
        y,
        w1,
        w2,
        z2,
        w1_names,
        spec.of_interest.clone(),
        spec.instruments.clone(),
    )?;

    match &spec.cluster {
        None => Ok(design),
        Some(name) => {
            let labels = match data.cluster() {
                Some(c) if &c.name == name => c.labels.clone(),
                // a numeric column may also serve as the cluster id
                _ => data.column(name)?.iter().map(|v| format!("{v}")).collect(),
            };
            design.with_cluster_labels(labels)
        }
    }
}

/// Outcome of the partition-applicability classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PartitionTag {
    /// Interest set equals the endogenous set: partial out all exogenous
    /// variables and estimate with residualized instruments.
    ApplicableEqual,
    /// Interest set strictly contains the endogenous set: exogenous
    /// variables of interest act as their own instruments.
    ApplicableSuperset,
    /// Some endogenous variables are not of interest: enlarge the interest
    /// set to cover all of them, estimate, then extract the requested
    /// coefficients.
    ApplicableSubsetExtract,
    /// The interest set contains every exogenous variable, so the
    /// conditioning set is entirely endogenous and no valid projection
    /// argument exists.
    NotApplicable,
}

#[derive(Clone, Debug, Serialize)]
pub struct PartitionCase {
    pub tag: PartitionTag,
    pub explanation: String,
}

/// Classify a partition of the regressors into interest/conditioning sets
/// given which regressors are endogenous.
pub fn classify_partition(
    endogenous: &BTreeSet<String>,
    of_interest: &BTreeSet<String>,
    all_regressors: &BTreeSet<String>,
) -> Result<PartitionCase> {
    if of_interest.is_empty() {
        return Err(Error::EmptyInterestSet);
    }
    for name in endogenous.iter().chain(of_interest) {
        if !all_regressors.contains(name) {
            return Err(Error::UnknownColumn(name.clone()));
        }
    }

    let exogenous: BTreeSet<&String> = all_regressors.difference(endogenous).collect();
    let covers_exogenous = exogenous.iter().all(|x| of_interest.contains(*x));
    if covers_exogenous {
        return Ok(PartitionCase {
            tag: PartitionTag::NotApplicable,
            explanation: "the set of interest contains every exogenous variable, leaving an \
                          endogenous conditioning set; coefficients from the partial regression \
                          do not reproduce the full-model estimates"
                .into(),
        });
    }

    let missing_endogenous: Vec<&String> =
        endogenous.iter().filter(|e| !of_interest.contains(*e)).collect();
    if !missing_endogenous.is_empty() {
        return Ok(PartitionCase {
            tag: PartitionTag::ApplicableSubsetExtract,
            explanation: format!(
                "endogenous variables {:?} are not of interest; estimate with the interest set \
                 enlarged to include them, then extract the requested coefficients",
                missing_endogenous
            ),
        });
    }
    if of_interest == endogenous {
        return Ok(PartitionCase {
            tag: PartitionTag::ApplicableEqual,
            explanation: "the set of interest equals the endogenous set; partial out all \
                          exogenous variables and use residualized instruments"
                .into(),
        });
    }
    Ok(PartitionCase {
        tag: PartitionTag::ApplicableSuperset,
        explanation: "the set of interest strictly contains the endogenous set; exogenous \
                      variables of interest serve as their own instruments"
            .into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn toy_data() -> Dataset<f64> {
        let n = 12;
        let cols: Vec<Vec<f64>> = (0..4)
            .map(|j| (0..n).map(|i| ((i * (j + 2) + j) as f64).sin() + (j as f64)).collect())
            .collect();
        Dataset::from_columns(
            vec!["y".into(), "x".into(), "w".into(), "z".into()],
            cols,
        )
        .unwrap()
    }

    #[test]
    fn overlapping_roles_are_rejected() {
        let spec = ModelSpec {
            outcome: "y".into(),
            conditioning: vec!["w".into()],
            of_interest: vec!["w".into()],
            instruments: vec![],
            intercept: true,
            cluster: None,
        };
        assert!(matches!(validate(&spec, &toy_data()), Err(Error::OverlappingRoles(_))));
    }

    #[test]
    fn order_condition_is_enforced() {
        let spec = ModelSpec {
            outcome: "y".into(),
            conditioning: vec![],
            of_interest: vec!["x".into(), "w".into()],
            instruments: vec!["z".into()],
            intercept: true,
            cluster: None,
        };
        assert!(matches!(
            validate(&spec, &toy_data()),
            Err(Error::OrderConditionViolated { instruments: 1, endogenous: 2 })
        ));
    }

    #[test]
    fn unknown_column_is_reported() {
        let spec = ModelSpec {
            outcome: "nope".into(),
            conditioning: vec![],
            of_interest: vec!["x".into()],
            instruments: vec![],
            intercept: true,
            cluster: None,
        };
        assert!(matches!(validate(&spec, &toy_data()), Err(Error::UnknownColumn(_))));
    }

    #[test]
    fn intercept_becomes_leading_w1_column() {
        let spec = ModelSpec {
            outcome: "y".into(),
            conditioning: vec!["w".into()],
            of_interest: vec!["x".into()],
            instruments: vec!["z".into()],
            intercept: true,
            cluster: None,
        };
        let d = validate(&spec, &toy_data()).unwrap();
        assert_eq!(d.w1_names()[0], INTERCEPT_NAME);
        assert_eq!(d.k1(), 2);
        assert_eq!((d.k2(), d.k3()), (1, 1));
        assert!(!d.is_ols());
    }

    #[test]
    fn classifier_matches_the_named_cases() {
        let all = set(&["x1", "x2", "x3", "x4"]);
        // S_I = S_N
        let c = classify_partition(&set(&["x1"]), &set(&["x1"]), &all).unwrap();
        assert_eq!(c.tag, PartitionTag::ApplicableEqual);
        // pure OLS: no endogenous variables, proper subset of interest
        let c = classify_partition(&set(&[]), &set(&["x2"]), &all).unwrap();
        assert_eq!(c.tag, PartitionTag::ApplicableSuperset);
        // interest = all exogenous
        let c = classify_partition(&set(&["x1"]), &set(&["x2", "x3", "x4"]), &all).unwrap();
        assert_eq!(c.tag, PartitionTag::NotApplicable);
        // interest strictly inside the endogenous set
        let c = classify_partition(&set(&["x1", "x2"]), &set(&["x1"]), &all).unwrap();
        assert_eq!(c.tag, PartitionTag::ApplicableSubsetExtract);
    }

    #[test]
    fn classifier_not_applicable_iff_interest_covers_exogenous() {
        // exhaustive over all (endogenous, interest) subset pairs of a
        // 4-variable universe
        let vars = ["a", "b", "c", "d"];
        let all = set(&vars);
        for emask in 0u32..16 {
            for imask in 1u32..16 {
                let endo: BTreeSet<String> = vars
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| emask & (1 << i) != 0)
                    .map(|(_, v)| v.to_string())
                    .collect();
                let interest: BTreeSet<String> = vars
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| imask & (1 << i) != 0)
                    .map(|(_, v)| v.to_string())
                    .collect();
                let case = classify_partition(&endo, &interest, &all).unwrap();
                let exo: BTreeSet<_> = all.difference(&endo).collect();
                let covers = exo.iter().all(|x| interest.contains(*x));
                assert_eq!(
                    case.tag == PartitionTag::NotApplicable,
                    covers,
                    "endo={endo:?} interest={interest:?}"
                );
            }
        }
    }

    #[test]
    fn empty_interest_set_is_an_error() {
        let all = set(&["a"]);
        assert!(matches!(
            classify_partition(&set(&[]), &set(&[]), &all),
            Err(Error::EmptyInterestSet)
        ));
    }
}
