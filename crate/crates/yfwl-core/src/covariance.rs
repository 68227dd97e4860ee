//! Error-covariance estimators and the sandwich covariance of coefficient
//! vectors for full and partial models.
//!
//! The error covariance is exposed as a quadratic-form evaluator rather than
//! an N-by-N matrix; a dense form exists behind a size cap for oracle tests.
//! Leverage-dependent kinds (HC2..HC5) take the hat diagonal of the model's
//! regressor matrix: the full design [W1:W2] for full-model inference, the
//! residualized W2~ for naive partial-model inference. The
//! partitioned-inverse path recomputes full-design leverages from partial
//! quantities so that partial-model inference reproduces the full-model
//! covariance exactly.

use crate::error::{Error, Result};
use crate::estimators::{EstimatorKind, FitResult, ModelForm};
use crate::linalg::{gram_inverse, hat_diagonals, project, Mat, PartitionedInverse};
use crate::model::ValidatedDesign;
use crate::scalar::Scalar;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovKind {
    Homoskedastic,
    Hc0,
    Hc1,
    Hc2,
    Hc3,
    Hc4,
    Hc5,
    Hac,
    ClusterCv1,
}

impl CovKind {
    pub fn label(&self) -> &'static str {
        match self {
            CovKind::Homoskedastic => "homo",
            CovKind::Hc0 => "hc0",
            CovKind::Hc1 => "hc1",
            CovKind::Hc2 => "hc2",
            CovKind::Hc3 => "hc3",
            CovKind::Hc4 => "hc4",
            CovKind::Hc5 => "hc5",
            CovKind::Hac => "hac",
            CovKind::ClusterCv1 => "cluster-cv1",
        }
    }

    pub fn needs_leverages(&self) -> bool {
        matches!(self, CovKind::Hc2 | CovKind::Hc3 | CovKind::Hc4 | CovKind::Hc5)
    }
}

/// Kernel weights for the HAC estimator: omega_0 = 1, |omega_j| <= 1, and
/// omega_j = 0 beyond the lag window.
#[derive(Clone, Debug)]
pub enum HacKernel<T> {
    /// Bartlett: omega_j = 1 - j / (L + 1).
    Bartlett,
    /// Truncated flat kernel: omega_j = 1 for j <= L.
    Uniform,
    /// Explicit weight table omega_0..omega_L.
    Weights(Vec<T>),
}

impl<T: Scalar> HacKernel<T> {
    fn weights(&self, lags: usize) -> Result<Vec<T>> {
        let w = match self {
            HacKernel::Bartlett => (0..=lags)
                .map(|j| T::one() - T::of(j as f64) / T::of((lags + 1) as f64))
                .collect(),
            HacKernel::Uniform => vec![T::one(); lags + 1],
            HacKernel::Weights(w) => {
                if w.len() != lags + 1 {
                    return Err(Error::InvalidConfig(format!(
                        "kernel table has {} entries for {} lags",
                        w.len(),
                        lags
                    )));
                }
                w.clone()
            }
        };
        if (w[0] - T::one()).abs() > T::of(1e-12) {
            return Err(Error::InvalidConfig("HAC weight omega_0 must be 1".into()));
        }
        if w.iter().any(|&x| x.abs() > T::one() + T::of(1e-12)) {
            return Err(Error::InvalidConfig("HAC weights must satisfy |omega_j| <= 1".into()));
        }
        Ok(w)
    }
}

/// Choice and parameters of the error-covariance estimator.
#[derive(Clone, Debug)]
pub struct CovSpec<T> {
    pub kind: CovKind,
    pub hac_lags: usize,
    pub hac_kernel: HacKernel<T>,
    pub cluster_labels: Option<Vec<String>>,
}

impl<T: Scalar> CovSpec<T> {
    pub fn new(kind: CovKind) -> Self {
        CovSpec { kind, hac_lags: 0, hac_kernel: HacKernel::Bartlett, cluster_labels: None }
    }

    pub fn homoskedastic() -> Self {
        Self::new(CovKind::Homoskedastic)
    }

    pub fn hc(order: u8) -> Self {
        Self::new(match order {
            0 => CovKind::Hc0,
            1 => CovKind::Hc1,
            2 => CovKind::Hc2,
            3 => CovKind::Hc3,
            4 => CovKind::Hc4,
            5 => CovKind::Hc5,
            other => panic!("HC{other} is not a covariance kind"),
        })
    }

    pub fn hac(lags: usize) -> Self {
        CovSpec { kind: CovKind::Hac, hac_lags: lags, ..Self::new(CovKind::Hac) }
    }

    pub fn hac_with_kernel(lags: usize, kernel: HacKernel<T>) -> Self {
        CovSpec { kind: CovKind::Hac, hac_lags: lags, hac_kernel: kernel, ..Self::new(CovKind::Hac) }
    }

    pub fn cluster_cv1(labels: Vec<String>) -> Self {
        CovSpec { kind: CovKind::ClusterCv1, cluster_labels: Some(labels), ..Self::new(CovKind::ClusterCv1) }
    }
}

enum OmegaForm<T> {
    ScaledIdentity(T),
    Diagonal(Vec<T>),
    Banded { weights: Vec<T>, u: Vec<T> },
    ClusterBlocks { scale: T, groups: Vec<Vec<usize>>, u: Vec<T> },
}

/// Implicit error-covariance matrix, applied as quadratic forms.
pub struct OmegaHat<T> {
    n: usize,
    form: OmegaForm<T>,
}

impl<T: Scalar> OmegaHat<T> {
    /// G' Omega G for an N-by-k matrix G.
    pub fn meat(&self, g: &Mat<T>) -> Mat<T> {
        assert_eq!(g.rows(), self.n);
        let k = g.cols();
        match &self.form {
            OmegaForm::ScaledIdentity(s) => g.gram().scale(*s),
            OmegaForm::Diagonal(d) => {
                let mut out = Mat::zeros(k, k);
                for i in 0..self.n {
                    let r = g.row(i);
                    for a in 0..k {
                        let da = d[i] * r[a];
                        for b in a..k {
                            out[(a, b)] += da * r[b];
                        }
                    }
                }
                mirror_upper(&mut out);
                out
            }
            OmegaForm::Banded { weights, u } => {
                let mut out = Mat::zeros(k, k);
                for (l, &w) in weights.iter().enumerate() {
                    if w == T::zero() {
                        continue;
                    }
                    for t in l..self.n {
                        let s = w * u[t] * u[t - l];
                        let rt = g.row(t);
                        let rl = g.row(t - l);
                        for a in 0..k {
                            for b in 0..k {
                                let mut v = s * rt[a] * rl[b];
                                if l > 0 {
                                    v += s * rl[a] * rt[b];
                                }
                                out[(a, b)] += v;
                            }
                        }
                    }
                }
                out
            }
            OmegaForm::ClusterBlocks { scale, groups, u } => {
                let mut out = Mat::zeros(k, k);
                for group in groups {
                    let mut s = vec![T::zero(); k];
                    for &i in group {
                        let r = g.row(i);
                        for a in 0..k {
                            s[a] += u[i] * r[a];
                        }
                    }
                    for a in 0..k {
                        for b in a..k {
                            out[(a, b)] += s[a] * s[b];
                        }
                    }
                }
                mirror_upper(&mut out);
                out.scale(*scale)
            }
        }
    }

    /// Scalar quadratic form v' Omega w.
    pub fn quad(&self, v: &[T], w: &[T]) -> T {
        assert!(v.len() == self.n && w.len() == self.n);
        match &self.form {
            OmegaForm::ScaledIdentity(s) => {
                *s * v.iter().zip(w).map(|(&a, &b)| a * b).sum::<T>()
            }
            OmegaForm::Diagonal(d) => {
                v.iter().zip(w).zip(d).map(|((&a, &b), &di)| di * a * b).sum()
            }
            OmegaForm::Banded { weights, u } => {
                let mut acc = T::zero();
                for (l, &wt) in weights.iter().enumerate() {
                    for t in l..self.n {
                        let s = wt * u[t] * u[t - l];
                        acc += s * v[t] * w[t - l];
                        if l > 0 {
                            acc += s * v[t - l] * w[t];
                        }
                    }
                }
                acc
            }
            OmegaForm::ClusterBlocks { scale, groups, u } => {
                let mut acc = T::zero();
                for group in groups {
                    let sv: T = group.iter().map(|&i| v[i] * u[i]).sum();
                    let sw: T = group.iter().map(|&i| w[i] * u[i]).sum();
                    acc += sv * sw;
                }
                acc * *scale
            }
        }
    }

    /// Materialized N-by-N form, for oracle tests only.
    pub fn dense(&self, cap: usize) -> Result<Mat<T>> {
        if self.n > cap {
            return Err(Error::DenseCapExceeded { n: self.n, cap });
        }
        let mut out = Mat::zeros(self.n, self.n);
        match &self.form {
            OmegaForm::ScaledIdentity(s) => {
                for i in 0..self.n {
                    out[(i, i)] = *s;
                }
            }
            OmegaForm::Diagonal(d) => {
                for i in 0..self.n {
                    out[(i, i)] = d[i];
                }
            }
            OmegaForm::Banded { weights, u } => {
                for i in 0..self.n {
                    for j in 0..self.n {
                        let l = i.abs_diff(j);
                        if l < weights.len() {
                            out[(i, j)] = weights[l] * u[i] * u[j];
                        }
                    }
                }
            }
            OmegaForm::ClusterBlocks { scale, groups, u } => {
                for group in groups {
                    for &i in group {
                        for &j in group {
                            out[(i, j)] = *scale * u[i] * u[j];
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

fn mirror_upper<T: Scalar>(m: &mut Mat<T>) {
    for a in 0..m.rows() {
        for b in 0..a {
            m[(a, b)] = m[(b, a)];
        }
    }
}

/// Build the implicit error-covariance estimate for a residual vector.
///
/// `dims` is (N, k_used) where k_used is the regressor count of the model
/// the residuals came from; `leverages` is required exactly for the
/// HC2..HC5 kinds.
pub fn omega_hat<T: Scalar>(
    residuals: &[T],
    spec: &CovSpec<T>,
    dims: (usize, usize),
    leverages: Option<&[T]>,
) -> Result<OmegaHat<T>> {
    let (n, k_used) = dims;
    if residuals.len() != n {
        return Err(Error::ShapeMismatch("residual length differs from N".into()));
    }
    if spec.kind.needs_leverages() {
        let h = leverages.ok_or_else(|| Error::MissingLeverages(spec.kind.label().into()))?;
        if h.len() != n {
            return Err(Error::ShapeMismatch("leverage length differs from N".into()));
        }
        for (i, &hi) in h.iter().enumerate() {
            if hi >= T::one() - T::of(1e-12) {
                return Err(Error::LeverageAtOne { index: i, value: hi.as_f64() });
            }
        }
    }
    if matches!(spec.kind, CovKind::Homoskedastic | CovKind::Hc1 | CovKind::ClusterCv1)
        && n <= k_used
    {
        return Err(Error::InvalidConfig(format!(
            "degrees-of-freedom correction needs N > k, got N = {n}, k = {k_used}"
        )));
    }

    let u2 = |i: usize| residuals[i] * residuals[i];
    let form = match spec.kind {
        CovKind::Homoskedastic => {
            let sse: T = residuals.iter().map(|&u| u * u).sum();
            OmegaForm::ScaledIdentity(sse / T::of((n - k_used) as f64))
        }
        CovKind::Hc0 => OmegaForm::Diagonal((0..n).map(u2).collect()),
        CovKind::Hc1 => {
            let c = T::of(n as f64) / T::of((n - k_used) as f64);
            OmegaForm::Diagonal((0..n).map(|i| c * u2(i)).collect())
        }
        CovKind::Hc2 => {
            let h = leverages.unwrap();
            OmegaForm::Diagonal((0..n).map(|i| u2(i) / (T::one() - h[i])).collect())
        }
        CovKind::Hc3 => {
            let h = leverages.unwrap();
            OmegaForm::Diagonal(
                (0..n).map(|i| u2(i) / ((T::one() - h[i]) * (T::one() - h[i]))).collect(),
            )
        }
        CovKind::Hc4 => {
            let h = leverages.unwrap();
            let nk = T::of(n as f64) / T::of(k_used as f64);
            OmegaForm::Diagonal(
                (0..n)
                    .map(|i| {
                        let delta = T::of(4.0).min(nk * h[i]);
                        u2(i) / (T::one() - h[i]).powf(delta)
                    })
                    .collect(),
            )
        }
        CovKind::Hc5 => {
            let h = leverages.unwrap();
            let nk = T::of(n as f64) / T::of(k_used as f64);
            let hmax = h.iter().fold(T::zero(), |m, &x| m.max(x));
            let cap = T::of(4.0).max(T::of(0.7) * nk * hmax);
            OmegaForm::Diagonal(
                (0..n)
                    .map(|i| {
                        let gamma = (nk * h[i]).min(cap);
                        u2(i) / (T::one() - h[i]).powf(gamma).sqrt()
                    })
                    .collect(),
            )
        }
        CovKind::Hac => {
            if spec.hac_lags >= n {
                return Err(Error::InvalidConfig(format!(
                    "hac_lags = {} must be below N = {n}",
                    spec.hac_lags
                )));
            }
            OmegaForm::Banded {
                weights: spec.hac_kernel.weights(spec.hac_lags)?,
                u: residuals.to_vec(),
            }
        }
        CovKind::ClusterCv1 => {
            let labels = spec
                .cluster_labels
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig("cluster-cv1 needs cluster labels".into()))?;
            if labels.len() != n {
                return Err(Error::ShapeMismatch("cluster label length differs from N".into()));
            }
            // gather blocks by label, first-appearance order
            let mut order: Vec<&String> = Vec::new();
            let mut groups: Vec<Vec<usize>> = Vec::new();
            for (i, lab) in labels.iter().enumerate() {
                match order.iter().position(|l| *l == lab) {
                    Some(gi) => groups[gi].push(i),
                    None => {
                        order.push(lab);
                        groups.push(vec![i]);
                    }
                }
            }
            let g = groups.len();
            if g < 2 {
                return Err(Error::SingleCluster(g));
            }
            let scale = T::of(g as f64) * T::of((n - 1) as f64)
                / (T::of((g - 1) as f64) * T::of((n - k_used) as f64));
            OmegaForm::ClusterBlocks { scale, groups, u: residuals.to_vec() }
        }
    };
    Ok(OmegaHat { n, form })
}

/// Sandwich covariance of a coefficient vector.
#[derive(Clone, Debug, Serialize)]
pub struct VcovResult<T> {
    /// Covariance of the whole coefficient vector of the fitted model.
    pub matrix: Mat<T>,
    /// The block belonging to the coefficients of interest (the (2,2) block
    /// of a full fit; the entire matrix of a partial fit).
    pub interest_block: Mat<T>,
    /// Degrees-of-freedom factor baked into the error-covariance estimate.
    pub df_factor_applied: T,
    pub kind: CovKind,
    pub model_form: ModelForm,
}

fn internal_df_factor<T: Scalar>(spec: &CovSpec<T>, n: usize, k_used: usize, groups: usize) -> T {
    match spec.kind {
        CovKind::Homoskedastic => T::one() / T::of((n - k_used) as f64),
        CovKind::Hc1 => T::of(n as f64) / T::of((n - k_used) as f64),
        CovKind::ClusterCv1 => {
            T::of(groups as f64) * T::of((n - 1) as f64)
                / (T::of((groups - 1) as f64) * T::of((n - k_used) as f64))
        }
        _ => T::one(),
    }
}

fn cluster_group_count(labels: Option<&Vec<String>>) -> usize {
    labels.map_or(0, |ls| {
        let mut seen: Vec<&String> = Vec::new();
        for l in ls {
            if !seen.contains(&l) {
                seen.push(l);
            }
        }
        seen.len()
    })
}

fn sandwich_core<T: Scalar>(
    g: &Mat<T>,
    omega: &OmegaHat<T>,
    what: &str,
) -> Result<Mat<T>> {
    let bread = gram_inverse(g, what)?;
    Ok(bread.dot(&omega.meat(g)).dot(&bread).symmetrized())
}

fn check_fit_kind<T: Scalar>(fit: &FitResult<T>, form: ModelForm) -> Result<()> {
    if fit.model_form != form {
        return Err(Error::InvalidConfig("fit has the wrong model form for this sandwich".into()));
    }
    if !matches!(fit.estimator, EstimatorKind::Ols | EstimatorKind::Tsls) {
        return Err(Error::InvalidConfig(
            "sandwich covariance is defined for OLS and 2SLS fits".into(),
        ));
    }
    Ok(())
}

/// Covariance of the full-model coefficient vector, with the block of
/// interest extracted. Leverage-dependent kinds use full-design leverages
/// computed through the partitioned inverse.
pub fn sandwich_full<T: Scalar>(
    design: &ValidatedDesign<T>,
    fit: &FitResult<T>,
    spec: &CovSpec<T>,
) -> Result<VcovResult<T>> {
    check_fit_kind(fit, ModelForm::Full)?;
    let n = design.n();
    let (k1, k2) = (design.k1(), design.k2());
    let k_used = k1 + k2;

    let w = design.w();
    let g = if matches!(fit.estimator, EstimatorKind::Ols) {
        w
    } else {
        project(&design.z(), &w, "Z = [W1:Z2]")?
    };

    let h = if spec.kind.needs_leverages() {
        Some(leverages_via_partition(design)?)
    } else {
        None
    };
    let omega = omega_hat(&fit.residuals, spec, (n, k_used), h.as_deref())?;
    let matrix = sandwich_core(&g, &omega, "P_Z W (projected design)")?;
    let interest_block = matrix.block(k1, k1, k2, k2);
    Ok(VcovResult {
        matrix,
        interest_block,
        df_factor_applied: internal_df_factor(spec, n, k_used, cluster_group_count(spec.cluster_labels.as_ref())),
        kind: spec.kind,
        model_form: ModelForm::Full,
    })
}

/// Covariance of the partial-model coefficient vector. For HC2..HC5 this is
/// the naive estimate that uses the partial design's own leverages; the
/// partitioned-inverse procedure in [`partial_inference_hc2_family`] is the
/// one that reproduces full-model inference.
pub fn sandwich_partial<T: Scalar>(
    design: &ValidatedDesign<T>,
    fit: &FitResult<T>,
    spec: &CovSpec<T>,
) -> Result<VcovResult<T>> {
    check_fit_kind(fit, ModelForm::Partial)?;
    let n = design.n();
    let k2 = design.k2();

    let ps = design.partial_system()?;
    let g = if matches!(fit.estimator, EstimatorKind::Ols) {
        ps.w2.clone()
    } else {
        project(&ps.z2, &ps.w2, "Z2~ (residualized instruments)")?
    };

    let h = if spec.kind.needs_leverages() {
        Some(hat_diagonals(&ps.w2, "W2~ (residualized block of interest)")?)
    } else {
        None
    };
    let omega = omega_hat(&fit.residuals, spec, (n, k2), h.as_deref())?;
    let matrix = sandwich_core(&g, &omega, "P_{Z2~} W2~ (projected partial design)")?;
    Ok(VcovResult {
        matrix: matrix.clone(),
        interest_block: matrix,
        df_factor_applied: internal_df_factor(spec, n, k2, cluster_group_count(spec.cluster_labels.as_ref())),
        kind: spec.kind,
        model_form: ModelForm::Partial,
    })
}

/// Hat diagonal h_i = w_i'(W'W)^-1 w_i of the full design, computed from the
/// partitioned-inverse blocks only; the k-by-k Gram matrix is never
/// inverted.
pub fn leverages_via_partition<T: Scalar>(design: &ValidatedDesign<T>) -> Result<Vec<T>> {
    let blocks: PartitionedInverse<T> =
        crate::linalg::partitioned_inverse(design.w1(), design.w2())?;
    let w1 = design.w1();
    let w2 = design.w2();
    Ok((0..design.n()).map(|i| blocks.row_quad_form(w1.row(i), w2.row(i))).collect())
}

/// Partial-regression inference for the leverage-dependent covariance kinds:
/// fit the partial regression, recover full-design leverages through the
/// partitioned inverse, and evaluate the sandwich on partialled quantities
/// with partial residuals. Reproduces the full-model block of interest.
pub fn partial_inference_hc2_family<T: Scalar>(
    design: &ValidatedDesign<T>,
    spec: &CovSpec<T>,
) -> Result<VcovResult<T>> {
    if !spec.kind.needs_leverages() {
        return Err(Error::InvalidConfig(format!(
            "partitioned-leverage inference applies to HC2..HC5, not {}",
            spec.kind.label()
        )));
    }
    let n = design.n();
    let k_full = design.k1() + design.k2();

    // steps 1-2: residualize and fit the partial regression
    let fit = if design.is_ols() {
        crate::estimators::ols_partial(design)?
    } else {
        crate::estimators::tsls_partial(design)?
    };
    let ps = design.partial_system()?;
    let g = if design.is_ols() {
        ps.w2.clone()
    } else {
        project(&ps.z2, &ps.w2, "Z2~ (residualized instruments)")?
    };

    // step 3: full-design leverages from the partitioned inverse
    let h = leverages_via_partition(design)?;

    // step 4: sandwich on partialled quantities; the exponent normalizer is
    // the full design's column count so the estimate matches the full model
    let omega = omega_hat(&fit.residuals, spec, (n, k_full), Some(&h))?;
    let matrix = sandwich_core(&g, &omega, "P_{Z2~} W2~ (projected partial design)")?;
    Ok(VcovResult {
        matrix: matrix.clone(),
        interest_block: matrix,
        df_factor_applied: T::one(),
        kind: spec.kind,
        model_form: ModelForm::Partial,
    })
}
