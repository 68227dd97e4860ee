//! Point estimators: OLS, 2SLS (full and partial), the K-class family
//! (arbitrary K, LIML, Fuller), linear GMM with an arbitrary weighting
//! matrix, and two-step optimal GMM with its projection form.
//!
//! Full-model estimators consume a [`ValidatedDesign`]; each has a partial
//! counterpart operating on the residualized system (Y~, W2~, Z2~). Near-
//! singular systems fail loudly with the offending block named; there is no
//! ridge fallback.

use crate::error::{Error, Result};
use crate::linalg::{cholesky, forward_solve, project, smallest_gen_eigenvalue, solve_ls, solve_square, Mat};
use crate::model::ValidatedDesign;
use crate::scalar::Scalar;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelForm {
    Full,
    Partial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DesignDims {
    pub n: usize,
    pub k1: usize,
    pub k2: usize,
    pub k3: usize,
}

impl DesignDims {
    fn of<T: Scalar>(design: &ValidatedDesign<T>) -> Self {
        DesignDims { n: design.n(), k1: design.k1(), k2: design.k2(), k3: design.k3_effective() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingKind {
    Identity,
    TwoStepOptimal,
    Custom,
}

/// Symmetric positive definite weighting matrix for linear GMM.
#[derive(Clone, Debug)]
pub struct WeightingMatrix<T> {
    pub kind: WeightingKind,
    pub matrix: Mat<T>,
}

impl<T: Scalar> WeightingMatrix<T> {
    pub fn identity(dim: usize) -> Self {
        WeightingMatrix { kind: WeightingKind::Identity, matrix: Mat::identity(dim) }
    }

    /// Validates symmetry and positive definiteness.
    pub fn custom(matrix: Mat<T>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::ShapeMismatch("weighting matrix must be square".into()));
        }
        let scale = matrix.max_abs().max(T::one());
        if matrix.max_asymmetry() > T::of(1e-10) * scale {
            return Err(Error::NotPositiveDefinite("weighting matrix is not symmetric".into()));
        }
        cholesky(&matrix, "weighting matrix")?;
        Ok(WeightingMatrix { kind: WeightingKind::Custom, matrix })
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorKind<T> {
    Ols,
    Tsls,
    KClass { k: T },
    Liml { kappa: T },
    Fuller { alpha: T, kappa: T, k: T },
    Gmm { weighting: WeightingKind },
    TwoStepGmm,
    TwoStepGmmProjection,
}

impl<T: Scalar> EstimatorKind<T> {
    pub fn label(&self) -> String {
        match self {
            EstimatorKind::Ols => "ols".into(),
            EstimatorKind::Tsls => "2sls".into(),
            EstimatorKind::KClass { k } => format!("kclass(K={})", k.as_f64()),
            EstimatorKind::Liml { .. } => "liml".into(),
            EstimatorKind::Fuller { alpha, .. } => format!("fuller({})", alpha.as_f64()),
            EstimatorKind::Gmm { weighting: WeightingKind::Identity } => "igmm".into(),
            EstimatorKind::Gmm { .. } => "gmm".into(),
            EstimatorKind::TwoStepGmm => "2sgmm".into(),
            EstimatorKind::TwoStepGmmProjection => "2sgmm-projection".into(),
        }
    }
}

/// A fitted model: labeled coefficients, residuals, and estimator metadata.
#[derive(Clone, Debug, Serialize)]
pub struct FitResult<T> {
    pub estimator: EstimatorKind<T>,
    pub model_form: ModelForm,
    pub names: Vec<String>,
    pub coefficients: Vec<T>,
    pub residuals: Vec<T>,
    pub dims: DesignDims,
    /// First-step 2SLS residuals, kept by the two-step GMM estimators.
    #[serde(skip)]
    pub first_step_residuals: Option<Vec<T>>,
}

impl<T: Scalar> FitResult<T> {
    /// Coefficients on the block of interest: the trailing k2 entries of a
    /// full fit, or the whole vector of a partial fit.
    pub fn interest_coefficients(&self) -> &[T] {
        match self.model_form {
            ModelForm::Full => &self.coefficients[self.dims.k1..],
            ModelForm::Partial => &self.coefficients,
        }
    }

    pub fn interest_names(&self) -> &[String] {
        match self.model_form {
            ModelForm::Full => &self.names[self.dims.k1..],
            ModelForm::Partial => &self.names,
        }
    }

    pub fn sse(&self) -> T {
        self.residuals.iter().map(|&u| u * u).sum()
    }
}

fn fit_from<T: Scalar>(
    estimator: EstimatorKind<T>,
    model_form: ModelForm,
    names: Vec<String>,
    b: Mat<T>,
    y: &Mat<T>,
    regressors: &Mat<T>,
    dims: DesignDims,
) -> FitResult<T> {
    let residuals = y.sub(&regressors.dot(&b)).into_vector();
    FitResult {
        estimator,
        model_form,
        names,
        coefficients: b.into_vector(),
        residuals,
        dims,
        first_step_residuals: None,
    }
}

/// Least-squares fit of `y` on `w`; coefficient labels are synthesized.
pub fn ols<T: Scalar>(y: &Mat<T>, w: &Mat<T>) -> Result<FitResult<T>> {
    let b = solve_ls(w, y, "W")?;
    let names = (0..w.cols()).map(|j| format!("x{j}")).collect();
    let dims = DesignDims { n: y.rows(), k1: 0, k2: w.cols(), k3: 0 };
    Ok(fit_from(EstimatorKind::Ols, ModelForm::Full, names, b, y, w, dims))
}

/// OLS of the full design, Y on [W1 : W2].
pub fn ols_full<T: Scalar>(design: &ValidatedDesign<T>) -> Result<FitResult<T>> {
    let w = design.w();
    let b = solve_ls(&w, design.y(), "W = [W1:W2]")?;
    Ok(fit_from(
        EstimatorKind::Ols,
        ModelForm::Full,
        design.w_names(),
        b,
        design.y(),
        &w,
        DesignDims::of(design),
    ))
}

/// OLS of the partial design, Y~ on W2~.
pub fn ols_partial<T: Scalar>(design: &ValidatedDesign<T>) -> Result<FitResult<T>> {
    let ps = design.partial_system()?;
    let b = solve_ls(&ps.w2, &ps.y, "W2~ (residualized block of interest)")?;
    Ok(fit_from(
        EstimatorKind::Ols,
        ModelForm::Partial,
        design.w2_names().to_vec(),
        b,
        &ps.y,
        &ps.w2,
        DesignDims::of(design),
    ))
}

/// 2SLS of the full model: regress Y on P_Z W, residuals from the raw W.
pub fn tsls_full<T: Scalar>(design: &ValidatedDesign<T>) -> Result<FitResult<T>> {
    let w = design.w();
    let z = design.z();
    let g = project(&z, &w, "Z = [W1:Z2]")?;
    let b = solve_ls(&g, design.y(), "P_Z W (projected design)")?;
    Ok(fit_from(
        EstimatorKind::Tsls,
        ModelForm::Full,
        design.w_names(),
        b,
        design.y(),
        &w,
        DesignDims::of(design),
    ))
}

/// 2SLS of the partial model with residualized instruments.
pub fn tsls_partial<T: Scalar>(design: &ValidatedDesign<T>) -> Result<FitResult<T>> {
    let ps = design.partial_system()?;
    let g = project(&ps.z2, &ps.w2, "Z2~ (residualized instruments)")?;
    let b = solve_ls(&g, &ps.y, "P_{Z2~} W2~ (projected partial design)")?;
    Ok(fit_from(
        EstimatorKind::Tsls,
        ModelForm::Partial,
        design.w2_names().to_vec(),
        b,
        &ps.y,
        &ps.w2,
        DesignDims::of(design),
    ))
}

/// Shared K-class solve: [X'X - K X'M_S X] b = X'(Y - K M_S Y) where S is
/// the instrument block. M_S is applied operator-style, never materialized.
fn kclass_solve<T: Scalar>(
    y: &Mat<T>,
    x: &Mat<T>,
    instruments: &Mat<T>,
    k: T,
) -> Result<Mat<T>> {
    let mz_x = crate::linalg::residualize(instruments, x, "instrument block")?;
    let mz_y = crate::linalg::residualize(instruments, y, "instrument block")?;
    let a = x.gram().sub(&x.t().dot(&mz_x).scale(k)).symmetrized();
    let rhs = x.t().dot(&y.sub(&mz_y.scale(k)));
    solve_square(&a, &rhs, "W'(I - K M_Z)W")
}

/// K-class estimator of the full model for a given scalar K.
pub fn kclass<T: Scalar>(design: &ValidatedDesign<T>, k: T) -> Result<FitResult<T>> {
    let w = design.w();
    let b = kclass_solve(design.y(), &w, &design.z(), k)?;
    Ok(fit_from(
        EstimatorKind::KClass { k },
        ModelForm::Full,
        design.w_names(),
        b,
        design.y(),
        &w,
        DesignDims::of(design),
    ))
}

/// K-class estimator of the partial model (residualized system, same K).
pub fn kclass_partial<T: Scalar>(design: &ValidatedDesign<T>, k: T) -> Result<FitResult<T>> {
    let ps = design.partial_system()?;
    let b = kclass_solve(&ps.y, &ps.w2, &ps.z2, k)?;
    Ok(fit_from(
        EstimatorKind::KClass { k },
        ModelForm::Partial,
        design.w2_names().to_vec(),
        b,
        &ps.y,
        &ps.w2,
        DesignDims::of(design),
    ))
}

/// LIML kappa of the full model: the smallest generalized eigenvalue of
/// (U'M_{W1}U, U'M_Z U) with U = [Y : W2] and Z = [W1 : Z2]. Always >= 1.
pub fn liml_kappa<T: Scalar>(design: &ValidatedDesign<T>) -> Result<T> {
    let n = design.n();
    if n <= design.instrument_count() {
        return Err(Error::InvalidConfig(format!(
            "LIML needs N > k1 + k3, got N = {n} with {} instruments",
            design.instrument_count()
        )));
    }
    let u = Mat::hstack(&[design.y(), design.w2()]);
    let mw1_u = crate::linalg::residualize(design.w1(), &u, "W1 (conditioning block)")?;
    let a = u.t().dot(&mw1_u).symmetrized();
    let mz_u = crate::linalg::residualize(&design.z(), &u, "Z = [W1:Z2]")?;
    let b = u.t().dot(&mz_u).symmetrized();
    smallest_gen_eigenvalue(&a, &b)
}

/// LIML kappa of the partial system: smallest generalized eigenvalue of
/// (U~'U~, U~'M_{Z2~}U~) with U~ = [Y~ : W2~].
pub fn liml_kappa_partial<T: Scalar>(design: &ValidatedDesign<T>) -> Result<T> {
    let n = design.n();
    if n <= design.k3_effective() {
        return Err(Error::InvalidConfig(format!(
            "partial LIML needs N > k3, got N = {n} with k3 = {}",
            design.k3_effective()
        )));
    }
    let ps = design.partial_system()?;
    let u = Mat::hstack(&[&ps.y, &ps.w2]);
    let a = u.gram().symmetrized();
    let mz_u = crate::linalg::residualize(&ps.z2, &u, "Z2~ (residualized instruments)")?;
    let b = u.t().dot(&mz_u).symmetrized();
    smallest_gen_eigenvalue(&a, &b)
}

pub fn liml<T: Scalar>(design: &ValidatedDesign<T>) -> Result<FitResult<T>> {
    let kappa = liml_kappa(design)?;
    let mut fit = kclass(design, kappa)?;
    fit.estimator = EstimatorKind::Liml { kappa };
    Ok(fit)
}

pub fn liml_partial<T: Scalar>(design: &ValidatedDesign<T>) -> Result<FitResult<T>> {
    let kappa = liml_kappa_partial(design)?;
    let mut fit = kclass_partial(design, kappa)?;
    fit.estimator = EstimatorKind::Liml { kappa };
    Ok(fit)
}

/// Fuller's modified LIML: K = kappa - alpha / (N - L) with L the number of
/// instruments of the model being fitted (k1 + k3 for the full model).
pub fn fuller<T: Scalar>(design: &ValidatedDesign<T>, alpha: T) -> Result<FitResult<T>> {
    let l = design.instrument_count();
    if design.n() <= l {
        return Err(Error::InvalidConfig(format!(
            "Fuller needs N > L, got N = {} with L = {l}",
            design.n()
        )));
    }
    let kappa = liml_kappa(design)?;
    let k = kappa - alpha / T::of((design.n() - l) as f64);
    let mut fit = kclass(design, k)?;
    fit.estimator = EstimatorKind::Fuller { alpha, kappa, k };
    Ok(fit)
}

/// Fuller on the partial system; its instrument count is k3 alone.
pub fn fuller_partial<T: Scalar>(design: &ValidatedDesign<T>, alpha: T) -> Result<FitResult<T>> {
    let l = design.k3_effective();
    if design.n() <= l {
        return Err(Error::InvalidConfig(format!(
            "Fuller needs N > L, got N = {} with L = {l}",
            design.n()
        )));
    }
    let kappa = liml_kappa_partial(design)?;
    let k = kappa - alpha / T::of((design.n() - l) as f64);
    let mut fit = kclass_partial(design, k)?;
    fit.estimator = EstimatorKind::Fuller { alpha, kappa, k };
    Ok(fit)
}

/// Linear GMM core: b = [X'S Wn S'X]^-1 X'S Wn S'Y for moment block S.
fn gmm_solve<T: Scalar>(
    y: &Mat<T>,
    x: &Mat<T>,
    instruments: &Mat<T>,
    wn: &WeightingMatrix<T>,
) -> Result<Mat<T>> {
    let m = instruments.cols();
    if wn.matrix.rows() != m {
        return Err(Error::ShapeMismatch(format!(
            "weighting matrix is {}x{} but there are {m} instruments",
            wn.matrix.rows(),
            wn.matrix.cols()
        )));
    }
    let sx = instruments.t().dot(x);
    let sy = instruments.t().dot(y);
    let wsx = wn.matrix.dot(&sx);
    let a = sx.t().dot(&wsx).symmetrized();
    let rhs = wsx.t().dot(&sy);
    solve_square(&a, &rhs, "W'Z Wn Z'W")
}

/// Linear GMM of the full model with instruments Z = [W1 : Z2].
pub fn gmm<T: Scalar>(design: &ValidatedDesign<T>, wn: &WeightingMatrix<T>) -> Result<FitResult<T>> {
    let w = design.w();
    let b = gmm_solve(design.y(), &w, &design.z(), wn)?;
    Ok(fit_from(
        EstimatorKind::Gmm { weighting: wn.kind },
        ModelForm::Full,
        design.w_names(),
        b,
        design.y(),
        &w,
        DesignDims::of(design),
    ))
}

/// Linear GMM of the partial model: (Y, W, Z) replaced by (Y~, W2~, Z2~),
/// with a weighting matrix of matching dimension.
pub fn gmm_partial<T: Scalar>(
    design: &ValidatedDesign<T>,
    wn: &WeightingMatrix<T>,
) -> Result<FitResult<T>> {
    let ps = design.partial_system()?;
    let b = gmm_solve(&ps.y, &ps.w2, &ps.z2, wn)?;
    Ok(fit_from(
        EstimatorKind::Gmm { weighting: wn.kind },
        ModelForm::Partial,
        design.w2_names().to_vec(),
        b,
        &ps.y,
        &ps.w2,
        DesignDims::of(design),
    ))
}

/// Solve (Z'DZ) X = B through a Cholesky factorization of Z'DZ.
fn weighted_gram_solve<T: Scalar>(z: &Mat<T>, d: &[T], b: &Mat<T>) -> Result<Mat<T>> {
    let sqrt_d: Vec<T> = d.iter().map(|&v| v.abs().sqrt()).collect();
    let zdz = z.scale_rows(&sqrt_d).gram();
    let l = cholesky(&zdz, "Z'DZ (heteroskedasticity-weighted instrument Gram)")?;
    // L L' X = B
    let t = forward_solve(&l, b);
    let lt = l.t();
    // back substitution against L'
    let n = lt.rows();
    let mut x = t;
    for col in 0..x.cols() {
        for i in (0..n).rev() {
            let mut s = x[(i, col)];
            for k in (i + 1)..n {
                s -= lt[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / lt[(i, i)];
        }
    }
    Ok(x)
}

fn two_step_core<T: Scalar>(
    y: &Mat<T>,
    x: &Mat<T>,
    instruments: &Mat<T>,
    first_step_residuals: &[T],
) -> Result<Mat<T>> {
    let d: Vec<T> = first_step_residuals.iter().map(|&u| u * u).collect();
    let sx = instruments.t().dot(x);
    let sy = instruments.t().dot(y);
    let t1 = weighted_gram_solve(instruments, &d, &sx)?;
    let a = sx.t().dot(&t1).symmetrized();
    let t2 = weighted_gram_solve(instruments, &d, &sy)?;
    let rhs = sx.t().dot(&t2);
    solve_square(&a, &rhs, "W'Z(Z'DZ)^-1 Z'W")
}

/// Two-step optimal GMM: first step 2SLS, second step weighted by the
/// inverse of the residual-weighted instrument Gram matrix.
pub fn two_step_gmm<T: Scalar>(design: &ValidatedDesign<T>) -> Result<FitResult<T>> {
    let first = tsls_full(design)?;
    two_step_gmm_with_first_step(design, first.residuals)
}

/// Second GMM step with a caller-supplied first-step residual vector.
pub fn two_step_gmm_with_first_step<T: Scalar>(
    design: &ValidatedDesign<T>,
    first_step_residuals: Vec<T>,
) -> Result<FitResult<T>> {
    let w = design.w();
    let b = two_step_core(design.y(), &w, &design.z(), &first_step_residuals)?;
    let mut fit = fit_from(
        EstimatorKind::TwoStepGmm,
        ModelForm::Full,
        design.w_names(),
        b,
        design.y(),
        &w,
        DesignDims::of(design),
    );
    fit.first_step_residuals = Some(first_step_residuals);
    Ok(fit)
}

/// Two-step optimal GMM of the partial system; the first step is the
/// partial 2SLS fit.
pub fn two_step_gmm_partial<T: Scalar>(design: &ValidatedDesign<T>) -> Result<FitResult<T>> {
    let first = tsls_partial(design)?;
    let ps = design.partial_system()?;
    let b = two_step_core(&ps.y, &ps.w2, &ps.z2, &first.residuals)?;
    let mut fit = fit_from(
        EstimatorKind::TwoStepGmm,
        ModelForm::Partial,
        design.w2_names().to_vec(),
        b,
        &ps.y,
        &ps.w2,
        DesignDims::of(design),
    );
    fit.first_step_residuals = Some(first.residuals);
    Ok(fit)
}

/// Two-step GMM in projection form: reciprocal-residual rescaling turns the
/// estimator into a 2SLS-shaped solve. Verification path for the structural
/// equivalence; `two_step_gmm` is the production route.
pub fn two_step_gmm_projection_form<T: Scalar>(design: &ValidatedDesign<T>) -> Result<FitResult<T>> {
    let first = tsls_full(design)?;
    two_step_gmm_projection_with_first_step(design, first.residuals)
}

/// Projection-form second step with a caller-supplied first-step residual
/// vector; every entry must be nonzero so its reciprocal exists.
pub fn two_step_gmm_projection_with_first_step<T: Scalar>(
    design: &ValidatedDesign<T>,
    first_step_residuals: Vec<T>,
) -> Result<FitResult<T>> {
    for (i, &u) in first_step_residuals.iter().enumerate() {
        if u == T::zero() {
            return Err(Error::ZeroResidual(i));
        }
    }
    let d_half = &first_step_residuals;
    let d_half_inv: Vec<T> = first_step_residuals.iter().map(|&u| T::one() / u).collect();

    let zeta = design.z().scale_rows(d_half);
    let w_hat = design.w().scale_rows(&d_half_inv);
    let y_hat = design.y().scale_rows(&d_half_inv);
    let g = project(&zeta, &w_hat, "D^{1/2}Z (scaled instruments)")?;
    let b = solve_ls(&g, &y_hat, "P_{D^{1/2}Z} D^{-1/2}W")?;

    let w = design.w();
    let mut fit = fit_from(
        EstimatorKind::TwoStepGmmProjection,
        ModelForm::Full,
        design.w_names(),
        b,
        design.y(),
        &w,
        DesignDims::of(design),
    );
    fit.first_step_residuals = Some(first_step_residuals);
    Ok(fit)
}
