//! Seeded synthetic designs: random well-conditioned IV designs for the
//! property suites, the built-in endogenous-regressor process for
//! convergence sweeps, and the swapped-roles design for the limitation
//! demonstration.
//!
//! All draws go through ChaCha8 so a seed pins every dataset bit-for-bit.

use crate::error::Result;
use crate::linalg::{residualize, Mat, Qr};
use crate::model::ValidatedDesign;
use crate::scalar::Scalar;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal<T: Scalar, R: Rng>(rng: &mut R) -> T {
    T::of(rng.sample::<f64, _>(StandardNormal))
}

fn uniform<T: Scalar, R: Rng>(rng: &mut R, lo: f64, hi: f64) -> T {
    T::of(rng.random_range(lo..hi))
}

fn gaussian_matrix<T: Scalar, R: Rng>(rng: &mut R, n: usize, k: usize) -> Mat<T> {
    let data: Vec<T> = (0..n * k).map(|_| normal(rng)).collect();
    Mat::new(n, k, data)
}

/// Random n-by-k matrix with singular values log-uniform in [0.1, 10], so
/// theorem tolerances stay meaningful.
pub fn random_conditioned_matrix<T: Scalar, R: Rng>(rng: &mut R, n: usize, k: usize) -> Mat<T> {
    if k == 0 {
        return Mat::zeros(n, 0);
    }
    let q = Qr::factor(&gaussian_matrix::<T, _>(rng, n, k)).thin_q();
    let singular: Vec<T> = (0..k)
        .map(|_| T::of(10f64.powf(rng.random_range(-1.0..1.0))))
        .collect();
    let scaled = Mat::from_fn(n, k, |i, j| q[(i, j)] * singular[j]);
    let rot = Qr::factor(&gaussian_matrix::<T, _>(rng, k, k)).thin_q();
    scaled.dot(&rot.t())
}

/// Options for the random IV design generator.
#[derive(Clone, Debug)]
pub struct DesignOptions {
    /// Correlation between the structural error and the first-stage noise.
    pub endogeneity: f64,
    /// Heteroskedasticity strength; 0 gives homoskedastic errors.
    pub het: f64,
    /// Attach round-robin cluster labels with this many groups.
    pub clusters: Option<usize>,
}

impl Default for DesignOptions {
    fn default() -> Self {
        DesignOptions { endogeneity: 0.5, het: 0.0, clusters: None }
    }
}

/// A random valid IV design: W1 = [const : exogenous], W2 endogenous and
/// instrumented by Z2. `k3 = 0` produces an OLS design (exogenous W2).
pub fn random_iv_design<T: Scalar, R: Rng>(
    rng: &mut R,
    n: usize,
    k1: usize,
    k2: usize,
    k3: usize,
    opts: &DesignOptions,
) -> Result<ValidatedDesign<T>> {
    assert!(k1 >= 1, "designs include an intercept in W1");
    let ones = Mat::ones(n);
    let extra = random_conditioned_matrix::<T, _>(rng, n, k1 - 1);
    let w1 = Mat::hstack(&[&ones, &extra]);

    let z2 = random_conditioned_matrix::<T, _>(rng, n, k3.max(k2));
    let pi = Mat::from_fn(z2.cols(), k2, |_, _| {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        uniform::<T, _>(rng, 0.7, 1.5) * T::of(sign)
    });
    let gamma = Mat::from_fn(k1, k2, |_, _| uniform(rng, -0.5, 0.5));
    let v = gaussian_matrix::<T, _>(rng, n, k2).scale(T::of(0.7));
    let w2 = z2.dot(&pi).add(&w1.dot(&gamma)).add(&v);

    let rho = T::of(opts.endogeneity);
    let noise_scale = (T::one() - rho * rho).sqrt();
    let eps: Vec<T> = (0..n)
        .map(|i| {
            let mut e = rho * v[(i, 0)] + noise_scale * normal(rng);
            if opts.het > 0.0 {
                e *= (T::of(opts.het) * z2[(i, 0)].abs()).exp();
            }
            e
        })
        .collect();

    let beta1 = Mat::from_fn(k1, 1, |_, _| uniform(rng, -1.0, 1.0));
    let beta2 = Mat::from_fn(k2, 1, |_, _| uniform(rng, 0.5, 1.5));
    let y = Mat::from_fn(n, 1, |i, _| {
        let mut s = eps[i];
        for j in 0..k1 {
            s += w1[(i, j)] * beta1[(j, 0)];
        }
        for j in 0..k2 {
            s += w2[(i, j)] * beta2[(j, 0)];
        }
        s
    });

    let z2 = if k3 == 0 { Mat::zeros(n, 0) } else { z2 };
    let names = |prefix: &str, k: usize| (0..k).map(|j| format!("{prefix}{j}")).collect();
    let mut w1_names: Vec<String> = names("w1_", k1);
    w1_names[0] = "const".into();
    let design = ValidatedDesign::from_parts(
        y,
        w1,
        w2,
        z2,
        w1_names,
        names("w2_", k2),
        names("z2_", k3),
    )?;
    match opts.clusters {
        Some(g) => design.with_cluster_labels((0..n).map(|i| format!("g{}", i % g)).collect()),
        None => Ok(design),
    }
}

/// The built-in sweep process: one endogenous regressor, two excluded
/// instruments, Gaussian errors with adjustable endogeneity correlation.
#[derive(Clone, Debug)]
pub struct SyntheticDgp {
    pub seed: u64,
    pub endogeneity: f64,
}

impl SyntheticDgp {
    pub fn new(seed: u64) -> Self {
        SyntheticDgp { seed, endogeneity: 0.5 }
    }

    /// Designs at each requested size, drawn as nested prefixes of one
    /// sample so the sizes share their randomness.
    pub fn nested_designs<T: Scalar>(&self, sizes: &[usize]) -> Result<Vec<ValidatedDesign<T>>> {
        let n_max = sizes.iter().copied().max().unwrap_or(0);
        let mut rng = rng_from_seed(self.seed);
        let rho = T::of(self.endogeneity);
        let noise_scale = (T::one() - rho * rho).sqrt();

        // rows drawn one observation at a time so prefixes are nested
        let mut x1 = Vec::with_capacity(n_max);
        let mut z = Vec::with_capacity(n_max); // (z1, z2)
        let mut w2 = Vec::with_capacity(n_max);
        let mut y = Vec::with_capacity(n_max);
        for _ in 0..n_max {
            let xi: T = normal(&mut rng);
            let z1: T = normal(&mut rng);
            let z2: T = normal(&mut rng);
            let v: T = normal(&mut rng);
            let e: T = normal(&mut rng);
            let w2i = z1 + T::of(0.8) * z2 + T::of(0.4) * xi + v;
            let eps = rho * v + noise_scale * e;
            let yi = T::of(0.5) + T::of(-0.7) * xi + T::of(1.2) * w2i + eps;
            x1.push(xi);
            z.push((z1, z2));
            w2.push(w2i);
            y.push(yi);
        }

        sizes
            .iter()
            .map(|&n| {
                let w1 = Mat::from_fn(n, 2, |i, j| if j == 0 { T::one() } else { x1[i] });
                let z2 = Mat::from_fn(n, 2, |i, j| if j == 0 { z[i].0 } else { z[i].1 });
                ValidatedDesign::from_parts(
                    Mat::col_vec(y[..n].to_vec()),
                    w1,
                    Mat::col_vec(w2[..n].to_vec()),
                    z2,
                    vec!["const".into(), "x1".into()],
                    vec!["w2".into()],
                    vec!["z1".into(), "z2".into()],
                )
            })
            .collect()
    }
}

/// Swapped-roles design for the limitation demonstration: the conditioning
/// block W1 is endogenous (instrumented by Z1) and the block of interest W2
/// is exogenous. Returns (Y, W1, W2, Z1).
pub fn limitation_design<T: Scalar>(seed: u64, n: usize) -> (Mat<T>, Mat<T>, Mat<T>, Mat<T>) {
    let mut rng = rng_from_seed(seed);
    let z1: Mat<T> = gaussian_matrix(&mut rng, n, 1);
    let v: Mat<T> = gaussian_matrix(&mut rng, n, 1);
    // strongly endogenous conditioning variable
    let w1 = z1.add(&v.scale(T::of(1.5)));
    let w2 = gaussian_matrix::<T, _>(&mut rng, n, 1).add(&z1.scale(T::of(0.4)));
    let y = Mat::from_fn(n, 1, |i, _| {
        let eps = T::of(1.2) * v[(i, 0)] + T::of(0.4) * normal(&mut rng);
        T::of(1.5) * w1[(i, 0)] + T::of(2.0) * w2[(i, 0)] + eps
    });
    (y, w1, w2, z1)
}

/// Degenerate variant: W1 orthogonal to W2 in sample, Y an exact linear
/// combination, Z1 correlated with both blocks. All three limitation
/// estimates coincide on this input.
pub fn limitation_design_orthogonal<T: Scalar>(
    seed: u64,
    n: usize,
) -> Result<(Mat<T>, Mat<T>, Mat<T>, Mat<T>)> {
    let mut rng = rng_from_seed(seed);
    let w2: Mat<T> = gaussian_matrix(&mut rng, n, 1);
    let raw: Mat<T> = gaussian_matrix(&mut rng, n, 1);
    let w1 = residualize(&w2, &raw, "W2")?;
    let y = w1.scale(T::of(1.5)).add(&w2.scale(T::of(2.0)));
    let jitter: Mat<T> = gaussian_matrix(&mut rng, n, 1);
    let z1 = w1.scale(T::of(0.9)).add(&w2.scale(T::of(0.2))).add(&jitter.scale(T::of(0.01)));
    Ok((y, w1, w2, z1))
}
