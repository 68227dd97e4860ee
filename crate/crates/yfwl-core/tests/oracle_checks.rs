//! Operation-level checks against the brute-force oracles: each routine is
//! compared with a literal dense-inverse evaluation of its defining formula
//! on small random instances.

mod common;

use common::oracle;
use yfwl_core::covariance::{omega_hat, sandwich_full, CovSpec};
use yfwl_core::engine::dgp::{random_conditioned_matrix, random_iv_design, rng_from_seed, DesignOptions};
use yfwl_core::estimators;
use yfwl_core::linalg::{self, Mat};
use yfwl_core::model::ValidatedDesign;
use rand::Rng;

fn gaussian(rng: &mut impl Rng, n: usize, k: usize) -> Mat<f64> {
    Mat::from_fn(n, k, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal))
}

#[test]
fn solve_ls_matches_dense_normal_equations() {
    let mut rng = rng_from_seed(101);
    for _ in 0..20 {
        let x = random_conditioned_matrix::<f64, _>(&mut rng, 6, 2);
        let y = gaussian(&mut rng, 6, 1);
        let b = linalg::solve_ls(&x, &y, "X").unwrap();
        let expect = oracle::ols_oracle(&y, &x);
        assert!(oracle::rel_delta(b.as_vector(), &expect) < 1e-10);
        // orthogonality of the residual
        let resid = y.sub(&x.dot(&b));
        assert!(x.t().dot(&resid).max_abs() < 1e-10);
    }
}

#[test]
fn project_matches_dense_projector() {
    let mut rng = rng_from_seed(102);
    for _ in 0..10 {
        let x = random_conditioned_matrix::<f64, _>(&mut rng, 9, 3);
        let v = gaussian(&mut rng, 9, 2);
        let p = linalg::project(&x, &v, "X").unwrap();
        let expect = oracle::dense_projector(&x).dot(&v);
        assert!(linalg::rel_max_delta(&p, &expect) < 1e-10);
    }
}

#[test]
fn partitioned_inverse_matches_dense_inverse() {
    let mut rng = rng_from_seed(103);
    let w1 = random_conditioned_matrix::<f64, _>(&mut rng, 8, 2);
    let w2 = random_conditioned_matrix::<f64, _>(&mut rng, 8, 2);
    let blocks = linalg::partitioned_inverse(&w1, &w2).unwrap();
    let dense = oracle::dense_inverse(&Mat::hstack(&[&w1, &w2]).gram());
    assert!(linalg::rel_max_delta(&blocks.assemble(), &dense) < 1e-10);
}

#[test]
fn generalized_eigenvalue_matches_root_scan() {
    let mut rng = rng_from_seed(104);
    for _ in 0..10 {
        let make_spd = |rng: &mut rand_chacha::ChaCha8Rng| {
            let m = gaussian(rng, 3, 3);
            m.gram().add(&Mat::identity(3).scale(0.5))
        };
        let a = make_spd(&mut rng);
        let b = make_spd(&mut rng);
        let fast = linalg::smallest_gen_eigenvalue(&a, &b).unwrap();
        let slow = oracle::smallest_gen_eigenvalue_oracle(&a, &b);
        assert!((fast - slow).abs() / fast.abs().max(1.0) < 1e-8, "{fast} vs {slow}");
    }
}

#[test]
fn kclass_matches_dense_formula_at_half() {
    let mut rng = rng_from_seed(105);
    let design: ValidatedDesign<f64> =
        random_iv_design(&mut rng, 40, 2, 1, 3, &DesignOptions::default()).unwrap();
    let fit = estimators::kclass(&design, 0.5).unwrap();
    let expect = oracle::kclass_oracle(&design, 0.5);
    assert!(oracle::rel_delta(&fit.coefficients, &expect) < 1e-10);
}

#[test]
fn leverages_via_partition_match_dense_hat_diagonal() {
    let mut rng = rng_from_seed(106);
    let design: ValidatedDesign<f64> =
        random_iv_design(&mut rng, 30, 3, 2, 2, &DesignOptions::default()).unwrap();
    let h = yfwl_core::covariance::leverages_via_partition(&design).unwrap();
    let dense = oracle::dense_projector(&design.w());
    for i in 0..design.n() {
        assert!((h[i] - dense[(i, i)]).abs() < 1e-10);
        assert!(h[i] > -1e-12 && h[i] < 1.0 + 1e-12);
    }
}

#[test]
fn iv_sandwich_matches_dense_formula() {
    let mut rng = rng_from_seed(107);
    let design: ValidatedDesign<f64> =
        random_iv_design(&mut rng, 35, 2, 1, 2, &DesignOptions { het: 0.5, ..Default::default() })
            .unwrap();
    let fit = estimators::tsls_full(&design).unwrap();
    for spec in [CovSpec::hc(0), CovSpec::homoskedastic(), CovSpec::hac(4), CovSpec::hc(3)] {
        let v = sandwich_full(&design, &fit, &spec).unwrap();
        let h = yfwl_core::covariance::leverages_via_partition(&design).unwrap();
        let lev = if spec.kind.needs_leverages() { Some(&h[..]) } else { None };
        let omega = omega_hat(&fit.residuals, &spec, (design.n(), design.k1() + design.k2()), lev)
            .unwrap()
            .dense(2000)
            .unwrap();
        let g = oracle::dense_projector(&design.z()).dot(&design.w());
        let expect = oracle::sandwich_oracle(&g, &omega);
        assert!(
            linalg::rel_max_delta(&v.matrix, &expect) < 1e-9,
            "{:?} delta {}",
            spec.kind,
            linalg::rel_max_delta(&v.matrix, &expect)
        );
    }
}

#[test]
fn two_step_gmm_matches_dense_formula_under_heteroskedasticity() {
    let mut rng = rng_from_seed(108);
    let design: ValidatedDesign<f64> =
        random_iv_design(&mut rng, 45, 2, 1, 3, &DesignOptions { het: 0.8, ..Default::default() })
            .unwrap();
    let fit = estimators::two_step_gmm(&design).unwrap();
    let expect = oracle::two_step_gmm_oracle(&design);
    assert!(oracle::rel_delta(&fit.coefficients, &expect) < 1e-10);
}

#[test]
fn scaled_projector_in_projection_form_is_idempotent() {
    let mut rng = rng_from_seed(109);
    let design: ValidatedDesign<f64> =
        random_iv_design(&mut rng, 30, 2, 1, 2, &DesignOptions::default()).unwrap();
    let u = estimators::tsls_full(&design).unwrap().residuals;
    // P = D^{1/2} Z (Z'DZ)^-1 Z' D^{1/2} materialized from the oracle side
    let z = design.z();
    let dhalf = Mat::from_fn(design.n(), design.n(), |i, j| if i == j { u[i] } else { 0.0 });
    let zd = dhalf.dot(&z);
    let p = zd.dot(&oracle::dense_inverse(&zd.gram())).dot(&zd.t());
    for _ in 0..5 {
        let v = gaussian(&mut rng, design.n(), 1);
        let pv = p.dot(&v);
        let ppv = p.dot(&pv);
        assert!(pv.sub(&ppv).max_abs() < 1e-9 * (1.0 + pv.max_abs()));
    }
    assert!(p.max_asymmetry() < 1e-9);
}

#[test]
fn hac_quadratic_form_matches_dense_matrix() {
    let mut rng = rng_from_seed(110);
    let n = 25;
    let u: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
    let spec = CovSpec::hac(5);
    let om = omega_hat(&u, &spec, (n, 2), None).unwrap();
    let dense = om.dense(2000).unwrap();
    let g = gaussian(&mut rng, n, 3);
    let meat = om.meat(&g);
    let expect = g.t().dot(&dense).dot(&g);
    assert!(linalg::rel_max_delta(&meat, &expect) < 1e-12);
}
