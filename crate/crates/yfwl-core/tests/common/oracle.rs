//! Brute-force oracles, deliberately independent of the library's solve
//! paths: plain Gauss-Jordan inversion, materialized N-by-N projectors, and
//! a determinant root scan for generalized eigenvalues. Everything here is
//! the textbook formula evaluated literally.

use yfwl_core::linalg::Mat;
use yfwl_core::model::ValidatedDesign;

type M = Mat<f64>;

/// Gauss-Jordan inverse with partial pivoting.
pub fn dense_inverse(a: &M) -> M {
    assert!(a.is_square());
    let n = a.rows();
    let mut work = a.clone();
    let mut inv = M::identity(n);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| {
                work[(r1, col)].abs().partial_cmp(&work[(r2, col)].abs()).unwrap()
            })
            .unwrap();
        let pivot = work[(pivot_row, col)];
        assert!(pivot.abs() > 1e-300, "oracle inverse hit a zero pivot");
        if pivot_row != col {
            for j in 0..n {
                let (a1, a2) = (work[(col, j)], work[(pivot_row, j)]);
                work[(col, j)] = a2;
                work[(pivot_row, j)] = a1;
                let (b1, b2) = (inv[(col, j)], inv[(pivot_row, j)]);
                inv[(col, j)] = b2;
                inv[(pivot_row, j)] = b1;
            }
        }
        let pivot = work[(col, col)];
        for j in 0..n {
            work[(col, j)] /= pivot;
            inv[(col, j)] /= pivot;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = work[(r, col)];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                work[(r, j)] -= f * work[(col, j)];
                inv[(r, j)] -= f * inv[(col, j)];
            }
        }
    }
    inv
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(a: &M) -> f64 {
    assert!(a.is_square());
    let n = a.rows();
    let mut work = a.clone();
    let mut det = 1.0;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| {
                work[(r1, col)].abs().partial_cmp(&work[(r2, col)].abs()).unwrap()
            })
            .unwrap();
        if work[(pivot_row, col)] == 0.0 {
            return 0.0;
        }
        if pivot_row != col {
            det = -det;
            for j in 0..n {
                let (a1, a2) = (work[(col, j)], work[(pivot_row, j)]);
                work[(col, j)] = a2;
                work[(pivot_row, j)] = a1;
            }
        }
        det *= work[(col, col)];
        for r in (col + 1)..n {
            let f = work[(r, col)] / work[(col, col)];
            for j in col..n {
                work[(r, j)] -= f * work[(col, j)];
            }
        }
    }
    det
}

/// Materialized hat matrix X (X'X)^-1 X'.
pub fn dense_projector(x: &M) -> M {
    let xtx_inv = dense_inverse(&x.t().dot(x));
    x.dot(&xtx_inv).dot(&x.t())
}

/// Materialized residual maker I - P_X.
pub fn dense_residual_maker(x: &M) -> M {
    M::identity(x.rows()).sub(&dense_projector(x))
}

/// (W'W)^-1 W'Y evaluated literally.
pub fn ols_oracle(y: &M, w: &M) -> Vec<f64> {
    let winv = dense_inverse(&w.t().dot(w));
    winv.dot(&w.t().dot(y)).into_vector()
}

/// [(P_Z W)'W]^-1 (P_Z W)'Y with a materialized projector.
pub fn tsls_oracle(design: &ValidatedDesign<f64>) -> Vec<f64> {
    let w = design.w();
    let pz = dense_projector(&design.z());
    let pzw = pz.dot(&w);
    let lhs = dense_inverse(&pzw.t().dot(&w));
    lhs.dot(&pzw.t().dot(design.y())).into_vector()
}

/// [W'(I - K M_Z)W]^-1 W'(I - K M_Z)Y with a materialized residual maker.
pub fn kclass_oracle(design: &ValidatedDesign<f64>, k: f64) -> Vec<f64> {
    let w = design.w();
    let core = M::identity(design.n()).sub(&dense_residual_maker(&design.z()).scale(k));
    let lhs = dense_inverse(&w.t().dot(&core).dot(&w));
    lhs.dot(&w.t().dot(&core).dot(design.y())).into_vector()
}

/// [W'Z Wn Z'W]^-1 W'Z Wn Z'Y evaluated literally.
pub fn gmm_oracle(design: &ValidatedDesign<f64>, wn: &M) -> Vec<f64> {
    let w = design.w();
    let z = design.z();
    let a = w.t().dot(&z).dot(wn).dot(&z.t()).dot(&w);
    let r = w.t().dot(&z).dot(wn).dot(&z.t()).dot(design.y());
    dense_inverse(&a).dot(&r).into_vector()
}

/// Two-step GMM: 2SLS first step, then the weighted formula with a dense
/// (Z'DZ)^-1.
pub fn two_step_gmm_oracle(design: &ValidatedDesign<f64>) -> Vec<f64> {
    let w = design.w();
    let z = design.z();
    let b1 = M::col_vec(tsls_oracle(design));
    let u = design.y().sub(&w.dot(&b1));
    let n = design.n();
    let mut zdz = M::zeros(z.cols(), z.cols());
    for i in 0..n {
        let ui2 = u[(i, 0)] * u[(i, 0)];
        for a in 0..z.cols() {
            for b in 0..z.cols() {
                zdz[(a, b)] += ui2 * z[(i, a)] * z[(i, b)];
            }
        }
    }
    let wn = dense_inverse(&zdz);
    gmm_oracle(design, &wn)
}

/// Smallest root of det(A - lambda B) = 0 by grid scan plus bisection.
pub fn smallest_gen_eigenvalue_oracle(a: &M, b: &M) -> f64 {
    let f = |lambda: f64| determinant(&a.sub(&b.scale(lambda)));
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..40 {
        if let Some((l, h)) = first_bracket(&f, lo, hi, 8192) {
            return bisect(&f, l, h);
        }
        lo = 0.0;
        hi *= 4.0;
    }
    panic!("no eigenvalue bracket found up to lambda = {hi}");
}

fn first_bracket(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> Option<(f64, f64)> {
    let mut prev_x = lo;
    let mut prev_f = f(lo);
    for i in 1..=steps {
        let x = lo + (hi - lo) * (i as f64) / (steps as f64);
        let fx = f(x);
        if prev_f == 0.0 {
            return Some((prev_x, prev_x));
        }
        if prev_f.signum() != fx.signum() {
            return Some((prev_x, x));
        }
        prev_x = x;
        prev_f = fx;
    }
    None
}

fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    if lo == hi {
        return lo;
    }
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if flo.signum() == fm.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// LIML kappa by the determinant root scan on the materialized pencil.
pub fn liml_kappa_oracle(design: &ValidatedDesign<f64>) -> f64 {
    let u = Mat::hstack(&[design.y(), design.w2()]);
    let a = u.t().dot(&dense_residual_maker(design.w1())).dot(&u);
    let b = u.t().dot(&dense_residual_maker(&design.z())).dot(&u);
    smallest_gen_eigenvalue_oracle(&a, &b)
}

/// Sandwich (G'G)^-1 G' Omega G (G'G)^-1 with everything dense.
pub fn sandwich_oracle(g: &M, omega: &M) -> M {
    let bread = dense_inverse(&g.t().dot(g));
    bread.dot(&g.t()).dot(omega).dot(g).dot(&bread)
}

pub fn rel_delta(a: &[f64], b: &[f64]) -> f64 {
    yfwl_core::linalg::rel_max_delta_slice(a, b)
}
