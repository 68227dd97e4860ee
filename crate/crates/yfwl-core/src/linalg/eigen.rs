//! Symmetric factorizations and eigenvalues: Cholesky, cyclic Jacobi, and
//! the smallest generalized eigenvalue of a symmetric-definite pencil.
//!
//! The pencils here are tiny (order k2 + 1), so Jacobi sweeps are both simple
//! and accurate.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Scalar;

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky<T: Scalar>(a: &Mat<T>, what: &str) -> Result<Mat<T>> {
    assert!(a.is_square());
    let n = a.rows();
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if s <= T::zero() || !s.is_finite() {
                    return Err(Error::NotPositiveDefinite(format!(
                        "{what}: pivot {i} is {}",
                        s.as_f64()
                    )));
                }
                l[(i, j)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Solve L X = B for lower-triangular L.
pub fn forward_solve<T: Scalar>(l: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    let n = l.rows();
    let m = b.cols();
    let mut x = b.clone();
    for col in 0..m {
        for i in 0..n {
            let mut s = x[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
    }
    x
}

/// All eigenvalues of a symmetric matrix by cyclic Jacobi, ascending.
pub fn symmetric_eigenvalues<T: Scalar>(a: &Mat<T>) -> Vec<T> {
    assert!(a.is_square());
    let n = a.rows();
    if n == 0 {
        return Vec::new();
    }
    let mut m = a.symmetrized();
    let tol = T::epsilon() * T::of(16.0);
    for _sweep in 0..64 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(m[(i, j)].abs());
            }
        }
        let scale = (0..n).fold(T::zero(), |s, i| s.max(m[(i, i)].abs())).max(off);
        if off <= tol * scale || scale == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (T::of(2.0) * apq);
                let t = {
                    let s = if theta >= T::zero() { T::one() } else { -T::one() };
                    s / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| m[(i, i)]).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn smallest_eigenvalue<T: Scalar>(a: &Mat<T>) -> T {
    symmetric_eigenvalues(a)[0]
}

/// Smallest lambda with det(A - lambda B) = 0, for symmetric A and SPD B.
///
/// Reduces to the ordinary symmetric problem for C = L^-1 A L^-T where
/// B = L L'.
pub fn smallest_gen_eigenvalue<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Result<T> {
    assert_eq!(a.rows(), b.rows());
    assert!(a.is_square() && b.is_square());
    let l = cholesky(b, "generalized eigenvalue metric B")?;
    // C = L^-1 A L^-T via two triangular solves
    let tmp = forward_solve(&l, a);
    let c = forward_solve(&l, &tmp.t());
    Ok(smallest_eigenvalue(&c.symmetrized()))
}
