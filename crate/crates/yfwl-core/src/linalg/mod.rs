//! Dense linear-algebra kernel: least-squares solves, projection and
//! residual-maker operators, partitioned inverses, and small symmetric
//! eigenproblems. All solves go through orthogonal factorizations.

mod eigen;
mod mat;
mod partitioned;
mod projector;
mod qr;

pub use eigen::{cholesky, forward_solve, smallest_eigenvalue, smallest_gen_eigenvalue, symmetric_eigenvalues};
pub use mat::{rel_max_delta, rel_max_delta_slice, Mat};
pub use partitioned::{partitioned_inverse, PartitionedInverse};
pub use projector::Projector;
pub use qr::Qr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::RANK_REL_TOL;

fn rank_tol<T: Scalar>() -> T {
    T::of(RANK_REL_TOL)
}

/// argmin_b ||y - X b|| column-wise; errors when X is rank deficient.
pub fn solve_ls<T: Scalar>(x: &Mat<T>, y: &Mat<T>, what: &str) -> Result<Mat<T>> {
    Qr::factor(x).solve_ls(y, rank_tol(), what)
}

/// P_X V, computed as X times a least-squares solve (never an N-by-N matrix).
pub fn project<T: Scalar>(x: &Mat<T>, v: &Mat<T>, what: &str) -> Result<Mat<T>> {
    if x.cols() == 0 {
        return Ok(Mat::zeros(v.rows(), v.cols()));
    }
    Ok(x.dot(&solve_ls(x, v, what)?))
}

/// M_X V = V - P_X V.
pub fn residualize<T: Scalar>(x: &Mat<T>, v: &Mat<T>, what: &str) -> Result<Mat<T>> {
    Ok(v.sub(&project(x, v, what)?))
}

/// (X'X)^-1 through the R factor of X.
pub fn gram_inverse<T: Scalar>(x: &Mat<T>, what: &str) -> Result<Mat<T>> {
    Qr::factor(x).gram_inverse(rank_tol(), what)
}

/// Solve the square system A x = b; errors with `SingularSystem` when A is
/// numerically singular.
pub fn solve_square<T: Scalar>(a: &Mat<T>, b: &Mat<T>, what: &str) -> Result<Mat<T>> {
    assert!(a.is_square());
    Qr::factor(a).solve_ls(b, rank_tol(), what).map_err(|e| match e {
        Error::RankDeficient(msg) => Error::SingularSystem(msg),
        other => other,
    })
}

/// Rank of a (tall or square) matrix at the crate's relative threshold.
pub fn rank_of<T: Scalar>(a: &Mat<T>) -> usize {
    if a.cols() == 0 {
        return 0;
    }
    if a.rows() >= a.cols() {
        Qr::factor(a).rank(rank_tol())
    } else {
        Qr::factor(&a.t()).rank(rank_tol())
    }
}

/// Hat-matrix diagonal h_i = x_i' (X'X)^-1 x_i of a design matrix.
pub fn hat_diagonals<T: Scalar>(x: &Mat<T>, what: &str) -> Result<Vec<T>> {
    if x.cols() == 0 {
        return Ok(vec![T::zero(); x.rows()]);
    }
    let ginv = gram_inverse(x, what)?;
    let mut h = Vec::with_capacity(x.rows());
    for i in 0..x.rows() {
        let r = x.row(i);
        let mut acc = T::zero();
        for a in 0..x.cols() {
            for b in 0..x.cols() {
                acc += r[a] * ginv[(a, b)] * r[b];
            }
        }
        h.push(acc);
    }
    Ok(h)
}
