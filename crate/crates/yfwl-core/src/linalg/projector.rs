//! Orthogonal projector onto the column space of a basis matrix.
//!
//! P_X = X (X'X)^-1 X' and the residual maker M_X = I - P_X are held
//! implicitly: applying either is a least-squares solve against the stored
//! QR factorization. The dense N-by-N form exists only for small N, behind a
//! configurable cap.

use crate::error::{Error, Result};
use crate::linalg::{Mat, Qr};
use crate::scalar::Scalar;
use crate::{DENSE_PROJECTOR_CAP, RANK_REL_TOL};

pub struct Projector<T> {
    basis: Mat<T>,
    qr: Qr<T>,
    dense_cap: usize,
}

impl<T: Scalar> Projector<T> {
    /// Requires a full-column-rank basis.
    pub fn new(basis: Mat<T>) -> Result<Self> {
        Self::with_cap(basis, DENSE_PROJECTOR_CAP)
    }

    pub fn with_cap(basis: Mat<T>, dense_cap: usize) -> Result<Self> {
        let qr = Qr::factor(&basis);
        if basis.cols() > 0 {
            qr.check_full_rank(T::of(RANK_REL_TOL)).map_err(|j| {
                Error::RankDeficient(format!("projector basis: column {j} is linearly dependent"))
            })?;
        }
        Ok(Projector { basis, qr, dense_cap })
    }

    pub fn basis(&self) -> &Mat<T> {
        &self.basis
    }

    /// P_X v.
    pub fn project(&self, v: &Mat<T>) -> Mat<T> {
        if self.basis.cols() == 0 {
            return Mat::zeros(v.rows(), v.cols());
        }
        let b = self
            .qr
            .solve_ls(v, T::of(RANK_REL_TOL), "projector basis")
            .expect("rank was checked at construction");
        self.basis.dot(&b)
    }

    /// M_X v = v - P_X v.
    pub fn residualize(&self, v: &Mat<T>) -> Mat<T> {
        v.sub(&self.project(v))
    }

    /// Materialized P_X, only for row counts at or below the cap.
    pub fn dense(&self) -> Result<Mat<T>> {
        let n = self.basis.rows();
        if n > self.dense_cap {
            return Err(Error::DenseCapExceeded { n, cap: self.dense_cap });
        }
        Ok(self.project(&Mat::identity(n)))
    }
}
