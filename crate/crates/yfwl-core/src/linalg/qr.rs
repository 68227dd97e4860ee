//! Householder QR factorization with rank detection.
//!
//! Every least-squares solve in the crate goes through this factorization
//! rather than normal-equation inversion. Rank deficiency is detected on the
//! R diagonal at a relative threshold.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Scalar;

/// Packed Householder factorization of an n-by-p matrix, n >= p.
///
/// R sits on and above the diagonal of `factors`; the reflector vectors
/// (normalized so their leading entry is one) sit below it, with the scaling
/// coefficients in `taus`.
#[derive(Clone, Debug)]
pub struct Qr<T> {
    factors: Mat<T>,
    taus: Vec<T>,
    rows: usize,
    cols: usize,
}

impl<T: Scalar> Qr<T> {
    pub fn factor(a: &Mat<T>) -> Self {
        let (n, p) = (a.rows(), a.cols());
        assert!(n >= p, "QR requires at least as many rows as columns");
        let mut f = a.clone();
        let mut taus = vec![T::zero(); p];

        for j in 0..p {
            let mut sigma = T::zero();
            for i in j..n {
                sigma += f[(i, j)] * f[(i, j)];
            }
            sigma = sigma.sqrt();
            if sigma == T::zero() {
                continue; // exactly dependent column, R[j,j] stays zero
            }
            let x0 = f[(j, j)];
            // sign choice avoids cancellation in v0 = x0 - alpha
            let alpha = if x0 >= T::zero() { -sigma } else { sigma };
            let v0 = x0 - alpha;
            taus[j] = -v0 / alpha;
            for i in (j + 1)..n {
                let w = f[(i, j)] / v0;
                f[(i, j)] = w;
            }
            f[(j, j)] = alpha;

            for c in (j + 1)..p {
                let mut s = f[(j, c)];
                for i in (j + 1)..n {
                    s += f[(i, j)] * f[(i, c)];
                }
                s *= taus[j];
                f[(j, c)] -= s;
                for i in (j + 1)..n {
                    let w = f[(i, j)];
                    f[(i, c)] -= s * w;
                }
            }
        }

        Qr { factors: f, taus, rows: n, cols: p }
    }

    pub fn r_diag(&self) -> Vec<T> {
        (0..self.cols).map(|j| self.factors[(j, j)]).collect()
    }

    /// Number of R-diagonal entries above `rel_tol` times the largest one.
    pub fn rank(&self, rel_tol: T) -> usize {
        let diag = self.r_diag();
        let rmax = diag.iter().fold(T::zero(), |m, d| m.max(d.abs()));
        if rmax == T::zero() {
            return 0;
        }
        diag.iter().filter(|d| d.abs() >= rel_tol * rmax).count()
    }

    /// Err carries the first offending column index.
    pub fn check_full_rank(&self, rel_tol: T) -> std::result::Result<(), usize> {
        let diag = self.r_diag();
        let rmax = diag.iter().fold(T::zero(), |m, d| m.max(d.abs()));
        for (j, d) in diag.iter().enumerate() {
            if d.abs() < rel_tol * rmax || rmax == T::zero() {
                return Err(j);
            }
        }
        Ok(())
    }

    /// Q'B, computed by applying the stored reflectors in order.
    pub fn apply_qt(&self, b: &Mat<T>) -> Mat<T> {
        assert_eq!(b.rows(), self.rows);
        let mut out = b.clone();
        for j in 0..self.cols {
            if self.taus[j] == T::zero() {
                continue;
            }
            self.apply_reflector(j, &mut out);
        }
        out
    }

    /// QB (thin Q applied from the left): reflectors in reverse order.
    pub fn apply_q(&self, b: &Mat<T>) -> Mat<T> {
        assert_eq!(b.rows(), self.rows);
        let mut out = b.clone();
        for j in (0..self.cols).rev() {
            if self.taus[j] == T::zero() {
                continue;
            }
            self.apply_reflector(j, &mut out);
        }
        out
    }

    fn apply_reflector(&self, j: usize, b: &mut Mat<T>) {
        let tau = self.taus[j];
        for c in 0..b.cols() {
            let mut s = b[(j, c)];
            for i in (j + 1)..self.rows {
                s += self.factors[(i, j)] * b[(i, c)];
            }
            s *= tau;
            b[(j, c)] -= s;
            for i in (j + 1)..self.rows {
                let w = self.factors[(i, j)];
                b[(i, c)] -= s * w;
            }
        }
    }

    /// Back-substitution against R on the top p rows of `c`.
    fn back_substitute(&self, c: &Mat<T>) -> Mat<T> {
        let p = self.cols;
        let m = c.cols();
        let mut x = Mat::zeros(p, m);
        for col in 0..m {
            for i in (0..p).rev() {
                let mut s = c[(i, col)];
                for k in (i + 1)..p {
                    s -= self.factors[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = s / self.factors[(i, i)];
            }
        }
        x
    }

    /// Least-squares solve, failing loudly on rank deficiency.
    pub fn solve_ls(&self, y: &Mat<T>, rel_tol: T, what: &str) -> Result<Mat<T>> {
        if self.cols == 0 {
            return Ok(Mat::zeros(0, y.cols()));
        }
        self.check_full_rank(rel_tol)
            .map_err(|j| Error::RankDeficient(format!("{what}: column {j} is linearly dependent")))?;
        let c = self.apply_qt(y);
        Ok(self.back_substitute(&c))
    }

    /// Inverse of R, upper triangular.
    pub fn r_inverse(&self) -> Mat<T> {
        self.back_substitute(&Mat::identity_padded(self.rows, self.cols))
    }

    /// (X'X)^-1 as R^-1 R^-T, avoiding the normal equations.
    pub fn gram_inverse(&self, rel_tol: T, what: &str) -> Result<Mat<T>> {
        self.check_full_rank(rel_tol)
            .map_err(|j| Error::RankDeficient(format!("{what}: column {j} is linearly dependent")))?;
        let rinv = self.r_inverse();
        Ok(rinv.dot(&rinv.t()).symmetrized())
    }

    /// Thin orthonormal factor Q (n-by-p).
    pub fn thin_q(&self) -> Mat<T> {
        self.apply_q(&Mat::identity_padded(self.rows, self.cols))
    }
}

impl<T: Scalar> Mat<T> {
    /// n-by-p matrix holding I_p on top and zeros below.
    pub(crate) fn identity_padded(rows: usize, cols: usize) -> Self {
        Mat::from_fn(rows, cols, |i, j| if i == j { T::one() } else { T::zero() })
    }
}
