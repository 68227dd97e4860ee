//! Partitioned inverse of (W'W) for W = [W1 : W2], computed block by block.
//!
//! Only k1-by-k1 and k2-by-k2 inverses are ever formed; the k-by-k Gram
//! matrix is never inverted directly. With W2~ = M_{W1} W2:
//!
//!   W11 = (W1'W1)^-1 + C S C',   C = (W1'W1)^-1 W1'W2,  S = (W2~'W2~)^-1
//!   W12 = -C S
//!   W22 = S

use crate::error::Result;
use crate::linalg::{gram_inverse, residualize, Mat};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct PartitionedInverse<T> {
    pub w11: Mat<T>,
    pub w12: Mat<T>,
    pub w22: Mat<T>,
}

impl<T: Scalar> PartitionedInverse<T> {
    /// Stack the blocks (with W21 = W12') into the full k-by-k inverse.
    pub fn assemble(&self) -> Mat<T> {
        let k1 = self.w11.rows();
        let k2 = self.w22.rows();
        let mut out = Mat::zeros(k1 + k2, k1 + k2);
        for i in 0..k1 {
            for j in 0..k1 {
                out[(i, j)] = self.w11[(i, j)];
            }
            for j in 0..k2 {
                out[(i, k1 + j)] = self.w12[(i, j)];
                out[(k1 + j, i)] = self.w12[(i, j)];
            }
        }
        for i in 0..k2 {
            for j in 0..k2 {
                out[(k1 + i, k1 + j)] = self.w22[(i, j)];
            }
        }
        out
    }

    /// Quadratic form r' (W'W)^-1 r for a row r split as (r1, r2).
    pub fn row_quad_form(&self, r1: &[T], r2: &[T]) -> T {
        let k1 = self.w11.rows();
        let k2 = self.w22.rows();
        debug_assert!(r1.len() == k1 && r2.len() == k2);
        let mut acc = T::zero();
        for i in 0..k1 {
            for j in 0..k1 {
                acc += r1[i] * self.w11[(i, j)] * r1[j];
            }
        }
        for i in 0..k1 {
            for j in 0..k2 {
                acc += T::of(2.0) * r1[i] * self.w12[(i, j)] * r2[j];
            }
        }
        for i in 0..k2 {
            for j in 0..k2 {
                acc += r2[i] * self.w22[(i, j)] * r2[j];
            }
        }
        acc
    }
}

/// Block inverse of ([W1:W2]'[W1:W2]); requires the stacked design to have
/// full column rank. `k1 = 0` degenerates to W22 = (W2'W2)^-1 alone.
pub fn partitioned_inverse<T: Scalar>(w1: &Mat<T>, w2: &Mat<T>) -> Result<PartitionedInverse<T>> {
    assert_eq!(w1.rows(), w2.rows(), "blocks must share the row count");
    let k1 = w1.cols();

    let w2_tilde = residualize(w1, w2, "W1 (conditioning block)")?;
    let s = gram_inverse(&w2_tilde, "M_{W1} W2 (residualized block of interest)")?;

    if k1 == 0 {
        return Ok(PartitionedInverse {
            w11: Mat::zeros(0, 0),
            w12: Mat::zeros(0, w2.cols()),
            w22: s,
        });
    }

    let a11 = gram_inverse(w1, "W1 (conditioning block)")?;
    let c = a11.dot(&w1.t().dot(w2));
    let cs = c.dot(&s);
    let w11 = a11.add(&cs.dot(&c.t())).symmetrized();
    let w12 = cs.scale(-T::one());
    Ok(PartitionedInverse { w11, w12, w22: s })
}
