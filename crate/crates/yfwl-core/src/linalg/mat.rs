//! Dense row-major matrix.
//!
//! Everything in this crate is small in the column dimension (designs have a
//! handful of regressors), so a flat `Vec` with explicit loops is plenty.
//! Vectors are represented as n-by-1 matrices.

use crate::scalar::Scalar;
use std::ops::{Index, IndexMut};

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    /// Build from row-major data. Panics if `data.len() != rows * cols`.
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must match dimensions");
        Mat { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Column of ones (the intercept regressor).
    pub fn ones(rows: usize) -> Self {
        Mat { rows, cols: 1, data: vec![T::one(); rows] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// n-by-1 column vector.
    pub fn col_vec(data: Vec<T>) -> Self {
        Mat { rows: data.len(), cols: 1, data }
    }

    pub fn from_cols(cols: &[Vec<T>]) -> Self {
        let ncols = cols.len();
        let nrows = cols.first().map_or(0, Vec::len);
        for c in cols {
            assert_eq!(c.len(), nrows, "all columns must have equal length");
        }
        Mat::from_fn(nrows, ncols, |i, j| cols[j][i])
    }

    /// Horizontal concatenation; blocks with zero columns are allowed.
    pub fn hstack(blocks: &[&Mat<T>]) -> Self {
        let rows = blocks.first().map_or(0, |b| b.rows);
        for b in blocks {
            assert_eq!(b.rows, rows, "hstack blocks must share the row count");
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let mut off = 0;
        for b in blocks {
            for i in 0..rows {
                for j in 0..b.cols {
                    out[(i, off + j)] = b[(i, j)];
                }
            }
            off += b.cols;
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Contiguous view of an n-by-1 matrix.
    pub fn as_vector(&self) -> &[T] {
        assert_eq!(self.cols, 1, "as_vector requires a single column");
        &self.data
    }

    pub fn into_vector(self) -> Vec<T> {
        assert_eq!(self.cols, 1, "into_vector requires a single column");
        self.data
    }

    pub fn t(&self) -> Mat<T> {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Matrix product. Plain ikj loop; `k` dimensions here are tiny.
    pub fn dot(&self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let lhs_row = i * rhs.cols;
                let rhs_row = k * rhs.cols;
                for j in 0..rhs.cols {
                    out.data[lhs_row + j] += a * rhs.data[rhs_row + j];
                }
            }
        }
        out
    }

    /// A'A without forming the transpose.
    pub fn gram(&self) -> Mat<T> {
        let p = self.cols;
        let mut out = Mat::zeros(p, p);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..p {
                for b in a..p {
                    out[(a, b)] += r[a] * r[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                out[(a, b)] = out[(b, a)];
            }
        }
        out
    }

    pub fn add(&self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: T) -> Mat<T> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&a| a * s).collect() }
    }

    /// Multiply row i by `s[i]` (diagonal scaling from the left).
    pub fn scale_rows(&self, s: &[T]) -> Mat<T> {
        assert_eq!(s.len(), self.rows);
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * s[i])
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &a| m.max(a.abs()))
    }

    pub fn frob_norm(&self) -> T {
        self.data.iter().map(|&a| a * a).sum::<T>().sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// (A + A') / 2, used to clean up numerically almost-symmetric results.
    pub fn symmetrized(&self) -> Mat<T> {
        assert!(self.is_square());
        let half = T::of(0.5);
        Mat::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)]) * half)
    }

    pub fn max_asymmetry(&self) -> T {
        assert!(self.is_square());
        let mut m = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                m = m.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        m
    }

    /// Contiguous square sub-block starting at (`r0`, `c0`).
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Mat<T> {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols);
        Mat::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }
}

impl<T: serde::Serialize> serde::Serialize for Mat<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.rows))?;
        if self.cols == 0 {
            for _ in 0..self.rows {
                seq.serialize_element::<[T]>(&[])?;
            }
        } else {
            for row in self.data.chunks(self.cols) {
                seq.serialize_element(row)?;
            }
        }
        seq.end()
    }
}

impl<T: Scalar> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T: Scalar> IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Largest elementwise gap between two same-shaped matrices, relative to the
/// larger magnitude present (plus a tiny floor so zero matrices compare).
pub fn rel_max_delta<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> T {
    assert_eq!((a.rows, a.cols), (b.rows, b.cols));
    let scale = a.max_abs().max(b.max_abs()) + T::of(1e-30);
    a.sub(b).max_abs() / scale
}

/// Same, for plain slices.
pub fn rel_max_delta_slice<T: Scalar>(a: &[T], b: &[T]) -> T {
    assert_eq!(a.len(), b.len());
    let mut scale = T::of(1e-30);
    let mut delta = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        scale = scale.max(x.abs()).max(y.abs());
        delta = delta.max((x - y).abs());
    }
    delta / scale
}
