//! Minimal dense linear algebra: row-major matrices, Cholesky factorization,
//! and the triangular solves the power engine needs.
//!
//! The only numerically serious operation in the crate is factoring an
//! `n x n` working correlation with `n` in the low thousands, so the
//! implementation favors simplicity and cache-friendly row access over
//! blocking. Everything is deterministic: no threading, fixed summation
//! order.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::Error;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    /// A `rows x cols` matrix of zeros.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// The `n x n` identity.
    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from equally long rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "all rows must have the same length");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row `i` as a contiguous slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// All entries in row-major order.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `self + scale * other`, accumulated in place.
    pub fn add_scaled(&mut self, other: &Mat, scale: f64) {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    /// Largest absolute difference to `other` (matrices of equal shape).
    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Dot product with four independent accumulators.
///
/// The unrolling keeps the multiply-adds flowing on wide cores without
/// changing the result across runs (the summation order is fixed).
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let chunks = a.len() / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..chunks {
        let k = 4 * i;
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        tail += a[k] * b[k];
    }
    (s0 + s1) + (s2 + s3) + tail
}

/// Lower-triangular Cholesky factor `L` with `A = L * L'`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Mat,
}

impl Cholesky {
    /// Factors a symmetric positive definite matrix.
    ///
    /// Only the lower triangle of `a` is read. Returns
    /// [`Error::NotPositiveDefinite`] with the failing pivot when a diagonal
    /// entry of the factor would be non-positive or non-finite.
    pub fn new(a: &Mat) -> Result<Self, Error> {
        assert_eq!(a.rows(), a.cols(), "Cholesky needs a square matrix");
        let n = a.rows();
        let mut l = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                // Row-major prefix dot: both slices are contiguous.
                let s = {
                    let (ri, rj) = (l.row(i), l.row(j));
                    dot(&ri[..j], &rj[..j])
                };
                let v = a[(i, j)] - s;
                if i == j {
                    // A NaN pivot fails is_finite, so it is rejected too.
                    if v <= 0.0 || !v.is_finite() {
                        return Err(Error::NotPositiveDefinite { pivot: i });
                    }
                    l[(i, j)] = libm::sqrt(v);
                } else {
                    l[(i, j)] = v / l[(j, j)];
                }
            }
        }
        Ok(Cholesky { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// The lower-triangular factor.
    pub fn factor(&self) -> &Mat {
        &self.l
    }

    /// Solves `L * Y = B` column by column (forward substitution).
    pub fn solve_lower(&self, b: &Mat) -> Mat {
        let n = self.dim();
        assert_eq!(b.rows(), n);
        let k = b.cols();
        let mut y = Mat::zeros(n, k);
        let mut col = vec![0.0; n];
        for c in 0..k {
            for i in 0..n {
                let row = self.l.row(i);
                col[i] = (b[(i, c)] - dot(&row[..i], &col[..i])) / row[i];
            }
            for i in 0..n {
                y[(i, c)] = col[i];
            }
        }
        y
    }

    /// Solves `A * x = b` via the two triangular systems.
    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x = vec![0.0; n];
        for i in 0..n {
            let row = self.l.row(i);
            x[i] = (b[i] - dot(&row[..i], &x[..i])) / row[i];
        }
        // Back substitution with L': column access on L.
        for i in (0..n).rev() {
            let mut s = x[i];
            for (k, &xk) in x.iter().enumerate().skip(i + 1) {
                s -= self.l[(k, i)] * xk;
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    /// The inverse of the factored matrix, built column by column.
    ///
    /// Intended for the small `p x p` information matrices, not for the big
    /// correlation blocks (those are only ever solved against).
    pub fn inverse(&self) -> Mat {
        let n = self.dim();
        let mut inv = Mat::zeros(n, n);
        let mut e = vec![0.0; n];
        for c in 0..n {
            e[c] = 1.0;
            let x = self.solve_vec(&e);
            e[c] = 0.0;
            for i in 0..n {
                inv[(i, c)] = x[i];
            }
        }
        inv
    }

}

/// The Gram matrix `Y' * Y` (`k x k` for an `n x k` input), exactly
/// symmetric by construction.
pub fn gram(y: &Mat) -> Mat {
    let k = y.cols();
    let n = y.rows();
    let mut g = Mat::zeros(k, k);
    // Accumulate per input row; k is small so the transposed access is cheap.
    for r in 0..n {
        let row = y.row(r);
        for i in 0..k {
            let yi = row[i];
            for j in 0..=i {
                g[(i, j)] += yi * row[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            g[(j, i)] = g[(i, j)];
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn mat3() -> Mat {
        // A = B'B + I for a fixed B, guaranteed SPD.
        Mat::from_rows(&[
            vec![5.0, 2.0, 1.0],
            vec![2.0, 6.0, 3.0],
            vec![1.0, 3.0, 7.0],
        ])
    }

    #[test]
    fn factor_roundtrips() {
        let a = mat3();
        let ch = Cholesky::new(&a).unwrap();
        let l = ch.factor();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += l[(i, k)] * l[(j, k)];
                }
                assert!((s - a[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn solve_matches_direct_inverse() {
        let a = mat3();
        let ch = Cholesky::new(&a).unwrap();
        let x = ch.solve_vec(&[1.0, 2.0, 3.0]);
        // Verify A x = b.
        let b = [
            5.0 * x[0] + 2.0 * x[1] + 1.0 * x[2],
            2.0 * x[0] + 6.0 * x[1] + 3.0 * x[2],
            1.0 * x[0] + 3.0 * x[1] + 7.0 * x[2],
        ];
        for (got, want) in b.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = mat3();
        let inv = Cholesky::new(&a).unwrap().inverse();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += a[(i, k)] * inv[(k, j)];
                }
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-12, "entry ({i},{j}) = {s}");
            }
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        match Cholesky::new(&a) {
            Err(Error::NotPositiveDefinite { pivot }) => assert_eq!(pivot, 1),
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn gram_is_y_transpose_y() {
        let y = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        let g = gram(&y);
        assert_eq!(g[(0, 0)], 35.0);
        assert_eq!(g[(0, 1)], 44.0);
        assert_eq!(g[(1, 0)], 44.0);
        assert_eq!(g[(1, 1)], 56.0);
    }

    #[test]
    fn lower_solve_agrees_with_full_solve() {
        let a = mat3();
        let ch = Cholesky::new(&a).unwrap();
        let b = Mat::from_rows(&[vec![1.0], vec![0.5], vec![-2.0]]);
        let y = ch.solve_lower(&b);
        // L y = b by construction.
        let l = ch.factor();
        for i in 0..3 {
            let mut s = 0.0;
            for k in 0..=i {
                s += l[(i, k)] * y[(k, 0)];
            }
            assert!((s - b[(i, 0)]).abs() < 1e-13);
        }
    }

    #[test]
    fn dot_handles_all_tail_lengths() {
        let a: Vec<f64> = (1..=11).map(|v| v as f64).collect();
        for len in 0..=11 {
            let expect: f64 = a[..len].iter().map(|v| v * v).sum();
            assert_eq!(dot(&a[..len], &a[..len]), expect);
        }
    }
}
