//! Small dense linear algebra for oracles and tests.
//!
//! Nothing here is used on the sparse production path. Sizes are capped at
//! [`DENSE_LIMIT`] rows so the cubic routines cannot be pointed at a full network.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::{diff_norm1, Scalar};
use crate::spectral::PowerOptions;

pub const DENSE_LIMIT: usize = 2000;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            values: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        Self { rows, cols, values }
    }

    /// Builds a matrix whose `j`-th column is `columns[j]`.
    pub fn from_columns(rows: usize, columns: &[Vec<T>]) -> Self {
        assert!(columns.iter().all(|c| c.len() == rows), "column length");
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (a, b)| acc + *a * *b)
            })
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape");
        Self {
            rows: self.rows,
            cols: self.cols,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }

    /// Copy of the submatrix selected by `row_idx` x `col_idx`.
    pub fn select(&self, row_idx: &[usize], col_idx: &[usize]) -> Self {
        Self::from_fn(row_idx.len(), col_idx.len(), |i, j| {
            self[(row_idx[i], col_idx[j])]
        })
    }

    pub fn sum(&self) -> T {
        self.values.iter().fold(T::zero(), |a, v| a + *v)
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |a, i| a + self[(i, i)])
    }

    pub fn column_sums(&self) -> Vec<T> {
        let mut sums = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(i)) {
                *s += *v;
            }
        }
        sums
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |a, v| a.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape");
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |a, (x, y)| a.max((*x - *y).abs()))
    }

    /// Same matrix with the diagonal set to zero.
    pub fn without_diagonal(&self) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m[(i, i)] = T::zero();
        }
        m
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.values[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.values[i * self.cols + j]
    }
}

fn guard(n: usize) -> Result<()> {
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: DENSE_LIMIT,
        });
    }
    Ok(())
}

/// Solves `A X = B` by Gaussian elimination with partial pivoting.
///
/// A pivot of magnitude at most `1e-14 * max|A|` is reported as singular.
pub fn solve<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            actual: a.cols,
        });
    }
    if b.rows != a.rows {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            actual: b.rows,
        });
    }
    let n = a.rows;
    guard(n)?;
    let threshold = T::lit(1e-14) * a.max_abs().max(T::one());
    let mut lu = a.clone();
    let mut x = b.clone();
    let m = b.cols;

    for k in 0..n {
        // Deterministic pivot: first row holding the largest magnitude.
        let mut p = k;
        for i in k + 1..n {
            if lu[(i, k)].abs() > lu[(p, k)].abs() {
                p = i;
            }
        }
        let pivot = lu[(p, k)];
        if pivot.abs() <= threshold {
            return Err(Error::Singular {
                column: k,
                pivot: pivot.as_f64(),
            });
        }
        if p != k {
            for j in 0..n {
                lu.values.swap(k * n + j, p * n + j);
            }
            for j in 0..m {
                x.values.swap(k * m + j, p * m + j);
            }
        }
        for i in k + 1..n {
            let f = lu[(i, k)] / pivot;
            if f == T::zero() {
                continue;
            }
            lu[(i, k)] = T::zero();
            for j in k + 1..n {
                let v = lu[(k, j)];
                lu[(i, j)] -= f * v;
            }
            for j in 0..m {
                let v = x[(k, j)];
                x[(i, j)] -= f * v;
            }
        }
    }
    for k in (0..n).rev() {
        let pivot = lu[(k, k)];
        for j in 0..m {
            let mut acc = x[(k, j)];
            for c in k + 1..n {
                acc -= lu[(k, c)] * x[(c, j)];
            }
            x[(k, j)] = acc / pivot;
        }
    }
    Ok(x)
}

/// Dominant eigenpair of a (non-negative) square matrix by power iteration.
///
/// The iterate is kept at unit 1-norm; the eigenvalue is `sum(A v) / sum(v)`.
pub fn leading_eigenpair<T: Scalar>(
    a: &DenseMatrix<T>,
    opts: &PowerOptions<T>,
) -> Result<(T, Vec<T>)> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            actual: a.cols,
        });
    }
    let n = a.rows;
    guard(n)?;
    let mut v = vec![T::one() / T::from_count(n); n];
    let mut residual = T::infinity();
    for _ in 0..opts.max_iter {
        let mut y = a.mul_vec(&v);
        let s: T = y.iter().copied().sum();
        if s == T::zero() {
            return Ok((T::zero(), v));
        }
        for e in y.iter_mut() {
            *e /= s;
        }
        residual = diff_norm1(&y, &v);
        v = y;
        if residual < opts.tol {
            return Ok((s, v));
        }
    }
    Err(Error::NotConverged {
        what: "dense power iteration",
        iterations: opts.max_iter,
        residual: residual.as_f64(),
    })
}

/// Largest magnitude of any 2x2 minor; zero (to rounding) exactly for rank <= 1.
pub fn rank_one_check<T: Scalar>(m: &DenseMatrix<T>) -> T {
    let mut worst = T::zero();
    for i in 0..m.rows {
        for i2 in i + 1..m.rows {
            for j in 0..m.cols {
                for j2 in j + 1..m.cols {
                    let minor = m[(i, j)] * m[(i2, j2)] - m[(i, j2)] * m[(i2, j)];
                    worst = worst.max(minor.abs());
                }
            }
        }
    }
    worst
}
