//! Column-major dense storage and the column kernels every solver is built on.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::{Precision, Real};

/// Dense real matrix stored column by column.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::eye(n, n)
    }

    /// `rows × cols` matrix with ones on the main diagonal.
    pub fn eye(rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows.min(cols) {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row slices; every row must have the same length.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.as_ref().len());
        let mut out = Self::zeros(m, n);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {n}",
                    r.len()
                )));
            }
            for (j, &v) in r.iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn precision(&self) -> Precision {
        T::PRECISION
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Mutable access to two distinct columns at once, returned in the order asked.
    pub fn col_pair_mut(&mut self, p: usize, q: usize) -> (&mut [T], &mut [T]) {
        assert_ne!(p, q, "column pair must be distinct");
        let m = self.rows;
        if p < q {
            let (lo, hi) = self.data.split_at_mut(q * m);
            (&mut lo[p * m..(p + 1) * m], &mut hi[..m])
        } else {
            let (lo, hi) = self.data.split_at_mut(p * m);
            (&mut hi[..m], &mut lo[q * m..(q + 1) * m])
        }
    }

    pub fn swap_columns(&mut self, p: usize, q: usize) {
        if p != q {
            let (a, b) = self.col_pair_mut(p, q);
            a.swap_with_slice(b);
        }
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Columns `start..end` as a new matrix.
    pub fn columns(&self, start: usize, end: usize) -> Self {
        let data = self.data[start * self.rows..end * self.rows].to_vec();
        Self {
            rows: self.rows,
            cols: end - start,
            data,
        }
    }

    /// Top-left `rows × cols` block.
    pub fn leading_block(&self, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(i, j)])
    }

    /// `A · P` where column `k` of the result is column `perm[k]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.cols);
        let mut data = Vec::with_capacity(self.data.len());
        for &src in perm {
            data.extend_from_slice(self.col(src));
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// `P · A` where row `k` of the result is row `perm[k]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.rows);
        Self::from_fn(self.rows, self.cols, |i, j| self[(perm[i], j)])
    }

    /// Multiplies column `j` by `s[j]`.
    pub fn scale_columns(&mut self, s: &[T]) {
        assert_eq!(s.len(), self.cols);
        for (j, &sj) in s.iter().enumerate() {
            for v in self.col_mut(j) {
                *v *= sj;
            }
        }
    }

    pub fn scaled(&self, alpha: T) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v = *v * alpha);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape());
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// `self · other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let bj = other.col(j);
            let oj = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for (k, &bkj) in bj.iter().enumerate() {
                if bkj == T::zero() {
                    continue;
                }
                for (o, &a) in oj.iter_mut().zip(self.col(k)) {
                    *o += a * bkj;
                }
            }
        }
        out
    }

    /// `selfᵀ · other`.
    pub fn tr_matmul(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "row counts differ");
        Self::from_fn(self.cols, other.cols, |i, j| dot(self.col(i), other.col(j)))
    }

    /// `self · otherᵀ`.
    pub fn matmul_tr(&self, other: &Self) -> Self {
        self.matmul(&other.transpose())
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// Overflow-safe Frobenius norm.
    pub fn frobenius_norm(&self) -> T {
        scaled_norm(&self.data)
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(k) => Err(Error::NonFinite(k % self.rows.max(1), k / self.rows.max(1))),
            None => Ok(()),
        }
    }

    /// Value conversion between precisions (rounds to nearest when narrowing).
    pub fn convert<U: Real>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| U::from_f64(v.to_f64())).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

impl<T: Real> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} ({:?}) [", self.rows, self.cols, T::PRECISION)?;
        for i in 0..self.rows.min(12) {
            write!(f, "  ")?;
            for j in 0..self.cols.min(8) {
                write!(f, "{:>12.5e} ", self[(i, j)].to_f64())?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[inline]
pub(crate) fn dot<T: Real>(x: &[T], y: &[T]) -> T {
    let mut acc = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        acc += a * b;
    }
    acc
}

/// Two-pass ‖x‖₂: find the largest magnitude, then accumulate scaled squares.
pub(crate) fn scaled_norm<T: Real>(x: &[T]) -> T {
    let big = x.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    if big == T::zero() || !big.is_finite() {
        return big;
    }
    let mut ssq = T::zero();
    for &v in x {
        let r = v / big;
        ssq += r * r;
    }
    big * ssq.sqrt()
}

/// ‖X(:, j)‖₂ without intermediate overflow or underflow.
pub fn safe_column_norm<T: Real>(x: &Matrix<T>, j: usize) -> T {
    scaled_norm(x.col(j))
}

/// `X(:, q)ᵀ X(:, p)`; conjugation is the identity over the reals.
pub fn conj_dot<T: Real>(x: &Matrix<T>, p: usize, q: usize) -> T {
    dot(x.col(q), x.col(p))
}

/// Plane rotation acting on columns `p < q` from the right:
/// `x_p ← c·x_p − s·x_q`, `x_q ← s·x_p + c·x_q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneRotation<T> {
    pub p: usize,
    pub q: usize,
    pub c: T,
    pub s: T,
}

impl<T: Real> PlaneRotation<T> {
    pub fn new(p: usize, q: usize, c: T, s: T) -> Self {
        debug_assert!(p < q);
        Self { p, q, c, s }
    }

    pub fn is_identity(&self) -> bool {
        self.c == T::one() && self.s == T::zero()
    }
}

/// In-place right multiplication by a plane rotation. Only columns `p` and `q` change.
pub fn apply_plane_rotation<T: Real>(x: &mut Matrix<T>, rot: &PlaneRotation<T>) {
    let (c, s) = (rot.c, rot.s);
    let (xp, xq) = x.col_pair_mut(rot.p, rot.q);
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let (u, v) = (*a, *b);
        *a = c * u - s * v;
        *b = s * u + c * v;
    }
}

/// `x · 2^e`, exact unless the result leaves the normal range.
pub fn scale_pow2(mut x: f64, mut e: i32) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e)
}

/// Rounds a working-precision matrix to lower precision after an exact
/// power-of-two rescaling. Returns the lower-precision copy `X·2^(−e)` and `e`.
///
/// `e` is zero whenever the largest magnitude already lies in `[2⁻⁶⁴, 2⁶⁴]`;
/// otherwise it is chosen so the largest magnitude lands in `[1, 2)`.
pub fn downcast_scaled(x: &Matrix<f64>) -> (Matrix<f32>, i32) {
    let big = x.max_abs();
    let lo = 2f64.powi(-64);
    let hi = 2f64.powi(64);
    let e = if big == 0.0 || (lo..=hi).contains(&big) {
        0
    } else {
        let mut e = big.log2().floor() as i32;
        while scale_pow2(big, -e) >= 2.0 {
            e += 1;
        }
        while scale_pow2(big, -e) < 1.0 {
            e -= 1;
        }
        e
    };
    let data = x.data.iter().map(|&v| scale_pow2(v, -e) as f32).collect();
    (
        Matrix {
            rows: x.rows,
            cols: x.cols,
            data,
        },
        e,
    )
}

/// Exact widening of a lower-precision matrix.
pub fn upcast(x: &Matrix<f32>) -> Matrix<f64> {
    Matrix {
        rows: x.rows,
        cols: x.cols,
        data: x.data.iter().map(|&v| v as f64).collect(),
    }
}
