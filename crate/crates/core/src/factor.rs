//! Householder QR, Businger–Golub column-pivoted QR, LQ, the mixed-precision
//! pivoted QR and a condition estimator for triangular factors.
//!
//! The pivoted and unpivoted factorizations share one column-update kernel, so
//! `rrqr_pivoted(A)` and `householder_qr(A·P)` with the same `P` produce
//! bit-identical `R` factors.

use crate::error::{Error, Result};
use crate::matrix::{downcast_scaled, scaled_norm, Matrix};
use crate::scalar::Real;

/// `A·P = Q·R` with `Q` explicit (m×n, orthonormal columns) and `R` n×n upper triangular.
#[derive(Debug, Clone)]
pub struct QrFactorization<T: Real> {
    pub q: Matrix<T>,
    pub r: Matrix<T>,
    /// Column `k` of `A·P` is column `permutation[k]` of `A`.
    pub permutation: Option<Vec<usize>>,
}

impl<T: Real> QrFactorization<T> {
    /// The permutation, or the identity when none was applied.
    pub fn perm(&self) -> Vec<usize> {
        self.permutation
            .clone()
            .unwrap_or_else(|| (0..self.r.cols()).collect())
    }
}

/// `R = L·Q` with `L` lower triangular and `Q` orthogonal.
#[derive(Debug, Clone)]
pub struct LqFactorization<T: Real> {
    pub l: Matrix<T>,
    pub q: Matrix<T>,
}

struct Reflector<T> {
    tau: T,
}

/// In-place Householder triangularization state. The strictly lower part of
/// `a` holds reflector vectors (unit leading entry implied).
struct Householder<T: Real> {
    a: Matrix<T>,
    reflectors: Vec<Reflector<T>>,
}

impl<T: Real> Householder<T> {
    fn new(a: Matrix<T>) -> Result<Self> {
        if a.rows() < a.cols() {
            return Err(Error::Dimension(format!(
                "QR needs rows >= cols, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.cols();
        Ok(Self {
            a,
            reflectors: Vec::with_capacity(n),
        })
    }

    /// Builds the reflector that annihilates `a[k+1.., k]` and applies it to
    /// the trailing columns.
    fn step(&mut self, k: usize) {
        let m = self.a.rows();
        let n = self.a.cols();
        let col = self.a.col_mut(k);
        let alpha = col[k];
        let xnorm = scaled_norm(&col[k + 1..m]);
        let tau = if xnorm == T::zero() {
            T::zero()
        } else {
            let mut beta = alpha.hypot(xnorm);
            if alpha >= T::zero() {
                beta = -beta;
            }
            let tau = (beta - alpha) / beta;
            let scale = alpha - beta;
            for v in &mut col[k + 1..m] {
                *v /= scale;
            }
            col[k] = beta;
            tau
        };
        self.reflectors.push(Reflector { tau });
        if tau == T::zero() {
            return;
        }
        for j in k + 1..n {
            let (v, c) = self.a.col_pair_mut(k, j);
            apply_reflector(&v[k + 1..], tau, &mut c[k..]);
        }
    }

    fn r_factor(&self) -> Matrix<T> {
        let n = self.a.cols();
        Matrix::from_fn(n, n, |i, j| if i <= j { self.a[(i, j)] } else { T::zero() })
    }

    fn q_factor(&self) -> Matrix<T> {
        let (m, n) = self.a.shape();
        let mut q = Matrix::eye(m, n);
        for k in (0..n).rev() {
            let tau = self.reflectors[k].tau;
            if tau == T::zero() {
                continue;
            }
            let v = &self.a.col(k)[k + 1..];
            for j in k..n {
                apply_reflector(v, tau, &mut q.col_mut(j)[k..]);
            }
        }
        q
    }

    /// Flips signs so `R` has a nonnegative diagonal.
    fn finish(self, permutation: Option<Vec<usize>>) -> QrFactorization<T> {
        let mut r = self.r_factor();
        let mut q = self.q_factor();
        for k in 0..r.cols() {
            if r[(k, k)] < T::zero() {
                for j in k..r.cols() {
                    r[(k, j)] = -r[(k, j)];
                }
                for v in q.col_mut(k) {
                    *v = -*v;
                }
            }
        }
        QrFactorization { q, r, permutation }
    }
}

/// `c ← (I − τ·[1; v][1; v]ᵀ)·c`.
#[inline]
fn apply_reflector<T: Real>(v: &[T], tau: T, c: &mut [T]) {
    let (head, tail) = c.split_first_mut().expect("non-empty column");
    let mut w = *head;
    for (&vi, &ci) in v.iter().zip(tail.iter()) {
        w += vi * ci;
    }
    w *= tau;
    *head -= w;
    for (&vi, ci) in v.iter().zip(tail.iter_mut()) {
        *ci -= w * vi;
    }
}

/// Businger–Golub pivot search with partial-norm downdating.
struct PivotState<T> {
    perm: Vec<usize>,
    partial: Vec<T>,
    reference: Vec<T>,
}

impl<T: Real> PivotState<T> {
    fn new(a: &Matrix<T>) -> Self {
        let partial: Vec<T> = (0..a.cols()).map(|j| scaled_norm(a.col(j))).collect();
        Self {
            perm: (0..a.cols()).collect(),
            reference: partial.clone(),
            partial,
        }
    }

    /// Largest remaining partial norm; the lowest index wins ties.
    fn choose(&self, k: usize) -> usize {
        let mut best = k;
        for j in k + 1..self.partial.len() {
            if self.partial[j] > self.partial[best] {
                best = j;
            }
        }
        best
    }

    fn swap_in(&mut self, a: &mut Matrix<T>, k: usize, p: usize) {
        if p != k {
            a.swap_columns(k, p);
            self.perm.swap(k, p);
            self.partial.swap(k, p);
            self.reference.swap(k, p);
        }
    }

    /// Downdates partial norms after step `k`; recomputes any that lost too
    /// much to cancellation.
    fn downdate(&mut self, a: &Matrix<T>, k: usize) {
        let tol = T::epsilon().sqrt();
        for j in k + 1..a.cols() {
            if self.partial[j] == T::zero() {
                continue;
            }
            let ratio = a[(k, j)].abs() / self.partial[j];
            let temp = (T::one() - ratio * ratio).max(T::zero());
            let rel = self.partial[j] / self.reference[j];
            if temp * rel * rel <= tol {
                let fresh = scaled_norm(&a.col(j)[k + 1..]);
                self.partial[j] = fresh;
                self.reference[j] = fresh;
            } else {
                self.partial[j] = self.partial[j] * temp.sqrt();
            }
        }
    }
}

/// Householder QR without pivoting; `R` has a nonnegative diagonal.
pub fn householder_qr<T: Real>(a: &Matrix<T>) -> Result<QrFactorization<T>> {
    let mut h = Householder::new(a.clone())?;
    for k in 0..a.cols() {
        h.step(k);
    }
    Ok(h.finish(None))
}

fn pivoted_sweep<T: Real>(a: &Matrix<T>) -> Result<(Householder<T>, Vec<usize>)> {
    let mut h = Householder::new(a.clone())?;
    let mut piv = PivotState::new(&h.a);
    let n = a.cols();
    for k in 0..n {
        let p = piv.choose(k);
        piv.swap_in(&mut h.a, k, p);
        h.step(k);
        piv.downdate(&h.a, k);
    }
    Ok((h, piv.perm))
}

/// Column-pivoted (rank-revealing) QR: `|R(k,k)|` is nonincreasing.
pub fn rrqr_pivoted<T: Real>(a: &Matrix<T>) -> Result<QrFactorization<T>> {
    let (h, perm) = pivoted_sweep(a)?;
    Ok(h.finish(Some(perm)))
}

/// Only the Businger–Golub column order of `a`; `Q` is never formed.
pub fn pivot_order<T: Real>(a: &Matrix<T>) -> Result<Vec<usize>> {
    Ok(pivoted_sweep(a)?.1)
}

/// Pivoted QR whose permutation is chosen in lower precision, followed by an
/// unpivoted working-precision QR of the permuted matrix.
///
/// The diagonal of `R` is not guaranteed to be monotone.
pub fn mixed_rrqr(a: &Matrix<f64>) -> Result<QrFactorization<f64>> {
    if a.rows() < a.cols() {
        return Err(Error::Dimension(format!(
            "QR needs rows >= cols, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let (low, _) = downcast_scaled(a);
    let perm = pivot_order(&low)?;
    let mut qr = householder_qr(&a.permute_columns(&perm))?;
    qr.permutation = Some(perm);
    Ok(qr)
}

/// `R = L·Q` computed as the QR factorization of `Rᵀ`.
pub fn lq_factor<T: Real>(r: &Matrix<T>) -> Result<LqFactorization<T>> {
    if r.rows() != r.cols() {
        return Err(Error::Dimension(format!(
            "LQ expects a square matrix, got {}x{}",
            r.rows(),
            r.cols()
        )));
    }
    let qr = householder_qr(&r.transpose())?;
    Ok(LqFactorization {
        l: qr.r.transpose(),
        q: qr.q.transpose(),
    })
}

/// Estimate of κ₂ of the column-equilibrated triangle `R·diag(1/‖R(:,j)‖₂)`.
///
/// Combines the diagonal ratio of the equilibrated factor with a few steps of
/// power iteration on `R⁻ᵀR⁻¹` and on `RᵀR`. Returns `+∞` if the triangular
/// solves overflow.
pub fn cond_est_upper_triangular(r: &Matrix<f64>) -> Result<f64> {
    let n = r.cols();
    if r.rows() != n {
        return Err(Error::Dimension("condition estimate needs a square triangle".into()));
    }
    if let Some(k) = (0..n).find(|&k| r[(k, k)] == 0.0) {
        return Err(Error::SingularMatrix(k));
    }
    let mut rs = Matrix::from_fn(n, n, |i, j| if i <= j { r[(i, j)] } else { 0.0 });
    let scale: Vec<f64> = (0..n).map(|j| 1.0 / scaled_norm(rs.col(j))).collect();
    rs.scale_columns(&scale);

    let d = rs.diag();
    let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let dmin = d.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let diag_ratio = dmax / dmin;

    const STEPS: usize = 4;
    let mut inv_norm = 1.0 / dmin;
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..STEPS {
        let y = solve_upper(&rs, &x);
        let ny = scaled_norm(&y);
        if !ny.is_finite() {
            return Ok(f64::INFINITY);
        }
        inv_norm = inv_norm.max(ny);
        let z = solve_upper_tr(&rs, &y);
        let nz = scaled_norm(&z);
        if !nz.is_finite() || nz == 0.0 {
            return Ok(f64::INFINITY);
        }
        x = z.iter().map(|v| v / nz).collect();
    }

    let mut norm = 1.0f64;
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..STEPS {
        let y = upper_mul(&rs, &x);
        norm = norm.max(scaled_norm(&y));
        let z = upper_tr_mul(&rs, &y);
        let nz = scaled_norm(&z);
        if nz == 0.0 {
            break;
        }
        x = z.iter().map(|v| v / nz).collect();
    }
    Ok(diag_ratio.max(norm * inv_norm))
}

fn solve_upper(r: &Matrix<f64>, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = b.to_vec();
    for j in (0..n).rev() {
        x[j] /= r[(j, j)];
        let xj = x[j];
        let col = r.col(j);
        for i in 0..j {
            x[i] -= col[i] * xj;
        }
    }
    x
}

fn solve_upper_tr(r: &Matrix<f64>, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = b.to_vec();
    for j in 0..n {
        let col = r.col(j);
        let mut s = x[j];
        for i in 0..j {
            s -= col[i] * x[i];
        }
        x[j] = s / col[j];
    }
    x
}

fn upper_mul(r: &Matrix<f64>, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut y = vec![0.0; n];
    for j in 0..n {
        let col = r.col(j);
        for i in 0..=j {
            y[i] += col[i] * x[j];
        }
    }
    y
}

fn upper_tr_mul(r: &Matrix<f64>, x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|j| r.col(j)[..=j].iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}
