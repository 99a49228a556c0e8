//! QR preconditioning: pivoted QR, an optional LQ step when `R` is far from
//! diagonal, and the bookkeeping needed to map singular vectors back.

use crate::error::{Error, Result};
use crate::factor::{cond_est_upper_triangular, householder_qr, lq_factor, mixed_rrqr, rrqr_pivoted};
use crate::matrix::{scaled_norm, Matrix};

/// Largest allowed `‖R − diag(R)‖_F / ‖diag(R)‖_F` for `R` to count as nearly diagonal.
pub const OFF_DIAGONAL_LIMIT: f64 = 0.1;

/// How the column permutation of the pivoted QR is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RrqrMode {
    /// Pivot order from a binary32 copy, factorization in binary64.
    #[default]
    Mixed,
    /// Everything in binary64.
    Working,
}

/// `A·P = Q₁·X·Q₂` with `X` square, upper (`R`) or lower (`L`) triangular.
#[derive(Debug, Clone)]
pub struct PreconditionResult {
    pub x_factor: Matrix<f64>,
    pub q1: Matrix<f64>,
    /// Column `k` of `A·P` is column `permutation[k]` of `A`.
    pub permutation: Vec<usize>,
    /// Present iff the LQ step was taken.
    pub q2: Option<Matrix<f64>>,
    pub used_lq: bool,
    pub cond_r_estimate: f64,
    pub column_norms_of_x: Vec<f64>,
}

impl PreconditionResult {
    /// `P·Q₂ᵀ·w`: maps right singular vectors of `X` to those of `A`.
    pub fn map_right(&self, w: &Matrix<f64>) -> Matrix<f64> {
        let w = match &self.q2 {
            Some(q2) => q2.tr_matmul(w),
            None => w.clone(),
        };
        let mut out = Matrix::zeros(w.rows(), w.cols());
        for j in 0..w.cols() {
            for (k, &p) in self.permutation.iter().enumerate() {
                out[(p, j)] = w[(k, j)];
            }
        }
        out
    }

    /// `Q₁·X·Q₂` (equals `A·P` up to rounding).
    pub fn reconstruct(&self) -> Matrix<f64> {
        let qx = self.q1.matmul(&self.x_factor);
        match &self.q2 {
            Some(q2) => qx.matmul(q2),
            None => qx,
        }
    }
}

/// Whether an upper triangular `R` is close enough to diagonal for Jacobi to
/// be applied to it directly.
///
/// Every column must satisfy `‖R(0..j, j)‖₂ ≤ |R(j,j)|` and the total
/// off-diagonal mass must not exceed [`OFF_DIAGONAL_LIMIT`] relative to the diagonal.
pub fn near_diagonal_test(r: &Matrix<f64>) -> Result<bool> {
    let n = r.cols();
    if r.rows() != n {
        return Err(Error::Dimension(format!("expected a square triangle, got {}x{n}", r.rows())));
    }
    if let Some(j) = (0..n).find(|&j| r[(j, j)] == 0.0) {
        return Err(Error::SingularMatrix(j));
    }
    let mut column_ok = true;
    let mut off = Vec::with_capacity(n);
    for j in 0..n {
        let above = scaled_norm(&r.col(j)[..j]);
        column_ok &= above <= r[(j, j)].abs();
        off.push(above);
    }
    let off_mass = scaled_norm(&off);
    let diag_mass = scaled_norm(&r.diag());
    Ok(column_ok && off_mass <= OFF_DIAGONAL_LIMIT * diag_mass)
}

/// Preconditions a square full-rank `A` with the mixed-precision pivoted QR.
pub fn qr_precondition(a: &Matrix<f64>) -> Result<PreconditionResult> {
    qr_precondition_with(a, RrqrMode::Mixed)
}

pub fn qr_precondition_with(a: &Matrix<f64>, mode: RrqrMode) -> Result<PreconditionResult> {
    if a.rows() != a.cols() {
        return Err(Error::Dimension(format!(
            "preconditioning expects a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let qr = match mode {
        RrqrMode::Mixed => mixed_rrqr(a)?,
        RrqrMode::Working => rrqr_pivoted(a)?,
    };
    let permutation = qr.perm();
    let cond_r_estimate = cond_est_upper_triangular(&qr.r)?;
    let (x_factor, q2) = if near_diagonal_test(&qr.r)? {
        (qr.r, None)
    } else {
        let lq = lq_factor(&qr.r)?;
        (lq.l, Some(lq.q))
    };
    let column_norms_of_x = (0..x_factor.cols()).map(|j| scaled_norm(x_factor.col(j))).collect();
    Ok(PreconditionResult {
        x_factor,
        q1: qr.q,
        permutation,
        used_lq: q2.is_some(),
        q2,
        cond_r_estimate,
        column_norms_of_x,
    })
}

/// Thin QR of a tall matrix: returns `(Q, R)` with `A = Q·R`.
pub fn tall_reduce(a: &Matrix<f64>) -> Result<(Matrix<f64>, Matrix<f64>)> {
    let qr = householder_qr(a)?;
    Ok((qr.q, qr.r))
}
