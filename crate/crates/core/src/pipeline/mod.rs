//! The mixed-precision SVD driver: preconditioning, a lower-precision SVD
//! stage, the precision switch, and working-precision Jacobi refinement.

mod lowsvd;

use std::fmt;
#[cfg(not(target_arch = "wasm32"))]
use std::time::Instant;
#[cfg(target_arch = "wasm32")]
use web_time::Instant;

use crate::error::{Error, Result};
use crate::factor::householder_qr;
use crate::jacobi::{one_sided_jacobi, one_sided_jacobi_seeded, JacobiOutcome, JacobiParams};
use crate::matrix::{downcast_scaled, scale_pow2, scaled_norm, upcast, Matrix};
use crate::precond::{qr_precondition_with, tall_reduce, PreconditionResult, RrqrMode};

pub use lowsvd::bidiagonal_qr_svd;

/// Ratio of largest to smallest column norm above which the column scaling
/// counts as extremely ill-conditioned for the condition gate.
pub const COLUMN_SCALE_LIMIT: f64 = 1e15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Orthogonality level below which lower-precision Jacobi is used instead of QR-SVD.
    pub tol_alg: f64,
    /// Orthogonality level below which the lower-precision stage is skipped.
    pub tol_orth: f64,
    pub tol_cond: f64,
    pub graded_tail_fraction: f64,
    pub graded_tail_cut: f64,
    /// Largest `σ_max/σ_min` for which `V = XᵀUΣ⁻¹` is formed directly.
    pub v_direct_cond_limit: f64,
}

impl Thresholds {
    /// Defaults for an `n`-column problem.
    pub fn for_order(n: usize) -> Self {
        let n = n.max(1) as f64;
        Self {
            tol_alg: 1e-2,
            tol_orth: 1e-5,
            tol_cond: n.powf(0.25),
            graded_tail_fraction: 1.0 / 3.0,
            graded_tail_cut: 1e-5,
            v_direct_cond_limit: n * 1e4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.tol_alg,
            self.tol_orth,
            self.tol_cond,
            self.graded_tail_fraction,
            self.graded_tail_cut,
            self.v_direct_cond_limit,
        ];
        if all.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Dimension("thresholds must be positive and finite".into()));
        }
        if self.tol_orth >= self.tol_alg {
            return Err(Error::Dimension(format!(
                "tol_orth ({}) must be below tol_alg ({})",
                self.tol_orth, self.tol_alg
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathTaken {
    SkipLowCondSmall,
    SkipLowAlreadyOrthogonal,
    SkipLowGradedTail,
    LowJacobi,
    LowQrSvd,
    /// The lower-precision stage was attempted and failed; refinement ran on `X` directly.
    LowFallback,
    /// Working-precision baseline, no lower-precision stage at all.
    Fixed,
}

impl PathTaken {
    pub fn is_low(self) -> bool {
        matches!(self, PathTaken::LowJacobi | PathTaken::LowQrSvd)
    }

    pub fn label(self) -> &'static str {
        match self {
            PathTaken::SkipLowCondSmall => "SkipLow_CondSmall",
            PathTaken::SkipLowAlreadyOrthogonal => "SkipLow_AlreadyOrthogonal",
            PathTaken::SkipLowGradedTail => "SkipLow_GradedTail",
            PathTaken::LowJacobi => "LowJacobi",
            PathTaken::LowQrSvd => "LowQrSvd",
            PathTaken::LowFallback => "LowFallback",
            PathTaken::Fixed => "Fixed",
        }
    }
}

impl fmt::Display for PathTaken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// How the right singular vectors were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VStrategy {
    /// `V = XᵀUΣ⁻¹`, possibly re-orthogonalized.
    Direct,
    /// QR of `XᵀU` followed by a seeded accumulating Jacobi run.
    QrSeeded,
    /// Rotations accumulated during refinement.
    Accumulated,
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimes {
    pub qr_pre: f64,
    pub low_svd: f64,
    pub switch: f64,
    pub refine: f64,
}

impl StageTimes {
    pub fn total(&self) -> f64 {
        self.qr_pre + self.low_svd + self.switch + self.refine
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineStats {
    pub path_taken: PathTaken,
    pub low_sweeps: usize,
    pub refine_sweeps: usize,
    pub stage_times: StageTimes,
    pub v_strategy: VStrategy,
    /// Sweeps of the extra Jacobi run of [`VStrategy::QrSeeded`], 0 otherwise.
    pub v_sweeps: usize,
}

/// `A = U·diag(sigma)·Vᵀ` with `U` m×n, `V` n×n.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u_factor: Matrix<f64>,
    pub sigma: Vec<f64>,
    pub v_factor: Matrix<f64>,
    pub stats: PipelineStats,
}

/// Result of the lower-precision stage.
#[derive(Debug, Clone)]
pub struct LowStage {
    pub u_low: Matrix<f32>,
    pub path: PathTaken,
    pub sweeps: usize,
}

/// `‖X_tᵀX_t − I‖_max` where `X_t` is the binary32 copy of `X` with unit columns.
pub fn orthogonality_measure(x: &Matrix<f64>) -> Result<f64> {
    let (m, n) = x.shape();
    let mut xt = Matrix::<f32>::zeros(m, n);
    for j in 0..n {
        let nrm = scaled_norm(x.col(j));
        if nrm == 0.0 {
            return Err(Error::ZeroColumn(j));
        }
        for (t, &v) in xt.col_mut(j).iter_mut().zip(x.col(j)) {
            *t = (v / nrm) as f32;
        }
    }
    let gram = xt.tr_matmul(&xt);
    let mut dev = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((gram[(i, j)] as f64 - target).abs());
        }
    }
    Ok(dev)
}

/// Whether enough trailing columns are negligible relative to the largest.
pub fn graded_tail_detect(column_norms: &[f64], thresholds: &Thresholds) -> bool {
    let n = column_norms.len();
    if n == 0 {
        return false;
    }
    let max = column_norms.iter().fold(0.0f64, |m, &v| m.max(v));
    let cut = thresholds.graded_tail_cut * max;
    let tail = column_norms.iter().rev().take_while(|&&v| v < cut).count();
    tail > 0 && tail as f64 >= thresholds.graded_tail_fraction * n as f64
}

/// Left singular vectors of the binary32 copy of `X`, descending.
///
/// Uses one-sided Jacobi when `orth ≤ tol_alg`, bidiagonal QR otherwise.
pub fn low_precision_svd_stage(x: &Matrix<f64>, orth: f64, thresholds: &Thresholds) -> Result<LowStage> {
    let low = downcast_unit_max(x);
    let fail = |e: Error| Error::LowPrecisionFailure(e.to_string());
    if orth <= thresholds.tol_alg {
        let out = one_sided_jacobi(&low, &JacobiParams::default()).map_err(fail)?;
        if !out.converged {
            return Err(Error::LowPrecisionFailure(format!(
                "binary32 Jacobi did not converge in {} sweeps",
                out.sweeps_used
            )));
        }
        Ok(LowStage {
            u_low: out.u,
            path: PathTaken::LowJacobi,
            sweeps: out.sweeps_used,
        })
    } else {
        let u_low = golub_kahan_svd_lower(&low).map_err(fail)?;
        Ok(LowStage {
            u_low,
            path: PathTaken::LowQrSvd,
            sweeps: 0,
        })
    }
}

/// Binary32 copy of `x·2^k` with `k` chosen so the largest magnitude lies in `[1, 2)`.
fn downcast_unit_max(x: &Matrix<f64>) -> Matrix<f32> {
    let big = x.max_abs();
    if big == 0.0 || (1.0..2.0).contains(&big) {
        return downcast_scaled(x).0;
    }
    let mut e = big.log2().floor() as i32;
    while scale_pow2(big, -e) >= 2.0 {
        e += 1;
    }
    while scale_pow2(big, -e) < 1.0 {
        e -= 1;
    }
    let shifted = Matrix::from_fn(x.rows(), x.cols(), |i, j| scale_pow2(x[(i, j)], -e));
    downcast_scaled(&shifted).0
}

/// Left singular vectors (descending) of a square binary32 matrix by
/// bidiagonalization and implicit-shift QR.
pub fn golub_kahan_svd_lower(x: &Matrix<f32>) -> Result<Matrix<f32>> {
    Ok(bidiagonal_qr_svd(x)?.0)
}

/// Orthogonal factor of the working-precision QR of `Xᵀ·U_low`.
pub fn precision_switch_qr(x: &Matrix<f64>, u_low: &Matrix<f32>) -> Result<Matrix<f64>> {
    if x.shape() != u_low.shape() || x.rows() != x.cols() {
        return Err(Error::Dimension(format!(
            "switch expects equal square shapes, got {:?} and {:?}",
            x.shape(),
            u_low.shape()
        )));
    }
    Ok(householder_qr(&x.tr_matmul(&upcast(u_low)))?.q)
}

/// Right singular vectors of `X` together with the left factor and values they pair with.
#[derive(Debug, Clone)]
pub struct RightVectors {
    pub u: Matrix<f64>,
    pub sigma: Vec<f64>,
    pub v: Matrix<f64>,
    pub strategy: VStrategy,
    pub sweeps: usize,
}

/// Forms `V_X` for `X = U·Σ·V_Xᵀ` after refinement of `Y = X·Q`.
pub fn right_vectors(
    outcome: JacobiOutcome<f64>,
    x: &Matrix<f64>,
    q_switch: Option<&Matrix<f64>>,
    thresholds: &Thresholds,
    params: &JacobiParams,
) -> Result<RightVectors> {
    let n = x.cols();
    let JacobiOutcome { u, sigma, v, .. } = outcome;
    if let Some(vy) = v {
        let v = match q_switch {
            Some(q) => q.matmul(&vy),
            None => vy,
        };
        return Ok(RightVectors {
            u,
            sigma,
            v,
            strategy: VStrategy::Accumulated,
            sweeps: 0,
        });
    }

    let smax = sigma[0];
    let smin = sigma[n - 1];
    if smax <= thresholds.v_direct_cond_limit * smin {
        let mut v = x.tr_matmul(&u);
        let inv: Vec<f64> = sigma.iter().map(|s| 1.0 / s).collect();
        v.scale_columns(&inv);
        let defect = v.tr_matmul(&v).sub(&Matrix::identity(n)).max_abs();
        if defect > 64.0 * n as f64 * f64::EPSILON / 2.0 {
            v = householder_qr(&v)?.q;
        }
        return Ok(RightVectors {
            u,
            sigma,
            v,
            strategy: VStrategy::Direct,
            sweeps: 0,
        });
    }

    let v_qr = householder_qr(&x.tr_matmul(&u))?.q;
    let seeded = JacobiParams {
        accumulate_v: true,
        ..*params
    };
    let out = one_sided_jacobi_seeded(&x.matmul(&v_qr), v_qr, &seeded)?;
    if !out.converged {
        return Err(Error::NoConvergence {
            what: "seeded working-precision Jacobi",
            limit: params.maxiter,
        });
    }
    Ok(RightVectors {
        u: out.u,
        sigma: out.sigma,
        v: out.v.expect("accumulated"),
        strategy: VStrategy::QrSeeded,
        sweeps: out.sweeps_used,
    })
}

/// Mixed-precision SVD of `A` (rows ≥ cols, full column rank).
pub fn mixed_svd(a: &Matrix<f64>, thresholds: &Thresholds, params: &JacobiParams) -> Result<SvdResult> {
    mixed_svd_with(a, thresholds, params, RrqrMode::Mixed)
}

/// [`mixed_svd`] with an explicit choice of pivoted-QR precision.
pub fn mixed_svd_with(
    a: &Matrix<f64>,
    thresholds: &Thresholds,
    params: &JacobiParams,
    mode: RrqrMode,
) -> Result<SvdResult> {
    thresholds.validate()?;
    run_pipeline(a, params, mode, Some(thresholds))
}

/// Working-precision pipeline shared by the mixed driver and the baseline.
/// `thresholds = None` disables the lower-precision stage entirely.
pub(crate) fn run_pipeline(
    a: &Matrix<f64>,
    params: &JacobiParams,
    mode: RrqrMode,
    thresholds: Option<&Thresholds>,
) -> Result<SvdResult> {
    let (m, n) = a.shape();
    if n == 0 || m < n {
        return Err(Error::Dimension(format!("SVD needs rows >= cols >= 1, got {m}x{n}")));
    }
    a.check_finite()?;
    let mut times = StageTimes::default();

    let clock = Instant::now();
    let rank = |e: Error| match e {
        Error::SingularMatrix(k) => Error::RankDeficient(k),
        e => e,
    };
    let (q_tall, square) = if m > n {
        let (q, r) = tall_reduce(a)?;
        (Some(q), r)
    } else {
        (None, a.clone())
    };
    let pre = qr_precondition_with(&square, mode).map_err(rank)?;
    let x = &pre.x_factor;
    times.qr_pre = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let (path, low) = match thresholds {
        None => (PathTaken::Fixed, None),
        Some(th) => choose_path(&pre, th)?,
    };
    times.low_svd = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let (q_switch, low_sweeps) = match low {
        Some(stage) => (Some(precision_switch_qr(x, &stage.u_low)?), stage.sweeps),
        None => (None, 0),
    };
    let y = match &q_switch {
        Some(q) => x.matmul(q),
        None => x.clone(),
    };
    times.switch = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let outcome = one_sided_jacobi(&y, params).map_err(rank)?;
    if !outcome.converged {
        return Err(Error::NoConvergence {
            what: "working-precision Jacobi",
            limit: params.maxiter,
        });
    }
    let refine_sweeps = outcome.sweeps_used;
    let default_th = Thresholds::for_order(n);
    let th = thresholds.unwrap_or(&default_th);
    let rv = right_vectors(outcome, x, q_switch.as_ref(), th, params)?;
    let v_factor = pre.map_right(&rv.v);
    let mut u_factor = pre.q1.matmul(&rv.u);
    if let Some(q) = q_tall {
        u_factor = q.matmul(&u_factor);
    }
    times.refine = clock.elapsed().as_secs_f64();

    Ok(SvdResult {
        u_factor,
        sigma: rv.sigma,
        v_factor,
        stats: PipelineStats {
            path_taken: path,
            low_sweeps,
            refine_sweeps,
            stage_times: times,
            v_strategy: rv.strategy,
            v_sweeps: rv.sweeps,
        },
    })
}

/// Applies the gates in order and runs the lower-precision stage if none fires.
fn choose_path(pre: &PreconditionResult, th: &Thresholds) -> Result<(PathTaken, Option<LowStage>)> {
    let norms = &pre.column_norms_of_x;
    let max = norms.iter().fold(0.0f64, |m, &v| m.max(v));
    let min = norms.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    if pre.cond_r_estimate <= th.tol_cond && max > COLUMN_SCALE_LIMIT * min {
        return Ok((PathTaken::SkipLowCondSmall, None));
    }
    let orth = orthogonality_measure(&pre.x_factor)?;
    if orth <= th.tol_orth {
        return Ok((PathTaken::SkipLowAlreadyOrthogonal, None));
    }
    if graded_tail_detect(norms, th) {
        return Ok((PathTaken::SkipLowGradedTail, None));
    }
    match low_precision_svd_stage(&pre.x_factor, orth, th) {
        Ok(stage) => Ok((stage.path, Some(stage))),
        Err(Error::LowPrecisionFailure(_)) => Ok((PathTaken::LowFallback, None)),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests;
