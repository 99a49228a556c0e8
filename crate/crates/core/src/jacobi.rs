//! One-sided Jacobi SVD with row-cyclic pair order and optional de Rijk pivoting.

use crate::error::{Error, Result};
use crate::matrix::{scaled_norm, Matrix, PlaneRotation};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiParams {
    /// Relative orthogonality threshold; `None` means `√rows · u`.
    pub eps_tol: Option<f64>,
    pub maxiter: usize,
    pub accumulate_v: bool,
    pub use_de_rijk: bool,
}

impl Default for JacobiParams {
    fn default() -> Self {
        Self {
            eps_tol: None,
            maxiter: 30,
            accumulate_v: false,
            use_de_rijk: true,
        }
    }
}

impl JacobiParams {
    pub fn accumulating() -> Self {
        Self {
            accumulate_v: true,
            ..Self::default()
        }
    }

    /// Threshold actually used for a matrix with `rows` rows in precision `T`.
    pub fn tolerance<T: Real>(&self, rows: usize) -> f64 {
        self.eps_tol
            .unwrap_or_else(|| (rows as f64).sqrt() * T::unit_roundoff())
    }

    fn validate(&self) -> Result<()> {
        if let Some(t) = self.eps_tol {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Dimension(format!("eps_tol {t} outside (0, 1)")));
            }
        }
        if self.maxiter == 0 {
            return Err(Error::Dimension("maxiter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct JacobiOutcome<T: Real> {
    /// Left singular vectors (normalized columns), ordered like `sigma`.
    pub u: Matrix<T>,
    /// Singular values, descending.
    pub sigma: Vec<T>,
    pub v: Option<Matrix<T>>,
    pub sweeps_used: usize,
    pub rotations_applied: usize,
    pub converged: bool,
    /// Largest |cosine| between any checked column pair, per sweep.
    pub sweep_off: Vec<f64>,
}

/// Rotation that orthogonalizes columns with squared norms `a`, `b` and inner
/// product `c`, taking the angle closest to zero (|θ| ≤ π/4).
///
/// Returns `None` when `c == 0` (already orthogonal) or a norm is zero.
pub fn make_jacobi_rotation<T: Real>(p: usize, q: usize, a: T, b: T, c: T) -> Option<PlaneRotation<T>> {
    if c == T::zero() || a <= T::zero() || b <= T::zero() {
        return None;
    }
    let (np, nq) = (a.sqrt(), b.sqrt());
    let (cs, sn) = rotation_from_cosine(np, nq, c / np / nq);
    Some(PlaneRotation::new(p, q, cs, sn))
}

/// `ζ = (‖x_q‖² − ‖x_p‖²) / (2 x_qᵀx_p)` written in terms of the cosine so it
/// never squares a norm.
#[inline]
fn rotation_from_cosine<T: Real>(np: T, nq: T, cos: T) -> (T, T) {
    let two = T::lit(2.0);
    let zeta = (nq / np - np / nq) / (two * cos);
    let t = if zeta.is_finite() {
        let sign = if zeta >= T::zero() { T::one() } else { -T::one() };
        sign / (zeta.abs() + T::one().hypot(zeta))
    } else {
        T::zero()
    };
    let cs = T::one() / T::one().hypot(t);
    (cs, t * cs)
}

/// Cosine of the angle between two columns with known norms.
#[inline]
fn cosine<T: Real>(xp: &[T], xq: &[T], np: T, nq: T) -> T {
    let prod = np * nq;
    let eps = T::epsilon();
    let safe = prod > T::min_positive_value() / (eps * eps)
        && prod < T::max_value() / T::lit(xp.len().max(1) as f64);
    if safe {
        let mut d = T::zero();
        for (&a, &b) in xp.iter().zip(xq) {
            d += a * b;
        }
        d / np / nq
    } else {
        let (ip, iq) = (T::one() / np, T::one() / nq);
        let mut d = T::zero();
        for (&a, &b) in xp.iter().zip(xq) {
            d += (a * ip) * (b * iq);
        }
        d
    }
}

/// Applies the rotation to the column pair and returns their new norms.
#[inline]
fn rotate_pair<T: Real>(xp: &mut [T], xq: &mut [T], cs: T, sn: T, np: T, nq: T) -> (T, T) {
    let scale = np.max(nq);
    let inv = T::one() / scale;
    let (mut sp, mut sq) = (T::zero(), T::zero());
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let (u, v) = (*a, *b);
        let na = cs * u - sn * v;
        let nb = sn * u + cs * v;
        *a = na;
        *b = nb;
        let (ta, tb) = (na * inv, nb * inv);
        sp += ta * ta;
        sq += tb * tb;
    }
    // squares near underflow lose relative accuracy; fall back to the two-pass norm
    let floor = T::min_positive_value() / T::epsilon();
    let fix = |s: T, col: &[T]| {
        if inv.is_finite() && s > floor {
            scale * s.sqrt()
        } else {
            scaled_norm(col)
        }
    };
    (fix(sp, xp), fix(sq, xq))
}

#[inline]
fn rotate_plain<T: Real>(xp: &mut [T], xq: &mut [T], cs: T, sn: T) {
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let (u, v) = (*a, *b);
        *a = cs * u - sn * v;
        *b = sn * u + cs * v;
    }
}

/// One-sided Jacobi SVD of `x` (rows ≥ cols, no zero columns).
///
/// Non-convergence within `maxiter` sweeps is reported through
/// `converged = false` together with the best factors available.
pub fn one_sided_jacobi<T: Real>(x: &Matrix<T>, params: &JacobiParams) -> Result<JacobiOutcome<T>> {
    let v0 = params.accumulate_v.then(|| Matrix::identity(x.cols()));
    run(x.clone(), v0, params)
}

/// Like [`one_sided_jacobi`] but accumulates the rotations onto `v_seed`, so
/// the returned `v` equals `v_seed · J₁ J₂ ⋯` (then column-sorted).
pub fn one_sided_jacobi_seeded<T: Real>(
    x: &Matrix<T>,
    v_seed: Matrix<T>,
    params: &JacobiParams,
) -> Result<JacobiOutcome<T>> {
    if v_seed.cols() != x.cols() {
        return Err(Error::Dimension(format!(
            "seed has {} columns, matrix has {}",
            v_seed.cols(),
            x.cols()
        )));
    }
    run(x.clone(), Some(v_seed), params)
}

fn run<T: Real>(mut work: Matrix<T>, mut v: Option<Matrix<T>>, params: &JacobiParams) -> Result<JacobiOutcome<T>> {
    params.validate()?;
    let (m, n) = work.shape();
    if n == 0 || m < n {
        return Err(Error::Dimension(format!("one-sided Jacobi needs rows >= cols >= 1, got {m}x{n}")));
    }
    let mut norms: Vec<T> = (0..n).map(|j| scaled_norm(work.col(j))).collect();
    if let Some(j) = norms.iter().position(|&s| s == T::zero()) {
        return Err(Error::ZeroColumn(j));
    }
    let tol = T::lit(params.tolerance::<T>(m));

    let mut sweeps = 0;
    let mut rotations = 0;
    let mut converged = false;
    let mut sweep_off = Vec::new();
    while sweeps < params.maxiter {
        sweeps += 1;
        let mut rotated = false;
        let mut off = T::zero();
        for p in 0..n.saturating_sub(1) {
            if params.use_de_rijk {
                let mut best = p;
                for j in p + 1..n {
                    if norms[j] > norms[best] {
                        best = j;
                    }
                }
                if best != p {
                    work.swap_columns(p, best);
                    norms.swap(p, best);
                    if let Some(v) = v.as_mut() {
                        v.swap_columns(p, best);
                    }
                }
            }
            for q in p + 1..n {
                let (np, nq) = (norms[p], norms[q]);
                let (xp, xq) = work.col_pair_mut(p, q);
                let cos = cosine(xp, xq, np, nq);
                off = off.max(cos.abs());
                if cos.abs() <= tol {
                    continue;
                }
                let (cs, sn) = rotation_from_cosine(np, nq, cos);
                let (a, b) = rotate_pair(xp, xq, cs, sn, np, nq);
                norms[p] = a;
                norms[q] = b;
                if let Some(v) = v.as_mut() {
                    let (vp, vq) = v.col_pair_mut(p, q);
                    rotate_plain(vp, vq, cs, sn);
                }
                rotations += 1;
                rotated = true;
            }
        }
        sweep_off.push(off.to_f64());
        if !rotated {
            converged = true;
            break;
        }
    }

    let mut sigma: Vec<T> = (0..n).map(|j| scaled_norm(work.col(j))).collect();
    if let Some(j) = sigma.iter().position(|&s| s == T::zero()) {
        return Err(Error::ZeroColumn(j));
    }
    for (j, &s) in sigma.iter().enumerate() {
        for e in work.col_mut(j) {
            *e /= s;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap_or(std::cmp::Ordering::Equal));
    let u = work.permute_columns(&order);
    let v = v.map(|v| v.permute_columns(&order));
    sigma = order.iter().map(|&k| sigma[k]).collect();

    Ok(JacobiOutcome {
        u,
        sigma,
        v,
        sweeps_used: sweeps,
        rotations_applied: rotations,
        converged,
        sweep_off,
    })
}
