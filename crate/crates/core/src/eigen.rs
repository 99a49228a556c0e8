//! Mixed-precision symmetric eigensolver.
//!
//! An approximate eigenbasis from a binary32 Jacobi eigensolver is
//! orthogonalized in binary64 and used to precondition a one-sided Jacobi SVD
//! of `A·Q`. Eigenvalue signs are read off per cluster of equal singular values.

use crate::error::{Error, Result};
use crate::factor::householder_qr;
use crate::jacobi::{one_sided_jacobi, JacobiParams};
use crate::matrix::{dot, downcast_scaled, upcast, Matrix};
use crate::scalar::Real;

pub const SYM_JACOBI_MAXITER: usize = 30;

#[derive(Debug, Clone)]
pub struct EigResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, column `i` belongs to `eigenvalues[i]`.
    pub eigenvectors: Matrix<f64>,
    /// 1-based `(start, len)` clusters of the singular values of `A·Q`.
    pub blocks: Vec<(usize, usize)>,
    /// Whether all eigenvalues share one sign, so the SVD was used directly.
    pub definite: bool,
    pub svd_sweeps: usize,
}

/// Cyclic two-sided Jacobi on a symmetric matrix. Returns the diagonal and the
/// accumulated rotations.
pub fn sym_jacobi<T: Real>(mut a: Matrix<T>, maxiter: usize) -> Result<(Vec<T>, Matrix<T>)> {
    let n = a.cols();
    if a.rows() != n {
        return Err(Error::Dimension(format!("expected a square matrix, got {}x{n}", a.rows())));
    }
    let mut v = Matrix::identity(n);
    let u = T::lit(T::unit_roundoff());
    let tol = u * T::lit((n as f64).sqrt());
    let floor = u * a.frobenius_norm();
    for _ in 0..maxiter {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let scale = (a[(p, p)].abs() * a[(q, q)].abs()).sqrt();
                if apq.abs() <= tol * scale || apq.abs() <= floor {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                let t = sign / (theta.abs() + (T::one() + theta * theta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
                for k in 0..n {
                    let (x, y) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * x - s * y;
                    a[(q, k)] = s * x + c * y;
                }
                a[(p, q)] = T::zero();
                a[(q, p)] = T::zero();
                rotated = true;
            }
        }
        if !rotated {
            return Ok((a.diag(), v));
        }
    }
    Err(Error::NoConvergence {
        what: "symmetric Jacobi",
        limit: maxiter,
    })
}

fn rotate<T: Real>(x: &mut Matrix<T>, p: usize, q: usize, c: T, s: T) {
    let (xp, xq) = x.col_pair_mut(p, q);
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let (u, v) = (*a, *b);
        *a = c * u - s * v;
        *b = s * u + c * v;
    }
}

fn max_asymmetry<T: Real>(a: &Matrix<T>) -> T {
    let n = a.cols();
    let mut m = T::zero();
    for j in 0..n {
        for i in j + 1..n {
            m = m.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    m
}

fn check_symmetric<T: Real>(a: &Matrix<T>, slack: f64) -> Result<()> {
    if a.rows() != a.cols() || a.cols() == 0 {
        return Err(Error::Dimension(format!("expected a nonempty square matrix, got {}x{}", a.rows(), a.cols())));
    }
    a.check_finite()?;
    let asym = max_asymmetry(a).to_f64();
    if asym > slack * T::unit_roundoff() * a.max_abs().to_f64() {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Eigenvectors of a symmetric binary32 matrix; the eigenvalues are discarded.
pub fn low_precision_sym_eig(a: &Matrix<f32>) -> Result<Matrix<f32>> {
    check_symmetric(a, 4.0)?;
    Ok(sym_jacobi(a.clone(), SYM_JACOBI_MAXITER)?.1)
}

/// Groups consecutive entries of a descending sequence whose gap is at most
/// `gap_rtol` times the larger one. Blocks are 1-based `(start, len)`.
pub fn block_structure_detect(sigma: &[f64], gap_rtol: f64) -> Vec<(usize, usize)> {
    let mut blocks = Vec::new();
    let mut start = 0;
    for i in 0..sigma.len() {
        let last = i + 1 == sigma.len();
        if last || sigma[i] - sigma[i + 1] > gap_rtol * sigma[i] {
            blocks.push((start + 1, i + 1 - start));
            start = i + 1;
        }
    }
    blocks
}

pub fn default_gap_rtol(n: usize) -> f64 {
    n as f64 * f64::unit_roundoff().sqrt()
}

pub fn mixed_sym_eig(a: &Matrix<f64>) -> Result<EigResult> {
    mixed_sym_eig_with(a, default_gap_rtol(a.cols()))
}

pub fn mixed_sym_eig_with(a: &Matrix<f64>, gap_rtol: f64) -> Result<EigResult> {
    check_symmetric(a, 4.0)?;
    let n = a.cols();
    let (low, _) = downcast_scaled(a);
    let x_low = low_precision_sym_eig(&low)?;
    let q = householder_qr(&upcast(&x_low))?.q;

    let svd = one_sided_jacobi(&a.matmul(&q), &JacobiParams::default())?;
    if !svd.converged {
        return Err(Error::NoConvergence {
            what: "Jacobi SVD of A·Q",
            limit: JacobiParams::default().maxiter,
        });
    }
    let sigma = svd.sigma;
    let smallest = sigma.len() - 1;
    if sigma[smallest] < n as f64 * f64::unit_roundoff() * sigma[0] {
        return Err(Error::SingularMatrix(smallest));
    }
    let blocks = block_structure_detect(&sigma, gap_rtol);

    let mut x = svd.u;
    let ax = a.matmul(&x);
    let rayleigh: Vec<f64> = (0..n).map(|i| dot(x.col(i), ax.col(i))).collect();
    let definite = rayleigh.iter().all(|&r| r > 0.0) || rayleigh.iter().all(|&r| r < 0.0);

    let mut lambda = vec![0.0; n];
    if definite {
        for i in 0..n {
            lambda[i] = sigma[i].copysign(rayleigh[i]);
        }
    } else {
        for &(start, len) in &blocks {
            let lo = start - 1;
            if len == 1 {
                lambda[lo] = sigma[lo].copysign(rayleigh[lo]);
                continue;
            }
            let basis = x.columns(lo, lo + len);
            let mut small = basis.tr_matmul(&ax.columns(lo, lo + len));
            for j in 0..len {
                for i in j + 1..len {
                    let m = 0.5 * (small[(i, j)] + small[(j, i)]);
                    small[(i, j)] = m;
                    small[(j, i)] = m;
                }
            }
            let (mu, z) = sym_jacobi(small, SYM_JACOBI_MAXITER)?;
            let rotated = basis.matmul(&z);
            let mut order: Vec<usize> = (0..len).collect();
            order.sort_by(|&i, &j| mu[j].abs().total_cmp(&mu[i].abs()));
            for (r, &k) in order.iter().enumerate() {
                lambda[lo + r] = sigma[lo + r].copysign(mu[k]);
                x.col_mut(lo + r).copy_from_slice(rotated.col(k));
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| lambda[i].total_cmp(&lambda[j]));
    x = x.permute_columns(&order);
    Ok(EigResult {
        eigenvalues: order.iter().map(|&k| lambda[k]).collect(),
        eigenvectors: x,
        blocks,
        definite,
        svd_sweeps: svd.sweeps_used,
    })
}
