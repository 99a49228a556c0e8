//! Golub–Kahan bidiagonalization followed by implicit-shift bidiagonal QR.
//! Only the left singular vectors are accumulated.

use crate::error::{Error, Result};
use crate::matrix::{scaled_norm, Matrix};
use crate::scalar::Real;

/// Householder vector for `x`: returns `(v, tau, beta)` with `v[0] = 1` and
/// `(I − tau·v·vᵀ)·x = beta·e₁`.
fn house<T: Real>(x: &[T]) -> (Vec<T>, T, T) {
    let mut v = x.to_vec();
    v[0] = T::one();
    let alpha = x[0];
    let tail = scaled_norm(&x[1..]);
    if tail == T::zero() {
        return (v, T::zero(), alpha);
    }
    let norm = alpha.hypot(tail);
    let beta = if alpha >= T::zero() { -norm } else { norm };
    let tau = (beta - alpha) / beta;
    let scale = T::one() / (alpha - beta);
    for e in v.iter_mut().skip(1) {
        *e *= scale;
    }
    (v, tau, beta)
}

fn givens<T: Real>(f: T, g: T) -> (T, T, T) {
    if g == T::zero() {
        (T::one(), T::zero(), f)
    } else if f == T::zero() {
        (T::zero(), T::one(), g)
    } else {
        let r = f.hypot(g);
        (f / r, g / r, r)
    }
}

fn rotate_cols<T: Real>(u: &mut Matrix<T>, i: usize, k: usize, c: T, s: T) {
    let (ui, uk) = u.col_pair_mut(i, k);
    for (a, b) in ui.iter_mut().zip(uk.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x + s * y;
        *b = c * y - s * x;
    }
}

/// Reduces square `a` to upper bidiagonal form `a = Q·B·Pᵀ`; returns `(Q, d, e)`.
fn bidiagonalize<T: Real>(mut a: Matrix<T>) -> (Matrix<T>, Vec<T>, Vec<T>) {
    let n = a.cols();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n.saturating_sub(1)];
    let mut left = Vec::with_capacity(n);
    for k in 0..n {
        let (v, tau, beta) = house(&a.col(k)[k..]);
        d[k] = beta;
        for j in k + 1..n {
            let c = &mut a.col_mut(j)[k..];
            let w = tau * v.iter().zip(c.iter()).map(|(x, y)| *x * *y).sum::<T>();
            for (ci, vi) in c.iter_mut().zip(&v) {
                *ci -= w * *vi;
            }
        }
        left.push((v, tau));
        if k + 1 < n {
            let row: Vec<T> = (k + 1..n).map(|j| a[(k, j)]).collect();
            let (v, tau, beta) = house(&row);
            e[k] = beta;
            for i in k + 1..n {
                let w = tau * v.iter().enumerate().map(|(t, vt)| *vt * a[(i, k + 1 + t)]).sum::<T>();
                for (t, vt) in v.iter().enumerate() {
                    a[(i, k + 1 + t)] -= w * *vt;
                }
            }
        }
    }
    let mut q = Matrix::identity(n);
    for (k, (v, tau)) in left.iter().enumerate().rev() {
        if *tau == T::zero() {
            continue;
        }
        for j in k..n {
            let c = &mut q.col_mut(j)[k..];
            let w = *tau * v.iter().zip(c.iter()).map(|(x, y)| *x * *y).sum::<T>();
            for (ci, vi) in c.iter_mut().zip(v) {
                *ci -= w * *vi;
            }
        }
    }
    (q, d, e)
}

/// Left singular vectors and singular values (descending) of a square matrix,
/// computed entirely in precision `T`.
pub fn bidiagonal_qr_svd<T: Real>(x: &Matrix<T>) -> Result<(Matrix<T>, Vec<T>)> {
    let n = x.cols();
    if x.rows() != n || n == 0 {
        return Err(Error::Dimension(format!("expected a nonempty square matrix, got {}x{n}", x.rows())));
    }
    x.check_finite()?;
    let (mut u, mut d, mut e) = bidiagonalize(x.clone());
    let tol = T::lit(4.0 * T::unit_roundoff());
    let limit = 30 * n;
    let mut iterations = 0;
    let mut hi = n - 1;
    while hi > 0 {
        for i in 0..hi {
            if e[i].abs() <= tol * (d[i].abs() + d[i + 1].abs()) {
                e[i] = T::zero();
            }
        }
        if e[hi - 1] == T::zero() {
            hi -= 1;
            continue;
        }
        let mut lo = hi - 1;
        while lo > 0 && e[lo - 1] != T::zero() {
            lo -= 1;
        }
        iterations += 1;
        if iterations > limit {
            return Err(Error::NoConvergence {
                what: "bidiagonal QR",
                limit,
            });
        }
        if let Some(i) = (lo..hi).find(|&i| d[i] == T::zero()) {
            chase_row(&mut u, &mut d, &mut e, i, hi);
            continue;
        }
        if d[hi] == T::zero() {
            chase_col(&mut d, &mut e, lo, hi);
            continue;
        }
        qr_step(&mut u, &mut d, &mut e, lo, hi);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].abs().partial_cmp(&d[a].abs()).unwrap());
    let sigma = order.iter().map(|&k| d[k].abs()).collect();
    Ok((u.permute_columns(&order), sigma))
}

/// Zero diagonal at `i`: rotate row `i` against rows below to clear `e[i]`.
fn chase_row<T: Real>(u: &mut Matrix<T>, d: &mut [T], e: &mut [T], i: usize, hi: usize) {
    let mut f = e[i];
    e[i] = T::zero();
    for k in i + 1..=hi {
        let (c, s, r) = givens(d[k], f);
        d[k] = r;
        rotate_cols(u, k, i, c, s);
        if k < hi {
            f = -s * e[k];
            e[k] = c * e[k];
        }
    }
}

/// Zero diagonal at `hi`: rotate column `hi` against columns to the left.
fn chase_col<T: Real>(d: &mut [T], e: &mut [T], lo: usize, hi: usize) {
    let mut f = e[hi - 1];
    e[hi - 1] = T::zero();
    for k in (lo..hi).rev() {
        let (c, s, r) = givens(d[k], f);
        d[k] = r;
        if k > lo {
            f = -s * e[k - 1];
            e[k - 1] = c * e[k - 1];
        }
    }
}

/// One implicit QR step with a Wilkinson shift on the unreduced block `lo..=hi`.
fn qr_step<T: Real>(u: &mut Matrix<T>, d: &mut [T], e: &mut [T], lo: usize, hi: usize) {
    let a = d[hi - 1] * d[hi - 1] + if hi - 1 > lo { e[hi - 2] * e[hi - 2] } else { T::zero() };
    let b = d[hi - 1] * e[hi - 1];
    let c = d[hi] * d[hi] + e[hi - 1] * e[hi - 1];
    let half = T::lit(0.5) * (a - c);
    let root = half.hypot(b);
    let denom = half + if half >= T::zero() { root } else { -root };
    let shift = if denom == T::zero() { c } else { c - b * b / denom };

    let mut y = d[lo] * d[lo] - shift;
    let mut z = d[lo] * e[lo];
    for k in lo..hi {
        let (cs, sn, r) = givens(y, z);
        if k > lo {
            e[k - 1] = r;
        }
        y = cs * d[k] + sn * e[k];
        e[k] = cs * e[k] - sn * d[k];
        z = sn * d[k + 1];
        d[k + 1] = cs * d[k + 1];

        let (cs, sn, r) = givens(y, z);
        d[k] = r;
        y = cs * e[k] + sn * d[k + 1];
        d[k + 1] = cs * d[k + 1] - sn * e[k];
        if k + 1 < hi {
            z = sn * e[k + 1];
            e[k + 1] = cs * e[k + 1];
        }
        rotate_cols(u, k, k + 1, cs, sn);
    }
    e[hi - 1] = y;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
    }

    fn orth_defect<T: Real>(q: &Matrix<T>) -> f64 {
        let q = q.convert::<f64>();
        q.tr_matmul(&q).sub(&Matrix::identity(q.cols())).max_abs()
    }

    #[test]
    fn diagonal_gives_identity() {
        let (u, s) = bidiagonal_qr_svd(&Matrix::from_diag(&[2.0f32, 1.0])).unwrap();
        assert_eq!(s, vec![2.0, 1.0]);
        assert_eq!(u.max_abs(), 1.0);
        assert!(orth_defect(&u) == 0.0 && u[(0, 0)].abs() == 1.0);
    }

    #[test]
    fn golden_ratio_in_single() {
        let x = Matrix::from_rows(&[[1.0f32, 1.0], [0.0, 1.0]]).unwrap();
        let (_, s) = bidiagonal_qr_svd(&x).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let u_low = f32::unit_roundoff();
        assert!((s[0] as f64 - phi).abs() <= 4.0 * u_low * phi);
        assert!((s[1] as f64 - 1.0 / phi).abs() <= 4.0 * u_low / phi);
    }

    #[test]
    fn orthogonal_input_has_unit_values() {
        let q = crate::factor::householder_qr(&random(24, 3)).unwrap().q.convert::<f32>();
        let (_, s) = bidiagonal_qr_svd(&q).unwrap();
        let bound = 4.0 * 24.0 * f32::unit_roundoff();
        assert!(s.iter().all(|v| (*v as f64 - 1.0).abs() <= bound), "{s:?}");
    }

    #[test]
    fn random_factors_reconstruct() {
        for seed in 0..5 {
            let n = 32;
            let a = random(n, seed);
            let (u, s) = bidiagonal_qr_svd(&a).unwrap();
            assert!(orth_defect(&u) <= 64.0 * n as f64 * f64::unit_roundoff());
            // ‖Uᵀ A‖ rows have norms sigma
            let ua = u.tr_matmul(&a);
            for (i, sv) in s.iter().enumerate() {
                let rn = ua.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((rn - sv).abs() <= 1e-12 * s[0]);
            }
            assert!(s.windows(2).all(|w| w[0] >= w[1]));

            let (u32, _) = bidiagonal_qr_svd(&a.convert::<f32>()).unwrap();
            assert!(orth_defect(&u32) <= 64.0 * n as f64 * f32::unit_roundoff());
        }
    }

    #[test]
    fn handles_zero_diagonal() {
        let x = Matrix::from_rows(&[[0.0, 1.0, 0.0], [0.0, 0.0, 2.0], [0.0, 0.0, 3.0]]).unwrap();
        let (u, s) = bidiagonal_qr_svd(&x).unwrap();
        assert!((s[0] - 13f64.sqrt()).abs() < 1e-14 && (s[1] - 1.0).abs() < 1e-14 && s[2].abs() < 1e-14);
        assert!(orth_defect(&u) < 1e-14);
    }
}
