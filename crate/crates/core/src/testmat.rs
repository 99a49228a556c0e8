//! Graded test matrices `A = B·D` with prescribed singular value profiles.
//!
//! `B = W₁·Σ·W₂·W₃` has unit column norms: `W₁`, `W₂` are Haar-random
//! orthogonal factors and `W₃` is a product of plane rotations that equalizes
//! the column norms. `Σ` and `D` follow the classic `xLATM1` modes.
//!
//! Randomness comes from `ChaCha8Rng` seeded with the 64-bit spec seed; each
//! factor draws from its own stream (see the `STREAM_*` constants), so the
//! output is a pure function of the spec.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::factor::householder_qr;
use crate::matrix::{apply_plane_rotation, dot, Matrix, PlaneRotation};

pub const STREAM_LEFT: u64 = 1;
pub const STREAM_RIGHT: u64 = 2;
pub const STREAM_D: u64 = 3;
pub const STREAM_SIGMA: u64 = 4;
pub const STREAM_TALL: u64 = 5;
pub const STREAM_SIGN: u64 = 6;
pub const STREAM_SHUFFLE: u64 = 7;

/// (mode of `D`, mode of `Σ`) for matrix ids 1 through 16.
pub const TABLE_MODES: [(u8, u8); 16] = [
    (1, 2),
    (1, 3),
    (1, 4),
    (1, 5),
    (2, 3),
    (2, 4),
    (2, 5),
    (3, 2),
    (3, 4),
    (3, 5),
    (4, 2),
    (4, 3),
    (4, 5),
    (5, 2),
    (5, 3),
    (5, 4),
];

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `(mode_D, mode_Σ)` for a matrix id in `1..=16`.
pub fn table_modes(id: u8) -> Result<(u8, u8)> {
    match id {
        1..=16 => Ok(TABLE_MODES[id as usize - 1]),
        _ => Err(Error::BadMatrixId(id)),
    }
}

/// Diagonal of length `n` with condition `kappa` shaped by `mode`:
///
/// 1. `d = (1, 1/κ, …, 1/κ)`
/// 2. `d = (1, …, 1, 1/κ)`
/// 3. `d(i) = κ^{−i/(n−1)}` (geometric)
/// 4. `d(i) = 1 − i/(n−1)·(1 − 1/κ)` (arithmetic)
/// 5. `log d(i)` uniform on `(−log κ, 0)`, drawn from `seed`
pub fn latm1_diag(mode: u8, kappa: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    latm1_from(mode, kappa, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn latm1_from(mode: u8, kappa: f64, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if !(1..=5).contains(&mode) {
        return Err(Error::BadMode(mode));
    }
    if n < 2 {
        return Err(Error::Dimension(format!("diagonal length must be at least 2, got {n}")));
    }
    if !(kappa >= 1.0 && kappa.is_finite()) {
        return Err(Error::Dimension(format!("kappa must be finite and >= 1, got {kappa}")));
    }
    let last = (n - 1) as f64;
    let d = match mode {
        1 => (0..n).map(|i| if i == 0 { 1.0 } else { 1.0 / kappa }).collect(),
        2 => (0..n).map(|i| if i + 1 == n { 1.0 / kappa } else { 1.0 }).collect(),
        3 => (0..n)
            .map(|i| match i {
                0 => 1.0,
                _ if i + 1 == n => 1.0 / kappa,
                _ => 1.0 / kappa.powf(i as f64 / last),
            })
            .collect(),
        4 => (0..n)
            .map(|i| if i + 1 == n { 1.0 / kappa } else { 1.0 - i as f64 / last * (1.0 - 1.0 / kappa) })
            .collect(),
        _ => {
            let lk = kappa.ln();
            (0..n).map(|_| (-lk * rng.random::<f64>()).exp()).collect()
        }
    };
    Ok(d)
}

/// Haar-distributed orthogonal `n×n` matrix: the `Q` factor (with a
/// nonnegative `R` diagonal) of a matrix of standard normals. For `n = 1`
/// the result is `[1]`.
pub fn random_orthogonal(n: usize, seed: u64) -> Matrix<f64> {
    random_orthonormal_columns(n, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn random_orthonormal_columns(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix<f64> {
    if rows == 1 && cols == 1 {
        return Matrix::identity(1);
    }
    let g = Matrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
    householder_qr(&g).expect("rows >= cols").q
}

/// Rotates column pairs of `b0` (after scaling it so `‖B‖_F² = n`) until every
/// column has unit norm. Singular values change only by the global scale.
pub fn equalize_column_norms(b0: &Matrix<f64>) -> Matrix<f64> {
    let n = b0.cols();
    let tol = 8.0 * n as f64 * f64::EPSILON / 2.0;
    let sq = |b: &Matrix<f64>, j: usize| dot(b.col(j), b.col(j));
    let mut b = b0.clone();
    if (0..n).all(|j| (sq(&b, j) - 1.0).abs() <= tol) {
        return b;
    }
    let fro = b.frobenius_norm();
    if fro == 0.0 {
        return b;
    }
    b = b.scaled((n as f64).sqrt() / fro);
    let mut norms: Vec<f64> = (0..n).map(|j| sq(&b, j)).collect();
    for _ in 0..n {
        let under = (0..n).find(|&j| norms[j] < 1.0 - tol);
        let over = (0..n).find(|&j| norms[j] > 1.0 + tol);
        let (Some(i), Some(j)) = (under, over) else { break };
        let (a, bb) = (norms[i], norms[j]);
        let c = dot(b.col(i), b.col(j));
        let disc = (c * c - (a - 1.0) * (bb - 1.0)).sqrt();
        let t = (c + c.signum() * disc) / (bb - 1.0);
        let cs = 1.0 / (1.0 + t * t).sqrt();
        let rot = if i < j {
            PlaneRotation::new(i, j, cs, t * cs)
        } else {
            PlaneRotation::new(j, i, cs, -t * cs)
        };
        apply_plane_rotation(&mut b, &rot);
        norms[i] = sq(&b, i);
        norms[j] = sq(&b, j);
    }
    b
}

/// How `D` and `Σ` modes are selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeChoice {
    /// Row of the standard id table, `1..=16`.
    Id(u8),
    Explicit { mode_d: u8, mode_sigma: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestMatrixSpec {
    pub modes: ModeChoice,
    pub kappa_d: f64,
    pub kappa_b: f64,
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
}

impl TestMatrixSpec {
    /// Square `n×n` instance of table id `id`.
    pub fn table(id: u8, n: usize, kappa_d: f64, kappa_b: f64, seed: u64) -> Self {
        Self {
            modes: ModeChoice::Id(id),
            kappa_d,
            kappa_b,
            rows: n,
            cols: n,
            seed,
        }
    }

    pub fn mode_pair(&self) -> Result<(u8, u8)> {
        let (d, s) = match self.modes {
            ModeChoice::Id(id) => table_modes(id)?,
            ModeChoice::Explicit { mode_d, mode_sigma } => (mode_d, mode_sigma),
        };
        for m in [d, s] {
            if !(1..=5).contains(&m) {
                return Err(Error::BadMode(m));
            }
        }
        Ok((d, s))
    }
}

/// Builds `A = B·D` for `spec`; `B` has unit column norms.
pub fn gen_test_matrix(spec: &TestMatrixSpec) -> Result<Matrix<f64>> {
    let (mode_d, mode_sigma) = spec.mode_pair()?;
    let (m, n) = (spec.rows, spec.cols);
    if m < n {
        return Err(Error::Dimension(format!("test matrix needs rows >= cols, got {m}x{n}")));
    }
    let d = latm1_from(mode_d, spec.kappa_d, n, &mut stream_rng(spec.seed, STREAM_D))?;
    let sigma = latm1_from(mode_sigma, spec.kappa_b, n, &mut stream_rng(spec.seed, STREAM_SIGMA))?;
    let w1 = random_orthonormal_columns(n, n, &mut stream_rng(spec.seed, STREAM_LEFT));
    let w2 = random_orthonormal_columns(n, n, &mut stream_rng(spec.seed, STREAM_RIGHT));
    let mut w1s = w1;
    w1s.scale_columns(&sigma);
    let mut b = equalize_column_norms(&w1s.matmul(&w2));
    if m > n {
        let tall = random_orthonormal_columns(m, n, &mut stream_rng(spec.seed, STREAM_TALL));
        b = tall.matmul(&b);
    }
    b.scale_columns(&d);
    Ok(b)
}

/// `xLATM1` values with independent random signs.
pub fn signed_spectrum(mode: u8, kappa: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let mut d = latm1_from(mode, kappa, n, &mut stream_rng(seed, STREAM_SIGMA))?;
    let mut rng = stream_rng(seed, STREAM_SIGN);
    for v in &mut d {
        if rng.random::<bool>() {
            *v = -*v;
        }
    }
    Ok(d)
}

/// Symmetric matrix whose eigenvalues are `lambda` up to a few units of
/// roundoff relative to each eigenvalue.
///
/// The eigenvector matrix is `P·H`, where `H` is block diagonal with 4×4
/// Householder reflectors `I − ½·11ᵀ` (entries ±½, so every product is exact)
/// and `P` is a seeded random permutation. `lambda.len()` must be a multiple of 4.
pub fn symmetric_with_spectrum(lambda: &[f64], seed: u64) -> Result<Matrix<f64>> {
    let n = lambda.len();
    if n == 0 || n % 4 != 0 {
        return Err(Error::Dimension(format!("order {n} is not a positive multiple of 4")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream_rng(seed, STREAM_SHUFFLE));
    let h = |i: usize, k: usize| if i == k { 0.5 } else { -0.5 };
    let mut a = Matrix::zeros(n, n);
    for b in (0..n).step_by(4) {
        for i in 0..4 {
            for j in 0..4 {
                let v: f64 = (0..4).map(|k| h(i, k) * lambda[b + k] * h(k, j)).sum();
                a[(perm[b + i], perm[b + j])] = v;
            }
        }
    }
    Ok(a)
}
