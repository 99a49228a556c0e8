//! Accuracy metrics and the working-precision baseline solver.

use crate::error::{Error, Result};
use crate::jacobi::JacobiParams;
use crate::matrix::{scaled_norm, Matrix};
use crate::pipeline::{run_pipeline, PathTaken, SvdResult};
use crate::precond::RrqrMode;

/// Pass threshold of the rowwise residual, in units of `n·u`.
pub const ROWWISE_CONSTANT: f64 = 200.0;
/// Pass threshold of orthogonality defects, in units of `n·u`.
pub const ORTHOGONALITY_CONSTANT: f64 = 64.0;

/// `|test_i − ref_i| / ref_i` elementwise, with its maximum.
pub fn sv_relative_diff(sigma_test: &[f64], sigma_ref: &[f64]) -> Result<(f64, Vec<f64>)> {
    if sigma_test.len() != sigma_ref.len() {
        return Err(Error::LengthMismatch(sigma_test.len(), sigma_ref.len()));
    }
    if let Some(i) = sigma_ref.iter().position(|&r| r == 0.0) {
        return Err(Error::ZeroReference(i));
    }
    let per: Vec<f64> = sigma_test
        .iter()
        .zip(sigma_ref)
        .map(|(t, r)| ((t - r) / r).abs())
        .collect();
    let max = per.iter().fold(0.0f64, |m, &v| m.max(v));
    Ok((max, per))
}

/// `max_i ‖(X − U·Σ·Vᵀ)(i,:)‖₂ / ‖X(i,:)‖₂` over the nonzero rows of `X`.
pub fn rowwise_backward_residual(x: &Matrix<f64>, result: &SvdResult) -> Result<f64> {
    rowwise_residual_of(x, &result.u_factor, &result.sigma, &result.v_factor)
}

/// [`rowwise_backward_residual`] for loose factors.
pub fn rowwise_residual_of(x: &Matrix<f64>, u: &Matrix<f64>, sigma: &[f64], v: &Matrix<f64>) -> Result<f64> {
    let (m, n) = x.shape();
    if u.shape() != (m, sigma.len()) || v.shape() != (n, sigma.len()) {
        return Err(Error::Dimension(format!(
            "factors {:?}, {} values, {:?} do not match {m}x{n}",
            u.shape(),
            sigma.len(),
            v.shape()
        )));
    }
    // sum the triplets in a canonical order
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| {
        sigma[b]
            .total_cmp(&sigma[a])
            .then_with(|| cmp_slices(u.col(a), u.col(b)))
            .then_with(|| cmp_slices(v.col(a), v.col(b)))
    });
    let mut us = u.permute_columns(&order);
    us.scale_columns(&order.iter().map(|&k| sigma[k]).collect::<Vec<_>>());
    let res = x.sub(&us.matmul_tr(&v.permute_columns(&order)));
    let mut worst = 0.0f64;
    let mut any = false;
    for i in 0..m {
        let xn = scaled_norm(&x.row(i));
        if xn == 0.0 {
            continue;
        }
        any = true;
        worst = worst.max(scaled_norm(&res.row(i)) / xn);
    }
    if !any {
        return Err(Error::ZeroRow(0));
    }
    Ok(worst)
}

fn cmp_slices(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// `‖MᵀM − I‖_max` in working precision.
pub fn orthogonality_defect(m: &Matrix<f64>) -> f64 {
    m.tr_matmul(m).sub(&Matrix::identity(m.cols())).max_abs()
}

/// Working-precision SVD: pivoted QR preconditioning in binary64 and
/// one-sided Jacobi with accumulated right vectors. No lower-precision stage.
pub fn fixed_precision_baseline(a: &Matrix<f64>, params: &JacobiParams) -> Result<SvdResult> {
    let params = JacobiParams {
        accumulate_v: true,
        ..*params
    };
    run_pipeline(a, &params, RrqrMode::Working, None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub max_rel_sv_diff: f64,
    pub per_sv_rel_diff: Vec<f64>,
    pub u_orth: f64,
    pub v_orth: f64,
    pub max_rowwise_residual_ratio: f64,
    pub refine_sweeps: usize,
    pub path_taken: PathTaken,
}

impl AccuracyReport {
    pub const CSV_HEADER: &'static str =
        "max_rel_sv_diff,u_orth,v_orth,max_rowwise_residual_ratio,refine_sweeps,path_taken";

    /// Measures `result` as an SVD of `a`, comparing its values with `sigma_ref`.
    pub fn measure(a: &Matrix<f64>, result: &SvdResult, sigma_ref: &[f64]) -> Result<Self> {
        let (max_rel_sv_diff, per_sv_rel_diff) = sv_relative_diff(&result.sigma, sigma_ref)?;
        Ok(Self {
            max_rel_sv_diff,
            per_sv_rel_diff,
            u_orth: orthogonality_defect(&result.u_factor),
            v_orth: orthogonality_defect(&result.v_factor),
            max_rowwise_residual_ratio: rowwise_backward_residual(a, result)?,
            refine_sweeps: result.stats.refine_sweeps,
            path_taken: result.stats.path_taken,
        })
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{:.6e},{:.6e},{:.6e},{:.6e},{},{}",
            self.max_rel_sv_diff,
            self.u_orth,
            self.v_orth,
            self.max_rowwise_residual_ratio,
            self.refine_sweeps,
            self.path_taken
        )
    }

    /// Whether the orthogonality and rowwise residual meet the default bounds for `n` columns.
    pub fn within_bounds(&self, n: usize) -> bool {
        let tm = ToleranceModel::default();
        let u = f64::EPSILON / 2.0;
        self.u_orth <= tm.orthogonality_bound(n, u)
            && self.v_orth <= tm.orthogonality_bound(n, u)
            && self.max_rowwise_residual_ratio <= tm.combined_rowwise_bound(n, n, u)
    }
}

/// Stand-in constants for the rounding-error terms of the backward error analysis.
///
/// `eps_qr = c_qr·m·u`, `eps_j = c_j·n·u`, `ε̄_J = eps_j + u(1 + eps_j)`.
/// The rowwise pass threshold is `c_row·n·u`, and never smaller than the
/// composed bound `ε̄_J(1 + eps_qr) + eps_qr`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceModel {
    pub c_qr: f64,
    pub c_j: f64,
    pub c_row: f64,
    pub c_orth: f64,
}

impl Default for ToleranceModel {
    fn default() -> Self {
        Self {
            c_qr: 16.0,
            c_j: 64.0,
            c_row: ROWWISE_CONSTANT,
            c_orth: ORTHOGONALITY_CONSTANT,
        }
    }
}

impl ToleranceModel {
    pub fn eps_qr_bound(&self, m: usize, _n: usize, u: f64) -> f64 {
        self.c_qr * m as f64 * u
    }

    pub fn eps_j_bound(&self, n: usize, u: f64) -> f64 {
        self.c_j * n as f64 * u
    }

    pub fn eps_j_bar(&self, n: usize, u: f64) -> f64 {
        let ej = self.eps_j_bound(n, u);
        ej + u * (1.0 + ej)
    }

    /// Composed rowwise bound `ε̄_J(1 + eps_qr) + eps_qr`.
    pub fn composed_rowwise_bound(&self, m: usize, n: usize, u: f64) -> f64 {
        let eq = self.eps_qr_bound(m, n, u);
        self.eps_j_bar(n, u) * (1.0 + eq) + eq
    }

    /// Pass threshold for the rowwise residual.
    pub fn combined_rowwise_bound(&self, m: usize, n: usize, u: f64) -> f64 {
        (self.c_row * n as f64 * u).max(self.composed_rowwise_bound(m, n, u))
    }

    pub fn orthogonality_bound(&self, n: usize, u: f64) -> f64 {
        self.c_orth * n as f64 * u
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{mixed_svd, Thresholds};
    use crate::testmat::{gen_test_matrix, random_orthogonal, TestMatrixSpec};
    use proptest::prelude::*;

    const U: f64 = f64::EPSILON / 2.0;

    #[test]
    fn relative_diff_examples() {
        let r = [3.0, 2.0, 1.0];
        assert_eq!(sv_relative_diff(&r, &r).unwrap().0, 0.0);
        let t: Vec<f64> = r.iter().map(|v| v * (1.0 + 1e-14)).collect();
        let (max, per) = sv_relative_diff(&t, &r).unwrap();
        assert!((max - 1e-14).abs() < 1e-16);
        assert_eq!(per.len(), 3);
        assert!(matches!(sv_relative_diff(&r, &r[..2]), Err(Error::LengthMismatch(3, 2))));
        assert!(matches!(sv_relative_diff(&r, &[1.0, 0.0, 1.0]), Err(Error::ZeroReference(1))));
    }

    #[test]
    fn residual_of_exact_diagonal() {
        let x = Matrix::from_diag(&[3.0, 2.0, 1.0]);
        let id = Matrix::identity(3);
        assert_eq!(rowwise_residual_of(&x, &id, &[3.0, 2.0, 1.0], &id).unwrap(), 0.0);
    }

    #[test]
    fn residual_detects_corruption() {
        let q = random_orthogonal(6, 3);
        let v = random_orthogonal(6, 4);
        let sigma = [1.0; 6];
        let x = q.matmul_tr(&v);
        let mut bad = q.clone();
        bad[(2, 1)] += 1e-6;
        let ratio = rowwise_residual_of(&x, &bad, &sigma, &v).unwrap();
        // oracle: the planted entry changes row 2 by 1e-6 times a unit row of V
        assert!(ratio >= 1e-7, "{ratio:e}");
        assert!((ratio - 1e-6).abs() < 1e-9);
    }

    #[test]
    fn residual_skips_zero_rows() {
        let mut x = Matrix::from_diag(&[1.0, 2.0]);
        x[(1, 1)] = 0.0;
        let id = Matrix::identity(2);
        assert_eq!(rowwise_residual_of(&x, &id, &[1.0, 0.0], &id).unwrap(), 0.0);
        let z = Matrix::zeros(2, 2);
        assert!(matches!(rowwise_residual_of(&z, &id, &[0.0, 0.0], &id), Err(Error::ZeroRow(_))));
    }

    #[test]
    fn orthogonality_examples() {
        assert_eq!(orthogonality_defect(&Matrix::identity(5)), 0.0);
        let m = Matrix::from_rows(&[[1.0, 1.0], [0.0, 0.0]]).unwrap();
        assert_eq!(orthogonality_defect(&m), 1.0);
        let low = random_orthogonal(64, 9).convert::<f32>().convert::<f64>();
        let d = orthogonality_defect(&low);
        assert!((1e-8..=1e-6).contains(&d), "{d:e}");
    }

    #[test]
    fn baseline_examples() {
        let p = JacobiParams::default();
        let r = fixed_precision_baseline(&Matrix::identity(5), &p).unwrap();
        assert!(r.sigma.iter().all(|&s| s == 1.0));
        assert_eq!(r.stats.path_taken, PathTaken::Fixed);

        let a = Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap();
        let r = fixed_precision_baseline(&a, &p).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((r.sigma[0] - phi).abs() <= 1e-14 * phi && (r.sigma[1] - 1.0 / phi).abs() <= 1e-14 / phi);
    }

    #[test]
    fn table_instance_report() {
        let n = 128;
        let a = gen_test_matrix(&TestMatrixSpec::table(8, n, 1e2, 1e12, 1)).unwrap();
        let fixed = fixed_precision_baseline(&a, &JacobiParams::default()).unwrap();
        let mixed = mixed_svd(&a, &Thresholds::for_order(n), &JacobiParams::default()).unwrap();
        let rep = AccuracyReport::measure(&a, &mixed, &fixed.sigma).unwrap();
        assert!(rep.max_rowwise_residual_ratio <= 200.0 * n as f64 * U);
        assert!(rep.within_bounds(n), "{rep:?}");
        assert!(rep.max_rel_sv_diff <= 1e-12);
        assert_eq!(rep.csv_row().split(',').count(), AccuracyReport::CSV_HEADER.split(',').count());
    }

    #[test]
    fn tolerance_model_monotone() {
        let tm = ToleranceModel::default();
        for n in 1..50 {
            assert!(tm.eps_qr_bound(n + 1, n, U) >= tm.eps_qr_bound(n, n, U));
            assert!(tm.eps_j_bound(n + 1, U) >= tm.eps_j_bound(n, U));
            assert!(tm.combined_rowwise_bound(n + 1, n + 1, U) >= tm.combined_rowwise_bound(n, n, U));
            assert!(tm.combined_rowwise_bound(n, n, U) >= tm.composed_rowwise_bound(n, n, U));
        }
        assert_eq!(tm.combined_rowwise_bound(100, 100, U), 200.0 * 100.0 * U);
    }

    proptest! {
        #[test]
        fn relative_diff_nearly_symmetric(r in prop::collection::vec(0.1f64..10.0, 1..8), e in -1e-3f64..1e-3) {
            let t: Vec<f64> = r.iter().map(|v| v * (1.0 + e)).collect();
            let (_, a) = sv_relative_diff(&t, &r).unwrap();
            let (_, b) = sv_relative_diff(&r, &t).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= x.max(*y).powi(2) + 4.0 * U * x);
            }
        }

        #[test]
        fn residual_invariant_under_column_permutation(seed in 0u64..500, shift in 1usize..6) {
            let n = 6;
            let q = random_orthogonal(n, seed);
            let v = random_orthogonal(n, seed + 1);
            let sigma: Vec<f64> = (0..n).map(|j| 1.0 / (j + 1) as f64).collect();
            let mut us = q.clone();
            us.scale_columns(&sigma);
            let x = us.matmul_tr(&v);
            let perm: Vec<usize> = (0..n).map(|k| (k + shift) % n).collect();
            let s2: Vec<f64> = perm.iter().map(|&k| sigma[k]).collect();
            let base = rowwise_residual_of(&x, &q, &sigma, &v).unwrap();
            let permuted = rowwise_residual_of(&x, &q.permute_columns(&perm), &s2, &v.permute_columns(&perm)).unwrap();
            prop_assert_eq!(base, permuted);
        }
    }
}
