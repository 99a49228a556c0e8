use super::*;
use crate::factor::householder_qr;
use crate::testmat::{gen_test_matrix, random_orthogonal, TestMatrixSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const U: f64 = f64::EPSILON / 2.0;
const U_LOW: f64 = f32::EPSILON as f64 / 2.0;

fn random(m: usize, n: usize, seed: u64) -> Matrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
}

fn orth_defect(q: &Matrix<f64>) -> f64 {
    q.tr_matmul(q).sub(&Matrix::identity(q.cols())).max_abs()
}

/// `X = W₁·diag(sigma)·W₂ᵀ` with known factors.
fn synthetic(sigma: &[f64], seed: u64) -> (Matrix<f64>, Matrix<f64>, Matrix<f64>) {
    let n = sigma.len();
    let u = random_orthogonal(n, seed);
    let v = random_orthogonal(n, seed + 1000);
    let mut us = u.clone();
    us.scale_columns(sigma);
    (us.matmul_tr(&v), u, v)
}

fn defaults(n: usize) -> (Thresholds, JacobiParams) {
    (Thresholds::for_order(n), JacobiParams::default())
}

fn assert_valid(a: &Matrix<f64>, r: &SvdResult) {
    let n = a.cols();
    assert!(orth_defect(&r.u_factor) <= 64.0 * n as f64 * U, "U defect {:e}", orth_defect(&r.u_factor));
    assert!(orth_defect(&r.v_factor) <= 64.0 * n as f64 * U, "V defect {:e}", orth_defect(&r.v_factor));
    assert!(r.sigma.windows(2).all(|w| w[0] >= w[1]));
    let mut us = r.u_factor.clone();
    us.scale_columns(&r.sigma);
    let res = a.sub(&us.matmul_tr(&r.v_factor));
    for i in 0..a.rows() {
        let rn: f64 = res.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        let an: f64 = a.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(rn <= 200.0 * n as f64 * U * an, "row {i}: {rn:e} vs {an:e}");
    }
    assert!(r.stats.refine_sweeps >= 1);
}

#[test]
fn threshold_defaults() {
    let t = Thresholds::for_order(256);
    assert_eq!(t.tol_cond, 4.0);
    assert_eq!(t.v_direct_cond_limit, 256.0 * 1e4);
    assert!(t.validate().is_ok());
    let bad = Thresholds { tol_orth: 0.5, ..t };
    assert!(bad.validate().is_err());
}

#[test]
fn orthogonality_measure_examples() {
    assert!(orthogonality_measure(&Matrix::identity(6)).unwrap() <= 4.0 * U_LOW);
    let dup = Matrix::from_rows(&[[1.0, 1.0, 0.0], [0.0, 0.0, 1.0], [2.0, 2.0, 0.0]]).unwrap();
    assert!((orthogonality_measure(&dup).unwrap() - 1.0).abs() <= 4.0 * U_LOW);

    let x = Matrix::from_fn(4, 4, |i, j| if i == j { 1.0 } else { 1e-3 });
    // oracle: exact normalized Gram in working precision
    let norms: Vec<f64> = (0..4).map(|j| x.col(j).iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let mut oracle = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                let g: f64 = x.col(i).iter().zip(x.col(j)).map(|(a, b)| a * b).sum();
                oracle = oracle.max((g / (norms[i] * norms[j])).abs());
            }
        }
    }
    let got = orthogonality_measure(&x).unwrap();
    assert!((got - oracle).abs() <= 0.1 * oracle, "{got:e} vs {oracle:e}");
    assert!((oracle - 2e-3).abs() < 1e-5);

    let z = Matrix::from_diag(&[1.0, 0.0]);
    assert!(matches!(orthogonality_measure(&z), Err(Error::ZeroColumn(1))));
}

#[test]
fn graded_tail_examples() {
    let th = Thresholds::for_order(3);
    assert!(!graded_tail_detect(&[1.0, 1.0, 1.0], &th));
    assert!(graded_tail_detect(&[1.0, 1e-8, 1e-9], &th));
    let geo: Vec<f64> = (0..12).map(|i| 10f64.powf(-20.0 * i as f64 / 11.0)).collect();
    let oracle = geo.iter().filter(|&&v| v < 1e-5).count();
    assert!(oracle >= 4);
    assert!(graded_tail_detect(&geo, &Thresholds::for_order(12)));
    assert!(!graded_tail_detect(&[1.0, 1.0, 1.0, 1e-9], &Thresholds::for_order(4)));
}

#[test]
fn low_stage_diagonal() {
    let x = Matrix::from_diag(&[3.0, 2.0, 1.0]);
    let th = Thresholds::for_order(3);
    for orth in [1e-3, 0.5] {
        let st = low_precision_svd_stage(&x, orth, &th).unwrap();
        let u = st.u_low.convert::<f64>();
        for j in 0..3 {
            assert_eq!(u[(j, j)].abs(), 1.0);
        }
    }
}

#[test]
fn low_stage_near_orthogonal_uses_jacobi() {
    let n = 32usize;
    let sigma: Vec<f64> = (0..n).map(|j| 0.9f64.powi(j as i32)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let q = random_orthogonal(n, 5);
    let x = Matrix::from_fn(n, n, |i, j| q[(i, j)] * sigma[j] * (1.0 + 2e-4 * rng.random_range(-1.0..1.0)));
    let orth = orthogonality_measure(&x).unwrap();
    assert!(orth > 1e-5 && orth < 1e-2, "orth {orth:e}");
    let st = low_precision_svd_stage(&x, orth, &Thresholds::for_order(n)).unwrap();
    assert_eq!(st.path, PathTaken::LowJacobi);
    assert!(st.sweeps <= 3, "{} sweeps", st.sweeps);
}

#[test]
fn low_stage_random_uses_qr_svd() {
    let n = 32;
    let x = random(n, n, 6);
    let orth = orthogonality_measure(&x).unwrap();
    assert!(orth > 1e-2);
    let st = low_precision_svd_stage(&x, orth, &Thresholds::for_order(n)).unwrap();
    assert_eq!(st.path, PathTaken::LowQrSvd);
    let u = st.u_low.convert::<f64>();
    assert!(orth_defect(&u) <= 64.0 * n as f64 * U_LOW);
}

#[test]
fn golub_kahan_examples() {
    let u = golub_kahan_svd_lower(&Matrix::from_diag(&[2.0f32, 1.0])).unwrap();
    assert_eq!(u.as_slice(), Matrix::<f32>::identity(2).as_slice());
    let q = random_orthogonal(16, 8).convert::<f32>();
    let (_, s) = bidiagonal_qr_svd(&q).unwrap();
    assert!(s.iter().all(|v| (*v as f64 - 1.0).abs() <= 4.0 * 16.0 * U_LOW));
}

#[test]
fn switch_recovers_right_factor() {
    let n = 24;
    let sigma: Vec<f64> = (0..n).map(|j| 2f64.powf(-(j as f64) / 2.0)).collect();
    let (x, u, v) = synthetic(&sigma, 12);
    let q = householder_qr(&x.tr_matmul(&u)).unwrap().q;
    assert!(q.sub(&v).max_abs() <= 1e-12, "{:e}", q.sub(&v).max_abs());
    let q = precision_switch_qr(&Matrix::identity(4), &Matrix::identity(4)).unwrap();
    assert_eq!(q.as_slice(), Matrix::<f64>::identity(4).as_slice());
}

#[test]
fn switch_repairs_orthogonality() {
    let n = 64;
    let x = random(n, n, 13);
    let orth = orthogonality_measure(&x).unwrap();
    let st = low_precision_svd_stage(&x, orth, &Thresholds::for_order(n)).unwrap();
    let before = orth_defect(&upcast(&st.u_low));
    let q = precision_switch_qr(&x, &st.u_low).unwrap();
    let after = orth_defect(&q);
    assert!(before > 1e-8, "{before:e}");
    assert!(after <= 1e-14, "{after:e}");
}

#[test]
fn right_vectors_direct_and_seeded() {
    let params = JacobiParams::default();
    let x = Matrix::from_diag(&[3.0, 2.0, 1.0]);
    let out = one_sided_jacobi(&x, &params).unwrap();
    let rv = right_vectors(out, &x, None, &Thresholds::for_order(3), &params).unwrap();
    assert_eq!(rv.strategy, VStrategy::Direct);
    assert_eq!(rv.v.as_slice(), Matrix::<f64>::identity(3).as_slice());

    let n = 16;
    let sigma: Vec<f64> = (0..n).map(|j| 10f64.powf(-(j as f64) / 15.0)).collect();
    let (x, _, v) = synthetic(&sigma, 30);
    let out = one_sided_jacobi(&x, &params).unwrap();
    let rv = right_vectors(out, &x, None, &Thresholds::for_order(n), &params).unwrap();
    assert_eq!(rv.strategy, VStrategy::Direct);
    for j in 0..n {
        let dist = |sign: f64| -> f64 {
            rv.v.col(j).iter().zip(v.col(j)).map(|(a, b)| (a - sign * b).powi(2)).sum::<f64>().sqrt()
        };
        let angle = dist(1.0).min(dist(-1.0));
        assert!(angle <= 1e-13, "column {j}: {angle:e}");
    }

    let sigma: Vec<f64> = (0..n).map(|j| 10f64.powf(-14.0 * j as f64 / 15.0)).collect();
    let mut x = Matrix::zeros(n, n);
    let r = householder_qr(&random(n, n, 31)).unwrap().r;
    for j in 0..n {
        for i in 0..=j {
            x[(i, j)] = r[(i, j)] / r[(j, j)] * 1e-2;
        }
        x[(j, j)] = 1.0;
    }
    x.scale_columns(&sigma);
    let out = one_sided_jacobi(&x, &params).unwrap();
    assert!(out.sigma[0] / out.sigma[n - 1] > Thresholds::for_order(n).v_direct_cond_limit);
    let rv = right_vectors(out, &x, None, &Thresholds::for_order(n), &params).unwrap();
    assert_eq!(rv.strategy, VStrategy::QrSeeded);
    assert_eq!(rv.sweeps, 1);
    assert!(orth_defect(&rv.v) <= 64.0 * n as f64 * U);
}

#[test]
fn identity_skips_low_stage() {
    let a = Matrix::identity(8);
    let (th, p) = defaults(8);
    let r = mixed_svd(&a, &th, &p).unwrap();
    assert!(r.sigma.iter().all(|&s| s == 1.0));
    assert_eq!(r.stats.path_taken, PathTaken::SkipLowAlreadyOrthogonal);
    assert_eq!(r.stats.refine_sweeps, 1);
    assert_valid(&a, &r);
}

#[test]
fn golden_ratio() {
    let a = Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap();
    let (th, p) = defaults(2);
    let r = mixed_svd(&a, &th, &p).unwrap();
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    assert!((r.sigma[0] - phi).abs() <= 1e-15 * phi);
    assert!((r.sigma[1] - 1.0 / phi).abs() <= 1e-15 / phi);
    assert_valid(&a, &r);
}

#[test]
fn table_instance_against_fixed_path() {
    let a = gen_test_matrix(&TestMatrixSpec::table(3, 96, 1e2, 1e12, 3)).unwrap();
    let (th, p) = defaults(96);
    let mixed = mixed_svd(&a, &th, &p).unwrap();
    let fixed = run_pipeline(&a, &JacobiParams::accumulating(), RrqrMode::Working, None).unwrap();
    assert!(mixed.stats.path_taken.is_low(), "{:?}", mixed.stats);
    for (x, y) in mixed.sigma.iter().zip(&fixed.sigma) {
        assert!((x - y).abs() <= 1e-12 * y, "{x:e} {y:e}");
    }
    assert_valid(&a, &mixed);
    assert_valid(&a, &fixed);
}

#[test]
fn tall_matches_square_factor() {
    let a = random(96, 32, 17);
    let (th, p) = defaults(32);
    let tall = mixed_svd(&a, &th, &p).unwrap();
    let r1 = householder_qr(&a).unwrap().r;
    let sq = mixed_svd(&r1, &th, &p).unwrap();
    for (x, y) in tall.sigma.iter().zip(&sq.sigma) {
        assert!((x - y).abs() <= 1e-12 * y);
    }
    assert_eq!(tall.u_factor.shape(), (96, 32));
    assert_valid(&a, &tall);
}

#[test]
fn rank_deficient_rejected() {
    let mut a = random(6, 6, 2);
    for i in 0..6 {
        a[(i, 3)] = 0.0;
    }
    let (th, p) = defaults(6);
    assert!(matches!(mixed_svd(&a, &th, &p), Err(Error::RankDeficient(_))));
    assert!(matches!(mixed_svd(&random(3, 5, 1), &th, &p), Err(Error::Dimension(_))));
}

#[test]
fn accumulated_v_path() {
    let a = random(20, 20, 40);
    let th = Thresholds::for_order(20);
    let r = mixed_svd(&a, &th, &JacobiParams::accumulating()).unwrap();
    assert_eq!(r.stats.v_strategy, VStrategy::Accumulated);
    assert_valid(&a, &r);
}

#[test]
fn deterministic_sigma() {
    let a = gen_test_matrix(&TestMatrixSpec::table(6, 64, 1e2, 1e12, 1)).unwrap();
    let (th, p) = defaults(64);
    let r1 = mixed_svd(&a, &th, &p).unwrap();
    let r2 = mixed_svd(&a, &th, &p).unwrap();
    assert_eq!(r1.sigma, r2.sigma);
    assert_eq!(r1.stats.path_taken, r2.stats.path_taken);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn power_of_two_scaling(seed in 0u64..1000, e in -40i32..40, id in 1u8..=16) {
        let a = gen_test_matrix(&TestMatrixSpec::table(id, 24, 1e3, 1e6, seed)).unwrap();
        let (th, p) = defaults(24);
        let base = mixed_svd(&a, &th, &p).unwrap();
        let alpha = 2f64.powi(e);
        let scaled = mixed_svd(&a.scaled(alpha), &th, &p).unwrap();
        prop_assert_eq!(base.stats.path_taken, scaled.stats.path_taken);
        for (x, y) in base.sigma.iter().zip(&scaled.sigma) {
            prop_assert_eq!(x * alpha, *y);
        }
    }

    #[test]
    fn outputs_are_valid_on_random_graded(seed in 0u64..1000, id in 1u8..=16, kd in 0i32..10) {
        let n = 20;
        let a = gen_test_matrix(&TestMatrixSpec::table(id, n, 10f64.powi(kd), 1e8, seed)).unwrap();
        let (th, p) = defaults(n);
        let r = mixed_svd(&a, &th, &p).unwrap();
        assert_valid(&a, &r);
        if r.stats.path_taken.is_low() {
            prop_assert!(r.stats.refine_sweeps <= 4);
        }
    }
}
