//! WebAssembly bindings for the demo page in `www/`.
//!
//! Each exported function returns a JSON string. The `*_json` functions hold
//! the logic and are callable natively.

use mpjsvd::jacobi::{one_sided_jacobi, JacobiParams};
use mpjsvd::pipeline::{mixed_svd, Thresholds};
use mpjsvd::testmat::{gen_test_matrix, latm1_diag, TestMatrixSpec};
use mpjsvd::verify::{fixed_precision_baseline, sv_relative_diff};
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub const MAX_ORDER: usize = 256;

#[derive(Debug, Serialize)]
pub struct Comparison {
    pub path: String,
    pub low_sweeps: usize,
    pub refine_sweeps: usize,
    pub sigma_mixed: Vec<f64>,
    pub sigma_fixed: Vec<f64>,
    pub max_rel_diff: f64,
    pub seconds_mixed: f64,
    pub seconds_fixed: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepTrace {
    /// Largest column-pair cosine seen during each sweep.
    pub off: Vec<f64>,
    pub tolerance: f64,
    pub rotations: usize,
    pub converged: bool,
}

fn check_order(n: usize) -> Result<(), String> {
    if (2..=MAX_ORDER).contains(&n) {
        Ok(())
    } else {
        Err(format!("order must be between 2 and {MAX_ORDER}, got {n}"))
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Mixed and fixed singular values of table matrix `id`.
pub fn compare_svd_json(id: u8, n: usize, kappa_d: f64, kappa_b: f64, seed: u64) -> Result<String, String> {
    check_order(n)?;
    let a = gen_test_matrix(&TestMatrixSpec::table(id, n, kappa_d, kappa_b, seed)).map_err(|e| e.to_string())?;
    let p = JacobiParams::default();
    let mixed = mixed_svd(&a, &Thresholds::for_order(n), &p).map_err(|e| e.to_string())?;
    let fixed = fixed_precision_baseline(&a, &p).map_err(|e| e.to_string())?;
    let (max_rel_diff, _) = sv_relative_diff(&mixed.sigma, &fixed.sigma).map_err(|e| e.to_string())?;
    to_json(&Comparison {
        path: mixed.stats.path_taken.to_string(),
        low_sweeps: mixed.stats.low_sweeps,
        refine_sweeps: mixed.stats.refine_sweeps,
        seconds_mixed: mixed.stats.stage_times.total(),
        seconds_fixed: fixed.stats.stage_times.total(),
        sigma_mixed: mixed.sigma,
        sigma_fixed: fixed.sigma,
        max_rel_diff,
    })
}

pub fn latm1_profile_json(mode: u8, kappa: f64, n: usize, seed: u64) -> Result<String, String> {
    check_order(n)?;
    to_json(&latm1_diag(mode, kappa, n, seed).map_err(|e| e.to_string())?)
}

/// Per-sweep convergence of one-sided Jacobi on table matrix `id`.
pub fn jacobi_trace_json(id: u8, n: usize, kappa_d: f64, kappa_b: f64, seed: u64) -> Result<String, String> {
    check_order(n)?;
    let a = gen_test_matrix(&TestMatrixSpec::table(id, n, kappa_d, kappa_b, seed)).map_err(|e| e.to_string())?;
    let p = JacobiParams::default();
    let out = one_sided_jacobi(&a, &p).map_err(|e| e.to_string())?;
    to_json(&SweepTrace {
        off: out.sweep_off,
        tolerance: p.tolerance::<f64>(n),
        rotations: out.rotations_applied,
        converged: out.converged,
    })
}

#[wasm_bindgen(js_name = compareSvd)]
pub fn compare_svd(id: u8, n: usize, kappa_d: f64, kappa_b: f64, seed: u32) -> Result<String, JsError> {
    compare_svd_json(id, n, kappa_d, kappa_b, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = latm1Profile)]
pub fn latm1_profile(mode: u8, kappa: f64, n: usize, seed: u32) -> Result<String, JsError> {
    latm1_profile_json(mode, kappa, n, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = jacobiTrace)]
pub fn jacobi_trace(id: u8, n: usize, kappa_d: f64, kappa_b: f64, seed: u32) -> Result<String, JsError> {
    jacobi_trace_json(id, n, kappa_d, kappa_b, seed.into()).map_err(|e| JsError::new(&e))
}
