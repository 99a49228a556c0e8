//! Benchmark and file helpers behind the `mpjsvd` binary.

use std::fs;
use std::path::Path;
use std::time::Instant;

use mpjsvd::factor::{mixed_rrqr, rrqr_pivoted};
use mpjsvd::io;
use mpjsvd::jacobi::JacobiParams;
use mpjsvd::pipeline::{mixed_svd_with, SvdResult, Thresholds};
use mpjsvd::precond::RrqrMode;
use mpjsvd::testmat::{gen_test_matrix, TestMatrixSpec};
use mpjsvd::verify::{fixed_precision_baseline, sv_relative_diff};
use mpjsvd::{Matrix, Result};
use sha2::{Digest, Sha256};

/// Column order of the benchmark CSV. Never reorder.
pub const BENCH_HEADER: &str = "matrix_id,rows,cols,kappa_d,kappa_b,seed,solver,status,repeats,\
wall_seconds_total,qr_pre_seconds,low_svd_seconds,switch_seconds,refine_seconds,\
low_sweeps,refine_sweeps,path_taken,max_rel_sv_diff,relative_runtime,rrqr_relative_runtime";

/// Median; the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty sample");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Mixed,
    Fixed,
}

impl Solver {
    pub fn label(self) -> &'static str {
        match self {
            Solver::Mixed => "mixed",
            Solver::Fixed => "fixed",
        }
    }

    pub fn run(self, a: &Matrix<f64>, thresholds: &Thresholds, rrqr: RrqrMode) -> Result<SvdResult> {
        match self {
            Solver::Mixed => mixed_svd_with(a, thresholds, &JacobiParams::default(), rrqr),
            Solver::Fixed => fixed_precision_baseline(a, &JacobiParams::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub matrix_id: u8,
    pub rows: usize,
    pub cols: usize,
    pub kappa_d: f64,
    pub kappa_b: f64,
    pub seed: u64,
    pub solver: Solver,
    /// `"ok"` or the error message.
    pub status: String,
    pub repeats: usize,
    pub wall_seconds_total: f64,
    /// qr_pre, low_svd, switch, refine.
    pub stage_seconds: [f64; 4],
    pub low_sweeps: usize,
    pub refine_sweeps: usize,
    pub path_taken: String,
    pub max_rel_sv_diff: Option<f64>,
    pub relative_runtime: Option<f64>,
    pub rrqr_relative_runtime: Option<f64>,
}

impl BenchRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_default();
        let s = self.stage_seconds;
        format!(
            "{},{},{},{:e},{:e},{},{},{},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{},{},{},{},{},{}",
            self.matrix_id,
            self.rows,
            self.cols,
            self.kappa_d,
            self.kappa_b,
            self.seed,
            self.solver.label(),
            self.status.replace([',', '\n'], ";"),
            self.repeats,
            self.wall_seconds_total,
            s[0],
            s[1],
            s[2],
            s[3],
            self.low_sweeps,
            self.refine_sweeps,
            self.path_taken,
            opt(self.max_rel_sv_diff),
            opt(self.relative_runtime),
            opt(self.rrqr_relative_runtime),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchCase {
    pub id: u8,
    pub n: usize,
    pub kappa_d: f64,
    pub kappa_b: f64,
    pub seed: u64,
}

struct Timed {
    result: SvdResult,
    wall: Vec<f64>,
    stages: Vec<[f64; 4]>,
}

fn time_solver(solver: Solver, a: &Matrix<f64>, th: &Thresholds, repeat: usize) -> Result<Timed> {
    let mut wall = Vec::with_capacity(repeat);
    let mut stages = Vec::with_capacity(repeat);
    let mut last = None;
    for _ in 0..repeat {
        let start = Instant::now();
        let r = solver.run(a, th, RrqrMode::Mixed)?;
        wall.push(start.elapsed().as_secs_f64());
        let t = r.stats.stage_times;
        stages.push([t.qr_pre, t.low_svd, t.switch, t.refine]);
        last = Some(r);
    }
    Ok(Timed {
        result: last.expect("repeat >= 1"),
        wall,
        stages,
    })
}

fn time_rrqr(a: &Matrix<f64>, repeat: usize) -> Result<f64> {
    let mut ratio = Vec::with_capacity(repeat);
    for _ in 0..repeat {
        let start = Instant::now();
        rrqr_pivoted(a)?;
        let working = start.elapsed().as_secs_f64();
        let start = Instant::now();
        mixed_rrqr(a)?;
        ratio.push(start.elapsed().as_secs_f64() / working.max(f64::MIN_POSITIVE));
    }
    Ok(median(&ratio))
}

/// Times the fixed and mixed solvers on one generated instance; returns the
/// fixed row first.
pub fn bench_case(case: &BenchCase, repeat: usize) -> Vec<BenchRecord> {
    let repeat = repeat.max(1);
    let base = |solver: Solver, status: String| BenchRecord {
        matrix_id: case.id,
        rows: case.n,
        cols: case.n,
        kappa_d: case.kappa_d,
        kappa_b: case.kappa_b,
        seed: case.seed,
        solver,
        status,
        repeats: repeat,
        wall_seconds_total: 0.0,
        stage_seconds: [0.0; 4],
        low_sweeps: 0,
        refine_sweeps: 0,
        path_taken: String::new(),
        max_rel_sv_diff: None,
        relative_runtime: None,
        rrqr_relative_runtime: None,
    };
    let spec = TestMatrixSpec::table(case.id, case.n, case.kappa_d, case.kappa_b, case.seed);
    let a = match gen_test_matrix(&spec) {
        Ok(a) => a,
        Err(e) => return vec![base(Solver::Fixed, e.to_string()), base(Solver::Mixed, e.to_string())],
    };
    let th = Thresholds::for_order(case.n);
    let rrqr = time_rrqr(&a, repeat).ok();
    let fixed = time_solver(Solver::Fixed, &a, &th, repeat);
    let mixed = time_solver(Solver::Mixed, &a, &th, repeat);
    let fixed_sigma = fixed.as_ref().ok().map(|t| t.result.sigma.clone());
    let fixed_wall = fixed.as_ref().ok().map(|t| median(&t.wall));

    let record = |solver: Solver, timed: Result<Timed>| match timed {
        Err(e) => base(solver, e.to_string()),
        Ok(t) => {
            let wall = median(&t.wall);
            let stage = |k: usize| median(&t.stages.iter().map(|s| s[k]).collect::<Vec<_>>());
            let diff = fixed_sigma
                .as_ref()
                .and_then(|f| sv_relative_diff(&t.result.sigma, f).ok())
                .map(|d| d.0);
            BenchRecord {
                wall_seconds_total: wall,
                stage_seconds: [stage(0), stage(1), stage(2), stage(3)],
                low_sweeps: t.result.stats.low_sweeps,
                refine_sweeps: t.result.stats.refine_sweeps,
                path_taken: t.result.stats.path_taken.to_string(),
                max_rel_sv_diff: diff,
                relative_runtime: fixed_wall.map(|f| wall / f.max(f64::MIN_POSITIVE)),
                rrqr_relative_runtime: rrqr,
                ..base(solver, "ok".into())
            }
        }
    };
    vec![record(Solver::Fixed, fixed), record(Solver::Mixed, mixed)]
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads a matrix; `.csv` files are parsed as text, anything else as binary.
pub fn load_matrix(path: &Path) -> Result<Matrix<f64>> {
    if is_csv(path) {
        io::from_csv(&fs::read_to_string(path)?)
    } else {
        io::from_bytes(&fs::read(path)?)
    }
}

/// Writes a matrix in the format implied by the extension; returns the bytes written.
pub fn save_matrix(path: &Path, a: &Matrix<f64>) -> Result<Vec<u8>> {
    let bytes = if is_csv(path) {
        io::to_csv(a)?.into_bytes()
    } else {
        io::to_bytes(a)
    };
    fs::write(path, &bytes)?;
    Ok(bytes)
}
