use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mpjsvd::eigen::{default_gap_rtol, mixed_sym_eig_with};
use mpjsvd::pipeline::Thresholds;
use mpjsvd::precond::RrqrMode;
use mpjsvd::testmat::{gen_test_matrix, ModeChoice, TestMatrixSpec};
use mpjsvd::verify::{orthogonality_defect, rowwise_backward_residual, sv_relative_diff, AccuracyReport};
use mpjsvd::Matrix;
use mpjsvd_cli::{bench_case, load_matrix, save_matrix, sha256_hex, BenchCase, Solver, BENCH_HEADER};

#[derive(Parser)]
#[command(name = "mpjsvd", version, about = "Mixed-precision Jacobi SVD toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graded test matrix A = B·D.
    Gen(GenArgs),
    /// Singular value decomposition of a matrix file.
    Svd(SvdArgs),
    /// Eigendecomposition of a symmetric matrix file.
    Eig(EigArgs),
    /// Time the fixed and mixed solvers over table ids.
    Bench(BenchArgs),
    /// Accuracy report of the mixed solver against the fixed baseline.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Table id selecting the modes of D and Σ.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=16), conflicts_with_all = ["mode_d", "mode_sigma"])]
    id: Option<u8>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5), requires = "mode_sigma")]
    mode_d: Option<u8>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5), requires = "mode_d")]
    mode_sigma: Option<u8>,
    #[arg(long)]
    n: usize,
    /// Row count; defaults to n.
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long, default_value_t = 1e2)]
    kappa_d: f64,
    #[arg(long, default_value_t = 1e12)]
    kappa_b: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Mixed,
    Fixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum RrqrArg {
    Mixed,
    Working,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long)]
    tol_alg: Option<f64>,
    #[arg(long)]
    tol_orth: Option<f64>,
    #[arg(long)]
    tol_cond: Option<f64>,
    #[arg(long)]
    graded_tail_fraction: Option<f64>,
    #[arg(long)]
    graded_tail_cut: Option<f64>,
    #[arg(long)]
    v_direct_cond_limit: Option<f64>,
    /// Pivot selection precision of the preconditioning QR.
    #[arg(long, value_enum, default_value = "mixed")]
    rrqr: RrqrArg,
}

impl ThresholdArgs {
    fn thresholds(&self, n: usize) -> Thresholds {
        let mut t = Thresholds::for_order(n);
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut t.tol_alg, self.tol_alg);
        set(&mut t.tol_orth, self.tol_orth);
        set(&mut t.tol_cond, self.tol_cond);
        set(&mut t.graded_tail_fraction, self.graded_tail_fraction);
        set(&mut t.graded_tail_cut, self.graded_tail_cut);
        set(&mut t.v_direct_cond_limit, self.v_direct_cond_limit);
        t
    }

    fn rrqr_mode(&self) -> RrqrMode {
        match self.rrqr {
            RrqrArg::Mixed => RrqrMode::Mixed,
            RrqrArg::Working => RrqrMode::Working,
        }
    }
}

#[derive(Args)]
struct SvdArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "mixed")]
    mode: ModeArg,
    /// Also run the other solver and print the singular value difference.
    #[arg(long)]
    compare: bool,
    /// Writes PREFIX.u, PREFIX.sigma and PREFIX.v next to each other.
    #[arg(long)]
    out_prefix: Option<PathBuf>,
    #[command(flatten)]
    thresholds: ThresholdArgs,
}

#[derive(Args)]
struct EigArgs {
    input: PathBuf,
    #[arg(long)]
    gap_rtol: Option<f64>,
    /// Writes PREFIX.values and PREFIX.vectors.
    #[arg(long)]
    out_prefix: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated table ids.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16",
          value_parser = clap::value_parser!(u8).range(1..=16))]
    ids: Vec<u8>,
    #[arg(long, default_value_t = 256)]
    n: usize,
    /// Comma-separated kappa_D:kappa_B pairs.
    #[arg(long, value_delimiter = ',', default_value = "1e2:1e12,1e16:1e2", value_parser = parse_kappa_pair)]
    kappas: Vec<(f64, f64)>,
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    input: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    thresholds: ThresholdArgs,
}

fn parse_kappa_pair(s: &str) -> Result<(f64, f64), String> {
    let (d, b) = s.split_once(':').ok_or_else(|| format!("expected KD:KB, got {s:?}"))?;
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    let pair = (parse(d)?, parse(b)?);
    if !(pair.0 >= 1.0 && pair.1 >= 1.0) {
        return Err(format!("condition numbers must be >= 1, got {s:?}"));
    }
    Ok(pair)
}

enum Failure {
    Usage(String),
    Solver(String),
}

impl From<mpjsvd::Error> for Failure {
    fn from(e: mpjsvd::Error) -> Self {
        match e {
            mpjsvd::Error::BadMode(_) | mpjsvd::Error::BadMatrixId(_) => Failure::Usage(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Solver(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_gen(args: &GenArgs) -> CmdResult {
    let modes = match (args.id, args.mode_d, args.mode_sigma) {
        (Some(id), _, _) => ModeChoice::Id(id),
        (None, Some(mode_d), Some(mode_sigma)) => ModeChoice::Explicit { mode_d, mode_sigma },
        _ => return Err(Failure::Usage("either --id or both --mode-d and --mode-sigma are required".into())),
    };
    if args.n == 0 || !(args.kappa_d >= 1.0 && args.kappa_b >= 1.0) {
        return Err(Failure::Usage("--n must be positive and both kappas at least 1".into()));
    }
    let rows = args.rows.unwrap_or(args.n);
    if rows < args.n {
        return Err(Failure::Usage(format!("--rows {rows} is smaller than --n {}", args.n)));
    }
    let spec = TestMatrixSpec {
        modes,
        kappa_d: args.kappa_d,
        kappa_b: args.kappa_b,
        rows,
        cols: args.n,
        seed: args.seed,
    };
    let a = gen_test_matrix(&spec)?;
    let bytes = save_matrix(&args.output, &a)?;
    println!("{}  {}", sha256_hex(&bytes), args.output.display());
    Ok(())
}

fn cmd_svd(args: &SvdArgs) -> CmdResult {
    let a = load_matrix(&args.input)?;
    let th = args.thresholds.thresholds(a.cols());
    let rrqr = args.thresholds.rrqr_mode();
    let solver = match args.mode {
        ModeArg::Mixed => Solver::Mixed,
        ModeArg::Fixed => Solver::Fixed,
    };
    let r = solver.run(&a, &th, rrqr)?;
    let s = &r.stats;
    let mut line = format!(
        "solver={} path={} low_sweeps={} refine_sweeps={} v_strategy={:?} residual_ratio={:.3e} u_orth={:.3e} v_orth={:.3e}",
        solver.label(),
        s.path_taken,
        s.low_sweeps,
        s.refine_sweeps,
        s.v_strategy,
        rowwise_backward_residual(&a, &r)?,
        orthogonality_defect(&r.u_factor),
        orthogonality_defect(&r.v_factor),
    );
    if args.compare {
        let other = match solver {
            Solver::Mixed => Solver::Fixed,
            Solver::Fixed => Solver::Mixed,
        };
        let o = other.run(&a, &th, rrqr)?;
        let (diff, _) = sv_relative_diff(&r.sigma, &o.sigma)?;
        line.push_str(&format!(" sv_diff_vs_{}={diff:.3e}", other.label()));
    }
    if let Some(prefix) = &args.out_prefix {
        save_matrix(&with_suffix(prefix, ".u.mpjs"), &r.u_factor)?;
        save_matrix(&with_suffix(prefix, ".sigma.mpjs"), &column(&r.sigma))?;
        save_matrix(&with_suffix(prefix, ".v.mpjs"), &r.v_factor)?;
    }
    println!("{line}");
    Ok(())
}

fn column(v: &[f64]) -> Matrix<f64> {
    Matrix::from_col_major(v.len(), 1, v.to_vec()).expect("length matches")
}

fn cmd_eig(args: &EigArgs) -> CmdResult {
    let a = load_matrix(&args.input)?;
    let gap = args.gap_rtol.unwrap_or_else(|| default_gap_rtol(a.cols()));
    let r = mixed_sym_eig_with(&a, gap)?;
    let mut xl = r.eigenvectors.clone();
    xl.scale_columns(&r.eigenvalues);
    let residual = a.matmul(&r.eigenvectors).sub(&xl).frobenius_norm() / a.frobenius_norm();
    let largest_block = r.blocks.iter().map(|b| b.1).max().unwrap_or(0);
    if let Some(prefix) = &args.out_prefix {
        save_matrix(&with_suffix(prefix, ".values.mpjs"), &column(&r.eigenvalues))?;
        save_matrix(&with_suffix(prefix, ".vectors.mpjs"), &r.eigenvectors)?;
    }
    println!(
        "definite={} blocks={} largest_block={} svd_sweeps={} residual_ratio={:.3e} x_orth={:.3e}",
        r.definite,
        r.blocks.len(),
        largest_block,
        r.svd_sweeps,
        residual,
        orthogonality_defect(&r.eigenvectors)
    );
    Ok(())
}

fn open_output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_bench(args: &BenchArgs) -> CmdResult {
    if args.n < 2 || args.repeat == 0 {
        return Err(Failure::Usage("--n must be at least 2 and --repeat at least 1".into()));
    }
    let mut out = open_output(&args.csv)?;
    writeln!(out, "{BENCH_HEADER}")?;
    let (mut total, mut ok) = (0, 0);
    for &(kappa_d, kappa_b) in &args.kappas {
        for &id in &args.ids {
            let case = BenchCase {
                id,
                n: args.n,
                kappa_d,
                kappa_b,
                seed: args.seed,
            };
            for rec in bench_case(&case, args.repeat) {
                total += 1;
                ok += rec.is_ok() as usize;
                writeln!(out, "{}", rec.csv_row())?;
            }
            out.flush()?;
        }
    }
    if ok == 0 && total > 0 {
        return Err(Failure::Solver("every benchmark row failed".into()));
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> CmdResult {
    let a = load_matrix(&args.input)?;
    let th = args.thresholds.thresholds(a.cols());
    let fixed = Solver::Fixed.run(&a, &th, RrqrMode::Working)?;
    let mixed = Solver::Mixed.run(&a, &th, args.thresholds.rrqr_mode())?;
    let mut out = open_output(&args.csv)?;
    writeln!(out, "solver,{}", AccuracyReport::CSV_HEADER)?;
    let mut all_ok = true;
    for (label, r) in [("fixed", &fixed), ("mixed", &mixed)] {
        let rep = AccuracyReport::measure(&a, r, &fixed.sigma)?;
        all_ok &= rep.within_bounds(a.cols());
        writeln!(out, "{label},{}", rep.csv_row())?;
    }
    if !all_ok {
        return Err(Failure::Solver("accuracy bounds violated".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Svd(a) => cmd_svd(a),
        Command::Eig(a) => cmd_eig(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
