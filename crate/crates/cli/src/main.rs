use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lppsim::perfect::{trace_run, write_trace_csv, SimOptions, DEFAULT_BUDGET, DEFAULT_CAP};
use lppsim::report::{summary_line, write_estimate_csv, write_sweep_csv};
use lppsim::validate::{run_all, ValidateConfig};
use lppsim::{
    default_ell, estimate_c, parse_grid, ramanujan_psi, sweep_ell, sweep_p, Charge,
    ChargeDistribution, EllParameter, Error, RunSettings, StreamKey,
};

#[derive(Parser)]
#[command(
    name = "lppsim",
    version,
    about = "Perfect simulation of last passage percolation constants"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate C(F) from independent perfect samples.
    Estimate(EstimateArgs),
    /// Complexity and estimate across a grid of ell values.
    SweepEll(SweepEllArgs),
    /// Complexity across p for F = p δ_1 + (1-p) δ_{-inf}.
    SweepP(SweepPArgs),
    /// Compare an estimate for p δ_1 + (1-p) δ_0 with 1/ψ(1-p).
    OracleCheck(OracleArgs),
    /// Run the self-check suites.
    Validate(ValidateArgs),
    /// Dump every table access of a single run as CSV.
    Trace(TraceArgs),
}

#[derive(Args)]
struct Common {
    /// Seed for every random stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, env = "LPPSIM_WORKERS", default_value_t = 0)]
    workers: usize,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Abort a replica whose backward search passes |t| = cap.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: u64,
    /// Abort a replica that draws more than this many charges.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
}

impl Common {
    fn settings(&self) -> RunSettings {
        RunSettings::new(self.seed)
            .workers(self.workers)
            .cap(self.cap)
            .budget(self.budget)
    }
}

#[derive(Args)]
struct EstimateArgs {
    /// Charge law: JSON text, a JSON file, or a bare kind name.
    #[arg(long)]
    dist: String,
    #[arg(long)]
    ell: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepEllArgs {
    #[arg(long)]
    dist: String,
    /// start:stop:count, endpoints included.
    #[arg(long)]
    grid: String,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepPArgs {
    #[arg(long)]
    grid: String,
    #[arg(long, default_value_t = 0.5)]
    ell: f64,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long)]
    ell: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    SkipStopCheck,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Inject a defect into the backward search.
    #[arg(long, value_enum)]
    fault: Option<FaultArg>,
    /// Reduced instance counts.
    #[arg(long)]
    quick: bool,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    dist: String,
    #[arg(long)]
    ell: Option<f64>,
    /// Replica index within the seed.
    #[arg(long, default_value_t = 0)]
    replica: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Config(String),
    Check,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::Check => 1,
        Failure::Lib(Error::CapExceeded { .. } | Error::BudgetExceeded { .. }) => 3,
        Failure::Lib(Error::Io(_)) => 1,
        Failure::Lib(_) | Failure::Config(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::SweepEll(a) => cmd_sweep_ell(a),
        Command::SweepP(a) => cmd_sweep_p(a),
        Command::OracleCheck(a) => cmd_oracle(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Trace(a) => cmd_trace(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Lib(e) => eprintln!("error: {e}"),
                Failure::Config(msg) => eprintln!("error: {msg}"),
                Failure::Check => {}
            }
            ExitCode::from(exit_code(&f))
        }
    }
}

/// `--dist` accepts inline JSON, a path to a JSON file, or a kind name such
/// as `shifted_exponential`.
fn load_dist(arg: &str) -> Result<ChargeDistribution, Failure> {
    let text = arg.trim();
    if text.starts_with('{') {
        return Ok(ChargeDistribution::from_json(text)?);
    }
    if Path::new(text).is_file() {
        let body = std::fs::read_to_string(text)?;
        return Ok(ChargeDistribution::from_json(&body)?);
    }
    let doc = serde_json::json!({ "kind": text }).to_string();
    ChargeDistribution::from_json(&doc).map_err(|e| {
        Failure::Config(format!(
            "--dist {text:?} is not JSON, a file, or a parameter-free kind: {e}"
        ))
    })
}

/// CSV goes to `--out` (summary on stdout) or to stdout (summary on stderr).
fn emit(
    out: &Option<PathBuf>,
    summary: &[String],
    write: impl FnOnce(&mut dyn Write) -> lppsim::Result<()>,
) -> Result<(), Failure> {
    match out {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            write(&mut file)?;
            file.flush()?;
            for line in summary {
                println!("{line}");
            }
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush()?;
            for line in summary {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

fn cmd_estimate(a: EstimateArgs) -> Result<(), Failure> {
    let dist = load_dist(&a.dist)?;
    let r = estimate_c(&dist, a.ell, a.n, a.common.settings())?;
    emit(&a.common.out, &[summary_line(&r)], |w| {
        write_estimate_csv(&dist, &r, w)
    })
}

fn grid(spec: &str) -> Result<Vec<f64>, Failure> {
    parse_grid(spec).map_err(|e| Failure::Config(e.to_string()))
}

fn sweep_summary(rows: &[lppsim::SweepRow]) -> Vec<String> {
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    vec![format!("{} grid points, {} failed", rows.len(), failed)]
}

fn cmd_sweep_ell(a: SweepEllArgs) -> Result<(), Failure> {
    let dist = load_dist(&a.dist)?;
    let g = grid(&a.grid)?;
    let rows = sweep_ell(&dist, &g, a.n, a.common.settings());
    emit(&a.common.out, &sweep_summary(&rows), |w| {
        write_sweep_csv(&rows, w)
    })
}

fn cmd_sweep_p(a: SweepPArgs) -> Result<(), Failure> {
    let g = grid(&a.grid)?;
    let rows = sweep_p(&g, a.ell, a.n, a.common.settings());
    emit(&a.common.out, &sweep_summary(&rows), |w| {
        write_sweep_csv(&rows, w)
    })
}

fn cmd_oracle(a: OracleArgs) -> Result<(), Failure> {
    let dist = ChargeDistribution::two_point(a.p, Charge::ZERO)?;
    let reference = 1.0 / ramanujan_psi(1.0 - a.p, 1e-15)?;
    let r = estimate_c(&dist, a.ell, a.n, a.common.settings())?;
    let z = (r.c_hat - reference) / r.stderr;
    let pass = (r.c_hat - reference).abs() <= 3.0 * r.stderr;
    let verdict = format!(
        "{} reference 1/psi({}) = {:.10}, c_hat = {:.6}, stderr = {:.6}, z = {:.3}",
        if pass { "PASS" } else { "FAIL" },
        1.0 - a.p,
        reference,
        r.c_hat,
        r.stderr,
        z
    );
    emit(&a.common.out, &[summary_line(&r), verdict], |w| {
        write_estimate_csv(&dist, &r, w)
    })?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn cmd_validate(a: ValidateArgs) -> Result<(), Failure> {
    let base = if a.quick {
        ValidateConfig::quick(a.seed)
    } else {
        ValidateConfig {
            seed: a.seed,
            ..ValidateConfig::default()
        }
    };
    let cfg = ValidateConfig {
        fault: a
            .fault
            .map(|FaultArg::SkipStopCheck| lppsim::Fault::SkipStopCheck),
        ..base
    };
    let reports = run_all(&cfg)?;
    for r in &reports {
        println!("{r}");
    }
    if reports.iter().all(|r| r.passed()) {
        println!("all {} suites passed", reports.len());
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn cmd_trace(a: TraceArgs) -> Result<(), Failure> {
    let dist = load_dist(&a.dist)?.normalized()?;
    let ell = match a.ell {
        Some(x) => EllParameter::new(&dist, x)?,
        None => default_ell(&dist)?,
    };
    let key = StreamKey::new(a.common.seed).with_replica(a.replica);
    let opts = SimOptions {
        cap: a.common.cap,
        budget: a.common.budget,
        ..SimOptions::default()
    };
    let (rec, log) = trace_run(&dist, ell, key, &opts)?;
    let summary = format!(
        "T* = {}, m_bar = {}, trajectory = {:?}, variates = {}",
        rec.t_star, rec.m_bar, rec.j_trajectory, rec.variates_drawn
    );
    emit(&a.common.out, &[summary], |w| write_trace_csv(&log, w))
}
