//! `compop`: run problem files through the verdict engine and its oracles.
//!
//! Exit codes: 0 when every requested cross-check passes, 1 when one fails,
//! 2 on an input error.

mod problem;
mod tasks;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use compop::suite::{run_suite, SuiteConfig, DEFAULT_SEED};
use compop::Error;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use problem::Problem;
use tasks::{run_task, TaskReport};

#[derive(Parser)]
#[command(name = "compop", version, about = "Composition operators on Fock-type spaces: verdicts and oracle cross-checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tasks of a problem file with their oracle cross-checks.
    Analyze(ProblemArgs),
    /// Like `analyze`, but a task that errors also counts as a failure and the
    /// compression oracle always runs.
    Verify(ProblemArgs),
    /// Compression-norm curve against the closed-form norm, as CSV.
    Converge(ProblemArgs),
    /// The built-in acceptance suite.
    Suite(SuiteArgs),
}

#[derive(Args)]
struct ProblemArgs {
    /// Problem file (JSON); `-` reads stdin.
    #[arg(long)]
    input: PathBuf,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the oracle convergence curve here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Relative tolerance for engine-versus-oracle comparisons.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Largest polynomial degree of the truncations.
    #[arg(long)]
    truncation: Option<usize>,
    /// Overrides the seed of the problem file.
    #[arg(long)]
    seed: Option<u64>,
    /// Only run tasks whose name contains this string.
    #[arg(long)]
    filter: Option<String>,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Criterion name substring or number.
    #[arg(long)]
    filter: Option<String>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

/// Failure of the command itself, as opposed to a failed cross-check.
struct InputError(Error);

impl From<Error> for InputError {
    fn from(e: Error) -> Self {
        InputError(e)
    }
}

#[derive(Serialize)]
struct Report<'a> {
    phi: &'a str,
    dim: usize,
    truncation: usize,
    seed: u64,
    oracle_tolerance: f64,
    tasks: &'a [TaskReport],
    checks_run: usize,
    checks_failed: usize,
    task_errors: usize,
    passed: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => run_problem(&args, false),
        Command::Verify(args) => run_problem(&args, true),
        Command::Converge(args) => run_converge(&args),
        Command::Suite(args) => run_suite_cmd(&args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(InputError(e)) => {
            let body = json!({ "error": { "code": e.code(), "message": e.to_string() } });
            println!("{}", serde_json::to_string_pretty(&body).expect("error report serializes"));
            eprintln!("compop: {}: {e}", e.code());
            ExitCode::from(2)
        }
    }
}

fn read_input(path: &Path) -> Result<String, InputError> {
    let text = if path.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin())
    } else {
        std::fs::read_to_string(path)
    };
    text.map_err(|e| InputError(Error::Parse(format!("{}: {e}", path.display()))))
}

fn write_output(path: &Path, text: &str) -> Result<(), InputError> {
    std::fs::write(path, text).map_err(|e| InputError(Error::Parse(format!("cannot write {}: {e}", path.display()))))
}

fn load(args: &ProblemArgs) -> Result<Problem, InputError> {
    let mut p = Problem::parse(&read_input(&args.input)?)?;
    if let Some(n) = args.truncation {
        p.truncation = n;
    }
    if let Some(s) = args.seed {
        p.seed = s;
    }
    if let Some(r) = args.tolerance {
        if r.is_nan() || r <= 0.0 {
            return Err(Error::Parse(format!("--tolerance must be positive, got {r}")).into());
        }
        p.oracle_rtol = r;
    }
    Ok(p)
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, InputError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| InputError(Error::Parse(format!("thread pool: {e}"))))
}

fn emit_json(out: Option<&Path>, value: &impl Serialize) -> Result<(), InputError> {
    let text = serde_json::to_string_pretty(value).expect("report serializes") + "\n";
    match out {
        Some(path) => write_output(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_problem(args: &ProblemArgs, strict: bool) -> Result<bool, InputError> {
    let mut p = load(args)?;
    if strict && !p.tasks.iter().any(|t| matches!(t, problem::Task::Oracle)) {
        p.tasks.push(problem::Task::Oracle);
    }
    let selected: Vec<usize> = (0..p.tasks.len())
        .filter(|&i| args.filter.as_ref().is_none_or(|f| p.tasks[i].name().contains(f.as_str())))
        .collect();
    let start = Instant::now();
    let reports: Vec<TaskReport> = pool(args.jobs)?.install(|| selected.par_iter().map(|&i| run_task(&p, i)).collect());
    let checks_run = reports.iter().map(|r| r.checks.len()).sum();
    let checks_failed = reports.iter().flat_map(|r| &r.checks).filter(|c| !c.passed).count();
    let task_errors = reports.iter().filter(|r| r.error.is_some()).count();
    let passed = checks_failed == 0 && !(strict && task_errors > 0);
    let report = Report {
        phi: p.phi.label(),
        dim: p.symbol.dim(),
        truncation: p.truncation,
        seed: p.seed,
        oracle_tolerance: p.oracle_rtol,
        tasks: &reports,
        checks_run,
        checks_failed,
        task_errors,
        passed,
    };
    emit_json(args.out.as_deref(), &report)?;
    if let Some(path) = &args.csv {
        // The compression curve if there is one, otherwise the first curve produced.
        let curve = reports
            .iter()
            .find(|r| r.task == "oracle" && r.curve.is_some())
            .or_else(|| reports.iter().find(|r| r.curve.is_some()))
            .and_then(|r| r.curve.as_ref());
        match curve {
            Some(c) => write_output(path, &c.to_csv())?,
            None => eprintln!("compop: no task produced a curve; {} not written", path.display()),
        }
    }
    eprint!("{}", summary(&reports, passed, start.elapsed()));
    Ok(passed)
}

fn summary(reports: &[TaskReport], passed: bool, total: std::time::Duration) -> String {
    let mut s = String::new();
    for r in reports {
        let status = match (&r.error, r.passed()) {
            (Some(e), _) => format!("error {}", e.code),
            (None, true) => "ok".to_string(),
            (None, false) => "FAIL".to_string(),
        };
        let ok = r.checks.iter().filter(|c| c.passed).count();
        let _ = write!(s, "{:>3} {:<9} {:<34} checks {ok}/{}", r.index, r.task, status, r.checks.len());
        let _ = writeln!(s, "  {:.1} ms", r.elapsed.as_secs_f64() * 1e3);
        for c in r.checks.iter().filter(|c| !c.passed) {
            let _ = writeln!(s, "      failed {}: value {:?} target {:?}", c.name, c.value, c.target);
        }
    }
    let _ = writeln!(s, "{} in {:.2} s", if passed { "all checks pass" } else { "checks FAILED" }, total.as_secs_f64());
    s
}

fn run_converge(args: &ProblemArgs) -> Result<bool, InputError> {
    let mut p = load(args)?;
    p.tasks = vec![problem::Task::Oracle];
    let start = Instant::now();
    let r = run_task(&p, 0);
    if let Some(e) = &r.error {
        eprintln!("compop: {}: {}", e.code, e.message);
    }
    let passed = r.error.is_none() && r.passed();
    let csv = r.curve.as_ref().map(|c| c.to_csv()).unwrap_or_default();
    let summary = json!({
        "phi": p.phi.label(),
        "dim": p.symbol.dim(),
        "truncation": p.truncation,
        "oracle_tolerance": p.oracle_rtol,
        "result": r.result,
        "error": r.error,
        "checks": r.checks,
        "passed": passed,
    });
    match &args.csv {
        Some(path) => {
            write_output(path, &csv)?;
            emit_json(args.out.as_deref(), &summary)?;
        }
        None => {
            print!("{csv}");
            if let Some(path) = &args.out {
                emit_json(Some(path), &summary)?;
            }
        }
    }
    eprintln!("converge: {} in {:.2} s", if passed { "ok" } else { "FAILED" }, start.elapsed().as_secs_f64());
    Ok(passed)
}

fn run_suite_cmd(args: &SuiteArgs) -> Result<bool, InputError> {
    let cfg = SuiteConfig {
        seed: args.seed,
        filter: args.filter.clone(),
        jobs: args.jobs.unwrap_or(0),
        ..SuiteConfig::default()
    };
    let report = run_suite(&cfg)?;
    print!("{}", report.table());
    if let Some(path) = &args.out {
        emit_json(Some(path), &report)?;
    }
    for row in &report.rows {
        eprintln!("{:02} {:<20} {:.2} s", row.id, row.name, row.elapsed.as_secs_f64());
    }
    Ok(report.all_passed)
}
