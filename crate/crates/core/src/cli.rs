//! Command-line front end. [`run`] returns the process exit code: 0 when a
//! solve converged (or a non-solving command succeeded), 2 when it hit the
//! iteration cap or stalled, 1 on input errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::admm::Status;
use crate::error::{Error, Result};
use crate::generators::{extended_suite, standard_suite, GeneratorSpec};
use crate::io::{
    append_records, is_native_path, performance_profile, read_problem, read_records, write_native,
    write_profile_csv, write_sdpa, Metric, RunRecord, OUT_DIR_ENV,
};
use crate::problem::ConicProblem;
use crate::solvers::{solve, SolveOptions, SolveOutput, SolverKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_UNCONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "conic-admm",
    version,
    about = "Multi-block ADMM for doubly nonnegative SDPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one problem and append its run record.
    Solve(SolveArgs),
    /// Write a generated instance to a file.
    Generate(GenerateArgs),
    /// Build a performance profile from run records.
    Profile(ProfileArgs),
    /// Run solvers over a built-in suite.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Problem file (SDPA, or native format for `.native`/`.txt`).
    #[arg(
        long,
        conflicts_with = "generate",
        required_unless_present = "generate"
    )]
    problem: Option<PathBuf>,
    /// Generator spec such as `biq:n=11,seed=7`.
    #[arg(long)]
    generate: Option<String>,
    /// Solver name; defaults to admm3c, or spadmm3c with inequalities.
    #[arg(long)]
    solver: Option<String>,
    #[command(flatten)]
    tuning: Tuning,
    /// Replaces the generator seed.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV file to append the run record to.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print every n-th iteration record.
    #[arg(long)]
    log_every: Option<usize>,
}

#[derive(Debug, Args)]
struct Tuning {
    /// Stopping tolerance on η; 1e-6, or 1e-5 with inequalities.
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap; 25000, or 50000 with inequalities.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Initial penalty parameter σ.
    #[arg(long)]
    sigma0: Option<f64>,
    /// Initial step length τ.
    #[arg(long)]
    tau0: Option<f64>,
}

impl Tuning {
    fn options(&self) -> Result<SolveOptions> {
        let mut opts = SolveOptions {
            tol: self.tol,
            max_iters: self.max_iters,
            tau0: self.tau0,
            ..SolveOptions::default()
        };
        if let Some(s) = self.sigma0 {
            opts.sigma0 = s;
        }
        let positive = |v: Option<f64>, flag: &str| match v {
            Some(v) if !(v > 0.0 && v.is_finite()) => Err(Error::InvalidInput(format!(
                "--{flag} must be a positive number, got {v}"
            ))),
            _ => Ok(()),
        };
        positive(self.tol, "tol")?;
        positive(self.sigma0, "sigma0")?;
        positive(self.tau0, "tau0")?;
        if self.max_iters == Some(0) {
            return Err(Error::InvalidInput("--max-iters must be positive".into()));
        }
        Ok(opts)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Sdpa,
    Native,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Generator spec such as `theta:n=20,p=0.3,seed=1`.
    spec: String,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to native for `.native`/`.txt` and SDPA otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ProfileArgs {
    /// Run-record CSV.
    #[arg(long)]
    records: PathBuf,
    /// `iterations` or `time`.
    #[arg(long, default_value = "iterations")]
    metric: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Suite {
    Standard,
    Extended,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value = "standard")]
    suite: Suite,
    /// Comma-separated solver names.
    #[arg(long, default_value = "admm3c,admm3d_1")]
    solvers: String,
    #[command(flatten)]
    tuning: Tuning,
    /// Run-record CSV; iteration and time profiles are written beside it.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Generate(a) => cmd_generate(a).map(|_| EXIT_OK),
        Command::Profile(a) => cmd_profile(a).map(|_| EXIT_OK),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

/// `--out`, else `runs.csv` in the directory named by the environment
/// variable, else nowhere.
fn records_path(out: Option<PathBuf>) -> Option<PathBuf> {
    out.or_else(|| {
        std::env::var_os(OUT_DIR_ENV)
            .filter(|d| !d.is_empty())
            .map(|d| PathBuf::from(d).join("runs.csv"))
    })
}

fn load(
    problem: Option<PathBuf>,
    generate: Option<String>,
    seed: Option<u64>,
) -> Result<ConicProblem> {
    match (problem, generate) {
        (Some(path), _) => read_problem(path),
        (None, Some(spec)) => {
            let mut spec: GeneratorSpec = spec.parse()?;
            if let Some(s) = seed {
                spec = spec.with_seed(s);
            }
            Ok(spec.generate()?.problem)
        }
        (None, None) => Err(Error::InvalidInput("give --problem or --generate".into())),
    }
}

fn solver_for(name: Option<&str>, problem: &ConicProblem) -> Result<SolverKind> {
    name.map_or_else(|| Ok(SolverKind::default_for(problem)), str::parse)
}

/// Prints a line, ignoring a closed stdout.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn exit_code(status: Status) -> i32 {
    match status {
        Status::Converged => EXIT_OK,
        Status::MaxIters | Status::Stalled => EXIT_UNCONVERGED,
    }
}

/// `h:mm:ss` with fractional seconds below one minute shown to 0.01 s.
pub fn format_hms(secs: f64) -> String {
    let secs = secs.max(0.0);
    let whole = secs.floor() as u64;
    let (h, m, s) = (whole / 3600, whole / 60 % 60, whole % 60);
    if whole < 60 {
        format!("0:00:{:05.2}", secs)
    } else {
        format!("{h}:{m:02}:{s:02}")
    }
}

fn summary(name: &str, out: &SolveOutput) -> String {
    format!(
        "{name} solver={} status={} iterations={} eta={:.3e} eta_g={:.3e} objective={} time={}",
        out.solver,
        out.status.as_str(),
        out.iterations,
        out.report.eta,
        out.report.eta_g,
        format_value(out.objective),
        format_hms(out.solve_secs),
    )
}

/// Nine significant digits, in fixed notation when the magnitude allows.
fn format_value(v: f64) -> String {
    let mag = v.abs();
    if mag == 0.0 || (1e-3..1e9).contains(&mag) {
        let digits = 8 - mag.log10().floor().max(0.0) as usize;
        format!("{v:.digits$}")
    } else {
        format!("{v:.8e}")
    }
}

fn cmd_solve(a: SolveArgs) -> Result<i32> {
    let opts = a.tuning.options()?;
    let problem = load(a.problem, a.generate, a.seed)?;
    let kind = solver_for(a.solver.as_deref(), &problem)?;
    let out = solve(&problem, kind, &opts)?;
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    if let Some(every) = a.log_every.filter(|&e| e > 0) {
        for r in out.log.records.iter().filter(|r| r.k % every == 0) {
            let _ = writeln!(
                w,
                "iter {:>6} eta={:.3e} primal={:.3e} dual={:.3e} sigma={:.3e} tau={:.4}",
                r.k, r.eta, r.primal, r.dual, r.sigma, r.tau
            );
        }
    }
    for note in &out.log.notes {
        let _ = writeln!(w, "note: {note}");
    }
    let _ = writeln!(w, "{}", summary(problem.name(), &out));
    if let Some(path) = records_path(a.out) {
        let tol = opts.tolerance(&problem);
        append_records(&path, &[RunRecord::from_output(problem.name(), tol, &out)])?;
    }
    Ok(exit_code(out.status))
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let mut spec: GeneratorSpec = a.spec.parse()?;
    if let Some(s) = a.seed {
        spec = spec.with_seed(s);
    }
    let g = spec.generate()?;
    let format = a.format.unwrap_or(if is_native_path(&a.out) {
        Format::Native
    } else {
        Format::Sdpa
    });
    match format {
        Format::Sdpa => write_sdpa(&g.problem, &a.out)?,
        Format::Native => write_native(&g.problem, &a.out)?,
    }
    say(&format!(
        "wrote {} (n={}, m_E={}, m_I={}) to {}",
        g.problem.name(),
        g.problem.n(),
        g.problem.m_eq(),
        g.problem.m_ineq(),
        a.out.display()
    ));
    if let Some(r) = g.reference {
        say(&format!("reference value {} ({:?})", r.value, r.side));
    }
    for note in &g.notes {
        say(&format!("note: {note}"));
    }
    Ok(())
}

fn cmd_profile(a: ProfileArgs) -> Result<()> {
    let metric: Metric = a.metric.parse()?;
    let records = read_records(&a.records)?;
    let profile = performance_profile(&records, metric)?;
    write_profile_csv(&profile, &a.out)?;
    say(&format!(
        "wrote profile of {} solvers to {}",
        profile.solvers.len(),
        a.out.display()
    ));
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<i32> {
    let opts = a.tuning.options()?;
    let kinds = a
        .solvers
        .split(',')
        .map(|s| s.trim().parse::<SolverKind>())
        .collect::<Result<Vec<_>>>()?;
    let specs = match a.suite {
        Suite::Standard => standard_suite(),
        Suite::Extended => extended_suite(),
    };
    let out_path = records_path(a.out);
    let mut records = Vec::new();
    let mut all_converged = true;
    for spec in &specs {
        let problem = spec.generate()?.problem;
        for &kind in &kinds {
            let out = solve(&problem, kind, &opts)?;
            say(&summary(&spec.to_string(), &out));
            all_converged &= out.status == Status::Converged;
            let rec = RunRecord::from_output(&spec.to_string(), opts.tolerance(&problem), &out);
            if let Some(path) = &out_path {
                append_records(path, std::slice::from_ref(&rec))?;
            }
            records.push(rec);
        }
    }
    if let Some(path) = &out_path {
        for (metric, tag) in [(Metric::Iterations, "iterations"), (Metric::Time, "time")] {
            let target = sibling(path, &format!("profile_{tag}.csv"));
            write_profile_csv(&performance_profile(&records, metric)?, &target)?;
        }
    }
    Ok(if all_converged {
        EXIT_OK
    } else {
        EXIT_UNCONVERGED
    })
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent()
        .map_or_else(|| PathBuf::from(name), |d| d.join(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_format() {
        assert_eq!(format_value(-82.48468582), "-82.4846858");
        assert_eq!(format_value(0.0), "0.00000000");
        assert_eq!(format_value(1.5e-7), "1.50000000e-7");
    }

    #[test]
    fn hms_format() {
        assert_eq!(format_hms(1.234), "0:00:01.23");
        assert_eq!(format_hms(3723.9), "1:02:03");
        assert_eq!(format_hms(-1.0), "0:00:00.00");
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["conic-admm", "solve"]), EXIT_INPUT);
        assert_eq!(run(["conic-admm", "frobnicate"]), EXIT_INPUT);
        assert_eq!(run(["conic-admm", "--help"]), EXIT_OK);
    }
}
