use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fpverify::driver::{self, Settings, EXIT_INVALID, EXIT_TOOL_ERROR, EXIT_VALID};
use fpverify::float::Precision;
use fpverify::frontend::{load, MathFn};
use fpverify::interp::{parse_args, run_contract};
use fpverify::mathspec::fuzz::fuzz_host;
use fpverify::portfolio::{default_solvers, parse_solver_list, Portfolio, SolverSpec};
use fpverify::vcgen::dump_vcs;

#[derive(Parser)]
#[command(name = "fpverify", version, about = "Verify FPL programs with IEEE-754 semantics")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Verify every contract and injected check in the given files.
    Check(CheckArgs),
    /// Evaluate a function on concrete arguments.
    Eval(EvalArgs),
    /// Fuzz the math contracts against the host library.
    Fuzz(FuzzArgs),
    /// Time solvers on a directory of dumped scripts.
    Bench(BenchArgs),
    /// Write one SMT-LIB file per VC.
    DumpVcs(DumpArgs),
}

#[derive(Args)]
struct SolverArgs {
    /// Solvers as `name:path,...`; bare preset names are looked up.
    #[arg(long)]
    solvers: Option<String>,
    /// Per-VC time limit in seconds.
    #[arg(long, default_value_t = 300.0)]
    timeout: f64,
    /// Try solvers one after another instead of racing them.
    #[arg(long)]
    sequential: bool,
}

impl SolverArgs {
    fn specs(&self) -> Result<Vec<SolverSpec>> {
        Ok(match &self.solvers {
            Some(list) => parse_solver_list(list)?,
            None => default_solvers(),
        })
    }

    fn timeout(&self) -> Result<Duration> {
        if !(self.timeout > 0.0 && self.timeout.is_finite()) {
            bail!("--timeout must be a positive number of seconds");
        }
        Ok(Duration::from_secs_f64(self.timeout))
    }
}

#[derive(Args)]
struct CheckFlags {
    /// Do not check comparisons for NaN operands.
    #[arg(long)]
    no_nan_checks: bool,
    /// Do not check float-to-integer casts.
    #[arg(long)]
    no_cast_checks: bool,
    /// Skip injected checks in this function.
    #[arg(long = "suppress-function", value_name = "NAME")]
    suppress_function: Vec<String>,
    /// Skip the injected check at LINE:COL.
    #[arg(long = "suppress-site", value_name = "LINE:COL")]
    suppress_site: Vec<String>,
}

impl CheckFlags {
    fn config(&self) -> Result<fpverify::checks::CheckConfig> {
        driver::checks_from_flags(self.no_nan_checks, self.no_cast_checks, &self.suppress_function, &self.suppress_site)
            .map_err(anyhow::Error::msg)
    }
}

#[derive(Args)]
struct CheckArgs {
    files: Vec<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    flags: CheckFlags,
    /// Concurrent VCs.
    #[arg(long)]
    jobs: Option<usize>,
    /// Write the JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Re-solve a spurious VC up to N times with the model excluded.
    #[arg(long, default_value_t = 3)]
    retries: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write one SMT-LIB file per VC into DIR (a subdirectory per input
    /// when several files are given).
    #[arg(long, value_name = "DIR")]
    dump_vcs: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    file: PathBuf,
    function: String,
    /// Comma-separated arguments; tuples in parentheses.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    args: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecArg {
    F32,
    F64,
    Both,
}

#[derive(Args)]
struct FuzzArgs {
    /// Functions to fuzz; all when omitted.
    #[arg(long = "function", value_name = "NAME")]
    function: Vec<String>,
    #[arg(long, value_enum, default_value = "f64")]
    precision: PrecArg,
    /// Random draws per function.
    #[arg(long, default_value_t = 1_000_000)]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print reports as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    dir: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct DumpArgs {
    file: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    flags: CheckFlags,
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn check(a: CheckArgs) -> Result<i32> {
    let checks = a.flags.config()?;
    let timeout = a.solver.timeout()?;
    let mut sources = vec![];
    for f in &a.files {
        sources.push((f.display().to_string(), read(f)?));
    }
    let settings = Settings {
        checks,
        jobs: a.jobs.unwrap_or_else(|| Settings::default().jobs),
        spurious_retries: a.retries,
        seed: a.seed,
    };
    let mut prepared = vec![];
    for (path, text) in &sources {
        prepared.push(driver::prepare(path, text, &settings.checks)?);
    }
    if let Some(dir) = &a.dump_vcs {
        for (p, file) in prepared.iter().zip(&a.files) {
            let out = match prepared.len() {
                1 => dir.clone(),
                _ => dir.join(file.file_stem().unwrap_or_default()),
            };
            dump_vcs(&p.vcs, &out)?;
        }
    }
    let portfolio = Portfolio::new(a.solver.specs()?, timeout, a.solver.sequential)?;
    for r in &portfolio.rejected {
        eprintln!("warning: solver unavailable: {r}");
    }
    let report = driver::check_sources(&sources, &portfolio, &settings)?;
    print!("{}", driver::render_text(&report));
    if let Some(p) = &a.json {
        std::fs::write(p, report.to_json()).with_context(|| format!("cannot write {}", p.display()))?;
    }
    Ok(report.exit_code)
}

fn eval(a: EvalArgs) -> Result<i32> {
    let path = a.file.display().to_string();
    let program = match load(&path, &read(&a.file)?) {
        Ok(p) => p,
        Err(ds) => {
            for d in ds {
                eprintln!("{d}");
            }
            return Ok(EXIT_TOOL_ERROR);
        }
    };
    let f = program.function(&a.function).with_context(|| format!("no function `{}`", a.function))?;
    let args = parse_args(&a.args, &f.params)?;
    match run_contract(&program, &a.function, &args) {
        Ok(run) => {
            println!("{} [{}]", run.value, run.value.hex());
            if let Some(p) = run.precondition {
                println!("precondition: {}", if p { "holds" } else { "violated" });
            }
            if let Some(p) = run.postcondition {
                println!("postcondition: {}", if p { "holds" } else { "violated" });
            }
            Ok(EXIT_VALID)
        }
        Err(e) => {
            println!("runtime failure: {e}");
            Ok(EXIT_INVALID)
        }
    }
}

fn fuzz(a: FuzzArgs) -> Result<i32> {
    let mut functions = vec![];
    for name in &a.function {
        functions.push(MathFn::from_name(name).with_context(|| format!("unknown math function `{name}`"))?);
    }
    if functions.is_empty() {
        functions = MathFn::ALL.to_vec();
    }
    let precs = match a.precision {
        PrecArg::F32 => vec![Precision::F32],
        PrecArg::F64 => vec![Precision::F64],
        PrecArg::Both => vec![Precision::F32, Precision::F64],
    };
    let mut failed = false;
    let mut all = vec![];
    for p in precs {
        for r in fuzz_host(&functions, p, a.n, a.seed) {
            failed |= !r.passed();
            if !a.json {
                println!(
                    "{} {:?}: {} draws + {} grid points ({} subnormal), {} violations, seed {}",
                    r.function, r.prec, r.samples, r.grid_points, r.subnormal_draws, r.violation_count, r.seed
                );
                for v in &r.violations {
                    println!("    {v}");
                }
            }
            all.push(r);
        }
    }
    if a.json {
        println!("{}", serde_json::to_string_pretty(&all)?);
    }
    Ok(if failed { EXIT_INVALID } else { EXIT_VALID })
}

fn bench(a: BenchArgs) -> Result<i32> {
    let timeout = a.solver.timeout()?;
    let portfolio = Portfolio::new(a.solver.specs()?, timeout, true)?;
    let table = driver::bench(&a.dir, &portfolio.solvers, timeout, a.reps)
        .with_context(|| format!("cannot read {}", a.dir.display()))?;
    for w in &table.warnings {
        eprintln!("warning: {w}");
    }
    let csv = table.to_csv()?;
    match &a.csv {
        Some(p) => std::fs::write(p, csv).with_context(|| format!("cannot write {}", p.display()))?,
        None => print!("{csv}"),
    }
    Ok(EXIT_VALID)
}

fn dump(a: DumpArgs) -> Result<i32> {
    let path = a.file.display().to_string();
    let p = driver::prepare(&path, &read(&a.file)?, &a.flags.config()?)?;
    for d in &p.diagnostics {
        eprintln!("{d}");
    }
    if !p.diagnostics.is_empty() {
        return Ok(EXIT_TOOL_ERROR);
    }
    for f in dump_vcs(&p.vcs, &a.out)? {
        println!("{}", f.display());
    }
    Ok(EXIT_VALID)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.command {
        Cmd::Check(a) => check(a),
        Cmd::Eval(a) => eval(a),
        Cmd::Fuzz(a) => fuzz(a),
        Cmd::Bench(a) => bench(a),
        Cmd::DumpVcs(a) => dump(a),
    };
    match r {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_TOOL_ERROR as u8)
        }
    }
}
