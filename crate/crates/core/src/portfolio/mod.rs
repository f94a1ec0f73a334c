//! External SMT solvers run as a portfolio over standalone scripts.

pub mod model;

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::str::FromStr;
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

pub use model::{decode_value, parse_model, Model, ModelParseError, ModelValue};

/// Host-side slack on top of the solver's own time limit.
const KILL_GRACE: Duration = Duration::from_millis(1500);
const PROBE_TIMEOUT: Duration = Duration::from_secs(20);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Theory {
    FP,
    BV,
    UF,
    Int,
}

impl Theory {
    /// Theories a script needs, by inspection of its text.
    pub fn required_by(script: &str) -> BTreeSet<Theory> {
        let mut t = BTreeSet::new();
        if script.contains("FloatingPoint") {
            t.insert(Theory::FP);
        }
        if script.contains("BitVec") {
            t.insert(Theory::BV);
        }
        if script.contains("declare-sort") || script.lines().any(|l| l.starts_with("(declare-fun") && !l.contains(" () ")) {
            t.insert(Theory::UF);
        }
        if script.contains(" Int)") || script.contains(" Int ") {
            t.insert(Theory::Int);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SolverSpec {
    pub name: String,
    pub path: PathBuf,
    /// Arguments; `{ms}` and `{s}` expand to the per-VC time limit.
    pub args: Vec<String>,
    pub version_args: Vec<String>,
    pub theories: BTreeSet<Theory>,
}

pub const PRESET_NAMES: [&str; 3] = ["bitwuzla", "cvc5", "z3"];

fn all_theories() -> BTreeSet<Theory> {
    [Theory::FP, Theory::BV, Theory::UF, Theory::Int].into()
}

impl SolverSpec {
    /// A named preset at `path`.
    pub fn preset(name: &str, path: impl Into<PathBuf>) -> Option<SolverSpec> {
        let (args, theories): (Vec<&str>, BTreeSet<Theory>) = match name {
            "z3" => (vec!["-in", "-T:{s}"], all_theories()),
            "cvc5" => (vec!["--lang=smt2", "--tlimit={ms}"], all_theories()),
            "bitwuzla" => (vec!["--time-limit={ms}"], [Theory::FP, Theory::BV, Theory::UF].into()),
            _ => return None,
        };
        Some(SolverSpec {
            name: name.into(),
            path: path.into(),
            args: args.into_iter().map(String::from).collect(),
            version_args: vec!["--version".into()],
            theories,
        })
    }

    /// An unknown solver reading SMT-LIB on stdin, limited by the host only.
    pub fn custom(name: &str, path: impl Into<PathBuf>) -> SolverSpec {
        SolverSpec { name: name.into(), path: path.into(), args: vec![], version_args: vec!["--version".into()], theories: all_theories() }
    }

    fn expanded_args(&self, timeout: Duration) -> Vec<String> {
        let ms = timeout.as_millis().max(1).to_string();
        let s = timeout.as_secs().max(1).to_string();
        self.args.iter().map(|a| a.replace("{ms}", &ms).replace("{s}", &s)).collect()
    }

    pub fn supports(&self, needed: &BTreeSet<Theory>) -> bool {
        needed.is_subset(&self.theories)
    }

    /// Runs the version probe; returns the first output line.
    pub fn probe(&self) -> Result<String, String> {
        let mut child = Command::new(&self.path)
            .args(&self.version_args)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| format!("{}: {e}", self.path.display()))?;
        let out = collect(&mut child, PROBE_TIMEOUT);
        match out {
            Some((status, stdout)) if status => {
                let line = stdout.lines().next().unwrap_or("").trim().to_string();
                if line.is_empty() {
                    Err(format!("{}: empty version output", self.path.display()))
                } else {
                    Ok(line)
                }
            }
            Some(_) => Err(format!("{}: version probe failed", self.path.display())),
            None => Err(format!("{}: version probe timed out", self.path.display())),
        }
    }
}

/// Waits for `child` up to `limit`, returning success and stdout.
fn collect(child: &mut Child, limit: Duration) -> Option<(bool, String)> {
    let mut stdout = child.stdout.take()?;
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        let _ = tx.send(s);
    });
    match rx.recv_timeout(limit) {
        Ok(s) => {
            let ok = child.wait().map(|st| st.success()).unwrap_or(false);
            Some((ok, s))
        }
        Err(_) => {
            let _ = child.kill();
            let _ = child.wait();
            None
        }
    }
}

fn env_key(name: &str) -> String {
    format!("FPVERIFY_{}", name.to_uppercase().replace('-', "_"))
}

fn which(cmd: &str) -> Option<PathBuf> {
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path).map(|d| d.join(cmd)).find(|p| p.is_file())
}

/// Where a preset solver is found: `FPVERIFY_<NAME>`, then `PATH`, then a
/// `<name>-stdin` wrapper on `PATH` or in the repository's `tools/`.
pub fn locate(name: &str) -> Option<PathBuf> {
    if let Some(p) = std::env::var_os(env_key(name)) {
        return Some(PathBuf::from(p));
    }
    let wrapper = format!("{name}-stdin");
    which(name).or_else(|| which(&wrapper)).or_else(|| {
        let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../tools").join(&wrapper);
        p.is_file().then_some(p)
    })
}

/// The default portfolio: FP/BV specialist first, then the general solvers.
pub fn default_solvers() -> Vec<SolverSpec> {
    PRESET_NAMES.iter().filter_map(|n| SolverSpec::preset(n, locate(n)?)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PortfolioError {
    #[error("no SMT solver available: {}", .0.join("; "))]
    NoSolverAvailable(Vec<String>),
    #[error("solvers disagree: {valid} says valid, {invalid} says invalid")]
    Disagreement { valid: String, invalid: String, transcripts: Vec<(String, String)> },
    #[error("bad solver list `{0}`: expected name:path,...")]
    BadSolverList(String),
}

/// Parses `name:path,...`; preset names get their argument templates.
pub fn parse_solver_list(text: &str) -> Result<Vec<SolverSpec>, PortfolioError> {
    let mut out = vec![];
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let spec = match item.split_once(':') {
            Some((name, path)) if !name.is_empty() && !path.is_empty() => {
                SolverSpec::preset(name, path).unwrap_or_else(|| SolverSpec::custom(name, path))
            }
            None if PRESET_NAMES.contains(&item) => {
                let path = locate(item).ok_or_else(|| PortfolioError::BadSolverList(text.into()))?;
                SolverSpec::preset(item, path).ok_or_else(|| PortfolioError::BadSolverList(text.into()))?
            }
            _ => return Err(PortfolioError::BadSolverList(text.into())),
        };
        out.push(spec);
    }
    if out.is_empty() {
        return Err(PortfolioError::BadSolverList(text.into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Valid,
    Invalid,
    Unknown,
    Timeout,
    Error,
}

impl Status {
    pub fn is_definitive(self) -> bool {
        matches!(self, Status::Valid | Status::Invalid)
    }

    /// Preference among non-definitive outcomes.
    fn strength(self) -> u8 {
        match self {
            Status::Valid | Status::Invalid => 3,
            Status::Unknown => 2,
            Status::Timeout => 1,
            Status::Error => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Status::Valid => "valid",
            Status::Invalid => "invalid",
            Status::Unknown => "unknown",
            Status::Timeout => "timeout",
            Status::Error => "error",
        }
    }
}

impl FromStr for Status {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "valid" => Status::Valid,
            "invalid" => Status::Invalid,
            "unknown" => Status::Unknown,
            "timeout" => Status::Timeout,
            "error" => Status::Error,
            _ => return Err(format!("unknown status `{s}`")),
        })
    }
}

/// Outcome of one solver process.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverRun {
    pub solver: String,
    pub status: Status,
    pub model: Option<Model>,
    pub elapsed: Duration,
    pub output: String,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub vc_id: usize,
    pub status: Status,
    pub model: Option<Model>,
    pub solver: String,
    pub elapsed_ms: u64,
    /// Input symbols missing from the model, bound to zero.
    pub defaulted: Vec<String>,
    /// Per-solver notes for non-definitive outcomes.
    pub notes: Vec<String>,
}

fn interpret(solver: &str, output: String, exited_ok: bool, killed: bool, elapsed: Duration, timeout: Duration) -> SolverRun {
    let first = output.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("").to_string();
    let mut run = SolverRun { solver: solver.into(), status: Status::Error, model: None, elapsed, output, message: None };
    match first.as_str() {
        "unsat" => run.status = Status::Valid,
        "sat" => {
            let rest = run.output.splitn(2, "sat").nth(1).unwrap_or("").to_string();
            match parse_model(&rest) {
                Ok(m) => {
                    run.status = Status::Invalid;
                    run.model = Some(m);
                }
                Err(e) => run.message = Some(e.to_string()),
            }
        }
        "unknown" | "timeout" => {
            run.status = if elapsed + Duration::from_millis(200) >= timeout || first == "timeout" {
                Status::Timeout
            } else {
                Status::Unknown
            };
        }
        _ if killed => run.status = Status::Timeout,
        _ => {
            run.message = Some(if first.is_empty() {
                format!("no answer (exit {})", if exited_ok { "ok" } else { "failure" })
            } else {
                first.chars().take(300).collect()
            })
        }
    }
    run
}

struct Running {
    child: Child,
    start: Instant,
    done: bool,
}

/// Launches `solvers` on `script` together. With `race`, the first
/// definitive answer stops the others.
fn run_all(script: &str, solvers: &[&SolverSpec], timeout: Duration, race: bool) -> Vec<SolverRun> {
    let (tx, rx) = mpsc::channel::<(usize, String)>();
    let mut procs: Vec<Option<Running>> = vec![];
    let mut runs: Vec<Option<SolverRun>> = vec![None; solvers.len()];
    for (i, s) in solvers.iter().enumerate() {
        let spawned = Command::new(&s.path)
            .args(s.expanded_args(timeout))
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn();
        let mut child = match spawned {
            Ok(c) => c,
            Err(e) => {
                runs[i] = Some(SolverRun {
                    solver: s.name.clone(),
                    status: Status::Error,
                    model: None,
                    elapsed: Duration::ZERO,
                    output: String::new(),
                    message: Some(format!("{}: {e}", s.path.display())),
                });
                procs.push(None);
                continue;
            }
        };
        if let Some(mut stdin) = child.stdin.take() {
            let text = script.to_string();
            thread::spawn(move || {
                let _ = stdin.write_all(text.as_bytes());
            });
        }
        let mut stdout = child.stdout.take();
        let mut stderr = child.stderr.take();
        let tx = tx.clone();
        thread::spawn(move || {
            let err_reader = thread::spawn(move || {
                let mut s = String::new();
                if let Some(e) = stderr.as_mut() {
                    let _ = e.read_to_string(&mut s);
                }
                s
            });
            let mut s = String::new();
            if let Some(o) = stdout.as_mut() {
                let _ = o.read_to_string(&mut s);
            }
            let err = err_reader.join().unwrap_or_default();
            if s.trim().is_empty() && !err.trim().is_empty() {
                s = err;
            }
            let _ = tx.send((i, s));
        });
        procs.push(Some(Running { child, start: Instant::now(), done: false }));
    }
    drop(tx);
    let deadline = Instant::now() + timeout + KILL_GRACE;
    let pending = |runs: &[Option<SolverRun>]| runs.iter().filter(|r| r.is_none()).count();
    while pending(&runs) > 0 {
        let now = Instant::now();
        let wait = deadline.saturating_duration_since(now);
        match rx.recv_timeout(wait) {
            Ok((i, out)) => {
                let Some(p) = procs[i].as_mut() else { continue };
                let ok = p.child.wait().map(|s| s.success()).unwrap_or(false);
                let elapsed = p.start.elapsed();
                let killed = p.done;
                p.done = true;
                let run = interpret(&solvers[i].name, out, ok, killed, elapsed, timeout);
                let definitive = run.status.is_definitive();
                runs[i] = Some(run);
                if race && definitive {
                    for (j, q) in procs.iter_mut().enumerate() {
                        if let Some(q) = q {
                            if runs[j].is_none() && !q.done {
                                let _ = q.child.kill();
                                q.done = true;
                            }
                        }
                    }
                    // Already finished solvers may report a conflicting answer.
                    thread::sleep(Duration::from_millis(5));
                    while let Ok((j, out)) = rx.try_recv() {
                        if let Some(q) = procs[j].as_mut() {
                            let ok = q.child.wait().map(|s| s.success()).unwrap_or(false);
                            let r = interpret(&solvers[j].name, out, ok, true, q.start.elapsed(), timeout);
                            if r.status.is_definitive() {
                                runs[j] = Some(r);
                            }
                        }
                    }
                    break;
                }
            }
            Err(_) => {
                for (j, q) in procs.iter_mut().enumerate() {
                    if let Some(q) = q {
                        if runs[j].is_none() {
                            let _ = q.child.kill();
                            let _ = q.child.wait();
                            runs[j] = Some(SolverRun {
                                solver: solvers[j].name.clone(),
                                status: Status::Timeout,
                                model: None,
                                elapsed: q.start.elapsed(),
                                output: String::new(),
                                message: Some("killed at the time limit".into()),
                            });
                        }
                    }
                }
                break;
            }
        }
    }
    for (j, q) in procs.iter_mut().enumerate() {
        if let Some(q) = q {
            if runs[j].is_none() {
                let _ = q.child.kill();
                let _ = q.child.wait();
            } else if !q.done {
                let _ = q.child.wait();
            }
        }
    }
    runs.into_iter().flatten().collect()
}

/// Runs one solver on one script.
pub fn run_solver(spec: &SolverSpec, script: &str, timeout: Duration) -> SolverRun {
    run_all(script, &[spec], timeout, false).pop().unwrap_or(SolverRun {
        solver: spec.name.clone(),
        status: Status::Error,
        model: None,
        elapsed: Duration::ZERO,
        output: String::new(),
        message: Some("solver did not run".into()),
    })
}

/// A probed set of solvers.
#[derive(Debug, Clone)]
pub struct Portfolio {
    pub solvers: Vec<SolverSpec>,
    pub versions: Vec<String>,
    pub timeout: Duration,
    pub sequential: bool,
    /// Solvers dropped by the probe, with the reason.
    pub rejected: Vec<String>,
}

impl Portfolio {
    /// Keeps the solvers that answer the version probe.
    pub fn new(specs: Vec<SolverSpec>, timeout: Duration, sequential: bool) -> Result<Portfolio, PortfolioError> {
        let mut solvers = vec![];
        let mut versions = vec![];
        let mut rejected = vec![];
        for s in specs {
            match s.probe() {
                Ok(v) => {
                    versions.push(v);
                    solvers.push(s);
                }
                Err(e) => rejected.push(format!("{}: {e}", s.name)),
            }
        }
        if solvers.is_empty() {
            return Err(PortfolioError::NoSolverAvailable(if rejected.is_empty() {
                vec!["none configured".into()]
            } else {
                rejected
            }));
        }
        Ok(Portfolio { solvers, versions, timeout, sequential, rejected })
    }

    /// Solves one script. `inputs` are the symbols the model must bind,
    /// with the value used when a solver leaves one out.
    pub fn solve(&self, vc_id: usize, script: &str, inputs: &[(String, ModelValue)]) -> Result<Verdict, PortfolioError> {
        let needed = Theory::required_by(script);
        let applicable: Vec<&SolverSpec> = self.solvers.iter().filter(|s| s.supports(&needed)).collect();
        let mut notes: Vec<String> =
            self.solvers.iter().filter(|s| !s.supports(&needed)).map(|s| format!("{}: lacks a required theory", s.name)).collect();
        let runs = if self.sequential {
            let mut runs = vec![];
            for s in &applicable {
                let r = run_solver(s, script, self.timeout);
                let stop = r.status.is_definitive();
                runs.push(r);
                if stop {
                    break;
                }
            }
            runs
        } else {
            run_all(script, &applicable, self.timeout, true)
        };
        let valid = runs.iter().find(|r| r.status == Status::Valid);
        let invalid = runs.iter().find(|r| r.status == Status::Invalid);
        if let (Some(v), Some(i)) = (valid, invalid) {
            return Err(PortfolioError::Disagreement {
                valid: v.solver.clone(),
                invalid: i.solver.clone(),
                transcripts: vec![(v.solver.clone(), v.output.clone()), (i.solver.clone(), i.output.clone())],
            });
        }
        for r in &runs {
            if !r.status.is_definitive() {
                notes.push(format!("{}: {}{}", r.solver, r.status.name(), r.message.as_ref().map(|m| format!(" ({m})")).unwrap_or_default()));
            }
        }
        let best = runs
            .iter()
            .filter(|r| r.status.is_definitive())
            .min_by_key(|r| r.elapsed)
            .or_else(|| runs.iter().max_by_key(|r| (r.status.strength(), std::cmp::Reverse(r.elapsed))));
        let Some(best) = best else {
            return Ok(Verdict {
                vc_id,
                status: Status::Error,
                model: None,
                solver: String::new(),
                elapsed_ms: 0,
                defaulted: vec![],
                notes: if notes.is_empty() { vec!["no applicable solver".into()] } else { notes },
            });
        };
        let elapsed = if best.status.is_definitive() { best.elapsed } else { runs.iter().map(|r| r.elapsed).max().unwrap_or_default() };
        let mut model = best.model.clone();
        let mut defaulted = vec![];
        if let Some(m) = model.as_mut() {
            for (sym, zero) in inputs {
                if !m.values.contains_key(sym) {
                    m.values.insert(sym.clone(), zero.clone());
                    defaulted.push(sym.clone());
                }
            }
        }
        Ok(Verdict {
            vc_id,
            status: best.status,
            model,
            solver: best.solver.clone(),
            elapsed_ms: elapsed.as_millis() as u64,
            defaulted,
            notes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theories_from_text() {
        let s = "(declare-fun sin.f64 ((_ FloatingPoint 11 53)) (_ FloatingPoint 11 53))\n(declare-const x (_ BitVec 32))";
        assert_eq!(Theory::required_by(s), [Theory::FP, Theory::BV, Theory::UF].into());
        assert_eq!(Theory::required_by("(declare-fun x () (_ FloatingPoint 8 24))"), [Theory::FP].into());
    }

    #[test]
    fn solver_lists() {
        let l = parse_solver_list("z3:/opt/z3,mine:/bin/true").unwrap();
        assert_eq!(l[0].args, ["-in", "-T:{s}"]);
        assert!(l[1].args.is_empty());
        assert!(parse_solver_list("z3:").is_err());
        assert_eq!(l[0].expanded_args(Duration::from_millis(2500)), ["-in", "-T:2"]);
    }

    #[test]
    fn status_taxonomy() {
        let t = Duration::from_secs(10);
        let r = interpret("s", "unsat\n(error \"no model\")".into(), true, false, Duration::from_millis(5), t);
        assert_eq!(r.status, Status::Valid);
        let r = interpret("s", "sat\n((define-fun x () Bool false))".into(), true, false, Duration::from_millis(5), t);
        assert_eq!(r.status, Status::Invalid);
        let r = interpret("s", "unknown".into(), true, false, Duration::from_millis(5), t);
        assert_eq!(r.status, Status::Unknown);
        let r = interpret("s", "unknown".into(), true, false, t, t);
        assert_eq!(r.status, Status::Timeout);
        let r = interpret("s", "(error \"unsupported logic\")".into(), false, false, Duration::ZERO, t);
        assert_eq!(r.status, Status::Error);
        assert!(Status::Unknown.strength() > Status::Timeout.strength());
        assert!(Status::Timeout.strength() > Status::Error.strength());
    }
}
