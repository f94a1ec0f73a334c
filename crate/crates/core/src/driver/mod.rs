//! Orchestration of the whole pipeline and report assembly.

pub mod bench;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::checks::{inject_checks, CheckConfig, CheckConfigError};
use crate::float::{smt_fp_literal, Precision};
use crate::frontend::{load, Type, TypedProgram};
use crate::interp::{classify_counterexample, Classification, ClassificationKind, ClassifyError};
use crate::portfolio::{ModelValue, Portfolio, PortfolioError, Status, Verdict};
use crate::vcgen::{generate_vcs, InputSymbol, VcError, VerificationCondition};

pub use bench::{bench, BenchRow, BenchTable};

/// JSON schema of [`Report`].
pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");
pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_VALID: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_TOOL_ERROR: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Settings {
    pub checks: CheckConfig,
    pub jobs: usize,
    /// Extra solver calls that block a spurious model to look for another.
    pub spurious_retries: usize,
    pub seed: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            checks: CheckConfig::default(),
            jobs: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            spurious_retries: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Portfolio(#[from] PortfolioError),
    #[error("{file}: {source}")]
    Config { file: String, source: CheckConfigError },
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverEcho {
    pub name: String,
    pub path: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub solvers: Vec<SolverEcho>,
    pub timeout_s: f64,
    pub sequential: bool,
    pub jobs: usize,
    pub nan_checks: bool,
    pub cast_checks: bool,
    pub suppressed_functions: Vec<String>,
    pub suppressed_sites: Vec<String>,
    pub spurious_retries: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assignment {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub decimal: String,
    pub hex: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationEcho {
    pub kind: ClassificationKind,
    pub witness: Option<bool>,
    pub result: Option<String>,
    pub note: Option<String>,
}

impl From<&Classification> for ClassificationEcho {
    fn from(c: &Classification) -> Self {
        ClassificationEcho {
            kind: c.kind,
            witness: c.witness,
            result: c.result.as_ref().map(|v| format!("{v} [{}]", v.hex())),
            note: c.note.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VcResult {
    pub id: usize,
    pub kind: String,
    pub line: u32,
    pub col: u32,
    pub callee: Option<String>,
    pub file_name: String,
    pub status: Status,
    pub solver: String,
    pub elapsed_ms: u64,
    pub uses_opaque: bool,
    pub counterexample: Option<Vec<Assignment>>,
    pub defaulted: Vec<String>,
    pub classification: Option<ClassificationEcho>,
    pub notes: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionReport {
    pub name: String,
    pub vcs: Vec<VcResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileReport {
    pub path: String,
    pub diagnostics: Vec<String>,
    pub functions: Vec<FunctionReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Summary {
    pub total: usize,
    pub valid: usize,
    pub invalid: usize,
    pub unknown: usize,
    pub timeout: usize,
    pub error: usize,
    pub confirmed: usize,
    pub spurious: usize,
    pub undetermined: usize,
    /// Diagnostics and internal failures, including per-VC errors.
    pub tool_errors: usize,
}

impl Summary {
    pub fn add(&mut self, r: &VcResult) {
        self.total += 1;
        match r.status {
            Status::Valid => self.valid += 1,
            Status::Invalid => self.invalid += 1,
            Status::Unknown => self.unknown += 1,
            Status::Timeout => self.timeout += 1,
            Status::Error => self.error += 1,
        }
        match r.classification.as_ref().map(|c| c.kind) {
            Some(ClassificationKind::Confirmed) => self.confirmed += 1,
            Some(ClassificationKind::Spurious) => self.spurious += 1,
            Some(ClassificationKind::Undetermined) => self.undetermined += 1,
            None => {}
        }
        if r.status == Status::Error || r.error.is_some() {
            self.tool_errors += 1;
        }
    }
}

/// 3 on any tool error, else 1 on any invalid VC, else 2 on any unknown or
/// timeout, else 0.
pub fn exit_code(s: &Summary) -> i32 {
    if s.tool_errors > 0 || s.error > 0 {
        EXIT_TOOL_ERROR
    } else if s.invalid > 0 {
        EXIT_INVALID
    } else if s.unknown > 0 || s.timeout > 0 {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_VALID
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub config: ConfigEcho,
    pub files: Vec<FileReport>,
    pub summary: Summary,
    pub exit_code: i32,
}

impl Report {
    pub fn vcs(&self) -> impl Iterator<Item = &VcResult> {
        self.files.iter().flat_map(|f| f.functions.iter().flat_map(|g| g.vcs.iter()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_else(|e| format!("{{\"error\": \"{e}\"}}"))
    }

    /// The report with every timing field zeroed.
    pub fn without_timing(&self) -> Report {
        let mut r = self.clone();
        for f in &mut r.files {
            for g in &mut f.functions {
                for v in &mut g.vcs {
                    v.elapsed_ms = 0;
                }
            }
        }
        r
    }
}

/// A typechecked input with its generated VCs.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub path: String,
    pub program: Option<TypedProgram>,
    pub vcs: Vec<VerificationCondition>,
    pub diagnostics: Vec<String>,
}

/// Runs the frontend, check injection and VC generation on one source.
/// Invalid suppressions are a configuration error; other failures become
/// diagnostics.
pub fn prepare(path: &str, source: &str, checks: &CheckConfig) -> Result<Prepared, DriverError> {
    let program = match load(path, source) {
        Ok(p) => p,
        Err(ds) => {
            return Ok(Prepared { path: path.into(), program: None, vcs: vec![], diagnostics: ds.iter().map(|d| d.to_string()).collect() })
        }
    };
    if !checks.suppressed_functions.is_empty() || !checks.suppressed_sites.is_empty() {
        checks.validate(&program).map_err(|source| DriverError::Config { file: path.into(), source })?;
    }
    let program = inject_checks(&program, checks);
    match generate_vcs(&program) {
        Ok(vcs) => Ok(Prepared { path: path.into(), program: Some(program), vcs, diagnostics: vec![] }),
        Err(e @ VcError::UnsupportedConstruct { .. }) => {
            Ok(Prepared { path: path.into(), program: Some(program), vcs: vec![], diagnostics: vec![format!("{path}:{e}")] })
        }
    }
}

/// The value a missing model input is bound to.
pub fn default_input(i: &InputSymbol) -> ModelValue {
    match &i.param.ty {
        Type::F32 => ModelValue::float32(0.0),
        Type::F64 => ModelValue::float(0.0),
        Type::Bool => ModelValue::Bool { value: false },
        Type::Var { name, .. } => ModelValue::Abstract { text: format!("(as @default S_{name})") },
        t => ModelValue::BitVec { value: 0, width: t.int_width().unwrap_or(32) },
    }
}

fn smt_literal(v: &ModelValue) -> Option<String> {
    Some(match v {
        ModelValue::Float { bits, prec } => smt_fp_literal(*bits, *prec),
        ModelValue::BitVec { value, width } => {
            let mask = if *width == 64 { u64::MAX } else { (1u64 << width) - 1 };
            format!("(_ bv{} {width})", (*value as u64) & mask)
        }
        ModelValue::Bool { value } => value.to_string(),
        ModelValue::Abstract { .. } => return None,
    })
}

/// Script text with an extra assertion excluding each of `models`.
fn blocked_script(vc: &VerificationCondition, models: &[Vec<(String, String)>]) -> String {
    let mut script = vc.script.clone();
    for m in models {
        let eqs: Vec<String> = m.iter().map(|(s, v)| format!("(= {s} {v})")).collect();
        script.assertions.push(format!("(assert (not (and {})))", eqs.join(" ")));
    }
    script.text()
}

fn assignments(vc: &VerificationCondition, v: &Verdict) -> Option<Vec<Assignment>> {
    let m = v.model.as_ref()?;
    Some(
        vc.inputs
            .iter()
            .map(|i| {
                let mv = m.get(&i.symbol);
                Assignment {
                    name: i.param.name.clone(),
                    ty: i.param.ty.to_string(),
                    decimal: mv.map(ModelValue::decimal).unwrap_or_default(),
                    hex: mv.map(ModelValue::hex).unwrap_or_default(),
                }
            })
            .collect(),
    )
}

/// Solves one VC, replays any counterexample and retries spurious ones.
pub fn verify_vc(program: &TypedProgram, vc: &VerificationCondition, portfolio: &Portfolio, retries: usize) -> VcResult {
    let defaults: Vec<(String, ModelValue)> = vc.inputs.iter().map(|i| (i.symbol.clone(), default_input(i))).collect();
    let mut result = VcResult {
        id: vc.id,
        kind: vc.kind.name().into(),
        line: vc.span.line,
        col: vc.span.col,
        callee: vc.callee.clone(),
        file_name: vc.file_name(),
        status: Status::Error,
        solver: String::new(),
        elapsed_ms: 0,
        uses_opaque: vc.uses_opaque,
        counterexample: None,
        defaulted: vec![],
        classification: None,
        notes: vec![],
        error: None,
    };
    let verdict = match portfolio.solve(vc.id, &vc.script.text(), &defaults) {
        Ok(v) => v,
        Err(e) => {
            result.error = Some(disagreement_text(&e));
            return result;
        }
    };
    let mut elapsed = verdict.elapsed_ms;
    let mut verdict = verdict;
    let mut classification = None;
    if verdict.status == Status::Invalid {
        match classify(program, vc, &verdict) {
            Ok(c) => classification = Some(c),
            Err(e) => result.error = Some(e.to_string()),
        }
        let mut blocked: Vec<Vec<(String, String)>> = vec![];
        let mut attempt = 0;
        while attempt < retries && classification.as_ref().is_some_and(|c| c.kind == ClassificationKind::Spurious) {
            attempt += 1;
            let Some(lits) = verdict.model.as_ref().and_then(|m| {
                vc.inputs.iter().map(|i| Some((i.symbol.clone(), smt_literal(m.get(&i.symbol)?)?))).collect::<Option<Vec<_>>>()
            }) else {
                break;
            };
            if lits.is_empty() {
                break;
            }
            blocked.push(lits);
            let next = match portfolio.solve(vc.id, &blocked_script(vc, &blocked), &defaults) {
                Ok(v) => v,
                Err(_) => break,
            };
            elapsed += next.elapsed_ms;
            if next.status != Status::Invalid {
                result.notes.push(format!("retry {attempt}: {} after blocking {} model(s)", next.status.name(), blocked.len()));
                break;
            }
            match classify(program, vc, &next) {
                Ok(c) if c.kind == ClassificationKind::Confirmed => {
                    result.notes.push(format!("confirmed model found on retry {attempt}"));
                    verdict = next;
                    classification = Some(c);
                    break;
                }
                Ok(c) if c.kind == ClassificationKind::Spurious => verdict = Verdict { elapsed_ms: verdict.elapsed_ms, ..next },
                _ => break,
            }
        }
    }
    result.status = verdict.status;
    result.solver = verdict.solver.clone();
    result.elapsed_ms = elapsed;
    result.counterexample = assignments(vc, &verdict);
    result.defaulted = verdict.defaulted.clone();
    result.classification = classification.as_ref().map(ClassificationEcho::from);
    result.notes.splice(0..0, verdict.notes.iter().cloned());
    result
}

fn classify(program: &TypedProgram, vc: &VerificationCondition, v: &Verdict) -> Result<Classification, ClassifyError> {
    match &v.model {
        Some(m) => classify_counterexample(program, vc, m),
        None => Err(ClassifyError::ModelIncomplete("<no model>".into())),
    }
}

fn disagreement_text(e: &PortfolioError) -> String {
    match e {
        PortfolioError::Disagreement { transcripts, .. } => {
            let mut s = e.to_string();
            for (name, out) in transcripts {
                let _ = write!(s, "\n--- {name}\n{}", out.trim_end());
            }
            s
        }
        e => e.to_string(),
    }
}

/// Verifies every source, in order. Configuration errors stop the run
/// before any solver starts.
pub fn check_sources(sources: &[(String, String)], portfolio: &Portfolio, settings: &Settings) -> Result<Report, DriverError> {
    let mut prepared = vec![];
    for (path, text) in sources {
        prepared.push(prepare(path, text, &settings.checks)?);
    }
    let jobs: Vec<(usize, usize)> =
        prepared.iter().enumerate().flat_map(|(i, p)| (0..p.vcs.len()).map(move |k| (i, k))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.jobs.max(1))
        .build()
        .map_err(|e| DriverError::Pool(e.to_string()))?;
    let results: Vec<VcResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, k)| {
                let p = &prepared[i];
                let program = p.program.as_ref().expect("VCs imply a program");
                verify_vc(program, &p.vcs[k], portfolio, settings.spurious_retries)
            })
            .collect()
    });
    let mut results = results.into_iter();
    let mut files = vec![];
    let mut summary = Summary::default();
    for p in &prepared {
        let mut functions: Vec<FunctionReport> = vec![];
        for vc in &p.vcs {
            let r = results.next().expect("one result per VC");
            summary.add(&r);
            match functions.last_mut() {
                Some(f) if f.name == vc.function => f.vcs.push(r),
                _ => functions.push(FunctionReport { name: vc.function.clone(), vcs: vec![r] }),
            }
        }
        summary.tool_errors += p.diagnostics.len();
        files.push(FileReport { path: p.path.clone(), diagnostics: p.diagnostics.clone(), functions });
    }
    let config = ConfigEcho {
        solvers: portfolio
            .solvers
            .iter()
            .zip(&portfolio.versions)
            .map(|(s, v)| SolverEcho { name: s.name.clone(), path: s.path.display().to_string(), version: v.clone() })
            .collect(),
        timeout_s: portfolio.timeout.as_secs_f64(),
        sequential: portfolio.sequential,
        jobs: settings.jobs,
        nan_checks: settings.checks.nan_checks,
        cast_checks: settings.checks.cast_checks,
        suppressed_functions: settings.checks.suppressed_functions.iter().cloned().collect(),
        suppressed_sites: settings.checks.suppressed_sites.iter().map(|p| p.to_string()).collect(),
        spurious_retries: settings.spurious_retries,
        seed: settings.seed,
    };
    Ok(Report { schema_version: SCHEMA_VERSION, config, files, exit_code: exit_code(&summary), summary })
}

/// Human-readable rendering.
pub fn render_text(r: &Report) -> String {
    let mut s = String::new();
    for f in &r.files {
        for d in &f.diagnostics {
            let _ = writeln!(s, "{d}");
        }
        for g in &f.functions {
            for v in &g.vcs {
                let _ = write!(s, "{}:{}:{}: {} `{}` {}", f.path, v.line, v.col, v.kind, g.name, v.status.name());
                if !v.solver.is_empty() {
                    let _ = write!(s, " ({}, {} ms)", v.solver, v.elapsed_ms);
                }
                if let Some(c) = &v.classification {
                    let _ = write!(s, " [{}]", c.kind);
                }
                s.push('\n');
                if let Some(cx) = &v.counterexample {
                    for a in cx {
                        let _ = writeln!(s, "    {}: {} = {} ({})", a.name, a.ty, a.decimal, a.hex);
                    }
                }
                if let Some(c) = &v.classification {
                    if let Some(res) = &c.result {
                        let _ = writeln!(s, "    result = {res}");
                    }
                    if let Some(n) = &c.note {
                        let _ = writeln!(s, "    {n}");
                    }
                }
                if v.status != Status::Valid {
                    for n in &v.notes {
                        let _ = writeln!(s, "    note: {n}");
                    }
                }
                if let Some(e) = &v.error {
                    let _ = writeln!(s, "    error: {e}");
                }
            }
        }
    }
    let m = &r.summary;
    let _ = writeln!(
        s,
        "{} VCs: {} valid, {} invalid ({} confirmed, {} spurious, {} undetermined), {} unknown, {} timeout, {} error",
        m.total, m.valid, m.invalid, m.confirmed, m.spurious, m.undetermined, m.unknown, m.timeout, m.error
    );
    s
}

/// Suppressions named on the command line.
pub fn checks_from_flags(
    no_nan: bool,
    no_cast: bool,
    functions: &[String],
    sites: &[String],
) -> Result<CheckConfig, String> {
    let mut suppressed_sites = BTreeSet::new();
    for s in sites {
        let (l, c) = s.split_once(':').ok_or_else(|| format!("bad site `{s}`: expected LINE:COL"))?;
        let line = l.parse().map_err(|_| format!("bad site `{s}`"))?;
        let col = c.parse().map_err(|_| format!("bad site `{s}`"))?;
        suppressed_sites.insert(crate::frontend::Pos { line, col });
    }
    Ok(CheckConfig {
        nan_checks: !no_nan,
        cast_checks: !no_cast,
        suppressed_functions: functions.iter().cloned().collect(),
        suppressed_sites,
    })
}

/// Satisfiability of one function's axioms, per solver.
pub fn axiom_satisfiability(
    f: crate::frontend::MathFn,
    prec: Precision,
    portfolio: &Portfolio,
    timeout: Duration,
) -> Vec<(String, Status)> {
    let script = crate::mathspec::smt::satisfiability_script(crate::mathspec::contract(f, prec), 2);
    portfolio.solvers.iter().map(|s| (s.name.clone(), crate::portfolio::run_solver(s, &script, timeout).status)).collect()
}
