mod common;

use std::path::Path;
use std::process::{Command, Output};
use std::time::Duration;

use anyhow::Result;
use fpverify::driver::{bench, check_sources, Report, Settings, REPORT_SCHEMA};
use fpverify::interp::ClassificationKind;
use fpverify::portfolio::{default_solvers, Portfolio, SolverSpec, Status};

fn settings() -> Settings {
    Settings { jobs: 1, ..Settings::default() }
}

fn sources(names: &[&str]) -> Vec<(String, String)> {
    names.iter().map(|n| (n.to_string(), common::fixture(n))).collect()
}

fn run(pf: &Portfolio, names: &[&str]) -> Report {
    check_sources(&sources(names), pf, &settings()).unwrap()
}

fn schema_errors(json: &str) -> Vec<String> {
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).unwrap();
    let instance: serde_json::Value = serde_json::from_str(json).unwrap();
    let errors = match compiled.validate(&instance) {
        Ok(()) => vec![],
        Err(es) => es.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    errors
}

fn solver_arg(s: &SolverSpec) -> String {
    format!("{}:{}", s.name, s.path.display())
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpverify")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

#[test]
fn reports_validate_against_the_schema() {
    let pf = common::portfolio(vec![common::any_solver()], 60.0);
    let r = run(&pf, &["limit.fpl", "limit_fixed.fpl", "modulo.fpl", "stormday.fpl"]);
    let errors = schema_errors(&r.to_json());
    assert!(errors.is_empty(), "{errors:#?}");
    assert_eq!(r.files.len(), 4);
    assert!(!r.files[2].diagnostics.is_empty());
}

#[test]
fn summary_matches_the_vcs() {
    let pf = common::portfolio(vec![common::any_solver()], 60.0);
    let r = run(&pf, &["limit.fpl", "limit_fixed.fpl", "stormday.fpl"]);
    let vcs: Vec<_> = r.vcs().collect();
    assert_eq!(r.summary.total, vcs.len());
    assert_eq!(r.summary.valid, vcs.iter().filter(|v| v.status == Status::Valid).count());
    assert_eq!(r.summary.invalid, vcs.iter().filter(|v| v.status == Status::Invalid).count());
    let confirmed = vcs.iter().filter(|v| v.classification.as_ref().is_some_and(|c| c.kind == ClassificationKind::Confirmed)).count();
    assert_eq!(r.summary.confirmed, confirmed);
    for f in &r.files {
        let ids: Vec<usize> = f.functions.iter().flat_map(|g| g.vcs.iter().map(|v| v.id)).collect();
        assert!(ids.windows(2).all(|w| w[0] < w[1]), "{ids:?}");
    }
    assert_eq!(r.exit_code, 1);
}

#[test]
fn counterexamples_bind_every_input() {
    let pf = common::portfolio(vec![common::any_solver()], 60.0);
    let r = run(&pf, &["limit.fpl"]);
    let v = r.vcs().find(|v| v.status == Status::Invalid).unwrap();
    let cex = v.counterexample.as_ref().unwrap();
    assert_eq!(cex.len(), 3);
    assert!(cex.iter().any(|a| a.name == "maxMagnitude" && a.decimal == "NaN"), "{cex:?}");
}

#[test]
fn sequential_matches_racing_with_one_solver() {
    let s = common::any_solver();
    let race = Portfolio::new(vec![s.clone()], Duration::from_secs(60), false).unwrap();
    let seq = Portfolio::new(vec![s], Duration::from_secs(60), true).unwrap();
    let names = ["limit.fpl", "stormday_fixed.fpl", "pick.fpl"];
    let mut a = run(&race, &names).without_timing();
    let b = run(&seq, &names).without_timing();
    a.config.sequential = true;
    assert_eq!(a, b);
}

#[test]
fn erroring_solver_is_a_tool_error() {
    let dir = tempfile::tempdir().unwrap();
    let pf = common::portfolio(vec![common::erroring_solver(dir.path(), "stub")], 10.0);
    let r = run(&pf, &["limit.fpl"]);
    assert!(r.vcs().all(|v| v.status == Status::Error));
    assert_eq!(r.exit_code, 3);
}

fn two_solvers() -> Vec<SolverSpec> {
    let mut all = default_solvers();
    if all.len() < 2 {
        let mut copy = all[0].clone();
        copy.name = format!("{}-again", copy.name);
        all.push(copy);
    }
    all.truncate(2);
    all
}

fn dump(dir: &Path, source: &Path) -> Vec<String> {
    let o = cli(&["dump-vcs", source.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8_lossy(&o.stdout).lines().map(String::from).collect()
}

#[test]
fn bench_times_every_file_and_solver() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let src = tempfile::tempdir()?;
    let file = src.path().join("cast.fpl");
    std::fs::write(&file, "def g(x: Double): Int = x.toInt")?;
    let files = dump(dir.path(), &file);
    assert_eq!(files.len(), 2);
    let solvers = two_solvers();
    let t = bench(dir.path(), &solvers, Duration::from_secs(60), 5)?;
    assert_eq!(t.rows.len(), 4);
    assert!(t.rows.iter().all(|r| r.status == Status::Invalid), "{:?}", t.rows);
    for r in &t.rows {
        assert_eq!(r.times_ms.len(), 5);
        assert!(r.min_ms <= r.median_ms && r.median_ms <= r.max_ms);
    }
    let csv = t.to_csv()?;
    assert_eq!(csv.lines().count(), 5);
    let empty = tempfile::tempdir()?;
    let t = bench(empty.path(), &solvers, Duration::from_secs(60), 5)?;
    assert!(t.rows.is_empty());
    Ok(())
}

#[test]
fn exit_codes() -> Result<()> {
    let s = solver_arg(&common::any_solver());
    let fx = |n: &str| common::fixture_path(n).display().to_string();
    assert_eq!(code(&cli(&["check", &fx("limit.fpl"), "--solvers", &s])), 1);
    assert_eq!(code(&cli(&["check", &fx("limit_fixed.fpl"), "--solvers", &s])), 0);
    assert_eq!(code(&cli(&["check", &fx("modulo.fpl"), "--solvers", &s])), 3);
    let dir = tempfile::tempdir()?;
    let empty = dir.path().join("empty.fpl");
    std::fs::write(&empty, "")?;
    assert_eq!(code(&cli(&["check", empty.to_str().unwrap(), "--solvers", &s])), 0);
    let sleeper = common::fake_solver(dir.path(), "sleeper", "cat > /dev/null\nsleep 30");
    let o = cli(&["check", &fx("limit_fixed.fpl"), "--solvers", &format!("sleeper:{}", sleeper.display()), "--timeout", "1"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stdout));
    let broken = common::broken_solver(dir.path(), "broken");
    let o = cli(&["check", &fx("limit.fpl"), "--solvers", &solver_arg(&broken)]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no SMT solver available"));
    assert_eq!(code(&cli(&["check", &fx("limit.fpl"), "--solvers", "nonsense"])), 3);
    Ok(())
}

#[test]
fn check_writes_json_and_dumps() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let json = dir.path().join("r.json");
    let vcs = dir.path().join("vcs");
    let s = solver_arg(&common::any_solver());
    let a = common::fixture_path("limit.fpl");
    let b = common::fixture_path("stormday.fpl");
    let o = cli(&[
        "check",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--solvers",
        &s,
        "--json",
        json.to_str().unwrap(),
        "--dump-vcs",
        vcs.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    let text = std::fs::read_to_string(&json)?;
    assert!(schema_errors(&text).is_empty());
    assert_eq!(std::fs::read_dir(vcs.join("limit"))?.count(), 1);
    assert!(std::fs::read_dir(vcs.join("stormday"))?.count() >= 1);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("confirmed"), "{stdout}");
    Ok(())
}

#[test]
fn eval_and_fuzz_commands() {
    let o = cli(&["eval", common::fixture_path("stormday.fpl").to_str().unwrap(), "accuracyPercent", "--args", "1073741832, 730144766"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.to_uppercase().contains("-2.9586256E-5"), "{out}");
    assert!(out.contains("postcondition: violated"));
    let o = cli(&["fuzz", "--function", "sin", "--function", "pow", "--n", "2000", "--precision", "both"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().filter(|l| l.contains("0 violations")).count(), 4);
    assert_eq!(code(&cli(&["fuzz", "--function", "erf", "--n", "1"])), 3);
}
