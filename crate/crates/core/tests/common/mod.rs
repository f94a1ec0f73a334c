#![allow(dead_code)]

pub mod gen;
pub mod oracle;

use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use fpverify::portfolio::{default_solvers, Portfolio, SolverSpec};

pub fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// A preset solver found on this machine.
pub fn solver(name: &str) -> Option<SolverSpec> {
    default_solvers().into_iter().find(|s| s.name == name)
}

/// The fastest available single solver.
pub fn any_solver() -> SolverSpec {
    default_solvers().into_iter().next().expect("at least one SMT solver must be installed")
}

pub fn portfolio(specs: Vec<SolverSpec>, timeout_s: f64) -> Portfolio {
    Portfolio::new(specs, Duration::from_secs_f64(timeout_s), false).expect("solver probe")
}

/// Writes an executable shell script that answers `--version` and runs
/// `body` otherwise.
pub fn fake_solver(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    let text = format!(
        "#!/bin/sh\nif [ \"$1\" = \"--version\" ]; then echo \"{name} 0.0-fake\"; exit 0; fi\n{body}\n"
    );
    std::fs::write(&path, text).unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    path
}

/// A solver that always reports an error.
pub fn erroring_solver(dir: &Path, name: &str) -> SolverSpec {
    let p = fake_solver(dir, name, "cat > /dev/null\necho '(error \"stub solver\")'\nexit 1");
    SolverSpec::custom(name, p)
}

/// A solver that fails its version probe.
pub fn broken_solver(dir: &Path, name: &str) -> SolverSpec {
    let path = dir.join(name);
    std::fs::write(&path, "#!/bin/sh\nexit 7\n").unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    SolverSpec::custom(name, path)
}

/// A solver that replays a recorded transcript.
pub fn replay_solver(dir: &Path, name: &str, transcript: &str) -> SolverSpec {
    let file = dir.join(format!("{name}.out"));
    std::fs::write(&file, transcript).unwrap();
    let p = fake_solver(dir, name, &format!("cat > /dev/null\ncat '{}'", file.display()));
    SolverSpec::custom(name, p)
}
