//! Repeated timing of dumped scripts per solver.

use std::io;
use std::path::Path;
use std::time::Duration;

use serde::Serialize;

use crate::portfolio::{run_solver, SolverSpec, Status};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub file: String,
    pub solver: String,
    pub status: Status,
    pub times_ms: Vec<u64>,
    pub min_ms: u64,
    pub median_ms: u64,
    pub max_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
    pub warnings: Vec<String>,
}

impl BenchTable {
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(["file", "solver", "status", "min_ms", "median_ms", "max_ms", "times_ms"])?;
        for r in &self.rows {
            let times = r.times_ms.iter().map(u64::to_string).collect::<Vec<_>>().join(";");
            w.write_record([
                r.file.as_str(),
                r.solver.as_str(),
                r.status.name(),
                &r.min_ms.to_string(),
                &r.median_ms.to_string(),
                &r.max_ms.to_string(),
                &times,
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }

    pub fn row(&self, file: &str, solver: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.file == file && r.solver == solver)
    }
}

/// Runs every `.smt2` file in `dir` through each solver `reps` times.
/// Unreadable files are skipped with a warning.
pub fn bench(dir: &Path, solvers: &[SolverSpec], timeout: Duration, reps: usize) -> io::Result<BenchTable> {
    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "smt2"))
        .collect();
    files.sort();
    let mut table = BenchTable::default();
    for path in files {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let script = match std::fs::read_to_string(&path) {
            Ok(s) => s,
            Err(e) => {
                table.warnings.push(format!("skipping {}: {e}", path.display()));
                continue;
            }
        };
        for s in solvers {
            let runs: Vec<_> = (0..reps.max(1)).map(|_| run_solver(s, &script, timeout)).collect();
            let mut times: Vec<u64> = runs.iter().map(|r| r.elapsed.as_millis() as u64).collect();
            let status = runs
                .iter()
                .map(|r| r.status)
                .find(|st| st.is_definitive())
                .unwrap_or_else(|| runs.iter().map(|r| r.status).min_by_key(|st| match st {
                    Status::Unknown => 0,
                    Status::Timeout => 1,
                    _ => 2,
                }).unwrap_or(Status::Error));
            let raw = times.clone();
            times.sort_unstable();
            table.rows.push(BenchRow {
                file: name.clone(),
                solver: s.name.clone(),
                status,
                min_ms: times[0],
                median_ms: times[(times.len() - 1) / 2],
                max_ms: times[times.len() - 1],
                times_ms: raw,
            });
        }
    }
    Ok(table)
}
