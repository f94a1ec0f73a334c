//! Automatic safety obligations: NaN checks on floating comparisons and
//! NaN/range checks on float-to-integer casts.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::frontend::{CheckKind, Pos, TExpr, TypedProgram};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckConfig {
    pub nan_checks: bool,
    pub cast_checks: bool,
    pub suppressed_functions: BTreeSet<String>,
    /// Sites named by the start position of the comparison or cast node.
    pub suppressed_sites: BTreeSet<Pos>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { nan_checks: true, cast_checks: true, suppressed_functions: BTreeSet::new(), suppressed_sites: BTreeSet::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckConfigError {
    #[error("suppressed function `{0}` does not exist")]
    UnknownFunction(String),
    #[error("suppressed site {0} is not a comparison or cast")]
    UnknownSite(Pos),
}

impl CheckConfig {
    /// Every suppression must name something in `program`.
    pub fn validate(&self, program: &TypedProgram) -> Result<(), CheckConfigError> {
        for f in &self.suppressed_functions {
            if program.function(f).is_none() {
                return Err(CheckConfigError::UnknownFunction(f.clone()));
            }
        }
        let mut sites = BTreeSet::new();
        program.walk(&mut |_, e| {
            if e.is_float_comparison() || e.is_float_to_int_cast() {
                sites.insert(e.span.pos());
            }
        });
        for s in &self.suppressed_sites {
            if !sites.contains(s) {
                return Err(CheckConfigError::UnknownSite(*s));
            }
        }
        Ok(())
    }
}

/// Attaches obligations to the program's side table. Running it twice has
/// the same effect as running it once.
pub fn inject_checks(program: &TypedProgram, config: &CheckConfig) -> TypedProgram {
    let mut out = program.clone();
    for f in &program.functions {
        if f.unchecked || config.suppressed_functions.contains(&f.name) {
            continue;
        }
        f.body.walk(&mut |e: &TExpr| {
            if config.suppressed_sites.contains(&e.span.pos()) {
                return;
            }
            if config.nan_checks && e.is_float_comparison() {
                out.checks.entry(e.id).or_default().insert(CheckKind::NanCheck);
            }
            if config.cast_checks && e.is_float_to_int_cast() {
                let set = out.checks.entry(e.id).or_default();
                set.insert(CheckKind::CastNaN);
                set.insert(CheckKind::CastRange);
            }
        });
    }
    out
}

/// Total number of injected obligations.
pub fn obligation_count(program: &TypedProgram) -> usize {
    program.checks.values().map(|s| s.len()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, typecheck};

    fn prog(src: &str) -> TypedProgram {
        typecheck(&parse(src).unwrap()).unwrap()
    }

    const LIMIT: &str = "def limit(x: Double, y: Double, maxMagnitude: Double): (Double, Double) = {
  require(x.isFinite && y.isFinite)
  val magnitude = sqrt(x * x + y * y)
  if (magnitude > maxMagnitude) (x * (maxMagnitude / magnitude), y * (maxMagnitude / magnitude)) else (x, y)
}";

    #[test]
    fn limit_gets_one_nan_check() {
        let p = inject_checks(&prog(LIMIT), &CheckConfig::default());
        assert_eq!(obligation_count(&p), 1);
        assert!(p.checks.values().all(|s| s.contains(&CheckKind::NanCheck)));
    }

    #[test]
    fn cast_gets_two() {
        let p = inject_checks(&prog("def f(x: Double) = x.toInt"), &CheckConfig::default());
        assert_eq!(obligation_count(&p), 2);
        let p = inject_checks(&prog("def f(x: Int) = x.toDouble"), &CheckConfig::default());
        assert_eq!(obligation_count(&p), 0);
    }

    #[test]
    fn disabled_config_injects_nothing() {
        let cfg = CheckConfig { nan_checks: false, cast_checks: false, ..Default::default() };
        let p = inject_checks(&prog("def f(x: Double) = x.toInt > 3 && x < 2.0"), &cfg);
        assert_eq!(obligation_count(&p), 0);
    }

    #[test]
    fn predicates_and_contracts_are_not_checked() {
        let p = prog("def f(x: Double) = { require(x > 0.0); x.isNaN || max(x, 1.0).isFinite }.ensuring(r => r == true)");
        assert_eq!(obligation_count(&inject_checks(&p, &CheckConfig::default())), 0);
    }

    #[test]
    fn suppression_and_idempotence() {
        let p = prog("def f(x: Double) = x < 1.0\n@unchecked def g(x: Double) = x < 1.0\ndef h(x: Double) = x > 2.0");
        let once = inject_checks(&p, &CheckConfig::default());
        assert_eq!(obligation_count(&once), 2);
        assert_eq!(inject_checks(&once, &CheckConfig::default()), once);
        let cfg = CheckConfig {
            suppressed_functions: ["h".to_string()].into(),
            suppressed_sites: [Pos { line: 1, col: 20 }].into(),
            ..Default::default()
        };
        assert!(cfg.validate(&p).is_ok());
        assert_eq!(obligation_count(&inject_checks(&p, &cfg)), 0);
        let bad = CheckConfig { suppressed_functions: ["zz".to_string()].into(), ..Default::default() };
        assert!(bad.validate(&p).is_err());
    }
}
