//! Contracts for transcendental functions, their validation against the
//! host math library, and the FastTwoSum error-free transformation.

pub mod clause;
pub mod fuzz;
pub mod host;
pub mod smt;
pub mod twosum;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use clause::{CmpOp, Fp, Pattern, Pred, Term};
pub use fuzz::{fuzz_contract, FuzzReport, Violation};
pub use host::host_eval;
pub use twosum::fast_two_sum;

use crate::float::Precision;
use crate::frontend::MathFn;
use clause::ClauseParser;

/// The contract catalogue shipped with the tool.
pub const CATALOGUE: &str = include_str!("../../data/math_contracts.toml");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MathSpecError {
    #[error("unknown math function `{0}`")]
    UnknownFunction(String),
    #[error("contract catalogue: {0}")]
    Catalogue(String),
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClauseKind {
    /// The result is NaN exactly when the predicate holds.
    NanIff { pred: Pred },
    Special { args: Vec<Pattern>, result: Pattern },
    /// Inclusive bounds on non-NaN results, optionally guarded.
    Range { when: Option<Pred>, lo: Option<u64>, hi: Option<u64> },
    /// Result and argument have the same sign bit (both non-NaN).
    Sign { arg: usize },
    Relation { when: Option<Pred>, holds: Pred },
}

#[derive(Debug, Clone, Serialize)]
pub struct Clause {
    pub label: String,
    #[serde(flatten)]
    pub kind: ClauseKind,
    /// Off by default; must be switched on explicitly.
    pub optional: bool,
    pub enabled: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MathContract {
    pub function: MathFn,
    pub prec: Precision,
    pub arity: usize,
    pub clauses: Vec<Clause>,
}

impl MathContract {
    pub fn active(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter().filter(|c| c.enabled)
    }

    pub fn fp(&self) -> Fp {
        Fp(self.prec)
    }

    pub fn nan_characterization(&self) -> Option<&Pred> {
        self.clauses.iter().find_map(|c| match &c.kind {
            ClauseKind::NanIff { pred } => Some(pred),
            _ => None,
        })
    }

    pub fn special_values(&self) -> Vec<(&[Pattern], Pattern)> {
        self.clauses
            .iter()
            .filter_map(|c| match &c.kind {
                ClauseKind::Special { args, result } => Some((args.as_slice(), *result)),
                _ => None,
            })
            .collect()
    }

    /// Switches optional clauses on or off.
    pub fn with_optional(mut self, on: bool) -> Self {
        for c in &mut self.clauses {
            if c.optional {
                c.enabled = on;
            }
        }
        self
    }

    /// Whether `clause` holds for inputs `args` and result `r`.
    pub fn clause_holds(&self, clause: &Clause, args: &[u64], r: u64) -> bool {
        let fp = self.fp();
        let r_nan = fp.is_nan(r);
        match &clause.kind {
            ClauseKind::NanIff { pred } => pred.eval(fp, args, r) == r_nan,
            ClauseKind::Special { args: pats, result } => {
                !pats.iter().zip(args).all(|(p, a)| p.matches(fp, *a)) || result.matches(fp, r)
            }
            ClauseKind::Range { when, lo, hi } => {
                if r_nan || !when.as_ref().map_or(true, |w| w.eval(fp, args, r)) {
                    return true;
                }
                let x = fp.to_f64(r);
                lo.map_or(true, |l| fp.to_f64(l) <= x) && hi.map_or(true, |h| x <= fp.to_f64(h))
            }
            ClauseKind::Sign { arg } => {
                r_nan || fp.is_nan(args[*arg]) || fp.sign_bit(r) == fp.sign_bit(args[*arg])
            }
            ClauseKind::Relation { when, holds } => {
                r_nan || !when.as_ref().map_or(true, |w| w.eval(fp, args, r)) || holds.eval(fp, args, r)
            }
        }
    }

    /// Enabled clauses violated by `(args, r)`.
    pub fn violations(&self, args: &[u64], r: u64) -> Vec<&Clause> {
        self.active().filter(|c| !self.clause_holds(c, args, r)).collect()
    }

    /// Special-value rows that contradict another clause of this contract.
    pub fn inconsistencies(&self) -> Vec<String> {
        let mut out = vec![];
        for (pats, result) in self.special_values() {
            let fp = self.fp();
            let args: Vec<u64> = pats
                .iter()
                .map(|p| match p {
                    Pattern::NaN => fp.from_f64(f64::NAN),
                    Pattern::Exact(b) => *b,
                })
                .collect();
            let r = match result {
                Pattern::NaN => fp.from_f64(f64::NAN),
                Pattern::Exact(b) => b,
            };
            for c in self.violations(&args, r) {
                let row: Vec<String> = pats.iter().map(|p| p.describe(fp)).collect();
                out.push(format!("{}({}) contradicts {}", self.function, row.join(", "), c.label));
            }
        }
        out
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogueFile {
    constants: BTreeMap<String, ConstDef>,
    contract: Vec<ContractDef>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ConstDef {
    Same(String),
    PerPrecision { f32: String, f64: String },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContractDef {
    function: String,
    nan_iff: Option<String>,
    #[serde(default)]
    special: Vec<SpecialDef>,
    range: Option<RangeDef>,
    sign: Option<SignDef>,
    #[serde(default)]
    relations: Vec<RelationDef>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecialDef {
    args: Vec<String>,
    result: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RangeDef {
    when: Option<String>,
    lo: Option<String>,
    hi: Option<String>,
    #[serde(default)]
    optional: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SignDef {
    same_as: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationDef {
    when: Option<String>,
    holds: String,
}

/// Builds every contract in `text` at `prec`.
pub fn load_catalogue(text: &str, prec: Precision) -> Result<BTreeMap<MathFn, MathContract>, MathSpecError> {
    let file: CatalogueFile = toml::from_str(text).map_err(|e| MathSpecError::Catalogue(e.to_string()))?;
    let constants: BTreeMap<String, String> = file
        .constants
        .into_iter()
        .map(|(k, v)| {
            let s = match v {
                ConstDef::Same(s) => s,
                ConstDef::PerPrecision { f32, f64 } => match prec {
                    Precision::F32 => f32,
                    Precision::F64 => f64,
                },
            };
            (k, s)
        })
        .collect();
    let mut out = BTreeMap::new();
    for def in file.contract {
        let function = MathFn::from_name(&def.function).ok_or_else(|| MathSpecError::UnknownFunction(def.function.clone()))?;
        let c = build(&def, function, prec, &constants)
            .map_err(|e| MathSpecError::Catalogue(format!("{}: {e}", def.function)))?;
        out.insert(function, c);
    }
    Ok(out)
}

fn build(def: &ContractDef, function: MathFn, prec: Precision, constants: &BTreeMap<String, String>) -> Result<MathContract, String> {
    let arity = function.arity();
    let p = ClauseParser { prec, constants, arity };
    let mut clauses = vec![];
    let push = |clauses: &mut Vec<Clause>, label: String, kind: ClauseKind, optional: bool| {
        clauses.push(Clause { label, kind, optional, enabled: !optional });
    };
    let guard = |w: &Option<String>| w.as_ref().map(|w| format!("{w} => ")).unwrap_or_default();
    if let Some(n) = &def.nan_iff {
        push(&mut clauses, format!("nan iff {n}"), ClauseKind::NanIff { pred: p.pred(n)? }, false);
    }
    for row in &def.special {
        if row.args.len() != arity {
            return Err(format!("special row {:?} has the wrong arity", row.args));
        }
        let args = row.args.iter().map(|a| p.pattern(a)).collect::<Result<Vec<_>, _>>()?;
        let result = p.pattern(&row.result)?;
        push(
            &mut clauses,
            format!("{}({}) = {}", function, row.args.join(", "), row.result),
            ClauseKind::Special { args, result },
            false,
        );
    }
    if let Some(r) = &def.range {
        let when = r.when.as_ref().map(|w| p.pred(w)).transpose()?;
        let lo = r.lo.as_ref().map(|l| p.constant(l)).transpose()?;
        let hi = r.hi.as_ref().map(|h| p.constant(h)).transpose()?;
        let label = format!(
            "{}range [{}, {}]",
            guard(&r.when),
            r.lo.as_deref().unwrap_or("-inf"),
            r.hi.as_deref().unwrap_or("+inf")
        );
        push(&mut clauses, label, ClauseKind::Range { when, lo, hi }, r.optional);
    }
    if let Some(s) = &def.sign {
        let arg = match s.same_as.as_str() {
            "x" => 0,
            "y" if arity == 2 => 1,
            other => return Err(format!("bad sign argument `{other}`")),
        };
        push(&mut clauses, format!("sign(r) = sign({})", s.same_as), ClauseKind::Sign { arg }, false);
    }
    for rel in &def.relations {
        let when = rel.when.as_ref().map(|w| p.pred(w)).transpose()?;
        let holds = p.pred(&rel.holds)?;
        push(&mut clauses, format!("{}{}", guard(&rel.when), rel.holds), ClauseKind::Relation { when, holds }, false);
    }
    Ok(MathContract { function, prec, arity, clauses })
}

fn shipped(prec: Precision) -> &'static BTreeMap<MathFn, MathContract> {
    static F32: OnceLock<BTreeMap<MathFn, MathContract>> = OnceLock::new();
    static F64: OnceLock<BTreeMap<MathFn, MathContract>> = OnceLock::new();
    let cell = match prec {
        Precision::F32 => &F32,
        Precision::F64 => &F64,
    };
    cell.get_or_init(|| match load_catalogue(CATALOGUE, prec) {
        Ok(c) => c,
        Err(e) => panic!("shipped contract catalogue is invalid: {e}"),
    })
}

/// The shipped contract for `function` at `prec`.
pub fn contract_for(function: &str, prec: Precision) -> Result<MathContract, MathSpecError> {
    let f = MathFn::from_name(function).ok_or_else(|| MathSpecError::UnknownFunction(function.to_string()))?;
    shipped(prec).get(&f).cloned().ok_or_else(|| MathSpecError::UnknownFunction(function.to_string()))
}

pub fn contract(f: MathFn, prec: Precision) -> &'static MathContract {
    match shipped(prec).get(&f) {
        Some(c) => c,
        None => panic!("catalogue lacks {f}"),
    }
}
