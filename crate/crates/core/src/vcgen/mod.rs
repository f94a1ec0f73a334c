//! Verification condition generation: one standalone SMT-LIB script per
//! obligation.

pub mod encode;
pub mod flatten;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::frontend::{NodeId, Span, TExpr, TFunction, Type, TypedProgram};
use crate::sexp::{app, atom, Sexp};
use encode::{Encoder, Encoding, Obligation};
pub use flatten::{flatten_tuples, FlatFunction, FlatParam, FlatProgram};

pub const LOGIC: &str = "QF_UFBVFP";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum VcKind {
    NanCheck,
    CastNaN,
    CastRange,
    IntDivByZero,
    CallPrecondition,
    UserAssert,
    Postcondition,
}

impl VcKind {
    pub fn name(self) -> &'static str {
        match self {
            VcKind::Postcondition => "postcondition",
            VcKind::CallPrecondition => "callPrecondition",
            VcKind::NanCheck => "nanCheck",
            VcKind::CastNaN => "castNaN",
            VcKind::CastRange => "castRange",
            VcKind::IntDivByZero => "intDivByZero",
            VcKind::UserAssert => "userAssert",
        }
    }
}

impl fmt::Display for VcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VcError {
    #[error("{span}: cannot encode `{what}` in `{function}`")]
    UnsupportedConstruct { function: String, span: Span, what: String },
}

#[derive(Debug, Error)]
#[error("{path}: {source}")]
pub struct DumpError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SmtScript {
    pub logic: String,
    pub declarations: Vec<String>,
    pub assertions: Vec<String>,
    pub commands: Vec<String>,
}

impl SmtScript {
    pub fn text(&self) -> String {
        let mut s = String::from("(set-option :produce-models true)\n");
        s += &format!("(set-logic {})\n", self.logic);
        for block in [&self.declarations, &self.assertions, &self.commands] {
            for line in block {
                s += line;
                s.push('\n');
            }
        }
        s
    }
}

impl fmt::Display for SmtScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

pub(crate) fn ser_type<S: Serializer>(t: &Type, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&t.to_string())
}

/// A declared input of a VC: one scalar leaf of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputSymbol {
    pub symbol: String,
    #[serde(flatten)]
    pub param: FlatParam,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationCondition {
    pub id: usize,
    pub function: String,
    pub kind: VcKind,
    pub span: Span,
    /// The node carrying the obligation (the postcondition's root for
    /// postcondition VCs).
    pub node: NodeId,
    pub callee: Option<String>,
    pub script: SmtScript,
    pub uses_opaque: bool,
    pub inputs: Vec<InputSymbol>,
}

impl VerificationCondition {
    pub fn file_name(&self) -> String {
        format!("{}_{}_{}.smt2", self.function, self.kind, self.id)
    }
}

fn param_symbol(i: usize, p: &FlatParam) -> String {
    format!("p{i}_{}", p.name)
}

/// One VC per injected check, call precondition, integer division,
/// assertion and postcondition, in definition order and then by node.
pub fn generate_vcs(program: &TypedProgram) -> Result<Vec<VerificationCondition>, VcError> {
    let flat = flatten_tuples(program);
    let recursive = program.recursive_functions();
    let mut out = vec![];
    for f in &flat.functions {
        let inputs: Vec<InputSymbol> =
            f.params.iter().enumerate().map(|(i, p)| InputSymbol { symbol: param_symbol(i, p), param: p.clone() }).collect();
        let params: Vec<Sexp> = inputs.iter().map(|i| atom(&i.symbol)).collect();
        let mut enc = Encoder::new(&flat, &recursive, &f.name);
        let (pre, _, post) = enc.function(f, params)?;
        let encoding = enc.out;
        let mut obligations: Vec<Obligation> = vec![];
        let mut seen = HashSet::new();
        for ob in encoding.obligations.iter() {
            if seen.insert((ob.node, ob.kind)) {
                obligations.push(ob.clone());
            }
        }
        obligations.sort_by_key(|o| (o.node, o.kind));
        if let (Some(goal), Some(p)) = (post, &f.post) {
            let mut hyps = encoding.facts.clone();
            hyps.splice(0..0, pre.iter().cloned());
            obligations.push(Obligation { kind: VcKind::Postcondition, node: p.id, span: p.span, hyps, goal, callee: None });
        }
        for ob in obligations {
            let (script, uses_opaque) = assemble(&encoding, f, &inputs, &ob.hyps, &ob.goal);
            out.push(VerificationCondition {
                id: out.len(),
                function: f.name.clone(),
                kind: ob.kind,
                span: ob.span,
                node: ob.node,
                callee: ob.callee,
                script,
                uses_opaque,
                inputs: inputs.clone(),
            });
        }
    }
    Ok(out)
}

/// Builds the script for one obligation from the definitions it depends on.
fn assemble(enc: &Encoding, f: &FlatFunction, inputs: &[InputSymbol], hyps: &[Sexp], goal: &Sexp) -> (SmtScript, bool) {
    let mut defs = BTreeSet::new();
    let mut funs = BTreeSet::new();
    let mut stack: Vec<&Sexp> = hyps.iter().chain(std::iter::once(goal)).collect();
    while let Some(t) = stack.pop() {
        t.atoms(&mut |a| {
            if let Some(&i) = enc.def_index.get(a) {
                if defs.insert(i) {
                    stack.extend(enc.defs[i].asserts.iter());
                }
            } else if enc.funs.contains_key(a) {
                funs.insert(a.to_string());
            }
        });
    }
    let mut declarations = vec![];
    let mut sorts: BTreeSet<String> = enc.sorts.clone();
    for tp in &f.type_params {
        sorts.insert(encode::abstract_sort(&tp.name));
    }
    for s in sorts {
        declarations.push(format!("(declare-sort {s} 0)"));
    }
    for name in &funs {
        declarations.push(enc.funs[name].clone());
    }
    for i in inputs {
        let sort = encode::sort_of(&i.param.ty).unwrap_or_else(|_| "Bool".into());
        declarations.push(format!("(declare-const {} {sort})", i.symbol));
    }
    let mut assertions = vec![];
    for &i in &defs {
        let d = &enc.defs[i];
        declarations.push(format!("(declare-const {} {})", d.sym, d.sort));
        for a in &d.asserts {
            assertions.push(format!("(assert {a})"));
        }
    }
    for h in hyps {
        if !h.is_true() {
            assertions.push(format!("(assert {h})"));
        }
    }
    assertions.push(format!("(assert {})", crate::sexp::not(goal.clone())));
    let uses_opaque = !funs.is_empty() || defs.iter().any(|&i| enc.defs[i].sym.starts_with("to_bits"));
    let script = SmtScript {
        logic: LOGIC.into(),
        declarations,
        assertions,
        commands: vec!["(check-sat)".into(), "(get-model)".into()],
    };
    (script, uses_opaque)
}

/// A single expression encoded as a term, with a script that declares its
/// free symbols and asserts the definitions it depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedExpr {
    pub term: Sexp,
    pub script: SmtScript,
}

/// Encodes a scalar expression whose `Param(i)` variables are bound to
/// constants named after `env[i]`. The script checks `(not term)` for a
/// Boolean term and is otherwise trivially satisfiable.
pub fn encode_expr(expr: &TExpr, env: &[(String, Type)]) -> Result<EncodedExpr, VcError> {
    let func = TFunction {
        name: "expr".into(),
        type_params: vec![],
        params: env.to_vec(),
        ret: expr.ty.clone(),
        pre: None,
        body: expr.clone(),
        post: None,
        opaque: false,
        unchecked: true,
        span: expr.span,
        locals: 0,
    };
    let program = TypedProgram { functions: vec![func], checks: Default::default() };
    let flat = flatten_tuples(&program);
    let f = &flat.functions[0];
    let inputs: Vec<InputSymbol> =
        f.params.iter().map(|p| InputSymbol { symbol: p.name.clone(), param: p.clone() }).collect();
    let none = BTreeSet::new();
    let mut enc = Encoder::new(&flat, &none, "expr");
    let (_, mut results, _) = enc.function(f, inputs.iter().map(|i| atom(&i.symbol)).collect())?;
    let term = results.swap_remove(0);
    let goal = if expr.ty == Type::Bool { term.clone() } else { atom("true") };
    let (script, _) = assemble(&enc.out, f, &inputs, &[app("=", [term.clone(), term.clone()])], &goal);
    Ok(EncodedExpr { term, script })
}

/// Writes one `{function}_{kind}_{id}.smt2` file per VC into `dir`.
pub fn dump_vcs(vcs: &[VerificationCondition], dir: &Path) -> Result<Vec<PathBuf>, DumpError> {
    std::fs::create_dir_all(dir).map_err(|source| DumpError { path: dir.to_path_buf(), source })?;
    let mut out = vec![];
    for vc in vcs {
        let path = dir.join(vc.file_name());
        std::fs::write(&path, vc.script.text()).map_err(|source| DumpError { path: path.clone(), source })?;
        out.push(path);
    }
    Ok(out)
}
