//! Translation of contracts into per-call-site SMT-LIB assertions.

use crate::float::{smt_fp_literal, Precision};
use crate::frontend::MathFn;
use crate::sexp::{self, app, atom, Sexp};

use super::{ClauseKind, CmpOp, MathContract, Pattern, Pred, Term};

/// Name of the uninterpreted symbol standing for `f` at `prec`.
pub fn uf_name(f: MathFn, prec: Precision) -> String {
    format!("{}.{}", f.name(), prec.suffix())
}

pub fn uf_declaration(f: MathFn, prec: Precision) -> String {
    let sort = prec.smt_sort();
    let args = vec![sort.clone(); f.arity()].join(" ");
    format!("(declare-fun {} ({args}) {sort})", uf_name(f, prec))
}

fn lit(bits: u64, prec: Precision) -> Sexp {
    // A literal is parsed back as a single term when printed.
    atom(smt_fp_literal(bits, prec))
}

fn term(t: &Term, prec: Precision, args: &[Sexp], r: &Sexp) -> Sexp {
    match t {
        Term::Arg(i) => args[*i].clone(),
        Term::Result => r.clone(),
        Term::Const(b) => lit(*b, prec),
        Term::Abs(t) => app("fp.abs", [term(t, prec, args, r)]),
        Term::Neg(t) => app("fp.neg", [term(t, prec, args, r)]),
        Term::Add(a, b) => app("fp.add", [atom("RNE"), term(a, prec, args, r), term(b, prec, args, r)]),
        Term::Sub(a, b) => app("fp.sub", [atom("RNE"), term(a, prec, args, r), term(b, prec, args, r)]),
    }
}

fn pred(p: &Pred, prec: Precision, args: &[Sexp], r: &Sexp) -> Sexp {
    let t = |t: &Term| term(t, prec, args, r);
    match p {
        Pred::Bool(b) => atom(if *b { "true" } else { "false" }),
        Pred::Not(p) => sexp::not(pred(p, prec, args, r)),
        Pred::And(a, b) => app("and", [pred(a, prec, args, r), pred(b, prec, args, r)]),
        Pred::Or(a, b) => app("or", [pred(a, prec, args, r), pred(b, prec, args, r)]),
        Pred::IsNaN(x) => app("fp.isNaN", [t(x)]),
        Pred::IsInf(x) => app("fp.isInfinite", [t(x)]),
        Pred::IsFinite(x) => {
            let x = t(x);
            sexp::not(app("or", [app("fp.isNaN", [x.clone()]), app("fp.isInfinite", [x])]))
        }
        Pred::IsZero(x) => app("fp.isZero", [t(x)]),
        Pred::Cmp(op, a, b) => {
            let head = match op {
                CmpOp::Lt => "fp.lt",
                CmpOp::Le => "fp.leq",
                CmpOp::Gt => "fp.gt",
                CmpOp::Ge => "fp.geq",
                CmpOp::Eq => "fp.eq",
            };
            app(head, [t(a), t(b)])
        }
    }
}

fn pattern(p: &Pattern, prec: Precision, x: &Sexp) -> Sexp {
    match p {
        Pattern::NaN => app("fp.isNaN", [x.clone()]),
        Pattern::Exact(b) => app("=", [x.clone(), lit(*b, prec)]),
    }
}

/// Assertions constraining `result = f(args)` by every enabled clause.
pub fn axioms(contract: &MathContract, args: &[Sexp], result: &Sexp) -> Vec<Sexp> {
    let prec = contract.prec;
    let not_nan = |x: &Sexp| sexp::not(app("fp.isNaN", [x.clone()]));
    let mut out = vec![];
    for c in contract.active() {
        let a = match &c.kind {
            ClauseKind::NanIff { pred: p } => app("=", [app("fp.isNaN", [result.clone()]), pred(p, prec, args, result)]),
            ClauseKind::Special { args: pats, result: res } => {
                let hyp = sexp::and(pats.iter().zip(args).map(|(p, a)| pattern(p, prec, a)).collect());
                sexp::implies(hyp, pattern(res, prec, result))
            }
            ClauseKind::Range { when, lo, hi } => {
                let mut hyp = vec![not_nan(result)];
                hyp.extend(when.iter().map(|w| pred(w, prec, args, result)));
                let mut bounds = vec![];
                if let Some(l) = lo {
                    bounds.push(app("fp.leq", [lit(*l, prec), result.clone()]));
                }
                if let Some(h) = hi {
                    bounds.push(app("fp.leq", [result.clone(), lit(*h, prec)]));
                }
                sexp::implies(sexp::and(hyp), sexp::and(bounds))
            }
            ClauseKind::Sign { arg } => sexp::implies(
                sexp::and(vec![not_nan(result), not_nan(&args[*arg])]),
                app("=", [app("fp.isNegative", [result.clone()]), app("fp.isNegative", [args[*arg].clone()])]),
            ),
            ClauseKind::Relation { when, holds } => {
                let mut hyp = vec![not_nan(result)];
                hyp.extend(when.iter().map(|w| pred(w, prec, args, result)));
                sexp::implies(sexp::and(hyp), pred(holds, prec, args, result))
            }
        };
        out.push(a);
    }
    out
}

/// A script asserting the contract at `sites` independent call sites of one
/// uninterpreted symbol. `sat` means the axioms are consistent.
pub fn satisfiability_script(contract: &MathContract, sites: usize) -> String {
    let prec = contract.prec;
    let sort = prec.smt_sort();
    let f = uf_name(contract.function, prec);
    let mut s = String::from("(set-option :produce-models true)\n(set-logic QF_UFBVFP)\n");
    s += &uf_declaration(contract.function, prec);
    s.push('\n');
    let mut asserts = vec![];
    for k in 0..sites {
        let args: Vec<Sexp> = (0..contract.arity).map(|i| atom(format!("a{k}_{i}"))).collect();
        for a in &args {
            s += &format!("(declare-const {a} {sort})\n");
        }
        let r = atom(format!("r{k}"));
        s += &format!("(declare-const {r} {sort})\n");
        asserts.push(app("=", [r.clone(), app(&f, args.clone())]));
        asserts.extend(axioms(contract, &args, &r));
    }
    for a in asserts {
        s += &format!("(assert {a})\n");
    }
    s += "(check-sat)\n";
    s
}
