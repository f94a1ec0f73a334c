//! Symbolic encoding of flattened functions into SMT-LIB terms and the
//! obligations they give rise to.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::float::{smt_fp_literal, Precision};
use crate::frontend::{BinOp, Binding, CheckKind, Const, NodeId, Span, TExpr, TExprKind, Type, UnOp};
use crate::mathspec::{self, smt as mathsmt};
use crate::sexp::{self, app, atom, Sexp};

use super::flatten::{FlatFunction, FlatProgram};
use super::{VcError, VcKind};

/// A named constant with its defining assertions.
#[derive(Debug, Clone)]
pub(crate) struct Def {
    pub sym: String,
    pub sort: String,
    pub asserts: Vec<Sexp>,
}

#[derive(Debug, Clone)]
pub(crate) struct Obligation {
    pub kind: VcKind,
    pub node: NodeId,
    pub span: Span,
    pub hyps: Vec<Sexp>,
    pub goal: Sexp,
    pub callee: Option<String>,
}

/// Everything produced while encoding one function.
#[derive(Debug, Default)]
pub(crate) struct Encoding {
    pub defs: Vec<Def>,
    pub def_index: HashMap<String, usize>,
    /// Uninterpreted function symbol to its declaration.
    pub funs: BTreeMap<String, String>,
    pub sorts: BTreeSet<String>,
    pub obligations: Vec<Obligation>,
    /// `path => cond` for every condition whose failure aborts evaluation,
    /// in evaluation order.
    pub facts: Vec<Sexp>,
}

pub(crate) fn sort_of(ty: &Type) -> Result<String, String> {
    Ok(match ty {
        Type::F32 => Precision::F32.smt_sort(),
        Type::F64 => Precision::F64.smt_sort(),
        Type::I8 | Type::I16 | Type::I32 | Type::I64 => format!("(_ BitVec {})", ty.int_width().unwrap_or(32)),
        Type::Bool => "Bool".into(),
        Type::Var { name, .. } => abstract_sort(name),
        Type::Tuple(_) => return Err("tuple sort after flattening".into()),
    })
}

pub(crate) fn abstract_sort(name: &str) -> String {
    format!("S_{name}")
}

/// Short tag used in symbol names.
fn sort_tag(ty: &Type) -> String {
    match ty {
        Type::F32 => "f32".into(),
        Type::F64 => "f64".into(),
        Type::I8 => "i8".into(),
        Type::I16 => "i16".into(),
        Type::I32 => "i32".into(),
        Type::I64 => "i64".into(),
        Type::Bool => "bool".into(),
        Type::Var { name, .. } => abstract_sort(name),
        Type::Tuple(ts) => ts.iter().map(sort_tag).collect::<Vec<_>>().join("_"),
    }
}

pub(crate) fn fp_lit(bits: u64, prec: Precision) -> Sexp {
    atom(smt_fp_literal(bits, prec))
}

fn fp_of(x: f64, prec: Precision) -> Sexp {
    let bits = match prec {
        Precision::F64 => x.to_bits(),
        Precision::F32 => (x as f32).to_bits() as u64,
    };
    fp_lit(bits, prec)
}

fn nan(prec: Precision) -> Sexp {
    atom(format!("(_ NaN {} {})", prec.ebits(), prec.sbits()))
}

pub(crate) fn bv_lit(value: i64, width: u32) -> Sexp {
    let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
    atom(format!("(_ bv{} {width})", (value as u64) & mask))
}

fn is_nan(x: &Sexp) -> Sexp {
    app("fp.isNaN", [x.clone()])
}

fn ite(c: Sexp, t: Sexp, e: Sexp) -> Sexp {
    app("ite", [c, t, e])
}

/// Goal of a cast range check: NaN, or truncation lies in the target range.
pub(crate) fn cast_range_goal(x: &Sexp, prec: Precision, width: u32) -> Sexp {
    let bound = 2f64.powi(width as i32 - 1);
    let t = app("fp.roundToIntegral", [atom("RTZ"), x.clone()]);
    sexp::or(vec![
        is_nan(x),
        app("and", [app("fp.leq", [fp_of(-bound, prec), t.clone()]), app("fp.lt", [t, fp_of(bound, prec)])]),
    ])
}

/// JVM float-to-int conversion: NaN to 0, saturating, truncating. Byte and
/// Short go through Int and keep the low bits.
pub(crate) fn float_to_int(x: &Sexp, prec: Precision, width: u32) -> Sexp {
    let w = width.max(32);
    let bound = 2f64.powi(w as i32 - 1);
    let conv = ite(
        is_nan(x),
        bv_lit(0, w),
        ite(
            app("fp.geq", [x.clone(), fp_of(bound, prec)]),
            bv_lit(i64::MAX >> (64 - w), w),
            ite(
                app("fp.leq", [x.clone(), fp_of(-bound, prec)]),
                bv_lit(i64::MIN >> (64 - w), w),
                app(&format!("(_ fp.to_sbv {w})"), [atom("RTZ"), x.clone()]),
            ),
        ),
    );
    if width < w {
        app(&format!("(_ extract {} 0)", width - 1), [conv])
    } else {
        conv
    }
}

/// How calls and obligations are treated in the current frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// The function under verification: obligations are recorded.
    Own,
    /// Inlined callee body.
    Inlined,
    /// A callee's contract instantiated at a call site.
    Contract,
}

struct Frame {
    params: Vec<Sexp>,
    locals: HashMap<usize, Sexp>,
    result: Vec<Sexp>,
    mode: Mode,
}

pub(crate) struct Encoder<'a> {
    prog: &'a FlatProgram,
    recursive: &'a BTreeSet<String>,
    function: String,
    counter: usize,
    in_contract: bool,
    pub out: Encoding,
}

impl<'a> Encoder<'a> {
    pub fn new(prog: &'a FlatProgram, recursive: &'a BTreeSet<String>, function: &str) -> Self {
        Encoder { prog, recursive, function: function.to_string(), counter: 0, in_contract: false, out: Encoding::default() }
    }

    fn err(&self, e: &TExpr, what: impl Into<String>) -> VcError {
        VcError::UnsupportedConstruct { function: self.function.clone(), span: e.span, what: what.into() }
    }

    fn sort(&mut self, e: &TExpr, ty: &Type) -> Result<String, VcError> {
        if let Type::Var { name, .. } = ty {
            self.out.sorts.insert(abstract_sort(name));
        }
        sort_of(ty).map_err(|w| self.err(e, w))
    }

    fn fresh(&mut self, prefix: &str, name: &str) -> String {
        let k = self.counter;
        self.counter += 1;
        if name.is_empty() {
            format!("{prefix}{k}")
        } else {
            format!("{prefix}{k}_{name}")
        }
    }

    fn define(&mut self, sym: String, sort: String, asserts: Vec<Sexp>) -> Sexp {
        self.out.def_index.insert(sym.clone(), self.out.defs.len());
        self.out.defs.push(Def { sym: sym.clone(), sort, asserts });
        atom(sym)
    }

    fn declare_fun(&mut self, name: &str, decl: String) {
        self.out.funs.entry(name.to_string()).or_insert(decl);
    }

    fn record(&mut self, fr: &Frame, kind: VcKind, e: &TExpr, path: &[Sexp], goal: Sexp, callee: Option<String>) {
        if fr.mode == Mode::Own {
            let mut hyps = path.to_vec();
            hyps.extend(self.out.facts.iter().cloned());
            self.out.obligations.push(Obligation { kind, node: e.id, span: e.span, hyps, goal, callee });
        }
    }

    /// Later code runs only if `cond` held here.
    fn fact(&mut self, fr: &Frame, path: &[Sexp], cond: Sexp) {
        if fr.mode != Mode::Contract && !self.in_contract {
            self.out.facts.push(sexp::implies(sexp::and(path.to_vec()), cond));
        }
    }

    fn checks(&self, id: NodeId) -> BTreeSet<CheckKind> {
        self.prog.checks.get(&id).cloned().unwrap_or_default()
    }

    /// Encodes the function under verification. Returns the hypotheses
    /// (precondition), the result leaves and the postcondition goal.
    pub fn function(&mut self, f: &FlatFunction, params: Vec<Sexp>) -> Result<(Vec<Sexp>, Vec<Sexp>, Option<Sexp>), VcError> {
        let mut fr = Frame { params, locals: HashMap::new(), result: vec![], mode: Mode::Contract };
        // Own contracts may use callee contracts, but generate no obligations.
        let pre = match &f.pre {
            Some(p) => vec![self.contract_expr(p, &mut fr)?],
            None => vec![],
        };
        fr.mode = Mode::Own;
        let mut results = vec![];
        for r in &f.results {
            results.push(self.expr(r, &mut fr, &pre)?);
        }
        let post = match &f.post {
            Some(p) => {
                let mut pf =
                    Frame { params: fr.params.clone(), locals: HashMap::new(), result: results.clone(), mode: Mode::Contract };
                Some(self.contract_expr(p, &mut pf)?)
            }
            None => None,
        };
        Ok((pre, results, post))
    }

    /// Contract expressions of the function itself get callee axioms.
    fn contract_expr(&mut self, e: &TExpr, fr: &mut Frame) -> Result<Sexp, VcError> {
        let saved = (fr.mode, self.in_contract);
        fr.mode = Mode::Inlined;
        self.in_contract = true;
        let r = self.expr(e, fr, &[]);
        (fr.mode, self.in_contract) = saved;
        r
    }

    fn expr(&mut self, e: &TExpr, fr: &mut Frame, path: &[Sexp]) -> Result<Sexp, VcError> {
        use TExprKind as K;
        Ok(match &e.kind {
            K::Const(c) => match *c {
                Const::Float { bits, prec } => fp_lit(bits, prec),
                Const::Int { value, width } => bv_lit(value, width),
                Const::Bool(b) => atom(if b { "true" } else { "false" }),
            },
            K::Var { binding, name } => match *binding {
                Binding::Param(i) => fr.params.get(i).cloned().ok_or_else(|| self.err(e, format!("unbound parameter `{name}`")))?,
                Binding::Local(l) => fr.locals.get(&l).cloned().ok_or_else(|| self.err(e, format!("unbound local `{name}`")))?,
                Binding::ResultLeaf(k) => fr.result.get(k).cloned().ok_or_else(|| self.err(e, "result outside postcondition"))?,
                Binding::Result => fr.result.first().cloned().ok_or_else(|| self.err(e, "result outside postcondition"))?,
            },
            K::Let { local, name, value, body } => {
                let v = self.expr(value, fr, path)?;
                let sort = self.sort(value, &value.ty)?;
                let sym = self.fresh("l", name);
                let l = self.define(sym, sort, vec![]);
                let def = self.out.defs.len() - 1;
                self.out.defs[def].asserts.push(app("=", [l.clone(), v]));
                let prev = fr.locals.insert(*local, l);
                let out = self.expr(body, fr, path);
                match prev {
                    Some(p) => fr.locals.insert(*local, p),
                    None => fr.locals.remove(local),
                };
                out?
            }
            K::Assert { cond, body } => {
                let c = self.expr(cond, fr, path)?;
                self.record(fr, VcKind::UserAssert, e, path, c.clone(), None);
                self.fact(fr, path, c.clone());
                let mut p = path.to_vec();
                p.push(c);
                self.expr(body, fr, &p)?
            }
            K::If { cond, then, els } => {
                let c = self.expr(cond, fr, path)?;
                let mut pt = path.to_vec();
                pt.push(c.clone());
                let t = self.expr(then, fr, &pt)?;
                let mut pe = path.to_vec();
                pe.push(sexp::not(c.clone()));
                let f = self.expr(els, fr, &pe)?;
                ite(c, t, f)
            }
            K::Unary(op, x) => {
                let v = self.expr(x, fr, path)?;
                self.unary(e, *op, x, v)?
            }
            K::Binary(op, l, r) => self.binary(e, *op, l, r, fr, path)?,
            K::Cast(x) => {
                let v = self.expr(x, fr, path)?;
                let checks = self.checks(e.id);
                if let (Some(p), Some(w)) = (x.ty.prec(), e.ty.int_width()) {
                    if checks.contains(&CheckKind::CastNaN) {
                        self.record(fr, VcKind::CastNaN, e, path, sexp::not(is_nan(&v)), None);
                    }
                    if checks.contains(&CheckKind::CastRange) {
                        self.record(fr, VcKind::CastRange, e, path, cast_range_goal(&v, p, w), None);
                    }
                }
                self.cast(e, &x.ty, v)?
            }
            K::Math { func, args } => {
                let prec = e.ty.prec().ok_or_else(|| self.err(e, "math call on a non-float type"))?;
                let mut av = vec![];
                for a in args {
                    av.push(self.expr(a, fr, path)?);
                }
                let uf = mathsmt::uf_name(*func, prec);
                self.declare_fun(&uf, mathsmt::uf_declaration(*func, prec));
                let sym = self.fresh("m", "");
                let m = atom(sym.clone());
                let mut asserts = vec![app("=", [m.clone(), app(&uf, av.clone())])];
                asserts.extend(mathsmt::axioms(mathspec::contract(*func, prec), &av, &m));
                self.define(sym, prec.smt_sort(), asserts)
            }
            K::CallLeaf { func, type_args, args, leaf } => self.call(e, func, type_args, args, *leaf, fr, path)?,
            K::Call { .. } | K::Tuple(_) | K::Proj(..) => return Err(self.err(e, "tuple construct after flattening")),
        })
    }

    fn unary(&mut self, e: &TExpr, op: UnOp, x: &TExpr, v: Sexp) -> Result<Sexp, VcError> {
        let float = x.ty.prec();
        Ok(match (op, float) {
            (UnOp::Not, _) => sexp::not(v),
            (UnOp::Neg, Some(_)) => app("fp.neg", [v]),
            (UnOp::Neg, None) => app("bvneg", [v]),
            (UnOp::Abs, Some(_)) => app("fp.abs", [v]),
            (UnOp::Abs, None) => {
                let w = x.ty.int_width().unwrap_or(32);
                ite(app("bvslt", [v.clone(), bv_lit(0, w)]), app("bvneg", [v.clone()]), v)
            }
            (UnOp::Sqrt, Some(_)) => app("fp.sqrt", [atom("RNE"), v]),
            (UnOp::Ceil, Some(_)) => app("fp.roundToIntegral", [atom("RTP"), v]),
            (UnOp::Floor, Some(_)) => app("fp.roundToIntegral", [atom("RTN"), v]),
            (UnOp::Rint, Some(_)) => app("fp.roundToIntegral", [atom("RNE"), v]),
            (UnOp::IsNaN, Some(_)) => is_nan(&v),
            (UnOp::IsInfinite, Some(_)) => app("fp.isInfinite", [v]),
            (UnOp::IsFinite, Some(_)) => sexp::not(app("or", [is_nan(&v), app("fp.isInfinite", [v])])),
            (UnOp::IsPositiveSign, Some(_)) => app("fp.isPositive", [v]),
            (UnOp::ToBits, Some(p)) => {
                // A fresh symbol per occurrence: nothing is known about NaN payloads.
                let sym = self.fresh("to_bits", p.suffix());
                let tb = atom(sym.clone());
                let back = app(&format!("(_ to_fp {} {})", p.ebits(), p.sbits()), [tb.clone()]);
                self.define(sym, format!("(_ BitVec {})", p.width()), vec![app("=", [back, v])])
            }
            (UnOp::FromBits, None) => {
                let p = e.ty.prec().ok_or_else(|| self.err(e, "fromBits to a non-float type"))?;
                app(&format!("(_ to_fp {} {})", p.ebits(), p.sbits()), [v])
            }
            (op, _) => return Err(self.err(e, format!("unary {op:?} on {}", x.ty))),
        })
    }

    fn binary(&mut self, e: &TExpr, op: BinOp, l: &TExpr, r: &TExpr, fr: &mut Frame, path: &[Sexp]) -> Result<Sexp, VcError> {
        let a = self.expr(l, fr, path)?;
        if matches!(op, BinOp::And | BinOp::Or) {
            let mut p = path.to_vec();
            p.push(if op == BinOp::And { a.clone() } else { sexp::not(a.clone()) });
            let b = self.expr(r, fr, &p)?;
            return Ok(app(if op == BinOp::And { "and" } else { "or" }, [a, b]));
        }
        let b = self.expr(r, fr, path)?;
        if op.is_comparison() && self.checks(e.id).contains(&CheckKind::NanCheck) {
            let mut parts = vec![];
            if l.ty.is_float() {
                parts.push(sexp::not(is_nan(&a)));
            }
            if r.ty.is_float() {
                parts.push(sexp::not(is_nan(&b)));
            }
            self.record(fr, VcKind::NanCheck, e, path, sexp::and(parts), None);
        }
        if let Some(p) = l.ty.prec() {
            let rne = atom("RNE");
            return Ok(match op {
                BinOp::Add => app("fp.add", [rne, a, b]),
                BinOp::Sub => app("fp.sub", [rne, a, b]),
                BinOp::Mul => app("fp.mul", [rne, a, b]),
                BinOp::Div => app("fp.div", [rne, a, b]),
                BinOp::Min | BinOp::Max => jvm_min_max(op == BinOp::Min, a, b, p),
                BinOp::Lt => app("fp.lt", [a, b]),
                BinOp::Le => app("fp.leq", [a, b]),
                BinOp::Gt => app("fp.gt", [a, b]),
                BinOp::Ge => app("fp.geq", [a, b]),
                BinOp::Eq => app("fp.eq", [a, b]),
                BinOp::Ne => sexp::not(app("fp.eq", [a, b])),
                BinOp::NoeqEq => self.noeq_eq(e, &l.ty, a, b)?,
                BinOp::NoeqNe => sexp::not(self.noeq_eq(e, &l.ty, a, b)?),
                _ => return Err(self.err(e, format!("`{}` on floats", op.symbol()))),
            });
        }
        if let Some(w) = l.ty.int_width() {
            if matches!(op, BinOp::Div | BinOp::Rem) {
                let nonzero = sexp::not(app("=", [b.clone(), bv_lit(0, w)]));
                self.record(fr, VcKind::IntDivByZero, e, path, nonzero.clone(), None);
                self.fact(fr, path, nonzero);
            }
            let lt = |x: &Sexp, y: &Sexp| app("bvslt", [x.clone(), y.clone()]);
            return Ok(match op {
                BinOp::Add => app("bvadd", [a, b]),
                BinOp::Sub => app("bvsub", [a, b]),
                BinOp::Mul => app("bvmul", [a, b]),
                BinOp::Div => app("bvsdiv", [a, b]),
                BinOp::Rem => app("bvsrem", [a, b]),
                BinOp::Min => ite(lt(&b, &a), b, a),
                BinOp::Max => ite(lt(&a, &b), b, a),
                BinOp::Lt => lt(&a, &b),
                BinOp::Le => app("bvsle", [a, b]),
                BinOp::Gt => app("bvsgt", [a, b]),
                BinOp::Ge => app("bvsge", [a, b]),
                BinOp::Eq => app("=", [a, b]),
                BinOp::Ne => sexp::not(app("=", [a, b])),
                BinOp::NoeqEq => self.noeq_eq(e, &l.ty, a, b)?,
                BinOp::NoeqNe => sexp::not(self.noeq_eq(e, &l.ty, a, b)?),
                _ => return Err(self.err(e, format!("`{}` on integers", op.symbol()))),
            });
        }
        Ok(match op {
            BinOp::Eq => app("=", [a, b]),
            BinOp::Ne => sexp::not(app("=", [a, b])),
            BinOp::NoeqEq => self.noeq_eq(e, &l.ty, a, b)?,
            BinOp::NoeqNe => sexp::not(self.noeq_eq(e, &l.ty, a, b)?),
            _ => return Err(self.err(e, format!("`{}` on {}", op.symbol(), l.ty))),
        })
    }

    /// Equality on a `@noeq` type: an uninterpreted predicate per sort.
    fn noeq_eq(&mut self, e: &TExpr, ty: &Type, a: Sexp, b: Sexp) -> Result<Sexp, VcError> {
        let sort = self.sort(e, ty)?;
        let name = format!("eq.{}", sort_tag(ty));
        self.declare_fun(&name, format!("(declare-fun {name} ({sort} {sort}) Bool)"));
        Ok(app(&name, [a, b]))
    }

    fn cast(&mut self, e: &TExpr, from: &Type, v: Sexp) -> Result<Sexp, VcError> {
        let to = &e.ty;
        Ok(match (from.prec(), from.int_width(), to.prec(), to.int_width()) {
            (Some(_), _, Some(q), _) => app(&format!("(_ to_fp {} {})", q.ebits(), q.sbits()), [atom("RNE"), v]),
            (_, Some(_), Some(q), _) => app(&format!("(_ to_fp {} {})", q.ebits(), q.sbits()), [atom("RNE"), v]),
            (Some(p), _, _, Some(w)) => float_to_int(&v, p, w),
            (_, Some(a), _, Some(b)) if a < b => app(&format!("(_ sign_extend {})", b - a), [v]),
            (_, Some(a), _, Some(b)) if a > b => app(&format!("(_ extract {} 0)", b - 1), [v]),
            (_, Some(_), _, Some(_)) => v,
            _ => return Err(self.err(e, format!("cast from {from} to {to}"))),
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn call(
        &mut self,
        e: &TExpr,
        func: &str,
        type_args: &[Type],
        args: &[TExpr],
        leaf: usize,
        fr: &mut Frame,
        path: &[Sexp],
    ) -> Result<Sexp, VcError> {
        let prog = self.prog;
        let callee = prog.function(func).ok_or_else(|| self.err(e, format!("unknown function `{func}`")))?;
        let mut av = vec![];
        for a in args {
            av.push(self.expr(a, fr, path)?);
        }
        let tmap: HashMap<String, Type> =
            callee.type_params.iter().map(|t| t.name.clone()).zip(type_args.iter().cloned()).collect();
        let inst = |x: &TExpr| {
            let mut x = x.clone();
            x.subst_types(&tmap);
            x
        };
        if fr.mode != Mode::Contract && !self.in_contract {
            if let Some(pre) = &callee.pre {
                let mut cf = Frame { params: av.clone(), locals: HashMap::new(), result: vec![], mode: Mode::Contract };
                let goal = self.expr(&inst(pre), &mut cf, &[])?;
                self.record(fr, VcKind::CallPrecondition, e, path, goal.clone(), Some(func.to_string()));
                self.fact(fr, path, goal);
            }
        }
        if !callee.opaque && !self.recursive.contains(func) {
            let body = inst(&callee.results[leaf]);
            let mode = if fr.mode == Mode::Contract { Mode::Contract } else { Mode::Inlined };
            let mut cf = Frame { params: av, locals: HashMap::new(), result: vec![], mode };
            return self.expr(&body, &mut cf, path);
        }
        // Modular: an uninterpreted result constrained by the callee's contract.
        let suffix = if type_args.is_empty() {
            String::new()
        } else {
            format!("@{}", type_args.iter().map(sort_tag).collect::<Vec<_>>().join(","))
        };
        let mut arg_sorts = vec![];
        for p in &callee.params {
            arg_sorts.push(self.sort(e, &p.ty.subst(&tmap))?);
        }
        let mut apps = vec![];
        for (k, rt) in callee.result_types.iter().enumerate() {
            let name = format!("fn.{func}.{k}{suffix}");
            let rs = self.sort(e, &rt.subst(&tmap))?;
            self.declare_fun(&name, format!("(declare-fun {name} ({}) {rs})", arg_sorts.join(" ")));
            apps.push(if av.is_empty() { atom(&name) } else { app(&name, av.clone()) });
        }
        let sort = self.sort(e, &e.ty)?;
        let sym = self.fresh("c", func);
        let c = atom(sym.clone());
        let mut asserts = vec![app("=", [c.clone(), apps[leaf].clone()])];
        if fr.mode != Mode::Contract {
            let mut cf = Frame { params: av.clone(), locals: HashMap::new(), result: apps.clone(), mode: Mode::Contract };
            let pre = match &callee.pre {
                Some(p) => self.expr(&inst(p), &mut cf, &[])?,
                None => atom("true"),
            };
            if let Some(post) = &callee.post {
                let post = self.expr(&inst(post), &mut cf, &[])?;
                asserts.push(sexp::implies(pre, post));
            }
        }
        Ok(self.define(sym, sort, asserts))
    }
}

fn jvm_min_max(min: bool, a: Sexp, b: Sexp, p: Precision) -> Sexp {
    let either_nan = app("or", [is_nan(&a), is_nan(&b)]);
    let both_zero = app("and", [app("fp.isZero", [a.clone()]), app("fp.isZero", [b.clone()])]);
    let zero_pick = if min {
        ite(app("fp.isNegative", [a.clone()]), a.clone(), b.clone())
    } else {
        ite(app("fp.isPositive", [a.clone()]), a.clone(), b.clone())
    };
    let pick = if min {
        ite(app("fp.leq", [a.clone(), b.clone()]), a, b)
    } else {
        ite(app("fp.geq", [a.clone(), b.clone()]), a, b)
    };
    ite(either_nan, nan(p), ite(both_zero, zero_pick, pick))
}
