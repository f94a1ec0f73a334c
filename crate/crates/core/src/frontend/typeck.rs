use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::ast::{Expr, ExprKind, FunctionDef, Literal, Program, Stmt, SurfaceBinOp, TypeExpr};
use super::span::Span;
use super::types::*;
use super::{TypeError, TypeErrorKind};
use crate::float::Precision;

pub const MODULO_HINT: &str = "rewrite `x % n` as `x - n * floor(x / n)`; \
the two agree over the reals but round differently in floating point";

pub fn typecheck(program: &Program) -> Result<TypedProgram, Vec<TypeError>> {
    let mut tc = Checker { defs: BTreeMap::new(), rets: HashMap::new(), in_progress: BTreeSet::new(), errors: vec![] };
    let mut seen = BTreeSet::new();
    for f in &program.functions {
        if !seen.insert(f.name.clone()) {
            tc.err(TypeErrorKind::TypeMismatch, f.span, format!("function `{}` is defined more than once", f.name));
        }
        tc.defs.entry(f.name.clone()).or_insert(f);
    }
    let mut functions = Vec::new();
    for f in &program.functions {
        if let Some(tf) = tc.function(f) {
            functions.push(tf);
        }
    }
    let mut tp = TypedProgram { functions, checks: BTreeMap::new() };
    if tc.errors.is_empty() {
        let rec = tp.recursive_functions();
        for f in &tp.functions {
            if rec.contains(&f.name) && f.post.is_none() {
                tc.err(
                    TypeErrorKind::MissingContract,
                    f.span,
                    format!("recursive function `{}` must declare a postcondition", f.name),
                );
            }
        }
    }
    if !tc.errors.is_empty() {
        let mut errs = tc.errors;
        errs.sort_by_key(|e| (e.span.start, e.span.end));
        errs.dedup();
        return Err(errs);
    }
    tp.renumber();
    Ok(tp)
}

struct Checker<'a> {
    defs: BTreeMap<String, &'a FunctionDef>,
    /// Result types, declared or inferred.
    rets: HashMap<String, Option<Type>>,
    in_progress: BTreeSet<String>,
    errors: Vec<TypeError>,
}

type R<T> = Result<T, ()>;

struct Scope<'f> {
    type_params: &'f [TypeParamDef],
    params: Vec<(String, Type)>,
    locals: Vec<(String, usize, Type)>,
    next_local: usize,
    result: Option<(String, Type)>,
}

fn mk(ty: Type, span: Span, kind: TExprKind) -> TExpr {
    TExpr::new(ty, span, kind)
}

fn bx(e: TExpr) -> Box<TExpr> {
    Box::new(e)
}

impl<'a> Checker<'a> {
    fn err(&mut self, kind: TypeErrorKind, span: Span, message: String) {
        self.errors.push(TypeError { kind, span, message, hint: None });
    }

    fn fail<T>(&mut self, kind: TypeErrorKind, span: Span, message: String) -> R<T> {
        self.err(kind, span, message);
        Err(())
    }

    fn resolve_type(&mut self, t: &TypeExpr, tps: &[TypeParamDef]) -> R<Type> {
        match t {
            TypeExpr::Named(n, sp) => {
                let ty = match n.as_str() {
                    "Double" | "Float64" => Type::F64,
                    "Float" | "Float32" => Type::F32,
                    "Int" | "Int32" => Type::I32,
                    "Long" | "Int64" => Type::I64,
                    "Short" | "Int16" => Type::I16,
                    "Byte" | "Int8" => Type::I8,
                    "Boolean" | "Bool" => Type::Bool,
                    other => match tps.iter().find(|tp| tp.name == other) {
                        Some(tp) => Type::Var { name: tp.name.clone(), noeq: tp.noeq },
                        None => return self.fail(TypeErrorKind::UnknownIdentifier, *sp, format!("unknown type `{other}`")),
                    },
                };
                Ok(ty)
            }
            TypeExpr::Tuple(items, _) => {
                let mut ts = Vec::new();
                for i in items {
                    ts.push(self.resolve_type(i, tps)?);
                }
                Ok(Type::Tuple(ts))
            }
        }
    }

    fn type_params(f: &FunctionDef) -> Vec<TypeParamDef> {
        f.type_params.iter().map(|t| TypeParamDef { name: t.name.clone(), noeq: t.noeq }).collect()
    }

    /// Result type of `name`, inferring it from the body when undeclared.
    fn ret_type(&mut self, name: &str, at: Span) -> R<Type> {
        if let Some(r) = self.rets.get(name) {
            return r.clone().ok_or(());
        }
        let def = self.defs[name];
        let tps = Self::type_params(def);
        if let Some(t) = &def.ret {
            let r = self.resolve_type(t, &tps);
            self.rets.insert(name.to_string(), r.clone().ok());
            return r;
        }
        if self.in_progress.contains(name) {
            return self.fail(
                TypeErrorKind::MissingContract,
                at,
                format!("recursive function `{name}` needs an explicit result type"),
            );
        }
        self.in_progress.insert(name.to_string());
        let r = self.signature_and_body(def).map(|(_, _, body)| body.ty);
        self.in_progress.remove(name);
        self.rets.insert(name.to_string(), r.clone().ok());
        r
    }

    fn signature_and_body(&mut self, f: &FunctionDef) -> R<(Vec<TypeParamDef>, Vec<(String, Type)>, TExpr)> {
        let tps = Self::type_params(f);
        let mut params = Vec::new();
        let mut ok = true;
        for p in &f.params {
            match self.resolve_type(&p.ty, &tps) {
                Ok(t) => params.push((p.name.clone(), t)),
                Err(()) => ok = false,
            }
        }
        if !ok {
            return Err(());
        }
        let mut scope = Scope { type_params: &tps, params: params.clone(), locals: vec![], next_local: 0, result: None };
        let body = self.expr(&f.body, &mut scope)?;
        Ok((tps.clone(), params, body))
    }

    fn function(&mut self, f: &FunctionDef) -> Option<TFunction> {
        let tps = Self::type_params(f);
        let mut dup = BTreeSet::new();
        for tp in &f.type_params {
            if !dup.insert(tp.name.clone()) {
                self.err(TypeErrorKind::TypeMismatch, tp.span, format!("duplicate type parameter `{}`", tp.name));
            }
        }
        let mut dup = BTreeSet::new();
        for p in &f.params {
            if !dup.insert(p.name.clone()) {
                self.err(TypeErrorKind::TypeMismatch, p.span, format!("duplicate parameter `{}`", p.name));
            }
        }
        let mut params = Vec::new();
        for p in &f.params {
            params.push((p.name.clone(), self.resolve_type(&p.ty, &tps).ok()?));
        }
        let declared = match &f.ret {
            Some(t) => Some(self.resolve_type(t, &tps).ok()?),
            None => None,
        };
        let mut scope = Scope { type_params: &tps, params: params.clone(), locals: vec![], next_local: 0, result: None };
        let pre = match &f.precondition {
            Some(p) => {
                let e = self.expr(p, &mut scope).ok()?;
                Some(self.expect_bool(e).ok()?)
            }
            None => None,
        };
        self.in_progress.insert(f.name.clone());
        let body = self.expr(&f.body, &mut scope);
        self.in_progress.remove(&f.name);
        let body = body.ok()?;
        let locals = scope.next_local;
        let (body, ret) = match declared {
            Some(t) => (self.coerce(body, &t).ok()?, t),
            None => {
                let t = body.ty.clone();
                (body, t)
            }
        };
        self.rets.insert(f.name.clone(), Some(ret.clone()));
        let post = match &f.postcondition {
            Some(pc) => {
                let mut scope = Scope {
                    type_params: &tps,
                    params: params.clone(),
                    locals: vec![],
                    next_local: 0,
                    result: Some((pc.binder.clone(), ret.clone())),
                };
                let e = self.expr(&pc.body, &mut scope).ok()?;
                let e = self.expect_bool(e).ok()?;
                if scope.next_local > 0 {
                    self.err(TypeErrorKind::Unsupported, pc.span, "local definitions are not allowed in postconditions".into());
                    return None;
                }
                Some(TPostcondition { binder: pc.binder.clone(), body: e })
            }
            None => None,
        };
        Some(TFunction {
            name: f.name.clone(),
            type_params: tps.clone(),
            params,
            ret,
            pre,
            body,
            post,
            opaque: f.opaque,
            unchecked: f.unchecked,
            span: f.span,
            locals,
        })
    }

    fn expect_bool(&mut self, e: TExpr) -> R<TExpr> {
        if e.ty == Type::Bool {
            Ok(e)
        } else {
            self.fail(TypeErrorKind::TypeMismatch, e.span, format!("expected Boolean, found {}", e.ty))
        }
    }

    fn expect_float(&mut self, e: TExpr, what: &str) -> R<TExpr> {
        if e.ty.is_float() {
            Ok(e)
        } else if e.ty.is_int() {
            self.coerce(e, &Type::F64)
        } else {
            self.fail(TypeErrorKind::TypeMismatch, e.span, format!("{what} expects a floating-point operand, found {}", e.ty))
        }
    }

    /// Implicit widening of `e` to `target`.
    fn coerce(&mut self, e: TExpr, target: &Type) -> R<TExpr> {
        if &e.ty == target {
            return Ok(e);
        }
        if let (Some(a), Some(b)) = (e.ty.numeric_rank(), target.numeric_rank()) {
            if a < b {
                return Ok(widen(e, target.clone()));
            }
        }
        if let (TExprKind::Tuple(_), Type::Tuple(ts)) = (&e.kind, target) {
            let span = e.span;
            let TExprKind::Tuple(items) = e.kind else { unreachable!() };
            if items.len() == ts.len() {
                let mut out = Vec::new();
                for (i, t) in items.into_iter().zip(ts) {
                    out.push(self.coerce(i, t)?);
                }
                return Ok(mk(target.clone(), span, TExprKind::Tuple(out)));
            }
            return self.fail(TypeErrorKind::TypeMismatch, span, format!("expected {target}, found a tuple of different arity"));
        }
        self.fail(TypeErrorKind::TypeMismatch, e.span, format!("expected {target}, found {}", e.ty))
    }

    fn numeric_pair(&mut self, l: TExpr, r: TExpr, op: &str, span: Span) -> R<(TExpr, TExpr, Type)> {
        let (Some(a), Some(b)) = (l.ty.numeric_rank(), r.ty.numeric_rank()) else {
            return self.fail(
                TypeErrorKind::TypeMismatch,
                span,
                format!("operator `{op}` is not defined for {} and {}", l.ty, r.ty),
            );
        };
        let mut t = if a >= b { l.ty.clone() } else { r.ty.clone() };
        if t.is_int() && t.numeric_rank() < Type::I32.numeric_rank() {
            t = Type::I32;
        }
        Ok((self.coerce(l, &t)?, self.coerce(r, &t)?, t))
    }

    fn lookup(&mut self, name: &str, span: Span, scope: &Scope) -> R<TExpr> {
        for (n, idx, t) in scope.locals.iter().rev() {
            if n == name {
                return Ok(mk(t.clone(), span, TExprKind::Var { name: name.into(), binding: Binding::Local(*idx) }));
            }
        }
        if let Some((b, t)) = &scope.result {
            if b == name {
                return Ok(mk(t.clone(), span, TExprKind::Var { name: name.into(), binding: Binding::Result }));
            }
        }
        for (i, (n, t)) in scope.params.iter().enumerate() {
            if n == name {
                return Ok(mk(t.clone(), span, TExprKind::Var { name: name.into(), binding: Binding::Param(i) }));
            }
        }
        self.fail(TypeErrorKind::UnknownIdentifier, span, format!("unknown identifier `{name}`"))
    }

    fn expr(&mut self, e: &Expr, scope: &mut Scope) -> R<TExpr> {
        let span = e.span;
        match &e.kind {
            ExprKind::Lit(l) => self.literal(l, span),
            ExprKind::Var(v) => self.lookup(v, span, scope),
            ExprKind::Constant { owner, name } => self.constant(owner, name, span),
            ExprKind::Block(stmts, tail) => self.block(stmts, tail, scope),
            ExprKind::If(c, t, f) => {
                let c = self.expr(c, scope);
                let t = self.expr(t, scope);
                let f = self.expr(f, scope);
                let (c, t, f) = (c?, t?, f?);
                let c = self.expect_bool(c)?;
                let (t, f, ty) = if t.ty == f.ty {
                    let ty = t.ty.clone();
                    (t, f, ty)
                } else if t.ty.is_numeric() && f.ty.is_numeric() {
                    let ty = if t.ty.numeric_rank() > f.ty.numeric_rank() { t.ty.clone() } else { f.ty.clone() };
                    (self.coerce(t, &ty)?, self.coerce(f, &ty)?, ty)
                } else {
                    return self.fail(
                        TypeErrorKind::TypeMismatch,
                        span,
                        format!("branches have incompatible types {} and {}", t.ty, f.ty),
                    );
                };
                Ok(mk(ty, span, TExprKind::If { cond: bx(c), then: bx(t), els: bx(f) }))
            }
            ExprKind::Neg(x) => {
                let x = self.expr(x, scope)?;
                if !x.ty.is_numeric() {
                    return self.fail(TypeErrorKind::TypeMismatch, span, format!("unary `-` is not defined for {}", x.ty));
                }
                let x = if x.ty.numeric_rank() < Type::I32.numeric_rank() { self.coerce(x, &Type::I32)? } else { x };
                Ok(mk(x.ty.clone(), span, TExprKind::Unary(UnOp::Neg, bx(x))))
            }
            ExprKind::Not(x) => {
                let x = self.expr(x, scope)?;
                let x = self.expect_bool(x)?;
                Ok(mk(Type::Bool, span, TExprKind::Unary(UnOp::Not, bx(x))))
            }
            ExprKind::Binary(op, l, r) => {
                let l = self.expr(l, scope);
                let r = self.expr(r, scope);
                self.binary(*op, l?, r?, span)
            }
            ExprKind::Member(recv, name) => {
                let recv = self.expr(recv, scope)?;
                self.member(recv, name, span)
            }
            ExprKind::Call { path, type_args, args } => {
                let mut targs = Vec::new();
                for t in type_args {
                    targs.push(self.resolve_type(t, scope.type_params)?);
                }
                let mut targs_ok = Vec::new();
                let mut failed = false;
                for a in args {
                    match self.expr(a, scope) {
                        Ok(x) => targs_ok.push(x),
                        Err(()) => failed = true,
                    }
                }
                if failed {
                    return Err(());
                }
                self.call(path, targs, targs_ok, span, scope)
            }
            ExprKind::Tuple(items) => {
                let mut out = Vec::new();
                for i in items {
                    out.push(self.expr(i, scope)?);
                }
                let ty = Type::Tuple(out.iter().map(|x| x.ty.clone()).collect());
                Ok(mk(ty, span, TExprKind::Tuple(out)))
            }
        }
    }

    fn literal(&mut self, l: &Literal, span: Span) -> R<TExpr> {
        match *l {
            Literal::Bool(b) => Ok(mk(Type::Bool, span, TExprKind::Const(Const::Bool(b)))),
            Literal::Float { bits, prec } => Ok(mk(Type::float(prec), span, TExprKind::Const(Const::Float { bits, prec }))),
            Literal::Int { value, long } => {
                let (lo, hi, w) = if long { (i64::MIN as i128, i64::MAX as i128, 64) } else { (i32::MIN as i128, i32::MAX as i128, 32) };
                if value < lo || value > hi {
                    return self.fail(
                        TypeErrorKind::TypeMismatch,
                        span,
                        format!("integer literal {value} does not fit in {}", if long { "Long" } else { "Int" }),
                    );
                }
                Ok(mk(Type::int(w), span, TExprKind::Const(Const::Int { value: value as i64, width: w })))
            }
        }
    }

    fn constant(&mut self, owner: &str, name: &str, span: Span) -> R<TExpr> {
        let fc = |x: f64, p: Precision| {
            let bits = match p {
                Precision::F64 => x.to_bits(),
                Precision::F32 => (x as f32).to_bits() as u64,
            };
            Some(mk(Type::float(p), span, TExprKind::Const(Const::Float { bits, prec: p })))
        };
        let ic = |v: i64, w: u32| Some(mk(Type::int(w), span, TExprKind::Const(Const::Int { value: v, width: w })));
        let out = match (owner, name) {
            ("Double", "NaN") => fc(f64::NAN, Precision::F64),
            ("Double", "PositiveInfinity") => fc(f64::INFINITY, Precision::F64),
            ("Double", "NegativeInfinity") => fc(f64::NEG_INFINITY, Precision::F64),
            ("Double", "MaxValue") => fc(f64::MAX, Precision::F64),
            ("Double", "MinValue") => fc(f64::MIN, Precision::F64),
            ("Double", "MinPositiveValue") => fc(f64::from_bits(1), Precision::F64),
            ("Float", "NaN") => fc(f64::NAN, Precision::F32),
            ("Float", "PositiveInfinity") => fc(f64::INFINITY, Precision::F32),
            ("Float", "NegativeInfinity") => fc(f64::NEG_INFINITY, Precision::F32),
            ("Float", "MaxValue") => fc(f32::MAX as f64, Precision::F32),
            ("Float", "MinValue") => fc(f32::MIN as f64, Precision::F32),
            ("Float", "MinPositiveValue") => Some(mk(
                Type::F32,
                span,
                TExprKind::Const(Const::Float { bits: 1, prec: Precision::F32 }),
            )),
            ("Int", "MaxValue") => ic(i32::MAX as i64, 32),
            ("Int", "MinValue") => ic(i32::MIN as i64, 32),
            ("Long", "MaxValue") => ic(i64::MAX, 64),
            ("Long", "MinValue") => ic(i64::MIN, 64),
            ("Short", "MaxValue") => ic(i16::MAX as i64, 16),
            ("Short", "MinValue") => ic(i16::MIN as i64, 16),
            ("Byte", "MaxValue") => ic(i8::MAX as i64, 8),
            ("Byte", "MinValue") => ic(i8::MIN as i64, 8),
            ("math" | "Math", "Pi" | "PI") => fc(std::f64::consts::PI, Precision::F64),
            ("math" | "Math", "E") => fc(std::f64::consts::E, Precision::F64),
            _ => None,
        };
        match out {
            Some(e) => Ok(e),
            None => self.fail(TypeErrorKind::UnknownIdentifier, span, format!("unknown constant `{owner}.{name}`")),
        }
    }

    fn block(&mut self, stmts: &[Stmt], tail: &Expr, scope: &mut Scope) -> R<TExpr> {
        let mark = scope.locals.len();
        let mut frames: Vec<(Option<(usize, String)>, TExpr, Span)> = Vec::new();
        let mut failed = false;
        for s in stmts {
            match s {
                Stmt::Val { name, ty, value, span } => {
                    let v = self.expr(value, scope).and_then(|v| match ty {
                        Some(t) => {
                            let t = self.resolve_type(t, scope.type_params)?;
                            self.coerce(v, &t)
                        }
                        None => Ok(v),
                    });
                    let idx = scope.next_local;
                    scope.next_local += 1;
                    match v {
                        Ok(v) => {
                            scope.locals.push((name.clone(), idx, v.ty.clone()));
                            frames.push((Some((idx, name.clone())), v, *span));
                        }
                        Err(()) => {
                            failed = true;
                            // keep the name bound so later uses do not cascade
                            scope.locals.push((name.clone(), idx, Type::Bool));
                        }
                    }
                }
                Stmt::Assert(c, span) => match self.expr(c, scope).and_then(|c| self.expect_bool(c)) {
                    Ok(c) => frames.push((None, c, *span)),
                    Err(()) => failed = true,
                },
            }
        }
        let tail = self.expr(tail, scope);
        scope.locals.truncate(mark);
        if failed {
            return Err(());
        }
        let mut acc = tail?;
        for (binder, value, span) in frames.into_iter().rev() {
            let ty = acc.ty.clone();
            let span = span.to(acc.span);
            acc = match binder {
                Some((local, name)) => mk(ty, span, TExprKind::Let { local, name, value: bx(value), body: bx(acc) }),
                None => mk(ty, span, TExprKind::Assert { cond: bx(value), body: bx(acc) }),
            };
        }
        Ok(acc)
    }

    fn binary(&mut self, op: SurfaceBinOp, l: TExpr, r: TExpr, span: Span) -> R<TExpr> {
        use SurfaceBinOp as S;
        let bop = match op {
            S::Add => BinOp::Add,
            S::Sub => BinOp::Sub,
            S::Mul => BinOp::Mul,
            S::Div => BinOp::Div,
            S::Rem => BinOp::Rem,
            S::Lt => BinOp::Lt,
            S::Le => BinOp::Le,
            S::Gt => BinOp::Gt,
            S::Ge => BinOp::Ge,
            S::Eq => BinOp::Eq,
            S::Ne => BinOp::Ne,
            S::And => BinOp::And,
            S::Or => BinOp::Or,
        };
        match op {
            S::And | S::Or => {
                let l = self.expect_bool(l)?;
                let r = self.expect_bool(r)?;
                Ok(mk(Type::Bool, span, TExprKind::Binary(bop, bx(l), bx(r))))
            }
            S::Add | S::Sub | S::Mul | S::Div | S::Rem => {
                let (l, r, t) = self.numeric_pair(l, r, op.symbol(), span)?;
                if op == S::Rem && t.is_float() {
                    self.errors.push(TypeError {
                        kind: TypeErrorKind::FpModuloUnsupported,
                        span,
                        message: "floating-point `%` is not supported".into(),
                        hint: Some(MODULO_HINT.into()),
                    });
                    return Err(());
                }
                Ok(mk(t, span, TExprKind::Binary(bop, bx(l), bx(r))))
            }
            S::Lt | S::Le | S::Gt | S::Ge => {
                let (l, r, _) = self.numeric_pair(l, r, op.symbol(), span)?;
                Ok(mk(Type::Bool, span, TExprKind::Binary(bop, bx(l), bx(r))))
            }
            S::Eq | S::Ne => {
                if l.ty.is_numeric() && r.ty.is_numeric() {
                    let (l, r, _) = self.numeric_pair(l, r, op.symbol(), span)?;
                    return Ok(mk(Type::Bool, span, TExprKind::Binary(bop, bx(l), bx(r))));
                }
                if l.ty != r.ty {
                    return self.fail(TypeErrorKind::TypeMismatch, span, format!("cannot compare {} with {}", l.ty, r.ty));
                }
                if matches!(l.ty, Type::Tuple(_)) {
                    return self.fail(TypeErrorKind::Unsupported, span, "equality on tuples is not supported".into());
                }
                let bop = match (&l.ty, bop) {
                    (Type::Var { noeq: true, .. }, BinOp::Eq) => BinOp::NoeqEq,
                    (Type::Var { noeq: true, .. }, _) => BinOp::NoeqNe,
                    _ => bop,
                };
                Ok(mk(Type::Bool, span, TExprKind::Binary(bop, bx(l), bx(r))))
            }
        }
    }

    fn member(&mut self, recv: TExpr, name: &str, span: Span) -> R<TExpr> {
        let pred = |op: UnOp, recv: TExpr| mk(Type::Bool, span, TExprKind::Unary(op, bx(recv)));
        match name {
            "isNaN" | "isFinite" | "isInfinite" | "isInfinity" | "isPositiveSign" => {
                if !recv.ty.is_float() {
                    return self.fail(TypeErrorKind::TypeMismatch, span, format!("`{name}` requires a floating-point receiver, found {}", recv.ty));
                }
                let op = match name {
                    "isNaN" => UnOp::IsNaN,
                    "isFinite" => UnOp::IsFinite,
                    "isPositiveSign" => UnOp::IsPositiveSign,
                    _ => UnOp::IsInfinite,
                };
                Ok(pred(op, recv))
            }
            "toBits" | "toRawBits" => match recv.ty.prec() {
                Some(p) => {
                    let t = if p == Precision::F64 { Type::I64 } else { Type::I32 };
                    Ok(mk(t, span, TExprKind::Unary(UnOp::ToBits, bx(recv))))
                }
                None => self.fail(TypeErrorKind::TypeMismatch, span, format!("`toBits` requires a floating-point receiver, found {}", recv.ty)),
            },
            "toInt" | "toLong" | "toShort" | "toByte" | "toFloat" | "toDouble" => {
                if !recv.ty.is_numeric() {
                    return self.fail(TypeErrorKind::TypeMismatch, span, format!("`{name}` requires a numeric receiver, found {}", recv.ty));
                }
                let target = match name {
                    "toInt" => Type::I32,
                    "toLong" => Type::I64,
                    "toShort" => Type::I16,
                    "toByte" => Type::I8,
                    "toFloat" => Type::F32,
                    _ => Type::F64,
                };
                if recv.ty == target {
                    return Ok(recv);
                }
                Ok(mk(target, span, TExprKind::Cast(bx(recv))))
            }
            _ if name.starts_with('_') => {
                let idx: usize = name[1..].parse().unwrap_or(0);
                match &recv.ty {
                    Type::Tuple(ts) if idx >= 1 && idx <= ts.len() => {
                        let t = ts[idx - 1].clone();
                        Ok(mk(t, span, TExprKind::Proj(bx(recv), idx - 1)))
                    }
                    t => {
                        let t = t.clone();
                        self.fail(TypeErrorKind::TypeMismatch, span, format!("no member `{name}` on {t}"))
                    }
                }
            }
            _ => {
                let t = recv.ty.clone();
                self.fail(TypeErrorKind::UnknownIdentifier, span, format!("unknown member `{name}` on {t}"))
            }
        }
    }

    fn call(&mut self, path: &[String], targs: Vec<Type>, args: Vec<TExpr>, span: Span, scope: &mut Scope) -> R<TExpr> {
        let (qualifier, name) = match path {
            [n] => (None, n.as_str()),
            [q, n] => (Some(q.as_str()), n.as_str()),
            _ => return self.fail(TypeErrorKind::UnknownIdentifier, span, format!("unknown function `{}`", path.join("."))),
        };
        match qualifier {
            None if self.defs.contains_key(name) => return self.user_call(name, targs, args, span, scope),
            None | Some("math") | Some("Math") => {}
            Some(owner @ ("Double" | "Float")) if name == "fromBits" => {
                let (prec, int_ty) = if owner == "Double" { (Precision::F64, Type::I64) } else { (Precision::F32, Type::I32) };
                let [a] = self.arity::<1>(args, name, span)?;
                let a = self.coerce(a, &int_ty)?;
                return Ok(mk(Type::float(prec), span, TExprKind::Unary(UnOp::FromBits, bx(a))));
            }
            Some(q) => {
                return self.fail(TypeErrorKind::UnknownIdentifier, span, format!("unknown function `{q}.{name}`"));
            }
        }
        if !targs.is_empty() {
            return self.fail(TypeErrorKind::TypeMismatch, span, format!("`{name}` takes no type arguments"));
        }
        match name {
            "abs" => {
                let [a] = self.arity::<1>(args, name, span)?;
                if !a.ty.is_numeric() {
                    return self.fail(TypeErrorKind::TypeMismatch, span, format!("`abs` requires a numeric argument, found {}", a.ty));
                }
                let a = if a.ty.is_int() && a.ty.numeric_rank() < Type::I32.numeric_rank() { self.coerce(a, &Type::I32)? } else { a };
                Ok(mk(a.ty.clone(), span, TExprKind::Unary(UnOp::Abs, bx(a))))
            }
            "sqrt" | "ceil" | "floor" | "rint" => {
                let [a] = self.arity::<1>(args, name, span)?;
                let a = self.expect_float(a, name)?;
                let op = match name {
                    "sqrt" => UnOp::Sqrt,
                    "ceil" => UnOp::Ceil,
                    "floor" => UnOp::Floor,
                    _ => UnOp::Rint,
                };
                Ok(mk(a.ty.clone(), span, TExprKind::Unary(op, bx(a))))
            }
            "min" | "max" => {
                let [a, b] = self.arity::<2>(args, name, span)?;
                let (a, b, t) = self.numeric_pair(a, b, name, span)?;
                let op = if name == "min" { BinOp::Min } else { BinOp::Max };
                Ok(mk(t, span, TExprKind::Binary(op, bx(a), bx(b))))
            }
            _ => match MathFn::from_name(name) {
                Some(mf) => {
                    if args.len() != mf.arity() {
                        return self.fail(
                            TypeErrorKind::TypeMismatch,
                            span,
                            format!("`{name}` expects {} argument(s), found {}", mf.arity(), args.len()),
                        );
                    }
                    for a in &args {
                        if !a.ty.is_numeric() {
                            let t = a.ty.clone();
                            return self.fail(TypeErrorKind::TypeMismatch, a.span, format!("`{name}` expects a numeric argument, found {t}"));
                        }
                    }
                    let t = if args.iter().all(|a| a.ty == Type::F32) { Type::F32 } else { Type::F64 };
                    let mut out = Vec::new();
                    for a in args {
                        out.push(self.coerce(a, &t)?);
                    }
                    Ok(mk(t, span, TExprKind::Math { func: mf, args: out }))
                }
                None => self.fail(TypeErrorKind::UnknownIdentifier, span, format!("unknown function `{name}`")),
            },
        }
    }

    fn arity<const N: usize>(&mut self, args: Vec<TExpr>, name: &str, span: Span) -> R<[TExpr; N]> {
        let n = args.len();
        match <[TExpr; N]>::try_from(args) {
            Ok(a) => Ok(a),
            Err(_) => self.fail(TypeErrorKind::TypeMismatch, span, format!("`{name}` expects {N} argument(s), found {n}")),
        }
    }

    fn user_call(&mut self, name: &str, targs: Vec<Type>, args: Vec<TExpr>, span: Span, scope: &mut Scope) -> R<TExpr> {
        let def = self.defs[name];
        let tps = Self::type_params(def);
        let mut ptys = Vec::new();
        for p in &def.params {
            ptys.push(self.resolve_type(&p.ty, &tps)?);
        }
        if ptys.len() != args.len() {
            return self.fail(
                TypeErrorKind::TypeMismatch,
                span,
                format!("`{name}` expects {} argument(s), found {}", ptys.len(), args.len()),
            );
        }
        let mut map: HashMap<String, Type> = HashMap::new();
        if !targs.is_empty() {
            if targs.len() != tps.len() {
                return self.fail(
                    TypeErrorKind::TypeMismatch,
                    span,
                    format!("`{name}` expects {} type argument(s), found {}", tps.len(), targs.len()),
                );
            }
            for (tp, t) in tps.iter().zip(&targs) {
                map.insert(tp.name.clone(), t.clone());
            }
        } else {
            for (p, a) in ptys.iter().zip(&args) {
                unify(p, &a.ty, &mut map);
            }
        }
        let mut type_args = Vec::new();
        for tp in &tps {
            let Some(t) = map.get(&tp.name).cloned() else {
                return self.fail(TypeErrorKind::TypeMismatch, span, format!("cannot infer type argument `{}` of `{name}`", tp.name));
            };
            if matches!(t, Type::Tuple(_)) {
                return self.fail(TypeErrorKind::Unsupported, span, "tuple type arguments are not supported".into());
            }
            if !tp.noeq {
                let float_like = t.is_float() || matches!(&t, Type::Var { noeq: true, .. });
                if float_like {
                    self.errors.push(TypeError {
                        kind: TypeErrorKind::NoeqViolation,
                        span,
                        message: format!(
                            "type parameter `{}` of `{name}` cannot be instantiated with {t}: its equality is not reflexive",
                            tp.name
                        ),
                        hint: Some(format!("declare it as `@noeq {}`", tp.name)),
                    });
                    return Err(());
                }
            }
            type_args.push(t);
        }
        let mut out = Vec::new();
        for (p, a) in ptys.iter().zip(args) {
            out.push(self.coerce(a, &p.subst(&map))?);
        }
        let _ = scope;
        let ret = self.ret_type(name, span)?.subst(&map);
        Ok(mk(ret, span, TExprKind::Call { func: name.to_string(), type_args, args: out }))
    }
}

fn unify(param: &Type, arg: &Type, map: &mut HashMap<String, Type>) {
    match (param, arg) {
        (Type::Var { name, .. }, a) => {
            map.entry(name.clone()).or_insert_with(|| a.clone());
        }
        (Type::Tuple(ps), Type::Tuple(as_)) if ps.len() == as_.len() => {
            for (p, a) in ps.iter().zip(as_) {
                unify(p, a, map);
            }
        }
        _ => {}
    }
}

/// Widening conversion, folding constants in place.
fn widen(e: TExpr, target: Type) -> TExpr {
    if let TExprKind::Const(Const::Int { value, .. }) = e.kind {
        let c = match &target {
            Type::F64 => Some(Const::Float { bits: (value as f64).to_bits(), prec: Precision::F64 }),
            Type::F32 => Some(Const::Float { bits: (value as f32).to_bits() as u64, prec: Precision::F32 }),
            t => t.int_width().map(|w| Const::Int { value, width: w }),
        };
        if let Some(c) = c {
            return mk(target, e.span, TExprKind::Const(c));
        }
    }
    if let TExprKind::Const(Const::Float { bits, prec: Precision::F32 }) = e.kind {
        if target == Type::F64 {
            let x = f32::from_bits(bits as u32) as f64;
            return mk(target, e.span, TExprKind::Const(Const::Float { bits: x.to_bits(), prec: Precision::F64 }));
        }
    }
    let span = e.span;
    mk(target, span, TExprKind::Cast(bx(e)))
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn check(src: &str) -> Result<TypedProgram, Vec<TypeError>> {
        typecheck(&parse(src).unwrap())
    }

    #[test]
    fn modulo_rejected_with_hint() {
        let errs = check("def f() = 14.5 % 1.5").unwrap_err();
        assert_eq!(errs[0].kind, TypeErrorKind::FpModuloUnsupported);
        assert!(errs[0].hint.as_deref().unwrap().contains("x - n * floor(x / n)"));
        assert!(check("def f(a: Int) = a % 3").is_ok());
    }

    #[test]
    fn noeq_rule() {
        let pick = "def pick[T](a: T, b: T): T = if (a == b) a else b\n";
        let errs = check(&format!("{pick}def g(x: Double) = pick(x, 1.0)")).unwrap_err();
        assert_eq!(errs[0].kind, TypeErrorKind::NoeqViolation);
        let pick_noeq = "def pick[@noeq T](a: T, b: T): T = if (a == b) a else b\n";
        assert!(check(&format!("{pick_noeq}def g(x: Double) = pick(x, 1.0)")).is_ok());
        assert!(check(&format!("{pick}def g(x: Int) = pick[Int](x, 1)")).is_ok());
    }

    #[test]
    fn widening_and_literals() {
        let p = check("def f(moves: Int, errors: Int): Float = 100 * (moves - errors) / moves.toFloat").unwrap();
        assert_eq!(p.functions[0].ret, Type::F32);
        assert!(check("def f() = 2147483648").is_err());
        assert!(check("def f() = -2147483648").is_ok());
        let p = check("def f(x: Double) = x < 0").unwrap();
        let TExprKind::Binary(_, _, r) = &p.functions[0].body.kind else { panic!() };
        assert!(matches!(r.kind, TExprKind::Const(Const::Float { .. })));
    }

    #[test]
    fn unknown_identifier_has_span() {
        let errs = check("def f(x: Double) =\n  y + x").unwrap_err();
        assert_eq!(errs[0].kind, TypeErrorKind::UnknownIdentifier);
        assert_eq!((errs[0].span.line, errs[0].span.col), (2, 3));
    }

    #[test]
    fn recursion_requires_contract() {
        let errs = check("def f(n: Int): Int = if (n <= 0) 0 else f(n - 1)").unwrap_err();
        assert_eq!(errs[0].kind, TypeErrorKind::MissingContract);
        assert!(check("def f(n: Int): Int = (if (n <= 0) 0 else f(n - 1)).ensuring(r => r == 0)").is_ok());
    }

    #[test]
    fn node_ids_are_preorder() {
        let p = check("def f(x: Double) = { val y = x + 1.0; y * 2.0 }").unwrap();
        let mut ids = vec![];
        p.walk(&mut |_, e| ids.push(e.id));
        assert_eq!(ids, (0..ids.len() as u32).collect::<Vec<_>>());
    }

    #[test]
    fn deterministic_diagnostics() {
        let src = "def f(x: Double) = x % 2.0\ndef g() = z\ndef h(b: Boolean) = b + 1";
        assert_eq!(check(src).unwrap_err(), check(src).unwrap_err());
        assert_eq!(check(src).unwrap_err().len(), 3);
    }

    #[test]
    fn math_precision_follows_arguments() {
        let p = check("def f(x: Float) = math.sin(x)\ndef g(x: Float) = math.pow(x, 2.0)").unwrap();
        assert_eq!(p.functions[0].ret, Type::F32);
        assert_eq!(p.functions[1].ret, Type::F64);
    }
}
