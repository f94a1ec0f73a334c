//! Concrete big-step interpreter with JVM numeric semantics, used to replay
//! solver models.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::float::{decimal_f32, decimal_f64, hex_f32, hex_f64, jvm_max_f32, jvm_max_f64, jvm_min_f32, jvm_min_f64, parse_hex_float, Precision};
use crate::frontend::{BinOp, Binding, Const, NodeId, Span, TExpr, TExprKind, TFunction, Type, TypedProgram, UnOp};
use crate::mathspec::host::host_eval;
use crate::portfolio::{Model, ModelValue};
use crate::vcgen::{VcKind, VerificationCondition};

pub const DEFAULT_DEPTH_LIMIT: usize = 1_000_000;

const RED_ZONE: usize = 128 * 1024;
const STACK_CHUNK: usize = 4 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", content = "value")]
pub enum Value {
    F32(f32),
    F64(f64),
    Int { value: i64, width: u32 },
    Bool(bool),
    Tuple(Vec<Value>),
    /// An element of an uninterpreted sort.
    Abstract(String),
}

impl Value {
    pub fn int(value: i64) -> Value {
        Value::Int { value: value as i32 as i64, width: 32 }
    }

    pub fn long(value: i64) -> Value {
        Value::Int { value, width: 64 }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::F64(x) => Some(*x),
            Value::F32(x) => Some(*x as f64),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Value::Int { value, .. } => Some(*value),
            _ => None,
        }
    }

    /// Bitwise identity, with every NaN identified.
    pub fn same(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::F32(a), Value::F32(b)) => (a.is_nan() && b.is_nan()) || a.to_bits() == b.to_bits(),
            (Value::F64(a), Value::F64(b)) => (a.is_nan() && b.is_nan()) || a.to_bits() == b.to_bits(),
            (Value::Tuple(a), Value::Tuple(b)) => a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.same(y)),
            (a, b) => a == b,
        }
    }

    pub fn hex(&self) -> String {
        match self {
            Value::F32(x) => hex_f32(*x),
            Value::F64(x) => hex_f64(*x),
            Value::Tuple(vs) => format!("({})", vs.iter().map(Value::hex).collect::<Vec<_>>().join(", ")),
            other => other.to_string(),
        }
    }

    fn from_const(c: Const) -> Value {
        match c {
            Const::Float { bits, prec: Precision::F32 } => Value::F32(f32::from_bits(bits as u32)),
            Const::Float { bits, prec: Precision::F64 } => Value::F64(f64::from_bits(bits)),
            Const::Int { value, width } => Value::Int { value, width },
            Const::Bool(b) => Value::Bool(b),
        }
    }

    /// Whether the value inhabits `ty`; type variables accept anything.
    pub fn has_type(&self, ty: &Type) -> bool {
        match (self, ty) {
            (_, Type::Var { .. }) => true,
            (Value::F32(_), Type::F32) | (Value::F64(_), Type::F64) | (Value::Bool(_), Type::Bool) => true,
            (Value::Int { width, .. }, t) => t.int_width() == Some(*width),
            (Value::Tuple(vs), Type::Tuple(ts)) => vs.len() == ts.len() && vs.iter().zip(ts).all(|(v, t)| v.has_type(t)),
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::F32(x) => f.write_str(&decimal_f32(*x)),
            Value::F64(x) => f.write_str(&decimal_f64(*x)),
            Value::Int { value, .. } => write!(f, "{value}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Tuple(vs) => {
                f.write_str("(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")
            }
            Value::Abstract(t) => f.write_str(t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Clause {
    Precondition,
    Postcondition,
    Assert,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Clause::Precondition => "precondition",
            Clause::Postcondition => "postcondition",
            Clause::Assert => "assertion",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeFailure {
    #[error("{span}: integer division by zero")]
    DivisionByZero { span: Span },
    #[error("{span}: {clause} of `{function}` violated")]
    ContractViolation { function: String, clause: Clause, span: Span },
    #[error("recursion depth limit {0} exceeded")]
    DepthExceeded(usize),
    #[error("{span}: `{what}` has no concrete semantics")]
    Opaque { span: Span, what: String },
    #[error("no function `{0}`")]
    UnknownFunction(String),
    #[error("`{function}` expects {expected} arguments, got {got}")]
    Arity { function: String, expected: usize, got: usize },
    #[error("argument {index} of `{function}` is not a {expected}")]
    ArgumentType { function: String, index: usize, expected: String },
    #[error("{span}: ill-typed evaluation: {what}")]
    Internal { span: Span, what: String },
}

/// Evaluation settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_depth: DEFAULT_DEPTH_LIMIT }
    }
}

/// An obligation outcome seen while running the function under inspection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub kind: VcKind,
    pub node: NodeId,
    pub holds: bool,
}

struct Frame {
    params: Vec<Value>,
    locals: HashMap<usize, Value>,
    result: Option<Value>,
    depth: usize,
}

struct Interp<'a> {
    prog: &'a TypedProgram,
    limits: Limits,
    /// Record events at depth 0 and keep going past failed assertions.
    observe: bool,
    events: Vec<Event>,
}

type R<T> = Result<T, RuntimeFailure>;

fn internal(e: &TExpr, what: impl Into<String>) -> RuntimeFailure {
    RuntimeFailure::Internal { span: e.span, what: what.into() }
}

fn float_bits(v: &Value) -> Option<(u64, Precision)> {
    match v {
        Value::F32(x) => Some((x.to_bits() as u64, Precision::F32)),
        Value::F64(x) => Some((x.to_bits(), Precision::F64)),
        _ => None,
    }
}

fn from_bits(bits: u64, prec: Precision) -> Value {
    match prec {
        Precision::F32 => Value::F32(f32::from_bits(bits as u32)),
        Precision::F64 => Value::F64(f64::from_bits(bits)),
    }
}

fn is_nan(v: &Value) -> bool {
    match v {
        Value::F32(x) => x.is_nan(),
        Value::F64(x) => x.is_nan(),
        _ => false,
    }
}

fn wrap(value: i64, width: u32) -> Value {
    let v = match width {
        8 => value as i8 as i64,
        16 => value as i16 as i64,
        32 => value as i32 as i64,
        _ => value,
    };
    Value::Int { value: v, width }
}

/// JVM float-to-integer conversion.
pub fn float_to_int(x: f64, width: u32) -> i64 {
    match width {
        8 => x as i32 as i8 as i64,
        16 => x as i32 as i16 as i64,
        32 => x as i32 as i64,
        _ => x as i64,
    }
}

fn float_to_int32(x: f32, width: u32) -> i64 {
    match width {
        8 => x as i32 as i8 as i64,
        16 => x as i32 as i16 as i64,
        32 => x as i32 as i64,
        _ => x as i64,
    }
}

/// Whether truncating `x` fits a signed integer of `width` bits (NaN passes).
fn cast_in_range(x: f64, width: u32) -> bool {
    if x.is_nan() {
        return true;
    }
    let t = x.trunc();
    let bound = 2f64.powi(width as i32 - 1);
    -bound <= t && t < bound
}

/// Casts `v` to `to` with JVM rules.
pub fn cast(v: &Value, to: &Type) -> Option<Value> {
    Some(match (v, to) {
        (Value::F64(x), Type::F64) => Value::F64(*x),
        (Value::F64(x), Type::F32) => Value::F32(*x as f32),
        (Value::F32(x), Type::F64) => Value::F64(*x as f64),
        (Value::F32(x), Type::F32) => Value::F32(*x),
        (Value::Int { value, .. }, Type::F64) => Value::F64(*value as f64),
        (Value::Int { value, .. }, Type::F32) => Value::F32(*value as f32),
        (Value::F64(x), t) => Value::Int { value: float_to_int(*x, t.int_width()?), width: t.int_width()? },
        (Value::F32(x), t) => Value::Int { value: float_to_int32(*x, t.int_width()?), width: t.int_width()? },
        (Value::Int { value, .. }, t) => wrap(*value, t.int_width()?),
        _ => return None,
    })
}

fn round_ties_even(x: f64) -> f64 {
    x.round_ties_even()
}

impl<'a> Interp<'a> {
    fn call(&mut self, f: &TFunction, args: Vec<Value>, depth: usize, span: Span) -> R<Value> {
        if depth >= self.limits.max_depth {
            return Err(RuntimeFailure::DepthExceeded(self.limits.max_depth));
        }
        let check = !self.observe || depth > 0;
        let mut fr = Frame { params: args, locals: HashMap::new(), result: None, depth };
        if check && depth > 0 {
            if let Some(p) = &f.pre {
                if !self.truth(p, &mut fr)? {
                    return Err(RuntimeFailure::ContractViolation { function: f.name.clone(), clause: Clause::Precondition, span });
                }
            }
        }
        let v = self.expr(&f.body, &mut fr)?;
        if check && depth > 0 {
            if let Some(p) = &f.post {
                fr.result = Some(v.clone());
                fr.locals.clear();
                if !self.truth(&p.body, &mut fr)? {
                    return Err(RuntimeFailure::ContractViolation {
                        function: f.name.clone(),
                        clause: Clause::Postcondition,
                        span: p.body.span,
                    });
                }
            }
        }
        Ok(v)
    }

    fn truth(&mut self, e: &TExpr, fr: &mut Frame) -> R<bool> {
        self.expr(e, fr)?.as_bool().ok_or_else(|| internal(e, "condition is not Boolean"))
    }

    fn event(&mut self, fr: &Frame, kind: VcKind, e: &TExpr, holds: bool) {
        if self.observe && fr.depth == 0 {
            self.events.push(Event { kind, node: e.id, holds });
        }
    }

    fn expr(&mut self, e: &TExpr, fr: &mut Frame) -> R<Value> {
        stacker::maybe_grow(RED_ZONE, STACK_CHUNK, || self.expr_inner(e, fr))
    }

    fn expr_inner(&mut self, e: &TExpr, fr: &mut Frame) -> R<Value> {
        use TExprKind as K;
        Ok(match &e.kind {
            K::Const(c) => Value::from_const(*c),
            K::Var { binding, name } => match binding {
                Binding::Param(i) => fr.params.get(*i).cloned(),
                Binding::Local(l) => fr.locals.get(l).cloned(),
                Binding::Result => fr.result.clone(),
                Binding::ResultLeaf(k) => match &fr.result {
                    Some(Value::Tuple(vs)) => flatten_value(&Value::Tuple(vs.clone())).get(*k).cloned(),
                    Some(v) if *k == 0 => Some(v.clone()),
                    _ => None,
                },
            }
            .ok_or_else(|| internal(e, format!("unbound variable `{name}`")))?,
            K::Let { local, value, body, .. } => {
                let v = self.expr(value, fr)?;
                let prev = fr.locals.insert(*local, v);
                let out = self.expr(body, fr);
                match prev {
                    Some(p) => fr.locals.insert(*local, p),
                    None => fr.locals.remove(local),
                };
                out?
            }
            K::Assert { cond, body } => {
                let c = self.truth(cond, fr)?;
                self.event(fr, VcKind::UserAssert, e, c);
                if !c && !(self.observe && fr.depth == 0) {
                    return Err(RuntimeFailure::ContractViolation {
                        function: String::new(),
                        clause: Clause::Assert,
                        span: cond.span,
                    });
                }
                self.expr(body, fr)?
            }
            K::If { cond, then, els } => {
                if self.truth(cond, fr)? {
                    self.expr(then, fr)?
                } else {
                    self.expr(els, fr)?
                }
            }
            K::Unary(op, x) => {
                let v = self.expr(x, fr)?;
                self.unary(e, *op, v)?
            }
            K::Binary(op, l, r) => self.binary(e, *op, l, r, fr)?,
            K::Cast(x) => {
                let v = self.expr(x, fr)?;
                if let (Some(xv), Some(w)) = (v.as_f64(), e.ty.int_width()) {
                    self.event(fr, VcKind::CastNaN, e, !xv.is_nan());
                    self.event(fr, VcKind::CastRange, e, cast_in_range(xv, w));
                }
                cast(&v, &e.ty).ok_or_else(|| internal(e, format!("cast of {v} to {}", e.ty)))?
            }
            K::Math { func, args } => {
                let prec = e.ty.prec().ok_or_else(|| internal(e, "math call on a non-float type"))?;
                let mut bits = vec![];
                for a in args {
                    let v = self.expr(a, fr)?;
                    let v = cast(&v, &e.ty).ok_or_else(|| internal(e, "math argument"))?;
                    bits.push(float_bits(&v).map(|b| b.0).ok_or_else(|| internal(e, "math argument"))?);
                }
                from_bits(host_eval(*func, prec, &bits), prec)
            }
            K::Call { func, args, .. } | K::CallLeaf { func, args, .. } => {
                let callee = self.prog.function(func).ok_or_else(|| RuntimeFailure::UnknownFunction(func.clone()))?;
                let mut av = vec![];
                for a in args {
                    av.push(self.expr(a, fr)?);
                }
                if let K::CallLeaf { .. } = &e.kind {
                    return Err(internal(e, "flattened call"));
                }
                if self.observe && fr.depth == 0 {
                    if let Some(p) = &callee.pre {
                        let mut cf = Frame { params: av.clone(), locals: HashMap::new(), result: None, depth: 1 };
                        let holds = self.truth(p, &mut cf)?;
                        self.event(fr, VcKind::CallPrecondition, e, holds);
                    }
                }
                self.call(callee, av, fr.depth + 1, e.span)?
            }
            K::Tuple(xs) => {
                let mut vs = vec![];
                for x in xs {
                    vs.push(self.expr(x, fr)?);
                }
                Value::Tuple(vs)
            }
            K::Proj(x, i) => match self.expr(x, fr)? {
                Value::Tuple(mut vs) if *i < vs.len() => vs.swap_remove(*i),
                _ => return Err(internal(e, "projection of a non-tuple")),
            },
        })
    }

    fn unary(&mut self, e: &TExpr, op: UnOp, v: Value) -> R<Value> {
        let bad = || internal(e, format!("{op:?} on {v}"));
        Ok(match (op, &v) {
            (UnOp::Not, Value::Bool(b)) => Value::Bool(!b),
            (UnOp::Neg, Value::F32(x)) => Value::F32(-x),
            (UnOp::Neg, Value::F64(x)) => Value::F64(-x),
            (UnOp::Neg, Value::Int { value, width }) => wrap(value.wrapping_neg(), *width),
            (UnOp::Abs, Value::F32(x)) => Value::F32(x.abs()),
            (UnOp::Abs, Value::F64(x)) => Value::F64(x.abs()),
            (UnOp::Abs, Value::Int { value, width }) => wrap(value.wrapping_abs(), *width),
            (UnOp::Sqrt, Value::F32(x)) => Value::F32(x.sqrt()),
            (UnOp::Sqrt, Value::F64(x)) => Value::F64(x.sqrt()),
            (UnOp::Ceil, Value::F32(x)) => Value::F32(x.ceil()),
            (UnOp::Ceil, Value::F64(x)) => Value::F64(x.ceil()),
            (UnOp::Floor, Value::F32(x)) => Value::F32(x.floor()),
            (UnOp::Floor, Value::F64(x)) => Value::F64(x.floor()),
            (UnOp::Rint, Value::F32(x)) => Value::F32(x.round_ties_even()),
            (UnOp::Rint, Value::F64(x)) => Value::F64(round_ties_even(*x)),
            (UnOp::IsNaN, _) if v.as_f64().is_some() => Value::Bool(is_nan(&v)),
            (UnOp::IsInfinite, _) if v.as_f64().is_some() => Value::Bool(v.as_f64().is_some_and(f64::is_infinite)),
            (UnOp::IsFinite, _) if v.as_f64().is_some() => Value::Bool(v.as_f64().is_some_and(f64::is_finite)),
            (UnOp::IsPositiveSign, _) if v.as_f64().is_some() => {
                Value::Bool(!is_nan(&v) && v.as_f64().is_some_and(|x| x.is_sign_positive()))
            }
            // NaNs collapse to the canonical pattern, like doubleToLongBits.
            (UnOp::ToBits, Value::F32(x)) => {
                let x = if x.is_nan() { f32::NAN } else { *x };
                Value::Int { value: x.to_bits() as i32 as i64, width: 32 }
            }
            (UnOp::ToBits, Value::F64(x)) => {
                let x = if x.is_nan() { f64::NAN } else { *x };
                Value::long(x.to_bits() as i64)
            }
            (UnOp::FromBits, Value::Int { value, .. }) => match e.ty {
                Type::F32 => Value::F32(f32::from_bits(*value as u32)),
                Type::F64 => Value::F64(f64::from_bits(*value as u64)),
                _ => return Err(bad()),
            },
            _ => return Err(bad()),
        })
    }

    fn binary(&mut self, e: &TExpr, op: BinOp, l: &TExpr, r: &TExpr, fr: &mut Frame) -> R<Value> {
        let a = self.expr(l, fr)?;
        if matches!(op, BinOp::And | BinOp::Or) {
            let av = a.as_bool().ok_or_else(|| internal(e, "non-Boolean operand"))?;
            if (op == BinOp::And) != av {
                return Ok(Value::Bool(av));
            }
            return Ok(Value::Bool(self.truth(r, fr)?));
        }
        let b = self.expr(r, fr)?;
        if op.is_comparison() && (l.ty.is_float() || r.ty.is_float()) {
            let holds = !(l.ty.is_float() && is_nan(&a)) && !(r.ty.is_float() && is_nan(&b));
            self.event(fr, VcKind::NanCheck, e, holds);
        }
        let bad = || internal(e, format!("`{}` on {a} and {b}", op.symbol()));
        Ok(match (&a, &b) {
            (Value::F64(x), Value::F64(y)) => float_op(op, *x, *y, jvm_min_f64, jvm_max_f64, Value::F64).ok_or_else(bad)?,
            (Value::F32(x), Value::F32(y)) => float_op(op, *x, *y, jvm_min_f32, jvm_max_f32, Value::F32).ok_or_else(bad)?,
            (Value::Int { value: x, width }, Value::Int { value: y, .. }) => {
                let (x, y, w) = (*x, *y, *width);
                if matches!(op, BinOp::Div | BinOp::Rem) {
                    self.event(fr, VcKind::IntDivByZero, e, y != 0);
                    if y == 0 {
                        return Err(RuntimeFailure::DivisionByZero { span: e.span });
                    }
                }
                match op {
                    BinOp::Add => wrap(x.wrapping_add(y), w),
                    BinOp::Sub => wrap(x.wrapping_sub(y), w),
                    BinOp::Mul => wrap(x.wrapping_mul(y), w),
                    BinOp::Div => wrap(x.wrapping_div(y), w),
                    BinOp::Rem => wrap(x.wrapping_rem(y), w),
                    BinOp::Min => wrap(x.min(y), w),
                    BinOp::Max => wrap(x.max(y), w),
                    BinOp::Lt => Value::Bool(x < y),
                    BinOp::Le => Value::Bool(x <= y),
                    BinOp::Gt => Value::Bool(x > y),
                    BinOp::Ge => Value::Bool(x >= y),
                    BinOp::Eq | BinOp::NoeqEq => Value::Bool(x == y),
                    BinOp::Ne | BinOp::NoeqNe => Value::Bool(x != y),
                    _ => return Err(bad()),
                }
            }
            (Value::Bool(x), Value::Bool(y)) => match op {
                BinOp::Eq | BinOp::NoeqEq => Value::Bool(x == y),
                BinOp::Ne | BinOp::NoeqNe => Value::Bool(x != y),
                _ => return Err(bad()),
            },
            (Value::Abstract(x), Value::Abstract(y)) => match op {
                BinOp::Eq => Value::Bool(x == y),
                BinOp::Ne => Value::Bool(x != y),
                _ => return Err(RuntimeFailure::Opaque { span: e.span, what: "equality on a @noeq type".into() }),
            },
            _ => return Err(bad()),
        })
    }
}

trait Float: Copy + PartialOrd + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> + std::ops::Mul<Output = Self> + std::ops::Div<Output = Self> {
    fn same_bits(self, other: Self) -> bool;
}

impl Float for f32 {
    fn same_bits(self, other: Self) -> bool {
        (self.is_nan() && other.is_nan()) || self.to_bits() == other.to_bits()
    }
}

impl Float for f64 {
    fn same_bits(self, other: Self) -> bool {
        (self.is_nan() && other.is_nan()) || self.to_bits() == other.to_bits()
    }
}

fn float_op<F: Float>(op: BinOp, x: F, y: F, min: fn(F, F) -> F, max: fn(F, F) -> F, mk: fn(F) -> Value) -> Option<Value> {
    Some(match op {
        BinOp::Add => mk(x + y),
        BinOp::Sub => mk(x - y),
        BinOp::Mul => mk(x * y),
        BinOp::Div => mk(x / y),
        BinOp::Min => mk(min(x, y)),
        BinOp::Max => mk(max(x, y)),
        BinOp::Lt => Value::Bool(x < y),
        BinOp::Le => Value::Bool(x <= y),
        BinOp::Gt => Value::Bool(x > y),
        BinOp::Ge => Value::Bool(x >= y),
        BinOp::Eq => Value::Bool(x == y),
        BinOp::Ne => Value::Bool(x != y),
        BinOp::NoeqEq => Value::Bool(x.same_bits(y)),
        BinOp::NoeqNe => Value::Bool(!x.same_bits(y)),
        _ => return None,
    })
}

/// Scalar leaves in left-to-right order.
pub fn flatten_value(v: &Value) -> Vec<Value> {
    match v {
        Value::Tuple(vs) => vs.iter().flat_map(flatten_value).collect(),
        v => vec![v.clone()],
    }
}

fn check_args(f: &TFunction, args: &[Value]) -> R<()> {
    if args.len() != f.params.len() {
        return Err(RuntimeFailure::Arity { function: f.name.clone(), expected: f.params.len(), got: args.len() });
    }
    for (i, (a, (_, t))) in args.iter().zip(&f.params).enumerate() {
        if !a.has_type(t) {
            return Err(RuntimeFailure::ArgumentType { function: f.name.clone(), index: i, expected: t.to_string() });
        }
    }
    Ok(())
}

/// Runs the body of `function`. Its own contract is not checked; callee
/// contracts and assertions are.
pub fn evaluate(program: &TypedProgram, function: &str, args: &[Value]) -> Result<Value, RuntimeFailure> {
    evaluate_with(program, function, args, Limits::default())
}

pub fn evaluate_with(program: &TypedProgram, function: &str, args: &[Value], limits: Limits) -> Result<Value, RuntimeFailure> {
    let f = program.function(function).ok_or_else(|| RuntimeFailure::UnknownFunction(function.into()))?;
    check_args(f, args)?;
    let mut it = Interp { prog: program, limits, observe: false, events: vec![] };
    it.call(f, args.to_vec(), 0, f.span).map_err(|e| name_assert(e, function))
}

fn name_assert(e: RuntimeFailure, function: &str) -> RuntimeFailure {
    match e {
        RuntimeFailure::ContractViolation { function: f, clause, span } if f.is_empty() => {
            RuntimeFailure::ContractViolation { function: function.into(), clause, span }
        }
        e => e,
    }
}

/// Outcome of running a function against its own contract.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractRun {
    pub precondition: Option<bool>,
    pub value: Value,
    pub postcondition: Option<bool>,
}

/// Evaluates the precondition, the body and the postcondition of `function`.
pub fn run_contract(program: &TypedProgram, function: &str, args: &[Value]) -> Result<ContractRun, RuntimeFailure> {
    let f = program.function(function).ok_or_else(|| RuntimeFailure::UnknownFunction(function.into()))?;
    check_args(f, args)?;
    let mut it = Interp { prog: program, limits: Limits::default(), observe: false, events: vec![] };
    let mut fr = Frame { params: args.to_vec(), locals: HashMap::new(), result: None, depth: 0 };
    let precondition = match &f.pre {
        Some(p) => Some(it.truth(p, &mut fr)?),
        None => None,
    };
    let value = it.call(f, args.to_vec(), 0, f.span).map_err(|e| name_assert(e, function))?;
    let postcondition = match &f.post {
        Some(p) => {
            fr.result = Some(value.clone());
            fr.locals.clear();
            Some(it.truth(&p.body, &mut fr)?)
        }
        None => None,
    };
    Ok(ContractRun { precondition, value, postcondition })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClassificationKind {
    Confirmed,
    Spurious,
    Undetermined,
}

impl fmt::Display for ClassificationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassificationKind::Confirmed => "confirmed",
            ClassificationKind::Spurious => "spurious",
            ClassificationKind::Undetermined => "undetermined",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub kind: ClassificationKind,
    /// Concrete value of the violated condition, when it was reached.
    pub witness: Option<bool>,
    /// The function's concrete result, when evaluation finished.
    pub result: Option<Value>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("model has no value for input `{0}`")]
    ModelIncomplete(String),
    #[error("model value for `{symbol}` is not a {expected}")]
    ModelMismatch { symbol: String, expected: String },
    #[error("no function `{0}`")]
    UnknownFunction(String),
    #[error("soundness violation: {kind} VC {vc} of `{function}` has a model that concrete evaluation refutes")]
    SoundnessViolation { function: String, kind: VcKind, vc: usize },
}

fn leaf_value(mv: &ModelValue, ty: &Type) -> Option<Value> {
    Some(match (mv, ty) {
        (ModelValue::Float { bits, prec: Precision::F32 }, Type::F32) => Value::F32(f32::from_bits(*bits as u32)),
        (ModelValue::Float { bits, prec: Precision::F64 }, Type::F64) => Value::F64(f64::from_bits(*bits)),
        (ModelValue::BitVec { value, width }, t) if t.int_width() == Some(*width) => Value::Int { value: *value, width: *width },
        (ModelValue::Bool { value }, Type::Bool) => Value::Bool(*value),
        (ModelValue::Abstract { text }, Type::Var { .. }) => Value::Abstract(text.clone()),
        _ => return None,
    })
}

fn rebuild(ty: &Type, leaves: &mut impl Iterator<Item = Value>) -> Value {
    match ty {
        Type::Tuple(ts) => Value::Tuple(ts.iter().map(|t| rebuild(t, leaves)).collect()),
        _ => leaves.next().unwrap_or(Value::Bool(false)),
    }
}

/// Source-level arguments of the VC's function as bound by `model`.
pub fn model_arguments(program: &TypedProgram, vc: &VerificationCondition, model: &Model) -> Result<Vec<Value>, ClassifyError> {
    let f = program.function(&vc.function).ok_or_else(|| ClassifyError::UnknownFunction(vc.function.clone()))?;
    let mut per_param: Vec<Vec<Value>> = vec![vec![]; f.params.len()];
    for input in &vc.inputs {
        let mv = model.get(&input.symbol).ok_or_else(|| ClassifyError::ModelIncomplete(input.symbol.clone()))?;
        let v = leaf_value(mv, &input.param.ty)
            .ok_or_else(|| ClassifyError::ModelMismatch { symbol: input.symbol.clone(), expected: input.param.ty.to_string() })?;
        per_param[input.param.param].push(v);
    }
    Ok(f.params.iter().zip(per_param).map(|((_, t), leaves)| rebuild(t, &mut leaves.into_iter())).collect())
}

/// Replays `model` on the VC's function and decides whether the reported
/// violation really happens.
pub fn classify_counterexample(
    program: &TypedProgram,
    vc: &VerificationCondition,
    model: &Model,
) -> Result<Classification, ClassifyError> {
    classify_with(program, vc, model, Limits::default())
}

pub fn classify_with(
    program: &TypedProgram,
    vc: &VerificationCondition,
    model: &Model,
    limits: Limits,
) -> Result<Classification, ClassifyError> {
    let args = model_arguments(program, vc, model)?;
    let f = program.function(&vc.function).ok_or_else(|| ClassifyError::UnknownFunction(vc.function.clone()))?;
    let undetermined = |note: String| Classification { kind: ClassificationKind::Undetermined, witness: None, result: None, note: Some(note) };
    if args.iter().flat_map(flatten_value).any(|v| matches!(v, Value::Abstract(_))) {
        return Ok(undetermined("input of an uninterpreted sort".into()));
    }
    let mut it = Interp { prog: program, limits, observe: true, events: vec![] };
    let mut fr = Frame { params: args.clone(), locals: HashMap::new(), result: None, depth: 0 };
    let pre = match &f.pre {
        Some(p) => match it.truth(p, &mut fr) {
            Ok(b) => b,
            Err(e) => return Ok(undetermined(format!("precondition: {e}"))),
        },
        None => true,
    };
    it.events.clear();
    let outcome = it.call(f, args, 0, f.span);
    let events = std::mem::take(&mut it.events);
    let failed_assert_before = |upto: usize| events[..upto].iter().any(|ev| ev.kind == VcKind::UserAssert && !ev.holds);
    let mut witness = None;
    let mut violated = false;
    if vc.kind == VcKind::Postcondition {
        if let Ok(v) = &outcome {
            if let Some(p) = &f.post {
                fr.result = Some(v.clone());
                fr.locals.clear();
                match it.truth(&p.body, &mut fr) {
                    Ok(b) => {
                        witness = Some(b);
                        violated = !b && !failed_assert_before(events.len());
                    }
                    Err(e) => return Ok(undetermined(format!("postcondition: {e}"))),
                }
            }
        }
    } else if let Some(i) = events.iter().position(|ev| ev.node == vc.node && ev.kind == vc.kind && !ev.holds) {
        witness = Some(false);
        violated = !failed_assert_before(i);
    } else if events.iter().any(|ev| ev.node == vc.node && ev.kind == vc.kind) {
        witness = Some(true);
    }
    let result = outcome.as_ref().ok().cloned();
    if pre && violated {
        return Ok(Classification { kind: ClassificationKind::Confirmed, witness, result, note: None });
    }
    if let Err(e) = &outcome {
        if witness.is_none() {
            return Ok(undetermined(e.to_string()));
        }
    }
    if !vc.uses_opaque {
        return Err(ClassifyError::SoundnessViolation { function: vc.function.clone(), kind: vc.kind, vc: vc.id });
    }
    let note = if !pre {
        "precondition does not hold concretely".to_string()
    } else if witness == Some(true) {
        "condition holds concretely".to_string()
    } else {
        "violation not reached concretely".to_string()
    };
    Ok(Classification { kind: ClassificationKind::Spurious, witness, result, note: Some(note) })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot read `{text}` as {ty}")]
pub struct ArgParseError {
    pub text: String,
    pub ty: String,
}

/// Splits on commas outside parentheses.
fn split_top(text: &str) -> Vec<&str> {
    let mut out = vec![];
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = text[start..].trim();
    if !last.is_empty() || !out.is_empty() {
        out.push(last);
    }
    out
}

fn parse_float(text: &str, prec: Precision) -> Option<u64> {
    let t = text.trim_end_matches(['f', 'F', 'd', 'D']);
    let t = if t.starts_with("0x") || t.starts_with("-0x") || t.starts_with("+0x") { text } else { t };
    if t.contains("0x") || t.contains("0X") {
        return parse_hex_float(t.trim_end_matches(['f', 'F']), prec);
    }
    let t = match t {
        "NaN" => "NaN",
        "Infinity" | "+Infinity" => "inf",
        "-Infinity" => "-inf",
        t => t,
    };
    match prec {
        Precision::F64 => t.parse::<f64>().ok().map(f64::to_bits),
        Precision::F32 => t.parse::<f32>().ok().map(|x| x.to_bits() as u64),
    }
}

/// Parses one argument as a value of `ty`. Floats accept decimal,
/// `NaN`, `Infinity` and hex-float forms; tuples are parenthesized.
pub fn parse_value(text: &str, ty: &Type) -> Result<Value, ArgParseError> {
    let err = || ArgParseError { text: text.into(), ty: ty.to_string() };
    let t = text.trim();
    Ok(match ty {
        Type::F32 | Type::F64 => {
            let prec = ty.prec().ok_or_else(err)?;
            from_bits(parse_float(t, prec).ok_or_else(err)?, prec)
        }
        Type::Bool => Value::Bool(t.parse().map_err(|_| err())?),
        Type::Tuple(ts) => {
            let inner = t.strip_prefix('(').and_then(|s| s.strip_suffix(')')).ok_or_else(err)?;
            let parts = split_top(inner);
            if parts.len() != ts.len() {
                return Err(err());
            }
            Value::Tuple(parts.iter().zip(ts).map(|(p, t)| parse_value(p, t)).collect::<Result<_, _>>()?)
        }
        Type::Var { .. } => Value::Abstract(t.to_string()),
        t => {
            let w = t.int_width().ok_or_else(err)?;
            let v: i64 = t_strip_long(text).parse().map_err(|_| err())?;
            if wrap(v, w).as_i64() != Some(v) {
                return Err(err());
            }
            Value::Int { value: v, width: w }
        }
    })
}

fn t_strip_long(text: &str) -> &str {
    text.trim().trim_end_matches(['L', 'l'])
}

/// Parses a comma-separated argument list against `params`.
pub fn parse_args(text: &str, params: &[(String, Type)]) -> Result<Vec<Value>, ArgParseError> {
    let parts = split_top(text);
    if parts.len() != params.len() {
        return Err(ArgParseError { text: text.into(), ty: format!("{} arguments", params.len()) });
    }
    parts.iter().zip(params).map(|(p, (_, t))| parse_value(p, t)).collect()
}
