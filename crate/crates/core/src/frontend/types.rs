//! Typed program representation shared by every later phase.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::span::Span;
use crate::float::Precision;

/// Pre-order index of a node across the whole program.
pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    F32,
    F64,
    I8,
    I16,
    I32,
    I64,
    Bool,
    Tuple(Vec<Type>),
    Var { name: String, noeq: bool },
}

impl Type {
    pub fn float(prec: Precision) -> Type {
        match prec {
            Precision::F32 => Type::F32,
            Precision::F64 => Type::F64,
        }
    }

    pub fn int(width: u32) -> Type {
        match width {
            8 => Type::I8,
            16 => Type::I16,
            32 => Type::I32,
            _ => Type::I64,
        }
    }

    pub fn prec(&self) -> Option<Precision> {
        match self {
            Type::F32 => Some(Precision::F32),
            Type::F64 => Some(Precision::F64),
            _ => None,
        }
    }

    pub fn is_float(&self) -> bool {
        self.prec().is_some()
    }

    pub fn int_width(&self) -> Option<u32> {
        match self {
            Type::I8 => Some(8),
            Type::I16 => Some(16),
            Type::I32 => Some(32),
            Type::I64 => Some(64),
            _ => None,
        }
    }

    pub fn is_int(&self) -> bool {
        self.int_width().is_some()
    }

    pub fn is_numeric(&self) -> bool {
        self.is_int() || self.is_float()
    }

    /// Position in the implicit widening chain Byte < Short < Int < Long < Float < Double.
    pub fn numeric_rank(&self) -> Option<u8> {
        match self {
            Type::I8 => Some(0),
            Type::I16 => Some(1),
            Type::I32 => Some(2),
            Type::I64 => Some(3),
            Type::F32 => Some(4),
            Type::F64 => Some(5),
            _ => None,
        }
    }

    /// Scalar leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<Type> {
        match self {
            Type::Tuple(ts) => ts.iter().flat_map(|t| t.leaves()).collect(),
            t => vec![t.clone()],
        }
    }

    pub fn contains_var(&self) -> bool {
        match self {
            Type::Var { .. } => true,
            Type::Tuple(ts) => ts.iter().any(|t| t.contains_var()),
            _ => false,
        }
    }

    pub fn subst(&self, map: &HashMap<String, Type>) -> Type {
        match self {
            Type::Var { name, .. } => map.get(name).cloned().unwrap_or_else(|| self.clone()),
            Type::Tuple(ts) => Type::Tuple(ts.iter().map(|t| t.subst(map)).collect()),
            t => t.clone(),
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::F32 => f.write_str("Float"),
            Type::F64 => f.write_str("Double"),
            Type::I8 => f.write_str("Byte"),
            Type::I16 => f.write_str("Short"),
            Type::I32 => f.write_str("Int"),
            Type::I64 => f.write_str("Long"),
            Type::Bool => f.write_str("Boolean"),
            Type::Tuple(ts) => {
                f.write_str("(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str(")")
            }
            Type::Var { name, .. } => f.write_str(name),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Const {
    /// Bit pattern; `F32` values occupy the low 32 bits.
    Float { bits: u64, prec: Precision },
    /// Value already wrapped to `width` bits and sign-extended.
    Int { value: i64, width: u32 },
    Bool(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
    Abs,
    Sqrt,
    Ceil,
    Floor,
    Rint,
    IsNaN,
    IsFinite,
    IsInfinite,
    IsPositiveSign,
    ToBits,
    FromBits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    /// Integer remainder only.
    Rem,
    Min,
    Max,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    /// Equality on a `@noeq` type variable: uninterpreted.
    NoeqEq,
    NoeqNe,
    And,
    Or,
}

impl BinOp {
    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Min => "min",
            BinOp::Max => "max",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne | BinOp::NoeqNe => "!=",
            BinOp::NoeqEq => "==",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MathFn {
    Cos,
    Sin,
    Tan,
    Asin,
    Acos,
    Atan,
    Atan2,
    Hypot,
    Cbrt,
    Pow,
    Exp,
    Expm1,
    Log,
    Log1p,
    Log10,
    Sinh,
    Cosh,
    Tanh,
}

impl MathFn {
    pub const ALL: [MathFn; 18] = [
        MathFn::Cos,
        MathFn::Sin,
        MathFn::Tan,
        MathFn::Asin,
        MathFn::Acos,
        MathFn::Atan,
        MathFn::Atan2,
        MathFn::Hypot,
        MathFn::Cbrt,
        MathFn::Pow,
        MathFn::Exp,
        MathFn::Expm1,
        MathFn::Log,
        MathFn::Log1p,
        MathFn::Log10,
        MathFn::Sinh,
        MathFn::Cosh,
        MathFn::Tanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MathFn::Cos => "cos",
            MathFn::Sin => "sin",
            MathFn::Tan => "tan",
            MathFn::Asin => "asin",
            MathFn::Acos => "acos",
            MathFn::Atan => "atan",
            MathFn::Atan2 => "atan2",
            MathFn::Hypot => "hypot",
            MathFn::Cbrt => "cbrt",
            MathFn::Pow => "pow",
            MathFn::Exp => "exp",
            MathFn::Expm1 => "expm1",
            MathFn::Log => "log",
            MathFn::Log1p => "log1p",
            MathFn::Log10 => "log10",
            MathFn::Sinh => "sinh",
            MathFn::Cosh => "cosh",
            MathFn::Tanh => "tanh",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            MathFn::Atan2 | MathFn::Hypot | MathFn::Pow => 2,
            _ => 1,
        }
    }

    pub fn from_name(name: &str) -> Option<MathFn> {
        MathFn::ALL.iter().copied().find(|f| f.name() == name)
    }
}

impl fmt::Display for MathFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Binding {
    Param(usize),
    /// Index into the function's let-bound locals, in binding order.
    Local(usize),
    /// The postcondition binder.
    Result,
    /// One scalar leaf of the result, after tuple flattening.
    ResultLeaf(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TExpr {
    pub id: NodeId,
    pub ty: Type,
    pub span: Span,
    pub kind: TExprKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TExprKind {
    Const(Const),
    Var { name: String, binding: Binding },
    Let { local: usize, name: String, value: Box<TExpr>, body: Box<TExpr> },
    Assert { cond: Box<TExpr>, body: Box<TExpr> },
    If { cond: Box<TExpr>, then: Box<TExpr>, els: Box<TExpr> },
    Unary(UnOp, Box<TExpr>),
    Binary(BinOp, Box<TExpr>, Box<TExpr>),
    /// Numeric conversion to the node's type.
    Cast(Box<TExpr>),
    Call { func: String, type_args: Vec<Type>, args: Vec<TExpr> },
    /// Transcendental call at the node's precision.
    Math { func: MathFn, args: Vec<TExpr> },
    Tuple(Vec<TExpr>),
    Proj(Box<TExpr>, usize),
    /// One scalar leaf of a call's result, after tuple flattening.
    CallLeaf { func: String, type_args: Vec<Type>, args: Vec<TExpr>, leaf: usize },
}

impl TExpr {
    pub fn new(ty: Type, span: Span, kind: TExprKind) -> TExpr {
        TExpr { id: 0, ty, span, kind }
    }

    pub fn children(&self) -> Vec<&TExpr> {
        match &self.kind {
            TExprKind::Const(_) | TExprKind::Var { .. } => vec![],
            TExprKind::Let { value, body, .. } => vec![value, body],
            TExprKind::Assert { cond, body } => vec![cond, body],
            TExprKind::If { cond, then, els } => vec![cond, then, els],
            TExprKind::Unary(_, x) | TExprKind::Cast(x) | TExprKind::Proj(x, _) => vec![x],
            TExprKind::Binary(_, l, r) => vec![l, r],
            TExprKind::Call { args, .. }
            | TExprKind::CallLeaf { args, .. }
            | TExprKind::Math { args, .. }
            | TExprKind::Tuple(args) => args.iter().collect(),
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut TExpr> {
        match &mut self.kind {
            TExprKind::Const(_) | TExprKind::Var { .. } => vec![],
            TExprKind::Let { value, body, .. } => vec![value, body],
            TExprKind::Assert { cond, body } => vec![cond, body],
            TExprKind::If { cond, then, els } => vec![cond, then, els],
            TExprKind::Unary(_, x) | TExprKind::Cast(x) | TExprKind::Proj(x, _) => vec![x],
            TExprKind::Binary(_, l, r) => vec![l, r],
            TExprKind::Call { args, .. }
            | TExprKind::CallLeaf { args, .. }
            | TExprKind::Math { args, .. }
            | TExprKind::Tuple(args) => {
                args.iter_mut().collect()
            }
        }
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a TExpr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn walk_mut(&mut self, f: &mut impl FnMut(&mut TExpr)) {
        f(self);
        for c in self.children_mut() {
            c.walk_mut(f);
        }
    }

    pub fn subst_types(&mut self, map: &HashMap<String, Type>) {
        if map.is_empty() {
            return;
        }
        self.walk_mut(&mut |e| {
            e.ty = e.ty.subst(map);
            if let TExprKind::Call { type_args, .. } | TExprKind::CallLeaf { type_args, .. } = &mut e.kind {
                for t in type_args.iter_mut() {
                    *t = t.subst(map);
                }
            }
        });
    }

    /// Whether this node is a float-to-integer conversion.
    pub fn is_float_to_int_cast(&self) -> bool {
        matches!(&self.kind, TExprKind::Cast(x) if x.ty.is_float() && self.ty.is_int())
    }

    /// Whether this node is a comparison with at least one floating operand.
    pub fn is_float_comparison(&self) -> bool {
        matches!(&self.kind, TExprKind::Binary(op, l, r) if op.is_comparison() && (l.ty.is_float() || r.ty.is_float()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeParamDef {
    pub name: String,
    pub noeq: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TPostcondition {
    pub binder: String,
    pub body: TExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TFunction {
    pub name: String,
    pub type_params: Vec<TypeParamDef>,
    pub params: Vec<(String, Type)>,
    pub ret: Type,
    pub pre: Option<TExpr>,
    pub body: TExpr,
    pub post: Option<TPostcondition>,
    pub opaque: bool,
    pub unchecked: bool,
    pub span: Span,
    /// Number of let-bound locals in `body`.
    pub locals: usize,
}

impl TFunction {
    /// Pre-order walk over precondition, body and postcondition.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a TExpr)) {
        if let Some(p) = &self.pre {
            p.walk(f);
        }
        self.body.walk(f);
        if let Some(p) = &self.post {
            p.body.walk(f);
        }
    }
}

/// Automatically injected safety obligations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CheckKind {
    /// Both comparison operands are not NaN.
    NanCheck,
    /// Cast operand is not NaN.
    CastNaN,
    /// Truncated cast operand fits the target integer.
    CastRange,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TypedProgram {
    pub functions: Vec<TFunction>,
    /// Injected obligations keyed by the node they guard.
    pub checks: BTreeMap<NodeId, BTreeSet<CheckKind>>,
}

impl TypedProgram {
    pub fn function(&self, name: &str) -> Option<&TFunction> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a TFunction, &'a TExpr)) {
        for func in &self.functions {
            func.walk(&mut |e| f(func, e));
        }
    }

    /// Direct callees of each function.
    pub fn call_graph(&self) -> BTreeMap<String, BTreeSet<String>> {
        let mut g = BTreeMap::new();
        for func in &self.functions {
            let mut callees = BTreeSet::new();
            func.walk(&mut |e| {
                if let TExprKind::Call { func: c, .. } | TExprKind::CallLeaf { func: c, .. } = &e.kind {
                    callees.insert(c.clone());
                }
            });
            g.insert(func.name.clone(), callees);
        }
        g
    }

    /// Functions that can reach themselves through calls.
    pub fn recursive_functions(&self) -> BTreeSet<String> {
        let g = self.call_graph();
        let mut out = BTreeSet::new();
        for start in g.keys() {
            let mut seen = BTreeSet::new();
            let mut stack: Vec<&String> = g[start].iter().collect();
            while let Some(n) = stack.pop() {
                if n == start {
                    out.insert(start.clone());
                    break;
                }
                if seen.insert(n.clone()) {
                    if let Some(next) = g.get(n) {
                        stack.extend(next.iter());
                    }
                }
            }
        }
        out
    }

    /// Whether `caller` and `callee` lie on a common call cycle.
    pub fn same_component(&self, caller: &str, callee: &str) -> bool {
        let g = self.call_graph();
        let reaches = |a: &str, b: &str| {
            let mut seen = BTreeSet::new();
            let mut stack = vec![a.to_string()];
            while let Some(n) = stack.pop() {
                for m in g.get(&n).into_iter().flatten() {
                    if m == b {
                        return true;
                    }
                    if seen.insert(m.clone()) {
                        stack.push(m.clone());
                    }
                }
            }
            false
        };
        reaches(caller, callee) && reaches(callee, caller)
    }

    /// Reassigns node ids in pre-order across all functions.
    pub fn renumber(&mut self) {
        let mut next: NodeId = 0;
        for f in &mut self.functions {
            let mut assign = |e: &mut TExpr| {
                e.id = next;
                next += 1;
            };
            if let Some(p) = &mut f.pre {
                p.walk_mut(&mut assign);
            }
            f.body.walk_mut(&mut assign);
            if let Some(p) = &mut f.post {
                p.body.walk_mut(&mut assign);
            }
        }
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_, _| n += 1);
        n
    }
}
