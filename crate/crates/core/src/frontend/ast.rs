//! Untyped surface syntax produced by the parser.

use super::span::Span;
use crate::float::Precision;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub functions: Vec<FunctionDef>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub name: String,
    pub type_params: Vec<TypeParam>,
    pub params: Vec<Param>,
    pub ret: Option<TypeExpr>,
    pub precondition: Option<Expr>,
    pub body: Expr,
    pub postcondition: Option<Postcondition>,
    /// Callers only see the contract.
    pub opaque: bool,
    /// `@unchecked`: no automatic NaN/cast obligations inside this function.
    pub unchecked: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeParam {
    pub name: String,
    pub noeq: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: TypeExpr,
    pub span: Span,
}

/// `ensuring(binder => body)`; the binder names the function result.
#[derive(Debug, Clone, PartialEq)]
pub struct Postcondition {
    pub binder: String,
    pub body: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypeExpr {
    Named(String, Span),
    Tuple(Vec<TypeExpr>, Span),
}

impl TypeExpr {
    pub fn span(&self) -> Span {
        match self {
            TypeExpr::Named(_, s) | TypeExpr::Tuple(_, s) => *s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Literal {
    Float { bits: u64, prec: Precision },
    /// Integer magnitude with sign applied; `long` for an `L` suffix.
    Int { value: i128, long: bool },
    Bool(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SurfaceBinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl SurfaceBinOp {
    pub fn symbol(self) -> &'static str {
        use SurfaceBinOp::*;
        match self {
            Add => "+",
            Sub => "-",
            Mul => "*",
            Div => "/",
            Rem => "%",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            Eq => "==",
            Ne => "!=",
            And => "&&",
            Or => "||",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Lit(Literal),
    Var(String),
    /// `Double.NaN`, `Float.MaxValue`, ...
    Constant { owner: String, name: String },
    Block(Vec<Stmt>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Binary(SurfaceBinOp, Box<Expr>, Box<Expr>),
    /// Postfix member access: `x.isNaN`, `x.toInt`, `p._1`.
    Member(Box<Expr>, String),
    /// `f(args)`, `math.exp(x)`, `pick[Double](a, b)`, `Double.fromBits(n)`.
    Call { path: Vec<String>, type_args: Vec<TypeExpr>, args: Vec<Expr> },
    Tuple(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Val { name: String, ty: Option<TypeExpr>, value: Expr, span: Span },
    Assert(Expr, Span),
}

impl Program {
    /// Copy with every span zeroed, for structural comparison.
    pub fn without_spans(&self) -> Program {
        let mut p = self.clone();
        for f in &mut p.functions {
            f.span = Span::default();
            for tp in &mut f.type_params {
                tp.span = Span::default();
            }
            for prm in &mut f.params {
                prm.span = Span::default();
                strip_type(&mut prm.ty);
            }
            if let Some(t) = &mut f.ret {
                strip_type(t);
            }
            if let Some(e) = &mut f.precondition {
                strip_expr(e);
            }
            strip_expr(&mut f.body);
            if let Some(pc) = &mut f.postcondition {
                pc.span = Span::default();
                strip_expr(&mut pc.body);
            }
        }
        p
    }
}

fn strip_type(t: &mut TypeExpr) {
    match t {
        TypeExpr::Named(_, s) => *s = Span::default(),
        TypeExpr::Tuple(ts, s) => {
            *s = Span::default();
            ts.iter_mut().for_each(strip_type);
        }
    }
}

fn strip_expr(e: &mut Expr) {
    e.span = Span::default();
    match &mut e.kind {
        ExprKind::Lit(_) | ExprKind::Var(_) | ExprKind::Constant { .. } => {}
        ExprKind::Block(stmts, tail) => {
            for s in stmts {
                match s {
                    Stmt::Val { ty, value, span, .. } => {
                        *span = Span::default();
                        if let Some(t) = ty {
                            strip_type(t);
                        }
                        strip_expr(value);
                    }
                    Stmt::Assert(c, span) => {
                        *span = Span::default();
                        strip_expr(c);
                    }
                }
            }
            strip_expr(tail);
        }
        ExprKind::If(c, t, f) => {
            strip_expr(c);
            strip_expr(t);
            strip_expr(f);
        }
        ExprKind::Neg(x) | ExprKind::Not(x) | ExprKind::Member(x, _) => strip_expr(x),
        ExprKind::Binary(_, l, r) => {
            strip_expr(l);
            strip_expr(r);
        }
        ExprKind::Call { type_args, args, .. } => {
            type_args.iter_mut().for_each(strip_type);
            args.iter_mut().for_each(strip_expr);
        }
        ExprKind::Tuple(es) => es.iter_mut().for_each(strip_expr),
    }
}
