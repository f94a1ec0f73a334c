//! Source printer. Output re-parses to the same AST (modulo spans).

use std::fmt::Write;

use super::ast::*;
use crate::float::{decimal_f32, decimal_f64, Precision};

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for (i, f) in p.functions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_function(&mut out, f);
    }
    out
}

fn print_function(out: &mut String, f: &FunctionDef) {
    if f.opaque {
        out.push_str("@opaque\n");
    }
    if f.unchecked {
        out.push_str("@unchecked\n");
    }
    let _ = write!(out, "def {}", f.name);
    if !f.type_params.is_empty() {
        let tps: Vec<String> =
            f.type_params.iter().map(|t| if t.noeq { format!("@noeq {}", t.name) } else { t.name.clone() }).collect();
        let _ = write!(out, "[{}]", tps.join(", "));
    }
    let params: Vec<String> = f.params.iter().map(|p| format!("{}: {}", p.name, ty(&p.ty))).collect();
    let _ = write!(out, "({})", params.join(", "));
    if let Some(r) = &f.ret {
        let _ = write!(out, ": {}", ty(r));
    }
    out.push_str(" = ");
    match &f.precondition {
        Some(pre) => {
            out.push_str("{\n");
            let _ = writeln!(out, "  require({})", expr(pre, 1));
            match &f.body.kind {
                ExprKind::Block(stmts, tail) => {
                    for s in stmts {
                        stmt(out, s, 1);
                    }
                    let _ = writeln!(out, "  {}", expr(tail, 1));
                }
                _ => {
                    let _ = writeln!(out, "  {}", expr(&f.body, 1));
                }
            }
            out.push('}');
        }
        None => out.push_str(&expr(&f.body, 0)),
    }
    if let Some(pc) = &f.postcondition {
        let _ = write!(out, ".ensuring({} => {})", pc.binder, expr(&pc.body, 0));
    }
    out.push('\n');
}

fn ty(t: &TypeExpr) -> String {
    match t {
        TypeExpr::Named(n, _) => n.clone(),
        TypeExpr::Tuple(ts, _) => format!("({})", ts.iter().map(ty).collect::<Vec<_>>().join(", ")),
    }
}

fn indent(level: usize) -> String {
    "  ".repeat(level)
}

fn stmt(out: &mut String, s: &Stmt, level: usize) {
    match s {
        Stmt::Val { name, ty: t, value, .. } => {
            let annot = t.as_ref().map(|t| format!(": {}", ty(t))).unwrap_or_default();
            let _ = writeln!(out, "{}val {name}{annot} = {}", indent(level + 1), expr(value, level + 1));
        }
        Stmt::Assert(c, _) => {
            let _ = writeln!(out, "{}assert({})", indent(level + 1), expr(c, level + 1));
        }
    }
}

fn literal(l: &Literal) -> String {
    match *l {
        Literal::Bool(b) => b.to_string(),
        Literal::Int { value, long } => format!("{value}{}", if long { "L" } else { "" }),
        Literal::Float { bits, prec: Precision::F64 } => {
            let x = f64::from_bits(bits);
            if x.is_nan() {
                "Double.NaN".into()
            } else if x.is_infinite() {
                format!("{}0x1p1024", if x < 0.0 { "-" } else { "" })
            } else {
                decimal_f64(x)
            }
        }
        Literal::Float { bits, prec: Precision::F32 } => {
            let x = f32::from_bits(bits as u32);
            if x.is_nan() {
                "Float.NaN".into()
            } else if x.is_infinite() {
                format!("{}0x1p128f", if x < 0.0 { "-" } else { "" })
            } else {
                format!("{}f", decimal_f32(x))
            }
        }
    }
}

fn is_atom(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Lit(Literal::Int { value, .. }) => *value >= 0,
        ExprKind::Lit(Literal::Float { bits, prec }) => bits >> (prec.width() - 1) & 1 == 0,
        ExprKind::Lit(Literal::Bool(_))
        | ExprKind::Var(_)
        | ExprKind::Constant { .. }
        | ExprKind::Call { .. }
        | ExprKind::Tuple(_)
        | ExprKind::Member(..) => true,
        _ => false,
    }
}

/// Whether the printed form begins with a numeric literal, which a
/// preceding `-` would fold into.
fn starts_with_number(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Lit(Literal::Int { .. } | Literal::Float { .. }) => true,
        ExprKind::Member(x, _) => is_atom(x) && starts_with_number(x),
        _ => false,
    }
}

fn operand(e: &Expr, level: usize) -> String {
    if is_atom(e) {
        expr(e, level)
    } else {
        format!("({})", expr(e, level))
    }
}

pub fn expr(e: &Expr, level: usize) -> String {
    match &e.kind {
        ExprKind::Lit(l) => literal(l),
        ExprKind::Var(v) => v.clone(),
        ExprKind::Constant { owner, name } => format!("{owner}.{name}"),
        ExprKind::Block(stmts, tail) => {
            let mut out = String::from("{\n");
            for s in stmts {
                stmt(&mut out, s, level);
            }
            let _ = writeln!(out, "{}{}", indent(level + 1), expr(tail, level + 1));
            let _ = write!(out, "{}}}", indent(level));
            out
        }
        ExprKind::If(c, t, f) => {
            format!("if ({}) {} else {}", expr(c, level), operand(t, level), operand(f, level))
        }
        ExprKind::Neg(x) if starts_with_number(x) => format!("-({})", expr(x, level)),
        ExprKind::Neg(x) => format!("-{}", operand(x, level)),
        ExprKind::Not(x) => format!("!{}", operand(x, level)),
        ExprKind::Binary(op, l, r) => format!("{} {} {}", operand(l, level), op.symbol(), operand(r, level)),
        ExprKind::Member(x, m) => format!("{}.{m}", operand(x, level)),
        ExprKind::Call { path, type_args, args } => {
            let targs = if type_args.is_empty() {
                String::new()
            } else {
                format!("[{}]", type_args.iter().map(ty).collect::<Vec<_>>().join(", "))
            };
            let args: Vec<String> = args.iter().map(|a| expr(a, level)).collect();
            format!("{}{targs}({})", path.join("."), args.join(", "))
        }
        ExprKind::Tuple(items) => {
            format!("({})", items.iter().map(|a| expr(a, level)).collect::<Vec<_>>().join(", "))
        }
    }
}
