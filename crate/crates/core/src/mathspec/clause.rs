//! The clause language of the contract catalogue and its concrete semantics.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::float::Precision;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    Arg(usize),
    Result,
    /// Bit pattern at the contract's precision.
    Const(u64),
    Abs(Box<Term>),
    Neg(Box<Term>),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Pred {
    Bool(bool),
    Not(Box<Pred>),
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
    IsNaN(Term),
    IsInf(Term),
    IsFinite(Term),
    IsZero(Term),
    Cmp(CmpOp, Term, Term),
}

/// Input or output pattern of a special-value row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    /// Any NaN.
    NaN,
    /// Exactly this bit pattern (so `+0` and `-0` differ).
    Exact(u64),
}

/// Arithmetic on raw bit patterns at a given precision, using the host FPU.
#[derive(Debug, Clone, Copy)]
pub struct Fp(pub Precision);

impl Fp {
    pub fn to_f64(self, bits: u64) -> f64 {
        match self.0 {
            Precision::F64 => f64::from_bits(bits),
            Precision::F32 => f32::from_bits(bits as u32) as f64,
        }
    }

    /// Rounds `x` to this precision.
    pub fn from_f64(self, x: f64) -> u64 {
        match self.0 {
            Precision::F64 => x.to_bits(),
            Precision::F32 => (x as f32).to_bits() as u64,
        }
    }

    pub fn is_nan(self, b: u64) -> bool {
        self.to_f64(b).is_nan()
    }

    pub fn sign_bit(self, b: u64) -> bool {
        (b >> (self.0.width() - 1)) & 1 == 1
    }

    fn bin(self, a: u64, b: u64, f64op: fn(f64, f64) -> f64, f32op: fn(f32, f32) -> f32) -> u64 {
        match self.0 {
            Precision::F64 => f64op(f64::from_bits(a), f64::from_bits(b)).to_bits(),
            Precision::F32 => f32op(f32::from_bits(a as u32), f32::from_bits(b as u32)).to_bits() as u64,
        }
    }

    pub fn add(self, a: u64, b: u64) -> u64 {
        self.bin(a, b, |x, y| x + y, |x, y| x + y)
    }

    pub fn sub(self, a: u64, b: u64) -> u64 {
        self.bin(a, b, |x, y| x - y, |x, y| x - y)
    }

    pub fn neg(self, a: u64) -> u64 {
        a ^ (1u64 << (self.0.width() - 1))
    }

    pub fn abs(self, a: u64) -> u64 {
        a & !(1u64 << (self.0.width() - 1))
    }

    /// Adjacent float towards +inf (NaN and +inf unchanged).
    pub fn next_up(self, a: u64) -> u64 {
        match self.0 {
            Precision::F64 => f64::from_bits(a).next_up().to_bits(),
            Precision::F32 => f32::from_bits(a as u32).next_up().to_bits() as u64,
        }
    }

    pub fn next_down(self, a: u64) -> u64 {
        match self.0 {
            Precision::F64 => f64::from_bits(a).next_down().to_bits(),
            Precision::F32 => f32::from_bits(a as u32).next_down().to_bits() as u64,
        }
    }

    pub fn cmp(self, op: CmpOp, a: u64, b: u64) -> bool {
        let (x, y) = (self.to_f64(a), self.to_f64(b));
        match op {
            CmpOp::Lt => x < y,
            CmpOp::Le => x <= y,
            CmpOp::Gt => x > y,
            CmpOp::Ge => x >= y,
            CmpOp::Eq => x == y,
        }
    }
}

impl Term {
    pub fn eval(&self, fp: Fp, args: &[u64], r: u64) -> u64 {
        match self {
            Term::Arg(i) => args[*i],
            Term::Result => r,
            Term::Const(c) => *c,
            Term::Abs(t) => fp.abs(t.eval(fp, args, r)),
            Term::Neg(t) => fp.neg(t.eval(fp, args, r)),
            Term::Add(a, b) => fp.add(a.eval(fp, args, r), b.eval(fp, args, r)),
            Term::Sub(a, b) => fp.sub(a.eval(fp, args, r), b.eval(fp, args, r)),
        }
    }

    fn is_constant(&self) -> bool {
        match self {
            Term::Arg(_) | Term::Result => false,
            Term::Const(_) => true,
            Term::Abs(t) | Term::Neg(t) => t.is_constant(),
            Term::Add(a, b) | Term::Sub(a, b) => a.is_constant() && b.is_constant(),
        }
    }
}

impl Pred {
    pub fn eval(&self, fp: Fp, args: &[u64], r: u64) -> bool {
        match self {
            Pred::Bool(b) => *b,
            Pred::Not(p) => !p.eval(fp, args, r),
            Pred::And(a, b) => a.eval(fp, args, r) && b.eval(fp, args, r),
            Pred::Or(a, b) => a.eval(fp, args, r) || b.eval(fp, args, r),
            Pred::IsNaN(t) => fp.to_f64(t.eval(fp, args, r)).is_nan(),
            Pred::IsInf(t) => fp.to_f64(t.eval(fp, args, r)).is_infinite(),
            Pred::IsFinite(t) => fp.to_f64(t.eval(fp, args, r)).is_finite(),
            Pred::IsZero(t) => fp.to_f64(t.eval(fp, args, r)) == 0.0,
            Pred::Cmp(op, a, b) => fp.cmp(*op, a.eval(fp, args, r), b.eval(fp, args, r)),
        }
    }
}

impl Pattern {
    pub fn matches(&self, fp: Fp, bits: u64) -> bool {
        match self {
            Pattern::NaN => fp.is_nan(bits),
            Pattern::Exact(b) => *b == bits,
        }
    }

    pub fn describe(&self, fp: Fp) -> String {
        match self {
            Pattern::NaN => "NaN".into(),
            Pattern::Exact(b) => {
                let x = fp.to_f64(*b);
                if x == 0.0 {
                    if fp.sign_bit(*b) { "-0".into() } else { "+0".into() }
                } else if x.is_infinite() {
                    if x > 0.0 { "+inf".into() } else { "-inf".into() }
                } else {
                    format!("{x:?}")
                }
            }
        }
    }
}

/// Parser for clause text, resolving constants at one precision.
pub struct ClauseParser<'a> {
    pub prec: Precision,
    pub constants: &'a BTreeMap<String, String>,
    pub arity: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tk {
    Ident(String),
    Num(String),
    Op(&'static str),
}

fn lex(src: &str) -> Result<Vec<Tk>, String> {
    let b = src.as_bytes();
    let mut i = 0;
    let mut out = vec![];
    const OPS: [&str; 14] = ["&&", "||", "<=", ">=", "==", "<", ">", "!", "(", ")", "+", "-", ",", "*"];
    while i < b.len() {
        let c = b[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let s = i;
            while i < b.len() && ((b[i] as char).is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push(Tk::Ident(src[s..i].to_string()));
        } else if c.is_ascii_digit() || c == '.' {
            let s = i;
            while i < b.len() && ((b[i] as char).is_ascii_digit() || b[i] == b'.' || b[i] == b'e' || b[i] == b'E') {
                i += 1;
            }
            out.push(Tk::Num(src[s..i].to_string()));
        } else {
            let op = OPS.iter().find(|op| src[i..].starts_with(**op)).ok_or_else(|| format!("unexpected `{c}` in `{src}`"))?;
            out.push(Tk::Op(op));
            i += op.len();
        }
    }
    Ok(out)
}

struct Cursor<'p, 'a> {
    toks: Vec<Tk>,
    pos: usize,
    p: &'p ClauseParser<'a>,
    src: String,
}

impl ClauseParser<'_> {
    pub fn pred(&self, src: &str) -> Result<Pred, String> {
        let mut c = Cursor { toks: lex(src)?, pos: 0, p: self, src: src.to_string() };
        let out = c.or()?;
        c.done()?;
        Ok(out)
    }

    pub fn term(&self, src: &str) -> Result<Term, String> {
        let mut c = Cursor { toks: lex(src)?, pos: 0, p: self, src: src.to_string() };
        let out = c.term()?;
        c.done()?;
        Ok(out)
    }

    /// A closed term evaluated to its bit pattern.
    pub fn constant(&self, src: &str) -> Result<u64, String> {
        let t = self.term(src)?;
        if !t.is_constant() {
            return Err(format!("`{src}` is not a constant"));
        }
        Ok(t.eval(Fp(self.prec), &[], 0))
    }

    pub fn pattern(&self, src: &str) -> Result<Pattern, String> {
        let fp = Fp(self.prec);
        Ok(match src.trim() {
            "nan" | "NaN" => Pattern::NaN,
            "+0" => Pattern::Exact(fp.from_f64(0.0)),
            "-0" => Pattern::Exact(fp.from_f64(-0.0)),
            "+inf" => Pattern::Exact(fp.from_f64(f64::INFINITY)),
            "-inf" => Pattern::Exact(fp.from_f64(f64::NEG_INFINITY)),
            other => Pattern::Exact(self.constant(other)?),
        })
    }

    fn named(&self, name: &str) -> Result<u64, String> {
        let fp = Fp(self.prec);
        let v = match (name, self.prec) {
            ("inf", _) => fp.from_f64(f64::INFINITY),
            ("max", Precision::F64) => f64::MAX.to_bits(),
            ("max", Precision::F32) => f32::MAX.to_bits() as u64,
            ("min_sub", _) => 1,
            ("min_normal", Precision::F64) => f64::MIN_POSITIVE.to_bits(),
            ("min_normal", Precision::F32) => f32::MIN_POSITIVE.to_bits() as u64,
            _ => {
                let text = self.constants.get(name).ok_or_else(|| format!("unknown constant `{name}`"))?;
                self.decimal(text)?
            }
        };
        Ok(v)
    }

    /// Correctly rounded decimal conversion.
    fn decimal(&self, text: &str) -> Result<u64, String> {
        match self.prec {
            Precision::F64 => text.parse::<f64>().map(f64::to_bits).map_err(|e| format!("bad number `{text}`: {e}")),
            Precision::F32 => text.parse::<f32>().map(|x| x.to_bits() as u64).map_err(|e| format!("bad number `{text}`: {e}")),
        }
    }
}

impl Cursor<'_, '_> {
    fn peek(&self) -> Option<&Tk> {
        self.toks.get(self.pos)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if matches!(self.peek(), Some(Tk::Op(o)) if *o == op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> Result<(), String> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(format!("expected `{op}` in `{}`", self.src))
        }
    }

    fn done(&self) -> Result<(), String> {
        if self.pos == self.toks.len() {
            Ok(())
        } else {
            Err(format!("trailing input in `{}`", self.src))
        }
    }

    fn or(&mut self) -> Result<Pred, String> {
        let mut l = self.and()?;
        while self.eat_op("||") {
            let r = self.and()?;
            l = Pred::Or(Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn and(&mut self) -> Result<Pred, String> {
        let mut l = self.unary()?;
        while self.eat_op("&&") {
            let r = self.unary()?;
            l = Pred::And(Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn unary(&mut self) -> Result<Pred, String> {
        if self.eat_op("!") {
            return Ok(Pred::Not(Box::new(self.unary()?)));
        }
        if self.eat_op("(") {
            let p = self.or()?;
            self.expect_op(")")?;
            return Ok(p);
        }
        if let Some(Tk::Ident(name)) = self.peek().cloned() {
            let test = match name.as_str() {
                "isnan" => Some(Pred::IsNaN as fn(Term) -> Pred),
                "isinf" => Some(Pred::IsInf as fn(Term) -> Pred),
                "isfinite" => Some(Pred::IsFinite as fn(Term) -> Pred),
                "iszero" => Some(Pred::IsZero as fn(Term) -> Pred),
                "true" | "false" => {
                    self.pos += 1;
                    return Ok(Pred::Bool(name == "true"));
                }
                _ => None,
            };
            if let Some(ctor) = test {
                self.pos += 1;
                self.expect_op("(")?;
                let t = self.term()?;
                self.expect_op(")")?;
                return Ok(ctor(t));
            }
        }
        let l = self.term()?;
        let op = match self.peek() {
            Some(Tk::Op("<")) => CmpOp::Lt,
            Some(Tk::Op("<=")) => CmpOp::Le,
            Some(Tk::Op(">")) => CmpOp::Gt,
            Some(Tk::Op(">=")) => CmpOp::Ge,
            Some(Tk::Op("==")) => CmpOp::Eq,
            _ => return Err(format!("expected a comparison in `{}`", self.src)),
        };
        self.pos += 1;
        let r = self.term()?;
        Ok(Pred::Cmp(op, l, r))
    }

    fn term(&mut self) -> Result<Term, String> {
        let mut l = self.atom()?;
        loop {
            if self.eat_op("+") {
                l = Term::Add(Box::new(l), Box::new(self.atom()?));
            } else if self.eat_op("-") {
                l = Term::Sub(Box::new(l), Box::new(self.atom()?));
            } else {
                return Ok(l);
            }
        }
    }

    fn atom(&mut self) -> Result<Term, String> {
        let fp = Fp(self.p.prec);
        if self.eat_op("-") {
            let t = self.atom()?;
            return Ok(match t {
                Term::Const(c) => Term::Const(fp.neg(c)),
                t => Term::Neg(Box::new(t)),
            });
        }
        match self.peek().cloned() {
            Some(Tk::Num(n)) => {
                self.pos += 1;
                Ok(Term::Const(self.p.decimal(&n)?))
            }
            Some(Tk::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "x" => self.arg(0),
                    "y" => self.arg(1),
                    "r" => Ok(Term::Result),
                    "abs" | "up" | "down" => {
                        self.expect_op("(")?;
                        let t = self.term()?;
                        self.expect_op(")")?;
                        match name.as_str() {
                            "abs" => Ok(match t {
                                Term::Const(c) => Term::Const(fp.abs(c)),
                                t => Term::Abs(Box::new(t)),
                            }),
                            dir => {
                                if !t.is_constant() {
                                    return Err(format!("`{dir}` needs a constant in `{}`", self.src));
                                }
                                let c = t.eval(fp, &[], 0);
                                Ok(Term::Const(if dir == "up" { fp.next_up(c) } else { fp.next_down(c) }))
                            }
                        }
                    }
                    other => Ok(Term::Const(self.p.named(other)?)),
                }
            }
            _ => Err(format!("expected a term in `{}`", self.src)),
        }
    }

    fn arg(&self, i: usize) -> Result<Term, String> {
        if i < self.p.arity {
            Ok(Term::Arg(i))
        } else {
            Err(format!("argument {} out of range in `{}`", i + 1, self.src))
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
        })
    }
}
