//! Random well-typed FPL programs built from the opaque-free fragment.

use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    F32,
    F64,
    I32,
    I64,
    Bool,
}

impl Ty {
    pub fn name(self) -> &'static str {
        match self {
            Ty::F32 => "Float",
            Ty::F64 => "Double",
            Ty::I32 => "Int",
            Ty::I64 => "Long",
            Ty::Bool => "Boolean",
        }
    }

    pub fn is_float(self) -> bool {
        matches!(self, Ty::F32 | Ty::F64)
    }

    pub fn is_int(self) -> bool {
        matches!(self, Ty::I32 | Ty::I64)
    }
}

const NUMERIC: [Ty; 4] = [Ty::F32, Ty::F64, Ty::I32, Ty::I64];

pub fn f64_literal(x: f64) -> String {
    if x.is_nan() {
        "Double.NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "Double.PositiveInfinity" } else { "Double.NegativeInfinity" }.into()
    } else if x.is_sign_negative() {
        format!("(-{:?})", -x)
    } else {
        format!("{x:?}")
    }
}

pub fn f32_literal(x: f32) -> String {
    if x.is_nan() {
        "Float.NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "Float.PositiveInfinity" } else { "Float.NegativeInfinity" }.into()
    } else if x.is_sign_negative() {
        format!("(-{:?}f)", -x)
    } else {
        format!("{x:?}f")
    }
}

pub fn int_literal(v: i64, ty: Ty) -> String {
    match ty {
        Ty::I32 if v == i32::MIN as i64 => "Int.MinValue".into(),
        Ty::I64 if v == i64::MIN => "Long.MinValue".into(),
        Ty::I32 if v < 0 => format!("(-{})", -v),
        Ty::I32 => v.to_string(),
        _ if v < 0 => format!("(-{}L)", -v),
        _ => format!("{v}L"),
    }
}

struct Helper {
    name: String,
    param: Ty,
    ret: Ty,
}

pub struct Gen<R: Rng> {
    pub rng: R,
    /// Integer `/` and `%` may take arbitrary divisors.
    pub int_division: bool,
    vars: Vec<(String, Ty)>,
    helpers: Vec<Helper>,
    blocks: bool,
    next: usize,
}

impl<R: Rng> Gen<R> {
    pub fn new(rng: R) -> Self {
        Gen { rng, int_division: false, vars: vec![], helpers: vec![], blocks: true, next: 0 }
    }

    fn fresh(&mut self, prefix: &str) -> String {
        self.next += 1;
        format!("{prefix}{}", self.next)
    }

    fn pick_numeric(&mut self) -> Ty {
        *[Ty::F64, Ty::F64, Ty::F32, Ty::F32, Ty::I32, Ty::I64].choose(&mut self.rng).unwrap()
    }

    pub fn literal(&mut self, ty: Ty) -> String {
        let r = &mut self.rng;
        match ty {
            Ty::F64 => {
                let x = match r.gen_range(0..4) {
                    0 => *[f64::NAN, f64::INFINITY, f64::NEG_INFINITY, f64::MAX, f64::MIN_POSITIVE, 5e-324, 0.0, -0.0, 1.0, -1.0, 0.5]
                        .choose(r)
                        .unwrap(),
                    1 => f64::from_bits(r.gen::<u64>() & !(0x7ffu64 << 52) | (r.gen_range(0x3f0u64..0x410) << 52)),
                    _ => (r.gen_range(-1000i32..1000) as f64) / 8.0,
                };
                f64_literal(x)
            }
            Ty::F32 => {
                let x = match r.gen_range(0..4) {
                    0 => *[f32::NAN, f32::INFINITY, f32::NEG_INFINITY, f32::MAX, f32::MIN_POSITIVE, 1e-45, 0.0, -0.0, 1.0, -1.0, 0.5]
                        .choose(r)
                        .unwrap(),
                    1 => f32::from_bits(r.gen::<u32>() & !(0xffu32 << 23) | (r.gen_range(0x70u32..0x90) << 23)),
                    _ => (r.gen_range(-1000i32..1000) as f32) / 8.0,
                };
                f32_literal(x)
            }
            Ty::I32 => {
                let v = match r.gen_range(0..5) {
                    0 => *[i32::MAX as i64, i32::MIN as i64, 0, 1, -1].choose(r).unwrap(),
                    _ => r.gen_range(-300i64..300),
                };
                int_literal(v, Ty::I32)
            }
            Ty::I64 => {
                let v = match r.gen_range(0..5) {
                    0 => *[i64::MAX, i64::MIN, 0, 1, -1, 1 << 40].choose(r).unwrap(),
                    _ => r.gen_range(-300i64..300),
                };
                int_literal(v, Ty::I64)
            }
            Ty::Bool => if r.gen() { "true" } else { "false" }.into(),
        }
    }

    fn leaf(&mut self, ty: Ty) -> String {
        let in_scope: Vec<String> = self.vars.iter().filter(|(_, t)| *t == ty).map(|(n, _)| n.clone()).collect();
        if !in_scope.is_empty() && self.rng.gen_bool(0.7) {
            return in_scope.choose(&mut self.rng).unwrap().clone();
        }
        self.literal(ty)
    }

    pub fn expr(&mut self, ty: Ty, depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.2) {
            return self.leaf(ty);
        }
        let d = depth - 1;
        match self.rng.gen_range(0..12) {
            0 => {
                let c = self.bool_expr(d);
                format!("(if ({c}) {} else {})", self.expr(ty, d), self.expr(ty, d))
            }
            1 if self.blocks => {
                let t = self.pick_numeric();
                let v = self.expr(t, d);
                let name = self.fresh("v");
                self.vars.push((name.clone(), t));
                let body = self.expr(ty, d);
                self.vars.pop();
                format!("{{ val {name} = {v}; {body} }}")
            }
            2 => {
                let callable: Vec<usize> = (0..self.helpers.len()).filter(|&i| self.helpers[i].ret == ty).collect();
                match callable.choose(&mut self.rng) {
                    Some(&i) => {
                        let (name, p) = (self.helpers[i].name.clone(), self.helpers[i].param);
                        format!("{name}({})", self.expr(p, d))
                    }
                    None => self.expr(ty, depth),
                }
            }
            _ => match ty {
                Ty::F32 | Ty::F64 => self.float_expr(ty, d),
                Ty::I32 | Ty::I64 => self.int_expr(ty, d),
                Ty::Bool => self.bool_expr(depth),
            },
        }
    }

    fn float_expr(&mut self, ty: Ty, d: u32) -> String {
        match self.rng.gen_range(0..10) {
            0..=2 => {
                let op = *["+", "-", "*", "/"].choose(&mut self.rng).unwrap();
                format!("({} {op} {})", self.expr(ty, d), self.expr(ty, d))
            }
            3 => format!("(-{})", self.expr(ty, d)),
            4 => {
                let f = *["abs", "sqrt", "floor", "ceil", "rint"].choose(&mut self.rng).unwrap();
                format!("{f}({})", self.expr(ty, d))
            }
            5 => {
                let f = *["min", "max"].choose(&mut self.rng).unwrap();
                format!("{f}({}, {})", self.expr(ty, d), self.expr(ty, d))
            }
            6 => {
                let from = *[Ty::I32, Ty::I64, if ty == Ty::F64 { Ty::F32 } else { Ty::F64 }].choose(&mut self.rng).unwrap();
                let to = if ty == Ty::F64 { "toDouble" } else { "toFloat" };
                format!("({}).{to}", self.expr(from, d))
            }
            _ => self.leaf(ty),
        }
    }

    fn int_expr(&mut self, ty: Ty, d: u32) -> String {
        match self.rng.gen_range(0..10) {
            0..=2 => {
                let op = *["+", "-", "*", "/", "%"].choose(&mut self.rng).unwrap();
                let a = self.expr(ty, d);
                let b = if matches!(op, "/" | "%") && !self.int_division {
                    let v = self.rng.gen_range(1i64..20) * if self.rng.gen() { 1 } else { -1 };
                    int_literal(v, ty)
                } else {
                    self.expr(ty, d)
                };
                format!("({a} {op} {b})")
            }
            3 => format!("(-{})", self.expr(ty, d)),
            4 => {
                let f = *["abs", "min", "max"].choose(&mut self.rng).unwrap();
                if f == "abs" {
                    format!("abs({})", self.expr(ty, d))
                } else {
                    format!("{f}({}, {})", self.expr(ty, d), self.expr(ty, d))
                }
            }
            5 | 6 => {
                let from = *[Ty::F32, Ty::F64].choose(&mut self.rng).unwrap();
                let e = self.expr(from, d);
                match (ty, self.rng.gen_range(0..4)) {
                    (Ty::I32, 0) => format!("(({e}).toByte).toInt"),
                    (Ty::I32, 1) => format!("(({e}).toShort).toInt"),
                    (Ty::I32, _) => format!("({e}).toInt"),
                    _ => format!("({e}).toLong"),
                }
            }
            7 => {
                let other = if ty == Ty::I32 { Ty::I64 } else { Ty::I32 };
                let to = if ty == Ty::I32 { "toInt" } else { "toLong" };
                format!("({}).{to}", self.expr(other, d))
            }
            _ => self.leaf(ty),
        }
    }

    pub fn bool_expr(&mut self, depth: u32) -> String {
        if depth == 0 {
            return match self.rng.gen_range(0..3) {
                0 => self.leaf(Ty::Bool),
                _ => self.comparison(0),
            };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..8) {
            0..=2 => self.comparison(d),
            3 => {
                let t = *[Ty::F32, Ty::F64].choose(&mut self.rng).unwrap();
                let p = *["isNaN", "isFinite", "isInfinite", "isPositiveSign"].choose(&mut self.rng).unwrap();
                format!("({}).{p}", self.expr(t, d))
            }
            4 | 5 => {
                let op = *["&&", "||"].choose(&mut self.rng).unwrap();
                format!("({} {op} {})", self.bool_expr(d), self.bool_expr(d))
            }
            6 => format!("!({})", self.bool_expr(d)),
            _ => self.leaf(Ty::Bool),
        }
    }

    fn comparison(&mut self, d: u32) -> String {
        let t = *NUMERIC.choose(&mut self.rng).unwrap();
        let op = *["<", "<=", ">", ">=", "==", "!="].choose(&mut self.rng).unwrap();
        format!("({} {op} {})", self.expr(t, d), self.expr(t, d))
    }

    fn params(&mut self, n: usize) -> Vec<(String, Ty)> {
        (0..n)
            .map(|_| {
                let t = *[Ty::F64, Ty::F64, Ty::F32, Ty::I32, Ty::I64].choose(&mut self.rng).unwrap();
                (self.fresh("p"), t)
            })
            .collect()
    }

    fn signature(ps: &[(String, Ty)]) -> String {
        ps.iter().map(|(n, t)| format!("{n}: {}", t.name())).collect::<Vec<_>>().join(", ")
    }

    /// A program whose last function `f` has a contract; an inlined helper
    /// may precede it.
    pub fn program(&mut self, depth: u32) -> String {
        self.vars.clear();
        self.helpers.clear();
        let mut out = String::new();
        if self.rng.gen_bool(0.3) {
            let param = self.pick_numeric();
            let ret = self.pick_numeric();
            let name = self.fresh("h");
            let a = self.fresh("a");
            self.vars = vec![(a.clone(), param)];
            self.blocks = false;
            let pre = if self.rng.gen() { format!("require({})\n  ", self.bool_expr(1)) } else { String::new() };
            self.blocks = true;
            let body = self.expr(ret, depth.min(2));
            out.push_str(&format!("def {name}({a}: {}): {} = {{\n  {pre}{body}\n}}\n\n", param.name(), ret.name()));
            self.helpers.push(Helper { name, param, ret });
        }
        let n = self.rng.gen_range(1..=3);
        let params = self.params(n);
        let ret = *[Ty::F64, Ty::F64, Ty::F32, Ty::I32, Ty::Bool].choose(&mut self.rng).unwrap();
        self.vars = params.clone();
        let mut body = String::new();
        self.blocks = false;
        if self.rng.gen() {
            body.push_str(&format!("  require({})\n", self.bool_expr(depth.min(2))));
        }
        self.blocks = true;
        for _ in 0..self.rng.gen_range(0..=2) {
            let t = self.pick_numeric();
            let e = self.expr(t, depth);
            let name = self.fresh("l");
            body.push_str(&format!("  val {name} = {e}\n"));
            self.vars.push((name, t));
        }
        if self.rng.gen_bool(0.2) {
            body.push_str(&format!("  assert({})\n", self.bool_expr(depth.min(2))));
        }
        body.push_str(&format!("  {}\n", self.expr(ret, depth)));
        self.vars = params.clone();
        let post = if self.rng.gen_bool(0.8) {
            self.vars.push(("r".into(), ret));
            self.blocks = false;
            let p = self.bool_expr(depth.min(2));
            self.blocks = true;
            format!(".ensuring(r => {p})")
        } else {
            String::new()
        };
        out.push_str(&format!("def f({}): {} = {{\n{body}}}{post}\n", Self::signature(&params), ret.name()));
        self.vars.clear();
        out
    }

    /// A closed expression of a random type.
    pub fn closed(&mut self, depth: u32) -> (String, Ty) {
        self.vars.clear();
        self.helpers.clear();
        self.blocks = true;
        let ty = *[Ty::F64, Ty::F64, Ty::F32, Ty::F32, Ty::I32, Ty::I64, Ty::Bool].choose(&mut self.rng).unwrap();
        (self.expr(ty, depth), ty)
    }
}
