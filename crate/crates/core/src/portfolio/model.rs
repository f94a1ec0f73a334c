//! Decoding of `get-model` output.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::float::{decimal_f32, decimal_f64, hex_f32, hex_f64, Precision};
use crate::sexp::{parse_all, Sexp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot decode model fragment `{fragment}`: {message}")]
pub struct ModelParseError {
    pub fragment: String,
    pub message: String,
}

fn perr(fragment: &Sexp, message: impl Into<String>) -> ModelParseError {
    ModelParseError { fragment: fragment.to_string(), message: message.into() }
}

/// A concrete value from a model. NaNs are stored as the canonical quiet NaN.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "sort", rename_all = "lowercase")]
pub enum ModelValue {
    Float { bits: u64, prec: Precision },
    /// Two's-complement value, sign-extended.
    BitVec { value: i64, width: u32 },
    Bool { value: bool },
    /// An element of an abstract sort, kept verbatim.
    Abstract { text: String },
}

impl ModelValue {
    pub fn float(x: f64) -> Self {
        ModelValue::Float { bits: canonical(x.to_bits(), Precision::F64), prec: Precision::F64 }
    }

    pub fn float32(x: f32) -> Self {
        ModelValue::Float { bits: u64::from(x.to_bits()), prec: Precision::F32 }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ModelValue::Float { bits, prec: Precision::F64 } => Some(f64::from_bits(*bits)),
            ModelValue::Float { bits, prec: Precision::F32 } => Some(f32::from_bits(*bits as u32) as f64),
            _ => None,
        }
    }

    /// Decimal shortest round-trip form.
    pub fn decimal(&self) -> String {
        match self {
            ModelValue::Float { bits, prec: Precision::F64 } => decimal_f64(f64::from_bits(*bits)),
            ModelValue::Float { bits, prec: Precision::F32 } => decimal_f32(f32::from_bits(*bits as u32)),
            ModelValue::BitVec { value, .. } => value.to_string(),
            ModelValue::Bool { value } => value.to_string(),
            ModelValue::Abstract { text } => text.clone(),
        }
    }

    /// Hex-float form for floats, the decimal form otherwise.
    pub fn hex(&self) -> String {
        match self {
            ModelValue::Float { bits, prec: Precision::F64 } => hex_f64(f64::from_bits(*bits)),
            ModelValue::Float { bits, prec: Precision::F32 } => hex_f32(f32::from_bits(*bits as u32)),
            other => other.decimal(),
        }
    }
}

impl fmt::Display for ModelValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelValue::Float { .. } => write!(f, "{} ({})", self.decimal(), self.hex()),
            other => f.write_str(&other.decimal()),
        }
    }
}

fn canonical(bits: u64, prec: Precision) -> u64 {
    let mbits = prec.sbits() - 1;
    let emask = (1u64 << prec.ebits()) - 1;
    if (bits >> mbits) & emask == emask && bits & ((1u64 << mbits) - 1) != 0 {
        emask << mbits | 1u64 << (mbits - 1)
    } else {
        bits
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Model {
    pub values: BTreeMap<String, ModelValue>,
}

impl Model {
    pub fn get(&self, symbol: &str) -> Option<&ModelValue> {
        self.values.get(symbol)
    }
}

/// Bits of a bit-vector literal: `#b...`, `#x...` or `(_ bvN w)`.
fn bv_literal(t: &Sexp) -> Option<(u128, u32)> {
    match t {
        Sexp::Atom(a) => {
            if let Some(b) = a.strip_prefix("#b") {
                Some((u128::from_str_radix(b, 2).ok()?, b.len() as u32))
            } else if let Some(h) = a.strip_prefix("#x") {
                Some((u128::from_str_radix(h, 16).ok()?, 4 * h.len() as u32))
            } else {
                None
            }
        }
        Sexp::List(v) if v.len() == 3 && v[0].as_atom() == Some("_") => {
            let n = v[1].as_atom()?.strip_prefix("bv")?.parse().ok()?;
            let w = v[2].as_atom()?.parse().ok()?;
            Some((n, w))
        }
        _ => None,
    }
}

fn prec_of(e: u32, s: u32) -> Option<Precision> {
    match (e, s) {
        (8, 24) => Some(Precision::F32),
        (11, 53) => Some(Precision::F64),
        _ => None,
    }
}

/// Decodes a single value term.
pub fn decode_value(t: &Sexp) -> Result<ModelValue, ModelParseError> {
    if let Some(a) = t.as_atom() {
        if a == "true" || a == "false" {
            return Ok(ModelValue::Bool { value: a == "true" });
        }
    }
    if let Some((n, w)) = bv_literal(t) {
        if w == 0 || w > 64 {
            return Err(perr(t, "unsupported bit-vector width"));
        }
        let value = ((n as u64) << (64 - w)) as i64 >> (64 - w);
        return Ok(ModelValue::BitVec { value, width: w });
    }
    let Some(items) = t.as_list() else {
        return Ok(ModelValue::Abstract { text: t.to_string() });
    };
    let head = items.first().and_then(Sexp::as_atom);
    match head {
        Some("fp") if items.len() == 4 => {
            let mut parts = vec![];
            for x in &items[1..] {
                parts.push(bv_literal(x).ok_or_else(|| perr(t, "expected bit-vector fields"))?);
            }
            let (sign, _) = parts[0];
            let (exp, ew) = parts[1];
            let (frac, fw) = parts[2];
            let prec = prec_of(ew, fw + 1).ok_or_else(|| perr(t, "unsupported floating-point format"))?;
            let bits = (sign as u64) << (ew + fw) | (exp as u64) << fw | frac as u64;
            Ok(ModelValue::Float { bits: canonical(bits, prec), prec })
        }
        Some("_") if items.len() == 4 => {
            let e: u32 = items[2].as_atom().and_then(|x| x.parse().ok()).ok_or_else(|| perr(t, "bad exponent width"))?;
            let s: u32 = items[3].as_atom().and_then(|x| x.parse().ok()).ok_or_else(|| perr(t, "bad significand width"))?;
            let prec = prec_of(e, s).ok_or_else(|| perr(t, "unsupported floating-point format"))?;
            let mbits = s - 1;
            let inf = ((1u64 << e) - 1) << mbits;
            let sign = 1u64 << (e + mbits);
            let bits = match items[1].as_atom() {
                Some("+zero") => 0,
                Some("-zero") => sign,
                Some("+oo") => inf,
                Some("-oo") => sign | inf,
                Some("NaN") => inf | 1u64 << (mbits - 1),
                _ => return Err(perr(t, "unknown indexed constant")),
            };
            Ok(ModelValue::Float { bits, prec })
        }
        // `(as @name Sort)` style abstract values.
        Some("as") => Ok(ModelValue::Abstract { text: t.to_string() }),
        _ => Err(perr(t, "unrecognized value")),
    }
}

/// Decodes every nullary `define-fun` in solver output. Leading status
/// lines and non-model expressions are skipped; function definitions with
/// arguments are ignored.
pub fn parse_model(text: &str) -> Result<Model, ModelParseError> {
    let exprs = parse_all(text).map_err(|e| ModelParseError { fragment: text.chars().take(80).collect(), message: e.to_string() })?;
    let mut model = Model::default();
    let mut visit = |d: &Sexp| -> Result<(), ModelParseError> {
        let Some(v) = d.as_list() else { return Ok(()) };
        if v.len() == 5 && v[0].as_atom() == Some("define-fun") && v[2].as_list().is_some_and(|a| a.is_empty()) {
            let name = v[1].as_atom().ok_or_else(|| perr(d, "bad symbol"))?;
            let name = name.trim_matches('|').to_string();
            model.values.insert(name, decode_value(&v[4])?);
        }
        Ok(())
    };
    for e in &exprs {
        match e.as_list() {
            Some(items) if items.first().and_then(Sexp::as_atom) == Some("define-fun") => visit(e)?,
            Some(items) => {
                for d in items {
                    visit(d)?;
                }
            }
            None => {}
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(text: &str) -> ModelValue {
        decode_value(&parse_all(text).unwrap()[0]).unwrap()
    }

    #[test]
    fn fp_triples_and_indexed_constants() {
        assert_eq!(one("(fp #b0 #b01111111111 #x0000000000000)").as_f64(), Some(1.0));
        let z = one("(fp #b1 #b00000000000 #b0000000000000000000000000000000000000000000000000000)");
        assert_eq!(z, ModelValue::Float { bits: (-0.0f64).to_bits(), prec: Precision::F64 });
        assert!(one("(_ NaN 11 53)").as_f64().unwrap().is_nan());
        assert_eq!(one("(_ -oo 8 24)"), ModelValue::Float { bits: f32::NEG_INFINITY.to_bits() as u64, prec: Precision::F32 });
        assert_eq!(one("(_ +zero 11 53)").as_f64(), Some(0.0));
        assert_eq!(one("(_ +oo 11 53)").as_f64(), Some(f64::INFINITY));
    }

    #[test]
    fn nan_payloads_collapse() {
        let a = one("(fp #b1 #b11111111111 #x0000000000001)");
        assert_eq!(a, ModelValue::float(f64::NAN));
    }

    #[test]
    fn bit_vectors_are_twos_complement() {
        assert_eq!(one("#xffffffff"), ModelValue::BitVec { value: -1, width: 32 });
        assert_eq!(one("#b0101"), ModelValue::BitVec { value: 5, width: 4 });
        assert_eq!(one("(_ bv4294967295 32)"), ModelValue::BitVec { value: -1, width: 32 });
    }

    #[test]
    fn whole_models() {
        let z3 = "sat\n(\n  (define-fun p1_errors () (_ BitVec 32)\n    #x03a66ef7)\n  (define-fun exp.f64 ((x!0 (_ FloatingPoint 11 53))) (_ FloatingPoint 11 53) x!0)\n  (define-fun t () S_T\n    S_T!val!0)\n)";
        let m = parse_model(z3).unwrap();
        assert_eq!(m.get("p1_errors"), Some(&ModelValue::BitVec { value: 0x03a66ef7, width: 32 }));
        assert!(matches!(m.get("t"), Some(ModelValue::Abstract { .. })));
        assert_eq!(m.values.len(), 2);
        let bzla = "sat\n(\n  (define-fun b () Bool true)\n  (define-fun s () S_T (as @const_2 S_T))\n)";
        let m = parse_model(bzla).unwrap();
        assert_eq!(m.get("b"), Some(&ModelValue::Bool { value: true }));
        assert!(parse_model("sat\n((define-fun x () Foo (weird 1)))").is_err());
    }
}
