//! Binary floating-point helpers shared by the frontend, the SMT encoder and
//! the report writer: precisions, exact hex-float parsing/printing and
//! directed-rounding utilities.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    /// Exponent width in bits.
    pub fn ebits(self) -> u32 {
        match self {
            Precision::F32 => 8,
            Precision::F64 => 11,
        }
    }

    /// Significand width including the hidden bit.
    pub fn sbits(self) -> u32 {
        match self {
            Precision::F32 => 24,
            Precision::F64 => 53,
        }
    }

    pub fn width(self) -> u32 {
        self.ebits() + self.sbits()
    }

    pub fn smt_sort(self) -> String {
        format!("(_ FloatingPoint {} {})", self.ebits(), self.sbits())
    }

    pub fn suffix(self) -> &'static str {
        match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        }
    }

    fn emin(self) -> i64 {
        match self {
            Precision::F32 => -126,
            Precision::F64 => -1022,
        }
    }

    fn bias(self) -> i64 {
        match self {
            Precision::F32 => 127,
            Precision::F64 => 1023,
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.suffix())
    }
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "f32" | "float" | "float32" => Ok(Precision::F32),
            "f64" | "double" | "float64" => Ok(Precision::F64),
            other => Err(format!("unknown precision `{other}` (expected f32 or f64)")),
        }
    }
}

/// Round `mant * 2^exp` (plus a sticky flag for discarded nonzero low bits)
/// to the nearest value of `prec`, ties to even. Returns the raw bit pattern
/// without a sign bit.
pub fn round_to_bits(mant: u128, exp: i64, sticky: bool, prec: Precision) -> u64 {
    if mant == 0 {
        return 0;
    }
    let mbits = i64::from(prec.sbits()) - 1;
    let nbits = 128 - i64::from(mant.leading_zeros());
    let top = exp + nbits - 1;
    let lsb = if top >= prec.emin() { top - mbits } else { prec.emin() - mbits };
    let shift = lsb - exp;
    let mut q: u128;
    let mut lsb_exp = lsb;
    if shift <= 0 {
        q = mant << (-shift) as u32;
    } else {
        let (quot, rem, width) = if shift >= 128 {
            (0u128, mant, 128u32)
        } else {
            (mant >> shift as u32, mant & ((1u128 << shift as u32) - 1), shift as u32)
        };
        q = quot;
        let half = if width >= 128 { None } else { Some(1u128 << (width - 1)) };
        let round_up = match half {
            // remainder occupies all 128 bits: strictly below half of 2^128
            None => false,
            Some(h) => rem > h || (rem == h && (sticky || q & 1 == 1)),
        };
        if round_up {
            q += 1;
        }
    }
    if q >> (mbits + 1) != 0 {
        q >>= 1;
        lsb_exp += 1;
    }
    let hidden = 1u128 << mbits;
    let max_biased = (1i64 << prec.ebits()) - 1;
    if q >= hidden {
        let biased = lsb_exp + mbits + prec.bias();
        if biased >= max_biased {
            return (max_biased as u64) << mbits;
        }
        ((biased as u64) << mbits) | (q as u64 & (hidden as u64 - 1))
    } else {
        q as u64
    }
}

/// Parse a hexadecimal float literal body such as `0x1.8p3` or `-0x1p-1074`.
/// The optional `f`/`F` suffix must be stripped by the caller.
pub fn parse_hex_float(text: &str, prec: Precision) -> Option<u64> {
    let (neg, rest) = match text.as_bytes().first()? {
        b'-' => (true, &text[1..]),
        b'+' => (false, &text[1..]),
        _ => (false, text),
    };
    let rest = rest.strip_prefix("0x").or_else(|| rest.strip_prefix("0X"))?;
    let (mantissa, exponent) = rest.split_once(['p', 'P'])?;
    let exponent: i64 = exponent.parse().ok()?;
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let mut m: u128 = 0;
    let mut exp = exponent;
    let mut sticky = false;
    let mut significant = 0u32;
    for (i, c) in int_part.chars().chain(frac_part.chars()).enumerate() {
        let d = c.to_digit(16)? as u128;
        let in_frac = i >= int_part.len();
        if significant < 30 {
            m = (m << 4) | d;
            if m != 0 {
                significant += 1;
            }
            if in_frac {
                exp -= 4;
            }
        } else {
            sticky |= d != 0;
            if !in_frac {
                exp += 4;
            }
        }
    }
    let bits = round_to_bits(m, exp, sticky, prec);
    let sign = if neg { 1u64 << (prec.width() - 1) } else { 0 };
    Some(bits | sign)
}

/// Java-style hexadecimal rendering (`0x1.8p3`, `0x0.0000000000001p-1022`).
pub fn hex_f64(x: f64) -> String {
    hex_bits(x.to_bits(), Precision::F64)
}

pub fn hex_f32(x: f32) -> String {
    hex_bits(u64::from(x.to_bits()), Precision::F32)
}

fn hex_bits(bits: u64, prec: Precision) -> String {
    let mbits = prec.sbits() - 1;
    let ebits = prec.ebits();
    let sign = bits >> (mbits + ebits) & 1 == 1;
    let biased = (bits >> mbits) & ((1 << ebits) - 1);
    let frac = bits & ((1u64 << mbits) - 1);
    let s = if sign { "-" } else { "" };
    if biased == (1 << ebits) - 1 {
        return if frac != 0 { "NaN".into() } else { format!("{s}Infinity") };
    }
    if biased == 0 && frac == 0 {
        return format!("{s}0x0.0p0");
    }
    // pad the fraction to a whole number of nibbles
    let pad = (4 - mbits % 4) % 4;
    let digits = mbits.div_ceil(4) as usize;
    let mut hex = format!("{:0width$x}", frac << pad, width = digits);
    while hex.len() > 1 && hex.ends_with('0') {
        hex.pop();
    }
    if biased == 0 {
        format!("{s}0x0.{hex}p{}", prec.emin())
    } else {
        format!("{s}0x1.{hex}p{}", biased as i64 - prec.bias())
    }
}

/// Shortest decimal that reads back to the same value.
pub fn decimal_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "Infinity".into() } else { "-Infinity".into() }
    } else {
        format!("{x:?}")
    }
}

pub fn decimal_f32(x: f32) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "Infinity".into() } else { "-Infinity".into() }
    } else {
        format!("{x:?}")
    }
}

/// SMT-LIB `(fp sign exponent significand)` literal for a raw bit pattern.
pub fn smt_fp_literal(bits: u64, prec: Precision) -> String {
    let mbits = prec.sbits() - 1;
    let ebits = prec.ebits();
    let sign = (bits >> (mbits + ebits)) & 1;
    let exp = (bits >> mbits) & ((1 << ebits) - 1);
    let frac = bits & ((1u64 << mbits) - 1);
    if exp == (1 << ebits) - 1 && frac != 0 {
        return format!("(_ NaN {} {})", ebits, prec.sbits());
    }
    format!(
        "(fp #b{sign} #b{exp:0ew$b} #b{frac:0mw$b})",
        ew = ebits as usize,
        mw = mbits as usize
    )
}

/// JVM `Math.min`: NaN if either operand is NaN, and -0.0 below +0.0.
pub fn jvm_min_f64(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else if a == 0.0 && b == 0.0 {
        if a.is_sign_negative() { a } else { b }
    } else if a <= b {
        a
    } else {
        b
    }
}

pub fn jvm_max_f64(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else if a == 0.0 && b == 0.0 {
        if a.is_sign_positive() { a } else { b }
    } else if a >= b {
        a
    } else {
        b
    }
}

pub fn jvm_min_f32(a: f32, b: f32) -> f32 {
    jvm_min_f64(f64::from(a), f64::from(b)) as f32
}

pub fn jvm_max_f32(a: f32, b: f32) -> f32 {
    jvm_max_f64(f64::from(a), f64::from(b)) as f32
}
