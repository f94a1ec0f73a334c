//! Reference conversions built from integer arithmetic on the bit patterns.

use fpverify::frontend::Type;
use fpverify::interp::Value;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;

#[derive(Clone, Copy)]
struct Format {
    p: u32,
    ebits: u32,
    bias: i32,
    qmin: i32,
}

const SINGLE: Format = Format { p: 24, ebits: 8, bias: 127, qmin: -149 };
const DOUBLE: Format = Format { p: 53, ebits: 11, bias: 1023, qmin: -1074 };

fn bitlen(m: u128) -> i32 {
    128 - m.leading_zeros() as i32
}

/// `(-1)^neg * m * 2^e`, or `None` for NaN and infinities.
fn decode(bits: u64, f: Format) -> Option<(bool, u128, i32)> {
    let frac_bits = f.p - 1;
    let emask = (1u64 << f.ebits) - 1;
    let neg = bits >> (f.ebits + frac_bits) & 1 == 1;
    let biased = (bits >> frac_bits) & emask;
    let frac = (bits & ((1u64 << frac_bits) - 1)) as u128;
    if biased == emask {
        return None;
    }
    if biased == 0 {
        Some((neg, frac, f.qmin))
    } else {
        Some((neg, frac | 1 << frac_bits, biased as i32 - f.bias - frac_bits as i32))
    }
}

/// Rounds `(-1)^neg * m * 2^e` to the nearest value of `f`, ties to even.
fn round_bits(neg: bool, m: u128, e: i32, f: Format) -> u64 {
    let sign = (neg as u64) << (f.ebits + f.p - 1);
    if m == 0 {
        return sign;
    }
    let mut qe = (bitlen(m) + e - f.p as i32).max(f.qmin);
    let mut q = if qe <= e {
        m << (e - qe)
    } else {
        let shift = qe - e;
        if shift > bitlen(m) {
            0
        } else {
            let q = m >> shift;
            let rem = m - (q << shift);
            let half = 1u128 << (shift - 1);
            if rem > half || (rem == half && q & 1 == 1) {
                q + 1
            } else {
                q
            }
        }
    };
    if q == 1 << f.p {
        q >>= 1;
        qe += 1;
    }
    if q == 0 {
        return sign;
    }
    let l = bitlen(q);
    let biased = qe + l - 1 + f.bias;
    let emax = (1i32 << f.ebits) - 1;
    if biased >= emax {
        return sign | (emax as u64) << (f.p - 1);
    }
    if biased >= 1 {
        let mant = (q << (f.p as i32 - l)) as u64 & ((1u64 << (f.p - 1)) - 1);
        sign | (biased as u64) << (f.p - 1) | mant
    } else {
        sign | q as u64
    }
}

/// Truncation toward zero, saturated far outside the 64-bit range.
fn trunc_int(neg: bool, m: u128, e: i32) -> i128 {
    let mag: i128 = if e >= 0 {
        if bitlen(m) + e > 100 {
            1 << 100
        } else {
            (m << e) as i128
        }
    } else if -e >= 128 {
        0
    } else {
        (m >> -e) as i128
    };
    if neg {
        -mag
    } else {
        mag
    }
}

fn wrap_to(v: i128, width: u32) -> i64 {
    let modulus = 1i128 << width;
    let r = v.rem_euclid(modulus);
    (if r >= modulus / 2 { r - modulus } else { r }) as i64
}

fn width_of(t: &Type) -> u32 {
    match t {
        Type::I8 => 8,
        Type::I16 => 16,
        Type::I32 => 32,
        Type::I64 => 64,
        other => panic!("not an integer type: {other}"),
    }
}

fn format_of(t: &Type) -> Option<Format> {
    match t {
        Type::F32 => Some(SINGLE),
        Type::F64 => Some(DOUBLE),
        _ => None,
    }
}

fn float_value(bits: u64, t: &Type) -> Value {
    match t {
        Type::F32 => Value::F32(f32::from_bits(bits as u32)),
        _ => Value::F64(f64::from_bits(bits)),
    }
}

/// JVM numeric conversion: truncate toward zero, clamp to `int` (or `long`)
/// with NaN going to zero, then wrap to the narrow width.
pub fn cast(v: &Value, to: &Type) -> Value {
    let src = match v {
        Value::F32(x) => Some((x.to_bits() as u64, SINGLE)),
        Value::F64(x) => Some((x.to_bits(), DOUBLE)),
        _ => None,
    };
    match (src, format_of(to)) {
        (Some((bits, f)), Some(g)) => match decode(bits, f) {
            Some((neg, m, e)) => float_value(round_bits(neg, m, e, g), to),
            None => {
                let nan = bits & ((1u64 << (f.p - 1)) - 1) != 0;
                let neg = bits >> (f.ebits + f.p - 1) & 1 == 1;
                let special = ((1u64 << g.ebits) - 1) << (g.p - 1) | (nan as u64) << (g.p - 2);
                float_value((neg as u64) << (g.ebits + g.p - 1) | special, to)
            }
        },
        (Some((bits, f)), None) => {
            let w = width_of(to);
            let t = match decode(bits, f) {
                Some((neg, m, e)) => trunc_int(neg, m, e),
                None if bits & ((1u64 << (f.p - 1)) - 1) != 0 => 0,
                None if bits >> (f.ebits + f.p - 1) & 1 == 1 => -(1 << 100),
                None => 1 << 100,
            };
            let (lo, hi) = if w == 64 { (i64::MIN as i128, i64::MAX as i128) } else { (i32::MIN as i128, i32::MAX as i128) };
            Value::Int { value: wrap_to(t.clamp(lo, hi), w), width: w }
        }
        (None, Some(g)) => {
            let n = v.as_i64().expect("integer source") as i128;
            float_value(round_bits(n < 0, n.unsigned_abs(), 0, g), to)
        }
        (None, None) => {
            let w = width_of(to);
            Value::Int { value: wrap_to(v.as_i64().expect("integer source") as i128, w), width: w }
        }
    }
}

pub const NUMERIC: [Type; 6] = [Type::F32, Type::F64, Type::I8, Type::I16, Type::I32, Type::I64];

/// Mixes uniform bit patterns with values near the interesting boundaries.
pub fn sample(rng: &mut impl Rng, t: &Type) -> Value {
    match t {
        Type::F64 => Value::F64(match rng.gen_range(0..6) {
            0 => f64::from_bits(rng.gen()),
            1 => rng.gen_range(-5e9..5e9),
            2 => rng.gen_range(-2e19..2e19),
            3 => rng.gen_range(-70000.0..70000.0),
            4 => rng.gen_range(-300.0..300.0),
            _ => *[f64::NAN, f64::INFINITY, f64::NEG_INFINITY, -0.0, 0.5, -0.5, 2147483647.5, -2147483648.9, 9.223372036854775807e18, 3.4028235677973366e38, 1e-320]
                .get(rng.gen_range(0..11))
                .unwrap(),
        }),
        Type::F32 => Value::F32(match rng.gen_range(0..6) {
            0 => f32::from_bits(rng.gen()),
            1 => rng.gen_range(-5e9..5e9),
            2 => rng.gen_range(-2e19..2e19),
            3 => rng.gen_range(-70000.0..70000.0),
            4 => rng.gen_range(-300.0..300.0),
            _ => *[f32::NAN, f32::INFINITY, f32::NEG_INFINITY, -0.0, 0.5, -0.5, 2147483648.0, -2147483648.0, 300.7, 1e-45]
                .get(rng.gen_range(0..10))
                .unwrap(),
        }),
        t => {
            let w = width_of(t);
            let raw: i64 = match rng.gen_range(0..3) {
                0 => rng.gen(),
                1 => rng.gen_range(-70000..70000),
                _ => (1i64 << rng.gen_range(0..63)) + rng.gen_range(-2..=2),
            };
            Value::Int { value: wrap_to(raw as i128, w), width: w }
        }
    }
}

pub fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(BigRational::zero)
}

/// Whether `a + b == s + t` holds over the rationals.
pub fn exact_sum(a: f64, b: f64, s: f64, t: f64) -> bool {
    rational(a) + rational(b) == rational(s) + rational(t)
}

/// Runs `samples` random conversions per (source, target) pair through the
/// interpreter and the reference; returns the mismatches.
pub fn cast_mismatches(samples: usize, seed: u64) -> Vec<String> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut bad = vec![];
    for from in &NUMERIC {
        for to in &NUMERIC {
            for _ in 0..samples {
                let v = sample(&mut rng, from);
                let want = cast(&v, to);
                match fpverify::interp::cast(&v, to) {
                    Some(got) if got.same(&want) => {}
                    got => bad.push(format!("{from} {v:?} -> {to}: got {got:?}, want {want:?}")),
                }
            }
        }
    }
    bad
}
