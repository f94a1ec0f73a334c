//! Stratified fuzzing of contracts against an oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;

use crate::float::Precision;
use crate::frontend::MathFn;

use super::{contract, host_eval, Fp, MathContract};

/// Stored violations per report; the count is always exact.
pub const VIOLATION_CAP: usize = 64;
const CHUNK: usize = 1 << 14;
/// Share of random draws that are subnormal.
pub const SUBNORMAL_RATE: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub args: Vec<u64>,
    pub observed: u64,
    pub clause: String,
    #[serde(skip)]
    pub prec: Option<Precision>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FuzzReport {
    pub function: MathFn,
    pub prec: Precision,
    /// Grid points plus random draws.
    pub samples: u64,
    pub grid_points: u64,
    pub subnormal_draws: u64,
    pub violation_count: u64,
    pub violations: Vec<Violation>,
    pub seed: u64,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fp = Fp(self.prec.unwrap_or(Precision::F64));
        let args: Vec<String> = self.args.iter().map(|a| format!("{:e}", fp.to_f64(*a))).collect();
        write!(f, "f({}) = {:e} violates {}", args.join(", "), fp.to_f64(self.observed), self.clause)
    }
}

/// The deterministic special-value grid: signed zeros, infinities, NaN,
/// ±1, extreme magnitudes and the first hundred multiples of π and π/2.
pub fn special_grid(prec: Precision) -> Vec<u64> {
    let fp = Fp(prec);
    let mut v: Vec<f64> = vec![0.0, f64::INFINITY, f64::NAN, 1.0];
    let (min_sub, min_normal, max) = match prec {
        Precision::F64 => (f64::from_bits(1), f64::MIN_POSITIVE, f64::MAX),
        Precision::F32 => (f32::from_bits(1) as f64, f32::MIN_POSITIVE as f64, f32::MAX as f64),
    };
    v.extend([min_sub, min_normal, max]);
    let mut bits: Vec<u64> = vec![];
    for x in v {
        bits.push(fp.from_f64(x));
        if !x.is_nan() {
            bits.push(fp.from_f64(-x));
        }
    }
    for k in 1..=100 {
        let pi = match prec {
            Precision::F64 => std::f64::consts::PI,
            Precision::F32 => std::f32::consts::PI as f64,
        };
        for m in [pi * k as f64, pi * k as f64 / 2.0] {
            let b = fp.from_f64(m);
            if !bits.contains(&b) {
                bits.push(b);
                bits.push(fp.neg(b));
            }
        }
    }
    bits
}

/// One random input: 10% subnormal, otherwise a uniformly chosen normal
/// binade with a uniform significand and sign.
fn draw(rng: &mut ChaCha8Rng, prec: Precision) -> (u64, bool) {
    let mbits = prec.sbits() - 1;
    let max_exp = (1u64 << prec.ebits()) - 2;
    let sign = (rng.gen::<bool>() as u64) << (prec.width() - 1);
    let mant = rng.gen::<u64>() & ((1u64 << mbits) - 1);
    if rng.gen_bool(SUBNORMAL_RATE) {
        (sign | mant.max(1), true)
    } else {
        let e = rng.gen_range(1..=max_exp);
        (sign | (e << mbits) | mant, false)
    }
}

struct Tally {
    count: u64,
    kept: Vec<Violation>,
    subnormal: u64,
}

fn check(c: &MathContract, oracle: &(dyn Fn(&[u64]) -> u64 + Sync), args: &[u64], t: &mut Tally) {
    let r = oracle(args);
    let bad = c.violations(args, r);
    if !bad.is_empty() {
        t.count += 1;
        if t.kept.len() < VIOLATION_CAP {
            t.kept.push(Violation {
                args: args.to_vec(),
                observed: r,
                clause: bad.iter().map(|c| c.label.as_str()).collect::<Vec<_>>().join("; "),
                prec: Some(c.prec),
            });
        }
    }
}

/// Checks every enabled clause of `contract` on the special grid (cross
/// product for binary functions) and on `n` random draws.
pub fn fuzz_contract(contract: &MathContract, oracle: &(dyn Fn(&[u64]) -> u64 + Sync), n: u64, seed: u64) -> FuzzReport {
    let prec = contract.prec;
    let grid = special_grid(prec);
    let mut tally = Tally { count: 0, kept: vec![], subnormal: 0 };
    let mut grid_points = 0u64;
    if contract.arity == 1 {
        for &x in &grid {
            check(contract, oracle, &[x], &mut tally);
            grid_points += 1;
        }
    } else {
        for &x in &grid {
            for &y in &grid {
                check(contract, oracle, &[x, y], &mut tally);
                grid_points += 1;
            }
        }
    }
    let chunks = (n as usize).div_ceil(CHUNK);
    let parts: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(ci as u64);
            let len = CHUNK.min(n as usize - ci * CHUNK);
            let mut t = Tally { count: 0, kept: vec![], subnormal: 0 };
            let mut args = [0u64; 2];
            for _ in 0..len {
                for a in args.iter_mut().take(contract.arity) {
                    let (b, sub) = draw(&mut rng, prec);
                    *a = b;
                    t.subnormal += sub as u64;
                }
                check(contract, oracle, &args[..contract.arity], &mut t);
            }
            t
        })
        .collect();
    for p in parts {
        tally.count += p.count;
        tally.subnormal += p.subnormal;
        for v in p.kept {
            if tally.kept.len() < VIOLATION_CAP {
                tally.kept.push(v);
            }
        }
    }
    FuzzReport {
        function: contract.function,
        prec,
        samples: grid_points + n,
        grid_points,
        subnormal_draws: tally.subnormal,
        violation_count: tally.count,
        violations: tally.kept,
        seed,
    }
}

/// Seed used for `f` when fuzzing every function from one base seed.
pub fn function_seed(base: u64, f: MathFn) -> u64 {
    let i = MathFn::ALL.iter().position(|g| *g == f).unwrap_or(0) as u64;
    base ^ (i + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Fuzzes the shipped contracts of `functions` against the host library.
pub fn fuzz_host(functions: &[MathFn], prec: Precision, n: u64, seed: u64) -> Vec<FuzzReport> {
    functions
        .par_iter()
        .map(|&f| {
            let oracle = move |a: &[u64]| host_eval(f, prec, a);
            fuzz_contract(contract(f, prec), &oracle, n, function_seed(seed, f))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathspec::ClauseKind;

    fn host(f: MathFn, prec: Precision) -> impl Fn(&[u64]) -> u64 + Sync {
        move |a: &[u64]| host_eval(f, prec, a)
    }

    #[test]
    fn deterministic_and_oversampled() {
        let c = contract(MathFn::Exp, Precision::F64);
        let a = fuzz_contract(c, &host(MathFn::Exp, Precision::F64), 50_000, 7);
        let b = fuzz_contract(c, &host(MathFn::Exp, Precision::F64), 50_000, 7);
        assert_eq!(a.subnormal_draws, b.subnormal_draws);
        assert_eq!(a.violation_count, b.violation_count);
        assert!(a.subnormal_draws as f64 >= 0.05 * 50_000.0);
        assert!(a.passed(), "{:?}", a.violations);
    }

    #[test]
    fn corrupted_sin_range_is_caught_on_the_grid() {
        let mut c = contract(MathFn::Sin, Precision::F64).clone();
        for cl in &mut c.clauses {
            if let ClauseKind::Range { lo, hi, .. } = &mut cl.kind {
                *lo = Some((-0.5f64).to_bits());
                *hi = Some(0.5f64.to_bits());
            }
        }
        let r = fuzz_contract(&c, &host(MathFn::Sin, Precision::F64), 1, 1);
        let half_pi = std::f64::consts::FRAC_PI_2.to_bits();
        assert!(r.violations.iter().any(|v| v.args == [half_pi]));
        assert!(r.violations.iter().all(|v| v.clause.contains("range")));
    }

    #[test]
    fn exp_at_infinity() {
        let c = contract(MathFn::Exp, Precision::F64);
        let inf = f64::INFINITY.to_bits();
        let r = host_eval(MathFn::Exp, Precision::F64, &[inf]);
        assert_eq!(r, inf);
        assert!(c.violations(&[inf], r).is_empty());
        assert!(!c.violations(&[inf], 0).is_empty());
    }

    #[test]
    fn grid_contents() {
        let g = special_grid(Precision::F64);
        assert!(g.contains(&(-0.0f64).to_bits()));
        assert!(g.contains(&(100.0 * std::f64::consts::PI).to_bits()));
        assert!(g.contains(&1));
        assert_eq!(g.iter().filter(|b| f64::from_bits(**b).is_nan()).count(), 1);
    }
}
