//! The host math library as a bit-level oracle.

use crate::float::Precision;
use crate::frontend::MathFn;

/// Evaluates `f` on raw bit patterns at `prec`. Float32 calls go to the
/// single-precision entry points (`sinf`, ...).
pub fn host_eval(f: MathFn, prec: Precision, args: &[u64]) -> u64 {
    match prec {
        Precision::F64 => {
            let x = f64::from_bits(args[0]);
            let y = args.get(1).map(|b| f64::from_bits(*b)).unwrap_or(0.0);
            host_f64(f, x, y).to_bits()
        }
        Precision::F32 => {
            let x = f32::from_bits(args[0] as u32);
            let y = args.get(1).map(|b| f32::from_bits(*b as u32)).unwrap_or(0.0);
            host_f32(f, x, y).to_bits() as u64
        }
    }
}

pub fn host_f64(f: MathFn, x: f64, y: f64) -> f64 {
    match f {
        MathFn::Cos => x.cos(),
        MathFn::Sin => x.sin(),
        MathFn::Tan => x.tan(),
        MathFn::Asin => x.asin(),
        MathFn::Acos => x.acos(),
        MathFn::Atan => x.atan(),
        MathFn::Atan2 => x.atan2(y),
        MathFn::Hypot => x.hypot(y),
        MathFn::Cbrt => x.cbrt(),
        MathFn::Pow => x.powf(y),
        MathFn::Exp => x.exp(),
        MathFn::Expm1 => x.exp_m1(),
        MathFn::Log => x.ln(),
        MathFn::Log1p => x.ln_1p(),
        MathFn::Log10 => x.log10(),
        MathFn::Sinh => x.sinh(),
        MathFn::Cosh => x.cosh(),
        MathFn::Tanh => x.tanh(),
    }
}

pub fn host_f32(f: MathFn, x: f32, y: f32) -> f32 {
    match f {
        MathFn::Cos => x.cos(),
        MathFn::Sin => x.sin(),
        MathFn::Tan => x.tan(),
        MathFn::Asin => x.asin(),
        MathFn::Acos => x.acos(),
        MathFn::Atan => x.atan(),
        MathFn::Atan2 => x.atan2(y),
        MathFn::Hypot => x.hypot(y),
        MathFn::Cbrt => x.cbrt(),
        MathFn::Pow => x.powf(y),
        MathFn::Exp => x.exp(),
        MathFn::Expm1 => x.exp_m1(),
        MathFn::Log => x.ln(),
        MathFn::Log1p => x.ln_1p(),
        MathFn::Log10 => x.log10(),
        MathFn::Sinh => x.sinh(),
        MathFn::Cosh => x.cosh(),
        MathFn::Tanh => x.tanh(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argument_order() {
        let r = f64::from_bits(host_eval(MathFn::Atan2, Precision::F64, &[1.0f64.to_bits(), 0.0f64.to_bits()]));
        assert_eq!(r, std::f64::consts::FRAC_PI_2);
        let r = f64::from_bits(host_eval(MathFn::Pow, Precision::F64, &[2.0f64.to_bits(), 10.0f64.to_bits()]));
        assert_eq!(r, 1024.0);
        let r = f32::from_bits(host_eval(MathFn::Exp, Precision::F32, &[0f32.to_bits() as u64]) as u32);
        assert_eq!(r, 1.0);
    }
}
