mod common;

use std::collections::BTreeMap;

use anyhow::Result;
use fpverify::checks::{inject_checks, CheckConfig};
use fpverify::frontend::{load, Type, TypedProgram};
use fpverify::interp::{
    cast, classify_counterexample, evaluate, evaluate_with, parse_args, run_contract, ClassificationKind, Limits, RuntimeFailure, Value,
};
use fpverify::portfolio::{Model, ModelValue};
use fpverify::vcgen::{generate_vcs, VcKind, VerificationCondition};
use proptest::prelude::*;

fn typed(src: &str) -> TypedProgram {
    load("t.fpl", src).unwrap_or_else(|d| panic!("{d:?}"))
}

fn checked(src: &str) -> TypedProgram {
    inject_checks(&typed(src), &CheckConfig::default())
}

fn postcondition(p: &TypedProgram) -> VerificationCondition {
    generate_vcs(p).unwrap().into_iter().find(|vc| vc.kind == VcKind::Postcondition).expect("a postcondition VC")
}

#[test]
fn fixed_cast_table() {
    let table = [
        (Value::F64(f64::NAN), Type::I32, Value::int(0)),
        (Value::F64(1e10), Type::I32, Value::int(i32::MAX as i64)),
        (Value::F64(-1e10), Type::I32, Value::int(i32::MIN as i64)),
        (Value::F32(300.7), Type::I8, Value::Int { value: 44, width: 8 }),
        (Value::F32(f32::NAN), Type::I64, Value::long(0)),
        (Value::F64(f64::INFINITY), Type::I64, Value::long(i64::MAX)),
        (Value::F64(-0.9), Type::I16, Value::Int { value: 0, width: 16 }),
        (Value::F64(1e10), Type::I8, Value::Int { value: -1, width: 8 }),
        (Value::int(-129), Type::I8, Value::Int { value: 127, width: 8 }),
        (Value::long(i64::MAX), Type::F32, Value::F32(9.223372e18)),
    ];
    for (v, t, want) in table {
        let got = cast(&v, &t).unwrap();
        assert!(got.same(&want), "{v:?} -> {t}: {got:?}");
        assert!(common::oracle::cast(&v, &t).same(&want), "reference disagrees on {v:?} -> {t}");
    }
}

#[test]
fn random_casts_match_reference() {
    let bad = common::oracle::cast_mismatches(20_000, 11);
    assert!(bad.is_empty(), "{} mismatches, first: {}", bad.len(), bad[0]);
}

#[test]
fn nan_compares_false() -> Result<()> {
    let p = typed(
        "def f(x: Double, y: Double): Boolean = x < y || x <= y || x > y || x >= y || x == y\ndef g(x: Double, y: Double): Boolean = x != y",
    );
    for (a, b) in [(f64::NAN, 1.0), (1.0, f64::NAN), (f64::NAN, f64::NAN)] {
        assert_eq!(evaluate(&p, "f", &[Value::F64(a), Value::F64(b)])?, Value::Bool(false));
        assert_eq!(evaluate(&p, "g", &[Value::F64(a), Value::F64(b)])?, Value::Bool(true));
    }
    Ok(())
}

#[test]
fn signed_zero() -> Result<()> {
    let p = typed(
        "def eq(): Boolean = 0.0 == -0.0\ndef sign(): Boolean = (-0.0).isPositiveSign\ndef inv(): Double = 1.0 / -0.0\ndef m(): Double = min(0.0, -0.0)",
    );
    assert_eq!(evaluate(&p, "eq", &[])?, Value::Bool(true));
    assert_eq!(evaluate(&p, "sign", &[])?, Value::Bool(false));
    assert!(evaluate(&p, "inv", &[])?.same(&Value::F64(f64::NEG_INFINITY)));
    assert!(evaluate(&p, "m", &[])?.same(&Value::F64(-0.0)));
    Ok(())
}

#[test]
fn stormday_at_the_reported_model() -> Result<()> {
    let p = typed(&common::fixture("stormday.fpl"));
    let args = [Value::int(1073741832), Value::int(730144766)];
    let v = evaluate(&p, "accuracyPercent", &args)?;
    assert!(v.same(&Value::F32(-2.9586256E-5)), "{v:?}");
    assert_eq!(v.to_string().to_uppercase(), "-2.9586256E-5");
    let run = run_contract(&p, "accuracyPercent", &args)?;
    assert_eq!((run.precondition, run.postcondition), (Some(true), Some(false)));
    let fixed = typed(&common::fixture("stormday_fixed.fpl"));
    let run = run_contract(&fixed, "accuracyPercent", &args)?;
    assert_eq!(run.postcondition, Some(true));
    Ok(())
}

fn host_gradient(prediction: f64, label: f64) -> f64 {
    -4.0 * label / (1.0 + (2.0 * label * prediction).exp())
}

#[test]
fn gradient_counterexample_is_confirmed() {
    let p = checked(&common::fixture("gradient.fpl"));
    let vc = postcondition(&p);
    assert!(vc.uses_opaque);
    let mut values = BTreeMap::new();
    for i in &vc.inputs {
        let x = if i.symbol.ends_with("label") { 1.7e308 } else { 0.0 };
        values.insert(i.symbol.clone(), ModelValue::float(x));
    }
    let c = classify_counterexample(&p, &vc, &Model { values }).unwrap();
    assert_eq!(c.kind, ClassificationKind::Confirmed);
    assert_eq!(c.witness, Some(false));
    assert!(host_gradient(0.0, 1.7e308).is_nan());
    assert!(c.result.unwrap().as_f64().unwrap().is_nan());
}

#[test]
fn sine_counterexample_is_spurious() {
    let p = checked(&common::fixture("spurious_sin.fpl"));
    let vc = postcondition(&p);
    let c = classify_counterexample(&p, &vc, &Model::default()).unwrap();
    assert_eq!(c.kind, ClassificationKind::Spurious);
    assert_eq!(c.witness, Some(true));
    assert!(0.5f64.sin() > 0.4);
}

#[test]
fn rewritten_modulo() -> Result<()> {
    let p = typed(&common::fixture("modulo_rewritten.fpl"));
    assert_eq!(evaluate(&p, "rem", &[])?, Value::F64(1.0));
    assert_eq!(14.5 - 1.5 * (14.5f64 / 1.5).floor(), 1.0);
    Ok(())
}

#[test]
fn argument_parsing() {
    let params: Vec<(String, Type)> = [Type::F64, Type::F32, Type::I64, Type::Bool, Type::Tuple(vec![Type::I32, Type::F64])]
        .into_iter()
        .enumerate()
        .map(|(i, t)| (format!("a{i}"), t))
        .collect();
    let vs = parse_args("-0x1.8p1, NaN, 3L, true, (7, -Infinity)", &params).unwrap();
    assert!(vs[0].same(&Value::F64(-3.0)));
    assert!(vs[1].same(&Value::F32(f32::NAN)));
    assert_eq!(vs[2], Value::long(3));
    assert_eq!(vs[3], Value::Bool(true));
    assert!(vs[4].same(&Value::Tuple(vec![Value::int(7), Value::F64(f64::NEG_INFINITY)])));
    assert!(parse_args("1, 2", &params).is_err());
    assert!(parse_args("3000000000", &[("x".into(), Type::I32)]).is_err());
}

#[test]
fn runtime_failures() {
    let p = typed(
        "def down(n: Int): Int = {\n  require(n >= 0)\n  if (n == 0) 0 else down(n - 1)\n}.ensuring(r => r == 0)\ndef div(a: Int, b: Int): Int = a / b",
    );
    let shallow = Limits { max_depth: 10 };
    assert_eq!(evaluate_with(&p, "down", &[Value::int(50)], shallow), Err(RuntimeFailure::DepthExceeded(10)));
    assert_eq!(evaluate(&p, "down", &[Value::int(200_000)]), Ok(Value::int(0)));
    assert!(matches!(evaluate(&p, "div", &[Value::int(1), Value::int(0)]), Err(RuntimeFailure::DivisionByZero { .. })));
    assert!(matches!(
        evaluate(&p, "down", &[Value::int(-1)]),
        Err(RuntimeFailure::ContractViolation { clause: fpverify::interp::Clause::Precondition, .. })
    ));
    assert!(matches!(evaluate(&p, "nope", &[]), Err(RuntimeFailure::UnknownFunction(_))));
    assert!(matches!(evaluate(&p, "div", &[Value::int(1)]), Err(RuntimeFailure::Arity { .. })));
}

fn any_f64() -> impl Strategy<Value = f64> {
    prop_oneof![any::<u64>().prop_map(f64::from_bits), -1e6..1e6f64, Just(0.0), Just(-0.0), Just(f64::INFINITY)]
}

fn any_f32() -> impl Strategy<Value = f32> {
    prop_oneof![any::<u32>().prop_map(f32::from_bits), -1e6..1e6f32, Just(-0.0f32), Just(f32::NEG_INFINITY)]
}

proptest! {
    #[test]
    fn double_arithmetic_is_ieee(a in any_f64(), b in any_f64()) {
        let p = typed("def f(a: Double, b: Double): (Double, Double, Double, Double, Double) = (a + b, a - b, a * b, a / b, sqrt(a))");
        let got = evaluate(&p, "f", &[Value::F64(a), Value::F64(b)]).unwrap();
        let want = Value::Tuple([a + b, a - b, a * b, a / b, a.sqrt()].into_iter().map(Value::F64).collect());
        prop_assert!(got.same(&want), "{got:?} vs {want:?}");
    }

    #[test]
    fn float_arithmetic_is_ieee(a in any_f32(), b in any_f32()) {
        let p = typed("def f(a: Float, b: Float): (Float, Float, Float, Float) = (a + b, a - b, a * b, a / b)");
        let got = evaluate(&p, "f", &[Value::F32(a), Value::F32(b)]).unwrap();
        let want = Value::Tuple([a + b, a - b, a * b, a / b].into_iter().map(Value::F32).collect());
        prop_assert!(got.same(&want), "{got:?} vs {want:?}");
    }

    #[test]
    fn integer_arithmetic_wraps(a in any::<i32>(), b in any::<i32>()) {
        let p = typed("def f(a: Int, b: Int): (Int, Int, Int) = (a + b, a * b, -a)");
        let got = evaluate(&p, "f", &[Value::int(a as i64), Value::int(b as i64)]).unwrap();
        let want = Value::Tuple(vec![Value::int(a.wrapping_add(b) as i64), Value::int(a.wrapping_mul(b) as i64), Value::int(a.wrapping_neg() as i64)]);
        prop_assert_eq!(got, want);
    }
}
