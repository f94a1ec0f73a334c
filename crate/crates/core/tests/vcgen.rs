mod common;

use anyhow::Result;
use fpverify::checks::{inject_checks, CheckConfig};
use fpverify::driver::{verify_vc, VcResult};
use fpverify::float::Precision;
use fpverify::frontend::{load, MathFn, Type, TypedProgram};
use fpverify::mathspec::smt::uf_name;
use fpverify::interp::ClassificationKind;
use fpverify::portfolio::{Portfolio, Status};
use fpverify::vcgen::{dump_vcs, encode_expr, flatten_tuples, generate_vcs, VcKind, VerificationCondition};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::gen::Gen;

fn checked(src: &str) -> TypedProgram {
    let p = load("t.fpl", src).unwrap_or_else(|d| panic!("{d:?}"));
    inject_checks(&p, &CheckConfig::default())
}

fn vcs(src: &str) -> Vec<VerificationCondition> {
    generate_vcs(&checked(src)).unwrap()
}

fn one_solver() -> Portfolio {
    common::portfolio(vec![common::any_solver()], 60.0)
}

fn verify(src: &str) -> Vec<VcResult> {
    let p = checked(src);
    let pf = one_solver();
    generate_vcs(&p).unwrap().iter().map(|vc| verify_vc(&p, vc, &pf, 3)).collect()
}

/// Grep-level view of opacity: an uninterpreted function with arguments or
/// a bit-conversion constant.
fn grep_opaque(script: &str) -> bool {
    script.lines().any(|l| (l.starts_with("(declare-fun ") && !l.contains(" () ")) || l.starts_with("(declare-const to_bits"))
}

#[test]
fn abs_is_the_theory_operator() {
    let v = vcs("def f(x: Double): Double = { abs(x) }.ensuring(r => r >= 0.0 || r.isNaN)");
    assert_eq!(v.len(), 1);
    let s = v[0].script.text();
    assert!(s.contains("(fp.abs p0_x)"), "{s}");
    assert!(!s.contains("bvand"), "{s}");
    assert!(s.contains("(_ FloatingPoint 11 53)"));
}

#[test]
fn float_sorts_and_rounding() {
    let s = vcs("def f(x: Float, y: Float): Float = { (x + y) * x / y }.ensuring(r => !r.isNaN)")[0].script.text();
    assert!(s.contains("(_ FloatingPoint 8 24)"));
    for op in ["fp.add RNE", "fp.mul RNE", "fp.div RNE"] {
        assert!(s.contains(op), "{op}");
    }
    for mode in ["RTZ", "RTP", "RTN", "RNA"] {
        assert!(!s.contains(mode), "{mode}");
    }
    assert!(!s.contains("fp.rem"));
}

#[test]
fn rounding_functions_use_matching_modes() {
    let s = vcs("def f(x: Double): Double = { ceil(x) + floor(x) + rint(x) }.ensuring(r => r.isNaN || !r.isNaN)")[0].script.text();
    for m in ["fp.roundToIntegral RTP", "fp.roundToIntegral RTN", "fp.roundToIntegral RNE"] {
        assert!(s.contains(m), "{m}");
    }
}

#[test]
fn reflexive_float_equality_fails_on_nan() {
    let r = verify("def f(x: Double): Boolean = { x == x }.ensuring(r => r)");
    let post = r.iter().find(|v| v.kind == "postcondition").unwrap();
    assert_eq!(post.status, Status::Invalid);
    let cex = post.counterexample.as_ref().unwrap();
    assert_eq!(cex[0].decimal, "NaN");
    assert_eq!(post.classification.as_ref().unwrap().kind, ClassificationKind::Confirmed);
}

#[test]
fn signed_zeros_are_ieee_equal() {
    let r = verify("def f(a: Double, b: Double): Boolean = { !(a == b && a.isPositiveSign != b.isPositiveSign) }.ensuring(r => r)");
    let post = r.iter().find(|v| v.kind == "postcondition").unwrap();
    assert_eq!(post.status, Status::Invalid);
    let cex = post.counterexample.as_ref().unwrap();
    let mut zeros: Vec<&str> = cex.iter().map(|a| a.decimal.as_str()).collect();
    zeros.sort();
    assert_eq!(zeros, ["-0.0", "0.0"]);
    assert_eq!(post.classification.as_ref().unwrap().kind, ClassificationKind::Confirmed);
}

#[test]
fn nothing_to_prove() {
    assert!(vcs("def f(x: Double, y: Double): Double = x * y + 1.0").is_empty());
    assert!(vcs("").is_empty());
}

#[test]
fn gradient_is_one_opaque_postcondition() {
    let v = vcs(&common::fixture("gradient.fpl"));
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].kind, VcKind::Postcondition);
    assert!(v[0].uses_opaque);
    let s = v[0].script.text();
    let exp = uf_name(MathFn::Exp, Precision::F64);
    assert!(s.contains(&format!("(declare-fun {exp} ")), "{s}");
    assert!(!s.contains("forall"));
}

#[test]
fn noeq_equality_is_uninterpreted() {
    let src = "def same[@noeq T](a: T): Boolean = { a == a }.ensuring(r => r)";
    let v = vcs(src);
    assert_eq!(v.len(), 1);
    let s = v[0].script.text();
    assert!(s.contains("declare-sort"));
    assert!(s.lines().any(|l| l.starts_with("(declare-fun eq.")), "{s}");
    assert!(v[0].uses_opaque);
    let r = verify(src);
    assert_eq!(r[0].status, Status::Invalid);
}

#[test]
fn bit_conversion_is_opaque_but_round_trips() {
    let rt = verify("def rt(x: Double): Boolean = { Double.fromBits(x.toBits).isNaN == x.isNaN }.ensuring(r => r)");
    assert_eq!(rt.len(), 1);
    assert_eq!(rt[0].status, Status::Valid);
    let nan2 = "def nan2(a: Double, b: Double): Boolean = {\n  require(a.isNaN && b.isNaN)\n  a.toBits == b.toBits\n}.ensuring(r => r)";
    let v = vcs(nan2);
    assert!(v[0].uses_opaque);
    let r = verify(nan2);
    assert_ne!(r[0].status, Status::Valid);
    if r[0].status == Status::Invalid {
        assert_ne!(r[0].classification.as_ref().unwrap().kind, ClassificationKind::Confirmed);
    }
}

#[test]
fn limit_dump_matches_hand_written_obligation() -> Result<()> {
    let v = vcs(&common::fixture("limit.fpl"));
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].kind, VcKind::NanCheck);
    let dir = tempfile::tempdir()?;
    let files = dump_vcs(&v, dir.path())?;
    assert_eq!(files.len(), 1);
    assert_eq!(files[0].file_name().unwrap(), "limit_nanCheck_0.smt2");
    let text = std::fs::read_to_string(&files[0])?;
    let expected_goal = "(assert (not (and (not (fp.isNaN l0_magnitude)) (not (fp.isNaN p2_maxMagnitude)))))";
    let hyp = "(assert (and (not (or (fp.isNaN p0_x) (fp.isInfinite p0_x))) (not (or (fp.isNaN p1_y) (fp.isInfinite p1_y)))))";
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[lines.len() - 3], expected_goal);
    assert!(lines.contains(&hyp));
    assert_eq!(&lines[lines.len() - 2..], ["(check-sat)", "(get-model)"]);
    for sym in ["p0_x", "p1_y", "p2_maxMagnitude", "l0_magnitude"] {
        assert!(text.contains(&format!("(declare-const {sym} ")), "{sym}");
    }
    Ok(())
}

#[test]
fn dump_names_are_stable() -> Result<()> {
    let src = "def f(x: Double, n: Int): Int = {\n  require(n != 0)\n  (x.toInt / n)\n}.ensuring(r => r >= 0 || r < 0)";
    let v = vcs(src);
    let names: Vec<String> = v.iter().map(|vc| vc.file_name()).collect();
    assert_eq!(names, ["f_intDivByZero_0.smt2", "f_castNaN_1.smt2", "f_castRange_2.smt2", "f_postcondition_3.smt2"]);
    let a = tempfile::tempdir()?;
    let b = tempfile::tempdir()?;
    let fa = dump_vcs(&v, a.path())?;
    let fb = dump_vcs(&vcs(src), b.path())?;
    assert_eq!(fa.len(), 4);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(std::fs::read(x)?, std::fs::read(y)?);
    }
    let empty = tempfile::tempdir()?;
    assert!(dump_vcs(&[], &empty.path().join("none"))?.is_empty());
    assert_eq!(std::fs::read_dir(empty.path().join("none"))?.count(), 0);
    Ok(())
}

#[test]
fn call_preconditions_are_modular() {
    let src = "def g(x: Double): Double = {\n  require(x > 0.0)\n  sqrt(x)\n}\ndef f(y: Double): Double = g(y * y)";
    let v = vcs(src);
    let kinds: Vec<(String, VcKind)> = v.iter().map(|vc| (vc.function.clone(), vc.kind)).collect();
    assert!(kinds.contains(&("f".into(), VcKind::CallPrecondition)));
    let call = v.iter().find(|vc| vc.kind == VcKind::CallPrecondition).unwrap();
    assert_eq!(call.callee.as_deref(), Some("g"));
    let r = verify(src);
    let call = r.iter().find(|x| x.kind == "callPrecondition").unwrap();
    assert_eq!(call.status, Status::Invalid);
    assert_eq!(call.classification.as_ref().unwrap().kind, ClassificationKind::Confirmed);
}

#[test]
fn later_obligations_assume_earlier_aborts() {
    let src = "def h(a: Int): Int = {\n  require(a > 0)\n  a\n}\n\
def inner(n: Int): Int = h(n) + 1\n\
def f(x: Int, y: Int): Int = {\n  val q = 10 / y\n  val k = inner(x)\n  assert(y != 0 && x > 0)\n  q + k\n}.ensuring(r => x > 0)";
    let r = verify(src);
    let status = |k: &str| r.iter().find(|v| v.kind == k).unwrap().status;
    assert_eq!(status("intDivByZero"), Status::Invalid);
    assert_eq!(status("userAssert"), Status::Valid);
    assert_eq!(status("postcondition"), Status::Valid);
    for v in r.iter().filter(|v| v.status == Status::Invalid) {
        assert_eq!(v.classification.as_ref().unwrap().kind, ClassificationKind::Confirmed, "{v:?}");
    }
}

#[test]
fn tuples_are_flattened() {
    let p = load("t.fpl", "def f(x: Double): (Double, Double) = (x, -x)\ndef g(p: ((Double, Int), Float)): Float = p._2").unwrap();
    let flat = flatten_tuples(&p);
    let f = flat.function("f").unwrap();
    assert_eq!(f.result_types, [Type::F64, Type::F64]);
    assert_eq!(f.results.len(), 2);
    let g = flat.function("g").unwrap();
    let leaves: Vec<(&str, Type)> = g.params.iter().map(|q| (q.name.as_str(), q.ty.clone())).collect();
    assert_eq!(leaves, [("p_0", Type::F64), ("p_1", Type::I32), ("p_2", Type::F32)]);
    let plain = load("t.fpl", "def h(x: Double): Double = x + 1.0").unwrap();
    let flat = flatten_tuples(&plain);
    assert_eq!(flat.functions[0].params.len(), 1);
    assert_eq!(flat.functions[0].results[0].kind, plain.functions[0].body.kind);
}

#[test]
fn encode_expr_declares_its_inputs() {
    let p = load("t.fpl", "def f(a: Double, b: Double): Boolean = a == b").unwrap();
    let f = &p.functions[0];
    let e = encode_expr(&f.body, &f.params).unwrap();
    assert_eq!(e.term.to_string(), "(fp.eq a b)");
    let s = e.script.text();
    assert!(s.contains("(declare-const a (_ FloatingPoint 11 53))"));
    assert!(s.contains("(declare-const b (_ FloatingPoint 11 53))"));
    let pf = one_solver();
    let v = pf.solve(0, &s, &[]).unwrap();
    assert_eq!(v.status, Status::Invalid);
}

#[test]
fn vcs_follow_definition_order() {
    let src = "def a(x: Double): Boolean = x < 1.0\ndef b(x: Double, y: Double): Boolean = (x > y) && (y >= x)\ndef c(x: Double): Int = x.toInt";
    let v = vcs(src);
    let got: Vec<(usize, &str, VcKind)> = v.iter().map(|vc| (vc.id, vc.function.as_str(), vc.kind)).collect();
    assert_eq!(
        got,
        [
            (0, "a", VcKind::NanCheck),
            (1, "b", VcKind::NanCheck),
            (2, "b", VcKind::NanCheck),
            (3, "c", VcKind::CastNaN),
            (4, "c", VcKind::CastRange)
        ]
    );
    assert!(v[1].span.col < v[2].span.col);
}

#[test]
fn opacity_flag_matches_the_script() {
    let mut sources: Vec<String> =
        ["gradient.fpl", "gradient_fixed.fpl", "limit.fpl", "stormday.fpl", "spurious_sin.fpl", "pick.fpl"].iter().map(|f| common::fixture(f)).collect();
    sources.push("def t(x: Float): Boolean = { x.toBits == 0 }.ensuring(r => r || !r)".into());
    sources.push("@opaque def g(x: Double): Double = { x }.ensuring(r => r == x)\ndef h(y: Double): Double = { g(y) }.ensuring(r => r == y)".into());
    let mut opaque = 0;
    for s in &sources {
        for vc in vcs(s) {
            assert_eq!(vc.uses_opaque, grep_opaque(&vc.script.text()), "{}", vc.script);
            opaque += vc.uses_opaque as usize;
        }
    }
    assert!(opaque >= 4);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn generation_is_deterministic(seed in any::<u64>()) {
        let src = Gen::new(ChaCha8Rng::seed_from_u64(seed)).program(3);
        let a = vcs(&src);
        let b = vcs(&src);
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.script.text(), y.script.text());
            prop_assert_eq!(x.file_name(), y.file_name());
        }
        for (i, x) in a.iter().enumerate() {
            prop_assert_eq!(x.id, i);
            prop_assert!(!x.uses_opaque);
            prop_assert!(!grep_opaque(&x.script.text()));
            let text = x.script.text();
            prop_assert!(text.ends_with("(check-sat)\n(get-model)\n"));
            for input in &x.inputs {
                let decl = format!("(declare-const {} ", input.symbol);
                prop_assert!(text.contains(&decl));
            }
        }
    }
}
