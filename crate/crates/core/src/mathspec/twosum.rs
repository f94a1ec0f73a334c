//! FastTwoSum error-free transformation.

/// Returns `(s, t)` with `s = fl(a + b)` and `a + b = s + t` exactly.
/// Requires `|a| >= |b|` (or `a == 0`) and finite inputs.
pub fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    debug_assert!(a.is_finite() && b.is_finite(), "fast_two_sum: non-finite input");
    debug_assert!(a == 0.0 || a.abs() >= b.abs(), "fast_two_sum: |a| < |b|");
    let s = a + b;
    let z = s - a;
    let t = b - z;
    (s, t)
}
