//! Small complex-number helpers shared across the crate.

use num_complex::Complex64;

pub type C64 = Complex64;

pub const C_ZERO: C64 = C64::new(0.0, 0.0);
pub const C_ONE: C64 = C64::new(1.0, 0.0);

/// e^{2πi·num/den}, the exact root of unity evaluated in f64.
pub fn unity(num: i64, den: u64) -> C64 {
    debug_assert!(den > 0);
    let d = den as i64;
    let r = num.rem_euclid(d);
    let theta = 2.0 * std::f64::consts::PI * (r as f64) / (d as f64);
    C64::new(theta.cos(), theta.sin())
}

/// q^z for real q > 0 and complex z.
pub fn q_pow(q: f64, z: C64) -> C64 {
    (z * q.ln()).exp()
}

/// Deterministic pairwise summation; reduction order does not depend on
/// thread scheduling, so parallel shards can be combined reproducibly.
pub fn pairwise_sum(terms: &[C64]) -> C64 {
    match terms.len() {
        0 => C_ZERO,
        1 => terms[0],
        n => {
            let (a, b) = terms.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

pub fn approx_eq(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol
}
