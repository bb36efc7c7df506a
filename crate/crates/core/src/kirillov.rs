//! Kirillov model of a supercuspidal representation as a symbolic rewriting
//! engine on the basis 1_{ν,n} (character ν on the shell v(x) = n), with
//! the ω-action given by formal monomials C_ν t^{n_ν} and the level law
//! n_ν = min{−c, −2·level(ν)}.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::chars::mellin_expand;
use crate::cnum::{C64, C_ZERO};
use crate::error::{Error, Result};
use crate::padic::{FieldContext, Fp};
use crate::symbolic::{ScAlgebra, SymbolicValue};

/// Finite linear combination of basis symbols 1_{ν_e, n} with symbolic
/// coefficients, keyed by (support n, character index e).
#[derive(Clone, Debug, Default)]
pub struct KirillovVector {
    pub terms: BTreeMap<(i64, u64), SymbolicValue>,
}

impl KirillovVector {
    pub fn zero() -> Self {
        KirillovVector { terms: BTreeMap::new() }
    }

    /// 1_{ν_e, n}
    pub fn basis(e: u64, n: i64) -> Self {
        let mut t = BTreeMap::new();
        t.insert((n, e), SymbolicValue::one());
        KirillovVector { terms: t }
    }

    pub fn newform() -> Self {
        Self::basis(0, 0)
    }

    fn insert(&mut self, key: (i64, u64), val: SymbolicValue) {
        let entry = self.terms.entry(key).or_insert_with(SymbolicValue::zero);
        entry.add_assign(&val);
        if entry.is_zero(1e-300) {
            self.terms.remove(&key);
        }
    }

    pub fn add_assign(&mut self, other: &KirillovVector) {
        for (k, v) in &other.terms {
            self.insert(*k, v.clone());
        }
    }

    pub fn scale(&self, z: C64) -> KirillovVector {
        let mut out = KirillovVector::zero();
        for (k, v) in &self.terms {
            out.terms.insert(*k, v.scale(z));
        }
        out
    }

    /// Evaluate at x = u·ϖ^n (u a unit residue on the ambient group).
    pub fn eval(&self, alg: &ScAlgebra, n: i64, u: u128) -> Result<SymbolicValue> {
        let mut out = SymbolicValue::zero();
        let k = alg.group.dlog(u)?;
        for ((supp, e), coeff) in &self.terms {
            if *supp != n {
                continue;
            }
            let z = crate::cnum::unity((*e as i64).wrapping_mul(k as i64), alg.group.order);
            out.add_assign(&coeff.scale(z));
        }
        Ok(out)
    }

    /// For each support n, the set of character levels carrying mass > tol.
    pub fn support_level_profile(&self, alg: &ScAlgebra, tol: f64) -> BTreeMap<i64, BTreeSet<u32>> {
        let mut out: BTreeMap<i64, BTreeSet<u32>> = BTreeMap::new();
        for ((n, e), coeff) in &self.terms {
            if coeff.norm() > tol {
                out.entry(*n).or_default().insert(alg.char_level(*e));
            }
        }
        out
    }

    pub fn approx_eq(&self, other: &KirillovVector, tol: f64) -> bool {
        let keys: BTreeSet<_> = self.terms.keys().chain(other.terms.keys()).collect();
        for k in keys {
            let a = self.terms.get(k).cloned().unwrap_or_else(SymbolicValue::zero);
            let b = other.terms.get(k).cloned().unwrap_or_else(SymbolicValue::zero);
            if !a.approx_eq(&b, tol) {
                return false;
            }
        }
        true
    }
}

/// π̂((a₁ m; 0 a₂))φ(x) = w_π̂(a₂)·ψ(−m a₂⁻¹ x)·φ(a₁ a₂⁻¹ x); the ψ-factor
/// expands into the finite character decomposition on each shell.
pub fn borel_act(
    alg: &ScAlgebra,
    ctx: &FieldContext,
    a1: &Fp,
    m: &Fp,
    a2: &Fp,
    v: &KirillovVector,
) -> Result<KirillovVector> {
    let va2 = a2.valuation().ok_or_else(|| Error::Domain("singular Borel element".into()))?;
    let va1 = a1.valuation().ok_or_else(|| Error::Domain("singular Borel element".into()))?;
    let w = alg.w0_char();
    let w_a2 = alg.z0.powi(va2 as i32) * w.eval_unit(a2.unit_residue(alg.group.level)?)?;
    let ratio = a1.div(a2)?; // a₁/a₂
    let ratio_unit = ratio.unit_residue(alg.group.level)?;
    let ratio_dlog = alg.group.dlog(ratio_unit)?;
    let shift = va1 - va2;
    let ord = alg.group.order;
    // one ψ-expansion per target shell; ψ·ν_e then shifts indices by e
    let mut psi_expansions: std::collections::BTreeMap<i64, Vec<(u64, C64)>> =
        std::collections::BTreeMap::new();
    let mut out = KirillovVector::zero();
    for ((n, e), coeff) in &v.terms {
        // φ(a₁a₂⁻¹x): support moves to n − shift, picks up ν(a₁/a₂)
        let n_new = n - shift;
        let nu_ratio = crate::cnum::unity((*e as i64).wrapping_mul(ratio_dlog as i64), ord);
        let base = coeff.scale(w_a2 * nu_ratio);
        // multiply by ψ(−m a₂⁻¹ x) on the shell v(x) = n_new
        if m.is_zero() {
            out.insert((n_new, *e), base);
            continue;
        }
        let factor = m.div(a2)?; // ψ(−factor·x)
        let vf = factor.valuation().unwrap();
        if vf + n_new >= 0 {
            // ψ trivial on the shell
            out.insert((n_new, *e), base);
            continue;
        }
        let needed = (-(vf + n_new)) as u32;
        if needed > alg.group.level {
            return Err(Error::Precision(format!(
                "ψ-expansion needs level {needed} > ambient level {}",
                alg.group.level
            )));
        }
        if !psi_expansions.contains_key(&n_new) {
            let scale = factor.mul(&ctx.pi_pow(n_new)).neg();
            let coeffs = mellin_expand(&alg.group, |u| {
                scale.mul(&ctx.elt(0, u)).psi().unwrap_or(C_ZERO)
            });
            psi_expansions.insert(n_new, coeffs);
        }
        for (epsi, z) in &psi_expansions[&n_new] {
            out.insert((n_new, (epsi + e) % ord), base.scale(*z));
        }
    }
    Ok(out)
}

/// π̂(ω)1_{ν,n} = C_{νw₀⁻¹}·z₀^{−n}·1_{ν⁻¹w₀, −n+n_{ν⁻¹}}.
pub fn omega_act(alg: &ScAlgebra, v: &KirillovVector) -> KirillovVector {
    let ord = alg.group.order;
    let mut out = KirillovVector::zero();
    for ((n, e), coeff) in &v.terms {
        let e_sym = (e + ord - alg.w0_exp % ord) % ord; // νw₀⁻¹
        let e_new = (ord - e % ord + alg.w0_exp % ord) % ord; // ν⁻¹w₀
        let n_inv = alg.n_nu((ord - e % ord) % ord);
        let n_new = -n + n_inv;
        let c = coeff.mul_symbol(alg, e_sym).scale(alg.z0.powi(-(*n as i32)));
        out.insert((n_new, e_new), c);
    }
    out
}

/// π̂(−1) = w_π̂(−1) scalar.
pub fn minus_one_act(alg: &ScAlgebra, v: &KirillovVector) -> KirillovVector {
    v.scale(alg.w0_at_minus_one())
}

/// π̂((1 0; x 1)) via (1 0; x 1) = −ω·(1 −x; 0 1)·ω.
pub fn lower_act(
    alg: &ScAlgebra,
    ctx: &FieldContext,
    x: &Fp,
    v: &KirillovVector,
) -> Result<KirillovVector> {
    let w1 = omega_act(alg, v);
    let w2 = borel_act(alg, ctx, &ctx.one(), &x.neg(), &ctx.one(), &w1)?;
    Ok(minus_one_act(alg, &omega_act(alg, &w2)))
}

/// Conductor of the twist: c(π ⊗ λ) = max{c, 2i} for λ of level i
/// (p odd; central character unramified or level 1).
pub fn twist_level(p: u64, c: u32, i: u32) -> Result<u32> {
    if p == 2 {
        if c % 2 == 0 && i == c / 2 {
            return Err(Error::Domain(
                "p = 2 with i = c/2 is the excluded middle-level case".into(),
            ));
        }
        return Err(Error::Domain("p = 2 is out of scope".into()));
    }
    if c < 2 {
        return Err(Error::Domain("supercuspidal level is at least 2".into()));
    }
    Ok(c.max(2 * i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chars::FUnitGroup;
    use crate::cnum::C_ONE;
    use crate::padic::ExtKind;

    fn setup(p: u64, c: u32, w0_level1: bool) -> (FieldContext, ScAlgebra) {
        let ctx = FieldContext::new(p, 30, ExtKind::Inert, 2).unwrap();
        let ambient = c + 2;
        let g = FUnitGroup::new(p, ambient).unwrap();
        let w0_exp = if w0_level1 { p.pow(ambient - 1) } else { 0 };
        let z0 = C64::new(0.28, -0.96);
        let alg = ScAlgebra::new(g, c, z0, w0_exp).unwrap();
        (ctx, alg)
    }

    #[test]
    fn borel_identity_and_trivial_psi() {
        let (ctx, alg) = setup(3, 2, false);
        let v = KirillovVector::newform();
        let id = borel_act(&alg, &ctx, &ctx.one(), &ctx.zero(), &ctx.one(), &v).unwrap();
        assert!(id.approx_eq(&v, 1e-12));
        // v(m) ≥ −n makes ψ trivial on the shell
        let t = borel_act(&alg, &ctx, &ctx.one(), &ctx.from_int(3), &ctx.one(), &v).unwrap();
        assert!(t.approx_eq(&v, 1e-12));
    }

    #[test]
    fn omega_on_newform() {
        let (_ctx, alg) = setup(3, 2, false);
        let v = KirillovVector::newform();
        let w = omega_act(&alg, &v);
        // C₁·1_{1,−c}
        assert_eq!(w.terms.len(), 1);
        let ((n, e), coeff) = w.terms.iter().next().unwrap();
        assert_eq!((*n, *e), (-2, 0));
        assert!(coeff.approx_eq(&SymbolicValue::symbol(0), 1e-12));
    }

    #[test]
    fn omega_squared_is_minus_one() {
        for w0_level1 in [false, true] {
            let (ctx, alg) = setup(3, 3, w0_level1);
            for e in [0u64, 1, 2, 9] {
                for n in [-2i64, 0, 1] {
                    let v = KirillovVector::basis(e, n);
                    let ww = omega_act(&alg, &omega_act(&alg, &v));
                    let expected = minus_one_act(&alg, &v);
                    assert!(
                        ww.approx_eq(&expected, 1e-10),
                        "w0lvl1={w0_level1} e={e} n={n}"
                    );
                    let _ = &ctx;
                }
            }
        }
    }

    #[test]
    fn diagonal_twist_profile() {
        // π̂((ϖ^i 1; 0 ϖ^{−i})) on 1_{1,0}: supported at v(x) = −2i, levels ≤ i
        let (ctx, alg) = setup(3, 3, false);
        for i in 1..=2i64 {
            let v = KirillovVector::newform();
            let out = borel_act(&alg, &ctx, &ctx.pi_pow(i), &ctx.one(), &ctx.pi_pow(-i), &v).unwrap();
            let profile = out.support_level_profile(&alg, 1e-12);
            assert_eq!(profile.len(), 1);
            let (n, levels) = profile.iter().next().unwrap();
            assert_eq!(*n, -2 * i);
            assert!(levels.iter().all(|&l| l <= i as u32), "i={i}: {levels:?}");
            assert!(levels.contains(&(i as u32)), "top level present");
        }
    }

    #[test]
    fn second_relation_profiles_agree() {
        // ω·n(−1)·ω and n(1)·ω·n(1) give identical support-level profiles on
        // 1_{1,n}. At n ≤ −2 the two sides agree only through numeric
        // relations among the C_ν, which stay formal here, so the check runs
        // on n ≥ −1 like the level-law derivation itself.
        for p in [3u64, 5] {
            for c in [2u32, 3, 4] {
                for w0_level1 in [false, true] {
                    if p == 5 && c == 4 {
                        continue; // ambient group gets large; covered by the acceptance suite
                    }
                    let (ctx, alg) = setup(p, c, w0_level1);
                    for n in -1i64..=2 {
                        let v = KirillovVector::basis(0, n);
                        let lhs = {
                            let s1 = omega_act(&alg, &v);
                            let s2 =
                                borel_act(&alg, &ctx, &ctx.one(), &ctx.from_int(-1), &ctx.one(), &s1)
                                    .unwrap();
                            omega_act(&alg, &s2)
                        };
                        let rhs = {
                            let s1 =
                                borel_act(&alg, &ctx, &ctx.one(), &ctx.one(), &ctx.one(), &v).unwrap();
                            let s2 = omega_act(&alg, &s1);
                            borel_act(&alg, &ctx, &ctx.one(), &ctx.one(), &ctx.one(), &s2).unwrap()
                        };
                        let pl = lhs.support_level_profile(&alg, 1e-10);
                        let pr = rhs.support_level_profile(&alg, 1e-10);
                        assert_eq!(pl, pr, "p={p} c={c} w0lvl1={w0_level1} n={n}");
                    }
                }
            }
        }
    }

    #[test]
    fn newform_k1_invariance() {
        // 1_{1,0} is fixed by B(O) generators and by ω-conjugated lower
        // unipotents of depth c
        let (ctx, alg) = setup(3, 2, false);
        let v = KirillovVector::newform();
        // diag(u, 1), u a unit: φ(ux) = ν(u)φ = φ for trivial ν
        let d = borel_act(&alg, &ctx, &ctx.from_int(2), &ctx.zero(), &ctx.one(), &v).unwrap();
        assert!(d.approx_eq(&v, 1e-10));
        // upper n(m), m ∈ O: trivial ψ on v(x) = 0
        let u = borel_act(&alg, &ctx, &ctx.one(), &ctx.from_int(2), &ctx.one(), &v).unwrap();
        assert!(u.approx_eq(&v, 1e-10));
        // lower unipotent of depth c
        let l = lower_act(&alg, &ctx, &ctx.from_int(9), &v).unwrap();
        assert!(l.approx_eq(&v, 1e-10), "lower depth-c fixes the newform");
        // central O^*-part acts by w₀ (trivial here)
        let z = borel_act(&alg, &ctx, &ctx.from_int(2), &ctx.zero(), &ctx.from_int(2), &v).unwrap();
        assert!(z.approx_eq(&v, 1e-10));
    }

    #[test]
    fn scwhittaker_level_zero_component() {
        // n(ϖ^{c−1})-conjugate: the level-0 component of
        // π̂(n_lower(ϖ^{c−1}))1_{1,0} at v = 0 is −1/(q−1)
        let (ctx, alg) = setup(3, 2, false);
        let q = 3.0f64;
        let v = KirillovVector::newform();
        let out = lower_act(&alg, &ctx, &ctx.pi_pow(1), &v).unwrap();
        let coeff = out
            .terms
            .get(&(0, 0))
            .cloned()
            .unwrap_or_else(SymbolicValue::zero);
        let expected = SymbolicValue::scalar(C64::new(-1.0 / (q - 1.0), 0.0));
        assert!(coeff.approx_eq(&expected, 1e-10), "{coeff}");
        let _ = C_ONE;
    }

    #[test]
    fn twist_level_law() {
        for c in [2u32, 3, 4] {
            for i in 0..=4u32 {
                assert_eq!(twist_level(3, c, i).unwrap(), c.max(2 * i));
            }
        }
        assert!(twist_level(2, 4, 2).is_err());
        assert!(twist_level(3, 1, 0).is_err());
    }
}
