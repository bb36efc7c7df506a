//! The scalar ring for Kirillov computations: finite linear combinations of
//! formal monomials in the C_ν symbols with complex coefficients. The only
//! relations are C_ν·C_{ν⁻¹w₀⁻¹} = w₀(−1)·z₀^{n_ν}, applied eagerly when
//! monomials are multiplied.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::chars::{FChar, FUnitGroup};
use crate::cnum::{C64, C_ONE, C_ZERO};
use crate::error::{Error, Result};

/// Sorted (symbol, multiplicity) pairs; symbols are the exponents e
/// identifying ν_e on the fixed ambient unit group.
pub type Mono = Vec<(u64, u32)>;

/// Parameters of the supercuspidal symbol algebra: level c = −n₁ ≥ 2, the
/// central character data (w₀ of level ≤ 1 via its exponent, z₀ = w(ϖ)),
/// and the level law n_ν = min{−c, −2·level(ν)}.
#[derive(Clone, Debug)]
pub struct ScAlgebra {
    pub group: Arc<FUnitGroup>,
    pub c: u32,
    pub z0: C64,
    /// exponent of w₀ on the ambient group (0 = unramified; must be level ≤ 1)
    pub w0_exp: u64,
}

impl ScAlgebra {
    /// The ambient group may be deeper than c; intermediate shells of the
    /// ω-words need characters of level up to c + max positive support.
    pub fn new(group: Arc<FUnitGroup>, c: u32, z0: C64, w0_exp: u64) -> Result<Self> {
        if c < 2 {
            return Err(Error::Domain("supercuspidal level is at least 2".into()));
        }
        if group.level < c {
            return Err(Error::Domain("ambient unit group must have level >= c".into()));
        }
        let alg = ScAlgebra { group, c, z0, w0_exp };
        if alg.char_level(alg.w0_exp) > 1 {
            return Err(Error::Domain("central character must be unramified or level 1".into()));
        }
        Ok(alg)
    }

    /// Conductor level of ν_e on the cyclic ambient group of level L:
    /// ν_e is trivial on the 1-units of depth ℓ iff e ≡ 0 mod p^(L−ℓ).
    pub fn char_level(&self, e: u64) -> u32 {
        let ord = self.group.order;
        let lvl = self.group.level;
        let e = e % ord;
        if e == 0 {
            return 0;
        }
        for ell in 1..=lvl {
            let sub_order = (self.group.p).pow(lvl - ell);
            if e % sub_order == 0 {
                return ell;
            }
        }
        lvl
    }

    /// The level law n_ν = min{−c, −2·level(ν)} (p odd).
    pub fn n_nu(&self, e: u64) -> i64 {
        let lvl = self.char_level(e) as i64;
        (-(self.c as i64)).min(-2 * lvl)
    }

    pub fn w0_char(&self) -> FChar {
        if self.w0_exp % self.group.order == 0 {
            FChar::unramified(C_ONE)
        } else {
            // construction bypasses level minimality on purpose: w₀ has
            // level ≤ 1 inside the level-c ambient group
            FChar::raw(C_ONE, self.group.clone(), self.w0_exp)
        }
    }

    pub fn w0_at(&self, residue: u128) -> C64 {
        self.w0_char().eval_unit(residue).expect("unit")
    }

    pub fn w0_at_minus_one(&self) -> C64 {
        let m = self.group.modulus;
        self.w0_at(m - 1)
    }

    /// e-index of ν_e⁻¹·w₀⁻¹.
    pub fn partner(&self, e: u64) -> u64 {
        let ord = self.group.order;
        (2 * ord - e % ord - self.w0_exp % ord) % ord
    }

    /// Multiply a monomial by the symbol C_e, applying the pair reduction.
    fn push_symbol(&self, mono: &Mono, e: u64, coeff: &mut C64) -> Mono {
        let ord = self.group.order;
        let e = e % ord;
        let partner = self.partner(e);
        let mut out = mono.clone();
        if let Some(pos) = out.iter().position(|&(s, _)| s == partner) {
            // C_e · C_{e⁻¹w₀⁻¹} = w₀(−1) z₀^{n_ν}
            *coeff *= self.w0_at_minus_one() * powi_c(self.z0, self.n_nu(e));
            if out[pos].1 == 1 {
                out.remove(pos);
            } else {
                out[pos].1 -= 1;
            }
            return out;
        }
        match out.iter().position(|&(s, _)| s == e) {
            Some(pos) => out[pos].1 += 1,
            None => {
                out.push((e, 1));
                out.sort_unstable();
            }
        }
        out
    }
}

fn powi_c(z: C64, n: i64) -> C64 {
    z.powi(n as i32)
}

/// Finite linear combination of C-monomials with complex coefficients.
#[derive(Clone, Debug, Default)]
pub struct SymbolicValue {
    pub terms: BTreeMap<Mono, C64>,
}

impl SymbolicValue {
    pub fn zero() -> Self {
        SymbolicValue { terms: BTreeMap::new() }
    }

    pub fn scalar(z: C64) -> Self {
        let mut t = BTreeMap::new();
        if z != C_ZERO {
            t.insert(Vec::new(), z);
        }
        SymbolicValue { terms: t }
    }

    pub fn one() -> Self {
        Self::scalar(C_ONE)
    }

    pub fn symbol(e: u64) -> Self {
        let mut t = BTreeMap::new();
        t.insert(vec![(e, 1)], C_ONE);
        SymbolicValue { terms: t }
    }

    pub fn add_assign(&mut self, other: &SymbolicValue) {
        for (m, c) in &other.terms {
            *self.terms.entry(m.clone()).or_insert(C_ZERO) += c;
        }
        self.prune();
    }

    pub fn scale(&self, z: C64) -> SymbolicValue {
        let mut out = SymbolicValue::zero();
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), c * z);
        }
        out.prune();
        out
    }

    /// Multiply by the single symbol C_e within the given algebra.
    pub fn mul_symbol(&self, alg: &ScAlgebra, e: u64) -> SymbolicValue {
        let mut out = SymbolicValue::zero();
        for (m, c) in &self.terms {
            let mut coeff = *c;
            let mono = alg.push_symbol(m, e, &mut coeff);
            *out.terms.entry(mono).or_insert(C_ZERO) += coeff;
        }
        out.prune();
        out
    }

    pub fn mul(&self, alg: &ScAlgebra, other: &SymbolicValue) -> SymbolicValue {
        let mut out = SymbolicValue::zero();
        for (m2, c2) in &other.terms {
            // fold other's monomial symbol by symbol into self
            let mut part = self.scale(*c2);
            for &(e, mult) in m2 {
                for _ in 0..mult {
                    part = part.mul_symbol(alg, e);
                }
            }
            out.add_assign(&part);
        }
        out
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() > 1e-300);
    }

    /// The coefficient of the empty monomial.
    pub fn numeric_part(&self) -> C64 {
        self.terms.get(&Vec::new()).copied().unwrap_or(C_ZERO)
    }

    /// Largest coefficient magnitude among non-numeric monomials.
    pub fn symbolic_residue(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(m, _)| !m.is_empty())
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.norm() <= tol)
    }

    pub fn norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    pub fn approx_eq(&self, other: &SymbolicValue, tol: f64) -> bool {
        let mut diff = self.clone();
        diff.add_assign(&other.scale(C64::new(-1.0, 0.0)));
        diff.is_zero(tol)
    }
}

impl std::fmt::Display for SymbolicValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.6}{:+.6}i)", c.re, c.im)?;
            for (e, mult) in m {
                write!(f, "·C[{e}]")?;
                if *mult > 1 {
                    write!(f, "^{mult}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alg() -> ScAlgebra {
        let g = FUnitGroup::new(3, 2).unwrap();
        ScAlgebra::new(g, 2, C64::new(0.6, 0.8), 0).unwrap()
    }

    #[test]
    fn char_levels_and_law() {
        let a = alg();
        assert_eq!(a.char_level(0), 0);
        // order 6 = 2·3; e ≡ 0 mod 3 means trivial on 1-units ⇒ level ≤ 1
        assert_eq!(a.char_level(3), 1);
        assert_eq!(a.char_level(1), 2);
        assert_eq!(a.n_nu(0), -2);
        assert_eq!(a.n_nu(3), -2);
        assert_eq!(a.n_nu(1), -4);
    }

    #[test]
    fn pair_reduction() {
        let a = alg();
        // C₁ encoded as symbol e=0 (the trivial character); partner also 0
        let c1 = SymbolicValue::symbol(0);
        let sq = c1.mul(&a, &c1);
        // C₁·C₁ = w₀(−1) z₀^{n₁} = z₀^{−2} for trivial w₀
        let expected = SymbolicValue::scalar(a.z0.powi(-2));
        assert!(sq.approx_eq(&expected, 1e-12), "{sq} vs {expected}");
        // non-partner symbols stay formal
        let c_a = SymbolicValue::symbol(1);
        let c_b = SymbolicValue::symbol(2);
        let prod = c_a.mul(&a, &c_b);
        assert_eq!(prod.terms.len(), 1);
        assert!(prod.numeric_part() == C_ZERO);
        // e=1 and its partner e=5 reduce
        let c_inv = SymbolicValue::symbol(5);
        let red = c_a.mul(&a, &c_inv);
        assert!(red.symbolic_residue() < 1e-12);
        assert!((red.numeric_part() - a.z0.powi(-4)).norm() < 1e-12);
    }
}
