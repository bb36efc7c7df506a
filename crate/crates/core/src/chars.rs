//! Multiplicative characters of F^* and E^*, additive character sums, and
//! the Gauss/torus character integrals used by the ramified cases.
//!
//! Unit characters are stored as exponent vectors against fixed,
//! deterministically chosen generators of the unit groups, so every value is
//! an exact root of unity; level minimality is checked at construction.

use std::collections::HashMap;
use std::sync::Arc;

use crate::cnum::{unity, C64, C_ONE, C_ZERO};
use crate::error::{Error, Result};
use crate::padic::{Ext, ExtKind, FieldContext, Fp};

/// (O/ϖ^c)^*, cyclic for p odd, with a discrete-log table against the
/// smallest primitive root.
#[derive(Debug)]
pub struct FUnitGroup {
    pub p: u64,
    pub level: u32,
    pub modulus: u128,
    pub order: u64,
    pub generator: u128,
    dlog: HashMap<u128, u64>,
}

impl FUnitGroup {
    pub fn new(p: u64, level: u32) -> Result<Arc<Self>> {
        if level == 0 {
            return Err(Error::Domain("unit group level must be >= 1".into()));
        }
        let modulus = (p as u128).pow(level);
        let order = (p - 1) * p.pow(level - 1);
        let mut generator = 0u128;
        'search: for g in 2..modulus {
            if g % p as u128 == 0 {
                continue;
            }
            for ell in prime_divisors(order) {
                if pow_mod_u128(g, order / ell, modulus) == 1 {
                    continue 'search;
                }
            }
            generator = g;
            break;
        }
        if generator == 0 {
            return Err(Error::InvalidContext(format!("no generator mod {p}^{level}")));
        }
        let mut dlog = HashMap::with_capacity(order as usize);
        let mut acc: u128 = 1;
        for k in 0..order {
            dlog.insert(acc, k);
            acc = acc * generator % modulus;
        }
        Ok(Arc::new(FUnitGroup { p, level, modulus, order, generator, dlog }))
    }

    pub fn dlog(&self, u: u128) -> Result<u64> {
        self.dlog
            .get(&(u % self.modulus))
            .copied()
            .ok_or_else(|| Error::Domain(format!("{u} is not a unit mod p^{}", self.level)))
    }
}

/// (O_E/ϖ^c O_E)^* for the inert quadratic extension, with the generating
/// triple (Teichmüller lift t of order q²−1, 1+p, 1+p√D) and a full
/// product table for discrete logs. Elements are (a, b) pairs mod p^c
/// meaning a + b√D.
#[derive(Debug)]
pub struct EUnitGroup {
    pub p: u64,
    pub d: i64,
    pub level: u32,
    pub modulus: u128,
    pub orders: [u64; 3],
    pub gens: [(u128, u128); 3],
    dlog: HashMap<(u128, u128), [u64; 3]>,
}

impl EUnitGroup {
    pub fn new(ctx: &FieldContext, level: u32) -> Result<Arc<Self>> {
        if ctx.kind() != ExtKind::Inert {
            return Err(Error::Domain("EUnitGroup needs an inert context".into()));
        }
        if level == 0 {
            return Err(Error::Domain("unit group level must be >= 1".into()));
        }
        let p = ctx.p();
        let d = ctx.d();
        let modulus = (p as u128).pow(level);
        let q2m1 = p * p - 1;
        let mul = |x: (u128, u128), y: (u128, u128)| -> (u128, u128) {
            let dd = (d.rem_euclid(modulus as i64)) as u128;
            (
                (x.0 * y.0 + x.1 * y.1 % modulus * dd) % modulus,
                (x.0 * y.1 + x.1 * y.0) % modulus,
            )
        };
        let pown = |x: (u128, u128), mut e: u64| -> (u128, u128) {
            let mut acc = (1u128, 0u128);
            let mut b = x;
            while e > 0 {
                if e & 1 == 1 {
                    acc = mul(acc, b);
                }
                b = mul(b, b);
                e >>= 1;
            }
            acc
        };
        // generator of the residue field F_{q²}^*
        let mut gen_res = None;
        'outer: for a in 0..p as u128 {
            for b in 0..p as u128 {
                if a == 0 && b == 0 {
                    continue;
                }
                let x = (a, b);
                let mut ok = true;
                for ell in prime_divisors(q2m1) {
                    let y = powq(x, q2m1 / ell, p as u128, d);
                    if y == (1, 0) {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    gen_res = Some(x);
                    break 'outer;
                }
            }
        }
        let x0 = gen_res.ok_or_else(|| Error::InvalidContext("no F_{q²}^* generator".into()))?;
        // Teichmüller lift: raising any lift to the p^(2(level−1)) power kills
        // the 1-unit part and still generates the prime-to-p part.
        let t = pown(x0, p.pow(2 * (level - 1)));
        let one_unit_order = p.pow(level - 1);
        let gens = [t, ((1 + p as u128) % modulus, 0), (1, p as u128 % modulus)];
        let orders = [q2m1, one_unit_order, one_unit_order];
        let total: u128 = orders.iter().map(|&o| o as u128).product();
        let expected = (q2m1 as u128) * (p as u128).pow(2 * (level - 1));
        if total != expected {
            return Err(Error::InvalidContext("E-unit group order mismatch".into()));
        }
        let mut dlog = HashMap::with_capacity(total as usize);
        let mut xi = (1u128, 0u128);
        for i in 0..orders[0] {
            let mut xj = xi;
            for j in 0..orders[1] {
                let mut xk = xj;
                for k in 0..orders[2] {
                    dlog.insert(xk, [i, j, k]);
                    xk = mul(xk, gens[2]);
                }
                xj = mul(xj, gens[1]);
            }
            xi = mul(xi, gens[0]);
        }
        if dlog.len() as u128 != total {
            return Err(Error::InvalidContext(
                "E-unit generators do not generate independently".into(),
            ));
        }
        Ok(Arc::new(EUnitGroup { p, d, level, modulus, orders, gens, dlog }))
    }

    pub fn dlog(&self, u: (u128, u128)) -> Result<[u64; 3]> {
        self.dlog
            .get(&(u.0 % self.modulus, u.1 % self.modulus))
            .copied()
            .ok_or_else(|| Error::Domain("not a unit in O_E".into()))
    }
}

fn powq(x: (u128, u128), mut e: u64, modulus: u128, d: i64) -> (u128, u128) {
    let dd = d.rem_euclid(modulus as i64) as u128;
    let mul = |x: (u128, u128), y: (u128, u128)| {
        (
            (x.0 * y.0 + x.1 * y.1 % modulus * dd) % modulus,
            (x.0 * y.1 + x.1 * y.0) % modulus,
        )
    };
    let mut acc = (1u128, 0u128);
    let mut b = x;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul(acc, b);
        }
        b = mul(b, b);
        e >>= 1;
    }
    acc
}

fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut k = 2;
    while k * k <= n {
        if n % k == 0 {
            out.push(k);
            while n % k == 0 {
                n /= k;
            }
        }
        k += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn pow_mod_u128(b: u128, mut e: u64, m: u128) -> u128 {
    let mut acc: u128 = 1;
    let mut bb = b % m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * bb % m;
        }
        bb = bb * bb % m;
        e >>= 1;
    }
    acc
}

/// A character of F^*: value at ϖ times a unit-group character.
#[derive(Clone, Debug)]
pub struct FChar {
    pub at_pi: C64,
    unit: Option<(Arc<FUnitGroup>, u64)>,
}

impl FChar {
    pub fn unramified(at_pi: C64) -> Self {
        FChar { at_pi, unit: None }
    }

    /// Construct without the level-minimality check, for callers that embed
    /// lower-level characters into a deeper ambient group.
    pub fn raw(at_pi: C64, group: Arc<FUnitGroup>, exp: u64) -> Self {
        let exp = exp % group.order;
        FChar { at_pi, unit: Some((group, exp)) }
    }

    /// Character with unit part g ↦ ζ_order^(exp·dlog g); rejects exponent
    /// data whose actual level is smaller than the group's level.
    pub fn with_unit(at_pi: C64, group: Arc<FUnitGroup>, exp: u64) -> Result<Self> {
        let ch = FChar { at_pi, unit: Some((group.clone(), exp % group.order)) };
        let actual = ch.level();
        if actual != group.level {
            return Err(Error::Domain(format!(
                "exponent {exp} gives level {actual}, group is level {}",
                group.level
            )));
        }
        Ok(ch)
    }

    /// Conductor level: 0 for unramified, else smallest ℓ with triviality on
    /// 1+ϖ^ℓ O. Uses that 1+ϖ^ℓO/1+ϖ^cO is generated by 1+p^ℓ for p odd.
    pub fn level(&self) -> u32 {
        match &self.unit {
            None => 0,
            Some((g, e)) => {
                if e % g.order == 0 {
                    return 0;
                }
                for ell in 1..=g.level {
                    if ell == g.level {
                        return ell;
                    }
                    let x = (1 + (g.p as u128).pow(ell)) % g.modulus;
                    let idx = g.dlog(x).expect("1+p^l is a unit");
                    if (*e as u128 * idx as u128) % g.order as u128 == 0 {
                        // trivial on 1+ϖ^ℓ, and on all units iff e = 0 handled above
                        let mut trivial_below = true;
                        for ell2 in ell..g.level {
                            let y = (1 + (g.p as u128).pow(ell2)) % g.modulus;
                            let idx2 = g.dlog(y).expect("unit");
                            if (*e as u128 * idx2 as u128) % g.order as u128 != 0 {
                                trivial_below = false;
                            }
                        }
                        if trivial_below {
                            return ell;
                        }
                    }
                }
                // trivial on 1-units entirely but not on all units
                let x = g.generator;
                let _ = x;
                1
            }
        }
    }

    pub fn eval_unit(&self, residue: u128) -> Result<C64> {
        match &self.unit {
            None => Ok(C_ONE),
            Some((g, e)) => {
                let idx = g.dlog(residue)?;
                Ok(unity((*e as i64).wrapping_mul(idx as i64), g.order))
            }
        }
    }

    pub fn eval(&self, x: &Fp) -> Result<C64> {
        let v = x
            .valuation()
            .ok_or_else(|| Error::Precision("character of a value that vanishes at the working precision".into()))?;
        let lvl = match &self.unit {
            None => return Ok(self.at_pi.powi(v as i32)),
            Some((g, _)) => g.level,
        };
        let u = x.unit_residue(lvl)?;
        Ok(self.at_pi.powi(v as i32) * self.eval_unit(u)?)
    }

    pub fn inv(&self) -> FChar {
        match &self.unit {
            None => FChar::unramified(C_ONE / self.at_pi),
            Some((g, e)) => FChar {
                at_pi: C_ONE / self.at_pi,
                unit: Some((g.clone(), (g.order - e % g.order) % g.order)),
            },
        }
    }

    pub fn mul(&self, other: &FChar) -> Result<FChar> {
        let at_pi = self.at_pi * other.at_pi;
        match (&self.unit, &other.unit) {
            (None, None) => Ok(FChar::unramified(at_pi)),
            (Some((g, e)), None) | (None, Some((g, e))) => {
                Ok(FChar { at_pi, unit: Some((g.clone(), *e)) })
            }
            (Some((g1, e1)), Some((g2, e2))) => {
                if !Arc::ptr_eq(g1, g2) && (g1.p != g2.p || g1.level != g2.level) {
                    return Err(Error::Domain("characters on different unit groups".into()));
                }
                Ok(FChar { at_pi, unit: Some((g1.clone(), (e1 + e2) % g1.order)) })
            }
        }
    }
}

/// A character of E^* for an inert extension.
#[derive(Clone, Debug)]
pub struct EChar {
    pub at_pi: C64,
    unit: Option<(Arc<EUnitGroup>, [u64; 3])>,
}

impl EChar {
    pub fn unramified(at_pi: C64) -> Self {
        EChar { at_pi, unit: None }
    }

    pub fn with_unit(at_pi: C64, group: Arc<EUnitGroup>, exps: [u64; 3]) -> Result<Self> {
        let exps = [
            exps[0] % group.orders[0],
            exps[1] % group.orders[1],
            exps[2] % group.orders[2],
        ];
        let ch = EChar { at_pi, unit: Some((group.clone(), exps)) };
        let actual = ch.level();
        if actual != group.level {
            return Err(Error::Domain(format!(
                "exponents give level {actual}, group is level {}",
                group.level
            )));
        }
        Ok(ch)
    }

    pub fn eval_unit(&self, residue: (u128, u128)) -> Result<C64> {
        match &self.unit {
            None => Ok(C_ONE),
            Some((g, e)) => {
                let idx = g.dlog(residue)?;
                let mut z = C_ONE;
                for k in 0..3 {
                    z *= unity((e[k] as i64).wrapping_mul(idx[k] as i64), g.orders[k]);
                }
                Ok(z)
            }
        }
    }

    /// Conductor level on O_E^*: smallest ℓ with triviality on 1+ϖ^ℓ O_E
    /// (generated by 1+p^ℓ and 1+p^ℓ√D for p odd).
    pub fn level(&self) -> u32 {
        match &self.unit {
            None => 0,
            Some((g, _)) => {
                for ell in 1..g.level {
                    let pl = (g.p as u128).pow(ell);
                    let a = self.eval_unit(((1 + pl) % g.modulus, 0)).unwrap();
                    let b = self.eval_unit((1, pl % g.modulus)).unwrap();
                    if (a - C_ONE).norm() < 1e-12 && (b - C_ONE).norm() < 1e-12 {
                        // check triviality persists on deeper generators too
                        let mut all = true;
                        for e2 in ell..g.level {
                            let pl2 = (g.p as u128).pow(e2);
                            let a2 = self.eval_unit(((1 + pl2) % g.modulus, 0)).unwrap();
                            let b2 = self.eval_unit((1, pl2 % g.modulus)).unwrap();
                            if (a2 - C_ONE).norm() > 1e-12 || (b2 - C_ONE).norm() > 1e-12 {
                                all = false;
                            }
                        }
                        if all {
                            // level ell unless trivial on everything
                            if ell == 1 && self.trivial_on_units() {
                                return 0;
                            }
                            return ell;
                        }
                    }
                }
                if self.trivial_on_units() {
                    0
                } else {
                    self.unit.as_ref().unwrap().0.level
                }
            }
        }
    }

    fn trivial_on_units(&self) -> bool {
        match &self.unit {
            None => true,
            Some((g, e)) => e.iter().zip(g.orders.iter()).all(|(x, o)| x % o == 0),
        }
    }

    /// Whether the restriction to O_F^* is trivial (i.e. χ|_{F^*} unramified).
    pub fn restriction_to_f_unramified(&self, fgroup: &FUnitGroup) -> bool {
        match &self.unit {
            None => true,
            Some((g, _)) => {
                assert_eq!(g.level, fgroup.level);
                // O_F^* mod ϖ^c is cyclic; test on its generator embedded in E
                let val = self.eval_unit((fgroup.generator % g.modulus, 0)).unwrap();
                (val - C_ONE).norm() < 1e-10
            }
        }
    }

    pub fn eval(&self, ctx: &FieldContext, x: &Ext) -> Result<C64> {
        let v2 = ctx
            .ext_val2(x)
            .ok_or_else(|| Error::Precision("character of a value that vanishes at the working precision".into()))?;
        if v2 % 2 != 0 {
            return Err(Error::Domain("inert valuations are integral".into()));
        }
        let v = v2 / 2;
        let lvl = match &self.unit {
            None => return Ok(self.at_pi.powi(v as i32)),
            Some((g, _)) => g.level,
        };
        // unit part: x / ϖ^v componentwise
        let pv = ctx.pi_pow(v);
        let a = x.a.div(&pv)?;
        let b = x.b.div(&pv)?;
        let au = if a.is_zero() { 0 } else { a.int_lift(lvl)? };
        let bu = if b.is_zero() { 0 } else { b.int_lift(lvl)? };
        Ok(self.at_pi.powi(v as i32) * self.eval_unit((au, bu))?)
    }
}

/// A multiplicative character of F^* or E^*.
#[derive(Clone, Debug)]
pub enum MultChar {
    F(FChar),
    EInert(EChar),
    /// Ramified quadratic extension: determined by the value at ϖ_E
    /// (we only need characters unramified on O_E^* there).
    ERam { at_pi_e: C64 },
    /// Split E ≅ F ⊕ F: one F-character per place.
    ESplit(FChar, FChar),
}

impl MultChar {
    /// Level (conductor exponent) of the unit part; split returns the max.
    pub fn level(&self) -> u32 {
        match self {
            MultChar::F(c) => c.level(),
            MultChar::EInert(c) => c.level(),
            MultChar::ERam { .. } => 0,
            MultChar::ESplit(a, b) => a.level().max(b.level()),
        }
    }
}

/// χ|·|_E^{s+1/2} (Plus) or χ|·|_E^{-s-1/2} (Minus) as a value at the
/// uniformizer; |ϖ|_E = q^{-2} inert, |ϖ_E|_E = q^{-1} ramified,
/// |ϖ|_{E_i} = q^{-1} at each split place.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftSign {
    Plus,
    Minus,
}

pub fn shift_factor(q: f64, kind: ExtKind, s: C64, sign: ShiftSign) -> C64 {
    let e = match sign {
        ShiftSign::Plus => s + 0.5,
        ShiftSign::Minus => -(s + 0.5),
    };
    let norm_pi = match kind {
        ExtKind::Inert => q * q,
        _ => q,
    };
    crate::cnum::q_pow(norm_pi, -e)
}

/// ∫_{v(m)=j} ψ(m) dm with vol(O, dm) = 1: 0 for j < −1, −1 at j = −1,
/// q^{−j}(1−q^{−1}) for j ≥ 0.
pub fn additive_psi_integral(q: f64, j: i64) -> C64 {
    if j < -1 {
        C_ZERO
    } else if j == -1 {
        C64::new(-1.0, 0.0)
    } else {
        C64::new(q.powi(-j as i32) * (1.0 - 1.0 / q), 0.0)
    }
}

/// Direct summation of ∫_{x∈O^*} μ(1+ϖ^i x) dx for a level-k character μ.
/// The closed rule (0 for i<k−1, −q^{−1} at i=k−1, 1−q^{−1} for i≥k) is in
/// [`gauss_shift_closed`]; the invariant suite compares the two.
pub fn gauss_shift_integral(ctx: &FieldContext, mu: &FChar, i: i64) -> Result<C64> {
    let k = mu.level();
    if k == 0 {
        return Err(Error::Domain("gauss_shift_integral needs a ramified character".into()));
    }
    let q = ctx.q();
    if i != 0 {
        // 1+ϖ^i x has fixed valuation min(0, i) over the whole domain, so a
        // single enumeration level suffices
        let l = (k as i64 + i.abs()).max(k as i64).max(1) as u32;
        if l > ctx.precision() {
            return Err(Error::Precision(format!("need residues at level {l}")));
        }
        let mut sum = C_ZERO;
        for u in ctx.enumerate_residues(l)? {
            let x = ctx.elt(0, u);
            let arg = ctx.one().add(&ctx.pi_pow(i).mul(&x));
            sum += mu.eval(&arg)?;
        }
        return Ok(sum * q.powi(-(l as i32)));
    }
    // i = 0: the coset x ≡ −1 sends 1+x into deeper shells; refine it shell
    // by shell and close the tail with the exact unit-character shell average.
    let depth = 2 * k + 4;
    if (depth + k) > ctx.precision() {
        return Err(Error::Precision("context precision too small for shell refinement".into()));
    }
    let mut sum = C_ZERO;
    // regular part: x not ≡ −1 mod ϖ
    for u in ctx.enumerate_residues(k.max(1))? {
        if (u + 1) % ctx.p() as u128 == 0 {
            continue;
        }
        let arg = ctx.one().add(&ctx.elt(0, u));
        sum += mu.eval(&arg)? * q.powi(-(k.max(1) as i32));
    }
    // shells v(1+x) = j ≥ 1: x = −1 + ϖ^j u, u a unit mod ϖ^k
    for j in 1..=depth {
        for u in ctx.enumerate_residues(k)? {
            let arg = ctx.elt(j as i64, u); // 1+x = ϖ^j u
            sum += mu.eval(&arg)? * q.powi(-((j + k) as i32));
        }
    }
    // analytic tail: Σ_{j>depth} at_pi^j q^{-j} q^{-k} Σ_u μ_unit(u); the
    // unit sum vanishes for ramified μ, kept explicit for honesty
    let mut unit_sum = C_ZERO;
    for u in ctx.enumerate_residues(k)? {
        unit_sum += mu.eval_unit(u)?;
    }
    let r = mu.at_pi / q;
    if r.norm() < 0.999 {
        let tail = unit_sum * r.powi(depth as i32 + 1) / (C_ONE - r) * q.powi(-(k as i32));
        sum += tail;
    } else if unit_sum.norm() > 1e-12 {
        return Err(Error::Divergent("gauss shift tail is not geometric-summable".into()));
    }
    Ok(sum)
}

pub fn gauss_shift_closed(q: f64, k: u32, i: i64) -> C64 {
    if i < k as i64 - 1 {
        C_ZERO
    } else if i == k as i64 - 1 {
        C64::new(-1.0 / q, 0.0)
    } else {
        C64::new(1.0 - 1.0 / q, 0.0)
    }
}

/// Which branch of torus representatives to sum over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TorusBranch {
    /// t = 1 + b√D with b ∈ O/ϖ^c
    OnePlusB,
    /// t = b + √D with b ∈ ϖO/ϖ^c
    BPlusSqrtD,
}

/// Direct summation of Σ_{v(b)=i} χ(1+b√D) (resp. χ(√D+b)) over residues
/// b ∈ O/ϖ^c, for a level-c character χ of E^* unramified on F^*.
pub fn torus_character_sum(
    ctx: &FieldContext,
    chi: &EChar,
    fgroup: &FUnitGroup,
    i: u32,
    branch: TorusBranch,
) -> Result<C64> {
    let c = chi.level();
    if c == 0 {
        return Err(Error::Domain("torus sum needs a ramified character".into()));
    }
    if !chi.restriction_to_f_unramified(fgroup) {
        return Err(Error::Domain("χ must be unramified on F^*".into()));
    }
    if i > c {
        return Err(Error::Domain("valuation exceeds level".into()));
    }
    let m = ctx.p_pow(c);
    let p = ctx.p() as u128;
    let mut sum = C_ZERO;
    for b in 0..m {
        let vb = val_of_residue(b, p, c);
        if vb != i {
            continue;
        }
        let bf = ctx.from_int(0).add(&from_residue(ctx, b));
        let t = match branch {
            TorusBranch::OnePlusB => ctx.ext_from_ab(&ctx.one(), &bf),
            TorusBranch::BPlusSqrtD => ctx.ext_from_ab(&bf, &ctx.one()),
        };
        sum += chi.eval(ctx, &t)?;
    }
    Ok(sum)
}

fn val_of_residue(b: u128, p: u128, c: u32) -> u32 {
    if b == 0 {
        return c;
    }
    let mut v = 0;
    let mut x = b;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

fn from_residue(ctx: &FieldContext, b: u128) -> Fp {
    // smallest-lift residue as an exact element
    let mut x = ctx.zero();
    if b != 0 {
        let p = ctx.p() as u128;
        let mut val = 0u32;
        let mut m = b;
        while m % p == 0 {
            m /= p;
            val += 1;
        }
        x = ctx.elt(val as i64, m);
    }
    x
}

/// Expand u ↦ f(u) on (O/ϖ^L)^* into unit characters: returns (e, coeff)
/// with f(u) = Σ_e coeff_e ν_e(u), ν_e = ζ^{e·dlog}. Exact finite Fourier
/// analysis on the cyclic unit group.
pub fn mellin_expand(
    group: &FUnitGroup,
    f: impl Fn(u128) -> C64,
) -> Vec<(u64, C64)> {
    let n = group.order;
    // values indexed by dlog
    let mut vals = vec![C_ZERO; n as usize];
    let mut acc: u128 = 1;
    for k in 0..n {
        vals[k as usize] = f(acc);
        acc = acc * group.generator % group.modulus;
    }
    let mut out = Vec::new();
    for e in 0..n {
        let mut c = C_ZERO;
        for k in 0..n {
            c += vals[k as usize] * unity(-((e as i64) * (k as i64)), n);
        }
        c /= n as f64;
        if c.norm() > 1e-13 {
            out.push((e, c));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnum::approx_eq;

    fn ctx3() -> FieldContext {
        FieldContext::new(3, 14, ExtKind::Inert, 2).unwrap()
    }

    #[test]
    fn f_unit_group_basics() {
        let g = FUnitGroup::new(5, 1).unwrap();
        assert_eq!(g.order, 4);
        let g2 = FUnitGroup::new(3, 2).unwrap();
        assert_eq!(g2.order, 6);
        // dlog consistency
        let x = 7 % g2.modulus;
        let k = g2.dlog(x).unwrap();
        assert_eq!(pow_mod_u128(g2.generator, k, g2.modulus), x);
    }

    #[test]
    fn f_char_level_and_multiplicativity() {
        let ctx = ctx3();
        let g = FUnitGroup::new(3, 2).unwrap();
        let chi = FChar::with_unit(C_ONE, g.clone(), 1).unwrap();
        assert_eq!(chi.level(), 2);
        // exponent 3 is trivial on 1-units (order 6, subgroup of order 3): level 1
        assert!(FChar::with_unit(C_ONE, g.clone(), 3).is_err());
        let g1 = FUnitGroup::new(3, 1).unwrap();
        let chi1 = FChar::with_unit(C_ONE, g1, 1).unwrap();
        assert_eq!(chi1.level(), 1);
        // full multiplicativity over (O/ϖ²)^*
        for u in ctx.enumerate_residues(2).unwrap() {
            for v in ctx.enumerate_residues(2).unwrap() {
                let x = ctx.elt(0, u);
                let y = ctx.elt(0, v);
                let lhs = chi.eval(&x.mul(&y)).unwrap();
                let rhs = chi.eval(&x).unwrap() * chi.eval(&y).unwrap();
                assert!(approx_eq(lhs, rhs, 1e-12));
            }
        }
    }

    #[test]
    fn e_unit_group_structure() {
        let ctx = ctx3();
        for lvl in 1..=2u32 {
            let g = EUnitGroup::new(&ctx, lvl).unwrap();
            let expected = (9 - 1) * 9u64.pow(lvl - 1);
            assert_eq!(
                g.orders.iter().product::<u64>(),
                expected,
                "group order at level {lvl}"
            );
        }
    }

    #[test]
    fn additive_psi_closed_vs_direct() {
        let ctx = ctx3();
        let q = 3.0f64;
        // direct: ∫_{v(m)=j} ψ(m) dm = Σ over unit residues at depth −j
        for j in -3i64..=2 {
            let direct = if j >= 0 {
                // ψ = 1 on the shell
                C64::new(q.powi(-j as i32) * (1.0 - 1.0 / q), 0.0)
            } else {
                let l = (-j) as u32;
                let mut s = C_ZERO;
                for u in ctx.enumerate_residues(l + 2).unwrap() {
                    let m = ctx.elt(j, u);
                    s += m.psi().unwrap();
                }
                // each residue at level l+2 has dm-measure q^{j-(l+2)}·...:
                // shell {v(m)=j} = ϖ^j·(units mod ϖ^{l+2}) with dm-measure q^{-j}·(each coset q^{-(l+2)})
                s * q.powi(-(j as i32) - (l as i32 + 2))
            };
            assert!(
                approx_eq(direct, additive_psi_integral(q, j), 1e-10),
                "j={j}: {direct} vs {}",
                additive_psi_integral(q, j)
            );
        }
    }

    #[test]
    fn gauss_shift_matches_closed_rule() {
        for p in [3u64, 5] {
            let ctx = FieldContext::new(p, 14, ExtKind::Inert, 2).unwrap();
            for k in 1..=3u32 {
                let g = FUnitGroup::new(p, k).unwrap();
                let mu = FChar::with_unit(C_ONE, g, 1).unwrap();
                assert_eq!(mu.level(), k);
                for i in -2i64..=4 {
                    let direct = gauss_shift_integral(&ctx, &mu, i).unwrap();
                    let closed = gauss_shift_closed(p as f64, k, i);
                    assert!(
                        approx_eq(direct, closed, 1e-9),
                        "p={p} k={k} i={i}: {direct} vs {closed}"
                    );
                }
            }
        }
    }

    #[test]
    fn char_squaring_keeps_level() {
        // for p odd and level n ≥ 2, ν² still has level n
        for p in [3u64, 5, 7] {
            for n in 2..=3u32 {
                let g = FUnitGroup::new(p, n).unwrap();
                let nu = FChar::with_unit(C_ONE, g.clone(), 1).unwrap();
                let sq = nu.mul(&nu).unwrap();
                assert_eq!(sq.level(), n, "p={p} n={n}");
            }
        }
    }

    #[test]
    fn e_char_level_restriction_and_orthogonality() {
        let ctx = ctx3();
        let c = 2u32;
        let eg = EUnitGroup::new(&ctx, c).unwrap();
        let fg = FUnitGroup::new(3, c).unwrap();
        // search an exponent vector: level c, trivial on F^*
        let mut found = None;
        'srch: for e0 in 0..eg.orders[0] {
            for e1 in 0..eg.orders[1] {
                for e2 in 0..eg.orders[2] {
                    if let Ok(ch) = EChar::with_unit(C_ONE, eg.clone(), [e0, e1, e2]) {
                        if ch.restriction_to_f_unramified(&fg) {
                            found = Some(ch);
                            break 'srch;
                        }
                    }
                }
            }
        }
        let chi = found.expect("a level-c character trivial on F^* exists for inert E");
        assert_eq!(chi.level(), c);
        // orthogonality: sum over all units of E is 0 for nontrivial χ
        let mut s = C_ZERO;
        for (a, b) in ctx.enumerate_residues_e(c).unwrap() {
            s += chi.eval_unit((a, b)).unwrap();
        }
        assert!(s.norm() < 1e-9, "orthogonality sum = {s}");
    }

    #[test]
    fn torus_sums_match_closed_rule() {
        let ctx = ctx3();
        let c = 2u32;
        let eg = EUnitGroup::new(&ctx, c).unwrap();
        let fg = FUnitGroup::new(3, c).unwrap();
        let mut chi = None;
        'srch: for e0 in 0..eg.orders[0] {
            for e1 in 0..eg.orders[1] {
                for e2 in 0..eg.orders[2] {
                    if let Ok(ch) = EChar::with_unit(C_ONE, eg.clone(), [e0, e1, e2]) {
                        if ch.restriction_to_f_unramified(&fg) {
                            chi = Some(ch);
                            break 'srch;
                        }
                    }
                }
            }
        }
        let chi = chi.unwrap();
        for i in 0..=c {
            let s = torus_character_sum(&ctx, &chi, &fg, i, TorusBranch::OnePlusB).unwrap();
            let expected = if i == c {
                C_ONE
            } else if i == c - 1 {
                C64::new(-1.0, 0.0)
            } else {
                C_ZERO
            };
            assert!(approx_eq(s, expected, 1e-9), "b1 branch i={i}: {s}");
            let s2 = torus_character_sum(&ctx, &chi, &fg, i, TorusBranch::BPlusSqrtD).unwrap();
            let sqrt_d_val = chi.eval(&ctx, &ctx.ext_sqrt_d()).unwrap();
            assert!(approx_eq(s2, sqrt_d_val * expected, 1e-9), "b2 branch i={i}: {s2}");
        }
    }

    #[test]
    fn torus_sum_level_one_combined_identity() {
        let ctx = ctx3();
        let eg = EUnitGroup::new(&ctx, 1).unwrap();
        let fg = FUnitGroup::new(3, 1).unwrap();
        let mut chi = None;
        for e0 in 1..eg.orders[0] {
            if let Ok(ch) = EChar::with_unit(C_ONE, eg.clone(), [e0, 0, 0]) {
                if ch.restriction_to_f_unramified(&fg) {
                    chi = Some(ch);
                    break;
                }
            }
        }
        let chi = chi.expect("level-1 character trivial on F^*");
        // Σ_{b₁∈O/ϖ} χ(1+b₁√D) + χ(√D) = 0
        let mut s = C_ZERO;
        for b in 0..3u128 {
            let bf = from_residue(&ctx, b);
            s += chi.eval(&ctx, &ctx.ext_from_ab(&ctx.one(), &bf)).unwrap();
        }
        s += chi.eval(&ctx, &ctx.ext_sqrt_d()).unwrap();
        assert!(s.norm() < 1e-9, "combined sum = {s}");
    }

    #[test]
    fn mellin_expansion_reconstructs() {
        let g = FUnitGroup::new(5, 2).unwrap();
        // expand ψ(u/25)-like function
        let f = |u: u128| unity(u as i64, 25);
        let coeffs = mellin_expand(&g, f);
        // reconstruct at a few points
        for u in [1u128, 2, 7, 24] {
            let direct = f(u);
            let mut rec = C_ZERO;
            let k = g.dlog(u).unwrap();
            for (e, c) in &coeffs {
                rec += c * unity((*e as i64) * (k as i64), g.order);
            }
            assert!(approx_eq(direct, rec, 1e-10));
        }
    }
}
