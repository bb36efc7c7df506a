//! Truncated p-adic arithmetic over F = Q_p, residue enumeration, and the
//! three quadratic extension geometries (inert, split, ramified).
//!
//! A nonzero element is stored as ϖ^val · unit with the unit known modulo
//! p^prec, i.e. the value is known modulo ϖ^(val+prec). Zero is tracked as
//! O(ϖ^m). Arithmetic follows the usual rules for propagating O(·); any
//! operation that would need digits beyond the context precision N fails
//! loudly instead of truncating silently.

use crate::cnum::{unity, C64, C_ONE};
use crate::error::{Error, Result};

/// Behaviour of the quadratic extension E/F at this place.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtKind {
    Inert,
    Split,
    Ramified,
}

/// F = Q_p truncated at ϖ^N, together with E = F(√D).
///
/// Haar conventions used throughout: vol(O_F, dx) = 1, vol(O_F^*, d^*x) = 1,
/// vol(K) = 1, vol(B(O_F)) = 1.
#[derive(Clone, Debug)]
pub struct FieldContext {
    p: u64,
    prec: u32,
    kind: ExtKind,
    d: i64,
    /// Smallest nonnegative lift of a square root of D mod p^prec (split only).
    sqrt_d: Option<Fp>,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2;
    while k * k <= n {
        if n % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}

impl FieldContext {
    /// Validated constructor. `d` must match `kind`: a non-square unit for
    /// inert, a nonzero square for split; for ramified, E = F(√(p·unit)) is
    /// realized with unit = 1, so `d` must be p itself (ϖ_E² = ϖ).
    pub fn new(p: u64, prec: u32, kind: ExtKind, d: i64) -> Result<Self> {
        if p == 2 {
            return Err(Error::InvalidContext("p must be odd (2 must be a unit)".into()));
        }
        if !is_prime(p) {
            return Err(Error::InvalidContext(format!("{p} is not prime")));
        }
        if prec < 1 {
            return Err(Error::InvalidContext("precision must be >= 1".into()));
        }
        let max_prec = (127.0 / (p as f64).log2()).floor() as u32 - 1;
        if prec > max_prec {
            return Err(Error::InvalidContext(format!(
                "precision {prec} too deep for p={p} (max {max_prec})"
            )));
        }
        let du = d.rem_euclid(p as i64) as u64;
        match kind {
            ExtKind::Inert => {
                if du == 0 || is_square_mod_p(du, p) {
                    return Err(Error::InvalidContext(format!(
                        "inert extension needs a non-square unit, got D={d}"
                    )));
                }
                Ok(FieldContext { p, prec, kind, d, sqrt_d: None })
            }
            ExtKind::Split => {
                if du == 0 || !is_square_mod_p(du, p) {
                    return Err(Error::InvalidContext(format!(
                        "split extension needs a nonzero square unit, got D={d}"
                    )));
                }
                let r = sqrt_hensel(d, p, prec)?;
                let mut ctx = FieldContext { p, prec, kind, d, sqrt_d: None };
                let root = ctx.from_unit_residue(r);
                ctx.sqrt_d = Some(root);
                Ok(ctx)
            }
            ExtKind::Ramified => {
                if d != p as i64 {
                    return Err(Error::InvalidContext(format!(
                        "ramified extension is realized with ϖ_E² = ϖ, so D must be p={p}, got {d}"
                    )));
                }
                Ok(FieldContext { p, prec, kind, d, sqrt_d: None })
            }
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// q = residue field size of F.
    pub fn q(&self) -> f64 {
        self.p as f64
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn kind(&self) -> ExtKind {
        self.kind
    }

    pub fn d(&self) -> i64 {
        self.d
    }

    /// √D as an element of F (split contexts only).
    pub fn sqrt_d(&self) -> Result<Fp> {
        self.sqrt_d
            .clone()
            .ok_or_else(|| Error::Domain("√D lives in F only for split contexts".into()))
    }

    pub fn p_pow(&self, k: u32) -> u128 {
        (self.p as u128).pow(k)
    }

    pub fn zero(&self) -> Fp {
        Fp { p: self.p, val: self.prec as i64, unit: 0, prec: 0 }
    }

    pub fn one(&self) -> Fp {
        self.from_int(1)
    }

    pub fn pi_pow(&self, k: i64) -> Fp {
        Fp { p: self.p, val: k, unit: 1, prec: self.prec }
    }

    /// Exact integer, truncated to context precision.
    pub fn from_int(&self, n: i64) -> Fp {
        if n == 0 {
            return self.zero();
        }
        let mut val = 0i64;
        let mut m = n.unsigned_abs();
        while m % self.p == 0 {
            m /= self.p;
            val += 1;
            if val >= self.prec as i64 {
                return self.zero();
            }
        }
        let modulus = self.p_pow(self.prec);
        let mut u = (m as u128) % modulus;
        if n < 0 {
            u = modulus - u;
        }
        Fp { p: self.p, val, unit: u, prec: self.prec }
    }

    /// Exact rational n/d, truncated to context precision.
    pub fn from_ratio(&self, n: i64, d: i64) -> Result<Fp> {
        if d == 0 {
            return Err(Error::Domain("division by zero".into()));
        }
        let num = self.from_int(n);
        let den = self.from_int(d);
        num.div(&den)
    }

    /// ϖ^val · u where u is a unit residue (u must be coprime to p).
    pub fn from_unit_residue(&self, u: u128) -> Fp {
        let modulus = self.p_pow(self.prec);
        let u = u % modulus;
        assert!(u % self.p as u128 != 0, "residue must be a unit");
        Fp { p: self.p, val: 0, unit: u, prec: self.prec }
    }

    pub fn elt(&self, val: i64, unit: u128) -> Fp {
        let mut x = self.from_unit_residue(unit);
        x.val = val;
        x
    }

    /// ϖ^val·unit with exactly `prec` known unit digits: the element stands
    /// for the whole coset ϖ^val(unit + ϖ^prec O), and downstream operations
    /// fail with a precision error when the coset does not pin their value.
    pub fn elt_with_prec(&self, val: i64, unit: u128, prec: u32) -> Result<Fp> {
        if prec < 1 || prec > self.prec {
            return Err(Error::Precision(format!(
                "requested {prec} digits, context has {}",
                self.prec
            )));
        }
        let m = self.p_pow(prec);
        let u = unit % m;
        if u % self.p as u128 == 0 {
            return Err(Error::Domain("residue must be a unit".into()));
        }
        Ok(Fp { p: self.p, val, unit: u, prec })
    }

    /// Unit residues of (O/ϖ^c)^*, smallest-lift order. Length (q−1)q^(c−1).
    pub fn enumerate_residues(&self, c: u32) -> Result<Vec<u128>> {
        if c < 1 || c > self.prec {
            return Err(Error::Domain(format!(
                "residue level {c} outside 1..={}",
                self.prec
            )));
        }
        let m = self.p_pow(c);
        Ok((1..m).filter(|u| u % self.p as u128 != 0).collect())
    }

    /// All residues of O/ϖ^c (including non-units), smallest-lift order.
    pub fn enumerate_full_residues(&self, c: u32) -> Vec<u128> {
        (0..self.p_pow(c)).collect()
    }

    /// Unit residues of (O_E/ϖ^c O_E)^* for the inert extension, as (a, b)
    /// pairs meaning a + b√D. Length (q²−1)q^(2c−2), lexicographic order.
    pub fn enumerate_residues_e(&self, c: u32) -> Result<Vec<(u128, u128)>> {
        if self.kind != ExtKind::Inert {
            return Err(Error::Domain("E-residue enumeration needs an inert context".into()));
        }
        if c < 1 || c > self.prec {
            return Err(Error::Domain(format!("residue level {c} outside 1..={}", self.prec)));
        }
        let m = self.p_pow(c);
        let p = self.p as u128;
        let mut out = Vec::new();
        for a in 0..m {
            for b in 0..m {
                if a % p != 0 || b % p != 0 {
                    out.push((a, b));
                }
            }
        }
        Ok(out)
    }

    /// Coset representatives of (O_F^* + ϖ^c O_E)\O_E^* in the inert case:
    /// {1 + b₁√D : b₁ ∈ O/ϖ^c} ∪ {b₂ + √D : b₂ ∈ ϖO/ϖ^c}.
    /// Exactly (q+1)q^(c−1) elements.
    pub fn quadratic_coset_reps(&self, c: u32) -> Result<Vec<Ext>> {
        if self.kind != ExtKind::Inert {
            return Err(Error::Domain("quadratic coset reps need an inert context".into()));
        }
        if c < 1 || c > self.prec {
            return Err(Error::Domain(format!("level {c} outside 1..={}", self.prec)));
        }
        let m = self.p_pow(c);
        let mut reps = Vec::new();
        for b1 in 0..m {
            reps.push(Ext { a: self.from_int(1), b: self.from_u128(b1) });
        }
        let p = self.p as u128;
        for b2 in (0..m).step_by(1).filter(|x| x % p == 0) {
            reps.push(Ext { a: self.from_u128(b2), b: self.from_int(1) });
        }
        Ok(reps)
    }

    fn from_u128(&self, n: u128) -> Fp {
        if n == 0 {
            return self.zero();
        }
        let mut val = 0i64;
        let mut m = n;
        while m % self.p as u128 == 0 {
            m /= self.p as u128;
            val += 1;
            if val >= self.prec as i64 {
                return self.zero();
            }
        }
        Fp { p: self.p, val, unit: m % self.p_pow(self.prec), prec: self.prec }
    }

    // ---- extension arithmetic ----

    pub fn ext_zero(&self) -> Ext {
        Ext { a: self.zero(), b: self.zero() }
    }

    pub fn ext_one(&self) -> Ext {
        match self.kind {
            ExtKind::Split => Ext { a: self.one(), b: self.one() },
            _ => Ext { a: self.one(), b: self.zero() },
        }
    }

    /// Build a + b√D. For split contexts this converts to component form
    /// (a + b√D, a − b√D).
    pub fn ext_from_ab(&self, a: &Fp, b: &Fp) -> Ext {
        match self.kind {
            ExtKind::Split => {
                let sd = self.sqrt_d.as_ref().expect("split context has √D");
                let bd = b.mul(sd);
                Ext { a: a.add(&bd), b: a.sub(&bd) }
            }
            _ => Ext { a: a.clone(), b: b.clone() },
        }
    }

    /// Embed an F-scalar into E.
    pub fn ext_from_f(&self, x: &Fp) -> Ext {
        match self.kind {
            ExtKind::Split => Ext { a: x.clone(), b: x.clone() },
            _ => Ext { a: x.clone(), b: self.zero() },
        }
    }

    /// √D as an element of E (the extension uniformizer ϖ_E when ramified).
    pub fn ext_sqrt_d(&self) -> Ext {
        match self.kind {
            ExtKind::Split => {
                let sd = self.sqrt_d.as_ref().expect("split context has √D").clone();
                Ext { a: sd.clone(), b: sd.neg() }
            }
            _ => Ext { a: self.zero(), b: self.one() },
        }
    }

    pub fn ext_add(&self, x: &Ext, y: &Ext) -> Ext {
        Ext { a: x.a.add(&y.a), b: x.b.add(&y.b) }
    }

    pub fn ext_sub(&self, x: &Ext, y: &Ext) -> Ext {
        Ext { a: x.a.sub(&y.a), b: x.b.sub(&y.b) }
    }

    pub fn ext_neg(&self, x: &Ext) -> Ext {
        Ext { a: x.a.neg(), b: x.b.neg() }
    }

    pub fn ext_mul(&self, x: &Ext, y: &Ext) -> Ext {
        match self.kind {
            ExtKind::Split => Ext { a: x.a.mul(&y.a), b: x.b.mul(&y.b) },
            ExtKind::Inert => {
                // (a + b√D)(a' + b'√D) = aa' + bb'D + (ab' + ba')√D
                let d = self.from_int(self.d);
                Ext {
                    a: x.a.mul(&y.a).add(&x.b.mul(&y.b).mul(&d)),
                    b: x.a.mul(&y.b).add(&x.b.mul(&y.a)),
                }
            }
            ExtKind::Ramified => {
                // √D = ϖ_E with ϖ_E² = ϖ
                let pi = self.pi_pow(1);
                Ext {
                    a: x.a.mul(&y.a).add(&x.b.mul(&y.b).mul(&pi)),
                    b: x.a.mul(&y.b).add(&x.b.mul(&y.a)),
                }
            }
        }
    }

    pub fn ext_conj(&self, x: &Ext) -> Ext {
        match self.kind {
            ExtKind::Split => Ext { a: x.b.clone(), b: x.a.clone() },
            _ => Ext { a: x.a.clone(), b: x.b.neg() },
        }
    }

    /// Norm map E → F.
    pub fn ext_norm(&self, x: &Ext) -> Fp {
        match self.kind {
            ExtKind::Split => x.a.mul(&x.b),
            ExtKind::Inert => {
                let d = self.from_int(self.d);
                x.a.mul(&x.a).sub(&x.b.mul(&x.b).mul(&d))
            }
            ExtKind::Ramified => {
                let pi = self.pi_pow(1);
                x.a.mul(&x.a).sub(&x.b.mul(&x.b).mul(&pi))
            }
        }
    }

    pub fn ext_inv(&self, x: &Ext) -> Result<Ext> {
        match self.kind {
            ExtKind::Split => Ok(Ext { a: x.a.inv()?, b: x.b.inv()? }),
            _ => {
                let n = self.ext_norm(x).inv()?;
                let c = self.ext_conj(x);
                Ok(Ext { a: c.a.mul(&n), b: c.b.mul(&n) })
            }
        }
    }

    /// Twice the valuation of x in F-normalized units (so ϖ_E has val2 = 1
    /// in the ramified case). None for (truncation-)zero. Split elements
    /// have a valuation per component; use the components directly.
    /// A component that vanishes at its working precision determines the
    /// valuation only when the other component's valuation is strictly
    /// smaller than the vanishing bound; otherwise the valuation is
    /// unknown (None), which evaluators surface as a precision error.
    pub fn ext_val2(&self, x: &Ext) -> Option<i64> {
        match self.kind {
            ExtKind::Split => panic!("split elements have componentwise valuations"),
            ExtKind::Inert => match (x.a.valuation(), x.b.valuation()) {
                (None, None) => None,
                (Some(v), None) => (x.b.abs_prec() > v).then_some(2 * v),
                (None, Some(v)) => (x.a.abs_prec() > v).then_some(2 * v),
                (Some(v), Some(w)) => Some(2 * v.min(w)),
            },
            ExtKind::Ramified => match (x.a.valuation(), x.b.valuation()) {
                (None, None) => None,
                (Some(v), None) => (2 * x.b.abs_prec() + 1 > 2 * v).then_some(2 * v),
                (None, Some(w)) => (2 * x.a.abs_prec() > 2 * w + 1).then_some(2 * w + 1),
                (Some(v), Some(w)) => Some((2 * v).min(2 * w + 1)),
            },
        }
    }

    /// Matrix embedding t = a + b√D ↦ (a b; bD a) with entries in F.
    /// Split contexts embed via the fixed √D ∈ F.
    pub fn ext_embed(&self, x: &Ext) -> [Fp; 4] {
        let (a, b) = match self.kind {
            ExtKind::Split => {
                // recover (a, b) from components (a+b√D, a−b√D); 2 is a unit
                let sd = self.sqrt_d.as_ref().expect("split √D");
                let two_inv = self.from_ratio(1, 2).expect("2 is a unit");
                let a = x.a.add(&x.b).mul(&two_inv);
                let b = x.a.sub(&x.b).mul(&two_inv).div(sd).expect("√D unit");
                (a, b)
            }
            _ => (x.a.clone(), x.b.clone()),
        };
        let d = self.from_int(self.d);
        [a.clone(), b.clone(), b.mul(&d), a]
    }
}

fn is_square_mod_p(u: u64, p: u64) -> bool {
    // Euler criterion, p odd
    pow_mod(u % p, (p - 1) / 2, p) == 1
}

fn pow_mod(b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc: u128 = 1;
    let mm = m as u128;
    let mut bb = (b % m) as u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * bb % mm;
        }
        bb = bb * bb % mm;
        e >>= 1;
    }
    acc as u64
}

/// Hensel-lift the smaller square root of d mod p up to p^prec; returns the
/// smallest nonnegative lift among the two roots.
fn sqrt_hensel(d: i64, p: u64, prec: u32) -> Result<u128> {
    let dp = d.rem_euclid(p as i64) as u64;
    let mut r0 = None;
    for r in 1..p {
        if r * r % p == dp {
            r0 = Some(r);
            break;
        }
    }
    let mut r = r0.ok_or_else(|| Error::InvalidContext("not a square mod p".into()))? as u128;
    let mut modulus = p as u128;
    let target_mod = (p as u128).pow(prec);
    let d_mod = (d.rem_euclid(target_mod as i64 * if target_mod as i64 > 0 { 1 } else { 1 }) as u128) % target_mod;
    while modulus < target_mod {
        modulus = (modulus * modulus).min(target_mod);
        // Newton step r <- r - (r²-d)/(2r) mod modulus
        let two_r = mul_mod(2 % modulus, r % modulus, modulus);
        let inv = inv_mod(two_r, modulus)?;
        let r2 = mul_mod(r % modulus, r % modulus, modulus);
        let diff = (r2 + modulus - d_mod % modulus) % modulus;
        r = (r % modulus + modulus - mul_mod(diff, inv, modulus)) % modulus;
    }
    let other = (target_mod - r) % target_mod;
    Ok(r.min(other))
}

fn mul_mod(a: u128, b: u128, m: u128) -> u128 {
    // moduli stay below 2^64 in practice (p ≤ 13, prec ≤ ~26) but keep it safe
    if let (Ok(a64), Ok(b64), Ok(m64)) = (u64::try_from(a), u64::try_from(b), u64::try_from(m)) {
        ((a64 as u128) * (b64 as u128) % (m64 as u128)) as u128
    } else {
        // schoolbook double-and-add
        let mut acc: u128 = 0;
        let mut a = a % m;
        let mut b = b % m;
        while b > 0 {
            if b & 1 == 1 {
                acc = acc.wrapping_add(a) % m;
            }
            a = a.wrapping_shl(1) % m;
            b >>= 1;
        }
        acc
    }
}

fn inv_mod(a: u128, m: u128) -> Result<u128> {
    // extended Euclid over i128 (m < 2^127)
    let (mut t, mut new_t): (i128, i128) = (0, 1);
    let (mut r, mut new_r): (i128, i128) = (m as i128, (a % m) as i128);
    while new_r != 0 {
        let qt = r / new_r;
        (t, new_t) = (new_t, t - qt * new_t);
        (r, new_r) = (new_r, r - qt * new_r);
    }
    if r != 1 {
        return Err(Error::Domain("non-invertible residue".into()));
    }
    Ok(t.rem_euclid(m as i128) as u128)
}

/// One truncated element of F = Q_p.
#[derive(Clone, Debug)]
pub struct Fp {
    p: u64,
    /// valuation (nonzero) or the O(ϖ^val) exponent (zero)
    val: i64,
    /// unit part mod p^prec; 0 encodes zero
    unit: u128,
    prec: u32,
}

impl Fp {
    pub fn is_zero(&self) -> bool {
        self.unit == 0
    }

    /// None encodes the +∞ sentinel of the zero element.
    pub fn valuation(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.val)
        }
    }

    /// Absolute precision: the element is known modulo ϖ^(this).
    pub fn abs_prec(&self) -> i64 {
        if self.is_zero() {
            self.val
        } else {
            self.val + self.prec as i64
        }
    }

    pub fn rel_prec(&self) -> u32 {
        self.prec
    }

    fn p_pow(&self, k: u32) -> u128 {
        (self.p as u128).pow(k)
    }

    /// Unit part as a residue in (O/ϖ^level)^*. Errors if not enough digits.
    pub fn unit_residue(&self, level: u32) -> Result<u128> {
        if self.is_zero() {
            return Err(Error::Domain("zero has no unit part".into()));
        }
        if level > self.prec {
            return Err(Error::Precision(format!(
                "unit residue requested at level {level}, only {} digits known",
                self.prec
            )));
        }
        Ok(self.unit % self.p_pow(level))
    }

    pub fn add(&self, other: &Fp) -> Fp {
        debug_assert_eq!(self.p, other.p);
        let abs = self.abs_prec().min(other.abs_prec());
        if self.is_zero() && other.is_zero() {
            return Fp { p: self.p, val: abs, unit: 0, prec: 0 };
        }
        if self.is_zero() {
            return other.truncate_abs(abs);
        }
        if other.is_zero() {
            return self.truncate_abs(abs);
        }
        let (lo, hi) = if self.val <= other.val { (self, other) } else { (other, self) };
        let shift = (hi.val - lo.val) as u32;
        let digits = (abs - lo.val).max(0) as u32;
        if digits == 0 {
            return Fp { p: self.p, val: abs, unit: 0, prec: 0 };
        }
        let modulus = self.p_pow(digits);
        let mut sum = lo.unit % modulus;
        if shift < digits {
            sum = (sum + (hi.unit % self.p_pow(digits - shift)) * self.p_pow(shift)) % modulus;
        }
        Fp::normalize(self.p, lo.val, sum, digits)
    }

    fn normalize(p: u64, val: i64, mut mantissa: u128, digits: u32) -> Fp {
        if mantissa == 0 {
            return Fp { p, val: val + digits as i64, unit: 0, prec: 0 };
        }
        let mut t = 0u32;
        while mantissa % p as u128 == 0 {
            mantissa /= p as u128;
            t += 1;
        }
        Fp { p, val: val + t as i64, unit: mantissa, prec: digits - t }
    }

    /// Forget digits beyond absolute precision ϖ^abs.
    pub fn truncate_abs(&self, abs: i64) -> Fp {
        if self.is_zero() {
            return Fp { p: self.p, val: abs.min(self.val), unit: 0, prec: 0 };
        }
        if abs <= self.val {
            return Fp { p: self.p, val: abs, unit: 0, prec: 0 };
        }
        let digits = ((abs - self.val) as u32).min(self.prec);
        Fp { p: self.p, val: self.val, unit: self.unit % self.p_pow(digits), prec: digits }
    }

    pub fn neg(&self) -> Fp {
        if self.is_zero() {
            return self.clone();
        }
        let m = self.p_pow(self.prec);
        Fp { p: self.p, val: self.val, unit: (m - self.unit % m) % m, prec: self.prec }
    }

    pub fn sub(&self, other: &Fp) -> Fp {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Fp) -> Fp {
        debug_assert_eq!(self.p, other.p);
        if self.is_zero() || other.is_zero() {
            // 0·x is zero at precision O(ϖ^(m + v(x))) — conservative: keep min abs
            let v = self.valuation().or(other.valuation()).unwrap_or(0);
            let m = if self.is_zero() { self.val } else { other.val };
            return Fp { p: self.p, val: m + v, unit: 0, prec: 0 };
        }
        let prec = self.prec.min(other.prec);
        let modulus = self.p_pow(prec);
        Fp {
            p: self.p,
            val: self.val + other.val,
            unit: mul_mod(self.unit % modulus, other.unit % modulus, modulus),
            prec,
        }
    }

    pub fn inv(&self) -> Result<Fp> {
        if self.is_zero() {
            return Err(Error::Domain("inverting zero".into()));
        }
        let modulus = self.p_pow(self.prec);
        Ok(Fp {
            p: self.p,
            val: -self.val,
            unit: inv_mod(self.unit, modulus)?,
            prec: self.prec,
        })
    }

    pub fn div(&self, other: &Fp) -> Result<Fp> {
        Ok(self.mul(&other.inv()?))
    }

    /// Equality at the shared absolute precision.
    pub fn eq_prec(&self, other: &Fp) -> bool {
        let abs = self.abs_prec().min(other.abs_prec());
        let a = self.truncate_abs(abs);
        let b = other.truncate_abs(abs);
        a.is_zero() == b.is_zero() && a.val == b.val && a.unit == b.unit
    }

    /// Smallest nonnegative integer lift of a nonnegative-valuation element
    /// modulo ϖ^level (level ≤ abs precision).
    pub fn int_lift(&self, level: u32) -> Result<u128> {
        if self.is_zero() {
            return Ok(0);
        }
        if self.val < 0 {
            return Err(Error::Domain("negative valuation has no integral lift".into()));
        }
        if (self.val + self.prec as i64) < level as i64 {
            return Err(Error::Precision(format!(
                "lift mod ϖ^{level} needs more digits (abs prec {})",
                self.abs_prec()
            )));
        }
        let m = self.p_pow(level);
        Ok(self.unit % self.p_pow(level.saturating_sub(self.val as u32)) * self.p_pow((self.val as u32).min(level)) % m)
    }

    /// ψ(x) = e^{2πi {x}_p} for the unramified additive character ψ.
    pub fn psi(&self) -> Result<C64> {
        match self.valuation() {
            None => {
                // zero known mod ϖ^m: ψ well-defined only if m ≥ 0
                if self.val >= 0 {
                    Ok(C_ONE)
                } else {
                    Err(Error::Precision("ψ of a zero known only past ϖ^0".into()))
                }
            }
            Some(v) if v >= 0 => Ok(C_ONE),
            Some(v) => {
                let k = (-v) as u32;
                if self.prec < k {
                    return Err(Error::Precision(format!(
                        "ψ needs the unit mod ϖ^{k}, have {} digits",
                        self.prec
                    )));
                }
                let den = self.p_pow(k);
                let num = self.unit % den;
                Ok(unity(num as i64, den as u64))
            }
        }
    }
}

/// Element of the quadratic extension E. Meaning of the fields depends on
/// the context kind: a + b√D for inert/ramified, components (a+b√D, a−b√D)
/// for split.
#[derive(Clone, Debug)]
pub struct Ext {
    pub a: Fp,
    pub b: Fp,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f5() -> FieldContext {
        FieldContext::new(5, 12, ExtKind::Inert, 2).unwrap()
    }

    #[test]
    fn context_validation() {
        assert!(FieldContext::new(2, 8, ExtKind::Inert, 3).is_err());
        assert!(FieldContext::new(5, 8, ExtKind::Inert, 4).is_err()); // 4 = 2² is a square
        assert!(FieldContext::new(5, 8, ExtKind::Inert, 2).is_ok()); // 2 is a non-residue mod 5
        assert!(FieldContext::new(5, 8, ExtKind::Split, 2).is_err());
        let c = FieldContext::new(5, 8, ExtKind::Split, 4).unwrap();
        // smallest lift of ±2 is 2
        assert_eq!(c.sqrt_d().unwrap().unit_residue(1).unwrap(), 2);
        assert!(FieldContext::new(5, 8, ExtKind::Ramified, 5).is_ok());
        assert!(FieldContext::new(5, 8, ExtKind::Ramified, 10).is_err());
    }

    #[test]
    fn arithmetic_basics() {
        let c = f5();
        let x = c.from_int(75); // 3·5²
        assert_eq!(x.valuation(), Some(2));
        assert_eq!(x.unit_residue(1).unwrap(), 3);
        let y = c.from_int(-75);
        assert!(x.add(&y).is_zero());
        let z = x.mul(&c.from_int(10));
        assert_eq!(z.valuation(), Some(3));
        assert_eq!(z.unit_residue(2).unwrap(), 6 % 25);
        let w = c.from_ratio(1, 5).unwrap();
        assert_eq!(w.valuation(), Some(-1));
        assert!(w.mul(&c.from_int(5)).eq_prec(&c.one()));
    }

    #[test]
    fn cancellation_tracks_precision() {
        let c = f5();
        let x = c.from_int(1 + 625); // 1 + 5^4
        let y = c.from_int(1);
        let d = x.sub(&y);
        assert_eq!(d.valuation(), Some(4));
        // 12 digits absolute knowledge, 4 eaten by cancellation
        assert_eq!(d.rel_prec(), 8);
    }

    #[test]
    fn psi_values() {
        let c = f5();
        // ψ(1/5) = e^{2πi/5}
        let x = c.from_ratio(1, 5).unwrap();
        let z = x.psi().unwrap();
        assert!((z - unity(1, 5)).norm() < 1e-12);
        assert!((c.from_int(3).psi().unwrap() - C_ONE).norm() < 1e-12);
        // ψ(2/25)
        let y = c.from_ratio(2, 25).unwrap();
        assert!((y.psi().unwrap() - unity(2, 25)).norm() < 1e-12);
    }

    #[test]
    fn residue_enumeration_counts() {
        for p in [3u64, 5, 7] {
            let c = FieldContext::new(p, 10, ExtKind::Ramified, p as i64).unwrap();
            for lvl in 1..=3u32 {
                let n = c.enumerate_residues(lvl).unwrap().len() as u64;
                assert_eq!(n, (p - 1) * p.pow(lvl - 1));
            }
        }
        let c3 = FieldContext::new(3, 10, ExtKind::Inert, 2).unwrap();
        assert_eq!(c3.enumerate_residues(1).unwrap(), vec![1, 2]);
        assert_eq!(c3.enumerate_residues(2).unwrap().len(), 6);
        assert_eq!(c3.enumerate_residues_e(1).unwrap().len(), 8); // 3²−1
        assert_eq!(c3.enumerate_residues_e(2).unwrap().len(), (9 - 1) * 9);
    }

    #[test]
    fn quadratic_coset_rep_counts() {
        let c3 = FieldContext::new(3, 10, ExtKind::Inert, 2).unwrap();
        assert_eq!(c3.quadratic_coset_reps(1).unwrap().len(), 4);
        assert_eq!(c3.quadratic_coset_reps(2).unwrap().len(), 12);
        let c5 = FieldContext::new(5, 10, ExtKind::Inert, 2).unwrap();
        assert_eq!(c5.quadratic_coset_reps(1).unwrap().len(), 6);
    }

    #[test]
    fn extension_norm_conj() {
        for (kind, d) in [(ExtKind::Inert, 2i64), (ExtKind::Ramified, 5), (ExtKind::Split, 4)] {
            let c = FieldContext::new(5, 12, kind, d).unwrap();
            let x = c.ext_from_ab(&c.from_int(3), &c.from_int(7));
            let y = c.ext_from_ab(&c.from_int(-2), &c.from_int(11));
            // norm multiplicativity
            let nx = c.ext_norm(&x);
            let ny = c.ext_norm(&y);
            let nxy = c.ext_norm(&c.ext_mul(&x, &y));
            assert!(nxy.eq_prec(&nx.mul(&ny)), "{kind:?}");
            // t·t̄ = norm(t)
            let tt = c.ext_mul(&x, &c.ext_conj(&x));
            match kind {
                ExtKind::Split => {
                    assert!(tt.a.eq_prec(&nx) && tt.b.eq_prec(&nx));
                }
                _ => {
                    assert!(tt.a.eq_prec(&nx));
                    assert!(tt.b.is_zero());
                }
            }
            // conj ∘ conj = id
            let cc = c.ext_conj(&c.ext_conj(&x));
            assert!(cc.a.eq_prec(&x.a) && cc.b.eq_prec(&x.b));
        }
    }

    #[test]
    fn ramified_valuations() {
        let c = FieldContext::new(5, 12, ExtKind::Ramified, 5).unwrap();
        let sqrt_d = c.ext_sqrt_d();
        assert_eq!(c.ext_val2(&sqrt_d), Some(1)); // v(√D) = 1/2
        let x = c.ext_mul(&sqrt_d, &sqrt_d);
        assert_eq!(c.ext_val2(&x), Some(2)); // ϖ_E² = ϖ
        assert!(x.a.eq_prec(&c.pi_pow(1)));
        let u = c.ext_from_ab(&c.from_int(3), &c.from_int(1));
        assert_eq!(c.ext_val2(&u), Some(0));
    }

    #[test]
    fn inert_valuation_is_min() {
        let c = f5();
        let x = c.ext_from_ab(&c.from_int(25), &c.from_int(10));
        assert_eq!(c.ext_val2(&x), Some(2)); // min(2, 1)·2
        let u = c.ext_from_ab(&c.from_int(4), &c.from_int(15));
        assert_eq!(c.ext_val2(&u), Some(0));
        // norm of a unit is a unit
        assert_eq!(c.ext_norm(&u).valuation(), Some(0));
    }

    #[test]
    fn embed_det_is_norm() {
        for (kind, d) in [(ExtKind::Inert, 2i64), (ExtKind::Split, 4)] {
            let c = FieldContext::new(5, 12, kind, d).unwrap();
            let x = c.ext_from_ab(&c.from_int(3), &c.from_int(7));
            let m = c.ext_embed(&x);
            let det = m[0].mul(&m[3]).sub(&m[1].mul(&m[2]));
            assert!(det.eq_prec(&c.ext_norm(&x)));
        }
    }
}
