//! Induced-representation sections Φ_s and their evaluation at γ₀·b-type
//! arguments, plus the coset-decomposition coefficients A_i for integrating
//! right-K₁(ϖ^c)-invariant functions over GL₂.

use num_rational::Ratio;

use crate::chars::{EChar, FChar};
use crate::cnum::{q_pow, C64, C_ZERO};
use crate::error::{Error, Result};
use crate::matrix::{decompose_iwasawa_with_det, LocalScalar, Mat2};
use crate::padic::{Ext, ExtKind, FieldContext, Fp};

/// A_0 = q/(q+1), A_i = (q−1)/((q+1)q^i) for 0 < i < c,
/// A_c = 1/((q+1)q^(c−1)); exact rationals summing to 1.
pub fn decomp_coefficients(q: u64, c: u32) -> Vec<Ratio<i64>> {
    assert!(c >= 1);
    let q = q as i64;
    let mut out = Vec::with_capacity(c as usize + 1);
    out.push(Ratio::new(q, q + 1));
    for i in 1..c {
        out.push(Ratio::new(q - 1, (q + 1) * q.pow(i)));
    }
    out.push(Ratio::new(1, (q + 1) * q.pow(c - 1)));
    out
}

/// vol(K₀(ϖ^j)) = 1/((q+1)q^(j−1)) under vol(K)=1.
pub fn vol_k0(q: u64, j: u32) -> Ratio<i64> {
    assert!(j >= 1);
    let q = q as i64;
    Ratio::new(1, (q + 1) * q.pow(j - 1))
}

/// |x|_E^(s+1/2) or |x|_E^(−s−1/2) given the residue size q_e of E and the
/// ϖ_E-valuation of x.
fn shift_pow(q_e: f64, v: i64, s: C64, plus: bool) -> C64 {
    let e = s + 0.5;
    let sign = if plus { -1.0 } else { 1.0 };
    q_pow(q_e, e * (sign * v as f64))
}

/// Section on GL₂(E) for a field extension E (inert or ramified).
#[derive(Clone, Debug)]
pub struct ESection {
    pub chi1: EChar,
    pub chi2: EChar,
    pub kind: ESectionKind,
}

#[derive(Clone, Debug)]
pub enum ESectionKind {
    /// right-K(O_E)-invariant, Φ(1) = 1
    FullK,
    /// right-K₁(ϖ^c O_E)-invariant, supported on B·n(ϖ^support)·K₁, with
    /// Φ(n(ϖ^support)) = 1
    K1 { c: u32, support: u32 },
    /// §7 section: right-K̃-invariant (K̃ = 1+ϖ^k M₂(O_E)), supported on
    /// B·(0 1; −1 −√D/D)·K̃, normalized to 1 at the base point
    KTilde { k: u32 },
}

impl ESection {
    fn chi1s(&self, ctx: &FieldContext, s: C64, x: &Ext) -> Result<C64> {
        let q_e = match ctx.kind() {
            ExtKind::Inert => ctx.q() * ctx.q(),
            ExtKind::Ramified => ctx.q(),
            ExtKind::Split => return Err(Error::Domain("split has no single E-section".into())),
        };
        let v = Ext::uval(ctx, x).ok_or_else(|| Error::Precision("χ of a value that vanishes at the working precision".into()))?;
        Ok(self.chi_eval(ctx, &self.chi1, x)? * shift_pow(q_e, v, s, true))
    }

    fn chi2s(&self, ctx: &FieldContext, s: C64, x: &Ext) -> Result<C64> {
        let q_e = match ctx.kind() {
            ExtKind::Inert => ctx.q() * ctx.q(),
            ExtKind::Ramified => ctx.q(),
            ExtKind::Split => return Err(Error::Domain("split has no single E-section".into())),
        };
        let v = Ext::uval(ctx, x).ok_or_else(|| Error::Precision("χ of a value that vanishes at the working precision".into()))?;
        Ok(self.chi_eval(ctx, &self.chi2, x)? * shift_pow(q_e, v, s, false))
    }

    fn chi_eval(&self, ctx: &FieldContext, chi: &EChar, x: &Ext) -> Result<C64> {
        match ctx.kind() {
            ExtKind::Inert => chi.eval(ctx, x),
            ExtKind::Ramified => {
                // characters here are unramified on units; value = at_pi^(v_E)
                let v = Ext::uval(ctx, x).ok_or_else(|| Error::Precision("χ of a value that vanishes at the working precision".into()))?;
                Ok(chi.at_pi.powi(v as i32))
            }
            ExtKind::Split => Err(Error::Domain("split has no single E-section".into())),
        }
    }

    /// Φ_s(g) for g over E.
    pub fn eval(&self, ctx: &FieldContext, s: C64, g: &Mat2<Ext>) -> Result<C64> {
        self.eval_with_det(ctx, s, g, None)
    }

    /// Φ_s(g) with the determinant supplied exactly by the caller.
    pub fn eval_with_det(
        &self,
        ctx: &FieldContext,
        s: C64,
        g: &Mat2<Ext>,
        det: Option<&Ext>,
    ) -> Result<C64> {
        match self.kind {
            ESectionKind::FullK => {
                let dec = decompose_iwasawa_with_det(ctx, g, 0, det)?;
                Ok(self.chi1s(ctx, s, &dec.borel.e[0])? * self.chi2s(ctx, s, &dec.borel.e[3])?)
            }
            ESectionKind::K1 { c, support } => {
                let dec = decompose_iwasawa_with_det(ctx, g, c, det)?;
                if dec.coset != support {
                    return Ok(C_ZERO);
                }
                Ok(self.chi1s(ctx, s, &dec.borel.e[0])? * self.chi2s(ctx, s, &dec.borel.e[3])?)
            }
            ESectionKind::KTilde { k } => {
                // support test: h = g·w₁⁻¹ can be pushed into B by 1+ϖ^k M₂(O)
                // iff v(h₂₁) ≥ k + v(h₂₂)
                let sd = ctx.ext_sqrt_d();
                let d_inv = ctx.ext_inv(&ctx.ext_from_f(&ctx.from_int(ctx.d())))?;
                let minus_sd_over_d = ctx.ext_neg(&ctx.ext_mul(&sd, &d_inv));
                // w₁ = (0 1; −1 −√D/D), w₁⁻¹ = (−√D/D −1; 1 0)
                let w1_inv: Mat2<Ext> = Mat2::new(
                    minus_sd_over_d,
                    ctx.ext_neg(&ctx.ext_one()),
                    ctx.ext_one(),
                    ctx.ext_zero(),
                );
                let h = g.mul(ctx, &w1_inv);
                let v21 = Ext::uval(ctx, &h.e[2]);
                let v22 = Ext::uval(ctx, &h.e[3]);
                match (v21, v22) {
                    (None, Some(_)) => {}
                    (Some(a), Some(b)) if a >= b + k as i64 => {}
                    _ => return Ok(C_ZERO),
                }
                let corr = ctx.ext_mul2_inv(&ctx.ext_mul(&h.e[1], &h.e[2]), &h.e[3]);
                let b11 = match corr {
                    Ok(t) => ctx.ext_sub(&h.e[0], &t),
                    Err(_) => h.e[0].clone(),
                };
                Ok(self.chi1s(ctx, s, &b11)? * self.chi2s(ctx, s, &h.e[3])?)
            }
        }
    }
}

/// Section on GL₂(F), used for the two split-place components; the norm on
/// each split completion of E restricts to |·|_F.
#[derive(Clone, Debug)]
pub struct FSection {
    pub chi1: FChar,
    pub chi2: FChar,
    pub kind: FSectionKind,
}

#[derive(Clone, Debug)]
pub enum FSectionKind {
    FullK,
    K1 { c: u32, support: u32 },
}

impl FSection {
    pub fn chi1s(&self, ctx: &FieldContext, s: C64, x: &Fp) -> Result<C64> {
        let v = x.valuation().ok_or_else(|| Error::Precision("χ of a value that vanishes at the working precision".into()))?;
        Ok(self.chi1.eval(x)? * shift_pow(ctx.q(), v, s, true))
    }

    pub fn chi2s(&self, ctx: &FieldContext, s: C64, x: &Fp) -> Result<C64> {
        let v = x.valuation().ok_or_else(|| Error::Precision("χ of a value that vanishes at the working precision".into()))?;
        Ok(self.chi2.eval(x)? * shift_pow(ctx.q(), v, s, false))
    }

    pub fn eval(&self, ctx: &FieldContext, s: C64, g: &Mat2<Fp>) -> Result<C64> {
        self.eval_with_det(ctx, s, g, None)
    }

    pub fn eval_with_det(
        &self,
        ctx: &FieldContext,
        s: C64,
        g: &Mat2<Fp>,
        det: Option<&Fp>,
    ) -> Result<C64> {
        match self.kind {
            FSectionKind::FullK => {
                let dec = decompose_iwasawa_with_det(ctx, g, 0, det)?;
                Ok(self.chi1s(ctx, s, &dec.borel.e[0])? * self.chi2s(ctx, s, &dec.borel.e[3])?)
            }
            FSectionKind::K1 { c, support } => {
                let dec = decompose_iwasawa_with_det(ctx, g, c, det)?;
                if dec.coset != support {
                    return Ok(C_ZERO);
                }
                Ok(self.chi1s(ctx, s, &dec.borel.e[0])? * self.chi2s(ctx, s, &dec.borel.e[3])?)
            }
        }
    }
}

/// The split-place section pair (Φ^(1), Φ^(2)); Φ_s = Φ^(1)·Φ^(2) with γ₀
/// acting through (√D, −√D).
#[derive(Clone, Debug)]
pub struct SplitSectionPair {
    pub phi1: FSection,
    pub phi2: FSection,
}

impl SplitSectionPair {
    /// Φ_s(γ₀ g) = Φ^(1)(n(√D)·g)·Φ^(2)(n(−√D)·g), evaluated honestly.
    pub fn eval_gamma0(&self, ctx: &FieldContext, s: C64, g: &Mat2<Fp>) -> Result<C64> {
        self.eval_gamma0_with_det(ctx, s, g, None)
    }

    pub fn eval_gamma0_with_det(
        &self,
        ctx: &FieldContext,
        s: C64,
        g: &Mat2<Fp>,
        det: Option<&Fp>,
    ) -> Result<C64> {
        let sd = ctx.sqrt_d()?;
        let n_plus = Mat2::lower(ctx, sd.clone());
        let n_minus = Mat2::lower(ctx, sd.neg());
        let v1 = self.phi1.eval_with_det(ctx, s, &n_plus.mul(ctx, g), det)?;
        if v1 == C_ZERO {
            return Ok(C_ZERO);
        }
        let v2 = self.phi2.eval_with_det(ctx, s, &n_minus.mul(ctx, g), det)?;
        Ok(v1 * v2)
    }

    /// The substituted form: Φ_s(γ₀·n(√D)·b) = Φ^(1)(n(2√D)·b)·Φ^(2)(b).
    /// The honest v(a₂+2m√D) is whatever the matrix arithmetic says — no
    /// min-valuation shortcut happens here.
    pub fn eval_substituted(&self, ctx: &FieldContext, s: C64, b: &Mat2<Fp>) -> Result<C64> {
        let sd = ctx.sqrt_d()?;
        let two_sd = sd.add(&sd);
        let n2 = Mat2::lower(ctx, two_sd);
        let v2 = self.phi2.eval(ctx, s, b)?;
        if v2 == C_ZERO {
            return Ok(C_ZERO);
        }
        let v1 = self.phi1.eval(ctx, s, &n2.mul(ctx, b))?;
        Ok(v1 * v2)
    }
}

/// Ω(t) = χ₁(t̄)χ₂(t) for inert/ramified contexts with E-characters.
pub fn omega_value_e(
    ctx: &FieldContext,
    chi1: &EChar,
    chi2: &EChar,
    t: &Ext,
) -> Result<C64> {
    let tbar = ctx.ext_conj(t);
    match ctx.kind() {
        ExtKind::Inert => Ok(chi1.eval(ctx, &tbar)? * chi2.eval(ctx, t)?),
        ExtKind::Ramified => {
            let v1 = Ext::uval(ctx, &tbar).ok_or_else(|| Error::Precision("Ω of a value that vanishes at the working precision".into()))?;
            let v2 = Ext::uval(ctx, t).ok_or_else(|| Error::Precision("Ω of a value that vanishes at the working precision".into()))?;
            Ok(chi1.at_pi.powi(v1 as i32) * chi2.at_pi.powi(v2 as i32))
        }
        ExtKind::Split => Err(Error::Domain("use omega_value_split".into())),
    }
}

/// Ω(t) in the split case: χ₁^(1)χ₂^(2)(a−b√D)·χ₂^(1)χ₁^(2)(a+b√D) for
/// t = a+b√D realized componentwise as (t₊, t₋) = (a+b√D, a−b√D).
pub fn omega_value_split(
    chi1: (&FChar, &FChar),
    chi2: (&FChar, &FChar),
    t_plus: &Fp,
    t_minus: &Fp,
) -> Result<C64> {
    Ok(chi1.0.eval(t_minus)? * chi2.1.eval(t_minus)? * chi2.0.eval(t_plus)? * chi1.1.eval(t_plus)?)
}
