//! The three cases with unramified π and standard f: inert, split, and
//! ramified quadratic extension. The oracle integrates over the Borel (the
//! data is right-K-invariant), summing valuation shells with adaptive
//! residue refinement and closing k- and v(α)-tails analytically.

use super::{check_center, delta, shifted_at_pi_inert, shifted_at_pi_split, shifted_at_pie_ram, EvalPoint, UnramCase};
use crate::chars::EChar;
use crate::cnum::{q_pow, C64, C_ONE, C_ZERO};
use crate::error::{Error, Result};
use crate::integrate::{mult_shell, pair_shell};
use crate::matrix::Mat2;
use crate::padic::{ExtKind, FieldContext, Fp};
use crate::section::{ESection, ESectionKind, FSection, FSectionKind, SplitSectionPair};
use crate::tail::{sum_shells, sum_shells_recurrence};
use crate::whittaker::{whittaker_closed, RepSpec};

impl UnramCase {
    pub fn new_inert(
        ctx: FieldContext,
        chi1: C64,
        chi2: C64,
        mu1: C64,
        mu2: C64,
    ) -> Result<Self> {
        if ctx.kind() != ExtKind::Inert {
            return Err(Error::InvalidContext("inert context required".into()));
        }
        check_center(mu1 * mu2 * chi1 * chi2)?;
        Ok(UnramCase { ctx, chi1: (chi1, C_ZERO), chi2: (chi2, C_ZERO), mu1, mu2 })
    }

    pub fn new_split(
        ctx: FieldContext,
        chi1: (C64, C64),
        chi2: (C64, C64),
        mu1: C64,
        mu2: C64,
    ) -> Result<Self> {
        if ctx.kind() != ExtKind::Split {
            return Err(Error::InvalidContext("split context required".into()));
        }
        check_center(mu1 * mu2 * chi1.0 * chi1.1 * chi2.0 * chi2.1)?;
        Ok(UnramCase { ctx, chi1, chi2, mu1, mu2 })
    }

    pub fn new_ramified(
        ctx: FieldContext,
        chi1_pie: C64,
        chi2_pie: C64,
        mu1: C64,
        mu2: C64,
    ) -> Result<Self> {
        if ctx.kind() != ExtKind::Ramified {
            return Err(Error::InvalidContext("ramified context required".into()));
        }
        // (χ₁χ₂)(ϖ) = (χ₁χ₂)(ϖ_E)²
        check_center(mu1 * mu2 * (chi1_pie * chi2_pie).powi(2))?;
        Ok(UnramCase { ctx, chi1: (chi1_pie, C_ZERO), chi2: (chi2_pie, C_ZERO), mu1, mu2 })
    }

    /// (χ₁χ₂)|_{F^*}(ϖ) — the value of Φ_s on the central α.
    pub fn chi_prod_at_pi(&self) -> C64 {
        match self.ctx.kind() {
            ExtKind::Inert => self.chi1.0 * self.chi2.0,
            ExtKind::Split => self.chi1.0 * self.chi1.1 * self.chi2.0 * self.chi2.1,
            ExtKind::Ramified => (self.chi1.0 * self.chi2.0).powi(2),
        }
    }

    fn rep(&self) -> RepSpec {
        RepSpec::UnramifiedPrincipal { mu1: self.mu1, mu2: self.mu2 }
    }
}

/// Honest I(α): sum over Borel shells (n = v(a₁), l = v(α)−n, k = v(m)) with
/// the section evaluated through the Iwasawa route, adaptive splitting
/// wherever truncated arithmetic flags a cancellation (the split-place
/// v(a₂+2m√D) effect), and analytic k-tails. Depends on v(α) only.
pub fn oracle_i_unram_at(case: &UnramCase, v_alpha: i64, depth: i64, s: C64) -> Result<C64> {
    if v_alpha < 0 {
        return Ok(C_ZERO);
    }
    let ctx = &case.ctx;
    let q = ctx.q();
    let mut total = C_ZERO;
    match ctx.kind() {
        ExtKind::Inert => {
            let phi = ESection {
                chi1: EChar::unramified(case.chi1.0),
                chi2: EChar::unramified(case.chi2.0),
                kind: ESectionKind::FullK,
            };
            let gamma0 = Mat2::lower(ctx, ctx.ext_sqrt_d());
            for n in 0..=v_alpha {
                let l = v_alpha - n;
                let weight = C64::new(q.powi(n as i32), 0.0); // |a₁|⁻¹ of the left Haar
                let inner = |a1: &Fp, a2: &Fp, m: &Fp| -> Result<C64> {
                    let b: Mat2<crate::padic::Ext> = Mat2::new(
                        ctx.ext_from_f(a1),
                        ctx.ext_from_f(m),
                        ctx.ext_zero(),
                        ctx.ext_from_f(a2),
                    );
                    let det = ctx.ext_from_f(&a1.mul(a2));
                    phi.eval_with_det(ctx, s, &gamma0.mul(ctx, &b), Some(&det))
                };
                total += weight * borel_m_sum(ctx, n, l, depth, &inner)?;
            }
        }
        ExtKind::Ramified => {
            let phi = ESection {
                chi1: EChar::unramified(case.chi1.0),
                chi2: EChar::unramified(case.chi2.0),
                kind: ESectionKind::FullK,
            };
            let gamma0 = Mat2::lower(ctx, ctx.ext_sqrt_d());
            for n in 0..=v_alpha {
                let l = v_alpha - n;
                let weight = C64::new(q.powi(n as i32), 0.0);
                let inner = |a1: &Fp, a2: &Fp, m: &Fp| -> Result<C64> {
                    let b: Mat2<crate::padic::Ext> = Mat2::new(
                        ctx.ext_from_f(a1),
                        ctx.ext_from_f(m),
                        ctx.ext_zero(),
                        ctx.ext_from_f(a2),
                    );
                    let det = ctx.ext_from_f(&a1.mul(a2));
                    phi.eval_with_det(ctx, s, &gamma0.mul(ctx, &b), Some(&det))
                };
                total += weight * borel_m_sum(ctx, n, l, depth, &inner)?;
            }
        }
        ExtKind::Split => {
            let pair = SplitSectionPair {
                phi1: FSection {
                    chi1: crate::chars::FChar::unramified(case.chi1.0),
                    chi2: crate::chars::FChar::unramified(case.chi2.0),
                    kind: FSectionKind::FullK,
                },
                phi2: FSection {
                    chi1: crate::chars::FChar::unramified(case.chi1.1),
                    chi2: crate::chars::FChar::unramified(case.chi2.1),
                    kind: FSectionKind::FullK,
                },
            };
            for n in 0..=v_alpha {
                let l = v_alpha - n;
                let weight = C64::new(q.powi(n as i32), 0.0);
                let inner = |a1: &Fp, a2: &Fp, m: &Fp| -> Result<C64> {
                    let b: Mat2<Fp> = Mat2::new(a1.clone(), m.clone(), ctx.zero(), a2.clone());
                    let det = a1.mul(a2);
                    pair.eval_gamma0_with_det(ctx, s, &b, Some(&det))
                };
                total += weight * borel_m_sum(ctx, n, l, depth, &inner)?;
            }
        }
    }
    Ok(total)
}

/// Σ_k ∫∫∫ f(a₁, a₂, m) over v(a₁)=n (d^*), v(a₂)=l (d^*), v(m)=k (dm),
/// k-tail closed geometrically.
fn borel_m_sum(
    ctx: &FieldContext,
    n: i64,
    l: i64,
    depth: i64,
    f: &impl Fn(&Fp, &Fp, &Fp) -> Result<C64>,
) -> Result<C64> {
    let min_terms = (n + l + 6).max(6) as usize;
    sum_shells(0, min_terms, min_terms + depth.max(12) as usize, |k| {
        mult_shell(ctx, n, &|a1: &Fp| {
            pair_shell(ctx, l, k, &|a2: &Fp, m: &Fp| f(a1, a2, m))
        })
    })
}

/// Closed I(α) for the inert place.
pub fn closed_i_inert(q: f64, chi1: C64, chi2: C64, s: C64, v_alpha: i64) -> Result<C64> {
    if v_alpha < 0 {
        return Ok(C_ZERO);
    }
    let (c1s, c2s) = shifted_at_pi_inert(q, chi1, chi2, s);
    let x = c1s / c2s;
    let den = C_ONE - q * q * x;
    if den.norm() < 1e-8 {
        return Err(Error::Pole("1 − q²χ_{1,s}/χ_{2,s} vanishes".into()));
    }
    let b = v_alpha / 2;
    let first = -(q * (1.0 + q) * x / den) * c1s.powi(v_alpha as i32) * q.powi(v_alpha as i32);
    let second = if v_alpha % 2 == 0 {
        (C_ONE + q * x) * (c1s * c2s).powi(b as i32)
    } else {
        C64::new(1.0 + q, 0.0) * c1s.powi(b as i32 + 1) * c2s.powi(b as i32)
    } / den;
    Ok(first + second)
}

/// Closed I(α) for the split place.
pub fn closed_i_split(
    q: f64,
    chi1: (C64, C64),
    chi2: (C64, C64),
    s: C64,
    v_alpha: i64,
) -> Result<C64> {
    if v_alpha < 0 {
        return Ok(C_ZERO);
    }
    let (c1s1, c2s1) = shifted_at_pi_split(q, chi1.0, chi2.0, s);
    let (c1s2, c2s2) = shifted_at_pi_split(q, chi1.1, chi2.1, s);
    let v = v_alpha as i32;
    let geo = |r: C64, len: i32| -> Result<C64> {
        let den = C_ONE - r;
        if den.norm() < 1e-8 {
            return Err(Error::Pole("geometric ratio 1 in the split I".into()));
        }
        Ok((C_ONE - r.powi(len)) / den)
    };
    let r1 = q * c1s2 / c2s2;
    let r2 = (c1s2 * c2s1) / (c1s1 * c2s2);
    let den_x = C_ONE - c2s1 / (q * c1s1);
    if den_x.norm() < 1e-8 {
        return Err(Error::Pole("1 − χ_{2,s}^{(1)}/(qχ_{1,s}^{(1)}) vanishes".into()));
    }
    if (C_ONE - q * c1s1 / c2s1).norm() < 1e-8 {
        return Err(Error::Pole("1 − qχ_{1,s}^{(1)}/χ_{2,s}^{(1)} vanishes".into()));
    }
    let lead = (c1s1 * c2s2).powi(v);
    let term1 = lead * geo(r1, v + 1)? * ((c1s1 / c2s1) * (1.0 - q)) / (C_ONE - q * c1s1 / c2s1);
    let term2 = lead * geo(r2, v + 1)? * ((C_ONE - c2s1 / c1s1) / q) / den_x;
    Ok(term1 + term2)
}

/// Closed I(α) for the ramified extension, expressed through the inert I.
pub fn closed_i_ramified(
    q: f64,
    chi1_pie: C64,
    chi2_pie: C64,
    s: C64,
    v_alpha: i64,
) -> Result<C64> {
    if v_alpha < 0 {
        return Ok(C_ZERO);
    }
    let (c1e, c2e) = shifted_at_pie_ram(q, chi1_pie, chi2_pie, s);
    // values at ϖ are the squares of the ϖ_E-values
    let c1s = c1e * c1e;
    let c2s = c2e * c2e;
    let inert = closed_i_inert_from_shifted(q, c1s, c2s, v_alpha)?;
    let root = c2e / c1e; // √(χ_{2,s}/χ_{1,s})
    let r = q * q * c1s / c2s;
    let den = C_ONE - r;
    if den.norm() < 1e-8 {
        return Err(Error::Pole("1 − q²χ_{1,s}/χ_{2,s} vanishes".into()));
    }
    let b = v_alpha / 2;
    let v = v_alpha as i32;
    let corr = (C_ONE - root)
        * c2s.powi(v)
        * q.powi(-v)
        * (r.powi(v - b as i32) - r.powi(v + 1))
        / den;
    Ok(root * inert + corr)
}

fn closed_i_inert_from_shifted(q: f64, c1s: C64, c2s: C64, v_alpha: i64) -> Result<C64> {
    let x = c1s / c2s;
    let den = C_ONE - q * q * x;
    if den.norm() < 1e-8 {
        return Err(Error::Pole("1 − q²χ_{1,s}/χ_{2,s} vanishes".into()));
    }
    let b = v_alpha / 2;
    let first = -(q * (1.0 + q) * x / den) * c1s.powi(v_alpha as i32) * q.powi(v_alpha as i32);
    let second = if v_alpha % 2 == 0 {
        (C_ONE + q * x) * (c1s * c2s).powi(b as i32)
    } else {
        C64::new(1.0 + q, 0.0) * c1s.powi(b as i32 + 1) * c2s.powi(b as i32)
    } / den;
    Ok(first + second)
}

/// closed_I dispatch for the unramified trio.
pub fn closed_i_unram(case: &UnramCase, s: C64, v_alpha: i64) -> Result<C64> {
    let q = case.ctx.q();
    match case.ctx.kind() {
        ExtKind::Inert => closed_i_inert(q, case.chi1.0, case.chi2.0, s, v_alpha),
        ExtKind::Split => closed_i_split(q, case.chi1, case.chi2, s, v_alpha),
        ExtKind::Ramified => closed_i_ramified(q, case.chi1.0, case.chi2.0, s, v_alpha),
    }
}

/// Oracle 𝒫(s, w): Σ_{v(α) ≥ 0} of Whittaker value × |α|^{w/2−1/4} ×
/// Φ_s(α)⁻¹ × oracle I, regrouped per μ-branch so each tail satisfies a
/// short linear recurrence.
pub fn oracle_p_unram(case: &UnramCase, point: &EvalPoint) -> Result<C64> {
    let ctx = &case.ctx;
    let q = ctx.q();
    let rep = case.rep();
    let chi_pi = case.chi_prod_at_pi();
    let mut i_cache: Vec<C64> = Vec::new();
    let mut term = |v: i64| -> Result<C64> {
        while i_cache.len() <= v as usize {
            let iv = oracle_i_unram_at(case, i_cache.len() as i64, point.depth, point.s)?;
            i_cache.push(iv);
        }
        let alpha = ctx.pi_pow(v);
        let w_val = whittaker_closed(ctx, &rep, &alpha, 0)?;
        // |α|^{w/2−1/4} · Φ_s(α)⁻¹ (= (χ₁χ₂)(α)⁻¹), with |α|^{1/2} already
        // inside the normalized Whittaker value
        let size = q_pow(q, -(point.w / 2.0 - 0.25) * v as f64);
        Ok(w_val * size * chi_pi.powi(-(v as i32)) * i_cache[v as usize])
    };
    let min_terms = 18usize;
    sum_shells_recurrence(0, min_terms, min_terms + point.depth.max(24) as usize, 6, 1.0, |v| {
        term(v)
    })
}

/// Closed 𝒫(s, w) for the inert place.
pub fn closed_p_inert(case: &UnramCase, s: C64, w: C64) -> Result<C64> {
    let q = case.ctx.q();
    let (c1s, c2s) = shifted_at_pi_inert(q, case.chi1.0, case.chi2.0, s);
    let (mu1, mu2) = (case.mu1, case.mu2);
    let del = delta(q, w);
    let num = (C_ONE + del * del) * (C_ONE - q * (c1s / c2s) * del * del)
        + (mu1 + mu2) * c1s * del * (C_ONE - q * del * del);
    let dens = [
        C_ONE - q * mu1 * c1s * del,
        C_ONE - q * mu2 * c1s * del,
        C_ONE - mu1 * mu1 * c1s * c2s * del * del,
        C_ONE - mu2 * mu2 * c1s * c2s * del * del,
    ];
    pole_guard(&dens)?;
    Ok(num / (dens[0] * dens[1] * dens[2] * dens[3]))
}

/// Closed 𝒫(s, w) for the split place.
pub fn closed_p_split(case: &UnramCase, s: C64, w: C64) -> Result<C64> {
    let q = case.ctx.q();
    let (c1s1, c2s1) = shifted_at_pi_split(q, case.chi1.0, case.chi2.0, s);
    let (c1s2, c2s2) = shifted_at_pi_split(q, case.chi1.1, case.chi2.1, s);
    let (mu1, mu2) = (case.mu1, case.mu2);
    let del = delta(q, w);
    let d2 = del * del;
    let num = C_ONE - d2 - (mu1 + mu2) * c1s1 * c1s2 * del * (C_ONE - q * d2)
        + (1.0 - q) * (c1s1 / c2s1 + c1s2 / c2s2) * d2
        + q * (c1s1 * c1s2 / (c2s1 * c2s2)) * d2 * (C_ONE - d2);
    let dens = [
        C_ONE - mu1 * c2s1 * c1s2 * del,
        C_ONE - mu1 * c1s1 * c2s2 * del,
        C_ONE - mu2 * c2s1 * c1s2 * del,
        C_ONE - mu2 * c1s1 * c2s2 * del,
        C_ONE - q * mu1 * c1s1 * c1s2 * del,
        C_ONE - q * mu2 * c1s1 * c1s2 * del,
    ];
    pole_guard(&dens)?;
    Ok(num / dens.iter().product::<C64>())
}

/// Closed 𝒫(s, w) for the ramified extension.
pub fn closed_p_ramified(case: &UnramCase, s: C64, w: C64) -> Result<C64> {
    let q = case.ctx.q();
    let (c1e, c2e) = shifted_at_pie_ram(q, case.chi1.0, case.chi2.0, s);
    let c1s = c1e * c1e;
    let c2s = c2e * c2e;
    let (mu1, mu2) = (case.mu1, case.mu2);
    let del = delta(q, w);
    let root_prod = c1e * c2e; // √(χ_{1,s}χ_{2,s})
    let root_ratio = c1e / c2e; // √(χ_{1,s}/χ_{2,s})
    let num = (C_ONE + mu1 * root_prod * del + mu2 * root_prod * del + del * del)
        * (C_ONE - q * del * del * root_ratio);
    let dens = [
        C_ONE - mu1 * mu1 * c1s * c2s * del * del,
        C_ONE - mu2 * mu2 * c1s * c2s * del * del,
        C_ONE - q * mu1 * c1s * del,
        C_ONE - q * mu2 * c1s * del,
    ];
    pole_guard(&dens)?;
    Ok(num / dens.iter().product::<C64>())
}

pub(crate) fn pole_guard(dens: &[C64]) -> Result<()> {
    for d in dens {
        if d.norm() < 1e-8 {
            return Err(Error::Pole(format!("displayed denominator vanishes: |{d}| < 1e-8")));
        }
    }
    Ok(())
}
