//! Adaptive shell integration over truncated p-adic domains.
//!
//! Representatives carry exactly their coset's worth of digits, so a
//! successful evaluation certifies local constancy; a precision error is a
//! subdivision request. Additive measure: vol(O, dx) = 1. Multiplicative:
//! vol(O^*, d^*x) = 1.

use crate::cnum::{C64, C_ZERO};
use crate::error::{Error, Result};
use crate::padic::{FieldContext, Fp};

/// ∫_{v(x)=t} f(x) dx (additive measure).
pub fn additive_shell(ctx: &FieldContext, t: i64, f: &impl Fn(&Fp) -> Result<C64>) -> Result<C64> {
    let mut total = C_ZERO;
    for u in ctx.enumerate_residues(1)? {
        total += refine(ctx, t, u, 1, &|m, lvl| {
            Ok(f(m)? * ctx.q().powi(-(t as i32) - lvl as i32))
        })?;
    }
    Ok(total)
}

/// ∫_{v(x)=t} f(x) d^*x (multiplicative measure; the shell has volume 1).
pub fn mult_shell(ctx: &FieldContext, t: i64, f: &impl Fn(&Fp) -> Result<C64>) -> Result<C64> {
    let q = ctx.q();
    let mut total = C_ZERO;
    for u in ctx.enumerate_residues(1)? {
        total += refine(ctx, t, u, 1, &|m, lvl| {
            // d^*-volume of a unit coset at level lvl
            Ok(f(m)? / ((q - 1.0) * q.powi(lvl as i32 - 1)))
        })?;
    }
    Ok(total)
}

fn refine(
    ctx: &FieldContext,
    t: i64,
    unit: u128,
    level: u32,
    weighted: &impl Fn(&Fp, u32) -> Result<C64>,
) -> Result<C64> {
    let m = ctx.elt_with_prec(t, unit, level)?;
    match weighted(&m, level) {
        Ok(v) => Ok(v),
        Err(Error::Precision(_)) if (level as i64) < ctx.precision() as i64 - 4 => {
            let mut acc = C_ZERO;
            let step = ctx.p_pow(level);
            for r in 0..ctx.p() as u128 {
                acc += refine(ctx, t, unit + r * step, level + 1, weighted)?;
            }
            Ok(acc)
        }
        Err(e) => Err(e),
    }
}

/// ∫_{v(a)=ta, d^*a} ∫_{v(m)=tm, dm} f(a, m): jointly refined so that
/// cancellations between the two variables subdivide both.
pub fn pair_shell(
    ctx: &FieldContext,
    ta: i64,
    tm: i64,
    f: &impl Fn(&Fp, &Fp) -> Result<C64>,
) -> Result<C64> {
    let q = ctx.q();
    let mut total = C_ZERO;
    for ua in ctx.enumerate_residues(1)? {
        for um in ctx.enumerate_residues(1)? {
            total += refine2(ctx, (ta, ua, 1), (tm, um, 1), &|a, m, la, lm| {
                let wa = 1.0 / ((q - 1.0) * q.powi(la as i32 - 1));
                let wm = q.powi(-(tm as i32) - lm as i32);
                Ok(f(a, m)? * wa * wm)
            })?;
        }
    }
    Ok(total)
}

fn refine2(
    ctx: &FieldContext,
    (ta, ua, la): (i64, u128, u32),
    (tm, um, lm): (i64, u128, u32),
    weighted: &impl Fn(&Fp, &Fp, u32, u32) -> Result<C64>,
) -> Result<C64> {
    let a = ctx.elt_with_prec(ta, ua, la)?;
    let m = ctx.elt_with_prec(tm, um, lm)?;
    match weighted(&a, &m, la, lm) {
        Ok(v) => Ok(v),
        Err(Error::Precision(_))
            if (la.min(lm) as i64) < ctx.precision() as i64 - 4 =>
        {
            // split one variable at a time (the shallower one): along a
            // cancellation locus only one child per step keeps failing, so
            // the refinement tree stays a chain instead of a p-ary tree
            let mut acc = C_ZERO;
            if la <= lm {
                let sa = ctx.p_pow(la);
                for r in 0..ctx.p() as u128 {
                    acc += refine2(ctx, (ta, ua + r * sa, la + 1), (tm, um, lm), weighted)?;
                }
            } else {
                let sm = ctx.p_pow(lm);
                for t in 0..ctx.p() as u128 {
                    acc += refine2(ctx, (ta, ua, la), (tm, um + t * sm, lm + 1), weighted)?;
                }
            }
            Ok(acc)
        }
        Err(e) => Err(e),
    }
}

/// Triple integral ∫_{v(a)=ta, d^*a} ∫_{v(b)=tb, d^*b} ∫_{v(m)=tm, dm}
/// f(a, b, m), refining whichever variable is shallowest so that
/// cancellations coupling any subset of the three subdivide correctly.
pub fn triple_shell(
    ctx: &FieldContext,
    ta: i64,
    tb: i64,
    tm: i64,
    f: &impl Fn(&Fp, &Fp, &Fp) -> Result<C64>,
) -> Result<C64> {
    let q = ctx.q();
    let mut total = C_ZERO;
    let units = ctx.enumerate_residues(1)?;
    for ua in &units {
        for ub in &units {
            for um in &units {
                total += refine3(
                    ctx,
                    (ta, *ua, 1),
                    (tb, *ub, 1),
                    (tm, *um, 1),
                    &|a, b, m, la, lb, lm| {
                        let wa = 1.0 / ((q - 1.0) * q.powi(la as i32 - 1));
                        let wb = 1.0 / ((q - 1.0) * q.powi(lb as i32 - 1));
                        let wm = q.powi(-(tm as i32) - lm as i32);
                        Ok(f(a, b, m)? * wa * wb * wm)
                    },
                )?;
            }
        }
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn refine3(
    ctx: &FieldContext,
    (ta, ua, la): (i64, u128, u32),
    (tb, ub, lb): (i64, u128, u32),
    (tm, um, lm): (i64, u128, u32),
    weighted: &impl Fn(&Fp, &Fp, &Fp, u32, u32, u32) -> Result<C64>,
) -> Result<C64> {
    let a = ctx.elt_with_prec(ta, ua, la)?;
    let b = ctx.elt_with_prec(tb, ub, lb)?;
    let m = ctx.elt_with_prec(tm, um, lm)?;
    match weighted(&a, &b, &m, la, lb, lm) {
        Ok(v) => Ok(v),
        Err(Error::Precision(_))
            if (la.min(lb).min(lm) as i64) < ctx.precision() as i64 - 4 =>
        {
            let mut acc = C_ZERO;
            let p = ctx.p() as u128;
            if la <= lb && la <= lm {
                let sa = ctx.p_pow(la);
                for r in 0..p {
                    acc += refine3(ctx, (ta, ua + r * sa, la + 1), (tb, ub, lb), (tm, um, lm), weighted)?;
                }
            } else if lb <= lm {
                let sb = ctx.p_pow(lb);
                for r in 0..p {
                    acc += refine3(ctx, (ta, ua, la), (tb, ub + r * sb, lb + 1), (tm, um, lm), weighted)?;
                }
            } else {
                let sm = ctx.p_pow(lm);
                for r in 0..p {
                    acc += refine3(ctx, (ta, ua, la), (tb, ub, lb), (tm, um + r * sm, lm + 1), weighted)?;
                }
            }
            Ok(acc)
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnum::{approx_eq, C_ONE};
    use crate::padic::ExtKind;

    #[test]
    fn measures_normalize() {
        let ctx = FieldContext::new(3, 20, ExtKind::Split, 4).unwrap();
        // ∫_{v=0} dx = 1 − 1/q
        let a = additive_shell(&ctx, 0, &|_| Ok(C_ONE)).unwrap();
        assert!(approx_eq(a, C64::new(2.0 / 3.0, 0.0), 1e-12));
        // ∫_{v=2} d^*x = 1
        let m = mult_shell(&ctx, 2, &|_| Ok(C_ONE)).unwrap();
        assert!(approx_eq(m, C_ONE, 1e-12));
    }

    #[test]
    fn adaptive_refinement_triggers() {
        let ctx = FieldContext::new(3, 20, ExtKind::Split, 4).unwrap();
        // f needs 3 digits: ψ(x/ϖ³)
        let f = |x: &Fp| ctx.pi_pow(-3).mul(x).psi();
        let direct = additive_shell(&ctx, 0, &f).unwrap();
        // ∫_{v(x)=0} ψ(ϖ^{-3}x) dx = 0 (full character sum over units at level 3)
        assert!(direct.norm() < 1e-12);
        let g = |x: &Fp| ctx.pi_pow(-1).mul(x).psi();
        let d1 = additive_shell(&ctx, 0, &g).unwrap();
        // ∫_{v=0}ψ(x/ϖ)dx = Σ_{u mod 3, u≠0} ζ^u /3 = −1/3
        assert!(approx_eq(d1, C64::new(-1.0 / 3.0, 0.0), 1e-12));
    }

    #[test]
    fn pair_cancellation_is_refined() {
        let ctx = FieldContext::new(3, 24, ExtKind::Split, 4).unwrap();
        // f(a, m) = ψ((a+m)/ϖ²) — constant only once a+m is pinned mod ϖ²
        let f = |a: &Fp, m: &Fp| ctx.pi_pow(-2).mul(&a.add(m)).psi();
        let got = pair_shell(&ctx, 0, 0, &f).unwrap();
        // direct double sum at level 3: d^*a weight 1/|res|, dm weight q^{-3}
        let mut want = C_ZERO;
        let res = ctx.enumerate_residues(3).unwrap();
        for ua in &res {
            for um in &res {
                let a = ctx.elt(0, *ua);
                let m = ctx.elt(0, *um);
                want += f(&a, &m).unwrap() / (res.len() as f64) * 27.0f64.recip();
            }
        }
        assert!(approx_eq(got, want, 1e-10), "{got} vs {want}");
    }
}
