//! 2×2 matrices over F or E and the level-c Iwasawa decomposition
//! GL₂ = ∐_{0≤i≤c} B·n(ϖ^i)·K₁(ϖ^c), where n(x) is lower unipotent.

use crate::error::{Error, Result};
use crate::padic::{Ext, ExtKind, FieldContext, Fp};

/// Scalars the decomposition works over: F itself and either quadratic
/// extension realized as a field (inert or ramified). `uval` is the
/// valuation in units of the relevant uniformizer (ϖ for F and inert E,
/// ϖ_E for ramified E).
pub trait LocalScalar: Clone + std::fmt::Debug {
    fn zero(ctx: &FieldContext) -> Self;
    fn one(ctx: &FieldContext) -> Self;
    fn from_f(ctx: &FieldContext, x: &Fp) -> Self;
    fn add(ctx: &FieldContext, a: &Self, b: &Self) -> Self;
    fn sub(ctx: &FieldContext, a: &Self, b: &Self) -> Self;
    fn mul(ctx: &FieldContext, a: &Self, b: &Self) -> Self;
    fn neg(ctx: &FieldContext, a: &Self) -> Self;
    fn div(ctx: &FieldContext, a: &Self, b: &Self) -> Result<Self>;
    fn uval(ctx: &FieldContext, a: &Self) -> Option<i64>;
    fn uniformizer_pow(ctx: &FieldContext, k: i64) -> Self;
    /// Guaranteed lower bound on the valuation: the valuation itself for
    /// nonzero elements, the O(·)-exponent for truncation zeroes.
    fn uval_lower_bound(ctx: &FieldContext, a: &Self) -> i64;
    /// Forget digits beyond ϖ^abs (uniformizer units).
    fn truncate_abs_uval(ctx: &FieldContext, a: &Self, abs: i64) -> Self;
}

impl LocalScalar for Fp {
    fn zero(ctx: &FieldContext) -> Self {
        ctx.zero()
    }
    fn one(ctx: &FieldContext) -> Self {
        ctx.one()
    }
    fn from_f(_ctx: &FieldContext, x: &Fp) -> Self {
        x.clone()
    }
    fn add(_ctx: &FieldContext, a: &Self, b: &Self) -> Self {
        a.add(b)
    }
    fn sub(_ctx: &FieldContext, a: &Self, b: &Self) -> Self {
        a.sub(b)
    }
    fn mul(_ctx: &FieldContext, a: &Self, b: &Self) -> Self {
        a.mul(b)
    }
    fn neg(_ctx: &FieldContext, a: &Self) -> Self {
        a.neg()
    }
    fn div(_ctx: &FieldContext, a: &Self, b: &Self) -> Result<Self> {
        a.div(b)
    }
    fn uval(_ctx: &FieldContext, a: &Self) -> Option<i64> {
        a.valuation()
    }
    fn uniformizer_pow(ctx: &FieldContext, k: i64) -> Self {
        ctx.pi_pow(k)
    }
    fn uval_lower_bound(_ctx: &FieldContext, a: &Self) -> i64 {
        a.valuation().unwrap_or_else(|| a.abs_prec())
    }
    fn truncate_abs_uval(_ctx: &FieldContext, a: &Self, abs: i64) -> Self {
        a.truncate_abs(abs)
    }
}

impl LocalScalar for Ext {
    fn zero(ctx: &FieldContext) -> Self {
        ctx.ext_zero()
    }
    fn one(ctx: &FieldContext) -> Self {
        ctx.ext_one()
    }
    fn from_f(ctx: &FieldContext, x: &Fp) -> Self {
        ctx.ext_from_f(x)
    }
    fn add(ctx: &FieldContext, a: &Self, b: &Self) -> Self {
        ctx.ext_add(a, b)
    }
    fn sub(ctx: &FieldContext, a: &Self, b: &Self) -> Self {
        ctx.ext_sub(a, b)
    }
    fn mul(ctx: &FieldContext, a: &Self, b: &Self) -> Self {
        ctx.ext_mul(a, b)
    }
    fn neg(ctx: &FieldContext, a: &Self) -> Self {
        ctx.ext_neg(a)
    }
    fn div(ctx: &FieldContext, a: &Self, b: &Self) -> Result<Self> {
        ctx.ext_mul2_inv(a, b)
    }
    fn uval(ctx: &FieldContext, a: &Self) -> Option<i64> {
        match ctx.kind() {
            ExtKind::Inert => ctx.ext_val2(a).map(|v| v / 2),
            ExtKind::Ramified => ctx.ext_val2(a),
            ExtKind::Split => panic!("split E is not a field; use components"),
        }
    }
    fn uniformizer_pow(ctx: &FieldContext, k: i64) -> Self {
        match ctx.kind() {
            ExtKind::Inert => ctx.ext_from_f(&ctx.pi_pow(k)),
            ExtKind::Ramified => {
                // ϖ_E^k: even powers are ϖ^{k/2}, odd keep one √D factor
                let half = k.div_euclid(2);
                let base = ctx.ext_from_f(&ctx.pi_pow(half));
                if k.rem_euclid(2) == 0 {
                    base
                } else {
                    ctx.ext_mul(&base, &ctx.ext_sqrt_d())
                }
            }
            ExtKind::Split => panic!("split E is not a field"),
        }
    }
    fn uval_lower_bound(ctx: &FieldContext, a: &Self) -> i64 {
        let abs_a = a.a.valuation().unwrap_or_else(|| a.a.abs_prec());
        let abs_b = a.b.valuation().unwrap_or_else(|| a.b.abs_prec());
        match ctx.kind() {
            ExtKind::Inert => abs_a.min(abs_b),
            ExtKind::Ramified => (2 * abs_a).min(2 * abs_b + 1),
            ExtKind::Split => panic!("split E is not a field"),
        }
    }
    fn truncate_abs_uval(ctx: &FieldContext, x: &Self, abs: i64) -> Self {
        match ctx.kind() {
            ExtKind::Inert => Ext { a: x.a.truncate_abs(abs), b: x.b.truncate_abs(abs) },
            ExtKind::Ramified => Ext {
                a: x.a.truncate_abs((abs + 1).div_euclid(2)),
                b: x.b.truncate_abs(abs.div_euclid(2)),
            },
            ExtKind::Split => panic!("split E is not a field"),
        }
    }
}

/// Row-major 2×2 matrix.
#[derive(Clone, Debug)]
pub struct Mat2<T> {
    pub e: [T; 4],
}

impl<T: LocalScalar> Mat2<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Mat2 { e: [a, b, c, d] }
    }

    pub fn identity(ctx: &FieldContext) -> Self {
        Mat2::new(T::one(ctx), T::zero(ctx), T::zero(ctx), T::one(ctx))
    }

    /// upper unipotent (1 β; 0 1)
    pub fn upper(ctx: &FieldContext, beta: T) -> Self {
        Mat2::new(T::one(ctx), beta, T::zero(ctx), T::one(ctx))
    }

    /// lower unipotent (1 0; n 1)
    pub fn lower(ctx: &FieldContext, n: T) -> Self {
        Mat2::new(T::one(ctx), T::zero(ctx), n, T::one(ctx))
    }

    pub fn diag(ctx: &FieldContext, a: T, d: T) -> Self {
        Mat2::new(a, T::zero(ctx), T::zero(ctx), d)
    }

    /// ω = (0 1; −1 0)
    pub fn omega(ctx: &FieldContext) -> Self {
        Mat2::new(
            T::zero(ctx),
            T::one(ctx),
            T::neg(ctx, &T::one(ctx)),
            T::zero(ctx),
        )
    }

    pub fn mul(&self, ctx: &FieldContext, other: &Self) -> Self {
        let p = |i: usize, j: usize, k: usize, l: usize| {
            T::add(
                ctx,
                &T::mul(ctx, &self.e[i], &other.e[j]),
                &T::mul(ctx, &self.e[k], &other.e[l]),
            )
        };
        Mat2::new(p(0, 0, 1, 2), p(0, 1, 1, 3), p(2, 0, 3, 2), p(2, 1, 3, 3))
    }

    pub fn det(&self, ctx: &FieldContext) -> T {
        T::sub(
            ctx,
            &T::mul(ctx, &self.e[0], &self.e[3]),
            &T::mul(ctx, &self.e[1], &self.e[2]),
        )
    }

    pub fn inverse(&self, ctx: &FieldContext) -> Result<Self> {
        let det = self.det(ctx);
        let a = T::div(ctx, &self.e[3], &det)?;
        let b = T::div(ctx, &T::neg(ctx, &self.e[1]), &det)?;
        let c = T::div(ctx, &T::neg(ctx, &self.e[2]), &det)?;
        let d = T::div(ctx, &self.e[0], &det)?;
        Ok(Mat2::new(a, b, c, d))
    }

    pub fn scale(&self, ctx: &FieldContext, t: &T) -> Self {
        Mat2::new(
            T::mul(ctx, t, &self.e[0]),
            T::mul(ctx, t, &self.e[1]),
            T::mul(ctx, t, &self.e[2]),
            T::mul(ctx, t, &self.e[3]),
        )
    }
}

/// Result of the level-c decomposition g = b · n(ϖ^i) · k with k ∈ K₁(ϖ^c).
#[derive(Clone, Debug)]
pub struct IwasawaDecomposition<T> {
    pub borel: Mat2<T>,
    pub coset: u32,
    pub k1: Mat2<T>,
}

/// Decompose an invertible g as b·n(ϖ^i)·k, k ∈ K₁(ϖ^c), i ∈ {0..c}.
/// For c = 0 this is the plain Iwasawa decomposition g = b·k, k ∈ K,
/// reported with coset index 0 and n(ϖ^0)=n(1) replaced by the identity
/// (the unipotent is folded into k).
pub fn decompose_iwasawa<T: LocalScalar>(
    ctx: &FieldContext,
    g: &Mat2<T>,
    c: u32,
) -> Result<IwasawaDecomposition<T>> {
    decompose_iwasawa_with_det(ctx, g, c, None)
}

/// Like [`decompose_iwasawa`], with the determinant supplied exactly by the
/// caller. The Borel diagonal satisfies a₁·a₂ = det(g) up to a unit in the
/// compact part, so a known determinant replaces the cancellation-prone
/// difference in the a₁-slot by an exact division.
pub fn decompose_iwasawa_with_det<T: LocalScalar>(
    ctx: &FieldContext,
    g: &Mat2<T>,
    c: u32,
    det: Option<&T>,
) -> Result<IwasawaDecomposition<T>> {
    let gc = &g.e[2];
    let gd = &g.e[3];
    let vc = T::uval(ctx, gc);
    let vd = T::uval(ctx, gd);
    match (vc, vd) {
        (None, None) => Err(Error::Domain("singular matrix".into())),
        (None, Some(vdv)) => {
            // lower-left vanishes at the available precision; declaring
            // coset c is honest only if the precision certifies
            // v(g₂₁) ≥ v(g₂₂) + c, and the Borel diagonal values must be
            // truncated to what the unseen g₂₁-tail cannot disturb
            let bound = T::uval_lower_bound(ctx, gc);
            if bound < vdv + c as i64 {
                return Err(Error::Precision(format!(
                    "coset index ambiguous: lower-left is O(ϖ^{bound}), need ≥ {}",
                    vdv + c as i64
                )));
            }
            let mut borel = g.clone();
            if let Some(d) = det {
                borel.e[0] = T::div(ctx, d, gd)?;
            } else if let Some(v12) = T::uval(ctx, &g.e[1]) {
                // a₁ would receive −g₁₂·g₂₁/g₂₂; cap its precision accordingly
                borel.e[0] = T::truncate_abs_uval(ctx, &borel.e[0], v12 + bound - vdv);
            }
            Ok(IwasawaDecomposition { borel, coset: c, k1: Mat2::identity(ctx) })
        }
        (Some(vcv), vdo) => {
            let upper_branch = match vdo {
                None => {
                    // g₂₂ vanishes at precision; the swap branch needs
                    // v(g₂₂) > v(g₂₁) certified
                    let bound = T::uval_lower_bound(ctx, gd);
                    if bound <= vcv {
                        return Err(Error::Precision(
                            "branch ambiguous: diagonal entry known to too few digits".into(),
                        ));
                    }
                    false
                }
                Some(vdv) => vcv >= vdv,
            };
            if upper_branch {
                // y = c/d with uval(y) = vcv − vdv ≥ 0
                let y = T::div(ctx, gc, gd)?;
                let vy = T::uval(ctx, &y).expect("nonzero");
                let mut b0 = g.mul(ctx, &Mat2::lower(ctx, T::neg(ctx, &y)));
                if let Some(d) = det {
                    // b0 is triangular with b0[3] = g₂₂, so b0[0] = det/g₂₂
                    b0.e[0] = T::div(ctx, d, gd)?;
                }
                if c == 0 {
                    return Ok(IwasawaDecomposition {
                        borel: b0,
                        coset: 0,
                        k1: Mat2::lower(ctx, y),
                    });
                }
                if vy >= c as i64 {
                    // n(y) ∈ K₁(ϖ^c): canonical coset i = c
                    return Ok(IwasawaDecomposition {
                        borel: b0,
                        coset: c,
                        k1: Mat2::lower(ctx, y),
                    });
                }
                // n(ϖ^i u) = diag(u⁻¹,1)·n(ϖ^i)·diag(u,1)
                let i = vy as u32;
                let u = T::div(ctx, &y, &T::uniformizer_pow(ctx, vy))?;
                let uinv = T::div(ctx, &T::one(ctx), &u)?;
                let borel = b0.mul(ctx, &Mat2::diag(ctx, uinv, T::one(ctx)));
                Ok(IwasawaDecomposition {
                    borel,
                    coset: i,
                    k1: Mat2::diag(ctx, u, T::one(ctx)),
                })
            } else {
                // v(c) < v(d): coset 0 via g = b·n(1)·k, k = (1, d/c−1; 0, 1)
                let dc = T::div(ctx, gd, gc)?;
                let k = Mat2::upper(ctx, T::sub(ctx, &dc, &T::one(ctx)));
                let kinv = Mat2::upper(ctx, T::sub(ctx, &T::one(ctx), &dc));
                let n1inv = Mat2::lower(ctx, T::neg(ctx, &T::one(ctx)));
                let mut borel = g.mul(ctx, &kinv).mul(ctx, &n1inv);
                if let Some(d) = det {
                    // the swap-branch Borel part has a₂ = g₂₁, so a₁ = det/g₂₁
                    borel.e[0] = T::div(ctx, d, gc)?;
                }
                if c == 0 {
                    // fold n(1) into the compact part
                    let kfull = Mat2::lower(ctx, T::one(ctx)).mul(ctx, &k);
                    return Ok(IwasawaDecomposition { borel, coset: 0, k1: kfull });
                }
                Ok(IwasawaDecomposition { borel, coset: 0, k1: k })
            }
        }
    }
}

impl FieldContext {
    pub(crate) fn ext_mul2_inv(&self, a: &Ext, b: &Ext) -> Result<Ext> {
        Ok(self.ext_mul(a, &self.ext_inv(b)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::ExtKind;

    fn ctx() -> FieldContext {
        FieldContext::new(3, 16, ExtKind::Inert, 2).unwrap()
    }

    fn assert_reassembles(ctx: &FieldContext, g: &Mat2<Fp>, c: u32) {
        let dec = decompose_iwasawa(ctx, g, c).unwrap();
        // for coset = c the unipotent lies in K₁(ϖ^c) and is already in k1
        let n = if dec.coset == c {
            Mat2::identity(ctx)
        } else {
            Mat2::lower(ctx, ctx.pi_pow(dec.coset as i64))
        };
        let back = dec.borel.mul(ctx, &n).mul(ctx, &dec.k1);
        for i in 0..4 {
            assert!(
                back.e[i].eq_prec(&g.e[i]),
                "entry {i}: {:?} vs {:?} (coset {})",
                back.e[i],
                g.e[i],
                dec.coset
            );
        }
        // k ∈ K₁(ϖ^c): integral entries, unit diagonal, c | lower-left, d ≡ 1
        if c > 0 {
            let k = &dec.k1;
            assert!(k.e[2].valuation().map_or(true, |v| v >= c as i64));
            assert!(k.e[0].valuation() == Some(0));
            let d_minus_1 = k.e[3].sub(&ctx.one());
            assert!(d_minus_1.valuation().map_or(true, |v| v >= c as i64));
            assert!(k.e[1].valuation().map_or(true, |v| v >= 0));
        }
    }

    #[test]
    fn decompose_examples() {
        let ctx = ctx();
        // borel matrices land in coset c
        let b = Mat2::new(ctx.from_int(6), ctx.from_int(5), ctx.zero(), ctx.from_int(2));
        let dec = decompose_iwasawa(&ctx, &b, 2).unwrap();
        assert_eq!(dec.coset, 2);
        // n(1) is its own coset representative
        let n1 = Mat2::lower(&ctx, ctx.one());
        assert_eq!(decompose_iwasawa(&ctx, &n1, 2).unwrap().coset, 0);
        // n(ϖ) sits in coset 1
        let np = Mat2::lower(&ctx, ctx.pi_pow(1));
        assert_eq!(decompose_iwasawa(&ctx, &np, 2).unwrap().coset, 1);
        assert_reassembles(&ctx, &b, 2);
        assert_reassembles(&ctx, &n1, 2);
        assert_reassembles(&ctx, &np, 2);
    }

    #[test]
    fn decompose_random_matrices() {
        let ctx = ctx();
        let mut seed = 12345u64;
        let mut rng = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 33) % 2000) as i64 - 1000
        };
        for c in [0u32, 1, 2, 3] {
            let mut n = 0;
            while n < 60 {
                let g = Mat2::new(
                    ctx.from_int(rng()),
                    ctx.from_int(rng()),
                    ctx.from_int(rng()),
                    ctx.from_int(rng()),
                );
                if g.det(&ctx).is_zero() {
                    continue;
                }
                n += 1;
                assert_reassembles(&ctx, &g, c);
            }
        }
    }

    #[test]
    fn paper_case_2ii_example() {
        // g = (ϖ^j, 1; −α−mϖ^j, −m) with v(m) ≤ v(α)−c and j=c lands in coset c
        let ctx = ctx();
        let c = 2u32;
        let alpha = ctx.from_int(9); // v=2
        let m = ctx.from_int(1); // v=0 ≤ v(α)−c
        let j = c as i64;
        let g = Mat2::new(
            ctx.pi_pow(j),
            ctx.one(),
            alpha.add(&m.mul(&ctx.pi_pow(j))).neg(),
            m.neg(),
        );
        let dec = decompose_iwasawa(&ctx, &g, c).unwrap();
        assert_eq!(dec.coset, c);
        // borel part has a₁ = −α/m (up to the K₁ absorption) and a₂ = −m
        let a1 = &dec.borel.e[0];
        let a2 = &dec.borel.e[3];
        assert!(a1.eq_prec(&alpha.div(&m).unwrap().neg()));
        assert!(a2.eq_prec(&m.neg()));
    }

    #[test]
    fn decompose_over_inert_extension() {
        let ctx = ctx();
        let sd = ctx.ext_sqrt_d();
        // γ₀·diag(a₁,a₂)-type matrices over E
        let g: Mat2<Ext> = Mat2::new(
            ctx.ext_from_f(&ctx.from_int(7)),
            ctx.ext_from_f(&ctx.from_int(2)),
            ctx.ext_mul(&sd, &ctx.ext_from_f(&ctx.from_int(7))),
            ctx.ext_add(
                &ctx.ext_from_f(&ctx.from_int(12)),
                &ctx.ext_mul(&sd, &ctx.ext_from_f(&ctx.from_int(2))),
            ),
        );
        let dec = decompose_iwasawa(&ctx, &g, 2).unwrap();
        let n = if dec.coset == 2 {
            Mat2::identity(&ctx)
        } else {
            Mat2::lower(&ctx, ctx.ext_from_f(&ctx.pi_pow(dec.coset as i64)))
        };
        let back = dec.borel.mul(&ctx, &n).mul(&ctx, &dec.k1);
        for i in 0..4 {
            assert!(back.e[i].a.eq_prec(&g.e[i].a) && back.e[i].b.eq_prec(&g.e[i].b));
        }
    }

    #[test]
    fn decompose_over_ramified_extension() {
        let ctx = FieldContext::new(5, 16, ExtKind::Ramified, 5).unwrap();
        let sd = ctx.ext_sqrt_d();
        let g: Mat2<Ext> = Mat2::new(
            ctx.ext_from_f(&ctx.from_int(2)),
            ctx.ext_from_f(&ctx.from_int(3)),
            sd.clone(),
            ctx.ext_add(&ctx.ext_from_f(&ctx.from_int(10)), &sd),
        );
        let dec = decompose_iwasawa(&ctx, &g, 0).unwrap();
        let back = dec.borel.mul(&ctx, &dec.k1);
        for i in 0..4 {
            assert!(back.e[i].a.eq_prec(&g.e[i].a) && back.e[i].b.eq_prec(&g.e[i].b));
        }
        // k ∈ GL₂(O_E): all entries have uval ≥ 0, det a unit
        for i in 0..4 {
            assert!(Ext::uval(&ctx, &dec.k1.e[i]).map_or(true, |v| v >= 0));
        }
        assert_eq!(Ext::uval(&ctx, &dec.k1.det(&ctx)), Some(0));
    }
}
