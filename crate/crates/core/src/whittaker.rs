//! Whittaker-function values for each representation case: closed tables
//! and an independent induced-model integration oracle
//! W_j(α) = ∫ φ(ω·n(m)·diag(α,1)·n_lower(ϖ^j)) ψ(m) dm,
//! where φ is the declared vector of the induced model, evaluated honestly
//! through the level-c decomposition. The truncated arithmetic doubles as a
//! local-constancy certificate: a residue coset is subdivided exactly when
//! some character or ψ evaluation runs out of digits on it.

use crate::chars::FChar;
use crate::cnum::{C64, C_ZERO};
use crate::error::{Error, Result};
use crate::matrix::{decompose_iwasawa_with_det, Mat2};
use crate::padic::{FieldContext, Fp};
use crate::symbolic::SymbolicValue;
use crate::tail::{sum_shells, sum_shells_down};

/// The representation π̂ ∋ φ whose ψ⁻-Whittaker function we evaluate.
#[derive(Clone, Debug)]
pub enum RepSpec {
    /// unramified principal series π(μ₁, μ₂); W is the K-invariant newform
    UnramifiedPrincipal { mu1: C64, mu2: C64 },
    /// unramified special σ(μ₁, μ₂) with μ₁⁻¹μ₂ = |·| (so μ₂ = μ₁/q)
    UnramifiedSpecial { mu1: C64 },
    /// ramified principal series, μ₁ and μ₂ both of level k, μ₁μ₂ unramified;
    /// level c = 2k, newform supported on B n(ϖ^k) K₁(ϖ^c)
    RamifiedPrincipal { mu1: FChar, mu2: FChar, k: u32 },
    /// supercuspidal of level c with unramified (or level-1) central character
    Supercuspidal { c: u32, z0: C64 },
    /// joint case: μ₁ unramified, μ₂ of level c; newform supported on BK₁(ϖ^c)
    Joint { mu1: C64, mu2: FChar, c: u32 },
}

impl RepSpec {
    /// Newform level (c(π̂)); 0 for the unramified principal series.
    pub fn level(&self) -> u32 {
        match self {
            RepSpec::UnramifiedPrincipal { .. } => 0,
            RepSpec::UnramifiedSpecial { .. } => 1,
            RepSpec::RamifiedPrincipal { k, .. } => 2 * k,
            RepSpec::Supercuspidal { c, .. } => *c,
            RepSpec::Joint { c, .. } => *c,
        }
    }

    /// w_π̂(ϖ) — note the vector lives in π̂ = π(μ₁⁻¹, μ₂⁻¹).
    pub fn central_at_pi_hat(&self, q: f64) -> Result<C64> {
        Ok(match self {
            RepSpec::UnramifiedPrincipal { mu1, mu2 } => 1.0 / (mu1 * mu2),
            RepSpec::UnramifiedSpecial { mu1 } => {
                let mu2 = mu1 / q;
                1.0 / (mu1 * mu2)
            }
            RepSpec::RamifiedPrincipal { mu1, mu2, .. } => 1.0 / (mu1.at_pi * mu2.at_pi),
            RepSpec::Supercuspidal { z0, .. } => *z0,
            RepSpec::Joint { mu1, mu2, .. } => 1.0 / (mu1 * mu2.at_pi),
        })
    }
}

/// Closed values of the normalized newform Whittaker function at
/// diag(α,1)·n_lower(ϖ^i). Only the (kind, i) pairs with a displayed closed
/// form are accepted.
pub fn whittaker_closed(ctx: &FieldContext, rep: &RepSpec, alpha: &Fp, i: u32) -> Result<C64> {
    let q = ctx.q();
    let v = alpha
        .valuation()
        .ok_or_else(|| Error::Domain("Whittaker argument must be nonzero".into()))?;
    match rep {
        RepSpec::UnramifiedPrincipal { mu1, mu2 } => {
            if v < 0 {
                return Ok(C_ZERO);
            }
            let m1i = 1.0 / mu1;
            let m2i = 1.0 / mu2;
            let num = m1i.powi(v as i32 + 1) - m2i.powi(v as i32 + 1);
            let den = m1i - m2i;
            if den.norm() < 1e-12 {
                return Err(Error::Pole("μ₁ = μ₂ is outside the closed table".into()));
            }
            Ok(q.powf(-(v as f64) / 2.0) * num / den)
        }
        RepSpec::UnramifiedSpecial { mu1 } => match i {
            1 => {
                if v < 0 {
                    Ok(C_ZERO)
                } else {
                    Ok(mu1.powi(-(v as i32)) * q.powf(-(v as f64) / 2.0))
                }
            }
            0 => {
                if v < -1 {
                    Ok(C_ZERO)
                } else {
                    let psi = alpha.neg().psi()?;
                    Ok(-mu1.powi(-(v as i32)) * q.powf(-(v as f64) / 2.0) * psi / q)
                }
            }
            _ => Err(Error::Domain(format!("special representation has cosets 0 and 1, got {i}"))),
        },
        RepSpec::Joint { mu1, c, .. } => {
            if i != *c {
                return Err(Error::Domain("joint case has a closed value only at i = c".into()));
            }
            if v < 0 {
                Ok(C_ZERO)
            } else {
                Ok(q.powf(-(v as f64) / 2.0) * mu1.powi(-(v as i32)))
            }
        }
        RepSpec::Supercuspidal { c, .. } => {
            if i != *c {
                return Err(Error::Domain(
                    "supercuspidal pointwise values exist only at i = c (the newform 1_{1,0})".into(),
                ));
            }
            Ok(if v == 0 && alpha.unit_residue(1).is_ok() {
                // 1_{1,0}(α) = 1 on v(α) = 0
                C64::new(1.0, 0.0)
            } else {
                C_ZERO
            })
        }
        RepSpec::RamifiedPrincipal { .. } => Err(Error::Domain(
            "ramified principal series has moment tables, not pointwise closed values".into(),
        )),
    }
}

/// φ in the induced model π(μ₁⁻¹, μ₂⁻¹): a coefficient per coset
/// B n(ϖ^i) K₁(ϖ^c), extended by
/// φ((a₁ m; 0 a₂)g) = μ₁⁻¹(a₁) μ₂⁻¹(a₂) |a₁/a₂|^{1/2} φ(g).
#[derive(Clone, Debug)]
pub struct InducedVector {
    pub c: u32,
    pub coeffs: Vec<C64>,
    pub mu1_inv: FChar,
    pub mu2_inv: FChar,
}

impl InducedVector {
    pub fn for_rep(ctx: &FieldContext, rep: &RepSpec) -> Result<Self> {
        let q = ctx.q();
        match rep {
            RepSpec::UnramifiedPrincipal { mu1, mu2 } => Ok(InducedVector {
                c: 0,
                coeffs: vec![C64::new(1.0, 0.0)],
                mu1_inv: FChar::unramified(1.0 / mu1),
                mu2_inv: FChar::unramified(1.0 / mu2),
            }),
            RepSpec::UnramifiedSpecial { mu1 } => Ok(InducedVector {
                c: 1,
                coeffs: vec![C64::new(-1.0 / q, 0.0), C64::new(1.0, 0.0)],
                mu1_inv: FChar::unramified(1.0 / mu1),
                mu2_inv: FChar::unramified(q / mu1),
            }),
            RepSpec::RamifiedPrincipal { mu1, mu2, k } => {
                let c = 2 * k;
                let mut coeffs = vec![C_ZERO; c as usize + 1];
                coeffs[*k as usize] = C64::new(1.0, 0.0);
                Ok(InducedVector { c, coeffs, mu1_inv: mu1.inv(), mu2_inv: mu2.inv() })
            }
            RepSpec::Joint { mu1, mu2, c } => {
                let mut coeffs = vec![C_ZERO; *c as usize + 1];
                coeffs[*c as usize] = C64::new(1.0, 0.0);
                Ok(InducedVector {
                    c: *c,
                    coeffs,
                    mu1_inv: FChar::unramified(1.0 / mu1),
                    mu2_inv: mu2.inv(),
                })
            }
            RepSpec::Supercuspidal { .. } => Err(Error::Domain(
                "supercuspidal vectors live in the Kirillov model".into(),
            )),
        }
    }

    pub fn eval(&self, ctx: &FieldContext, g: &Mat2<Fp>) -> Result<C64> {
        self.eval_with_det(ctx, g, None)
    }

    pub fn eval_with_det(&self, ctx: &FieldContext, g: &Mat2<Fp>, det: Option<&Fp>) -> Result<C64> {
        let dec = decompose_iwasawa_with_det(ctx, g, self.c, det)?;
        let coeff = self.coeffs[dec.coset as usize];
        if coeff == C_ZERO {
            return Ok(C_ZERO);
        }
        let a1 = &dec.borel.e[0];
        let a2 = &dec.borel.e[3];
        let v1 = a1
            .valuation()
            .ok_or_else(|| Error::Precision("Borel diagonal vanishes at the working precision".into()))?;
        let v2 = a2
            .valuation()
            .ok_or_else(|| Error::Precision("Borel diagonal vanishes at the working precision".into()))?;
        let modulus = ctx.q().powf(-((v1 - v2) as f64) / 2.0);
        Ok(coeff * self.mu1_inv.eval(a1)? * self.mu2_inv.eval(a2)? * modulus)
    }
}

/// Raw (unnormalized) W_j(α): the m-integral over F with ψ(m) against the
/// declared induced vector. Shells of v(m) are summed with geometric-tail
/// closure; within a shell, unit cosets are refined adaptively wherever the
/// truncated arithmetic certifies the integrand is not yet constant.
pub fn whittaker_oracle(
    ctx: &FieldContext,
    rep: &RepSpec,
    alpha: &Fp,
    j: u32,
    depth: i64,
) -> Result<C64> {
    let phi = InducedVector::for_rep(ctx, rep)?;
    let va = alpha
        .valuation()
        .ok_or_else(|| Error::Domain("oracle argument must be nonzero".into()))?;
    let omega: Mat2<Fp> = Mat2::omega(ctx);
    let nj = Mat2::lower(ctx, ctx.pi_pow(j as i64));
    let right = Mat2::diag(ctx, alpha.clone(), ctx.one()).mul(ctx, &nj);
    // det(ω n(m) diag(α,1) n(ϖ^j)) = α, exactly
    let integrand = |m: &Fp| -> Result<C64> {
        let g = omega
            .mul(ctx, &Mat2::upper(ctx, m.clone()))
            .mul(ctx, &right);
        Ok(phi.eval_with_det(ctx, &g, Some(alpha))? * m.psi()?)
    };
    // anchor between the two regimes: shells below vanish by ψ-level
    // arguments (zero-tail going down), shells above stabilize into a
    // geometric sequence (closed analytically going up)
    let anchor = va.min(0) - 1;
    let down = sum_shells_down(anchor, 2, depth.max(8) as usize + 6, |t| {
        shell_integral(ctx, t, &integrand)
    })?;
    let min_up = (va.max(0) + phi.c as i64 + 6 - anchor) as usize;
    let up = sum_shells(anchor + 1, min_up, min_up + depth.max(10) as usize, |t| {
        shell_integral(ctx, t, &integrand)
    })?;
    Ok(down + up)
}

pub use crate::integrate::additive_shell as shell_integral;

/// Which moment of W_i(α) to take over its supporting shell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MomentKind {
    /// ∫ W_i(α) d^*α
    Const,
    /// ∫ W_i(α) ψ(ϖ^{−i}α) d^*α
    Psi,
}

/// Closed moment tables for the supercuspidal and ramified-principal
/// newforms. Supercuspidal ψ-moments carry the formal C₁ (and w_π̂(ϖ)).
pub fn whittaker_moment(
    ctx: &FieldContext,
    rep: &RepSpec,
    i: u32,
    kind: MomentKind,
) -> Result<SymbolicValue> {
    let q = ctx.q();
    match rep {
        RepSpec::Supercuspidal { c, z0 } => {
            let c = *c;
            match kind {
                MomentKind::Const => Ok(if i >= c {
                    SymbolicValue::one()
                } else if i + 1 == c {
                    SymbolicValue::scalar(C64::new(-1.0 / (q - 1.0), 0.0))
                } else {
                    SymbolicValue::zero()
                }),
                MomentKind::Psi => {
                    if i == 0 {
                        Ok(SymbolicValue::symbol(0))
                    } else if i == 1 {
                        Ok(SymbolicValue::symbol(0).scale(-z0 / (q - 1.0)))
                    } else {
                        Ok(SymbolicValue::zero())
                    }
                }
            }
        }
        RepSpec::RamifiedPrincipal { mu1, k, .. } => {
            let k = *k;
            let c = 2 * k;
            let w_pi_at_pi = C64::new(1.0, 0.0) / (rep.central_at_pi_hat(q)?);
            let mu1_inv_minus1 = mu1.inv().eval(&ctx.from_int(-1))?;
            match kind {
                MomentKind::Const => Ok(if i == c {
                    SymbolicValue::one()
                } else if i + 1 == c && i >= k {
                    // i = c−1 ≥ k covers both c−1 > k and the k=1 edge i=k
                    SymbolicValue::scalar(C64::new(-1.0 / (q - 1.0), 0.0))
                } else {
                    SymbolicValue::zero()
                }),
                MomentKind::Psi => {
                    let pref = w_pi_at_pi.powi((k - i.min(k)) as i32) * mu1_inv_minus1;
                    Ok(if i == 0 && k >= 1 {
                        SymbolicValue::scalar(pref)
                    } else if i == 1 && i <= k {
                        // i = 1 < k, and the k = 1 edge case i = k = 1
                        SymbolicValue::scalar(-pref / (q - 1.0))
                    } else {
                        SymbolicValue::zero()
                    })
                }
            }
        }
        _ => Err(Error::Domain("moment tables exist for supercuspidal and ramified principal".into())),
    }
}

/// Support shell of W_i for the supercuspidal case: v(α) = c + min{−c, −2(c−i)}.
pub fn sc_support_shell(c: u32, i: u32) -> i64 {
    let c = c as i64;
    let i = i as i64;
    c + (-c).min(-2 * (c - i))
}
