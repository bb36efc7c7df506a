//! The two-track core: brute-force oracle evaluation of I(α, f, Φ_s) and
//! 𝒫(s, w, f, Φ_s), closed-form evaluators for every case, the normalized
//! 𝒫⁰, and the matrix-coefficient route.

mod coset;
mod lfactor;
mod mc;
mod torus;
mod unram;

pub use coset::*;
pub use lfactor::*;
pub use mc::*;
pub use torus::*;
pub use unram::*;

use crate::chars::{EChar, FChar};
use crate::cnum::{q_pow, C64};
use crate::error::{Error, Result};
use crate::padic::FieldContext;
use crate::symbolic::SymbolicValue;

/// δ = q^{−(w/2+1/4)}.
pub fn delta(q: f64, w: C64) -> C64 {
    q_pow(q, -(w / 2.0 + 0.25))
}

/// Evaluation point for 𝒫(s, w): truncation depth bounds the number of
/// honestly computed shells before a tail closure must engage.
#[derive(Clone, Debug)]
pub struct EvalPoint {
    pub s: C64,
    pub w: C64,
    pub depth: i64,
}

impl EvalPoint {
    pub fn new(s: C64, w: C64) -> Self {
        EvalPoint { s, w, depth: 48 }
    }
}

/// A 𝒫-value: numeric, or symbolic for the supercuspidal cases where the
/// C₁-coefficients must cancel.
#[derive(Clone, Debug)]
pub enum PValue {
    Numeric(C64),
    Symbolic(SymbolicValue),
}

impl PValue {
    pub fn numeric(&self) -> Result<C64> {
        match self {
            PValue::Numeric(z) => Ok(*z),
            PValue::Symbolic(v) => {
                if v.symbolic_residue() > 1e-9 {
                    return Err(Error::Domain(format!(
                        "formal symbols did not cancel: residue {}",
                        v.symbolic_residue()
                    )));
                }
                Ok(v.numeric_part())
            }
        }
    }

    pub fn symbolic_residue(&self) -> f64 {
        match self {
            PValue::Numeric(_) => 0.0,
            PValue::Symbolic(v) => v.symbolic_residue(),
        }
    }
}

/// χ_{1,s}(ϖ) and χ_{2,s}(ϖ) on an inert E (|ϖ|_E = q^{−2}).
pub fn shifted_at_pi_inert(q: f64, chi1: C64, chi2: C64, s: C64) -> (C64, C64) {
    (
        chi1 * q_pow(q, -(2.0 * s + 1.0)),
        chi2 * q_pow(q, 2.0 * s + 1.0),
    )
}

/// χ_{i,s}(ϖ) at a split place (|ϖ| = q^{−1}).
pub fn shifted_at_pi_split(q: f64, chi1: C64, chi2: C64, s: C64) -> (C64, C64) {
    (chi1 * q_pow(q, -(s + 0.5)), chi2 * q_pow(q, s + 0.5))
}

/// χ_{i,s}(ϖ_E) for the ramified extension (|ϖ_E|_E = q^{−1}).
pub fn shifted_at_pie_ram(q: f64, chi1_pie: C64, chi2_pie: C64, s: C64) -> (C64, C64) {
    (chi1_pie * q_pow(q, -(s + 0.5)), chi2_pie * q_pow(q, s + 0.5))
}

fn check_center(product: C64) -> Result<()> {
    if (product - crate::cnum::C_ONE).norm() > 1e-10 {
        return Err(Error::InvalidContext(format!(
            "central-character condition μ₁μ₂χ₁χ₂ = 1 violated: got {product}"
        )));
    }
    Ok(())
}

/// Case tags, matching the eight local situations plus the
/// matrix-coefficient route.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum CaseTag {
    #[serde(rename = "U-INERT")]
    UInert,
    #[serde(rename = "U-SPLIT")]
    USplit,
    #[serde(rename = "R1-RAMEXT")]
    R1RamExt,
    #[serde(rename = "R2-SPECIAL")]
    R2Special,
    #[serde(rename = "R3-SC-SPLIT")]
    R3ScSplit,
    #[serde(rename = "R3-RPS-SPLIT")]
    R3RpsSplit,
    #[serde(rename = "R4-RAMCHI")]
    R4RamChi,
    #[serde(rename = "R5-JOINT")]
    R5Joint,
    #[serde(rename = "MC-SC-INERT")]
    McScInert,
}

impl std::fmt::Display for CaseTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CaseTag::UInert => "U-INERT",
            CaseTag::USplit => "U-SPLIT",
            CaseTag::R1RamExt => "R1-RAMEXT",
            CaseTag::R2Special => "R2-SPECIAL",
            CaseTag::R3ScSplit => "R3-SC-SPLIT",
            CaseTag::R3RpsSplit => "R3-RPS-SPLIT",
            CaseTag::R4RamChi => "R4-RAMCHI",
            CaseTag::R5Joint => "R5-JOINT",
            CaseTag::McScInert => "MC-SC-INERT",
        };
        write!(f, "{s}")
    }
}

/// One of the local situations with its prescribed f and Φ_s.
#[derive(Clone, Debug)]
pub enum CaseSpec {
    UInert(UnramCase),
    USplit(UnramCase),
    R1RamExt(UnramCase),
    R2Special(CosetCase),
    R3ScSplit(CosetCase),
    R3RpsSplit(CosetCase),
    R4RamChi(TorusCase),
    R5Joint(TorusCase),
    McScInert(McCase),
}

impl CaseSpec {
    pub fn tag(&self) -> CaseTag {
        match self {
            CaseSpec::UInert(_) => CaseTag::UInert,
            CaseSpec::USplit(_) => CaseTag::USplit,
            CaseSpec::R1RamExt(_) => CaseTag::R1RamExt,
            CaseSpec::R2Special(_) => CaseTag::R2Special,
            CaseSpec::R3ScSplit(_) => CaseTag::R3ScSplit,
            CaseSpec::R3RpsSplit(_) => CaseTag::R3RpsSplit,
            CaseSpec::R4RamChi(_) => CaseTag::R4RamChi,
            CaseSpec::R5Joint(_) => CaseTag::R5Joint,
            CaseSpec::McScInert(_) => CaseTag::McScInert,
        }
    }

    pub fn ctx(&self) -> &FieldContext {
        match self {
            CaseSpec::UInert(c) | CaseSpec::USplit(c) | CaseSpec::R1RamExt(c) => &c.ctx,
            CaseSpec::R2Special(c) | CaseSpec::R3ScSplit(c) | CaseSpec::R3RpsSplit(c) => &c.ctx,
            CaseSpec::R4RamChi(c) | CaseSpec::R5Joint(c) => &c.ctx,
            CaseSpec::McScInert(c) => &c.ctx,
        }
    }
}

/// Shared data of the three fully unramified-π cases (the extension kind in
/// ctx distinguishes them): χ-values at the uniformizer (of E, per split
/// place, or of ϖ_E), μ-values at ϖ.
#[derive(Clone, Debug)]
pub struct UnramCase {
    pub ctx: FieldContext,
    /// inert: (χ₁(ϖ), χ₂(ϖ)); ramified: values at ϖ_E
    pub chi1: (C64, C64),
    pub chi2: (C64, C64),
    pub mu1: C64,
    pub mu2: C64,
}

/// The split-place coset cases (unramified special, supercuspidal, ramified
/// principal series).
#[derive(Clone, Debug)]
pub struct CosetCase {
    pub ctx: FieldContext,
    pub chi1: (C64, C64),
    pub chi2: (C64, C64),
    pub rep: crate::whittaker::RepSpec,
    pub c: u32,
}

/// The inert torus-route cases (ramified χ₁; joint ramification).
#[derive(Clone, Debug)]
pub struct TorusCase {
    pub ctx: FieldContext,
    pub chi1: EChar,
    pub chi2_at_pi: C64,
    pub mu1: C64,
    /// unramified value for R4; the level-c character for R5
    pub mu2: MuTwo,
    pub c: u32,
}

#[derive(Clone, Debug)]
pub enum MuTwo {
    Unramified(C64),
    Ramified(FChar),
}

/// §7 matrix-coefficient case: supercuspidal of level c, everything else
/// unramified, E inert.
#[derive(Clone, Debug)]
pub struct McCase {
    pub ctx: FieldContext,
    pub c: u32,
}
