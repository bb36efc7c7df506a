//! Schwartz functions on M₂(F)×F^* and the Weil representation action.
//!
//! A function is a sum of transformed blocks. A block is a product of four
//! entry cosets, a u-support, an optional bilinear phase and a scale; the
//! generators act by exact pointwise pullbacks, and ω acts by the genuine
//! finite Fourier sum over the support at the certified constancy level.
//! The pairing (x,y) = x₁y₄ + x₄y₁ − x₂y₃ − x₃y₂ couples the entry pairs
//! (1,4) and (2,3) separately, so transforms are built and cached per pair.

use std::collections::HashMap;

use crate::cnum::{C64, C_ONE, C_ZERO};
use crate::error::{Error, Result};
use crate::matrix::Mat2;
use crate::padic::{FieldContext, Fp};

/// center + ϖ^level·O (center 0 gives the plain window ϖ^level·O).
#[derive(Clone, Debug)]
pub struct EntryCoset {
    pub center: Fp,
    pub level: i64,
}

impl EntryCoset {
    pub fn window(ctx: &FieldContext, level: i64) -> Self {
        EntryCoset { center: ctx.zero(), level }
    }

    pub fn member(&self, x: &Fp) -> Result<bool> {
        let d = x.sub(&self.center);
        match d.valuation() {
            Some(v) => Ok(v >= self.level),
            None => {
                if d.abs_prec() >= self.level {
                    Ok(true)
                } else {
                    Err(Error::Precision("coset membership ambiguous".into()))
                }
            }
        }
    }

    /// Lowest valuation attained on the coset.
    pub fn lo(&self) -> i64 {
        match self.center.valuation() {
            Some(v) => v.min(self.level),
            None => self.level,
        }
    }
}

/// u-support: the shell v(u) = shell, optionally intersected with a unit
/// coset β(1 + ϖ^level O) ≡ β + ϖ^level O.
#[derive(Clone, Debug)]
pub struct USupport {
    pub shell: i64,
    pub coset: Option<(u128, u32)>,
}

impl USupport {
    pub fn units() -> Self {
        USupport { shell: 0, coset: None }
    }

    /// `beta` in the coset must already be reduced mod p^level.
    pub fn member(&self, u: &Fp) -> Result<bool> {
        match u.valuation() {
            None => Err(Error::Precision("u-support membership ambiguous".into())),
            Some(v) => {
                if v != self.shell {
                    return Ok(false);
                }
                match self.coset {
                    None => Ok(true),
                    Some((beta, lvl)) => Ok(u.unit_residue(lvl)? == beta),
                }
            }
        }
    }
}

/// ψ(u·n⁻¹·[c₁₄(x₁−b₁)(x₄−b₄) − c₂₃(x₂−b₂)(x₃−b₃)]).
#[derive(Clone, Debug)]
pub struct Phase {
    pub n_inv: Fp,
    pub c14: bool,
    pub c23: bool,
    pub b: [Fp; 4],
}

impl Phase {
    fn pair14(&self, x1: &Fp, x4: &Fp, u: &Fp) -> Result<C64> {
        if !self.c14 {
            return Ok(C_ONE);
        }
        let t = x1.sub(&self.b[0]).mul(&x4.sub(&self.b[3]));
        u.mul(&self.n_inv).mul(&t).psi()
    }

    fn pair23(&self, x2: &Fp, x3: &Fp, u: &Fp) -> Result<C64> {
        if !self.c23 {
            return Ok(C_ONE);
        }
        let t = x2.sub(&self.b[1]).mul(&x3.sub(&self.b[2]));
        u.mul(&self.n_inv).mul(&t).psi().map(|z| z.conj())
    }
}

/// One product block: scale · ∏ entry-cosets · u-support · phase.
#[derive(Clone, Debug)]
pub struct Block {
    pub scale: C64,
    pub entries: [EntryCoset; 4],
    pub u: USupport,
    pub phase: Option<Phase>,
}

impl Block {
    /// char(M₂(O)) × char(O^*).
    pub fn std_k(ctx: &FieldContext) -> Self {
        Block {
            scale: C_ONE,
            entries: [
                EntryCoset::window(ctx, 0),
                EntryCoset::window(ctx, 0),
                EntryCoset::window(ctx, 0),
                EntryCoset::window(ctx, 0),
            ],
            u: USupport::units(),
            phase: None,
        }
    }

    /// char(O,O;ϖ^cO,O) × char(O^*).
    pub fn level_k1(ctx: &FieldContext, c: u32) -> Self {
        let mut b = Block::std_k(ctx);
        b.entries[2].level = c as i64;
        b
    }

    /// char(b₁+ϖ^cO, O; b₂+ϖ^cO, O) × char(O^*).
    pub fn exotic(ctx: &FieldContext, c: u32, b1: Fp, b2: Fp) -> Self {
        let mut b = Block::std_k(ctx);
        b.entries[0] = EntryCoset { center: b1, level: c as i64 };
        b.entries[2] = EntryCoset { center: b2, level: c as i64 };
        b
    }
}

/// A single block with a word of Weil-generator transforms applied lazily;
/// ω-steps hold eagerly built pair tables for the declared u-samples.
#[derive(Debug)]
pub enum BlockOp {
    Base(Block),
    /// multiply by ψ(u·β·det x) — the upper-unipotent action
    PhaseDet { inner: Box<BlockOp>, beta: Fp },
    /// x ↦ x_scale·x, u ↦ u_scale·u, times a scalar factor
    Arg { inner: Box<BlockOp>, x_scale: Fp, u_scale: Fp, factor: C64 },
    /// finite Fourier transform with kernel ψ_u((x,y))
    Fourier { inner: Box<BlockOp>, tables: Vec<FourierTables> },
}

/// Per-u-sample transform tables for the two entry pairs.
#[derive(Debug)]
pub struct FourierTables {
    pub u_key: (i64, u128),
    pub out14: PairTable,
    pub out23: PairTable,
}

#[derive(Debug)]
pub struct PairTable {
    pub lo: (i64, i64),
    pub level: (i64, i64),
    pub cells: HashMap<(u128, u128), C64>,
}

impl PairTable {
    fn lookup(&self, ctx: &FieldContext, a: &Fp, b: &Fp) -> Result<C64> {
        let ka = cell_key(ctx, a, self.lo.0, self.level.0)?;
        let kb = cell_key(ctx, b, self.lo.1, self.level.1)?;
        match (ka, kb) {
            (Some(ka), Some(kb)) => Ok(self.cells.get(&(ka, kb)).copied().unwrap_or(C_ZERO)),
            _ => Ok(C_ZERO),
        }
    }
}

/// Canonical key of the coset of ϖ^level·O containing x inside the window
/// ϖ^lo·O: the integer lift of x·ϖ^{−lo} mod ϖ^{level−lo}. None when x is
/// outside the window.
fn cell_key(ctx: &FieldContext, x: &Fp, lo: i64, level: i64) -> Result<Option<u128>> {
    let shifted = x.mul(&ctx.pi_pow(-lo));
    match shifted.valuation() {
        None => {
            if shifted.abs_prec() >= level - lo {
                Ok(Some(0))
            } else {
                Err(Error::Precision("cell key ambiguous".into()))
            }
        }
        Some(v) if v < 0 => Ok(None),
        Some(_) => Ok(Some(shifted.int_lift((level - lo).max(0) as u32)?)),
    }
}

/// (lo, constancy level) per entry, given v(u); the function vanishes off
/// v(x_i) ≥ lo_i and is constant on cosets of ϖ^{const_i}O.
pub fn entry_bounds(ctx: &FieldContext, op: &BlockOp, u_val: i64) -> [(i64, i64); 4] {
    match op {
        BlockOp::Base(b) => {
            let mut out = [(0i64, 0i64); 4];
            for i in 0..4 {
                out[i] = (b.entries[i].lo(), b.entries[i].level);
            }
            if let Some(ph) = &b.phase {
                let vn = ph.n_inv.valuation().unwrap_or(0);
                // sensitivity of ψ(u n⁻¹ (x_i−b)(x_j−b')) in x_i: need
                // v(u) + v(n⁻¹) + t + lo_j' ≥ 0 on the support
                let lo_shifted = |j: usize| -> i64 {
                    // lowest valuation of (x_j − b_j) on the support coset
                    let diff = b.entries[j].center.sub(&ph.b[j]);
                    match diff.valuation() {
                        Some(v) => v.min(b.entries[j].level),
                        None => b.entries[j].level,
                    }
                };
                let pairs: [(usize, usize, bool); 4] = [
                    (0, 3, ph.c14),
                    (3, 0, ph.c14),
                    (1, 2, ph.c23),
                    (2, 1, ph.c23),
                ];
                for (i, j, active) in pairs {
                    if active {
                        let need = -(u_val + vn + lo_shifted(j));
                        out[i].1 = out[i].1.max(need);
                    }
                }
            }
            out
        }
        BlockOp::PhaseDet { inner, beta } => {
            let mut bb = entry_bounds(ctx, inner, u_val);
            let vb = beta.valuation().unwrap_or(0);
            let pairing = [3usize, 2, 1, 0];
            let lows = bb.map(|(lo, _)| lo);
            for i in 0..4 {
                let need = -(u_val + vb + lows[pairing[i]]);
                bb[i].1 = bb[i].1.max(need);
            }
            bb
        }
        BlockOp::Arg { inner, x_scale, .. } => {
            let vs = x_scale.valuation().expect("nonzero scale");
            let bb = entry_bounds(ctx, inner, u_val);
            bb.map(|(lo, lvl)| (lo - vs, lvl - vs))
        }
        BlockOp::Fourier { inner, .. } => {
            let bb = entry_bounds(ctx, inner, u_val);
            let pairing = [3usize, 2, 1, 0];
            let mut out = [(0i64, 0i64); 4];
            for i in 0..4 {
                let (lo_j, lvl_j) = bb[pairing[i]];
                out[i] = (-(u_val + lvl_j), -(u_val + lo_j));
            }
            out
        }
    }
}

/// Pair selector for the factored evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairId {
    P14,
    P23,
}

/// Factor carried by u alone (scale and u-support), independent of x.
fn u_factor(ctx: &FieldContext, op: &BlockOp, u: &Fp) -> Result<C64> {
    match op {
        BlockOp::Base(b) => {
            if b.u.shell != u.valuation().ok_or_else(|| Error::Precision("u vanishes".into()))? {
                return Ok(C_ZERO);
            }
            if let Some((beta, lvl)) = b.u.coset {
                if u.unit_residue(lvl)? != beta {
                    return Ok(C_ZERO);
                }
            }
            Ok(b.scale)
        }
        BlockOp::PhaseDet { inner, .. } => u_factor(ctx, inner, u),
        BlockOp::Arg { inner, u_scale, factor, .. } => {
            Ok(factor * u_factor(ctx, inner, &u.mul(u_scale))?)
        }
        BlockOp::Fourier { inner, .. } => u_factor(ctx, inner, u),
    }
}

/// The pair-factored x-dependence: full value = u_factor · pair14 · pair23.
fn pair_eval(
    ctx: &FieldContext,
    op: &BlockOp,
    pair: PairId,
    a: &Fp,
    b: &Fp,
    u: &Fp,
) -> Result<C64> {
    match op {
        BlockOp::Base(blk) => {
            let (ia, ib) = match pair {
                PairId::P14 => (0usize, 3usize),
                PairId::P23 => (1, 2),
            };
            if !blk.entries[ia].member(a)? || !blk.entries[ib].member(b)? {
                return Ok(C_ZERO);
            }
            match &blk.phase {
                None => Ok(C_ONE),
                Some(ph) => match pair {
                    PairId::P14 => ph.pair14(a, b, u),
                    PairId::P23 => ph.pair23(a, b, u),
                },
            }
        }
        BlockOp::PhaseDet { inner, beta } => {
            let base = pair_eval(ctx, inner, pair, a, b, u)?;
            if base == C_ZERO {
                return Ok(C_ZERO);
            }
            // ψ(uβ det x) = ψ(uβ x₁x₄)·ψ(−uβ x₂x₃)
            let t = u.mul(beta).mul(&a.mul(b));
            let ph = match pair {
                PairId::P14 => t.psi()?,
                PairId::P23 => t.psi()?.conj(),
            };
            Ok(base * ph)
        }
        BlockOp::Arg { inner, x_scale, u_scale, .. } => {
            let ua = u.mul(u_scale);
            pair_eval(ctx, inner, pair, &x_scale.mul(a), &x_scale.mul(b), &ua)
        }
        BlockOp::Fourier { tables, .. } => {
            let key = u_key(u)?;
            let t = tables
                .iter()
                .find(|t| t.u_key == key)
                .ok_or_else(|| Error::Domain("u-value outside the prepared samples".into()))?;
            match pair {
                PairId::P14 => t.out14.lookup(ctx, a, b),
                PairId::P23 => t.out23.lookup(ctx, a, b),
            }
        }
    }
}

fn u_key(u: &Fp) -> Result<(i64, u128)> {
    let v = u.valuation().ok_or_else(|| Error::Precision("u vanishes".into()))?;
    Ok((v, u.unit_residue(u.rel_prec().min(8))?))
}

/// A Schwartz function: a finite sum of transformed blocks.
#[derive(Debug)]
pub struct SchwartzFunction {
    pub terms: Vec<BlockOp>,
}

impl SchwartzFunction {
    pub fn from_blocks(blocks: Vec<Block>) -> Self {
        SchwartzFunction { terms: blocks.into_iter().map(BlockOp::Base).collect() }
    }

    pub fn eval(&self, ctx: &FieldContext, x: &Mat2<Fp>, u: &Fp) -> Result<C64> {
        let mut acc = C_ZERO;
        for op in &self.terms {
            let uf = u_factor(ctx, op, u)?;
            if uf == C_ZERO {
                continue;
            }
            let p14 = pair_eval(ctx, op, PairId::P14, &x.e[0], &x.e[3], u)?;
            if p14 == C_ZERO {
                continue;
            }
            let p23 = pair_eval(ctx, op, PairId::P23, &x.e[1], &x.e[2], u)?;
            acc += uf * p14 * p23;
        }
        Ok(acc)
    }

    /// Pointwise right action: (x, u) ↦ f(x·g, u/det g).
    pub fn right_translate_eval(
        &self,
        ctx: &FieldContext,
        g: &Mat2<Fp>,
        x: &Mat2<Fp>,
        u: &Fp,
    ) -> Result<C64> {
        let det = g.det(ctx);
        if det.is_zero() {
            return Err(Error::Domain("singular right translation".into()));
        }
        self.eval(ctx, &x.mul(ctx, g), &u.div(&det)?)
    }
}

/// Generators of the Weil action, in application order (first entry acts
/// first on the function).
#[derive(Clone, Debug)]
pub enum WeilGen {
    /// r'(1 β; 0 1): multiply by ψ_u(β det x)
    Upper(Fp),
    /// r'(ω): Fourier transform against ψ_u((x,y)), γ = +1
    Omega,
    /// r'(α 0; 0 α⁻¹): |α|² f(αx, u)
    DiagA(Fp),
    /// r'(1 0; 0 δ): |δ|⁻¹ f(x, δ⁻¹u)
    DiagD(Fp),
    /// r'(−1) : f(−x, u)
    MinusOne,
}

/// (1 0; n 1) = −ω·(1 −n; 0 1)·ω as a generator word.
pub fn lower_word(n: Fp) -> Vec<WeilGen> {
    vec![WeilGen::Omega, WeilGen::Upper(n.neg()), WeilGen::Omega, WeilGen::MinusOne]
}

/// Apply a generator word to f. ω-steps build their transform tables for
/// exactly the supplied u-samples; evaluating the result elsewhere errors.
pub fn weil_apply(
    ctx: &FieldContext,
    word: &[WeilGen],
    f: &SchwartzFunction,
    u_samples: &[Fp],
) -> Result<SchwartzFunction> {
    let mut terms = Vec::new();
    for op in &f.terms {
        terms.push(apply_word(ctx, word, clone_op(op), u_samples)?);
    }
    Ok(SchwartzFunction { terms })
}

fn clone_op(op: &BlockOp) -> BlockOp {
    match op {
        BlockOp::Base(b) => BlockOp::Base(b.clone()),
        BlockOp::PhaseDet { inner, beta } => {
            BlockOp::PhaseDet { inner: Box::new(clone_op(inner)), beta: beta.clone() }
        }
        BlockOp::Arg { inner, x_scale, u_scale, factor } => BlockOp::Arg {
            inner: Box::new(clone_op(inner)),
            x_scale: x_scale.clone(),
            u_scale: u_scale.clone(),
            factor: *factor,
        },
        BlockOp::Fourier { .. } => panic!("transform tables are not cloned; apply words to base blocks"),
    }
}

fn apply_word(
    ctx: &FieldContext,
    word: &[WeilGen],
    mut op: BlockOp,
    u_samples: &[Fp],
) -> Result<BlockOp> {
    for gen in word {
        op = match gen {
            WeilGen::Upper(beta) => BlockOp::PhaseDet { inner: Box::new(op), beta: beta.clone() },
            WeilGen::MinusOne => BlockOp::Arg {
                inner: Box::new(op),
                x_scale: ctx.from_int(-1),
                u_scale: ctx.one(),
                factor: C_ONE,
            },
            WeilGen::DiagA(alpha) => {
                let va = alpha.valuation().ok_or_else(|| Error::Domain("singular diag".into()))?;
                BlockOp::Arg {
                    inner: Box::new(op),
                    x_scale: alpha.clone(),
                    u_scale: ctx.one(),
                    factor: C64::new(ctx.q().powi(-2 * va as i32), 0.0),
                }
            }
            WeilGen::DiagD(delta) => {
                let vd = delta.valuation().ok_or_else(|| Error::Domain("singular diag".into()))?;
                BlockOp::Arg {
                    inner: Box::new(op),
                    x_scale: ctx.one(),
                    u_scale: delta.inv()?,
                    factor: C64::new(ctx.q().powi(vd as i32), 0.0),
                }
            }
            WeilGen::Omega => {
                let tables = build_fourier_tables(ctx, &op, u_samples)?;
                BlockOp::Fourier { inner: Box::new(op), tables }
            }
        };
    }
    Ok(op)
}

fn build_fourier_tables(
    ctx: &FieldContext,
    inner: &BlockOp,
    u_samples: &[Fp],
) -> Result<Vec<FourierTables>> {
    let mut out = Vec::new();
    for u in u_samples {
        let uv = u.valuation().ok_or_else(|| Error::Precision("u sample vanishes".into()))?;
        let bb = entry_bounds(ctx, inner, uv);
        let out14 = build_pair_table(ctx, inner, PairId::P14, (bb[0], bb[3]), uv, u, false)?;
        let out23 = build_pair_table(ctx, inner, PairId::P23, (bb[1], bb[2]), uv, u, true)?;
        out.push(FourierTables { u_key: u_key(u)?, out14, out23 });
    }
    Ok(out)
}

/// Transform one pair: T(x_a, x_b) = Σ_{y_a, y_b} inner(y_a, y_b) ψ(±u(x_a y_b + x_b y_a)) vol.
fn build_pair_table(
    ctx: &FieldContext,
    inner: &BlockOp,
    pair: PairId,
    (ba, bbnd): ((i64, i64), (i64, i64)),
    uv: i64,
    u: &Fp,
    conj: bool,
) -> Result<PairTable> {
    let (lo_a, lvl_a) = ba;
    let (lo_b, lvl_b) = bbnd;
    // output windows from the pairing x_a ↔ y_b, x_b ↔ y_a
    let out_lo = (-(uv + lvl_b), -(uv + lvl_a));
    let out_lvl = (-(uv + lo_b), -(uv + lo_a));
    let mut cells: HashMap<(u128, u128), C64> = HashMap::new();
    let in_cells_a = enumerate_cells(ctx, lo_a, lvl_a)?;
    let in_cells_b = enumerate_cells(ctx, lo_b, lvl_b)?;
    let out_cells_a = enumerate_cells(ctx, out_lo.0, out_lvl.0)?;
    let out_cells_b = enumerate_cells(ctx, out_lo.1, out_lvl.1)?;
    let vol = ctx.q().powi(-(lvl_a + lvl_b) as i32);
    // inner values on the input grid
    let mut grid: Vec<(Fp, Fp, C64)> = Vec::new();
    for ya in &in_cells_a {
        for yb in &in_cells_b {
            let v = pair_eval(ctx, inner, pair, ya, yb, u)?;
            if v != C_ZERO {
                grid.push((ya.clone(), yb.clone(), v));
            }
        }
    }
    for xa in &out_cells_a {
        for xb in &out_cells_b {
            let mut acc = C_ZERO;
            for (ya, yb, v) in &grid {
                let t = u.mul(&xa.mul(yb).add(&xb.mul(ya)));
                let k = if conj { t.psi()?.conj() } else { t.psi()? };
                acc += v * k;
            }
            let acc = acc * vol;
            if acc.norm() > 1e-300 {
                let ka = cell_key(ctx, xa, out_lo.0, out_lvl.0)?.expect("on grid");
                let kb = cell_key(ctx, xb, out_lo.1, out_lvl.1)?.expect("on grid");
                cells.insert((ka, kb), acc);
            }
        }
    }
    Ok(PairTable { lo: out_lo, level: out_lvl, cells })
}

/// Representatives of the cosets of ϖ^level·O inside ϖ^lo·O (the zero
/// element represents the deepest cell).
pub fn enumerate_cells(ctx: &FieldContext, lo: i64, level: i64) -> Result<Vec<Fp>> {
    if level < lo {
        return Err(Error::Domain("level below window".into()));
    }
    let digits = (level - lo) as u32;
    if digits as i64 + 2 > ctx.precision() as i64 {
        return Err(Error::Precision("cell enumeration too deep".into()));
    }
    let mut out = Vec::with_capacity(ctx.p_pow(digits) as usize);
    for r in 0..ctx.p_pow(digits) {
        if r == 0 {
            // the deepest cell ϖ^level·O, represented by exact zero
            out.push(ctx.zero());
        } else {
            out.push(ctx.pi_pow(lo).mul(&from_lift(ctx, r)));
        }
    }
    Ok(out)
}

fn from_lift(ctx: &FieldContext, r: u128) -> Fp {
    let p = ctx.p() as u128;
    let mut v = 0u32;
    let mut m = r;
    while m % p == 0 {
        m /= p;
        v += 1;
    }
    ctx.elt(v as i64, m)
}

/// The closed images of the transform lemmas.
#[derive(Clone, Copy, Debug)]
pub enum PredictedCase {
    /// K-invariant standard block: any k ∈ K fixes it
    StdK,
    /// char(O,O;ϖ^cO,O)×char(O^*) under r'(n(n_elt)), v(n_elt)=j, 0≤j≤c
    LevelK1 { c: u32 },
    /// char(b₁+ϖ^cO,O;b₂+ϖ^cO,O)×char(O^*) under r'(n(n_elt))
    Exotic { c: u32 },
}

/// The displayed image of r'((1 0; n 1)) f for the lemma cases.
pub fn predicted_image(
    ctx: &FieldContext,
    case: PredictedCase,
    n_elt: &Fp,
    b1: Option<&Fp>,
    b2: Option<&Fp>,
) -> Result<SchwartzFunction> {
    let q = ctx.q();
    match case {
        PredictedCase::StdK => Ok(SchwartzFunction::from_blocks(vec![Block::std_k(ctx)])),
        PredictedCase::LevelK1 { c } => {
            let j = n_elt
                .valuation()
                .ok_or_else(|| Error::Domain("n must be nonzero".into()))?;
            if j < 0 || j > c as i64 {
                return Err(Error::Domain("lemma needs 0 ≤ v(n) ≤ c".into()));
            }
            if j == c as i64 {
                return Ok(SchwartzFunction::from_blocks(vec![Block::level_k1(ctx, c)]));
            }
            let mut b = Block::std_k(ctx);
            b.scale = C64::new(q.powi((j - c as i64) as i32), 0.0);
            b.entries[1].level = j - c as i64;
            b.entries[2].level = j;
            b.phase = Some(Phase {
                n_inv: n_elt.inv()?,
                c14: false,
                c23: true,
                b: [ctx.zero(), ctx.zero(), ctx.zero(), ctx.zero()],
            });
            Ok(SchwartzFunction { terms: vec![BlockOp::Base(b)] })
        }
        PredictedCase::Exotic { c } => {
            let j = n_elt
                .valuation()
                .ok_or_else(|| Error::Domain("n must be nonzero".into()))?;
            if j < 0 || j > c as i64 {
                return Err(Error::Domain("lemma needs 0 ≤ v(n) ≤ c".into()));
            }
            let b1 = b1.ok_or_else(|| Error::Domain("b₁ required".into()))?.clone();
            let b2 = b2.ok_or_else(|| Error::Domain("b₂ required".into()))?.clone();
            if j == c as i64 {
                return Ok(SchwartzFunction::from_blocks(vec![Block::exotic(ctx, c, b1, b2)]));
            }
            let mut b = Block::std_k(ctx);
            b.scale = C64::new(q.powi(2 * (j - c as i64) as i32), 0.0);
            b.entries[0] = EntryCoset { center: b1.clone(), level: j };
            b.entries[1].level = j - c as i64;
            b.entries[2] = EntryCoset { center: b2.clone(), level: j };
            b.entries[3].level = j - c as i64;
            // ψ(u n⁻¹ [(x₁−b₁)x₄ − x₂(x₃−b₂)])
            b.phase = Some(Phase {
                n_inv: n_elt.inv()?,
                c14: true,
                c23: true,
                b: [b1, ctx.zero(), b2, ctx.zero()],
            });
            Ok(SchwartzFunction { terms: vec![BlockOp::Base(b)] })
        }
    }
}

/// Grid description for pointwise comparison.
pub struct EqGrid {
    /// per-entry (lo, level): cells of ϖ^level·O inside ϖ^lo·O
    pub entries: [(i64, i64); 4],
    /// per-entry translation: cells enumerate offset + (window cells)
    pub offsets: Option<[Fp; 4]>,
    pub u_samples: Vec<Fp>,
    /// full product if within budget, else this many deterministic samples
    pub max_points: usize,
}

/// Result of a pointwise comparison.
#[derive(Debug)]
pub struct EqReport {
    pub equal: bool,
    pub max_dev: f64,
    /// largest |value| of either side seen on the grid — a triviality guard
    pub max_val: f64,
    pub witness: Option<String>,
}

/// Pointwise comparison on the grid.
pub fn schwartz_equal(
    ctx: &FieldContext,
    f: &SchwartzFunction,
    g: &SchwartzFunction,
    tol: f64,
    grid: &EqGrid,
) -> Result<EqReport> {
    let mut cells: Vec<Vec<Fp>> = grid
        .entries
        .iter()
        .map(|&(lo, lvl)| enumerate_cells(ctx, lo, lvl))
        .collect::<Result<_>>()?;
    if let Some(offsets) = &grid.offsets {
        for (i, off) in offsets.iter().enumerate() {
            for c in cells[i].iter_mut() {
                *c = c.add(off);
            }
        }
    }
    let total: u128 = cells.iter().map(|c| c.len() as u128).product::<u128>()
        * grid.u_samples.len() as u128;
    let mut max_dev = 0.0f64;
    let mut max_val = 0.0f64;
    let mut witness = None;
    let mut check = |x: &Mat2<Fp>, u: &Fp| -> Result<()> {
        let a = f.eval(ctx, x, u)?;
        let b = g.eval(ctx, x, u)?;
        let d = (a - b).norm();
        max_val = max_val.max(a.norm()).max(b.norm());
        if d > max_dev {
            max_dev = d;
            witness = Some(format!(
                "x = [{:?}, {:?}; {:?}, {:?}], v(u) = {:?}",
                x.e[0].valuation(),
                x.e[1].valuation(),
                x.e[2].valuation(),
                x.e[3].valuation(),
                u.valuation()
            ));
        }
        Ok(())
    };
    if total <= grid.max_points as u128 {
        for u in &grid.u_samples {
            for e0 in &cells[0] {
                for e1 in &cells[1] {
                    for e2 in &cells[2] {
                        for e3 in &cells[3] {
                            let x = Mat2::new(e0.clone(), e1.clone(), e2.clone(), e3.clone());
                            check(&x, u)?;
                        }
                    }
                }
            }
        }
    } else {
        // deterministic LCG sample over the product grid
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = |n: usize| -> usize {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as usize) % n
        };
        for _ in 0..grid.max_points {
            let u = &grid.u_samples[next(grid.u_samples.len())];
            let x = Mat2::new(
                cells[0][next(cells[0].len())].clone(),
                cells[1][next(cells[1].len())].clone(),
                cells[2][next(cells[2].len())].clone(),
                cells[3][next(cells[3].len())].clone(),
            );
            check(&x, u)?;
        }
    }
    Ok(EqReport { equal: max_dev < tol, max_dev, max_val, witness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::ExtKind;

    fn ctx3() -> FieldContext {
        FieldContext::new(3, 26, ExtKind::Split, 4).unwrap()
    }

    fn u_samples(ctx: &FieldContext, level: u32) -> Vec<Fp> {
        ctx.enumerate_residues(level)
            .unwrap()
            .into_iter()
            .take(4)
            .map(|r| ctx.elt(0, r))
            .collect()
    }

    /// ∫_{ϖ^k O} ψ(x y) dy = q^{−k} char(ϖ^{−k}O)(x), by direct summation.
    #[test]
    fn weilveccal1_by_direct_summation() {
        let ctx = ctx3();
        let q = ctx.q();
        for k in -2i64..=2 {
            for xv in -4i64..=4 {
                let x = ctx.elt(xv, 2);
                // refine y to constancy: level = max(k, −v(x)) + 1
                let lvl = (-xv).max(k) + 1;
                let cells = enumerate_cells(&ctx, k, lvl).unwrap();
                let mut acc = C_ZERO;
                for y in &cells {
                    acc += x.mul(y).psi().unwrap() * q.powi(-lvl as i32);
                }
                let expected = if xv >= -k {
                    C64::new(q.powi(-k as i32), 0.0)
                } else {
                    C_ZERO
                };
                assert!(
                    (acc - expected).norm() < 1e-10,
                    "k={k} v(x)={xv}: {acc} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn omega_fixes_standard_block() {
        let ctx = ctx3();
        let us = u_samples(&ctx, 2);
        let f = SchwartzFunction::from_blocks(vec![Block::std_k(&ctx)]);
        let tf = weil_apply(&ctx, &[WeilGen::Omega], &f, &us).unwrap();
        let grid = EqGrid { entries: [(-1, 2); 4], offsets: None, u_samples: us, max_points: 3000 };
        let r = schwartz_equal(&ctx, &tf, &f, 1e-9, &grid).unwrap();
        assert!(r.equal && r.max_val > 0.5, "{r:?}");
    }

    #[test]
    fn omega_squared_acts_as_minus_one() {
        let ctx = ctx3();
        let us = u_samples(&ctx, 2);
        // a non-symmetric test block
        let mut blk = Block::std_k(&ctx);
        blk.entries[1].level = -1;
        blk.entries[2].level = 1;
        blk.entries[0] = EntryCoset { center: ctx.from_int(1), level: 1 };
        let f = SchwartzFunction::from_blocks(vec![blk]);
        let ww = weil_apply(&ctx, &[WeilGen::Omega, WeilGen::Omega], &f, &us).unwrap();
        let minus = weil_apply(&ctx, &[WeilGen::MinusOne], &f, &us).unwrap();
        // grid matched to the support so the comparison is dense on it,
        // plus a margin to verify vanishing just outside
        let grid = EqGrid { entries: [(0, 2), (-1, 2), (1, 3), (0, 2)], offsets: None, u_samples: us, max_points: 200_000 };
        let r = schwartz_equal(&ctx, &ww, &minus, 1e-9, &grid).unwrap();
        assert!(r.equal && r.max_val > 0.5, "{r:?}");
    }

    #[test]
    fn lower_unipotent_matches_level_k1_image() {
        let ctx = ctx3();
        for c in [1u32, 2] {
            let us = u_samples(&ctx, c + 1);
            let f = SchwartzFunction::from_blocks(vec![Block::level_k1(&ctx, c)]);
            for j in 0..=c {
                let n = ctx.pi_pow(j as i64);
                let tf = weil_apply(&ctx, &lower_word(n.clone()), &f, &us).unwrap();
                let img = predicted_image(&ctx, PredictedCase::LevelK1 { c }, &n, None, None).unwrap();
                let span = c as i64 + 1;
                let grid = EqGrid {
                    entries: [
                        (-1, span),
                        (j as i64 - c as i64 - 1, span),
                        (-1, span + 1),
                        (-1, span),
                    ],
                    offsets: None,
                    u_samples: us.clone(),
                    max_points: 2500,
                };
                let r = schwartz_equal(&ctx, &tf, &img, 1e-9, &grid).unwrap();
                assert!(r.equal && r.max_val > 1e-3, "c={c} j={j}: {r:?}");
            }
        }
    }

    #[test]
    fn lower_unipotent_matches_exotic_image() {
        let ctx = ctx3();
        for c in [1u32, 2] {
            let us = u_samples(&ctx, c + 1);
            for (b1v, b2v) in [(0i64, 0i64), (1, 2), (2, 0)] {
                let b1 = ctx.from_int(b1v);
                let b2 = ctx.from_int(b2v);
                let f = SchwartzFunction::from_blocks(vec![Block::exotic(&ctx, c, b1.clone(), b2.clone())]);
                for j in 0..=c {
                    let n = ctx.pi_pow(j as i64);
                    let tf = weil_apply(&ctx, &lower_word(n.clone()), &f, &us).unwrap();
                    let img =
                        predicted_image(&ctx, PredictedCase::Exotic { c }, &n, Some(&b1), Some(&b2))
                            .unwrap();
                    // x₁, x₃ concentrate on b + ϖ^j O; sample around those
                    // cosets with one shell of margin
                    let span = c as i64 + 1;
                    let grid = EqGrid {
                        entries: [
                            (j as i64 - 1, span),
                            (j as i64 - c as i64 - 1, span),
                            (j as i64 - 1, span),
                            (j as i64 - c as i64 - 1, span),
                        ],
                        offsets: Some([b1.clone(), ctx.zero(), b2.clone(), ctx.zero()]),
                        u_samples: us.clone(),
                        max_points: 6000,
                    };
                    let r = schwartz_equal(&ctx, &tf, &img, 1e-9, &grid).unwrap();
                    assert!(r.equal && r.max_val > 1e-4, "c={c} j={j} b=({b1v},{b2v}): {r:?}");
                }
            }
        }
    }

    #[test]
    fn right_invariance_levels() {
        let ctx = ctx3();
        let u = ctx.elt(0, 2);
        // level-c₂ right invariance of the mixed-level block
        for (c1, c2) in [(1u32, 1u32), (1, 2), (2, 1)] {
            for jj in [0i64, 1] {
                let mut blk = Block::std_k(&ctx);
                blk.entries[0].level = -jj;
                blk.entries[1].level = -jj - c2 as i64;
                blk.entries[2].level = jj + (c1 + c2) as i64;
                blk.entries[3].level = jj + c1 as i64;
                let f = SchwartzFunction::from_blocks(vec![blk]);
                // right action by generators of K₁(ϖ^{c₂})
                let gens: Vec<Mat2<Fp>> = vec![
                    Mat2::upper(&ctx, ctx.from_int(1)),
                    Mat2::lower(&ctx, ctx.pi_pow(c2 as i64)),
                    Mat2::diag(&ctx, ctx.from_int(2), ctx.one()),
                    Mat2::new(ctx.from_int(2), ctx.from_int(1), ctx.pi_pow(c2 as i64), ctx.one()),
                ];
                for g in &gens {
                    if g.det(&ctx).is_zero() {
                        continue;
                    }
                    for x0 in [-1i64, 0, 1] {
                        for x2 in [-2i64, 0] {
                            let x = Mat2::new(
                                ctx.elt(x0 - jj, 1),
                                ctx.elt(x2 - jj, 2),
                                ctx.elt(jj + (c1 + c2) as i64, 1),
                                ctx.elt(jj + c1 as i64, 2),
                            );
                            let a = f.right_translate_eval(&ctx, g, &x, &u).unwrap();
                            let b = f.eval(&ctx, &x, &u).unwrap();
                            assert!(
                                (a - b).norm() < 1e-9,
                                "right K₁(ϖ^{c2}) invariance, c1={c1} j={jj}"
                            );
                        }
                    }
                }
                // Weil invariance under K₁(ϖ^{c₁}): generators B(O) and n(ϖ^{c₁})
                let us = vec![u.clone()];
                let w = weil_apply(&ctx, &lower_word(ctx.pi_pow(c1 as i64)), &f, &us).unwrap();
                let grid = EqGrid {
                    entries: [
                        (-jj - 1, -jj + 2),
                        (-jj - c2 as i64 - 1, -jj + 2),
                        (jj + (c1 + c2) as i64 - 1, jj + (c1 + c2) as i64 + 2),
                        (jj + c1 as i64 - 1, jj + c1 as i64 + 2),
                    ],
                    offsets: None,
                    u_samples: us,
                    max_points: 1500,
                };
                let r = schwartz_equal(&ctx, &w, &f, 1e-9, &grid).unwrap();
                assert!(r.equal && r.max_val > 0.5, "Weil K₁(ϖ^{c1}) invariance c2={c2} j={jj}: {r:?}");
            }
        }
    }

    #[test]
    fn k1_invariance_of_lemma_functions_under_right_action() {
        let ctx = ctx3();
        let u = ctx.elt(0, 1);
        let c = 2u32;
        let f = SchwartzFunction::from_blocks(vec![Block::level_k1(&ctx, c)]);
        // k ∈ K₁(ϖ^c)
        let k = Mat2::new(ctx.from_int(2), ctx.from_int(5), ctx.pi_pow(2).mul(&ctx.from_int(2)), ctx.from_int(10));
        assert_eq!(k.e[3].sub(&ctx.one()).valuation(), Some(2));
        for x0 in 0..=1i64 {
            let x = Mat2::new(ctx.elt(x0, 1), ctx.elt(0, 2), ctx.elt(2, 1), ctx.elt(0, 1));
            let a = f.right_translate_eval(&ctx, &k, &x, &u).unwrap();
            let b = f.eval(&ctx, &x, &u).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
        // identity translation is a no-op on the exotic block too
        let fe = SchwartzFunction::from_blocks(vec![Block::exotic(&ctx, c, ctx.from_int(1), ctx.from_int(2))]);
        let id = Mat2::identity(&ctx);
        let x = Mat2::new(ctx.elt(0, 1), ctx.elt(0, 2), ctx.elt(0, 2), ctx.elt(0, 1));
        assert!(
            (fe.right_translate_eval(&ctx, &id, &x, &u).unwrap() - fe.eval(&ctx, &x, &u).unwrap()).norm()
                < 1e-12
        );
        // K₁¹(ϖ^c) fixes the exotic block on the right
        let k11 = Mat2::new(
            ctx.one().add(&ctx.pi_pow(2)),
            ctx.from_int(7),
            ctx.pi_pow(2),
            ctx.one().add(&ctx.pi_pow(2).mul(&ctx.from_int(2))),
        );
        let a = fe.right_translate_eval(&ctx, &k11, &x, &u).unwrap();
        let b = fe.eval(&ctx, &x, &u).unwrap();
        assert!((a - b).norm() < 1e-12);
    }
}
