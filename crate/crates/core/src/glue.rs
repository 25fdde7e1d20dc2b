//! Cut-and-glue audit along a vertical line.
//!
//! Given a partition with first eigenpairs, the parts are classified against
//! the strip `S_δ = {|x − γ| < δ/2}` around `Γ = {x = γ}`:
//! `A` parts avoid `D₂′ = {x ≥ γ + δ/2}`, `B` parts avoid `D₁′ = {x ≤ γ − δ/2}`,
//! and `C` parts meet both. Each `C` part gets a half-mass window inside the
//! strip, a cut-off `ξ` vanishing on one column of that window, and a Rayleigh
//! test on `ξu`. Parts failing the test form `D` and are dropped; the rest are
//! cut along the zero column and the cheaper side is kept. The final report
//! evaluates the resulting energy inequalities on the discrete quantities.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{dirichlet_energy, l2_norm_sq, rayleigh_quotient, EigenResult};
use crate::grid::{GridDomain, SubdomainMask};
use crate::partition::{Partition, SegregatedField};
use crate::{Error, Result, BESSEL_J0_FIRST_ZERO};

/// Relative slack allowed when comparing floating sums in the chain.
pub const CHAIN_RTOL: f64 = 1e-12;
/// Minimum number of grid columns in the strip and in each half window.
pub const MIN_STRIP_COLUMNS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StripConfig {
    /// Position of the line `Γ = {x = gamma_x}`.
    pub gamma_x: f64,
    pub delta: f64,
    pub epsilon: f64,
}

impl Default for StripConfig {
    fn default() -> Self {
        Self { gamma_x: 0.5, delta: 0.1, epsilon: 0.2 }
    }
}

impl StripConfig {
    /// Eigenvalue bound `640/(εδ²)` for parts failing the Rayleigh test.
    pub fn c1(&self) -> f64 {
        640.0 / (self.epsilon * self.delta * self.delta)
    }

    /// `(1 − ε/4)(1 − ε/5)/(1 + ε/5)`.
    pub fn final_factor(&self) -> f64 {
        let e = self.epsilon;
        (1.0 - e / 4.0) * (1.0 - e / 5.0) / (1.0 + e / 5.0)
    }

    /// Smallest area a part obeying `λ₁ ≤ C₁` can have (Faber–Krahn).
    pub fn min_dropped_area(&self) -> f64 {
        PI * BESSEL_J0_FIRST_ZERO * BESSEL_J0_FIRST_ZERO / self.c1()
    }

    fn check_params(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if !self.gamma_x.is_finite() {
            return Err(Error::InvalidArgument("gamma_x must be finite".into()));
        }
        Ok(())
    }

    /// Checks the parameters against a grid: `Γ` on a column face, inside
    /// cells on both sides, and at least four columns in the strip.
    pub fn validate(&self, domain: &GridDomain) -> Result<()> {
        self.check_params()?;
        let g = self.gamma_x / domain.h();
        if (g - g.round()).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "gamma_x = {} does not lie on a column face of the grid",
                self.gamma_x
            )));
        }
        let (n1, n2) = side_counts(domain, self.gamma_x);
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "gamma_x = {} does not split the domain",
                self.gamma_x
            )));
        }
        let cols = (0..domain.nx()).filter(|&i| (domain.col_x(i) - self.gamma_x).abs() < self.delta / 2.0).count();
        if cols < MIN_STRIP_COLUMNS {
            return Err(Error::TooCoarse {
                resolution: domain.resolution(),
                reason: format!("strip of width {} covers {cols} columns", self.delta),
            });
        }
        Ok(())
    }

    fn in_d1_prime(&self, x: f64) -> bool {
        x < self.gamma_x && (x - self.gamma_x).abs() >= self.delta / 2.0
    }

    fn in_d2_prime(&self, x: f64) -> bool {
        x > self.gamma_x && (x - self.gamma_x).abs() >= self.delta / 2.0
    }
}

/// Inside cells left and right of `x = gamma`.
fn side_counts(domain: &GridDomain, gamma: f64) -> (usize, usize) {
    let n1 = domain.inside_indices().filter(|&k| domain.center(k).0 < gamma).count();
    (n1, domain.inside_count() - n1)
}

#[derive(Debug, Clone)]
pub struct OffsetChoice {
    /// Chosen `r ∈ [−δ/2, 0]`; the window is `(γ + r, γ + r + δ/2)`.
    pub offset: f64,
    /// `∫ u²` over the part inside the window.
    pub window_mass: f64,
    /// `∫ u²` over the whole part.
    pub total_mass: f64,
    /// Whether one of the two endpoint candidates satisfies the half-mass bound.
    pub endpoint_ok: bool,
    pub candidates: usize,
}

impl OffsetChoice {
    pub fn satisfied(&self) -> bool {
        self.window_mass <= 0.5 * self.total_mass
    }
}

/// Candidate offsets: `−δ/2` upward in steps of `h`, then `0`.
pub fn offset_candidates(h: f64, delta: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let r = -delta / 2.0 + k as f64 * h;
        if r >= -1e-12 * h {
            break;
        }
        out.push(r);
        k += 1;
    }
    out.push(0.0);
    out
}

fn column_masses(domain: &GridDomain, u: &[f64], mask: &SubdomainMask) -> Vec<f64> {
    let mut col = vec![0.0; domain.nx()];
    for k in mask.indices() {
        col[k % domain.nx()] += u[k] * u[k];
    }
    let a = domain.cell_area();
    col.iter_mut().for_each(|c| *c *= a);
    col
}

fn window_mass(domain: &GridDomain, col: &[f64], lo: f64, hi: f64) -> f64 {
    (0..domain.nx())
        .filter(|&i| {
            let x = domain.col_x(i);
            lo < x && x < hi
        })
        .map(|i| col[i])
        .sum()
}

/// Lowest candidate offset whose half window carries at most half of `∫ u²`
/// over the part.
pub fn select_half_mass_offset(
    domain: &GridDomain,
    u: &[f64],
    mask: &SubdomainMask,
    cfg: &StripConfig,
) -> Result<OffsetChoice> {
    if u.len() != domain.len() {
        return Err(Error::InvalidArgument("function length does not match the grid".into()));
    }
    if mask.parent() != domain.id() {
        return Err(Error::DomainMismatch);
    }
    let col = column_masses(domain, u, mask);
    let total: f64 = col.iter().sum();
    let half = cfg.delta / 2.0;
    let mass_at = |r: f64| window_mass(domain, &col, cfg.gamma_x + r, cfg.gamma_x + r + half);
    let cands = offset_candidates(domain.h(), cfg.delta);
    let endpoint_ok = mass_at(-half) <= 0.5 * total || mass_at(0.0) <= 0.5 * total;
    let mut best: Option<(f64, f64)> = None;
    for &r in &cands {
        let w = mass_at(r);
        if w <= 0.5 * total {
            best = Some((r, w));
            break;
        }
        if best.map_or(true, |(_, bw)| w < bw) {
            best = Some((r, w));
        }
    }
    let (offset, window_mass) = best.expect("candidate list is never empty");
    Ok(OffsetChoice { offset, window_mass, total_mass: total, endpoint_ok, candidates: cands.len() })
}

/// Piecewise-linear cut-off depending on `x` only.
#[derive(Debug, Clone, PartialEq)]
pub struct Cutoff {
    offset: f64,
    cut_column: usize,
    /// One value per grid column.
    values: Vec<f64>,
    h: f64,
}

impl Cutoff {
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Column where `ξ = 0`.
    pub fn cut_column(&self) -> usize {
        self.cut_column
    }

    pub fn column_values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx % self.values.len()]
    }

    /// Largest difference quotient between adjacent columns.
    pub fn max_slope(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs() / self.h).fold(0.0, f64::max)
    }

    /// `ξ f` on `mask`, zero elsewhere.
    pub fn apply(&self, f: &[f64], mask: &SubdomainMask) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        for k in mask.indices() {
            out[k] = self.value(k) * f[k];
        }
        out
    }
}

/// Builds `ξ` for the window `(γ + r, γ + r + δ/2)`: zero on the column
/// nearest `γ + r + δ/4`, rising linearly to 1 at both window edges, 1 outside.
pub fn build_cutoff(domain: &GridDomain, r: f64, cfg: &StripConfig) -> Result<Cutoff> {
    cfg.check_params()?;
    let half = cfg.delta / 2.0;
    if !(r >= -half - 1e-12 && r <= 1e-12) {
        return Err(Error::InvalidArgument(format!("offset {r} outside [−δ/2, 0]")));
    }
    let lo = cfg.gamma_x + r;
    let hi = lo + half;
    let mid = lo + half / 2.0;
    let nx = domain.nx();
    let cols = (0..nx).filter(|&i| lo < domain.col_x(i) && domain.col_x(i) < hi).count();
    if cols < MIN_STRIP_COLUMNS {
        return Err(Error::TooCoarse {
            resolution: domain.resolution(),
            reason: format!("half strip of width {half} covers {cols} columns"),
        });
    }
    let mut cut = 0;
    for i in 1..nx {
        if (domain.col_x(i) - mid).abs() < (domain.col_x(cut) - mid).abs() {
            cut = i;
        }
    }
    let xc = domain.col_x(cut);
    let (left, right) = (xc - lo, hi - xc);
    let values = (0..nx)
        .map(|i| {
            let x = domain.col_x(i);
            if x <= xc {
                ((xc - x) / left).min(1.0)
            } else {
                ((x - xc) / right).min(1.0)
            }
        })
        .collect();
    Ok(Cutoff { offset: r, cut_column: cut, values, h: domain.h() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClaimCheck {
    /// Rayleigh quotient of `ξu` on the part.
    pub ratio: f64,
    /// `(1 + ε/5) λ₁`.
    pub threshold: f64,
    pub triggered: bool,
    /// `λ₁ ≤ C₁`; vacuously true when not triggered.
    pub bound_ok: bool,
}

/// Rayleigh test of `ξu` against `(1 + ε/5) λ₁`.
pub fn check_claim(
    domain: &GridDomain,
    mask: &SubdomainMask,
    u: &[f64],
    cutoff: &Cutoff,
    lambda1: f64,
    cfg: &StripConfig,
) -> Result<ClaimCheck> {
    let xu = cutoff.apply(u, mask);
    let ratio = rayleigh_quotient(domain, &xu, mask)?;
    let threshold = (1.0 + cfg.epsilon / 5.0) * lambda1;
    let triggered = ratio >= threshold;
    Ok(ClaimCheck { ratio, threshold, triggered, bound_ok: !triggered || lambda1 <= cfg.c1() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartClass {
    A,
    B,
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Cells at or left of the cut column.
    One,
    /// Cells at or right of the cut column.
    Two,
}

/// Audit of one straddling part.
#[derive(Debug, Clone)]
pub struct StraddleAudit {
    pub offset: OffsetChoice,
    pub cutoff: Cutoff,
    pub claim: ClaimCheck,
    /// `∞` when `ξu` has no mass on that side.
    pub tau1: f64,
    pub tau2: f64,
    /// `ξu` is zero on every part cell of the cut column.
    pub cut_vanishes: bool,
    /// Kept side; `None` for parts in `D`.
    pub side: Option<Side>,
}

#[derive(Debug, Clone)]
pub struct PartAudit {
    pub label: usize,
    pub class: PartClass,
    pub lambda1: f64,
    pub straddle: Option<StraddleAudit>,
}

impl PartAudit {
    pub fn in_d(&self) -> bool {
        self.straddle.as_ref().is_some_and(|s| s.side.is_none())
    }

    pub fn assignment(&self) -> &'static str {
        match (self.class, &self.straddle) {
            (PartClass::A, _) => "v",
            (PartClass::B, _) => "w",
            (PartClass::C, Some(StraddleAudit { side: Some(Side::One), .. })) => "v_cut",
            (PartClass::C, Some(StraddleAudit { side: Some(Side::Two), .. })) => "w_cut",
            (PartClass::C, _) => "dropped",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub cfg: StripConfig,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub c: Vec<usize>,
    /// Parts of `C` failing the Rayleigh test.
    pub d: Vec<usize>,
    /// Parts of `C∖D` keeping their left piece.
    pub e: Vec<usize>,
    /// Parts of `C∖D` keeping their right piece.
    pub f: Vec<usize>,
    /// Per-part details indexed by label.
    pub parts: Vec<PartAudit>,
    /// Inside cells left and right of `Γ`.
    pub side_cells: (usize, usize),
}

impl Classification {
    /// `|D₁| / |Ω|`.
    pub fn alpha(&self) -> f64 {
        let (n1, n2) = self.side_cells;
        n1 as f64 / (n1 + n2) as f64
    }
}

fn side_mask(domain: &GridDomain, mask: &SubdomainMask, cut: usize, side: Side) -> SubdomainMask {
    let nx = domain.nx();
    let cells = mask
        .cells()
        .iter()
        .enumerate()
        .map(|(k, &b)| {
            b && match side {
                Side::One => k % nx <= cut,
                Side::Two => k % nx >= cut,
            }
        })
        .collect();
    SubdomainMask::from_cells_unchecked(domain, cells)
}

fn one_sided_quotient(domain: &GridDomain, f: &[f64], mask: &SubdomainMask) -> f64 {
    if l2_norm_sq(domain, f, mask) == 0.0 {
        f64::INFINITY
    } else {
        dirichlet_energy(domain, f, mask) / l2_norm_sq(domain, f, mask)
    }
}

fn audit_straddle(
    domain: &GridDomain,
    mask: &SubdomainMask,
    eig: &EigenResult,
    cfg: &StripConfig,
) -> Result<StraddleAudit> {
    let offset = select_half_mass_offset(domain, &eig.eigfn, mask, cfg)?;
    let cutoff = build_cutoff(domain, offset.offset, cfg)?;
    let claim = check_claim(domain, mask, &eig.eigfn, &cutoff, eig.lambda1, cfg)?;
    let xu = cutoff.apply(&eig.eigfn, mask);
    let cut = cutoff.cut_column();
    let tau1 = one_sided_quotient(domain, &xu, &side_mask(domain, mask, cut, Side::One));
    let tau2 = one_sided_quotient(domain, &xu, &side_mask(domain, mask, cut, Side::Two));
    let cut_vanishes = mask.indices().filter(|k| k % domain.nx() == cut).all(|k| xu[k] == 0.0);
    let side = if claim.triggered {
        None
    } else if tau1 <= tau2 {
        Some(Side::One)
    } else {
        Some(Side::Two)
    };
    Ok(StraddleAudit { offset, cutoff, claim, tau1, tau2, cut_vanishes, side })
}

/// Sorts the parts into `A`, `B`, `C` by exact intersection with `D₁′` and
/// `D₂′`, then runs the offset, cut-off and Rayleigh test on every `C` part.
/// A part meeting neither `D₁′` nor `D₂′` is placed in `A`.
pub fn classify_subdomains(
    domain: &GridDomain,
    partition: &Partition,
    cfg: &StripConfig,
    eigs: &[EigenResult],
) -> Result<Classification> {
    partition.check_domain(domain)?;
    cfg.validate(domain)?;
    let m = partition.m();
    if eigs.len() != m {
        return Err(Error::InvalidArgument(format!("{} eigenpairs supplied for {m} parts", eigs.len())));
    }
    let mut meets = vec![(false, false); m];
    for k in domain.inside_indices() {
        let Some(l) = partition.label(k) else { continue };
        let x = domain.center(k).0;
        meets[l].0 |= cfg.in_d1_prime(x);
        meets[l].1 |= cfg.in_d2_prime(x);
    }
    let parts: Vec<PartAudit> = (0..m)
        .into_par_iter()
        .map(|l| {
            let class = match meets[l] {
                (true, true) => PartClass::C,
                (false, true) => PartClass::B,
                _ => PartClass::A,
            };
            let straddle = if class == PartClass::C {
                let mask = partition.mask(domain, l)?;
                Some(audit_straddle(domain, &mask, &eigs[l], cfg)?)
            } else {
                None
            };
            Ok(PartAudit { label: l, class, lambda1: eigs[l].lambda1, straddle })
        })
        .collect::<Result<_>>()?;
    let pick = |f: &dyn Fn(&PartAudit) -> bool| parts.iter().filter(|p| f(p)).map(|p| p.label).collect::<Vec<_>>();
    let side_of = |p: &PartAudit| p.straddle.as_ref().and_then(|s| s.side);
    Ok(Classification {
        cfg: *cfg,
        a: pick(&|p| p.class == PartClass::A),
        b: pick(&|p| p.class == PartClass::B),
        c: pick(&|p| p.class == PartClass::C),
        d: pick(&|p| p.in_d()),
        e: pick(&|p| side_of(p) == Some(Side::One)),
        f: pick(&|p| side_of(p) == Some(Side::Two)),
        side_cells: side_counts(domain, cfg.gamma_x),
        parts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PieceSource {
    /// The eigenfunction of a part in `A` or `B`.
    Whole,
    /// The normalized `ξu` on one side of a cut part.
    Cut(Side),
}

#[derive(Debug, Clone)]
pub struct Piece {
    pub label: usize,
    pub source: PieceSource,
    /// Discrete `∫|∇·|²` of the component over its piece.
    pub energy: f64,
    /// Discrete `∫ ·²`; 1 up to rounding.
    pub mass: f64,
}

#[derive(Debug, Clone)]
pub struct Split {
    /// Components supported left of `D₂′`; `None` when `m1 = 0`.
    pub v: Option<SegregatedField>,
    /// Components supported right of `D₁′`; `None` when `m2 = 0`.
    pub w: Option<SegregatedField>,
    pub v_pieces: Vec<Piece>,
    pub w_pieces: Vec<Piece>,
    pub m1: usize,
    pub m2: usize,
    /// `supp v ∩ D₂′ = ∅` and `supp w ∩ D₁′ = ∅`, checked per cell.
    pub support_ok: bool,
}

/// Builds `v` from `A` and the left pieces of `E`, and `w` from `B` and the
/// right pieces of `F`, ordered by label.
pub fn split_and_assign(
    domain: &GridDomain,
    partition: &Partition,
    eigs: &[EigenResult],
    cls: &Classification,
) -> Result<Split> {
    partition.check_domain(domain)?;
    if eigs.len() != partition.m() || cls.parts.len() != partition.m() {
        return Err(Error::InvalidArgument("classification does not match the partition".into()));
    }
    let built: Vec<Option<(bool, Vec<f64>, Piece)>> = cls
        .parts
        .par_iter()
        .map(|p| {
            let mask = partition.mask(domain, p.label)?;
            let u = &eigs[p.label].eigfn;
            let (to_v, f, piece_mask, source) = match (&p.class, &p.straddle) {
                (PartClass::A, _) => (true, u.clone(), mask, PieceSource::Whole),
                (PartClass::B, _) => (false, u.clone(), mask, PieceSource::Whole),
                (PartClass::C, Some(s)) => {
                    let Some(side) = s.side else { return Ok(None) };
                    let sm = side_mask(domain, &mask, s.cutoff.cut_column(), side);
                    let mut f = s.cutoff.apply(u, &sm);
                    let mass = l2_norm_sq(domain, &f, &sm);
                    if mass == 0.0 {
                        return Err(Error::Discretization(format!(
                            "part {} keeps a cut side with no mass",
                            p.label
                        )));
                    }
                    let s = mass.sqrt();
                    f.iter_mut().for_each(|x| *x /= s);
                    (side == Side::One, f, sm, PieceSource::Cut(side))
                }
                (PartClass::C, None) => {
                    return Err(Error::InvalidArgument(format!("part {} lacks its straddle audit", p.label)))
                }
            };
            let piece = Piece {
                label: p.label,
                source,
                energy: dirichlet_energy(domain, &f, &piece_mask),
                mass: l2_norm_sq(domain, &f, &piece_mask),
            };
            Ok(Some((to_v, f, piece)))
        })
        .collect::<Result<_>>()?;
    let (mut vc, mut wc, mut vp, mut wp) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (to_v, f, piece) in built.into_iter().flatten() {
        if to_v {
            vc.push(f);
            vp.push(piece);
        } else {
            wc.push(f);
            wp.push(piece);
        }
    }
    let cfg = &cls.cfg;
    let mut support_ok = true;
    for k in domain.inside_indices() {
        let x = domain.center(k).0;
        if cfg.in_d2_prime(x) && vc.iter().any(|c| c[k] != 0.0) {
            support_ok = false;
        }
        if cfg.in_d1_prime(x) && wc.iter().any(|c| c[k] != 0.0) {
            support_ok = false;
        }
    }
    let (m1, m2) = (vc.len(), wc.len());
    let field = |c: Vec<Vec<f64>>| if c.is_empty() { Ok(None) } else { SegregatedField::new(c).map(Some) };
    Ok(Split { v: field(vc)?, w: field(wc)?, v_pieces: vp, w_pieces: wp, m1, m2, support_ok })
}

/// Exact integer form of `m₁²/α + m₂²/(1 − α) ≥ (m₁ + m₂)²` with `α = n1/(n1 + n2)`.
pub fn convexity_holds(m1: u64, m2: u64, n1: u64, n2: u64) -> bool {
    let (m1, m2, n1, n2) = (m1 as u128, m2 as u128, n1 as u128, n2 as u128);
    (n1 + n2) * (m1 * m1 * n2 + m2 * m2 * n1) >= (m1 + m2) * (m1 + m2) * n1 * n2
}

fn geq(a: f64, b: f64) -> bool {
    a >= b - CHAIN_RTOL * a.abs().max(b.abs())
}

#[derive(Debug, Clone)]
pub struct ChainRow {
    pub label: usize,
    pub class: PartClass,
    pub lambda1: f64,
    pub offset: Option<f64>,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
    pub assignment: &'static str,
}

/// Every quantity of the cut-and-glue chain, evaluated on the grid.
#[derive(Debug, Clone)]
pub struct ChainReport {
    pub cfg: StripConfig,
    pub m: usize,
    pub count_a: usize,
    pub count_b: usize,
    pub count_c: usize,
    pub count_d: usize,
    pub count_e: usize,
    pub count_f: usize,
    pub m1: usize,
    pub m2: usize,
    pub alpha: f64,
    /// `Σ_j ∫|∇u_j|² / m²` over all parts.
    pub lhs: f64,
    /// Same sum restricted to `A ∪ B ∪ (C∖D)`.
    pub kept: f64,
    /// `A` and `B` energies plus cut-piece energies divided by `1 + ε/5`, over `m²`.
    pub after_cut: f64,
    /// All piece energies of `v` and `w` over `m²(1 + ε/5)`.
    pub mid: f64,
    pub drop_step_ok: bool,
    pub cut_step_ok: bool,
    pub mid_step_ok: bool,
    pub mid_holds: bool,
    pub convexity_ok: bool,
    pub final_factor: f64,
    pub factor_ok: bool,
    pub c1: f64,
    pub max_triggered_lambda: Option<f64>,
    pub claims_ok: bool,
    pub d_count_bound: usize,
    pub d_count_ok: bool,
    pub counts_ok: bool,
    pub support_ok: bool,
    pub endpoint_ok: bool,
    pub half_mass_ok: bool,
    pub max_cutoff_slope: f64,
    pub slope_ok: bool,
    pub cut_vanishes: bool,
    /// `min(α E_v / m₁², (1 − α) E_w / m₂²)`, informational.
    pub c_star: Option<f64>,
    /// `((m − #D)/m)² ≥ 1 − ε/5`, informational.
    pub count_condition: bool,
    /// `mid_holds ∧ convexity_ok ∧ factor_ok`.
    pub chain_holds: bool,
    pub rows: Vec<ChainRow>,
}

/// Evaluates the energy chain and every side condition of the audit.
pub fn energy_chain_check(
    domain: &GridDomain,
    partition: &Partition,
    eigs: &[EigenResult],
    cls: &Classification,
    split: &Split,
) -> Result<ChainReport> {
    let cfg = cls.cfg;
    let m = partition.m();
    let mm = (m * m) as f64;
    let grow = 1.0 + cfg.epsilon / 5.0;
    let energies: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|l| Ok(dirichlet_energy(domain, &eigs[l].eigfn, &partition.mask(domain, l)?)))
        .collect::<Result<_>>()?;
    let lhs = energies.iter().sum::<f64>() / mm;
    let kept = cls.parts.iter().filter(|p| !p.in_d()).map(|p| energies[p.label]).sum::<f64>() / mm;
    let pieces = split.v_pieces.iter().chain(&split.w_pieces);
    let mut after_cut = 0.0;
    let mut piece_sum = 0.0;
    for p in pieces.clone() {
        after_cut += match p.source {
            PieceSource::Whole => energies[p.label],
            PieceSource::Cut(_) => p.energy / grow,
        };
        piece_sum += p.energy;
    }
    after_cut /= mm;
    let mid = piece_sum / (mm * grow);

    let (n1, n2) = cls.side_cells;
    let alpha = cls.alpha();
    let e_v: f64 = split.v_pieces.iter().map(|p| p.energy).sum();
    let e_w: f64 = split.w_pieces.iter().map(|p| p.energy).sum();
    let c_star = (split.m1 > 0 && split.m2 > 0).then(|| {
        (alpha * e_v / (split.m1 * split.m1) as f64).min((1.0 - alpha) * e_w / (split.m2 * split.m2) as f64)
    });

    let straddles: Vec<&StraddleAudit> = cls.parts.iter().filter_map(|p| p.straddle.as_ref()).collect();
    let max_triggered_lambda = cls
        .parts
        .iter()
        .filter(|p| p.in_d())
        .map(|p| p.lambda1)
        .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))));
    let max_cutoff_slope = straddles.iter().map(|s| s.cutoff.max_slope()).fold(0.0, f64::max);
    let d_count_bound = (domain.measured_area() / cfg.min_dropped_area()).ceil() as usize;
    let final_factor = cfg.final_factor();

    let drop_step_ok = geq(lhs, kept);
    let cut_step_ok = geq(kept, after_cut);
    let mid_step_ok = geq(after_cut, mid);
    let convexity_ok = convexity_holds(split.m1 as u64, split.m2 as u64, n1 as u64, n2 as u64);
    let factor_ok = final_factor >= 1.0 - cfg.epsilon;
    let mid_holds = geq(lhs, mid);
    let rows = cls
        .parts
        .iter()
        .map(|p| ChainRow {
            label: p.label,
            class: p.class,
            lambda1: p.lambda1,
            offset: p.straddle.as_ref().map(|s| s.offset.offset),
            tau1: p.straddle.as_ref().map(|s| s.tau1),
            tau2: p.straddle.as_ref().map(|s| s.tau2),
            assignment: p.assignment(),
        })
        .collect();
    Ok(ChainReport {
        cfg,
        m,
        count_a: cls.a.len(),
        count_b: cls.b.len(),
        count_c: cls.c.len(),
        count_d: cls.d.len(),
        count_e: cls.e.len(),
        count_f: cls.f.len(),
        m1: split.m1,
        m2: split.m2,
        alpha,
        lhs,
        kept,
        after_cut,
        mid,
        drop_step_ok,
        cut_step_ok,
        mid_step_ok,
        mid_holds,
        convexity_ok,
        final_factor,
        factor_ok,
        c1: cfg.c1(),
        max_triggered_lambda,
        claims_ok: straddles.iter().all(|s| s.claim.bound_ok),
        d_count_bound,
        d_count_ok: cls.d.len() <= d_count_bound,
        counts_ok: split.m1 == cls.a.len() + cls.e.len()
            && split.m2 == cls.b.len() + cls.f.len()
            && split.m1 + split.m2 == m - cls.d.len(),
        support_ok: split.support_ok,
        endpoint_ok: straddles.iter().all(|s| s.offset.endpoint_ok),
        half_mass_ok: straddles.iter().all(|s| s.offset.satisfied()),
        max_cutoff_slope,
        slope_ok: max_cutoff_slope <= 8.0 / cfg.delta,
        cut_vanishes: straddles.iter().all(|s| s.cut_vanishes),
        c_star,
        count_condition: ((m - cls.d.len()) as f64 / m as f64).powi(2) >= 1.0 - cfg.epsilon / 5.0,
        chain_holds: mid_holds && convexity_ok && factor_ok,
        rows,
    })
}

/// Classification, split and chain for one partition.
#[derive(Debug, Clone)]
pub struct GlueRun {
    pub classification: Classification,
    pub split: Split,
    pub report: ChainReport,
}

/// Runs the whole audit.
pub fn run_glue(
    domain: &GridDomain,
    partition: &Partition,
    eigs: &[EigenResult],
    cfg: &StripConfig,
) -> Result<GlueRun> {
    let classification = classify_subdomains(domain, partition, cfg, eigs)?;
    let split = split_and_assign(domain, partition, eigs, &classification)?;
    let report = energy_chain_check(domain, partition, eigs, &classification, &split)?;
    Ok(GlueRun { classification, split, report })
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:.12e}"))
}

impl ChainReport {
    /// `key: value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let c = &self.cfg;
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}: {v}");
        };
        kv("gamma_x", format!("{}", c.gamma_x));
        kv("delta", format!("{}", c.delta));
        kv("epsilon", format!("{}", c.epsilon));
        kv("m", self.m.to_string());
        kv("count_a", self.count_a.to_string());
        kv("count_b", self.count_b.to_string());
        kv("count_c", self.count_c.to_string());
        kv("count_d", self.count_d.to_string());
        kv("count_e", self.count_e.to_string());
        kv("count_f", self.count_f.to_string());
        kv("m1", self.m1.to_string());
        kv("m2", self.m2.to_string());
        kv("alpha", format!("{:.12}", self.alpha));
        kv("lhs", format!("{:.12e}", self.lhs));
        kv("kept", format!("{:.12e}", self.kept));
        kv("after_cut", format!("{:.12e}", self.after_cut));
        kv("mid", format!("{:.12e}", self.mid));
        kv("drop_step_ok", self.drop_step_ok.to_string());
        kv("cut_step_ok", self.cut_step_ok.to_string());
        kv("mid_step_ok", self.mid_step_ok.to_string());
        kv("mid_holds", self.mid_holds.to_string());
        kv("convexity_ok", self.convexity_ok.to_string());
        kv("final_factor", format!("{:.12}", self.final_factor));
        kv("factor_ok", self.factor_ok.to_string());
        kv("c1", format!("{}", self.c1));
        kv("max_triggered_lambda", opt(self.max_triggered_lambda));
        kv("claims_ok", self.claims_ok.to_string());
        kv("d_count_bound", self.d_count_bound.to_string());
        kv("d_count_ok", self.d_count_ok.to_string());
        kv("counts_ok", self.counts_ok.to_string());
        kv("support_ok", self.support_ok.to_string());
        kv("endpoint_ok", self.endpoint_ok.to_string());
        kv("half_mass_ok", self.half_mass_ok.to_string());
        kv("max_cutoff_slope", format!("{:.6}", self.max_cutoff_slope));
        kv("slope_ok", self.slope_ok.to_string());
        kv("cut_vanishes", self.cut_vanishes.to_string());
        kv("c_star", opt(self.c_star));
        kv("count_condition", self.count_condition.to_string());
        kv("chain_holds", self.chain_holds.to_string());
        s
    }

    /// One row per part.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("label,class,lambda1,r,tau1,tau2,assignment\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:?},{:.12e},{},{},{},{}",
                r.label,
                r.class,
                r.lambda1,
                r.offset.map_or_else(String::new, |v| format!("{v:.9}")),
                opt(r.tau1),
                opt(r.tau2),
                r.assignment
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::DEFAULT_TOL;
    use crate::grid::{build_domain, ShapeSpec};
    use crate::partition::l1_energy_with_eigs;
    use proptest::prelude::*;

    fn square(res: usize) -> GridDomain {
        build_domain(&ShapeSpec::UnitSquare, res).unwrap()
    }

    /// Vertical bands split at the given x positions.
    fn bands(d: &GridDomain, cuts: &[f64]) -> Partition {
        let labels = (0..d.len())
            .map(|k| cuts.iter().filter(|&&c| d.center(k).0 > c).count() as u32)
            .collect();
        Partition::new(d, labels, cuts.len() + 1).unwrap()
    }

    #[test]
    fn constants() {
        let c = StripConfig { gamma_x: 0.5, delta: 0.2, epsilon: 0.1 };
        assert!((c.c1() - 160_000.0).abs() < 1e-6);
        let c = StripConfig::default();
        assert!((c.c1() - 320_000.0).abs() < 1e-6);
        assert!((c.final_factor() - 0.95 * 0.96 / 1.04).abs() < 1e-15);
        assert!(c.final_factor() >= 0.8);
    }

    #[test]
    fn config_validation() {
        let d = square(64);
        assert!(StripConfig { gamma_x: 0.5, delta: 0.25, epsilon: 0.2 }.validate(&d).is_ok());
        assert!(StripConfig { gamma_x: 0.501, delta: 0.25, epsilon: 0.2 }.validate(&d).is_err());
        assert!(StripConfig { gamma_x: 1.5, delta: 0.25, epsilon: 0.2 }.validate(&d).is_err());
        assert!(StripConfig { gamma_x: 0.5, delta: 0.25, epsilon: 1.0 }.validate(&d).is_err());
        assert!(matches!(
            StripConfig { gamma_x: 0.5, delta: 0.04, epsilon: 0.2 }.validate(&d),
            Err(Error::TooCoarse { .. })
        ));
    }

    #[test]
    fn offset_for_symmetric_function() {
        let d = square(64);
        let cfg = StripConfig { gamma_x: 0.5, delta: 0.25, epsilon: 0.2 };
        let mask = d.full_mask();
        let u: Vec<f64> = (0..d.len()).map(|k| (PI * d.center(k).0).sin()).collect();
        let o = select_half_mass_offset(&d, &u, &mask, &cfg).unwrap();
        assert_eq!(o.offset, -0.125);
        assert!(o.endpoint_ok && o.satisfied());
    }

    #[test]
    fn offset_with_nothing_in_the_strip() {
        let d = square(64);
        let cfg = StripConfig { gamma_x: 0.5, delta: 0.25, epsilon: 0.2 };
        let mask = d.mask_where(|x, _| x < 0.3);
        let u: Vec<f64> = (0..d.len()).map(|k| if mask.contains(k) { 1.0 } else { 0.0 }).collect();
        let o = select_half_mass_offset(&d, &u, &mask, &cfg).unwrap();
        assert_eq!(o.offset, -0.125);
        assert_eq!(o.window_mass, 0.0);
    }

    #[test]
    fn offset_with_mass_right_of_the_line() {
        let d = square(64);
        let cfg = StripConfig { gamma_x: 0.5, delta: 0.25, epsilon: 0.2 };
        let mask = d.full_mask();
        // all strip mass in (γ, γ + δ/2)
        let u: Vec<f64> = (0..d.len()).map(|k| if (0.5..0.6).contains(&d.center(k).0) { 1.0 } else { 0.0 }).collect();
        let o = select_half_mass_offset(&d, &u, &mask, &cfg).unwrap();
        assert_eq!(o.offset, -0.125);
        assert_eq!(o.window_mass, 0.0);
    }

    #[test]
    fn offset_with_mass_left_of_the_line() {
        let d = square(64);
        let cfg = StripConfig { gamma_x: 0.5, delta: 0.25, epsilon: 0.2 };
        let mask = d.full_mask();
        let u: Vec<f64> = (0..d.len()).map(|k| if (0.4..0.5).contains(&d.center(k).0) { 1.0 } else { 0.0 }).collect();
        let o = select_half_mass_offset(&d, &u, &mask, &cfg).unwrap();
        assert!(o.offset > -0.125 && o.satisfied() && o.endpoint_ok);
        // the first admissible window keeps at most half of the band
        let expected = offset_candidates(d.h(), cfg.delta)
            .into_iter()
            .find(|&r| {
                let w: f64 = (0..d.len())
                    .filter(|&k| {
                        let x = d.center(k).0;
                        0.5 + r < x && x < 0.5 + r + 0.125
                    })
                    .map(|k| u[k] * u[k])
                    .sum();
                w <= 0.5 * u.iter().map(|v| v * v).sum::<f64>()
            })
            .unwrap();
        assert_eq!(o.offset, expected);
    }

    #[test]
    fn cutoff_shape() {
        let d = square(256);
        let cfg = StripConfig::default();
        for r in [-0.05, -0.03, 0.0] {
            let xi = build_cutoff(&d, r, &cfg).unwrap();
            let xc = d.col_x(xi.cut_column());
            assert!((xc - (0.5 + r + 0.025)).abs() <= d.h() / 2.0 + 1e-12);
            assert_eq!(xi.column_values()[xi.cut_column()], 0.0);
            for i in 0..d.nx() {
                let x = d.col_x(i);
                if x <= 0.5 + r || x >= 0.5 + r + 0.05 {
                    assert_eq!(xi.column_values()[i], 1.0);
                }
            }
            let s = xi.max_slope();
            assert!(s <= 8.0 / cfg.delta);
            assert!((s - 4.0 / cfg.delta).abs() < 0.25 * 4.0 / cfg.delta, "{s}");
        }
    }

    #[test]
    fn cutoff_needs_four_columns() {
        let d = square(64);
        let cfg = StripConfig { gamma_x: 0.5, delta: 0.1, epsilon: 0.2 };
        assert!(matches!(build_cutoff(&d, -0.05, &cfg), Err(Error::TooCoarse { .. })));
        assert!(build_cutoff(&d, 0.1, &StripConfig { delta: 0.25, ..cfg }).is_err());
    }

    #[test]
    fn claim_away_from_the_ramp() {
        let d = square(128);
        let p = bands(&d, &[0.3]);
        let (_, eigs) = l1_energy_with_eigs(&d, &p, DEFAULT_TOL).unwrap();
        let cfg = StripConfig::default();
        let xi = build_cutoff(&d, 0.0, &cfg).unwrap();
        let mask = p.mask(&d, 0).unwrap();
        let c = check_claim(&d, &mask, &eigs[0].eigfn, &xi, eigs[0].lambda1, &cfg).unwrap();
        assert!((c.ratio - eigs[0].lambda1).abs() < 1e-5 * eigs[0].lambda1);
        assert!(!c.triggered && c.bound_ok);
        let zero = vec![0.0; d.len()];
        assert!(matches!(check_claim(&d, &mask, &zero, &xi, 1.0, &cfg), Err(Error::ZeroFunction)));
    }

    #[test]
    fn classes_of_bands() {
        let d = square(128);
        let p = bands(&d, &[0.3, 0.7]);
        let (_, eigs) = l1_energy_with_eigs(&d, &p, DEFAULT_TOL).unwrap();
        let cls = classify_subdomains(&d, &p, &StripConfig::default(), &eigs).unwrap();
        assert_eq!((cls.a.clone(), cls.b.clone(), cls.c.clone()), (vec![0], vec![2], vec![1]));
        assert_eq!(cls.alpha(), 0.5);
        // the middle band is symmetric about Γ: the cut lands left of the line
        let s = cls.parts[1].straddle.as_ref().unwrap();
        assert!(s.cut_vanishes && s.offset.endpoint_ok);
        let strip_only = bands(&d, &[0.47, 0.53]);
        let (_, eigs) = l1_energy_with_eigs(&d, &strip_only, DEFAULT_TOL).unwrap();
        let cls = classify_subdomains(&d, &strip_only, &StripConfig::default(), &eigs).unwrap();
        assert_eq!((cls.a, cls.b, cls.c), (vec![0, 1], vec![2], vec![]));
    }

    #[test]
    fn halves_copy_verbatim() {
        let d = square(128);
        let p = bands(&d, &[0.5]);
        let (_, eigs) = l1_energy_with_eigs(&d, &p, DEFAULT_TOL).unwrap();
        let cfg = StripConfig::default();
        let run = run_glue(&d, &p, &eigs, &cfg).unwrap();
        let r = &run.report;
        assert_eq!((r.m1, r.m2, r.count_d), (1, 1, 0));
        assert_eq!(run.split.v.as_ref().unwrap().component(0), &eigs[0].eigfn[..]);
        assert!((r.lhs / r.mid - (1.0 + cfg.epsilon / 5.0)).abs() < 1e-12);
        assert!(r.chain_holds && r.support_ok && r.counts_ok);
    }

    #[test]
    fn straddling_band_chain() {
        let d = square(128);
        let p = bands(&d, &[0.3, 0.7]);
        let (_, eigs) = l1_energy_with_eigs(&d, &p, DEFAULT_TOL).unwrap();
        let run = run_glue(&d, &p, &eigs, &StripConfig::default()).unwrap();
        let r = &run.report;
        assert!(r.counts_ok && r.support_ok && r.slope_ok && r.cut_vanishes && r.claims_ok);
        assert!(r.drop_step_ok && r.cut_step_ok && r.mid_step_ok && r.chain_holds);
        assert_eq!(r.m1 + r.m2, 3 - r.count_d);
        assert_eq!(r.rows.len(), 3);
        let text = r.to_text();
        assert!(text.contains("chain_holds: true"));
        assert_eq!(r.to_csv().lines().count(), 4);
    }

    #[test]
    fn thin_channel_keeps_its_left_piece() {
        // block left of the strip plus a two-cell channel reaching into D₂′
        let d = square(128);
        let h = d.h();
        let labels = (0..d.len())
            .map(|k| {
                let (x, y) = d.center(k);
                u32::from(!(x < 0.44 || (y < 2.0 * h && x < 0.6)))
            })
            .collect();
        let p = Partition::new(&d, labels, 2).unwrap();
        let (_, eigs) = l1_energy_with_eigs(&d, &p, DEFAULT_TOL).unwrap();
        let run = run_glue(&d, &p, &eigs, &StripConfig::default()).unwrap();
        let cls = &run.classification;
        // the complement straddles too and fails the test
        assert_eq!((cls.c.clone(), cls.e.clone(), cls.d.clone()), (vec![0, 1], vec![0], vec![1]));
        let s = cls.parts[0].straddle.as_ref().unwrap();
        assert!(s.tau1 < s.tau2 && s.claim.ratio < s.claim.threshold);
        let piece = &run.split.v_pieces[0];
        assert_eq!(piece.source, PieceSource::Cut(Side::One));
        assert!((piece.mass - 1.0).abs() < 1e-12);
        assert!((piece.energy - s.tau1).abs() < 1e-9 * s.tau1);
        let r = &run.report;
        assert_eq!((r.m1, r.m2), (1, 0));
        assert!(run.split.w.is_none() && r.c_star.is_none());
        assert!(r.support_ok && r.counts_ok && r.cut_step_ok && r.chain_holds);
        assert_eq!(r.rows[0].assignment, "v_cut");
    }

    #[test]
    fn one_sided_energies_add_up() {
        let d = square(128);
        let p = bands(&d, &[0.3, 0.7]);
        let (_, eigs) = l1_energy_with_eigs(&d, &p, DEFAULT_TOL).unwrap();
        let cfg = StripConfig::default();
        let mask = p.mask(&d, 1).unwrap();
        let xi = build_cutoff(&d, -0.02, &cfg).unwrap();
        let xu = xi.apply(&eigs[1].eigfn, &mask);
        let (m1, m2) = (
            side_mask(&d, &mask, xi.cut_column(), Side::One),
            side_mask(&d, &mask, xi.cut_column(), Side::Two),
        );
        let whole = dirichlet_energy(&d, &xu, &mask);
        let parts = dirichlet_energy(&d, &xu, &m1) + dirichlet_energy(&d, &xu, &m2);
        assert!((whole - parts).abs() < 1e-10 * whole);
        let ratio = rayleigh_quotient(&d, &xu, &mask).unwrap();
        let t1 = one_sided_quotient(&d, &xu, &m1);
        let t2 = one_sided_quotient(&d, &xu, &m2);
        assert!(t1.min(t2) <= ratio * (1.0 + 1e-12));
    }

    #[test]
    fn convexity_examples() {
        assert!(convexity_holds(3, 3, 1, 1));
        assert!(convexity_holds(0, 5, 2, 7));
        assert!(convexity_holds(4, 1, 4, 1));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn convexity_matches_the_real_inequality(m1 in 0u64..500, m2 in 0u64..500, n1 in 1u64..100_000, n2 in 1u64..100_000) {
            prop_assert!(convexity_holds(m1, m2, n1, n2));
            let a = n1 as f64 / (n1 + n2) as f64;
            let lhs = (m1 * m1) as f64 / a + (m2 * m2) as f64 / (1.0 - a);
            prop_assert!(lhs >= ((m1 + m2) as f64).powi(2) * (1.0 - 1e-12));
        }

        #[test]
        fn an_endpoint_always_works(vals in proptest::collection::vec(0.0f64..1.0, 64 * 64), gamma in 20usize..44, cut in 0usize..64) {
            let d = square(64);
            let cfg = StripConfig { gamma_x: gamma as f64 / 64.0, delta: 0.25, epsilon: 0.2 };
            let mask = d.mask_where(|x, y| x + 0.3 * y > cut as f64 / 64.0);
            prop_assume!(!mask.is_empty());
            let u: Vec<f64> = (0..d.len()).map(|k| if mask.contains(k) { vals[k] } else { 0.0 }).collect();
            let o = select_half_mass_offset(&d, &u, &mask, &cfg).unwrap();
            prop_assert!(o.endpoint_ok);
            prop_assert!(o.satisfied());
            prop_assert!((-0.125..=0.0).contains(&o.offset));
        }

        #[test]
        fn cutoff_is_bounded(delta in 0.13f64..0.4, t in 0.0f64..1.0) {
            let d = square(64);
            let cfg = StripConfig { gamma_x: 0.5, delta, epsilon: 0.2 };
            let xi = build_cutoff(&d, -t * delta / 2.0, &cfg).unwrap();
            prop_assert_eq!(xi.column_values()[xi.cut_column()], 0.0);
            prop_assert!(xi.max_slope() <= 8.0 / delta);
            prop_assert!(xi.column_values().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
