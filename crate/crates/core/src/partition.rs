//! m-partitions of a grid domain, their l¹ energy, segregated fields and the
//! alternating eigen-solve / argmax optimizer.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{self, solve_compact, CompactEigen, EigenResult, DEFAULT_TOL};
use crate::grid::{DomainId, GridDomain, SubdomainMask};
use crate::solver::MaskedLaplacian;
use crate::{Error, Result};

/// Label of cells outside the domain.
pub const UNASSIGNED: u32 = u32::MAX;

/// Labelling of the inside cells of a domain by `0..m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    parent: DomainId,
    nx: usize,
    ny: usize,
    labels: Vec<u32>,
    m: usize,
}

impl Partition {
    /// Validates that every inside cell carries a label below `m` and every
    /// outside cell is [`UNASSIGNED`]. Empty parts are allowed here; see
    /// [`Partition::check_nonempty`].
    pub fn new(domain: &GridDomain, labels: Vec<u32>, m: usize) -> Result<Self> {
        if labels.len() != domain.len() {
            return Err(Error::InvalidArgument("label grid does not match the domain".into()));
        }
        if m == 0 {
            return Err(Error::InvalidArgument("a partition needs at least one part".into()));
        }
        for (k, &l) in labels.iter().enumerate() {
            let inside = domain.is_inside(k);
            if inside && (l == UNASSIGNED || l as usize >= m) {
                return Err(Error::InvalidArgument(format!("inside cell {k} has invalid label {l}")));
            }
            if !inside && l != UNASSIGNED {
                return Err(Error::InvalidArgument(format!("outside cell {k} carries label {l}")));
            }
        }
        Ok(Self::from_raw(domain, labels, m))
    }

    fn from_raw(domain: &GridDomain, labels: Vec<u32>, m: usize) -> Self {
        Self { parent: domain.id(), nx: domain.nx(), ny: domain.ny(), labels, m }
    }

    /// The one-part partition.
    pub fn whole(domain: &GridDomain) -> Self {
        let labels = domain.inside().iter().map(|&b| if b { 0 } else { UNASSIGNED }).collect();
        Self::from_raw(domain, labels, 1)
    }

    pub fn parent(&self) -> DomainId {
        self.parent
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, idx: usize) -> Option<usize> {
        let l = self.labels[idx];
        (l != UNASSIGNED).then_some(l as usize)
    }

    pub fn part_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.m];
        for &l in &self.labels {
            if l != UNASSIGNED {
                sizes[l as usize] += 1;
            }
        }
        sizes
    }

    /// Sorted cell indices of each part.
    pub fn cells_by_label(&self) -> Vec<Vec<usize>> {
        let mut cells = vec![Vec::new(); self.m];
        for (k, &l) in self.labels.iter().enumerate() {
            if l != UNASSIGNED {
                cells[l as usize].push(k);
            }
        }
        cells
    }

    pub fn mask(&self, domain: &GridDomain, label: usize) -> Result<SubdomainMask> {
        self.check_domain(domain)?;
        let cells = self.labels.iter().map(|&l| l as usize == label && l != UNASSIGNED).collect();
        Ok(SubdomainMask::from_cells_unchecked(domain, cells))
    }

    pub fn check_domain(&self, domain: &GridDomain) -> Result<()> {
        if self.parent != domain.id() {
            return Err(Error::DomainMismatch);
        }
        Ok(())
    }

    /// Fails on the lowest empty label.
    pub fn check_nonempty(&self) -> Result<()> {
        match self.part_sizes().iter().position(|&s| s == 0) {
            Some(label) => Err(Error::EmptyPart { label }),
            None => Ok(()),
        }
    }

    /// Pairs `(a, b)`, `a < b`, of parts sharing a cell face.
    pub fn adjacency(&self) -> BTreeSet<(usize, usize)> {
        let mut pairs = BTreeSet::new();
        for j in 0..self.ny {
            for i in 0..self.nx {
                let k = j * self.nx + i;
                let a = self.labels[k];
                if a == UNASSIGNED {
                    continue;
                }
                let mut check = |q: usize| {
                    let b = self.labels[q];
                    if b != UNASSIGNED && b != a {
                        pairs.insert((a.min(b) as usize, a.max(b) as usize));
                    }
                };
                if i + 1 < self.nx {
                    check(k + 1);
                }
                if j + 1 < self.ny {
                    check(k + self.nx);
                }
            }
        }
        pairs
    }
}

/// Per-part eigenvalues and the normalized l¹ energy `Σλ / m²`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub per_part_lambda: Vec<f64>,
    pub sum_lambda: f64,
    pub l1_normalized: f64,
    pub m: usize,
}

impl EnergyReport {
    /// `sum_lambda` is stored as `l1_normalized · m²` so that the identity
    /// holds bit for bit; it differs from the plain sum by at most one ulp.
    pub fn from_lambdas(per_part_lambda: Vec<f64>) -> Self {
        let m = per_part_lambda.len();
        let m2 = (m * m) as f64;
        let l1_normalized = per_part_lambda.iter().sum::<f64>() / m2;
        Self { sum_lambda: l1_normalized * m2, l1_normalized, m, per_part_lambda }
    }
}

/// Eigen-solves every part and reports the normalized energy.
pub fn l1_energy(domain: &GridDomain, partition: &Partition) -> Result<EnergyReport> {
    l1_energy_with_eigs(domain, partition, DEFAULT_TOL).map(|(r, _)| r)
}

/// [`l1_energy`] also returning the per-part eigenpairs.
pub fn l1_energy_with_eigs(domain: &GridDomain, partition: &Partition, tol: f64) -> Result<(EnergyReport, Vec<EigenResult>)> {
    partition.check_domain(domain)?;
    partition.check_nonempty()?;
    let masks: Vec<SubdomainMask> = (0..partition.m()).map(|j| partition.mask(domain, j)).collect::<Result<_>>()?;
    let eigs: Vec<EigenResult> = masks.par_iter().map(|mask| eigen::first_eigenpair(domain, mask, tol)).collect::<Result<_>>()?;
    let report = EnergyReport::from_lambdas(eigs.iter().map(|e| e.lambda1).collect());
    Ok((report, eigs))
}

/// Vector field with at most one nonzero component per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SegregatedField {
    components: Vec<Vec<f64>>,
}

impl SegregatedField {
    /// Checks pointwise segregation.
    pub fn new(components: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::InvalidArgument("field has no components".into()));
        };
        let n = first.len();
        if components.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidArgument("components have different lengths".into()));
        }
        for k in 0..n {
            if components.iter().filter(|c| c[k] != 0.0).count() > 1 {
                return Err(Error::InvalidArgument(format!("cell {k} has more than one nonzero component")));
            }
        }
        Ok(Self { components })
    }

    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn component(&self, j: usize) -> &[f64] {
        &self.components[j]
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.components
    }
}

/// Keeps, per cell, the component of largest magnitude (lowest index on
/// ties), then rescales each nonzero component to unit discrete L² norm.
pub fn project_to_sigma(domain: &GridDomain, field: &[Vec<f64>]) -> Result<SegregatedField> {
    if field.is_empty() || field.iter().any(|c| c.len() != domain.len()) {
        return Err(Error::InvalidArgument("field dimensions do not match the domain".into()));
    }
    let m = field.len();
    let mut out = vec![vec![0.0; domain.len()]; m];
    for k in domain.inside_indices() {
        let mut best: Option<(usize, f64)> = None;
        for (j, c) in field.iter().enumerate() {
            let v = c[k];
            if v != 0.0 && best.map_or(true, |(_, b)| v.abs() > b.abs()) {
                best = Some((j, v));
            }
        }
        if let Some((j, v)) = best {
            out[j][k] = v;
        }
    }
    if out.iter().all(|c| c.iter().all(|&v| v == 0.0)) {
        return Err(Error::ZeroFunction);
    }
    let cell_area = domain.cell_area();
    for c in &mut out {
        let n2: f64 = c.iter().map(|v| v * v).sum::<f64>() * cell_area;
        if n2 > 0.0 {
            let s = 1.0 / n2.sqrt();
            c.iter_mut().for_each(|v| *v *= s);
        }
    }
    SegregatedField::new(out)
}

/// Labels every inside cell by its nonzero component. Cells where all
/// components vanish take the label of the nearest labeled cell in the
/// Chebyshev metric, lowest label on ties.
pub fn partition_from_field(domain: &GridDomain, field: &SegregatedField) -> Result<Partition> {
    if field.components().iter().any(|c| c.len() != domain.len()) {
        return Err(Error::InvalidArgument("field dimensions do not match the domain".into()));
    }
    let n = domain.len();
    let mut labels = vec![UNASSIGNED; n];
    for (j, c) in field.components().iter().enumerate() {
        for (k, &v) in c.iter().enumerate() {
            if v != 0.0 && domain.is_inside(k) {
                labels[k] = j as u32;
            }
        }
    }
    let mut inside_labels = labels.clone();
    fill_nearest_chebyshev(domain, &mut labels);
    for k in 0..n {
        inside_labels[k] = if domain.is_inside(k) { labels[k] } else { UNASSIGNED };
    }
    Partition::new(domain, inside_labels, field.m())
}

/// Multi-source BFS over the 8-neighborhood: every unlabeled cell receives
/// the smallest label among the labeled cells at minimal Chebyshev distance.
fn fill_nearest_chebyshev(domain: &GridDomain, labels: &mut [u32]) {
    let (nx, ny) = (domain.nx() as isize, domain.ny() as isize);
    let mut frontier: Vec<usize> = (0..labels.len()).filter(|&k| labels[k] != UNASSIGNED).collect();
    if frontier.is_empty() {
        return;
    }
    while !frontier.is_empty() {
        let mut next: Vec<usize> = Vec::new();
        let mut proposal: Vec<(usize, u32)> = Vec::new();
        for &k in &frontier {
            let (i, j) = ((k % nx as usize) as isize, (k / nx as usize) as isize);
            for dj in -1..=1 {
                for di in -1..=1 {
                    let (a, b) = (i + di, j + dj);
                    if (di, dj) == (0, 0) || a < 0 || b < 0 || a >= nx || b >= ny {
                        continue;
                    }
                    let q = (b * nx + a) as usize;
                    if labels[q] == UNASSIGNED {
                        proposal.push((q, labels[k]));
                    }
                }
            }
        }
        proposal.sort_unstable();
        for (q, l) in proposal {
            if labels[q] == UNASSIGNED {
                labels[q] = l;
                next.push(q);
            }
        }
        frontier = next;
    }
}

/// Knobs for [`optimize_partition`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerOptions {
    pub max_outer_iters: usize,
    pub restarts: usize,
    /// Relative energy tolerance; a step must lower `Σλ` by more than
    /// `tol · Σλ` for the iteration to continue.
    pub tol: f64,
    /// Eigen residual tolerance inside the loop. The returned parts are
    /// re-solved at [`DEFAULT_TOL`].
    pub eigen_tol: f64,
    /// Scale applied to the one-ring extension before the argmax.
    pub extension_gain: f64,
    /// Cap on the Lloyd relaxation sweeps applied to the random Voronoi
    /// seeds; relaxation stops early at a fixed point.
    pub lloyd_iters: usize,
    /// Use the lattice start for the first run instead of random seeds.
    pub lattice_start: bool,
    /// Halvings of the move set tried after a rejected step.
    pub max_backtracks: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_outer_iters: 200,
            restarts: 8,
            tol: 1e-8,
            eigen_tol: 1e-5,
            extension_gain: 1.0,
            lloyd_iters: 100,
            lattice_start: true,
            max_backtracks: 4,
        }
    }
}

/// One outer iteration of the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `Σλ` of the state after this iteration (the accepted one, or the
    /// unchanged previous one when every trial was rejected).
    pub sum_lambda: f64,
    pub accepted: bool,
    pub moves: usize,
    pub backtracks: usize,
}

/// Initial partition of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    /// Voronoi cells of rows of evenly spaced points.
    Lattice,
    /// Voronoi cells of `m` distinct inside cells drawn with the run's seed.
    Random,
}

/// Result of one run.
#[derive(Debug, Clone)]
pub struct RestartOutcome {
    pub seed: u64,
    pub start: Start,
    pub initial_sum_lambda: f64,
    pub final_sum_lambda: f64,
    pub log: Vec<IterationRecord>,
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub partition: Partition,
    pub report: EnergyReport,
    /// Seed of the restart that produced `partition`.
    pub best_seed: u64,
    pub restarts: Vec<RestartOutcome>,
    /// Eigenfunctions of the returned parts (full grid).
    pub eigenfunctions: Vec<Vec<f64>>,
}

impl OptimizeOutcome {
    /// Total accepted outer iterations over all restarts.
    pub fn iterations(&self) -> usize {
        self.restarts.iter().map(|r| r.log.iter().filter(|l| l.accepted).count()).sum()
    }
}

/// Alternating optimizer; see [`optimize_partition_detailed`].
pub fn optimize_partition(domain: &GridDomain, m: usize, seed: u64, opts: &OptimizerOptions) -> Result<(Partition, EnergyReport)> {
    optimize_partition_detailed(domain, m, seed, opts).map(|o| (o.partition, o.report))
}

/// Searches for an m-partition with small `Σ λ₁(Ω_j)`.
///
/// Run `r` carries seed `seed + r`. It starts from the Lloyd-relaxed Voronoi
/// cells of `m` random inside cells, or of a row lattice for run 0 when
/// `lattice_start` is set. It then alternates: solve the first eigenpair of
/// each part, extend every eigenfunction one cell past its support by the
/// four-neighbor mean (scaled by `extension_gain`), move each cell to the
/// part of largest value, repair empty parts, and keep the step only if `Σλ`
/// decreases. Rejected steps are retried with the highest-margin half of the
/// moves. The best run wins; ties go to the lowest seed.
pub fn optimize_partition_detailed(domain: &GridDomain, m: usize, seed: u64, opts: &OptimizerOptions) -> Result<OptimizeOutcome> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    if m > domain.inside_count() / 16 {
        return Err(Error::InvalidArgument(format!(
            "m = {m} exceeds the grid capacity of {} parts",
            domain.inside_count() / 16
        )));
    }
    if opts.restarts == 0 {
        return Err(Error::InvalidArgument("at least one restart is required".into()));
    }
    let runs: Vec<(RestartOutcome, State)> = (0..opts.restarts as u64)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 && opts.lattice_start { Start::Lattice } else { Start::Random };
            run_restart(domain, m, seed.wrapping_add(r), start, opts)
        })
        .collect::<Result<_>>()?;
    let best = runs
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.0.final_sum_lambda.total_cmp(&b.0.final_sum_lambda).then(ia.cmp(ib)))
        .map(|(i, _)| i)
        .expect("at least one restart");
    let best_seed = runs[best].0.seed;
    let mut restarts = Vec::with_capacity(runs.len());
    let mut best_state = None;
    for (i, (outcome, state)) in runs.into_iter().enumerate() {
        if i == best {
            best_state = Some(state);
        }
        restarts.push(outcome);
    }
    let state = best_state.expect("best restart present");
    // cold re-solve: the reported value depends on the labels only
    let partition = Partition::new(domain, state.labels, m)?;
    let (report, eigs) = l1_energy_with_eigs(domain, &partition, DEFAULT_TOL)?;
    let eigenfunctions = eigs.into_iter().map(|e| e.eigfn).collect();
    Ok(OptimizeOutcome { partition, report, best_seed, restarts, eigenfunctions })
}

#[derive(Clone)]
struct PartState {
    cells: Vec<usize>,
    values: Vec<f64>,
    lambda: f64,
}

#[derive(Clone)]
struct State {
    labels: Vec<u32>,
    parts: Vec<PartState>,
}

impl State {
    fn sum_lambda(&self) -> f64 {
        self.parts.iter().map(|p| p.lambda).sum()
    }

    /// `value[p]` = eigenfunction of the part owning `p`, evaluated at `p`.
    fn own_values(&self, len: usize) -> Vec<f64> {
        let mut v = vec![0.0; len];
        for p in &self.parts {
            for (&c, &x) in p.cells.iter().zip(&p.values) {
                v[c] = x;
            }
        }
        v
    }
}

fn solve_part(domain: &GridDomain, cells: Vec<usize>, warm: Option<Vec<f64>>, tol: f64) -> Result<PartState> {
    let op = MaskedLaplacian::new(domain.nx(), cells);
    let CompactEigen { lambda1, values, .. } = solve_compact(&op, domain.nx(), domain.h(), tol, warm)?;
    Ok(PartState { cells: op.cells().to_vec(), values, lambda: lambda1 })
}

fn cells_of(labels: &[u32], m: usize) -> Vec<Vec<usize>> {
    let mut cells = vec![Vec::new(); m];
    for (k, &l) in labels.iter().enumerate() {
        if l != UNASSIGNED {
            cells[l as usize].push(k);
        }
    }
    cells
}

/// Nearest-seed labelling of the inside cells (lowest seed on ties).
fn voronoi_labels(domain: &GridDomain, seeds: &[(f64, f64)]) -> Vec<u32> {
    let mut labels = vec![UNASSIGNED; domain.len()];
    for k in domain.inside_indices() {
        let (x, y) = domain.center(k);
        let mut best = (f64::INFINITY, 0u32);
        for (s, &(sx, sy)) in seeds.iter().enumerate() {
            let d = (x - sx).powi(2) + (y - sy).powi(2);
            if d < best.0 {
                best = (d, s as u32);
            }
        }
        labels[k] = best.1;
    }
    labels
}

fn random_seeds(domain: &GridDomain, m: usize, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let inside: Vec<usize> = domain.inside_indices().collect();
    let mut picks = sample(rng, inside.len(), m).into_vec();
    picks.sort_unstable();
    picks.iter().map(|&i| domain.center(inside[i])).collect()
}

/// `m` points in rows across the bounding box of the domain: the row count
/// follows the aspect ratio, lower rows take the remainder, and each row's
/// points are evenly spaced over the inside extent of the grid row through
/// its height.
fn lattice_seeds(domain: &GridDomain, m: usize) -> Vec<(f64, f64)> {
    let h = domain.h();
    let (mut imin, mut imax, mut jmin, mut jmax) = (usize::MAX, 0, usize::MAX, 0);
    for k in domain.inside_indices() {
        let (i, j) = domain.coords(k);
        imin = imin.min(i);
        imax = imax.max(i);
        jmin = jmin.min(j);
        jmax = jmax.max(j);
    }
    let x0 = domain.col_x(imin) - 0.5 * h;
    let y0 = domain.row_y(jmin) - 0.5 * h;
    let width = (imax - imin + 1) as f64 * h;
    let height = (jmax - jmin + 1) as f64 * h;
    let rows = ((m as f64 * height / width).sqrt().round() as usize).clamp(1, m);
    let mut seeds = Vec::with_capacity(m);
    for r in 0..rows {
        let n = m / rows + usize::from(r < m % rows);
        let y = y0 + (r as f64 + 0.5) * height / rows as f64;
        let j = (((y - y0) / h).floor() as usize).min(jmax - jmin) + jmin;
        let row: Vec<usize> = (imin..=imax).filter(|&i| domain.is_inside(domain.index(i, j))).collect();
        let (a, b) = match (row.first(), row.last()) {
            (Some(&a), Some(&b)) => (domain.col_x(a) - 0.5 * h, domain.col_x(b) + 0.5 * h),
            _ => (x0, x0 + width),
        };
        for c in 0..n {
            seeds.push((a + (c as f64 + 0.5) * (b - a) / n as f64, y));
        }
    }
    seeds
}

/// Voronoi labels of `seeds` after at most `iters` Lloyd sweeps.
fn lloyd_labels(domain: &GridDomain, mut seeds: Vec<(f64, f64)>, iters: usize) -> Vec<u32> {
    let m = seeds.len();
    let mut labels = voronoi_labels(domain, &seeds);
    for _ in 0..iters {
        let mut acc = vec![(0.0, 0.0, 0usize); m];
        for k in domain.inside_indices() {
            let (x, y) = domain.center(k);
            let a = &mut acc[labels[k] as usize];
            a.0 += x;
            a.1 += y;
            a.2 += 1;
        }
        for (s, a) in seeds.iter_mut().zip(&acc) {
            if a.2 > 0 {
                *s = (a.0 / a.2 as f64, a.1 / a.2 as f64);
            }
        }
        let next = voronoi_labels(domain, &seeds);
        if next == labels {
            break;
        }
        labels = next;
    }
    labels
}

/// Gives every empty label one cell: the inside cell maximizing
/// `min_j √λ_j · |x − c_j|` over the nonempty parts (centroids `c_j`),
/// taken from a part that keeps at least one cell.
fn repair_empty(domain: &GridDomain, labels: &mut [u32], m: usize, lambdas: &[f64]) {
    loop {
        let mut sizes = vec![0usize; m];
        let mut centroid = vec![(0.0, 0.0); m];
        for k in domain.inside_indices() {
            let l = labels[k] as usize;
            sizes[l] += 1;
            let (x, y) = domain.center(k);
            centroid[l].0 += x;
            centroid[l].1 += y;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else { return };
        let weights: Vec<(f64, (f64, f64))> = (0..m)
            .filter(|&j| sizes[j] > 0)
            .map(|j| (lambdas[j].max(0.0).sqrt(), (centroid[j].0 / sizes[j] as f64, centroid[j].1 / sizes[j] as f64)))
            .collect();
        let mut best: Option<(f64, usize)> = None;
        for k in domain.inside_indices() {
            if sizes[labels[k] as usize] < 2 {
                continue;
            }
            let (x, y) = domain.center(k);
            let score = weights
                .iter()
                .map(|(w, (cx, cy))| w * ((x - cx).powi(2) + (y - cy).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            if best.map_or(true, |(b, _)| score > b) {
                best = Some((score, k));
            }
        }
        match best {
            Some((_, k)) => labels[k] = empty as u32,
            None => return,
        }
    }
}

struct Move {
    cell: usize,
    to: u32,
    margin: f64,
}

/// Argmax reassignment over the own eigenfunction and the one-ring
/// extensions of the neighboring parts.
fn propose_moves(domain: &GridDomain, labels: &[u32], value: &[f64], gain: f64) -> Vec<Move> {
    let mut moves = Vec::new();
    for k in domain.inside_indices() {
        let own = labels[k];
        let nbrs = domain.neighbors(k);
        let mut cands: [(u32, f64); 4] = [(UNASSIGNED, 0.0); 4];
        let mut nc = 0;
        for q in nbrs.into_iter().flatten() {
            let l = labels[q];
            if l == UNASSIGNED || l == own {
                continue;
            }
            match cands[..nc].iter_mut().find(|c| c.0 == l) {
                Some(c) => c.1 += value[q],
                None => {
                    cands[nc] = (l, value[q]);
                    nc += 1;
                }
            }
        }
        if nc == 0 {
            continue;
        }
        let mut best = (own, value[k]);
        for &(l, s) in &cands[..nc] {
            let ext = gain * s / 4.0;
            if ext > best.1 || (ext == best.1 && l < best.0) {
                best = (l, ext);
            }
        }
        if best.0 != own {
            let margin = (best.1 - value[k]) / best.1;
            moves.push(Move { cell: k, to: best.0, margin });
        }
    }
    moves
}

fn run_restart(domain: &GridDomain, m: usize, seed: u64, start: Start, opts: &OptimizerOptions) -> Result<(RestartOutcome, State)> {
    let seeds = match start {
        Start::Lattice => lattice_seeds(domain, m),
        Start::Random => random_seeds(domain, m, &mut ChaCha8Rng::seed_from_u64(seed)),
    };
    let mut labels = lloyd_labels(domain, seeds, opts.lloyd_iters);
    repair_empty(domain, &mut labels, m, &vec![1.0; m]);
    let parts: Vec<PartState> = cells_of(&labels, m)
        .into_par_iter()
        .map(|cells| solve_part(domain, cells, None, opts.eigen_tol))
        .collect::<Result<_>>()?;
    let mut state = State { labels, parts };
    let initial = state.sum_lambda();
    let mut log = Vec::new();
    let len = domain.len();

    for iteration in 1..=opts.max_outer_iters {
        let value = state.own_values(len);
        let mut moves = propose_moves(domain, &state.labels, &value, opts.extension_gain);
        if moves.is_empty() {
            break;
        }
        moves.sort_by(|a, b| b.margin.total_cmp(&a.margin).then(a.cell.cmp(&b.cell)));
        let current = state.sum_lambda();
        let mut backtracks = 0;
        let accepted = halving(domain, &state, &moves, &value, current, m, opts, &mut backtracks)?;
        match accepted {
            Some((next, taken)) => {
                let energy = next.sum_lambda();
                log.push(IterationRecord { iteration, sum_lambda: energy, accepted: true, moves: taken, backtracks });
                state = next;
                if current - energy <= opts.tol * current {
                    break;
                }
            }
            None => {
                log.push(IterationRecord { iteration, sum_lambda: current, accepted: false, moves: 0, backtracks });
                break;
            }
        }
    }
    let final_sum = state.sum_lambda();
    Ok((RestartOutcome { seed, start, initial_sum_lambda: initial, final_sum_lambda: final_sum, log }, state))
}

#[allow(clippy::too_many_arguments)]
fn halving(
    domain: &GridDomain,
    base: &State,
    moves: &[Move],
    value: &[f64],
    level: f64,
    m: usize,
    opts: &OptimizerOptions,
    rejected: &mut usize,
) -> Result<Option<(State, usize)>> {
    let lambdas: Vec<f64> = base.parts.iter().map(|p| p.lambda).collect();
    let mut take = moves.len();
    for attempt in 0..=opts.max_backtracks {
        let trial = try_moves(domain, base, &moves[..take], value, &lambdas, m, opts)?;
        if trial.sum_lambda() < level {
            return Ok(Some((trial, take)));
        }
        *rejected += 1;
        if take == 1 || attempt == opts.max_backtracks {
            break;
        }
        take = (take + 1) / 2;
    }
    Ok(None)
}

fn try_moves(
    domain: &GridDomain,
    state: &State,
    moves: &[Move],
    value: &[f64],
    lambdas: &[f64],
    m: usize,
    opts: &OptimizerOptions,
) -> Result<State> {
    let mut labels = state.labels.clone();
    for mv in moves {
        labels[mv.cell] = mv.to;
    }
    repair_empty(domain, &mut labels, m, lambdas);
    let mut changed = vec![false; m];
    for (&a, &b) in state.labels.iter().zip(&labels) {
        if a != b {
            changed[a as usize] = true;
            changed[b as usize] = true;
        }
    }
    let new_cells = cells_of(&labels, m);
    // warm start: previous eigenfunction on kept cells, extension value on gained cells
    let mut ext = value.to_vec();
    for mv in moves {
        ext[mv.cell] = ext_value(domain, &state.labels, value, mv.cell, mv.to, opts.extension_gain);
    }
    let parts: Vec<PartState> = new_cells
        .into_par_iter()
        .enumerate()
        .map(|(j, cells)| {
            if !changed[j] {
                return Ok(state.parts[j].clone());
            }
            let warm: Vec<f64> = cells.iter().map(|&c| if state.labels[c] as usize == j { value[c] } else { ext[c] }).collect();
            solve_part(domain, cells, Some(warm), opts.eigen_tol)
        })
        .collect::<Result<_>>()?;
    Ok(State { labels, parts })
}

fn ext_value(domain: &GridDomain, labels: &[u32], value: &[f64], cell: usize, to: u32, gain: f64) -> f64 {
    let s: f64 = domain.neighbors(cell).into_iter().flatten().filter(|&q| labels[q] == to).map(|q| value[q]).sum();
    gain * s / 4.0
}

/// How [`group_subdomains`] picks the parts to merge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupPolicy {
    /// Merge the smallest part (lowest label on ties) into its lowest-index
    /// neighbor.
    #[default]
    SmallestIntoNeighbor,
    /// Merge the adjacent pair whose union lowers `Σλ` the most.
    LeastEnergyPair,
}

/// Merges parts until exactly `target` remain. Labels are compacted in
/// increasing order of the surviving labels.
pub fn group_subdomains(domain: &GridDomain, partition: &Partition, target: usize, policy: GroupPolicy) -> Result<Partition> {
    partition.check_domain(domain)?;
    let big_m = partition.m();
    if target == 0 || target >= big_m {
        return Err(Error::InvalidArgument(format!("cannot group {big_m} parts into {target}")));
    }
    let mut labels = partition.labels().to_vec();
    let mut m = big_m;
    let mut cache: Option<Vec<f64>> = None;
    while m > target {
        let current = Partition::from_raw(domain, labels.clone(), m);
        let (from, into) = match policy {
            GroupPolicy::SmallestIntoNeighbor => {
                let sizes = current.part_sizes();
                let small = (0..m).min_by_key(|&j| (sizes[j], j)).expect("m >= 2");
                let adj = current.adjacency();
                let nbr = adj
                    .iter()
                    .filter_map(|&(a, b)| if a == small { Some(b) } else if b == small { Some(a) } else { None })
                    .min()
                    .unwrap_or(if small == 0 { 1 } else { 0 });
                (small, nbr)
            }
            GroupPolicy::LeastEnergyPair => {
                let cells = current.cells_by_label();
                let lambdas = match cache.take() {
                    Some(l) => l,
                    None => cells
                        .par_iter()
                        .map(|c| solve_part(domain, c.clone(), None, DEFAULT_TOL).map(|p| p.lambda))
                        .collect::<Result<Vec<_>>>()?,
                };
                let mut pairs: Vec<(usize, usize)> = current.adjacency().into_iter().collect();
                if pairs.is_empty() {
                    pairs.push((0, 1));
                }
                let merged: Vec<f64> = pairs
                    .par_iter()
                    .map(|&(a, b)| {
                        let mut u: Vec<usize> = cells[a].iter().chain(&cells[b]).copied().collect();
                        u.sort_unstable();
                        solve_part(domain, u, None, DEFAULT_TOL).map(|p| p.lambda)
                    })
                    .collect::<Result<_>>()?;
                let (best, _) = pairs
                    .iter()
                    .zip(&merged)
                    .map(|(&(a, b), &lm)| ((a, b), lambdas[a] + lambdas[b] - lm))
                    .fold(((0, 1), f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
                let (a, b) = best;
                let lm = merged[pairs.iter().position(|&p| p == best).unwrap()];
                let mut next: Vec<f64> = lambdas.clone();
                next[a] = lm;
                next.remove(b);
                cache = Some(next);
                (b, a)
            }
        };
        for l in labels.iter_mut() {
            if *l == UNASSIGNED {
                continue;
            }
            let v = *l as usize;
            *l = if v == from {
                (if into > from { into - 1 } else { into }) as u32
            } else if v > from {
                (v - 1) as u32
            } else {
                v as u32
            };
        }
        m -= 1;
    }
    Partition::new(domain, labels, m)
}
