//! Explicit partitions that bound `l_m¹` from above: scaled copies of a
//! unit-square partition, hexagonal tilings and dyadic cube fillings.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::grid::{build_domain, DyadicCover, GridDomain, ShapeSpec};
use crate::partition::{l1_energy, Partition, UNASSIGNED};
use crate::{Error, Result};

/// Clipped hexagon pieces smaller than this fraction of a full hexagon are
/// merged into a neighbor.
pub const SLIVER_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TilingKind {
    SquareCopies { k: usize },
    Hexagon { cell_area: f64 },
    CubeFill { n: usize, t: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TilingSpec {
    pub kind: TilingKind,
    /// Unit-square partition to copy (square copies only).
    pub base_partition: Option<Partition>,
}

impl TilingSpec {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            TilingKind::SquareCopies { k } if k == 0 => Err(Error::InvalidArgument("k must be at least 1".into())),
            TilingKind::Hexagon { cell_area } if !(cell_area > 0.0 && cell_area.is_finite()) => {
                Err(Error::InvalidArgument(format!("hexagon cell area {cell_area} must be positive")))
            }
            TilingKind::CubeFill { n, .. } if n == 0 => Err(Error::InvalidArgument("n must be at least 1".into())),
            _ => Ok(()),
        }
    }
}

/// Splits the unit square into `k²` subsquares and places in each a copy of
/// `base` shrunk by `1/k`. Copy `c = bj·k + bi` (row-major over subsquares)
/// carries labels `c·m .. (c+1)·m`. Each coarse cell takes the majority
/// label of the `k × k` fine cells it stands for, lowest label on ties.
pub fn tile_square_copies(domain: &GridDomain, base: &Partition, k: usize) -> Result<Partition> {
    base.check_domain(domain)?;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let n = domain.nx();
    if domain.ny() != n || domain.inside_count() != n * n {
        return Err(Error::InvalidArgument("square copies need the full unit-square grid".into()));
    }
    if n % k != 0 {
        return Err(Error::InvalidArgument(format!("resolution {n} is not divisible by k = {k}")));
    }
    let m = base.m();
    let s = n / k;
    let mut labels = vec![UNASSIGNED; n * n];
    let mut votes = vec![0usize; m];
    for bj in 0..k {
        for bi in 0..k {
            let copy = bj * k + bi;
            for b in 0..s {
                for a in 0..s {
                    votes.iter_mut().for_each(|v| *v = 0);
                    for dj in 0..k {
                        for di in 0..k {
                            let l = base.labels()[(b * k + dj) * n + a * k + di];
                            votes[l as usize] += 1;
                        }
                    }
                    let winner = (0..m).max_by_key(|&l| (votes[l], std::cmp::Reverse(l))).expect("m >= 1");
                    labels[(bj * s + b) * n + bi * s + a] = (copy * m + winner) as u32;
                }
            }
        }
    }
    let out = Partition::new(domain, labels, m * k * k)?;
    if let Err(Error::EmptyPart { label }) = out.check_nonempty() {
        return Err(Error::Discretization(format!(
            "base part {} vanishes at 1/{k} scale",
            label % m
        )));
    }
    Ok(out)
}

/// Result of [`hexagon_tiling_partition`].
#[derive(Debug, Clone)]
pub struct HexTiling {
    pub partition: Partition,
    /// False when sliver merging left fewer than the requested number of
    /// parts; `partition` then has that smaller count.
    pub exact: bool,
    /// Area of a full hexagon, `|Ω|/m`.
    pub cell_area: f64,
    /// Clipped pieces before any merging.
    pub raw_parts: usize,
}

/// Flat-top hexagonal tiling with hexagons of area `|Ω|/m`, one of them
/// centered at the centroid of the inside cells, clipped to the domain.
/// Pieces are labelled bottom to top, then left to right. Every piece below
/// [`SLIVER_FRACTION`] of a hexagon joins its lowest-label neighbor that is
/// not itself a sliver. If more than `m` parts remain, the smallest part
/// (lowest label on ties) repeatedly joins its largest neighbor (lowest label
/// on ties); if fewer remain, they are returned with `exact = false`.
pub fn hexagon_tiling_partition(domain: &GridDomain, m: usize) -> Result<HexTiling> {
    if m < 4 {
        return Err(Error::InvalidArgument(format!("hexagon tiling needs m >= 4, got {m}")));
    }
    if m > domain.inside_count() {
        return Err(Error::InvalidArgument(format!("m = {m} exceeds the number of cells")));
    }
    let cell_area = domain.measured_area() / m as f64;
    let raw = hex_pieces(domain, cell_area);
    let raw_parts = raw.count;
    let mut pieces = raw;
    pieces.merge_slivers(SLIVER_FRACTION * cell_area / domain.cell_area());
    let exact = pieces.live() >= m;
    pieces.merge_smallest(m);
    let (labels, count) = pieces.labels();
    let partition = Partition::new(domain, labels, count)?;
    Ok(HexTiling { partition, exact, cell_area, raw_parts })
}

/// [`hexagon_tiling_partition`] with `m = round(|Ω| / cell_area)`.
pub fn hexagon_tiling_with_area(domain: &GridDomain, cell_area: f64) -> Result<HexTiling> {
    if !(cell_area > 0.0) {
        return Err(Error::InvalidArgument(format!("hexagon cell area {cell_area} must be positive")));
    }
    let m = (domain.measured_area() / cell_area).round() as usize;
    hexagon_tiling_partition(domain, m)
}

/// Clipped pieces with merge bookkeeping: a merged piece lives on under the
/// label of the piece it joined.
struct Pieces {
    raw: Vec<u32>,
    count: usize,
    size: Vec<usize>,
    adj: Vec<BTreeSet<usize>>,
    root: Vec<usize>,
}

impl Pieces {
    fn new(domain: &GridDomain, raw: Vec<u32>, count: usize) -> Self {
        let mut size = vec![0usize; count];
        let mut adj = vec![BTreeSet::new(); count];
        for k in domain.inside_indices() {
            let a = raw[k] as usize;
            size[a] += 1;
            for q in domain.neighbors(k).into_iter().flatten() {
                let b = raw[q];
                if b != UNASSIGNED && b as usize != a {
                    adj[a].insert(b as usize);
                }
            }
        }
        Self { raw, count, size, adj, root: (0..count).collect() }
    }

    fn live(&self) -> usize {
        (0..self.count).filter(|&j| self.root[j] == j).count()
    }

    fn join(&mut self, from: usize, into: usize) {
        self.size[into] += self.size[from];
        self.size[from] = 0;
        for b in std::mem::take(&mut self.adj[from]) {
            self.adj[b].remove(&from);
            if b != into {
                self.adj[b].insert(into);
                self.adj[into].insert(b);
            }
        }
        for r in self.root.iter_mut().filter(|r| **r == from) {
            *r = into;
        }
    }

    fn merge_slivers(&mut self, min_cells: f64) {
        loop {
            let sliver = |j: usize| (self.size[j] as f64) < min_cells;
            let next = (0..self.count).filter(|&j| self.root[j] == j && sliver(j)).find_map(|j| {
                let nbrs = &self.adj[j];
                nbrs.iter().copied().filter(|&b| !sliver(b)).min().or_else(|| nbrs.iter().copied().min()).map(|t| (j, t))
            });
            match next {
                Some((from, into)) => self.join(from, into),
                None => return,
            }
        }
    }

    fn merge_smallest(&mut self, m: usize) {
        while self.live() > m {
            let from = (0..self.count).filter(|&j| self.root[j] == j).min_by_key(|&j| (self.size[j], j)).expect("pieces");
            let into = self.adj[from]
                .iter()
                .copied()
                .max_by_key(|&b| (self.size[b], std::cmp::Reverse(b)))
                .unwrap_or_else(|| (0..self.count).find(|&j| self.root[j] == j && j != from).expect("another piece"));
            self.join(from, into);
        }
    }

    /// Compact labels in the original piece order, and their count.
    fn labels(&self) -> (Vec<u32>, usize) {
        let mut compact = vec![UNASSIGNED; self.count];
        let mut next = 0;
        for j in (0..self.count).filter(|&j| self.root[j] == j) {
            compact[j] = next;
            next += 1;
        }
        let labels = self.raw.iter().map(|&l| if l == UNASSIGNED { UNASSIGNED } else { compact[self.root[l as usize]] }).collect();
        (labels, next as usize)
    }
}

/// Axial coordinates of the flat-top hexagon containing `(x, y)`.
fn hex_of(x: f64, y: f64, a: f64) -> (i64, i64) {
    let q = (2.0 / 3.0) * x / a;
    let r = (-x / 3.0 + 3f64.sqrt() / 3.0 * y) / a;
    let s = -q - r;
    let (mut rq, mut rr, rs) = (q.round(), r.round(), s.round());
    let (dq, dr, ds) = ((rq - q).abs(), (rr - r).abs(), (rs - s).abs());
    if dq > dr && dq > ds {
        rq = -rr - rs;
    } else if dr > ds {
        rr = -rq - rs;
    }
    (rq as i64, rr as i64)
}

/// The clipped hexagons of area `cell_area`.
fn hex_pieces(domain: &GridDomain, cell_area: f64) -> Pieces {
    let a = (2.0 * cell_area / (3.0 * 3f64.sqrt())).sqrt();
    let (mut cx, mut cy) = (0.0, 0.0);
    for k in domain.inside_indices() {
        let (x, y) = domain.center(k);
        cx += x;
        cy += y;
    }
    let n = domain.inside_count() as f64;
    let (cx, cy) = (cx / n, cy / n);
    // (2r + q, q) orders hexagon centers by height, then by column
    let keys: Vec<Option<(i64, i64)>> = (0..domain.len())
        .map(|k| {
            domain.is_inside(k).then(|| {
                let (x, y) = domain.center(k);
                let (q, r) = hex_of(x - cx, y - cy, a);
                (2 * r + q, q)
            })
        })
        .collect();
    let ordered: BTreeSet<(i64, i64)> = keys.iter().flatten().copied().collect();
    let index: HashMap<(i64, i64), u32> = ordered.iter().enumerate().map(|(i, &k)| (k, i as u32)).collect();
    let labels = keys.iter().map(|k| k.map_or(UNASSIGNED, |k| index[&k])).collect();
    Pieces::new(domain, labels, index.len())
}

/// Result of [`cube_fill_partition`].
#[derive(Debug, Clone)]
pub struct CubeFill {
    /// Union of the cubes that received parts.
    pub domain: GridDomain,
    pub partition: Partition,
    pub m: usize,
    /// `((k−1)·n²·l_n¹(Q) + t²·l_t¹(Q)) / (|Q_j|·m²)` from the base values.
    pub bound: f64,
}

/// Fills the first `k−1` inner cubes of `cover` with the `n`-part base
/// partition and the last one with the `t`-part base partition. With `t = 0`
/// the last cube is dropped and the partitioned domain is the union of the
/// first `k−1` cubes. Base partitions live on the unit square at the
/// resolution of one cube (`resolution · side` cells per side).
pub fn cube_fill_partition(
    cover: &DyadicCover,
    base_partitions: &BTreeMap<usize, Partition>,
    n: usize,
    t: usize,
    resolution: usize,
) -> Result<CubeFill> {
    let k = cover.k();
    if k < 2 {
        return Err(Error::InvalidArgument(format!("cube fill needs at least 2 inner cubes, cover has {k}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if t >= k - 1 {
        return Err(Error::InvalidArgument(format!("t = {t} must be below k - 1 = {}", k - 1)));
    }
    let per = resolution as f64 * cover.side();
    if (per - per.round()).abs() > 1e-9 || per < 1.0 {
        return Err(Error::InvalidArgument(format!("resolution {resolution} does not align with level {}", cover.level)));
    }
    let s = per.round() as usize;
    let unit = build_domain(&ShapeSpec::UnitSquare, s)?;
    let base = |count: usize| -> Result<&Partition> {
        let p = base_partitions
            .get(&count)
            .ok_or_else(|| Error::InvalidArgument(format!("no base partition with {count} parts")))?;
        p.check_domain(&unit)?;
        if p.m() != count {
            return Err(Error::InvalidArgument(format!("base partition for {count} has {} parts", p.m())));
        }
        p.check_nonempty()?;
        Ok(p)
    };
    let base_n = base(n)?;
    let base_t = if t > 0 { Some(base(t)?) } else { None };

    let used = if t > 0 { k } else { k - 1 };
    let kept = DyadicCover { level: cover.level, inner: cover.inner[..used].to_vec(), boundary: Vec::new() };
    let domain = build_domain(&ShapeSpec::CubeUnion { cover: kept.clone() }, resolution)?;
    let (i0, j0) = domain.lattice_origin();
    let mut labels = vec![UNASSIGNED; domain.len()];
    for (c, cube) in kept.inner.iter().enumerate() {
        let (src, offset) = if c < k - 1 { (base_n, c * n) } else { (base_t.expect("t > 0"), (k - 1) * n) };
        let (ci, cj) = (cube.ix * s as i64 - i0, cube.iy * s as i64 - j0);
        for b in 0..s {
            for a in 0..s {
                let idx = domain.index((ci + a as i64) as usize, (cj + b as i64) as usize);
                labels[idx] = (offset + src.labels()[b * s + a] as usize) as u32;
            }
        }
    }
    let m = (k - 1) * n + t;
    let partition = Partition::new(&domain, labels, m)?;

    let l_n = l1_energy(&unit, base_n)?.l1_normalized;
    let l_t = match base_t {
        Some(p) => l1_energy(&unit, p)?.l1_normalized,
        None => 0.0,
    };
    let cube_area = cover.side() * cover.side();
    let bound = (((k - 1) * n * n) as f64 * l_n + (t * t) as f64 * l_t) / cube_area / (m * m) as f64;
    Ok(CubeFill { domain, partition, m, bound })
}
