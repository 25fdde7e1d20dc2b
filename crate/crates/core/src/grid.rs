//! Uniform-grid discretizations of planar domains.
//!
//! Cells live on the lattice `[i·h, (i+1)·h] × [j·h, (j+1)·h]` anchored at the
//! origin, so dyadic squares of side `2^-ℓ` are exact cell unions whenever
//! the resolution `1/h` is a multiple of `2^ℓ`. A cell belongs to the domain
//! when its center lies strictly inside the shape.

use std::collections::hash_map::DefaultHasher;
use std::f64::consts::PI;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Smallest accepted resolution (cells per unit length).
pub const MIN_RESOLUTION: usize = 32;

/// Relative tolerance between measured and requested area.
pub const AREA_TOLERANCE: f64 = 0.02;

const LATTICE_EPS: f64 = 1e-9;

/// Generating shape of a domain.
///
/// Disks and hexagons are centered at `(1/2, 1/2)`, rectangles occupy
/// `[0, a] × [0, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ShapeSpec {
    UnitSquare,
    Disk { area: f64 },
    RegularHexagon { area: f64 },
    Rectangle { a: f64, b: f64 },
    Polygon { vertices: Vec<[f64; 2]>, area: Option<f64> },
    CubeUnion { cover: DyadicCover },
}

impl ShapeSpec {
    /// Area of the continuum shape.
    pub fn area(&self) -> f64 {
        match self {
            ShapeSpec::UnitSquare => 1.0,
            ShapeSpec::Disk { area } | ShapeSpec::RegularHexagon { area } => *area,
            ShapeSpec::Rectangle { a, b } => a * b,
            ShapeSpec::Polygon { vertices, area } => area.unwrap_or_else(|| shoelace(vertices).abs()),
            ShapeSpec::CubeUnion { cover } => cover.inner_area(),
        }
    }

    /// Short human-readable tag.
    pub fn tag(&self) -> String {
        match self {
            ShapeSpec::UnitSquare => "unit_square".into(),
            ShapeSpec::Disk { area } => format!("disk(area={area})"),
            ShapeSpec::RegularHexagon { area } => format!("regular_hexagon(area={area})"),
            ShapeSpec::Rectangle { a, b } => format!("rectangle({a}x{b})"),
            ShapeSpec::Polygon { vertices, .. } => format!("polygon({} vertices)", vertices.len()),
            ShapeSpec::CubeUnion { cover } => {
                format!("cube_union(level={}, cubes={})", cover.level, cover.inner.len())
            }
        }
    }
}

/// Signed area of a closed polygon.
fn shoelace(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let [x0, y0] = v[i];
            let [x1, y1] = v[(i + 1) % n];
            x0 * y1 - x1 * y0
        })
        .sum::<f64>()
        / 2.0
}

fn polygon_centroid(v: &[[f64; 2]]) -> [f64; 2] {
    let a = shoelace(v);
    let n = v.len();
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let [x0, y0] = v[i];
        let [x1, y1] = v[(i + 1) % n];
        let cross = x0 * y1 - x1 * y0;
        cx += (x0 + x1) * cross;
        cy += (y0 + y1) * cross;
    }
    [cx / (6.0 * a), cy / (6.0 * a)]
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    }
    fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
        p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
    }
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

fn is_simple(v: &[[f64; 2]]) -> bool {
    let n = v.len();
    for i in 0..n {
        for j in (i + 1)..n {
            // adjacent edges share a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

fn dist_to_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let (qx, qy) = (a[0] + t * dx, a[1] + t * dy);
    ((p[0] - qx).powi(2) + (p[1] - qy).powi(2)).sqrt()
}

/// Strict point-in-polygon: points on an edge are outside.
fn strictly_inside_polygon(p: [f64; 2], v: &[[f64; 2]]) -> bool {
    let n = v.len();
    let mut inside = false;
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        if dist_to_segment(p, a, b) < 1e-12 {
            return false;
        }
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn hexagon_vertices(area: f64, center: [f64; 2]) -> Vec<[f64; 2]> {
    let r = (2.0 * area / (3.0 * 3f64.sqrt())).sqrt();
    (0..6)
        .map(|k| {
            let t = k as f64 * PI / 3.0;
            [center[0] + r * t.cos(), center[1] + r * t.sin()]
        })
        .collect()
}

/// Resolved geometry used for the membership test.
enum Geometry {
    Box { x1: f64, y1: f64 },
    Disk { c: [f64; 2], r: f64 },
    Polygon(Vec<[f64; 2]>),
    Cubes(Vec<DyadicCube>),
}

impl Geometry {
    fn contains(&self, p: [f64; 2]) -> bool {
        match self {
            Geometry::Box { x1, y1 } => p[0] > 0.0 && p[0] < *x1 && p[1] > 0.0 && p[1] < *y1,
            Geometry::Disk { c, r } => (p[0] - c[0]).hypot(p[1] - c[1]) < *r,
            Geometry::Polygon(v) => strictly_inside_polygon(p, v),
            Geometry::Cubes(cubes) => cubes.iter().any(|q| q.contains(p)),
        }
    }

    fn bbox(&self) -> [f64; 4] {
        match self {
            Geometry::Box { x1, y1 } => [0.0, 0.0, *x1, *y1],
            Geometry::Disk { c, r } => [c[0] - r, c[1] - r, c[0] + r, c[1] + r],
            Geometry::Polygon(v) => v.iter().fold(
                [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY],
                |b, p| [b[0].min(p[0]), b[1].min(p[1]), b[2].max(p[0]), b[3].max(p[1])],
            ),
            Geometry::Cubes(cubes) => cubes.iter().fold(
                [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY],
                |b, q| {
                    let [x0, y0, x1, y1] = q.bounds();
                    [b[0].min(x0), b[1].min(y0), b[2].max(x1), b[3].max(y1)]
                },
            ),
        }
    }
}

fn resolve(shape: &ShapeSpec, resolution: usize) -> Result<Geometry> {
    let positive = |v: f64, what: &str| {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidShape(format!("{what} must be positive, got {v}")))
        }
    };
    Ok(match shape {
        ShapeSpec::UnitSquare => Geometry::Box { x1: 1.0, y1: 1.0 },
        ShapeSpec::Disk { area } => {
            positive(*area, "disk area")?;
            Geometry::Disk { c: [0.5, 0.5], r: (area / PI).sqrt() }
        }
        ShapeSpec::RegularHexagon { area } => {
            positive(*area, "hexagon area")?;
            Geometry::Polygon(hexagon_vertices(*area, [0.5, 0.5]))
        }
        ShapeSpec::Rectangle { a, b } => {
            positive(*a, "rectangle width")?;
            positive(*b, "rectangle height")?;
            Geometry::Box { x1: *a, y1: *b }
        }
        ShapeSpec::Polygon { vertices, area } => {
            if vertices.len() < 3 {
                return Err(Error::InvalidShape("polygon needs at least 3 vertices".into()));
            }
            let a0 = shoelace(vertices).abs();
            if a0 < 1e-14 {
                return Err(Error::InvalidShape("polygon has zero area".into()));
            }
            if !is_simple(vertices) {
                return Err(Error::InvalidShape("polygon is self-intersecting".into()));
            }
            let mut v = vertices.clone();
            if let Some(target) = area {
                positive(*target, "polygon area")?;
                let c = polygon_centroid(&v);
                let s = (target / a0).sqrt();
                for p in &mut v {
                    *p = [c[0] + s * (p[0] - c[0]), c[1] + s * (p[1] - c[1])];
                }
            }
            Geometry::Polygon(v)
        }
        ShapeSpec::CubeUnion { cover } => {
            if cover.inner.is_empty() {
                return Err(Error::InvalidShape("cube union has no cubes".into()));
            }
            let cells = resolution as f64 * cover.side();
            if (cells - cells.round()).abs() > LATTICE_EPS {
                return Err(Error::TooCoarse {
                    resolution,
                    reason: format!("dyadic level {} does not align with the grid", cover.level),
                });
            }
            Geometry::Cubes(cover.inner.clone())
        }
    })
}

/// Opaque fingerprint tying masks and partitions to their domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DomainId(pub u64);

/// Uniform-grid discretization of a planar domain.
#[derive(Debug, Clone)]
pub struct GridDomain {
    nx: usize,
    ny: usize,
    h: f64,
    i0: i64,
    j0: i64,
    inside: Vec<bool>,
    inside_count: usize,
    shape: ShapeSpec,
    id: DomainId,
}

/// Builds the grid discretization of `shape` with `resolution` cells per unit length.
pub fn build_domain(shape: &ShapeSpec, resolution: usize) -> Result<GridDomain> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::TooCoarse { resolution, reason: format!("minimum is {MIN_RESOLUTION}") });
    }
    let geom = resolve(shape, resolution)?;
    let h = 1.0 / resolution as f64;
    let [x0, y0, x1, y1] = geom.bbox();
    let i0 = (x0 / h + LATTICE_EPS).floor() as i64;
    let j0 = (y0 / h + LATTICE_EPS).floor() as i64;
    let i1 = (x1 / h - LATTICE_EPS).ceil() as i64;
    let j1 = (y1 / h - LATTICE_EPS).ceil() as i64;
    let nx = ((i1 - i0) as usize).max(2);
    let ny = ((j1 - j0) as usize).max(2);
    let mut inside = vec![false; nx * ny];
    for j in 0..ny {
        let y = (j0 as f64 + j as f64 + 0.5) * h;
        for i in 0..nx {
            let x = (i0 as f64 + i as f64 + 0.5) * h;
            inside[j * nx + i] = geom.contains([x, y]);
        }
    }
    let domain = GridDomain::from_parts(nx, ny, h, i0, j0, inside, shape.clone())?;
    let target = shape.area();
    let measured = domain.measured_area();
    if (measured - target).abs() > AREA_TOLERANCE * target {
        return Err(Error::TooCoarse {
            resolution,
            reason: format!("measured area {measured:.5} deviates from {target:.5} by more than 2%"),
        });
    }
    Ok(domain)
}

impl GridDomain {
    /// Assembles a domain from an explicit inside mask on the lattice block
    /// starting at cell `(i0, j0)`.
    pub fn from_parts(
        nx: usize,
        ny: usize,
        h: f64,
        i0: i64,
        j0: i64,
        inside: Vec<bool>,
        shape: ShapeSpec,
    ) -> Result<Self> {
        if !(h > 0.0) || nx < 2 || ny < 2 {
            return Err(Error::InvalidArgument(format!("grid {nx}x{ny} with h={h} is degenerate")));
        }
        if inside.len() != nx * ny {
            return Err(Error::InvalidArgument("inside mask has the wrong length".into()));
        }
        let inside_count = inside.iter().filter(|&&b| b).count();
        if inside_count == 0 {
            return Err(Error::TooCoarse {
                resolution: (1.0 / h).round() as usize,
                reason: "no cell center lies inside the shape".into(),
            });
        }
        let mut hasher = DefaultHasher::new();
        (nx, ny, h.to_bits(), i0, j0).hash(&mut hasher);
        inside.hash(&mut hasher);
        let id = DomainId(hasher.finish());
        Ok(Self { nx, ny, h, i0, j0, inside, inside_count, shape, id })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.inside_count == 0
    }

    /// Cell size.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    /// Resolution as cells per unit length.
    pub fn resolution(&self) -> usize {
        (1.0 / self.h).round() as usize
    }

    /// Lattice index of cell `(0, 0)`.
    pub fn lattice_origin(&self) -> (i64, i64) {
        (self.i0, self.j0)
    }

    /// Center of cell `(0, 0)`.
    pub fn origin(&self) -> (f64, f64) {
        ((self.i0 as f64 + 0.5) * self.h, (self.j0 as f64 + 0.5) * self.h)
    }

    pub fn id(&self) -> DomainId {
        self.id
    }

    pub fn shape(&self) -> &ShapeSpec {
        &self.shape
    }

    pub fn inside(&self) -> &[bool] {
        &self.inside
    }

    #[inline]
    pub fn is_inside(&self, idx: usize) -> bool {
        self.inside[idx]
    }

    pub fn inside_count(&self) -> usize {
        self.inside_count
    }

    pub fn measured_area(&self) -> f64 {
        self.inside_count as f64 * self.cell_area()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    /// x coordinate of the centers in column `i`.
    #[inline]
    pub fn col_x(&self, i: usize) -> f64 {
        (self.i0 as f64 + i as f64 + 0.5) * self.h
    }

    /// y coordinate of the centers in row `j`.
    #[inline]
    pub fn row_y(&self, j: usize) -> f64 {
        (self.j0 as f64 + j as f64 + 0.5) * self.h
    }

    #[inline]
    pub fn center(&self, idx: usize) -> (f64, f64) {
        let (i, j) = self.coords(idx);
        (self.col_x(i), self.row_y(j))
    }

    /// West, east, south and north neighbors that exist on the grid.
    #[inline]
    pub fn neighbors(&self, idx: usize) -> [Option<usize>; 4] {
        let (i, j) = self.coords(idx);
        [
            (i > 0).then(|| idx - 1),
            (i + 1 < self.nx).then(|| idx + 1),
            (j > 0).then(|| idx - self.nx),
            (j + 1 < self.ny).then(|| idx + self.nx),
        ]
    }

    /// Indices of all inside cells in row-major order.
    pub fn inside_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.inside.iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| k)
    }

    pub fn full_mask(&self) -> SubdomainMask {
        SubdomainMask { parent: self.id, cells: self.inside.clone(), count: self.inside_count, cell_area: self.cell_area() }
    }

    pub fn empty_mask(&self) -> SubdomainMask {
        SubdomainMask { parent: self.id, cells: vec![false; self.len()], count: 0, cell_area: self.cell_area() }
    }

    /// Mask of the inside cells whose centers satisfy `pred`.
    pub fn mask_where(&self, pred: impl Fn(f64, f64) -> bool) -> SubdomainMask {
        let cells: Vec<bool> = (0..self.len())
            .map(|k| {
                let (x, y) = self.center(k);
                self.inside[k] && pred(x, y)
            })
            .collect();
        SubdomainMask::from_cells_unchecked(self, cells)
    }
}

/// Cell subset of a parent domain.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdomainMask {
    parent: DomainId,
    cells: Vec<bool>,
    count: usize,
    cell_area: f64,
}

impl SubdomainMask {
    /// Validates that `cells` is a subset of the domain's inside cells.
    pub fn new(domain: &GridDomain, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != domain.len() {
            return Err(Error::InvalidArgument("mask length does not match the grid".into()));
        }
        if cells.iter().zip(domain.inside()).any(|(&c, &ins)| c && !ins) {
            return Err(Error::InvalidArgument("mask contains cells outside the domain".into()));
        }
        Ok(Self::from_cells_unchecked(domain, cells))
    }

    /// Mask from a list of cell indices.
    pub fn from_indices(domain: &GridDomain, indices: &[usize]) -> Result<Self> {
        let mut cells = vec![false; domain.len()];
        for &k in indices {
            if k >= cells.len() {
                return Err(Error::InvalidArgument(format!("cell index {k} out of range")));
            }
            cells[k] = true;
        }
        Self::new(domain, cells)
    }

    pub(crate) fn from_cells_unchecked(domain: &GridDomain, cells: Vec<bool>) -> Self {
        let count = cells.iter().filter(|&&b| b).count();
        Self { parent: domain.id(), cells, count, cell_area: domain.cell_area() }
    }

    pub fn parent(&self) -> DomainId {
        self.parent
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    #[inline]
    pub fn contains(&self, idx: usize) -> bool {
        self.cells[idx]
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| k)
    }

    /// Measured area: cell count times `h²`.
    pub fn area(&self) -> f64 {
        self.count as f64 * self.cell_area
    }

    pub fn is_disjoint(&self, other: &SubdomainMask) -> bool {
        !self.cells.iter().zip(&other.cells).any(|(&a, &b)| a && b)
    }

    pub fn is_subset(&self, other: &SubdomainMask) -> bool {
        self.cells.iter().zip(&other.cells).all(|(&a, &b)| !a || b)
    }

    pub fn union(&self, other: &SubdomainMask) -> Result<SubdomainMask> {
        if self.parent != other.parent {
            return Err(Error::DomainMismatch);
        }
        let cells: Vec<bool> = self.cells.iter().zip(&other.cells).map(|(&a, &b)| a || b).collect();
        let count = cells.iter().filter(|&&b| b).count();
        Ok(SubdomainMask { parent: self.parent, cells, count, cell_area: self.cell_area })
    }
}

/// Measured area of a mask.
pub fn area(mask: &SubdomainMask) -> f64 {
    mask.area()
}

/// Axis-aligned dyadic square `[ix·s, (ix+1)·s] × [iy·s, (iy+1)·s]` with `s = 2^-level`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: u32,
    pub ix: i64,
    pub iy: i64,
}

impl DyadicCube {
    pub fn side(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn area(&self) -> f64 {
        self.side() * self.side()
    }

    /// `[x0, y0, x1, y1]`.
    pub fn bounds(&self) -> [f64; 4] {
        let s = self.side();
        [self.ix as f64 * s, self.iy as f64 * s, (self.ix + 1) as f64 * s, (self.iy + 1) as f64 * s]
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let [x0, y0, x1, y1] = self.bounds();
        p[0] > x0 && p[0] < x1 && p[1] > y0 && p[1] < y1
    }
}

/// Inner and boundary dyadic cubes of one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicCover {
    pub level: u32,
    /// Cubes whose cells are all inside, ordered by `(iy, ix)`.
    pub inner: Vec<DyadicCube>,
    /// Cubes with both inside and outside cells, ordered by `(iy, ix)`.
    pub boundary: Vec<DyadicCube>,
}

impl DyadicCover {
    pub fn side(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    /// Number of inner cubes.
    pub fn k(&self) -> usize {
        self.inner.len()
    }

    /// Number of boundary cubes.
    pub fn l(&self) -> usize {
        self.boundary.len()
    }

    pub fn inner_area(&self) -> f64 {
        self.inner.len() as f64 * self.side() * self.side()
    }

    /// Total area of the boundary cubes.
    pub fn tail_area(&self) -> f64 {
        self.boundary.len() as f64 * self.side() * self.side()
    }

    /// True when no dyadic cube of this level fits inside the domain.
    pub fn is_empty_inner(&self) -> bool {
        self.inner.is_empty()
    }
}

/// Classifies the level-`level` dyadic cubes against the inside cells of `domain`.
pub fn dyadic_approximation(domain: &GridDomain, level: u32) -> Result<DyadicCover> {
    let side = (-(level as f64)).exp2();
    if level == 0 || side < 4.0 * domain.h() - LATTICE_EPS {
        return Err(Error::InvalidArgument(format!(
            "dyadic level {level} is not resolvable: side {side} < 4h = {}",
            4.0 * domain.h()
        )));
    }
    let per = side / domain.h();
    if (per - per.round()).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "dyadic level {level} does not align with resolution {}",
            domain.resolution()
        )));
    }
    let per = per.round() as i64;
    let (i0, j0) = domain.lattice_origin();
    let (nx, ny) = (domain.nx() as i64, domain.ny() as i64);
    let cx0 = i0.div_euclid(per);
    let cx1 = (i0 + nx - 1).div_euclid(per);
    let cy0 = j0.div_euclid(per);
    let cy1 = (j0 + ny - 1).div_euclid(per);
    let mut inner = Vec::new();
    let mut boundary = Vec::new();
    for iy in cy0..=cy1 {
        for ix in cx0..=cx1 {
            let mut count = 0i64;
            for lj in (iy * per)..((iy + 1) * per) {
                let j = lj - j0;
                if j < 0 || j >= ny {
                    continue;
                }
                for li in (ix * per)..((ix + 1) * per) {
                    let i = li - i0;
                    if i >= 0 && i < nx && domain.is_inside(domain.index(i as usize, j as usize)) {
                        count += 1;
                    }
                }
            }
            let cube = DyadicCube { level, ix, iy };
            if count == per * per {
                inner.push(cube);
            } else if count > 0 {
                boundary.push(cube);
            }
        }
    }
    Ok(DyadicCover { level, inner, boundary })
}
