//! Sweep of the optimizer over domains and part counts.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use spectral_partition::constructions::{cube_fill_partition, hexagon_tiling_partition, tile_square_copies};
use spectral_partition::grid::{build_domain, dyadic_approximation, GridDomain, ShapeSpec};
use spectral_partition::io::partition_to_pgm;
use spectral_partition::partition::{l1_energy, optimize_partition, optimize_partition_detailed, OptimizerOptions, Partition, Start};
use spectral_partition::BESSEL_J0_FIRST_ZERO;

use crate::config::{DomainConfig, RunConfig};
use crate::svg::{convergence_svg, Reference};
use crate::{disk_reference, fmt_opt, write_file, HEXAGON_REFERENCE};

pub const SWEEP_HEADER: &str = "# specpart sweep v1";
pub const SWEEP_COLUMNS: &str =
    "domain_id,m,sum_lambda,l1_normalized,best_seed,start,construction_bound,construction,min_fk_ratio,error";
pub const TIMINGS_HEADER: &str = "# specpart timings v1";

/// Smallest cube side, in cells, used for cube-fill bounds.
pub const MIN_CUBE_CELLS: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub domain_id: String,
    pub m: usize,
    pub sum_lambda: Option<f64>,
    pub l1_normalized: Option<f64>,
    pub best_seed: Option<u64>,
    pub start: Option<Start>,
    /// Smallest value among the explicit constructions available at this `m`.
    pub construction_bound: Option<f64>,
    pub construction: Option<String>,
    /// `min_j λ₁(Ω_j)·|Ω_j| / (π j₀₁²)`.
    pub min_fk_ratio: Option<f64>,
    pub wall_ms: u128,
    pub error: Option<String>,
}

impl SweepRecord {
    /// `l1_normalized ≤ construction_bound + 1e-9`, when both exist.
    pub fn bound_ok(&self) -> Option<bool> {
        Some(self.l1_normalized? <= self.construction_bound? + 1e-9)
    }

    pub fn csv_row(&self) -> String {
        let start = match self.start {
            Some(Start::Lattice) => "lattice",
            Some(Start::Random) => "random",
            None => "",
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.domain_id,
            self.m,
            fmt_opt(self.sum_lambda),
            fmt_opt(self.l1_normalized),
            self.best_seed.map_or_else(String::new, |s| s.to_string()),
            start,
            fmt_opt(self.construction_bound),
            self.construction.as_deref().unwrap_or(""),
            fmt_opt(self.min_fk_ratio),
            self.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
        )
    }
}

pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut s = format!("{SWEEP_HEADER}\n{SWEEP_COLUMNS}\n");
    for r in records {
        s += &r.csv_row();
        s.push('\n');
    }
    s
}

pub fn timings_csv(records: &[SweepRecord]) -> String {
    let mut s = format!("{TIMINGS_HEADER}\ndomain_id,m,wall_ms\n");
    for r in records {
        s += &format!("{},{},{}\n", r.domain_id, r.m, r.wall_ms);
    }
    s
}

/// Named values of the explicit partitions available for `m` parts.
pub fn construction_values(
    shape: &ShapeSpec,
    domain: &GridDomain,
    m: usize,
    seed: u64,
    opts: &OptimizerOptions,
) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    let k = (m as f64).sqrt().round() as usize;
    if *shape == ShapeSpec::UnitSquare && k * k == m && domain.nx() % k == 0 {
        if let Ok(r) = tile_square_copies(domain, &Partition::whole(domain), k).and_then(|p| l1_energy(domain, &p)) {
            out.push((format!("square_copies_k{k}"), r.l1_normalized));
        }
    }
    if m >= 4 {
        if let Ok(hex) = hexagon_tiling_partition(domain, m) {
            if hex.exact {
                if let Ok(r) = l1_energy(domain, &hex.partition) {
                    out.push(("hexagon".into(), r.l1_normalized));
                }
            }
        }
    }
    if *shape != ShapeSpec::UnitSquare {
        if let Some(bound) = cube_fill_value(domain, m, seed, opts) {
            out.push(("cube_fill".into(), bound));
        }
    }
    out
}

/// Finest dyadic level whose cubes span at least [`MIN_CUBE_CELLS`] cells.
pub fn cube_level(resolution: usize) -> Option<u32> {
    let ratio = resolution / MIN_CUBE_CELLS;
    (ratio >= 2).then(|| ratio.ilog2())
}

fn cube_fill_value(domain: &GridDomain, m: usize, seed: u64, opts: &OptimizerOptions) -> Option<f64> {
    let res = domain.resolution();
    let level = cube_level(res)?;
    let cover = dyadic_approximation(domain, level).ok()?;
    let k = cover.k();
    if k < 2 {
        return None;
    }
    let (n, t) = (m / (k - 1), m % (k - 1));
    if n == 0 {
        return None;
    }
    let per = res >> level;
    let base_domain = build_domain(&ShapeSpec::UnitSquare, per).ok()?;
    let mut bases = BTreeMap::new();
    for parts in [n, t] {
        if parts == 0 || bases.contains_key(&parts) {
            continue;
        }
        let p = if parts == 1 {
            Partition::whole(&base_domain)
        } else {
            optimize_partition(&base_domain, parts, seed, opts).ok()?.0
        };
        bases.insert(parts, p);
    }
    cube_fill_partition(&cover, &bases, n, t, res).ok().map(|f| f.bound)
}

fn sweep_one(dc: &DomainConfig, domain: &GridDomain, m: usize, cfg: &RunConfig) -> (SweepRecord, Option<Partition>) {
    let t0 = Instant::now();
    let mut rec = SweepRecord {
        domain_id: dc.id.clone(),
        m,
        sum_lambda: None,
        l1_normalized: None,
        best_seed: None,
        start: None,
        construction_bound: None,
        construction: None,
        min_fk_ratio: None,
        wall_ms: 0,
        error: None,
    };
    let mut partition = None;
    match optimize_partition_detailed(domain, m, cfg.seed, &cfg.optimizer) {
        Ok(out) => {
            rec.sum_lambda = Some(out.report.sum_lambda);
            rec.l1_normalized = Some(out.report.l1_normalized);
            rec.best_seed = Some(out.best_seed);
            rec.start = out.restarts.iter().find(|r| r.seed == out.best_seed).map(|r| r.start);
            let fk = std::f64::consts::PI * BESSEL_J0_FIRST_ZERO * BESSEL_J0_FIRST_ZERO;
            rec.min_fk_ratio = out
                .partition
                .part_sizes()
                .iter()
                .zip(&out.report.per_part_lambda)
                .map(|(&n, &l)| l * n as f64 * domain.cell_area() / fk)
                .reduce(f64::min);
            partition = Some(out.partition);
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    let best = construction_values(&dc.shape, domain, m, cfg.seed, &cfg.optimizer)
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1));
    if let Some((name, v)) = best {
        rec.construction = Some(name);
        rec.construction_bound = Some(v);
    }
    rec.wall_ms = t0.elapsed().as_millis();
    (rec, partition)
}

/// Runs every `(domain, m)` pair; records are in config order.
pub fn sweep(cfg: &RunConfig) -> anyhow::Result<Vec<(SweepRecord, Option<Partition>)>> {
    let domains: Vec<GridDomain> =
        cfg.domains.iter().map(|d| build_domain(&d.shape, cfg.resolution)).collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, usize)> =
        (0..domains.len()).flat_map(|d| cfg.m.iter().map(move |&m| (d, m))).collect();
    Ok(jobs.par_iter().map(|&(d, m)| sweep_one(&cfg.domains[d], &domains[d], m, cfg)).collect())
}

/// Runs the sweep and writes `sweep.csv`, `timings.csv`, `convergence.svg`
/// and `<domain>/partition_m<M>.pgm`.
pub fn run_sweep(cfg: &RunConfig, out: &Path) -> anyhow::Result<Vec<SweepRecord>> {
    let results = sweep(cfg)?;
    let records: Vec<SweepRecord> = results.iter().map(|(r, _)| r.clone()).collect();
    write_file(&out.join("sweep.csv"), &sweep_csv(&records))?;
    write_file(&out.join("timings.csv"), &timings_csv(&records))?;
    for (rec, p) in &results {
        if let Some(p) = p {
            write_file(&out.join(&rec.domain_id).join(format!("partition_m{}.pgm", rec.m)), &partition_to_pgm(p)?)?;
        }
    }
    let mut series: BTreeMap<String, Vec<(usize, f64)>> = BTreeMap::new();
    for r in &records {
        if let Some(l) = r.l1_normalized {
            series.entry(r.domain_id.clone()).or_default().push((r.m, l));
        }
    }
    series.values_mut().for_each(|v| v.sort_by_key(|p| p.0));
    let refs = [
        Reference { label: "disk", value: disk_reference() },
        Reference { label: "hexagon", value: HEXAGON_REFERENCE },
    ];
    write_file(&out.join("convergence.svg"), &convergence_svg(&series, &refs))?;
    Ok(records)
}
