//! The `eigen`, `partition`, `tile` and `glue-verify` subcommands.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context};
use spectral_partition::constructions::{cube_fill_partition, hexagon_tiling_with_area, tile_square_copies, TilingKind};
use spectral_partition::eigen::{first_eigenpair, EigenResult, DEFAULT_TOL};
use spectral_partition::glue::{run_glue, GlueRun, StripConfig};
use spectral_partition::grid::{build_domain, dyadic_approximation, GridDomain, ShapeSpec};
use spectral_partition::io::{field_to_pgm, partition_from_pgm, partition_to_pgm};
use spectral_partition::partition::{l1_energy, l1_energy_with_eigs, optimize_partition, optimize_partition_detailed, Partition};

use crate::config::{RunConfig, TileConfig};
use crate::sweep::cube_level;
use crate::{fmt_f, fmt_opt, write_file, UsageError};

fn domains(cfg: &RunConfig) -> anyhow::Result<Vec<GridDomain>> {
    cfg.domains
        .iter()
        .map(|d| build_domain(&d.shape, cfg.resolution).with_context(|| format!("building domain {:?}", d.id)))
        .collect()
}

/// First eigenpair of every domain: `eigen.csv` and `<domain>/eigenfunction.pgm`.
pub fn run_eigen(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let mut csv = String::from("# specpart eigen v1\ndomain_id,resolution,cells,area,lambda1,lambda1_area,iterations,residual,pgm_scale\n");
    for (dc, d) in cfg.domains.iter().zip(domains(cfg)?) {
        let e = first_eigenpair(&d, &d.full_mask(), DEFAULT_TOL)?;
        let (pgm, scale) = field_to_pgm(&d, &e.eigfn)?;
        write_file(&out.join(&dc.id).join("eigenfunction.pgm"), &pgm)?;
        csv += &format!(
            "{},{},{},{},{},{},{},{:.3e},{}\n",
            dc.id,
            cfg.resolution,
            d.inside_count(),
            fmt_f(d.measured_area()),
            fmt_f(e.lambda1),
            fmt_f(e.lambda1 * d.measured_area()),
            e.iterations,
            e.residual,
            fmt_f(scale)
        );
    }
    write_file(&out.join("eigen.csv"), &csv)
}

/// Optimized partitions for every domain and `m`: `partitions.csv` and
/// `<domain>/partition_m<M>.pgm`.
pub fn run_partition(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let mut csv = String::from("# specpart partition v1\ndomain_id,m,sum_lambda,l1_normalized,best_seed,accepted_steps\n");
    for (dc, d) in cfg.domains.iter().zip(domains(cfg)?) {
        for &m in &cfg.m {
            let o = optimize_partition_detailed(&d, m, cfg.seed, &cfg.optimizer)
                .with_context(|| format!("optimizing {} parts on {:?}", m, dc.id))?;
            write_file(&out.join(&dc.id).join(format!("partition_m{m}.pgm")), &partition_to_pgm(&o.partition)?)?;
            csv += &format!(
                "{},{},{},{},{},{}\n",
                dc.id,
                m,
                fmt_f(o.report.sum_lambda),
                fmt_f(o.report.l1_normalized),
                o.best_seed,
                o.iterations()
            );
        }
    }
    write_file(&out.join("partitions.csv"), &csv)
}

/// One explicit tiling on a domain.
#[derive(Debug, Clone)]
pub struct TileOutcome {
    pub domain: GridDomain,
    pub partition: Partition,
    pub l1_normalized: f64,
    /// Predicted value from the base partitions (cube fill only).
    pub bound: Option<f64>,
    /// `false` when a hexagon tiling could not reach the requested count.
    pub exact: bool,
}

fn base_partition(domain: &GridDomain, parts: usize, cfg: &RunConfig) -> anyhow::Result<Partition> {
    Ok(if parts == 1 { Partition::whole(domain) } else { optimize_partition(domain, parts, cfg.seed, &cfg.optimizer)?.0 })
}

pub fn tile_domain(domain: &GridDomain, tile: &TileConfig, cfg: &RunConfig) -> anyhow::Result<TileOutcome> {
    let (domain, partition, bound, exact) = match tile.kind {
        TilingKind::SquareCopies { k } => {
            if *domain.shape() != ShapeSpec::UnitSquare {
                bail!(UsageError("square copies need the unit square".into()));
            }
            let base = base_partition(domain, tile.base_m.unwrap_or(1), cfg)?;
            (domain.clone(), tile_square_copies(domain, &base, k)?, None, true)
        }
        TilingKind::Hexagon { cell_area } => {
            let h = hexagon_tiling_with_area(domain, cell_area)?;
            (domain.clone(), h.partition, None, h.exact)
        }
        TilingKind::CubeFill { n, t } => {
            let level = match tile.level.or_else(|| cube_level(cfg.resolution)) {
                Some(l) => l,
                None => bail!(UsageError(format!("no dyadic level fits resolution {}", cfg.resolution))),
            };
            let cover = dyadic_approximation(domain, level)?;
            let per = ((cover.side() * cfg.resolution as f64).round()) as usize;
            let base_domain = build_domain(&ShapeSpec::UnitSquare, per)?;
            let mut bases = BTreeMap::new();
            for parts in [n, t] {
                if parts > 0 && !bases.contains_key(&parts) {
                    bases.insert(parts, base_partition(&base_domain, parts, cfg)?);
                }
            }
            let fill = cube_fill_partition(&cover, &bases, n, t, cfg.resolution)?;
            (fill.domain, fill.partition, Some(fill.bound), true)
        }
    };
    let l1 = l1_energy(&domain, &partition)?.l1_normalized;
    Ok(TileOutcome { domain, partition, l1_normalized: l1, bound, exact })
}

/// Tiling of every domain: `tile.csv` and `<domain>/tile.pgm`.
pub fn run_tile(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let Some(tile) = &cfg.tile else {
        bail!(UsageError("the tile command needs a [tile] section".into()));
    };
    let mut csv = String::from("# specpart tile v1\ndomain_id,kind,m,l1_normalized,bound,exact\n");
    let kind = match tile.kind {
        TilingKind::SquareCopies { .. } => "square_copies",
        TilingKind::Hexagon { .. } => "hexagon",
        TilingKind::CubeFill { .. } => "cube_fill",
    };
    for (dc, d) in cfg.domains.iter().zip(domains(cfg)?) {
        let t = tile_domain(&d, tile, cfg).with_context(|| format!("tiling {:?}", dc.id))?;
        write_file(&out.join(&dc.id).join("tile.pgm"), &partition_to_pgm(&t.partition)?)?;
        csv += &format!(
            "{},{},{},{},{},{}\n",
            dc.id,
            kind,
            t.partition.m(),
            fmt_f(t.l1_normalized),
            fmt_opt(t.bound),
            t.exact
        );
    }
    write_file(&out.join("tile.csv"), &csv)
}

/// Audit of one partition.
pub fn glue_one(domain: &GridDomain, partition: &Partition, strip: &StripConfig) -> anyhow::Result<(GlueRun, Vec<EigenResult>)> {
    let (_, eigs) = l1_energy_with_eigs(domain, partition, DEFAULT_TOL)?;
    let run = run_glue(domain, partition, &eigs, strip)?;
    Ok((run, eigs))
}

/// Cut-and-glue audit of the loaded partition, or of optimized partitions
/// for every domain and `m`: `chain_report.txt` and `chain_parts.csv`.
pub fn run_glue_verify(cfg: &RunConfig, out: &Path) -> anyhow::Result<Vec<GlueRun>> {
    let Some(strip) = &cfg.strip else {
        bail!(UsageError("glue-verify needs a [strip] section".into()));
    };
    let doms = domains(cfg)?;
    let mut jobs: Vec<(String, GridDomain, Partition)> = Vec::new();
    if let Some(path) = &cfg.partition_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read partition {}: {e}", path.display())))?;
        let p = partition_from_pgm(&doms[0], &text).with_context(|| format!("loading {}", path.display()))?;
        jobs.push((cfg.domains[0].id.clone(), doms[0].clone(), p));
    } else {
        for (dc, d) in cfg.domains.iter().zip(&doms) {
            for &m in &cfg.m {
                let (p, _) = optimize_partition(d, m, cfg.seed, &cfg.optimizer)
                    .with_context(|| format!("optimizing {} parts on {:?}", m, dc.id))?;
                jobs.push((dc.id.clone(), d.clone(), p));
            }
        }
    }
    let mut report = String::new();
    let mut parts = String::from("domain_id,m,label,class,lambda1,r,tau1,tau2,assignment\n");
    let mut runs = Vec::new();
    for (id, d, p) in &jobs {
        let (run, _) = glue_one(d, p, strip).with_context(|| format!("verifying {:?} with {} parts", id, p.m()))?;
        if !report.is_empty() {
            report.push('\n');
        }
        report += &format!("domain_id: {id}\n{}", run.report.to_text());
        for line in run.report.to_csv().lines().skip(1) {
            parts += &format!("{id},{},{line}\n", p.m());
        }
        runs.push(run);
    }
    write_file(&out.join("chain_report.txt"), &report)?;
    write_file(&out.join("chain_parts.csv"), &parts)?;
    Ok(runs)
}

/// Refined disk and hexagon eigenvalues: `bounds.txt`.
pub fn run_bounds(resolution: usize, out: &Path) -> anyhow::Result<crate::bounds::BoundsReport> {
    let report = crate::bounds::bounds_report(resolution)?;
    write_file(&out.join("bounds.txt"), &report.to_text())?;
    Ok(report)
}
