//! Grid-refined first eigenvalues of the unit-area disk and hexagon.

use anyhow::bail;
use rayon::prelude::*;
use spectral_partition::eigen::{first_eigenpair, observed_order, richardson, DEFAULT_TOL};
use spectral_partition::grid::{build_domain, ShapeSpec};

use crate::{disk_reference, fmt_f, UsageError, HEXAGON_REFERENCE};

/// `λ₁·|Ω_h|` on three grids and its extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    /// Cells per unit length, coarse to fine.
    pub resolutions: [usize; 3],
    /// Area-normalized eigenvalues on each grid.
    pub values: [f64; 3],
    /// First-order Richardson value from the two finest grids.
    pub extrapolated: f64,
    pub observed_order: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub disk: Refinement,
    pub hexagon: Refinement,
    pub disk_exact: f64,
}

impl BoundsReport {
    pub fn lambda1_disk(&self) -> f64 {
        self.disk.extrapolated
    }

    pub fn lambda1_hexagon(&self) -> f64 {
        self.hexagon.extrapolated
    }

    pub fn ordering_ok(&self) -> bool {
        self.lambda1_disk() < self.lambda1_hexagon()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, r) in [("disk", &self.disk), ("hexagon", &self.hexagon)] {
            let [a, b, c] = r.resolutions;
            out += &format!("{name}_resolutions: {a} {b} {c}\n");
            out += &format!(
                "{name}_lambda1_area: {} {} {}\n",
                fmt_f(r.values[0]),
                fmt_f(r.values[1]),
                fmt_f(r.values[2])
            );
            out += &format!("{name}_extrapolated: {}\n", fmt_f(r.extrapolated));
            out += &format!("{name}_observed_order: {:.4}\n", r.observed_order);
        }
        out += &format!("disk_exact: {}\n", fmt_f(self.disk_exact));
        out += &format!(
            "disk_relative_error: {:.3e}\n",
            (self.disk.extrapolated - self.disk_exact).abs() / self.disk_exact
        );
        out += &format!("hexagon_reference: {HEXAGON_REFERENCE}\n");
        out += &format!("ordering_ok: {}\n", self.ordering_ok());
        out
    }
}

/// Solves both shapes on grids `resolution/2`, `resolution` and `2·resolution`.
pub fn bounds_report(resolution: usize) -> anyhow::Result<BoundsReport> {
    if resolution < 256 {
        bail!(UsageError(format!("bounds need resolution >= 256, got {resolution}")));
    }
    let resolutions = [resolution / 2, resolution, 2 * resolution];
    let shapes = [ShapeSpec::Disk { area: 1.0 }, ShapeSpec::RegularHexagon { area: 1.0 }];
    let jobs: Vec<(usize, usize)> = (0..2).flat_map(|s| (0..3).map(move |r| (s, r))).collect();
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(s, r)| {
            let d = build_domain(&shapes[s], resolutions[r])?;
            let e = first_eigenpair(&d, &d.full_mask(), DEFAULT_TOL)?;
            Ok(e.lambda1 * d.measured_area())
        })
        .collect::<anyhow::Result<_>>()?;
    let refine = |v: &[f64]| Refinement {
        resolutions,
        values: [v[0], v[1], v[2]],
        extrapolated: richardson(v[1], v[2], 2.0, 1.0),
        observed_order: observed_order(v[0], v[1], v[2], 2.0),
    };
    Ok(BoundsReport { disk: refine(&values[0..3]), hexagon: refine(&values[3..6]), disk_exact: disk_reference() })
}
