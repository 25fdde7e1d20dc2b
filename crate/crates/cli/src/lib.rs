//! Driver for the `specpart` binary: configuration, sweeps over `m`, bound
//! reports, tilings, the cut-and-glue audit, and the files they write.

pub mod bounds;
pub mod commands;
pub mod config;
pub mod sweep;
pub mod svg;

use std::fmt;
use std::path::Path;

use spectral_partition::Error;

/// Mean first eigenvalue of the unit-area regular hexagon, extrapolated from
/// grids with 256, 512 and 1024 cells per unit length.
pub const HEXAGON_REFERENCE: f64 = 18.590;

/// `π j₀₁²`, the first eigenvalue of the unit-area disk.
pub fn disk_reference() -> f64 {
    std::f64::consts::PI * spectral_partition::BESSEL_J0_FIRST_ZERO.powi(2)
}

/// Bad flags, config or missing sections.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// 2 for numerical failures, 1 for everything else.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<Error>(),
            Some(
                Error::NoConvergence { .. }
                    | Error::Discretization(_)
                    | Error::ZeroFunction
                    | Error::EmptySubdomain
                    | Error::EmptyPart { .. }
            )
        )
    });
    if numerical {
        2
    } else {
        1
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents).map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))
}

/// Fixed-precision float for CSV and report files.
pub(crate) fn fmt_f(x: f64) -> String {
    format!("{x:.10}")
}

pub(crate) fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, fmt_f)
}
