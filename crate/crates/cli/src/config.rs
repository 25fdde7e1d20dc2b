//! Run configuration read from a TOML file.
//!
//! ```toml
//! resolution = 256
//! m = [1, 4, 9]
//! seed = 1
//!
//! [[domain]]
//! id = "square"
//! shape = "unit_square"
//!
//! [[domain]]
//! id = "disk"
//! shape = "disk"
//! area = 1.0
//!
//! [optimizer]
//! restarts = 8
//!
//! [strip]
//! gamma_x = 0.5
//! delta = 0.1
//! epsilon = 0.2
//!
//! [output]
//! dir = "out"
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use spectral_partition::constructions::TilingKind;
use spectral_partition::glue::StripConfig;
use spectral_partition::grid::ShapeSpec;
use spectral_partition::partition::OptimizerOptions;

use crate::UsageError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainConfig {
    /// Used in file names and CSV rows.
    pub id: String,
    #[serde(flatten)]
    pub shape: ShapeSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileConfig {
    #[serde(flatten)]
    pub kind: TilingKind,
    /// Parts of the copied base partition (square copies).
    #[serde(default)]
    pub base_m: Option<usize>,
    /// Dyadic level of the cube cover (cube fill); the finest level with
    /// cubes of at least 32 cells per side when absent.
    #[serde(default)]
    pub level: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Cells per unit length.
    pub resolution: usize,
    pub m: Vec<usize>,
    pub seed: u64,
    #[serde(rename = "domain")]
    pub domains: Vec<DomainConfig>,
    pub optimizer: OptimizerOptions,
    pub strip: Option<StripConfig>,
    pub tile: Option<TileConfig>,
    /// Partition (PGM) to verify instead of optimizing, on the first domain.
    pub partition_file: Option<PathBuf>,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            resolution: 256,
            m: vec![1, 2, 4, 9, 16, 25],
            seed: 1,
            domains: vec![
                DomainConfig { id: "square".into(), shape: ShapeSpec::UnitSquare },
                DomainConfig { id: "disk".into(), shape: ShapeSpec::Disk { area: 1.0 } },
            ],
            optimizer: OptimizerOptions::default(),
            strip: None,
            tile: None,
            partition_file: None,
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| UsageError(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text).with_context(|| format!("in {}", path.display()))?;
        if let Some(p) = &cfg.partition_file {
            if p.is_relative() {
                cfg.partition_file = Some(path.parent().unwrap_or(Path::new(".")).join(p));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.resolution < 32 {
            bail!(UsageError(format!("resolution {} is below 32", self.resolution)));
        }
        if self.domains.is_empty() {
            bail!(UsageError("at least one [[domain]] is required".into()));
        }
        let mut seen = BTreeSet::new();
        for d in &self.domains {
            if d.id.is_empty() || !d.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                bail!(UsageError(format!("domain id {:?} must be nonempty and use [A-Za-z0-9_-]", d.id)));
            }
            if !seen.insert(&d.id) {
                bail!(UsageError(format!("duplicate domain id {:?}", d.id)));
            }
        }
        if self.m.contains(&0) {
            bail!(UsageError("m values must be positive".into()));
        }
        if self.optimizer.restarts == 0 {
            bail!(UsageError("optimizer.restarts must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_example_parses() {
        let text = r#"
            resolution = 128
            m = [1, 4]
            seed = 7

            [[domain]]
            id = "square"
            shape = "unit_square"

            [[domain]]
            id = "hex"
            shape = "regular_hexagon"
            area = 1.0

            [optimizer]
            restarts = 3

            [strip]
            delta = 0.2

            [tile]
            kind = "square_copies"
            k = 2

            [output]
            dir = "results"
        "#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.resolution, 128);
        assert_eq!(cfg.domains[1].shape, ShapeSpec::RegularHexagon { area: 1.0 });
        assert_eq!(cfg.optimizer.restarts, 3);
        assert_eq!(cfg.optimizer.max_outer_iters, OptimizerOptions::default().max_outer_iters);
        assert_eq!(cfg.strip, Some(StripConfig { delta: 0.2, ..StripConfig::default() }));
        assert_eq!(cfg.tile.unwrap().kind, TilingKind::SquareCopies { k: 2 });
        assert_eq!(cfg.output.dir, PathBuf::from("results"));
    }

    #[test]
    fn defaults_and_empty_m() {
        let cfg = RunConfig::from_toml_str("m = []").unwrap();
        assert!(cfg.m.is_empty());
        assert_eq!(cfg.domains.len(), 2);
        assert!(cfg.strip.is_none());
    }

    #[test]
    fn polygon_domain() {
        let text = "[[domain]]\nid = \"tri\"\nshape = \"polygon\"\nvertices = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]\narea = 1.0\n";
        let cfg = RunConfig::from_toml_str(text).unwrap();
        assert!(matches!(cfg.domains[0].shape, ShapeSpec::Polygon { .. }));
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "resolution = 16",
            "m = [0, 1]",
            "unknown = 1",
            "[[domain]]\nid = \"a b\"\nshape = \"unit_square\"",
            "[[domain]]\nid = \"a\"\nshape = \"unit_square\"\n[[domain]]\nid = \"a\"\nshape = \"unit_square\"",
            "[[domain]]\nid = \"a\"\nshape = \"ellipse\"",
            "[optimizer]\nrestarts = 0",
            "[strip]\nwidth = 1.0",
        ] {
            let err = RunConfig::from_toml_str(text).unwrap_err();
            assert!(err.downcast_ref::<UsageError>().is_some(), "{text}: {err:#}");
        }
    }
}
