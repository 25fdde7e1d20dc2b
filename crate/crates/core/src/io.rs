//! Plain-text graymap (PGM `P2`) files for partitions, masks and grid functions.
//!
//! Rows are written top first (largest `y`), one grid row per line. A
//! partition stores `0` outside the domain and `label + 1` inside, with
//! `maxval = m`; a mask stores `0`/`1`.

use std::fmt::Write as _;

use crate::grid::{GridDomain, SubdomainMask};
use crate::partition::{Partition, UNASSIGNED};
use crate::{Error, Result};

/// Largest value a PGM file may carry.
pub const PGM_MAX: usize = 65_535;

fn write_raster(nx: usize, ny: usize, maxval: usize, value: impl Fn(usize) -> usize) -> String {
    let mut s = String::with_capacity(nx * ny * 3 + 32);
    let _ = write!(s, "P2\n{nx} {ny}\n{maxval}\n");
    for j in (0..ny).rev() {
        for i in 0..nx {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{}", value(j * nx + i));
        }
        s.push('\n');
    }
    s
}

/// Parsed `P2` raster in row-major order, bottom row first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub nx: usize,
    pub ny: usize,
    pub maxval: usize,
    pub values: Vec<usize>,
}

/// Parses a `P2` file; `#` starts a comment running to the end of the line.
pub fn parse_pgm(text: &str) -> Result<Raster> {
    let mut tokens = text.lines().flat_map(|l| l.split('#').next().unwrap_or("").split_whitespace());
    if tokens.next() != Some("P2") {
        return Err(Error::Parse("missing P2 magic".into()));
    }
    let mut num = |what: &str| -> Result<usize> {
        let t = tokens.next().ok_or_else(|| Error::Parse(format!("unexpected end of file reading {what}")))?;
        t.parse().map_err(|_| Error::Parse(format!("bad {what}: {t:?}")))
    };
    let nx = num("width")?;
    let ny = num("height")?;
    let maxval = num("maxval")?;
    if nx == 0 || ny == 0 {
        return Err(Error::Parse("zero-sized raster".into()));
    }
    if maxval == 0 || maxval > PGM_MAX {
        return Err(Error::Parse(format!("maxval {maxval} outside 1..={PGM_MAX}")));
    }
    let mut top_first = Vec::with_capacity(nx * ny);
    for _ in 0..nx * ny {
        let v = num("pixel")?;
        if v > maxval {
            return Err(Error::Parse(format!("pixel {v} exceeds maxval {maxval}")));
        }
        top_first.push(v);
    }
    if tokens.next().is_some() {
        return Err(Error::Parse("trailing data after raster".into()));
    }
    let mut values = vec![0; nx * ny];
    for (r, row) in top_first.chunks(nx).enumerate() {
        let j = ny - 1 - r;
        values[j * nx..(j + 1) * nx].copy_from_slice(row);
    }
    Ok(Raster { nx, ny, maxval, values })
}

fn check_dims(domain: &GridDomain, r: &Raster) -> Result<()> {
    if (r.nx, r.ny) != (domain.nx(), domain.ny()) {
        return Err(Error::Parse(format!(
            "raster is {}x{} but the domain grid is {}x{}",
            r.nx,
            r.ny,
            domain.nx(),
            domain.ny()
        )));
    }
    Ok(())
}

pub fn partition_to_pgm(partition: &Partition) -> Result<String> {
    let m = partition.m();
    if m > PGM_MAX {
        return Err(Error::InvalidArgument(format!("{m} parts exceed the PGM value range")));
    }
    let (nx, ny) = partition.dims();
    let labels = partition.labels();
    Ok(write_raster(nx, ny, m, |k| if labels[k] == UNASSIGNED { 0 } else { labels[k] as usize + 1 }))
}

/// Reads a partition of `domain`; the part count is the file's `maxval`.
pub fn partition_from_pgm(domain: &GridDomain, text: &str) -> Result<Partition> {
    let r = parse_pgm(text)?;
    check_dims(domain, &r)?;
    let labels = r.values.iter().map(|&v| if v == 0 { UNASSIGNED } else { (v - 1) as u32 }).collect();
    Partition::new(domain, labels, r.maxval)
}

pub fn mask_to_pgm(domain: &GridDomain, mask: &SubdomainMask) -> Result<String> {
    if mask.parent() != domain.id() {
        return Err(Error::DomainMismatch);
    }
    Ok(write_raster(domain.nx(), domain.ny(), 1, |k| usize::from(mask.contains(k))))
}

pub fn mask_from_pgm(domain: &GridDomain, text: &str) -> Result<SubdomainMask> {
    let r = parse_pgm(text)?;
    check_dims(domain, &r)?;
    if r.maxval != 1 {
        return Err(Error::Parse(format!("mask files use maxval 1, found {}", r.maxval)));
    }
    SubdomainMask::new(domain, r.values.iter().map(|&v| v == 1).collect())
}

/// Grid function scaled to `0..=255` by its largest absolute value.
/// Returns the file text and the scale (value represented by 255).
pub fn field_to_pgm(domain: &GridDomain, f: &[f64]) -> Result<(String, f64)> {
    if f.len() != domain.len() {
        return Err(Error::InvalidArgument("function length does not match the grid".into()));
    }
    let scale = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let text = write_raster(domain.nx(), domain.ny(), 255, |k| {
        if scale == 0.0 {
            0
        } else {
            (f[k].abs() / scale * 255.0).round() as usize
        }
    });
    Ok((text, scale))
}
