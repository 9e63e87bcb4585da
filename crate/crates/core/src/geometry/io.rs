//! Field files: raw little-endian binary64 with a text sidecar, plus CSV.
//!
//! Binary layout is the row-major value array and nothing else. The sidecar
//! lives next to it with the extension `.desc`:
//!
//! ```text
//! # paneitz-lab field v1
//! d = 2
//! sizes = 32,32
//! L = 6.283185307179586,6.283185307179586
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::{Error, Result};

use super::field::ScalarField;
use super::grid::SpectralGrid;

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("desc")
}

pub fn descriptor(grid: &SpectralGrid) -> String {
    let sizes: Vec<String> = grid.sizes().iter().map(|s| s.to_string()).collect();
    let lengths: Vec<String> = grid.lengths().iter().map(|l| format!("{l:?}")).collect();
    format!(
        "# paneitz-lab field v1\nd = {}\nsizes = {}\nL = {}\n",
        grid.dim(),
        sizes.join(","),
        lengths.join(",")
    )
}

pub fn encode_binary(field: &ScalarField) -> Vec<u8> {
    field.values().iter().flat_map(|v| v.to_le_bytes()).collect()
}

/// Writes `path` and its sidecar; returns both paths.
pub fn write_binary(path: &Path, field: &ScalarField) -> Result<(PathBuf, PathBuf)> {
    fs::write(path, encode_binary(field))?;
    let side = sidecar_path(path);
    fs::write(&side, descriptor(field.grid()))?;
    Ok((path.to_path_buf(), side))
}

fn parse_list<T: std::str::FromStr>(s: &str, key: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| {
            x.trim().parse::<T>().map_err(|_| {
                Error::InvalidGrid(format!("descriptor key `{key}`: cannot parse `{x}`"))
            })
        })
        .collect()
}

pub fn parse_descriptor(text: &str) -> Result<Arc<SpectralGrid>> {
    let mut d: Option<usize> = None;
    let mut sizes: Option<Vec<usize>> = None;
    let mut lengths: Option<Vec<f64>> = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidGrid(format!("malformed descriptor line `{line}`")))?;
        match k.trim() {
            "d" => d = Some(parse_list::<usize>(v, "d")?[0]),
            "sizes" => sizes = Some(parse_list(v, "sizes")?),
            "L" => lengths = Some(parse_list(v, "L")?),
            other => {
                return Err(Error::InvalidGrid(format!("unknown descriptor key `{other}`")))
            }
        }
    }
    let sizes = sizes.ok_or_else(|| Error::InvalidGrid("descriptor lacks `sizes`".into()))?;
    let lengths = lengths.ok_or_else(|| Error::InvalidGrid("descriptor lacks `L`".into()))?;
    if let Some(d) = d {
        if d != sizes.len() {
            return Err(Error::InvalidGrid("descriptor `d` disagrees with `sizes`".into()));
        }
    }
    SpectralGrid::new(&sizes, &lengths)
}

/// Reads a binary field through its sidecar descriptor.
pub fn read_binary(path: &Path) -> Result<ScalarField> {
    let grid = parse_descriptor(&fs::read_to_string(sidecar_path(path))?)?;
    read_binary_on(path, &grid)
}

/// Reads a binary field that must live on `grid`.
pub fn read_binary_on(path: &Path, grid: &Arc<SpectralGrid>) -> Result<ScalarField> {
    let bytes = fs::read(path)?;
    if bytes.len() != 8 * grid.len() {
        return Err(Error::InvalidGrid(format!(
            "{}: {} bytes, expected {}",
            path.display(),
            bytes.len(),
            8 * grid.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    ScalarField::new(grid.clone(), values)
}

/// CSV with one column per axis index followed by the value.
pub fn to_csv(field: &ScalarField) -> String {
    let grid = field.grid();
    let mut out = String::new();
    let header: Vec<String> = (0..grid.dim()).map(|a| format!("i{a}")).collect();
    let _ = writeln!(out, "{},value", header.join(","));
    for (idx, v) in field.values().iter().enumerate() {
        let mi: Vec<String> = grid.unravel(idx).iter().map(|m| m.to_string()).collect();
        let _ = writeln!(out, "{},{v:?}", mi.join(","));
    }
    out
}

/// Reads a CSV field: either the [`to_csv`] layout or a single value column
/// (1-D convenience), on the given grid.
pub fn from_csv(text: &str, grid: &Arc<SpectralGrid>) -> Result<ScalarField> {
    let mut values = vec![f64::NAN; grid.len()];
    let mut seq = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('i') || line == "value" {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = |what: &str| Error::InvalidGrid(format!("csv line {}: {what}", lineno + 1));
        let value: f64 = cols
            .last()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("unparseable value"))?;
        let idx = if cols.len() == 1 {
            seq
        } else if cols.len() == grid.dim() + 1 {
            let mut idx = 0;
            for (a, c) in cols[..grid.dim()].iter().enumerate() {
                let m: usize = c.parse().map_err(|_| bad("unparseable index"))?;
                if m >= grid.sizes()[a] {
                    return Err(bad("index out of range"));
                }
                idx += m * grid.strides()[a];
            }
            idx
        } else {
            return Err(bad("wrong column count"));
        };
        if idx >= values.len() {
            return Err(bad("too many rows"));
        }
        values[idx] = value;
        seq += 1;
    }
    ScalarField::new(grid.clone(), values)
}
