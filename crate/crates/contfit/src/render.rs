//! Grayscale rendering of grid files as plain (ASCII) 16-bit PGM.
//!
//! Linear mode maps `[min, max]` onto `0..=65535`. Signed mode maps
//! `[-a, a]` with `a = max |v|`, so zero is mid-gray (32768). Non-finite
//! values render black. The image's top row is the grid's last row
//! (largest y). The range used goes to `<image>.json`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::{read_grid, write_json, GridMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RenderMode {
    Linear,
    Signed,
}

/// Value range used for the gray mapping, written next to every image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderInfo {
    pub mode: RenderMode,
    pub min: f64,
    pub max: f64,
    pub width: usize,
    pub height: usize,
}

pub const MAX_GRAY: u32 = 65535;

pub fn gray_range(values: &[f64], mode: RenderMode) -> (f64, f64) {
    let finite = values.iter().copied().filter(|v| v.is_finite());
    match mode {
        RenderMode::Linear => {
            let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if lo > hi {
                (0.0, 0.0)
            } else {
                (lo, hi)
            }
        }
        RenderMode::Signed => {
            let a = finite.fold(0.0f64, |a, v| a.max(v.abs()));
            (-a, a)
        }
    }
}

fn gray(v: f64, lo: f64, hi: f64) -> u32 {
    if !v.is_finite() {
        return 0;
    }
    if hi <= lo {
        return if lo == 0.0 && hi == 0.0 && v == 0.0 { MAX_GRAY / 2 + 1 } else { 0 };
    }
    let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
    (t * MAX_GRAY as f64).round() as u32
}

/// PGM text for a row-major grid of `n_x` columns.
pub fn to_pgm(values: &[f64], n_x: usize, n_y: usize, mode: RenderMode) -> (String, RenderInfo) {
    let (lo, hi) = gray_range(values, mode);
    let mut s = format!("P2\n{n_x} {n_y}\n{MAX_GRAY}\n");
    for row in (0..n_y).rev() {
        let line: Vec<String> =
            values[row * n_x..(row + 1) * n_x].iter().map(|&v| gray(v, lo, hi).to_string()).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    (s, RenderInfo { mode, min: lo, max: hi, width: n_x, height: n_y })
}

pub fn write_pgm(path: &Path, values: &[f64], n_x: usize, n_y: usize, mode: RenderMode) -> CliResult<RenderInfo> {
    let (text, info) = to_pgm(values, n_x, n_y, mode);
    if let Some(p) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        crate::io::create_dir(p)?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    write_json(&image_sidecar(path), &info)?;
    Ok(info)
}

/// `name.pgm` -> `name.pgm.json`.
pub fn image_sidecar(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

/// Render the grid file at `grid` into the image `out` (sidecar alongside).
pub fn render_grid_file(grid: &Path, out: &Path, mode: RenderMode) -> CliResult<RenderInfo> {
    let (meta, values): (GridMeta, Vec<f64>) = read_grid(grid)?;
    write_pgm(out, &values, meta.n_x, meta.n_y, mode)
}
