//! File formats. Floats are written in shortest round-trip form, so every
//! text artifact re-reads bit for bit.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use contfit_core::hyperopt::{GridCellResult, SearchRecord};
use contfit_core::{EvalGrid, SampleSet, Split};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::format(path, format!("{other:?}")),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::format(path, e))?;
    w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    finish(w, path)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_reader(open(path)?).map_err(|e| CliError::format(path, e))
}

/// Samples as CSV with header `x,y,value`.
pub fn write_samples(path: &Path, s: &SampleSet) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["x", "y", "value"]).map_err(|e| csv_err(path, e))?;
    for (c, v) in s.coords().iter().zip(s.values()) {
        w.write_record([c[0].to_string(), c[1].to_string(), v.to_string()]).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Deserialize)]
struct SampleRow {
    x: f64,
    y: f64,
    value: f64,
}

pub fn read_samples(path: &Path) -> CliResult<SampleSet> {
    let mut r = csv::Reader::from_reader(open(path)?);
    let mut coords = Vec::new();
    let mut values = Vec::new();
    for row in r.deserialize::<SampleRow>() {
        let row = row.map_err(|e| csv_err(path, e))?;
        coords.push([row.x, row.y]);
        values.push(row.value);
    }
    SampleSet::new(coords, values).map_err(|e| CliError::format(path, e))
}

pub fn read_samples_with_split(samples: &Path, split: &Path) -> CliResult<SampleSet> {
    let s = read_samples(samples)?;
    let sp: Split = read_json(split)?;
    s.with_split(sp).map_err(|e| CliError::format(split, e))
}

/// Extent and resolution of a row-major grid file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridMeta {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub n_x: usize,
    pub n_y: usize,
}

impl GridMeta {
    pub fn of(g: &EvalGrid) -> Self {
        GridMeta { x_min: g.x_min, x_max: g.x_max, y_min: g.y_min, y_max: g.y_max, n_x: g.n_x, n_y: g.n_y }
    }

    pub fn eval_grid(&self) -> CliResult<EvalGrid> {
        Ok(EvalGrid::new(self.x_min, self.x_max, self.y_min, self.y_max, self.n_x, self.n_y)?)
    }
}

/// Sidecar path of a grid file: `name.bin` -> `name.json`.
pub fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Row-major little-endian `f64` values (rows run along y) plus a JSON
/// sidecar holding [`GridMeta`].
pub fn write_grid(path: &Path, meta: &GridMeta, values: &[f64]) -> CliResult<()> {
    assert_eq!(values.len(), meta.n_x * meta.n_y);
    let mut w = create(path)?;
    for v in values {
        w.write_all(&v.to_le_bytes()).map_err(|e| CliError::io(path, e))?;
    }
    finish(w, path)?;
    write_json(&sidecar(path), meta)
}

pub fn read_grid(path: &Path) -> CliResult<(GridMeta, Vec<f64>)> {
    let meta: GridMeta = read_json(&sidecar(path))?;
    let mut bytes = Vec::new();
    open(path)?.read_to_end(&mut bytes).map_err(|e| CliError::io(path, e))?;
    if meta.n_x == 0 || meta.n_y == 0 || bytes.len() != 8 * meta.n_x * meta.n_y {
        return Err(CliError::format(
            path,
            format!("{} bytes do not hold a {}x{} grid", bytes.len(), meta.n_y, meta.n_x),
        ));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((meta, values))
}

/// Truth grid: the sidecar extent plus values read back into an [`EvalGrid`].
pub fn read_truth_grid(path: &Path) -> CliResult<EvalGrid> {
    let (meta, values) = read_grid(path)?;
    let mut g = meta.eval_grid()?;
    g.truth = Some(values);
    Ok(g)
}

/// NRMSE table with header `m,lambda,nrmse`; failed cells hold `NaN`.
pub fn write_nrmse_table(path: &Path, rows: &[(usize, f64, Option<f64>)]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["m", "lambda", "nrmse"]).map_err(|e| csv_err(path, e))?;
    for &(m, l, v) in rows {
        let v = v.unwrap_or(f64::NAN);
        w.write_record([m.to_string(), format!("{l:e}"), v.to_string()]).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Weight-decay grid table `log10_lambda_enc,log10_lambda_mlp,objective,status`.
pub fn write_inr_grid_table(path: &Path, cells: &[GridCellResult]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["log10_lambda_enc", "log10_lambda_mlp", "objective", "status"])
        .map_err(|e| csv_err(path, e))?;
    for c in cells {
        let (obj, status) = match c.objective {
            Some(v) => (v.to_string(), "ok"),
            None => (f64::NAN.to_string(), "failed"),
        };
        w.write_record([c.log10_lambda_enc.to_string(), c.log10_lambda_mlp.to_string(), obj, status.into()])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Cross-section CSV `x,truth,prediction` for one grid row.
pub fn write_cross_section(path: &Path, xs: &[f64], truth: &[f64], pred: &[f64]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["x", "truth", "prediction"]).map_err(|e| csv_err(path, e))?;
    for i in 0..xs.len() {
        w.write_record([xs[i].to_string(), truth[i].to_string(), pred[i].to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Column-wise CSV: one header entry per column, columns of equal length.
pub fn write_trace(path: &Path, header: &[&str], columns: &[&[f64]]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    let n = columns.first().map_or(0, |c| c.len());
    for i in 0..n {
        w.write_record(columns.iter().map(|c| c[i].to_string())).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Append-only JSON-lines log of search records.
pub struct History {
    path: PathBuf,
    file: File,
}

impl History {
    /// Open for appending; `truncate` starts a fresh log.
    pub fn open(path: &Path, truncate: bool) -> CliResult<Self> {
        if let Some(parent) = path.parent() {
            create_dir(parent)?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(!truncate)
            .write(true)
            .truncate(truncate)
            .open(path)
            .map_err(|e| CliError::io(path, e))?;
        Ok(History { path: path.to_path_buf(), file })
    }

    pub fn append(&mut self, r: &SearchRecord) -> CliResult<()> {
        let mut line = serde_json::to_string(r).map_err(|e| CliError::format(&self.path, e))?;
        line.push('\n');
        self.file.write_all(line.as_bytes()).map_err(|e| CliError::io(&self.path, e))?;
        self.file.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

pub fn read_history(path: &Path) -> CliResult<Vec<SearchRecord>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| CliError::format(path, format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

const CHECKPOINT_MAGIC: &[u8] = b"contfit-checkpoint 1\n";

/// Model checkpoint: a magic line, one line of JSON header, then the
/// parameter vector as little-endian `f64` (tables level-major, then each
/// layer's weights followed by its bias).
pub fn write_checkpoint<H: Serialize>(path: &Path, header: &H, params: &[f64]) -> CliResult<()> {
    let mut w = create(path)?;
    let head = serde_json::to_string(header).map_err(|e| CliError::format(path, e))?;
    w.write_all(CHECKPOINT_MAGIC).map_err(|e| CliError::io(path, e))?;
    w.write_all(head.as_bytes()).map_err(|e| CliError::io(path, e))?;
    w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    for p in params {
        w.write_all(&p.to_le_bytes()).map_err(|e| CliError::io(path, e))?;
    }
    finish(w, path)
}

pub fn read_checkpoint<H: DeserializeOwned>(path: &Path) -> CliResult<(H, Vec<f64>)> {
    let mut r = open(path)?;
    let mut magic = vec![0u8; CHECKPOINT_MAGIC.len()];
    r.read_exact(&mut magic).map_err(|e| CliError::io(path, e))?;
    if magic != CHECKPOINT_MAGIC {
        return Err(CliError::format(path, "not a checkpoint"));
    }
    let mut head = String::new();
    r.read_line(&mut head).map_err(|e| CliError::io(path, e))?;
    let header = serde_json::from_str(&head).map_err(|e| CliError::format(path, e))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| CliError::io(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(CliError::format(path, "truncated parameter blob"));
    }
    let params = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((header, params))
}
