//! Deterministic artifact writers: CSV series and an atomically written `result.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::evolution::Trajectory;
use crate::wavefunction::WaveFunction;

use super::config::RunConfig;

pub const RESULT_FILE: &str = "result.json";

/// SHA-256 of the canonical JSON of `config` with the output directory removed.
pub fn config_hash(config: &RunConfig) -> Result<String> {
    let bytes = serde_json::to_vec(&recorded_config(config))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

/// The config as embedded in `result.json`: where the artifacts went is not part of it.
pub fn recorded_config(config: &RunConfig) -> RunConfig {
    RunConfig {
        out_dir: None,
        ..config.clone()
    }
}

/// A CSV table with `#` comment lines ahead of the header.
pub struct Series {
    pub name: String,
    pub comments: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Series {
            name: name.into(),
            comments: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(mut self, key: &str, value: impl ToString) -> Self {
        self.comments.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.comments {
            let _ = writeln!(out, "# {k}: {v}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn trajectory_series(name: &str, traj: &Trajectory) -> Series {
    let mut columns = vec!["t", "log_norm", "x_mean", "spread"];
    let n_regions = traj
        .region_weights
        .as_ref()
        .and_then(|w| w.first())
        .map_or(0, Vec::len);
    let region_names: Vec<String> = (0..n_regions).map(|i| format!("w_region_{i}")).collect();
    columns.extend(region_names.iter().map(String::as_str));
    columns.extend(["kinetic_energy", "x0"]);
    let mut s = Series::new(name, &columns);
    for i in 0..traj.len() {
        let mut row = vec![
            traj.times[i],
            traj.log_norms[i],
            traj.x_means[i],
            traj.spreads[i],
        ];
        if let Some(w) = &traj.region_weights {
            row.extend(&w[i]);
        }
        row.push(traj.kinetic_energies[i]);
        row.push(traj.x0s[i]);
        s.push(row);
    }
    s
}

pub fn snapshot_series(name: &str, psi: &WaveFunction) -> Series {
    let mut s = Series::new(name, &["position", "re", "im", "abs2"]);
    for (j, a) in psi.amplitudes().iter().enumerate() {
        s.push(vec![psi.grid().position(j), a.re, a.im, a.norm_sqr()]);
    }
    s
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes every series, then `result.json` last; returns the written paths.
pub fn write_artifacts<T: Serialize>(
    dir: &Path,
    series: &[Series],
    result: &T,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for s in series {
        let path = dir.join(format!("{}.csv", s.name));
        write_atomic(&path, s.render().as_bytes())?;
        written.push(path);
    }
    let mut json = serde_json::to_vec_pretty(result)?;
    json.push(b'\n');
    let path = dir.join(RESULT_FILE);
    write_atomic(&path, &json)?;
    written.push(path);
    Ok(written)
}
