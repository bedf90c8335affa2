//! Trajectory files: one little-endian `f64` binary per snapshot (row-major,
//! axis 0 slowest) plus `index.csv` with `time,filename,min,max`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};
use crate::grid::{FieldTrajectory, Grid};

pub const INDEX_FILE: &str = "index.csv";

/// Human-readable description recorded in run manifests.
pub const LAYOUT: &str = "trajectories/<member>/snap_NNNN.bin: cell values as little-endian \
IEEE-754 f64, row-major with axis 0 slowest; trajectories/<member>/index.csv: time,filename,min,max";

fn snapshot_name(n: usize) -> String {
    format!("snap_{n:04}.bin")
}

/// Writes `traj` into `dir` (created if needed); returns the written paths.
pub fn write_trajectory(dir: &Path, traj: &FieldTrajectory) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let mut written = Vec::with_capacity(traj.len() + 1);
    let index_path = dir.join(INDEX_FILE);
    let mut index = csv::Writer::from_path(&index_path).map_err(|e| csv_error(&index_path, e))?;
    index
        .write_record(["time", "filename", "min", "max"])
        .map_err(|e| csv_error(&index_path, e))?;
    for (n, (t, values)) in traj.times().iter().zip(traj.snapshots()).enumerate() {
        let name = snapshot_name(n);
        let path = dir.join(&name);
        let mut bytes = Vec::with_capacity(values.len() * 8);
        for v in values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let mut file = fs::File::create(&path).map_err(|e| LabError::io(&path, e))?;
        file.write_all(&bytes).map_err(|e| LabError::io(&path, e))?;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        index
            .write_record([t.to_string(), name, min.to_string(), max.to_string()])
            .map_err(|e| csv_error(&index_path, e))?;
        written.push(path);
    }
    index.flush().map_err(|e| LabError::io(&index_path, e))?;
    written.push(index_path);
    Ok(written)
}

/// Reads a trajectory written by [`write_trajectory`] on `grid`.
pub fn read_trajectory(dir: &Path, grid: Arc<Grid>, epsilon: f64) -> Result<FieldTrajectory> {
    let index_path = dir.join(INDEX_FILE);
    if !index_path.exists() {
        return Err(LabError::Corrupt {
            path: index_path,
            reason: "missing trajectory index".into(),
        });
    }
    let mut reader = csv::Reader::from_path(&index_path).map_err(|e| csv_error(&index_path, e))?;
    let mut times = Vec::new();
    let mut snapshots = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&index_path, e))?;
        let bad = |reason: &str| LabError::Corrupt {
            path: index_path.clone(),
            reason: reason.into(),
        };
        let t: f64 = record
            .get(0)
            .ok_or_else(|| bad("missing time"))?
            .parse()
            .map_err(|_| bad("bad time"))?;
        let name = record.get(1).ok_or_else(|| bad("missing filename"))?;
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(|e| LabError::io(&path, e))?;
        if bytes.len() != grid.len() * 8 {
            return Err(LabError::Corrupt {
                path,
                reason: format!("{} bytes, expected {}", bytes.len(), grid.len() * 8),
            });
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::Corrupt {
                path,
                reason: "non-finite value".into(),
            });
        }
        times.push(t);
        snapshots.push(values);
    }
    FieldTrajectory::new(grid, epsilon, times, snapshots)
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| LabError::io(path, e))?;
    Ok(sha256_bytes(&bytes))
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> LabError {
    LabError::Corrupt {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}
