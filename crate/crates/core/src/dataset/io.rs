//! Line-delimited JSON dataset files with a sidecar header.
//!
//! Each record carries the pose, the 16 labels (or `null`) and 16 rows of
//! `[re, im]` pairs, one pair per frequency point. The header lives next to
//! the data in `<path>.header.json`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forward::{ForwardParams, FrequencyGrid, Measurement, Pose, ReflectionSignal};
use crate::geometry::NormalLengths;

pub const DATASET_FORMAT: &str = "embound-dataset/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub tool_version: String,
    pub grid: FrequencyGrid,
    pub params_hash: String,
    /// Forward-model parameters of synthetic data; absent for measured data.
    #[serde(default)]
    pub params: Option<ForwardParams>,
    pub config_hash: String,
    pub seed: u64,
    pub n_records: usize,
    /// SHA-256 of the record file.
    pub data_hash: String,
}

#[derive(Serialize, Deserialize)]
struct Record {
    id: usize,
    phantom_id: String,
    pose: Pose,
    labels: Option<Vec<f64>>,
    signals: Vec<Vec<[f64; 2]>>,
}

fn header_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".header.json");
    PathBuf::from(s)
}

fn encode(measurements: &[Measurement]) -> Result<String> {
    let mut out = String::new();
    for m in measurements {
        let rec = Record {
            id: m.id,
            phantom_id: m.phantom_id.clone(),
            pose: m.pose,
            labels: m.labels.as_ref().map(|l| l.values().to_vec()),
            signals: m.signals.iter().map(|s| s.values.iter().map(|c| [c.re, c.im]).collect()).collect(),
        };
        out.push_str(&serde_json::to_string(&rec)?);
        out.push('\n');
    }
    Ok(out)
}

/// Header for data synthesized with `params`.
pub fn dataset_header(params: &ForwardParams, config_hash: &str, seed: u64, n_records: usize) -> DatasetHeader {
    DatasetHeader {
        format: DATASET_FORMAT.into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        grid: params.grid,
        params_hash: params.hash(),
        params: Some(params.clone()),
        config_hash: config_hash.into(),
        seed,
        n_records,
        data_hash: String::new(),
    }
}

/// Writes the records and the header; returns the header as written.
pub fn write_dataset(path: &Path, measurements: &[Measurement], mut header: DatasetHeader) -> Result<DatasetHeader> {
    let body = encode(measurements)?;
    header.n_records = measurements.len();
    header.data_hash = hex::encode(Sha256::digest(body.as_bytes()));
    fs::File::create(path)?.write_all(body.as_bytes())?;
    let mut h = serde_json::to_string_pretty(&header)?;
    h.push('\n');
    fs::write(header_path(path), h)?;
    Ok(header)
}

/// Parses records; every signal must have `grid.n_points` samples.
pub fn read_dataset_str(text: &str, grid: FrequencyGrid) -> Result<Vec<Measurement>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(lineno, line)| {
            let rec: Record =
                serde_json::from_str(line).map_err(|e| Error::Parse(format!("record {}: {e}", lineno + 1)))?;
            if rec.signals.len() != crate::geometry::ANTENNA_COUNT {
                return Err(Error::Parse(format!("record {}: {} signals", lineno + 1, rec.signals.len())));
            }
            let signals = rec
                .signals
                .into_iter()
                .enumerate()
                .map(|(a, row)| {
                    ReflectionSignal::new(row.into_iter().map(|[re, im]| Complex64::new(re, im)).collect(), grid, a)
                })
                .collect::<Result<Vec<_>>>()?;
            let labels = rec.labels.map(NormalLengths::new).transpose()?;
            Ok(Measurement { id: rec.id, phantom_id: rec.phantom_id, pose: rec.pose, labels, signals })
        })
        .collect()
}

/// Reads the header and records written by [`write_dataset`].
pub fn read_dataset(path: &Path) -> Result<(DatasetHeader, Vec<Measurement>)> {
    let header: DatasetHeader = serde_json::from_str(&fs::read_to_string(header_path(path))?)?;
    if header.format != DATASET_FORMAT {
        return Err(Error::Parse(format!("unsupported dataset format {:?}", header.format)));
    }
    let body = fs::read_to_string(path)?;
    let hash = hex::encode(Sha256::digest(body.as_bytes()));
    if hash != header.data_hash {
        return Err(Error::Parse("dataset checksum does not match header".into()));
    }
    let m = read_dataset_str(&body, header.grid)?;
    if m.len() != header.n_records {
        return Err(Error::Parse(format!("header promises {} records, found {}", header.n_records, m.len())));
    }
    Ok((header, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{synth_distance_scans, ForwardParams};

    #[test]
    fn round_trip_through_files() {
        let p = ForwardParams::phantom();
        let mut m = synth_distance_scans((5.0, 15.0), 3, &p, 1).unwrap();
        m[2].labels = None;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let h = write_dataset(&path, &m, dataset_header(&p, "cfg", 1, 0)).unwrap();
        assert_eq!(h.n_records, 3);
        let (h2, back) = read_dataset(&path).unwrap();
        assert_eq!(h, h2);
        assert_eq!(back, m);
    }

    #[test]
    fn tampered_file_is_rejected() {
        let p = ForwardParams::phantom();
        let m = synth_distance_scans((5.0, 15.0), 1, &p, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        write_dataset(&path, &m, dataset_header(&p, "cfg", 1, 0)).unwrap();
        let mut body = fs::read_to_string(&path).unwrap();
        body = body.replacen("\"id\":0", "\"id\":1", 1);
        fs::write(&path, body).unwrap();
        assert!(read_dataset(&path).is_err());
    }

    #[test]
    fn wrong_width_is_rejected() {
        let p = ForwardParams::phantom();
        let m = synth_distance_scans((5.0, 15.0), 1, &p, 1).unwrap();
        let text = encode(&m).unwrap();
        let small = FrequencyGrid { n_points: 100, ..p.grid };
        assert!(read_dataset_str(&text, small).is_err());
    }
}
