//! JSON interchange formats.
//!
//! | file            | shape                                                        |
//! |-----------------|--------------------------------------------------------------|
//! | density matrix  | `{ "dim": D, "re": [[..]], "im": [[..]] }` (row-major)        |
//! | τ-vector        | `{ "dim": D, "tau": [ D² reals ] }`                           |
//! | dataset         | `{ "qubits": n, "mode": "single_shot"\|"counted", "records": [ { "bases": "XZ", "outcomes": "01", "count": k } ] }` |
//! | chain result    | `{ "checkpoints": [ { "length", "wall_s", "rho_b", "acceptance" } ] }` |
//! | timing sidecar  | `{ "state_id": .., "inference_s": t }`                        |
//!
//! Floats are written in shortest round-trip form, so matrices survive a
//! write/read cycle bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use qbayes_core::estimators::TauVector;
use qbayes_core::linalg::{eigh, psd_project, CMatrix, DensityMatrix, C64, PHYSICAL_TOL};
use qbayes_core::mcmc::ChainResult;
use qbayes_core::measurement::{DatasetMode, MeasurementDataset, PauliSetting, Record};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest deviation from physicality an external estimate may carry before
/// it is rejected rather than projected.
pub const INGEST_TOLERANCE: f64 = 1e-6;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })
}

/// Writes pretty-printed JSON, creating parent directories as needed.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })?;
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_owned(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    fs::write(path, text).map_err(io_err)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixFile {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let d = m.dim();
        Self {
            dim: d,
            re: (0..d).map(|r| (0..d).map(|c| m[(r, c)].re).collect()).collect(),
            im: (0..d).map(|r| (0..d).map(|c| m[(r, c)].im).collect()).collect(),
        }
    }

    pub fn to_matrix(&self, path: &Path) -> Result<CMatrix> {
        let d = self.dim;
        let square = |rows: &[Vec<f64>]| rows.len() == d && rows.iter().all(|r| r.len() == d);
        if d == 0 || !square(&self.re) || !square(&self.im) {
            return Err(Error::format(path, format!("expected {d}×{d} \"re\" and \"im\" arrays")));
        }
        Ok(CMatrix::from_fn(d, |r, c| C64::new(self.re[r][c], self.im[r][c])))
    }
}

impl From<&DensityMatrix> for MatrixFile {
    fn from(rho: &DensityMatrix) -> Self {
        Self::from_matrix(rho.matrix())
    }
}

/// Reads a density matrix and re-validates it as physical.
pub fn read_density_matrix(path: &Path) -> Result<DensityMatrix> {
    let m = read_json::<MatrixFile>(path)?.to_matrix(path)?;
    let violation = physicality_violation(&m);
    if !(violation <= PHYSICAL_TOL) {
        return Err(Error::Unphysical {
            path: path.to_owned(),
            violation,
            tolerance: PHYSICAL_TOL,
        });
    }
    Ok(DensityMatrix::new(m)?)
}

pub fn write_density_matrix(path: &Path, rho: &DensityMatrix) -> Result<()> {
    write_json(path, &MatrixFile::from(rho))
}

/// Largest violation of Hermiticity, unit trace or positivity.
pub fn physicality_violation(m: &CMatrix) -> f64 {
    let herm = m.hermitian_deviation();
    let trace = (m.trace() - C64::new(1.0, 0.0)).norm();
    let mut h = m.clone();
    h.hermitize();
    let negative = (-eigh(&h).values[0]).max(0.0);
    herm.max(trace).max(negative)
}

/// Reads an externally produced point estimate. Violations up to
/// [`INGEST_TOLERANCE`] are projected away; larger ones are rejected with the
/// offending magnitude.
pub fn read_estimate(path: &Path) -> Result<DensityMatrix> {
    let m = read_json::<MatrixFile>(path)?.to_matrix(path)?;
    let violation = physicality_violation(&m);
    if !(violation <= INGEST_TOLERANCE) {
        return Err(Error::Unphysical {
            path: path.to_owned(),
            violation,
            tolerance: INGEST_TOLERANCE,
        });
    }
    Ok(psd_project(&m)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauFile {
    pub dim: usize,
    pub tau: Vec<f64>,
}

impl From<&TauVector> for TauFile {
    fn from(t: &TauVector) -> Self {
        Self {
            dim: t.dim(),
            tau: t.as_slice().to_vec(),
        }
    }
}

pub fn read_tau(path: &Path) -> Result<TauVector> {
    let f: TauFile = read_json(path)?;
    if f.tau.len() != f.dim * f.dim {
        return Err(Error::format(path, format!("expected {} τ entries, found {}", f.dim * f.dim, f.tau.len())));
    }
    Ok(TauVector::new(f.tau)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeLabel {
    SingleShot,
    Counted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordFile {
    pub bases: String,
    pub outcomes: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub qubits: usize,
    pub mode: ModeLabel,
    pub records: Vec<RecordFile>,
}

impl From<&MeasurementDataset> for DatasetFile {
    fn from(d: &MeasurementDataset) -> Self {
        let counted = d.mode() == DatasetMode::Counted;
        Self {
            qubits: d.qubits(),
            mode: if counted { ModeLabel::Counted } else { ModeLabel::SingleShot },
            records: d
                .records()
                .iter()
                .map(|r| RecordFile {
                    bases: r.setting.bases_label(),
                    outcomes: r.setting.outcomes_label(),
                    count: counted.then_some(r.count),
                })
                .collect(),
        }
    }
}

impl DatasetFile {
    pub fn to_dataset(&self, path: &Path) -> Result<MeasurementDataset> {
        let mode = match self.mode {
            ModeLabel::SingleShot => DatasetMode::SingleShot,
            ModeLabel::Counted => DatasetMode::Counted,
        };
        let records = self
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let setting = PauliSetting::parse(&r.bases, &r.outcomes)
                    .map_err(|e| Error::format(path, format!("record {i}: {e}")))?;
                let count = match (mode, r.count) {
                    (DatasetMode::SingleShot, None | Some(1)) => 1,
                    (DatasetMode::SingleShot, Some(_)) => {
                        return Err(Error::format(path, format!("record {i}: single-shot records carry no count")))
                    }
                    (DatasetMode::Counted, Some(c)) => c,
                    (DatasetMode::Counted, None) => {
                        return Err(Error::format(path, format!("record {i}: counted records need a count")))
                    }
                };
                Ok(Record { setting, count })
            })
            .collect::<Result<Vec<_>>>()?;
        MeasurementDataset::from_records(self.qubits, mode, records).map_err(|e| Error::format(path, e.to_string()))
    }
}

pub fn read_dataset(path: &Path) -> Result<MeasurementDataset> {
    read_json::<DatasetFile>(path)?.to_dataset(path)
}

pub fn write_dataset(path: &Path, data: &MeasurementDataset) -> Result<()> {
    write_json(path, &DatasetFile::from(data))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointFile {
    pub length: usize,
    pub wall_s: f64,
    pub rho_b: MatrixFile,
    pub acceptance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainResultFile {
    pub checkpoints: Vec<CheckpointFile>,
}

impl From<&ChainResult> for ChainResultFile {
    fn from(r: &ChainResult) -> Self {
        Self {
            checkpoints: r
                .checkpoints
                .iter()
                .map(|c| CheckpointFile {
                    length: c.length,
                    wall_s: c.wall_s,
                    rho_b: MatrixFile::from(&c.rho_b),
                    acceptance: c.acceptance,
                })
                .collect(),
        }
    }
}

/// Identifier of the state an estimate was inferred for.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateId {
    Index(u64),
    Name(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingFile {
    pub state_id: StateId,
    pub inference_s: f64,
}

/// File names shared by `prior-sample` exports and external estimators.
pub mod names {
    pub fn state(i: usize) -> String {
        format!("rho_{i:05}.json")
    }

    pub fn tau(i: usize) -> String {
        format!("tau_{i:05}.json")
    }

    pub fn shots(i: usize) -> String {
        format!("shots_{i:05}.json")
    }

    pub fn estimate(i: usize) -> String {
        format!("rho_ml_{i:05}.json")
    }

    pub fn estimate_timing(i: usize) -> String {
        format!("rho_ml_{i:05}.timing.json")
    }
}

/// An external estimate with its inference time.
pub fn read_indexed_estimate(dir: &Path, i: usize) -> Result<(DensityMatrix, f64)> {
    let rho = read_estimate(&dir.join(names::estimate(i)))?;
    let timing_path: PathBuf = dir.join(names::estimate_timing(i));
    let timing: TimingFile = read_json(&timing_path)?;
    if !(timing.inference_s >= 0.0 && timing.inference_s.is_finite()) {
        return Err(Error::format(timing_path, "inference_s must be a non-negative number"));
    }
    Ok((rho, timing.inference_s))
}
