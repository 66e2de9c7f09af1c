//! Session files: the JSON config, WAV renders and experiment datasets.
//!
//! A dataset folder `Data_<id>/` holds
//!
//! | file            | content                                            |
//! |-----------------|----------------------------------------------------|
//! | `h_setup.csv`   | the QUBO blocks the run read, verbatim             |
//! | `vqe_conf.json` | config snapshot                                    |
//! | `operators.txt` | one observable per line, per Hamiltonian           |
//! | `raw.json`      | every iteration record, distributions included     |
//! | `marginals.csv` | `iteration,<label>...`, one row per record         |
//! | `energies.csv`  | `iteration,energy`                                 |
//! | `states.csv`    | `iteration,state` (most likely basis state)        |
//! | `meta.json`     | id, timestamps, segment layout, `aborted` flag     |

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use vqh_core::sonify::{decode_wav, encode_wav, AudioBuffer, ControlStreams, SonifyError};
use vqh_core::{ExperimentResult, IterationRecord, VqeConfig};

use crate::book::{operator_line, Book};

pub const H_SETUP: &str = "h_setup.csv";
pub const VQE_CONF: &str = "vqe_conf.json";
pub const OPERATORS: &str = "operators.txt";
pub const RAW: &str = "raw.json";
pub const MARGINALS: &str = "marginals.csv";
pub const ENERGIES: &str = "energies.csv";
pub const STATES: &str = "states.csv";
pub const META: &str = "meta.json";

/// Every file a dataset folder must contain.
pub const DATASET_FILES: [&str; 8] = [
    H_SETUP, VQE_CONF, OPERATORS, RAW, MARGINALS, ENERGIES, STATES, META,
];

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Audio { path: PathBuf, source: SonifyError },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> FileError + '_ {
    move |source| FileError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, FileError> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|source| FileError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FileError> {
    let text = serde_json::to_string_pretty(value).map_err(|source| FileError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(io(path))
}

pub fn read_config(path: &Path) -> Result<VqeConfig, FileError> {
    read_json(path)
}

pub fn write_config(path: &Path, cfg: &VqeConfig) -> Result<(), FileError> {
    write_json(path, cfg)
}

pub fn write_wav(buf: &AudioBuffer, path: &Path) -> Result<(), FileError> {
    fs::write(path, encode_wav(buf)).map_err(io(path))
}

pub fn read_wav(path: &Path) -> Result<AudioBuffer, FileError> {
    let bytes = fs::read(path).map_err(io(path))?;
    decode_wav(&bytes).map_err(|source| FileError::Audio {
        path: path.to_path_buf(),
        source,
    })
}

/// Layout and status of a stored experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub records: usize,
    pub aborted: bool,
    pub segment_boundaries: Vec<usize>,
    pub final_params: Vec<f64>,
    pub segment_final_params: Vec<Vec<f64>>,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, FileError> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> FileError {
    FileError::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

/// Writes the dataset of `res` into `dir`, creating it.
pub fn write_dataset(
    dir: &Path,
    res: &ExperimentResult,
    qubo_csv: &str,
    created_at: DateTime<Utc>,
) -> Result<(), FileError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let path = dir.join(H_SETUP);
    fs::write(&path, qubo_csv).map_err(io(&path))?;
    write_config(&dir.join(VQE_CONF), &res.config)?;
    let path = dir.join(OPERATORS);
    let ops: String = res.operators.iter().map(|o| operator_line(o) + "\n").collect();
    fs::write(&path, ops).map_err(io(&path))?;
    write_json(&dir.join(RAW), &res.records)?;

    let path = dir.join(MARGINALS);
    let mut w = csv_writer(&path)?;
    let labels = res.sequence.labels();
    let header = std::iter::once("iteration".to_string()).chain(labels.iter().cloned());
    w.write_record(header).map_err(|e| csv_error(&path, e))?;
    for r in &res.records {
        let row = std::iter::once(r.index.to_string()).chain(r.marginals.iter().map(f64::to_string));
        w.write_record(row).map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(io(&path))?;

    let path = dir.join(ENERGIES);
    let mut w = csv_writer(&path)?;
    w.write_record(["iteration", "energy"])
        .map_err(|e| csv_error(&path, e))?;
    for r in &res.records {
        w.write_record([r.index.to_string(), r.energy.to_string()])
            .map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(io(&path))?;

    let path = dir.join(STATES);
    let mut w = csv_writer(&path)?;
    w.write_record(["iteration", "state"])
        .map_err(|e| csv_error(&path, e))?;
    for r in &res.records {
        w.write_record([r.index.to_string(), r.argmax.clone()])
            .map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(io(&path))?;

    write_json(
        &dir.join(META),
        &Meta {
            id: res.id.clone(),
            created_at,
            records: res.records.len(),
            aborted: res.aborted,
            segment_boundaries: res.segment_boundaries.clone(),
            final_params: res.final_params.clone(),
            segment_final_params: res.segment_final_params.clone(),
        },
    )
}

pub fn read_meta(dir: &Path) -> Result<Meta, FileError> {
    read_json(&dir.join(META))
}

/// Reads every row of a headed CSV, checking the width and the leading
/// iteration column.
fn read_rows(path: &Path, width: Option<usize>) -> Result<Vec<Vec<String>>, FileError> {
    let bad = |reason: String| FileError::Format {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let expected = width.unwrap_or(reader.headers().map_err(|e| csv_error(path, e))?.len());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        if record.len() != expected {
            return Err(bad(format!("row {i} has {} cells, expected {expected}", record.len())));
        }
        if record.get(0) != Some(i.to_string().as_str()) {
            return Err(bad(format!("row {i} is out of order")));
        }
        rows.push(record.iter().skip(1).map(str::to_string).collect());
    }
    Ok(rows)
}

fn parse_f64(path: &Path, text: &str) -> Result<f64, FileError> {
    text.parse().map_err(|_| FileError::Format {
        path: path.to_path_buf(),
        reason: format!("{text:?} is not a number"),
    })
}

/// Rebuilds the control streams from the post-processed CSV files.
pub fn read_streams(dir: &Path) -> Result<ControlStreams, FileError> {
    let path = dir.join(MARGINALS);
    let c = read_rows(&path, None)?
        .iter()
        .map(|row| row.iter().map(|x| parse_f64(&path, x)).collect())
        .collect::<Result<Vec<Vec<f64>>, _>>()?;
    let path = dir.join(ENERGIES);
    let e = read_rows(&path, Some(2))?
        .iter()
        .map(|row| parse_f64(&path, &row[0]))
        .collect::<Result<Vec<f64>, _>>()?;
    let path = dir.join(STATES);
    let states = read_rows(&path, Some(2))?
        .into_iter()
        .map(|mut row| row.remove(0))
        .collect();
    ControlStreams::new(c, e, states).map_err(|source| FileError::Audio {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn read_records(dir: &Path) -> Result<Vec<IterationRecord>, FileError> {
    read_json(&dir.join(RAW))
}

/// Reassembles the book of a stored experiment.
pub fn read_book(dir: &Path) -> Result<Book, FileError> {
    let meta = read_meta(dir)?;
    let config = read_config(&dir.join(VQE_CONF))?;
    let path = dir.join(H_SETUP);
    let qubo_csv = fs::read_to_string(&path).map_err(io(&path))?;
    let path = dir.join(OPERATORS);
    let operators = fs::read_to_string(&path)
        .map_err(io(&path))?
        .lines()
        .map(str::to_string)
        .collect();
    let records = read_records(dir)?;
    Ok(Book {
        id: meta.id,
        created_at: meta.created_at,
        config,
        qubo_csv,
        operators,
        raw: records.iter().map(|r| r.distribution.clone()).collect(),
        marginals: records.iter().map(|r| r.marginals.clone()).collect(),
        values: records.iter().map(|r| r.energy).collect(),
        states: records.iter().map(|r| r.argmax.clone()).collect(),
        segment_boundaries: meta.segment_boundaries,
        aborted: meta.aborted,
    })
}
