use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::design::Method;
use crate::error::{Error, Result};

/// One design outcome. `w` holds the extracted weights as space-separated
/// `re im` pairs; empty when no weight was extracted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    pub gamma_db: f64,
    pub channel: u64,
    pub channel_seed: u64,
    pub status: String,
    pub objective: f64,
    pub rank: Option<usize>,
    /// `eig`, `rand` or `none`.
    pub extraction: String,
    pub rand_feasible: Option<usize>,
    pub power: Option<f64>,
    pub outage_exact: Option<f64>,
    pub outage_quadratic: Option<f64>,
    pub iterations: usize,
    pub w: String,
}

/// Resume key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowKey {
    pub method: Method,
    pub gamma_bits: u64,
    pub channel_seed: u64,
}

impl ResultRow {
    pub fn key(&self) -> RowKey {
        RowKey {
            method: self.method,
            gamma_bits: self.gamma_db.to_bits(),
            channel_seed: self.channel_seed,
        }
    }

    pub fn feasible(&self) -> bool {
        self.status == crate::conic::Status::Optimal.as_str()
    }

    pub fn weights(&self) -> Result<Option<Vec<Complex64>>> {
        decode_weights(&self.w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub method: Method,
    pub gamma_db: f64,
    pub channel: u64,
    pub millis: f64,
}

pub(crate) fn encode_weights(w: Option<&[Complex64]>) -> String {
    match w {
        None => String::new(),
        Some(w) => w
            .iter()
            .flat_map(|z| [z.re, z.im])
            .map(|v| format!("{v:e}"))
            .collect::<Vec<_>>()
            .join(" "),
    }
}

pub(crate) fn decode_weights(s: &str) -> Result<Option<Vec<Complex64>>> {
    if s.trim().is_empty() {
        return Ok(None);
    }
    let vals: Vec<f64> = s
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| Error::Config(format!("bad weight {t:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    if vals.len() % 2 != 0 {
        return Err(Error::Config("odd number of weight components".into()));
    }
    Ok(Some(
        vals.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect(),
    ))
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub(crate) fn existing_keys(path: &Path) -> Result<BTreeSet<RowKey>> {
    if !path.exists() {
        return Ok(BTreeSet::new());
    }
    Ok(read_rows::<ResultRow>(path)?
        .iter()
        .map(ResultRow::key)
        .collect())
}

/// CSV appender that writes the header only for a new or empty file.
pub(crate) fn appender(path: &Path) -> Result<csv::Writer<File>> {
    let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    Ok(csv::WriterBuilder::new()
        .has_headers(fresh)
        .from_writer(file))
}

pub(crate) fn write_all<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
