//! CSV and JSON emission plus run manifests.
//!
//! CSV files always start with the fixed header of their row type, even when
//! there are no rows. JSON objects are written with keys sorted
//! lexicographically and a trailing newline; floats use the shortest decimal
//! that round-trips, and non-finite values become `null`.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::io::Write;

use crate::error::Result;
use crate::mc::{MeanIsometryRow, SmallBallRow, StabilityRow, TransitionRow};

/// Row types with a fixed CSV header, in field order.
pub trait CsvRow: Serialize {
    const HEADER: &'static [&'static str];
}

impl CsvRow for TransitionRow {
    const HEADER: &'static [&'static str] = &["n", "trials", "successes", "rate", "d", "two_d", "mean_lifted_error"];
}

impl CsvRow for StabilityRow {
    const HEADER: &'static [&'static str] = &[
        "delta",
        "trials",
        "violations",
        "violation_rate",
        "epsilon",
        "failure_bound",
        "failure_bound_raw",
        "mean_distance",
        "max_distance",
    ];
}

impl CsvRow for SmallBallRow {
    const HEADER: &'static [&'static str] =
        &["case", "m1", "m2", "rho", "spectral_norm", "trials", "p_hat", "std_err", "bound", "exact"];
}

impl CsvRow for MeanIsometryRow {
    const HEADER: &'static [&'static str] = &["n", "m1", "m2", "radius", "trials", "relative_error"];
}

pub fn write_csv<T: CsvRow, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(T::HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string<T: CsvRow>(rows: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Pretty JSON with lexicographically sorted keys and a trailing newline.
pub fn json_string<T: Serialize>(value: &T) -> Result<String> {
    // serde_json's map is ordered by key unless `preserve_order` is enabled
    let v: Value = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

/// Git-style content hash: SHA-256 of `"blob <len>\0" ‖ content`, hex encoded.
pub fn content_hash(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Run manifest: the command, the echoed configuration and its content hash.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    /// [`content_hash`] of the compact sorted-key JSON of `config`.
    pub config_hash: String,
    pub version: String,
}

impl RunManifest {
    pub fn new<T: Serialize>(command: &str, config: &T) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        let canonical = serde_json::to_string(&config)?;
        Ok(Self {
            command: command.to_string(),
            config_hash: content_hash(canonical.as_bytes()),
            config,
            version: env!("CARGO_PKG_VERSION").to_string(),
        })
    }
}
