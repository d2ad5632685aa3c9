//! Output helpers: deterministic result files plus a timing sidecar.
//!
//! Result files (CSV and JSON) are pure functions of the configuration and
//! artifact version. Wall-clock times are measurement metadata and go only
//! into `timings.json`, which is the one file excluded from the
//! byte-identical reproducibility contract.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub const TIMINGS_FILE: &str = "timings.json";

pub fn artifact_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

/// Writes a serializable record as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, record: &T) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output dir {}", dir.display()))?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(record).context("serializing record")?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Writes CSV rows (already formatted, without line endings) under a
/// header. Fields use '.' decimals via Rust's float formatting.
pub fn write_csv(dir: &Path, name: &str, header: &str, rows: &[String]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output dir {}", dir.display()))?;
    let path = dir.join(name);
    let mut text = String::with_capacity(rows.len() * 64 + header.len() + 2);
    text.push_str(header);
    text.push_str("\r\n");
    for row in rows {
        text.push_str(row);
        text.push_str("\r\n");
    }
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Merges one command's wall time into the timing sidecar.
pub fn record_timing(dir: &Path, command: &str, seconds: f64) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output dir {}", dir.display()))?;
    let path = dir.join(TIMINGS_FILE);
    let mut timings: BTreeMap<String, f64> = match std::fs::read_to_string(&path) {
        Ok(text) => serde_json::from_str(&text).unwrap_or_default(),
        Err(_) => BTreeMap::new(),
    };
    timings.insert(command.to_string(), seconds);
    let mut text = serde_json::to_string_pretty(&timings)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Reads the timing sidecar, if present.
pub fn read_timings(dir: &Path) -> BTreeMap<String, f64> {
    match std::fs::read_to_string(dir.join(TIMINGS_FILE)) {
        Ok(text) => serde_json::from_str(&text).unwrap_or_default(),
        Err(_) => BTreeMap::new(),
    }
}
