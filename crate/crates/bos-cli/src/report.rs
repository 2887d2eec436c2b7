//! Machine-readable run reports: one JSON document per invocation with the
//! resolved configuration, command-specific results, and a named check for
//! every quantitative contract the command exercises.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// One quantitative contract: `pass` is `value <= threshold` for defect
/// metrics and `value >= threshold` for lower bounds; the comparison is
/// recorded explicitly so consumers never have to guess.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// "<=" or ">=".
    pub comparison: &'static str,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            threshold,
            comparison: "<=",
            pass: value <= threshold,
        }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            threshold,
            comparison: ">=",
            pass: value >= threshold,
        }
    }

    /// Boolean contract encoded as 1.0 (holds) / 0.0 (violated).
    pub fn holds(name: &str, ok: bool) -> Self {
        Self::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    /// Unix seconds; honors SOURCE_DATE_EPOCH for reproducible artifacts.
    pub timestamp: u64,
    pub command: String,
    pub seed: u64,
    /// Echo of the fully resolved configuration, sorted for determinism.
    pub config: BTreeMap<String, String>,
    pub results: serde_json::Value,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(command: &str, seed: u64, config: BTreeMap<String, String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            timestamp: timestamp(),
            command: command.to_string(),
            seed,
            config,
            results: serde_json::Value::Null,
            checks: Vec::new(),
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)
    }
}

fn timestamp() -> u64 {
    if let Ok(epoch) = std::env::var("SOURCE_DATE_EPOCH") {
        if let Ok(v) = epoch.trim().parse::<u64>() {
            return v;
        }
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
