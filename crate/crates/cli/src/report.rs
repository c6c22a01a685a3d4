//! JSON summary and CSV trace output.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Signed slack; nonnegative iff the check passes.
    pub margin: f64,
}

impl Check {
    /// Passes iff `margin >= 0`.
    pub fn from_margin(name: &str, margin: f64) -> Self {
        Self {
            name: name.to_string(),
            pass: margin >= 0.0,
            margin,
        }
    }
}

/// Field order is the serialized key order.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub system: String,
    pub subcommand: String,
    pub omega_seed: u64,
    pub lambda1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda1_adjoint: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Named scalar results beyond the exponents.
    pub values: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub traces: Vec<PathBuf>,
    /// The only field that differs between identical runs.
    pub timestamp: u64,
}

impl Report {
    pub fn new(system: &str, subcommand: &str, omega_seed: u64) -> Self {
        Self {
            system: system.to_string(),
            subcommand: subcommand.to_string(),
            omega_seed,
            lambda1: None,
            lambda1_adjoint: None,
            lambda2: None,
            sigma: None,
            values: BTreeMap::new(),
            checks: Vec::new(),
            traces: Vec::new(),
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Collects CSV traces under the output directory. With `enabled` unset
/// nothing is written and no paths are recorded.
pub struct TraceSink {
    dir: PathBuf,
    enabled: bool,
    pub written: Vec<PathBuf>,
}

impl TraceSink {
    pub fn new(dir: &Path, enabled: bool) -> Self {
        Self {
            dir: dir.to_path_buf(),
            enabled,
            written: Vec::new(),
        }
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> io::Result<()> {
        if !self.enabled {
            return Ok(());
        }
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }
}

/// Two-column numeric CSV with a header row.
pub fn pairs_csv<A: ToString, B: ToString>(header: [&str; 2], rows: impl IntoIterator<Item = (A, B)>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for (a, b) in rows {
        w.write_record([a.to_string(), b.to_string()]).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_has_empty_checks() {
        let mut r = Report::new("scalar-dde", "verify-assumptions", 0);
        r.timestamp = 0;
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["checks"], serde_json::json!([]));
        assert!(v["lambda1"].is_null());
        assert!(v.get("sigma").is_none());
        assert!(r.passed());
    }

    #[test]
    fn keys_keep_declaration_order() {
        let json = Report::new("x", "y", 1).to_json();
        let pos = |k: &str| json.find(&format!("\"{k}\"")).unwrap();
        assert!(pos("system") < pos("omega_seed") && pos("omega_seed") < pos("checks"));
        assert!(pos("traces") < pos("timestamp"));
    }

    #[test]
    fn csv_has_header_and_line_feeds() {
        let out = String::from_utf8(pairs_csv(["t", "v"], [(1, 2.5), (2, 3.0)])).unwrap();
        assert_eq!(out, "t,v\n1,2.5\n2,3\n");
    }
}
