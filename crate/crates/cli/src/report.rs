//! Run reports. Field order is fixed by declaration order so that identical
//! runs serialize to identical bytes.

use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

use geoconvex::bifunction::ProbeReport;
use geoconvex::checker::{CheckReport, Revalidation};

use crate::config::Expectation;

pub const TOOL: &str = "geoconvex";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Overall {
    Ok,
    Mismatch,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_digest: String,
    pub seed: u64,
    pub overall: Overall,
    pub checks: Vec<CheckEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub kind: String,
    pub expect: Expectation,
    pub matched: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub revalidation: Option<Revalidation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunReport {
    pub fn new(command: &str, config_bytes: &[u8], seed: u64, checks: Vec<CheckEntry>) -> Self {
        let overall = if checks.iter().all(|c| c.matched) { Overall::Ok } else { Overall::Mismatch };
        RunReport {
            tool: TOOL,
            version: VERSION,
            command: command.to_string(),
            config_digest: digest(config_bytes),
            seed,
            overall,
            checks,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.overall {
            Overall::Ok => 0,
            Overall::Mismatch => 1,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{TOOL} {} {}  seed {}  config {}", self.version, self.command, self.seed, &self.config_digest[..12]);
        for c in &self.checks {
            let status = match (&c.report, &c.error) {
                (Some(r), _) => r.status.as_str().to_string(),
                (None, Some(_)) => "error".to_string(),
                _ => "-".to_string(),
            };
            let mark = if c.matched { "ok" } else { "MISMATCH" };
            let _ = writeln!(out, "{mark:<8} {:<28} {:<26} {:<18} expect {}", c.name, c.kind, status, c.expect.as_str());
            if let Some(e) = &c.error {
                let _ = writeln!(out, "         error: {e}");
            }
            if let Some(r) = &c.report {
                if let Some(m) = r.worst_margin {
                    let _ = writeln!(out, "         worst margin {m:.6e} over {} samples", r.samples);
                }
                if let Some(v) = &r.violation {
                    let _ = writeln!(
                        out,
                        "         witness x={:?} y={:?} t={} lhs={:.6e} rhs={:.6e}",
                        v.x, v.y, v.t, v.lhs, v.rhs
                    );
                }
                for (k, v) in &r.metrics {
                    let _ = writeln!(out, "         {k} = {v}");
                }
                for n in &r.notes {
                    let _ = writeln!(out, "         note: {n}");
                }
                for s in &r.subchecks {
                    let _ = writeln!(out, "         - {} {}", s.check, s.status);
                }
                if !r.margin_history.is_empty() {
                    let _ = writeln!(out, "         margin history {:?}", r.margin_history);
                }
            }
            if let Some(r) = &c.revalidation {
                let _ = writeln!(out, "         revalidated margin {:.6e} confirmed {}", r.margin, r.confirmed);
            }
        }
        let overall = match self.overall {
            Overall::Ok => "all expectations matched",
            Overall::Mismatch => "at least one expectation not matched",
        };
        let _ = writeln!(out, "{overall}");
        out
    }
}
