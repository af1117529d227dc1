//! Machine-readable run reports.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::solver::SvipSolution;
use crate::suite::SuiteSummary;
use crate::verify::Certificate;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything one command produced. Field order is the serialization order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: Vec<String>,
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub game_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution: Option<SvipSolution>,
    pub certificates: Vec<Certificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<SuiteSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
    pub wall_time_s: f64,
}

impl Report {
    pub fn new<S: Into<String>>(command: impl IntoIterator<Item = S>) -> Self {
        Self {
            command: command.into_iter().map(Into::into).collect(),
            tool_version: TOOL_VERSION.to_string(),
            seed: None,
            game_digest: None,
            solution: None,
            certificates: Vec::new(),
            summary: None,
            warnings: Vec::new(),
            errors: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    /// The JSON document with the wall time zeroed, for comparing runs.
    pub fn canonical_json(&self) -> String {
        Self {
            wall_time_s: 0.0,
            ..self.clone()
        }
        .to_json()
    }

    /// SHA-256 of [`Report::canonical_json`].
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn all_passed(&self) -> bool {
        self.certificates.iter().all(|c| c.passed || c.expected_failure)
    }
}
