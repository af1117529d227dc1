//! Independent certification of candidate equilibria.
//!
//! Everything here re-derives its verdict from the game description alone and
//! never trusts solver internals.

use serde::Serialize;

mod grid;
mod lhc;
mod svip;
mod theorems;

pub use grid::{brute_force_gne, check_gne_grid, grid_axis, player_grid, GRID_BUDGET};
pub use lhc::{lhc_probe, ParametricSet, SetInterval};
pub use svip::{check_svip, region_linear_min};
pub use theorems::{
    separator, theorem1_batch, theorem1_property, theorem2_batch, theorem2_property, BatchOutcome, InstanceOutcome,
    SeparatorOutcome,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    GneGrid,
    Svip,
    Theorem1,
    Theorem2,
    Lhc,
}

/// A violating point, deviation or instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub player: Option<usize>,
    pub point: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub passed: bool,
    /// Grid step the verdict refers to, where one applies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    /// The failure is the one predicted when a hypothesis is knowingly violated.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub expected_failure: bool,
}

impl Certificate {
    pub fn new(kind: CertificateKind, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            kind,
            passed,
            resolution: None,
            witness: None,
            detail: detail.into(),
            margin: None,
            expected_failure: false,
        }
    }

    pub fn at(mut self, h: f64) -> Self {
        self.resolution = Some(h);
        self
    }

    pub fn with_witness(mut self, witness: Witness) -> Self {
        self.witness = Some(witness);
        self
    }
}
