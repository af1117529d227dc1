//! Seeded batch suites: the two implications and existence, over corpus
//! instances that satisfy the respective hypotheses.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus;
use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::rng;
use crate::solver::SolverConfig;
use crate::verify::{self, Certificate, CertificateKind, InstanceOutcome, Witness};

/// Fraction of t1 instances that must converge.
pub const T1_MIN_CONVERGED: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    T1,
    T2,
    Existence,
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::T1 => "t1",
            Suite::T2 => "t2",
            Suite::Existence => "existence",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t1" => Ok(Suite::T1),
            "t2" => Ok(Suite::T2),
            "existence" => Ok(Suite::Existence),
            other => Err(Error::InvalidParameter(format!("unknown suite {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub suite: Suite,
    pub instances: usize,
    pub seed: u64,
    pub grid: f64,
    /// SVIP tolerance for separator checks (t2).
    pub svip_tol: f64,
    pub solver: SolverConfig,
}

impl SuiteConfig {
    pub fn new(suite: Suite, instances: usize, seed: u64, grid: f64) -> Self {
        Self {
            suite,
            instances,
            seed,
            grid,
            svip_tol: 1e-6,
            solver: SolverConfig {
                seed,
                ..SolverConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub suite: Suite,
    pub instances: usize,
    pub seed: u64,
    pub grid: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_converged: Option<usize>,
    pub checked: usize,
    pub failures: usize,
    pub inconclusive: usize,
    pub expected_failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub with_equilibrium: Option<usize>,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub summary: SuiteSummary,
    pub certificates: Vec<Certificate>,
    pub instances: Vec<InstanceOutcome>,
}

/// Seed of instance `index` in a suite seeded with `seed`.
pub fn instance_seed(seed: u64, index: usize) -> u64 {
    rng::combine(seed, index as u64)
}

/// The games a suite runs on.
pub fn suite_games(suite: Suite, instances: usize, seed: u64) -> Result<Vec<GameSpec>> {
    (0..instances)
        .map(|i| {
            let s = instance_seed(seed, i);
            match suite {
                Suite::T1 => corpus::random_concave_quadratic(s, 2, 1),
                Suite::T2 => Ok(corpus::random_monotone_concave(s)),
                Suite::Existence => corpus::existence_instance(s),
            }
        })
        .collect()
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    if cfg.instances == 0 {
        return Err(Error::InvalidParameter("a suite needs at least one instance".into()));
    }
    if !(cfg.grid > 0.0 && cfg.grid.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "grid step must be positive, got {}",
            cfg.grid
        )));
    }
    cfg.solver.validate()?;
    let games = suite_games(cfg.suite, cfg.instances, cfg.seed)?;
    let mut summary = SuiteSummary {
        suite: cfg.suite,
        instances: cfg.instances,
        seed: cfg.seed,
        grid: cfg.grid,
        passed: false,
        converged: None,
        min_converged: None,
        checked: 0,
        failures: 0,
        inconclusive: 0,
        expected_failures: 0,
        with_equilibrium: None,
        errors: 0,
    };
    let (certificates, instances) = match cfg.suite {
        Suite::T1 => {
            let batch = verify::theorem1_batch(&games, &cfg.solver, cfg.grid);
            let converged = batch.converged();
            let needed = (T1_MIN_CONVERGED * cfg.instances as f64).ceil() as usize;
            summary.converged = Some(converged);
            summary.min_converged = Some(needed);
            summary.checked = batch.checked();
            summary.failures = batch.failures();
            summary.errors = batch.errors();
            summary.passed = batch.certificate.passed && converged >= needed;
            (vec![batch.certificate], batch.instances)
        }
        Suite::T2 => {
            let batch = verify::theorem2_batch(&games, cfg.grid, cfg.svip_tol);
            let counterexample = verify::theorem2_property(&[corpus::example_trivial_pref()], cfg.grid, cfg.svip_tol);
            summary.checked = batch.checked();
            summary.failures = batch.failures();
            summary.inconclusive = batch.inconclusive();
            summary.expected_failures = batch.expected_failures();
            summary.errors = batch.errors();
            summary.passed = batch.certificate.passed && counterexample.expected_failure;
            (vec![batch.certificate, counterexample], batch.instances)
        }
        Suite::Existence => {
            let results: Vec<(Certificate, InstanceOutcome)> = games
                .par_iter()
                .enumerate()
                .map(|(i, g)| existence_instance(i, g, cfg.grid))
                .collect();
            let with_eq = results.iter().filter(|(c, _)| c.passed).count();
            summary.with_equilibrium = Some(with_eq);
            summary.checked = results.iter().map(|(_, o)| o.checked).sum();
            summary.failures = cfg.instances - with_eq;
            summary.errors = results.iter().filter(|(_, o)| o.error.is_some()).count();
            summary.passed = with_eq == cfg.instances;
            results.into_iter().unzip()
        }
    };
    Ok(SuiteOutcome {
        summary,
        certificates,
        instances,
    })
}

fn existence_instance(index: usize, game: &GameSpec, h: f64) -> (Certificate, InstanceOutcome) {
    let mut outcome = InstanceOutcome {
        index,
        ..Default::default()
    };
    match verify::brute_force_gne(game, h) {
        Ok(eqs) if !eqs.is_empty() => {
            outcome.checked = eqs.len();
            let (x, mut cert) = eqs.into_iter().next().expect("nonempty");
            cert.detail = format!(
                "instance {index}: {} grid equilibria, first {:?}",
                outcome.checked,
                x.flat()
            );
            outcome.point = Some(x.into_flat());
            (cert, outcome)
        }
        Ok(_) => {
            outcome.failures = 1;
            let cert = Certificate::new(
                CertificateKind::GneGrid,
                false,
                format!("instance {index}: no grid equilibrium"),
            )
            .at(h)
            .with_witness(Witness {
                player: None,
                point: Vec::new(),
                instance: Some(index),
            });
            (cert, outcome)
        }
        Err(e) => {
            outcome.error = Some(e.to_string());
            let cert = Certificate::new(CertificateKind::GneGrid, false, format!("instance {index}: {e}")).at(h);
            (cert, outcome)
        }
    }
}
