//! Projected fixed-point iteration for the Stampacchia QVI `SVIP(T, K)` with
//! `T(x) = ∏ conv(N_ν(x) ∩ S_ν(0,1))`, driven by a single-valued selection.

use rayon::prelude::*;
use serde::Serialize;

use crate::cone::{self, Direction, Provenance};
use crate::error::{Error, Result};
use crate::game::{FeasibleRegion, GameSpec, PlayerId, Profile};
use crate::polytope::{self, Halfspace};
use crate::rng;

/// Seed for the contour samples behind sampled selections. Fixed so that the
/// selection is a function of the point alone.
pub const SELECTION_SEED: u64 = 0x5E1E_C710;

const DYKSTRA_CYCLES: usize = 200;
/// Hard cap for cycles spent after `DYKSTRA_CYCLES` while still infeasible.
const DYKSTRA_EXTRA_CYCLES: usize = 20_000;
const DYKSTRA_MOVE_TOL: f64 = 1e-12;
const STEP_SHRINK: f64 = 0.5;
const STEP_GROW: f64 = 1.2;
/// Probe distance for declaring a utility player's strict upper contour set
/// numerically empty.
pub const STATIONARY_PROBE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Initial (and maximal) per-player step length.
    pub step: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Record `(iteration, residual)` pairs of the returned run.
    #[serde(skip)]
    pub trace: bool,
    /// Run restarts on the rayon pool.
    #[serde(skip)]
    pub parallel: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step: 0.1,
            tol: 1e-8,
            max_iters: 10_000,
            restarts: 16,
            seed: 42,
            trace: false,
            parallel: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iters == 0 || self.restarts == 0 {
            return Err(Error::InvalidParameter(
                "max_iters and restarts must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionSource {
    Gradient,
    Polyhedral,
    Sampled,
    /// `U^s_ν(x) = ∅`: the player contributes the zero direction.
    FullSpace,
    /// The contour is nonempty but no nonzero normal was found.
    NotFound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectedDirection {
    pub direction: Direction,
    pub source: SelectionSource,
}

/// One value `g(x)` of the selection of `T`, per player.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub components: Vec<SelectedDirection>,
}

impl Selection {
    pub fn stacked(&self) -> Vec<f64> {
        self.components
            .iter()
            .flat_map(|c| c.direction.vector.iter().copied())
            .collect()
    }

    /// Every component nonzero, i.e. the value lies in `N_0(x)`.
    pub fn in_n0(&self) -> bool {
        self.components.iter().all(|c| !c.direction.is_zero())
    }

    pub fn full_space_players(&self) -> Vec<usize> {
        self.components
            .iter()
            .filter(|c| c.source == SelectionSource::FullSpace)
            .map(|c| c.direction.player.0)
            .collect()
    }

    pub fn all_full_space(&self) -> bool {
        self.components.iter().all(|c| c.source == SelectionSource::FullSpace)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvipSolution {
    pub point: Profile,
    pub operator_value: Selection,
    pub residual: f64,
    pub iters: usize,
    pub converged: bool,
    /// Index of the restart that produced this run.
    pub restart: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<(usize, f64)>>,
}

fn project_halfspace(h: &Halfspace, y: &mut [f64]) {
    let nn = polytope::dot(&h.normal, &h.normal);
    let excess = polytope::dot(&h.normal, y) - h.offset;
    if excess > 0.0 && nn > 0.0 {
        let t = excess / nn;
        for (v, a) in y.iter_mut().zip(&h.normal) {
            *v -= t * a;
        }
    }
}

/// Dykstra's alternating projections onto the box and each halfspace.
///
/// Stops after 200 cycles or once an entire cycle moves less than 1e-12; if
/// the iterate is still infeasible at that point, cycling continues until it
/// is feasible within `FEASIBILITY_TOL`.
pub(crate) fn dykstra(region: &FeasibleRegion, p: &[f64]) -> Vec<f64> {
    let clamp = |y: &mut [f64]| {
        for (v, b) in y.iter_mut().zip(&region.bounds) {
            *v = b.clamp(*v);
        }
    };
    let mut x = p.to_vec();
    if region.halfspaces.is_empty() {
        clamp(&mut x);
        return x;
    }
    let sets = region.halfspaces.len() + 1;
    let mut increments = vec![vec![0.0; x.len()]; sets];
    for cycle in 0..DYKSTRA_CYCLES + DYKSTRA_EXTRA_CYCLES {
        if cycle >= DYKSTRA_CYCLES && region.contains(&x, crate::game::FEASIBILITY_TOL) {
            break;
        }
        let before = x.clone();
        for (k, inc) in increments.iter_mut().enumerate() {
            let y: Vec<f64> = x.iter().zip(inc.iter()).map(|(a, b)| a + b).collect();
            let mut z = y.clone();
            if k == 0 {
                clamp(&mut z);
            } else {
                project_halfspace(&region.halfspaces[k - 1], &mut z);
            }
            for ((i, a), b) in inc.iter_mut().zip(&y).zip(&z) {
                *i = a - b;
            }
            x = z;
        }
        if polytope::distance(&x, &before) < DYKSTRA_MOVE_TOL && region.contains(&x, crate::game::FEASIBILITY_TOL) {
            break;
        }
    }
    x
}

/// Euclidean projection onto `box ∩ halfspaces`.
pub fn project_feasible(region: &FeasibleRegion, p: &[f64]) -> Result<Vec<f64>> {
    if region.empty {
        return Err(Error::InfeasibleRegion {
            player: region.player.0,
        });
    }
    if p.len() != region.dim() {
        return Err(Error::DimensionMismatch {
            expected: region.dim(),
            got: p.len(),
            context: "projection input".into(),
        });
    }
    Ok(dykstra(region, p))
}

/// Whether no point `x^ν ± δ e_i` is strictly preferred to `x`. Near an
/// unconstrained optimum the gradient never vanishes in floating point, but
/// the contour shrinks below this resolution and `N_ν(x)` is then taken to be
/// the whole space.
fn numerically_stationary(game: &GameSpec, player: PlayerId, x: &Profile) -> Result<bool> {
    let mut y = x.block(player).to_vec();
    for i in 0..y.len() {
        let orig = y[i];
        for shift in [STATIONARY_PROBE, -STATIONARY_PROBE] {
            y[i] = orig + shift;
            if game.prefers(player, &y, x.flat())? {
                return Ok(false);
            }
        }
        y[i] = orig;
    }
    Ok(true)
}

/// One element of `N_ν(x) ∩ S_ν(0,1)` per player (gradient, then polyhedral,
/// then sampled), or the zero direction for players with no strict
/// improvement or no nonzero normal.
pub fn selection_t(game: &GameSpec, x: &Profile) -> Result<Selection> {
    let components = game
        .player_ids()
        .map(|p| {
            let gens = cone::normal_generators(game, p, x, SELECTION_SEED)?;
            let dim = game.dim(p);
            let stationary = gens.provenance == Provenance::Gradient && numerically_stationary(game, p, x)?;
            Ok(match (gens.provenance, gens.directions.into_iter().next()) {
                (Provenance::FullSpace, _) => SelectedDirection {
                    direction: Direction::zero(p, dim),
                    source: SelectionSource::FullSpace,
                },
                _ if stationary => SelectedDirection {
                    direction: Direction::zero(p, dim),
                    source: SelectionSource::FullSpace,
                },
                (_, None) => SelectedDirection {
                    direction: Direction::zero(p, dim),
                    source: SelectionSource::NotFound,
                },
                (prov, Some(direction)) => SelectedDirection {
                    direction,
                    source: match prov {
                        Provenance::Gradient => SelectionSource::Gradient,
                        Provenance::Polyhedral => SelectionSource::Polyhedral,
                        _ => SelectionSource::Sampled,
                    },
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Selection { components })
}

/// Per-player projection of `x^ν - α_ν g^ν` onto `K_ν(x^{-ν})`.
fn projected_step(game: &GameSpec, x: &[f64], g: &[f64], steps: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(x.len());
    for p in game.player_ids() {
        let r = game.range(p);
        let region = game.region_at(p, x)?;
        let target: Vec<f64> = x[r.clone()]
            .iter()
            .zip(&g[r])
            .map(|(a, d)| a - steps[p.0] * d)
            .collect();
        out.extend(project_feasible(&region, &target)?);
    }
    Ok(out)
}

fn residual_with_steps(game: &GameSpec, x: &[f64], g: &[f64], steps: &[f64]) -> Result<f64> {
    let projected = projected_step(game, x, g, steps)?;
    Ok(polytope::distance(x, &projected))
}

/// `‖x - Proj_{K(x)}(x - α g)‖`, zero exactly when `⟨g, y - x⟩ >= 0` on `K(x)`.
pub fn natural_residual(game: &GameSpec, x: &Profile, g: &[f64], alpha: f64) -> Result<f64> {
    if g.len() != game.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: game.total_dim(),
            got: g.len(),
            context: "stacked direction".into(),
        });
    }
    game.require_feasible(x.flat())?;
    residual_with_steps(game, x.flat(), g, &vec![alpha; game.n_players()])
}

/// Gauss-Seidel pass projecting each block onto its feasible set given the
/// current rivals. Afterwards `x ∈ K(x)` whenever every set was nonempty.
fn repair(game: &GameSpec, x: &mut [f64]) -> Result<()> {
    for p in game.player_ids() {
        let r = game.range(p);
        let region = game.region_at(p, x)?;
        let y = project_feasible(&region, &x[r.clone()])?;
        x[r].copy_from_slice(&y);
    }
    Ok(())
}

fn step_with(game: &GameSpec, x: &[f64], g: &[f64], steps: &[f64]) -> Result<Vec<f64>> {
    let mut next = projected_step(game, x, g, steps)?;
    if !game.is_feasible(&next)? {
        repair(game, &mut next)?;
    }
    Ok(next)
}

/// One iteration `x⁺ = Proj_{K(x)}(x - α g(x))`, followed by a feasibility
/// repair when shared constraints make the simultaneous move leave `K(x⁺)`.
pub fn fixed_point_step(game: &GameSpec, x: &Profile, cfg: &SolverConfig) -> Result<Profile> {
    game.require_feasible(x.flat())?;
    let g = selection_t(game, x)?.stacked();
    let steps = vec![cfg.step; game.n_players()];
    Profile::from_flat(game, &step_with(game, x.flat(), &g, &steps)?)
}

/// Interior starting point for restart `restart`, from a seeded Halton stream.
pub fn starting_point(game: &GameSpec, seed: u64, restart: usize) -> Vec<f64> {
    let offset = rng::mix(seed) % 4096;
    let u = rng::halton(offset + restart as u64 + 1, game.total_dim());
    game.stacked_bounds()
        .iter()
        .zip(u)
        .map(|(b, t)| b.lo() + t * b.width())
        .collect()
}

fn run(game: &GameSpec, cfg: &SolverConfig, restart: usize) -> Result<SvipSolution> {
    let mut x = starting_point(game, cfg.seed, restart);
    repair(game, &mut x)?;
    if !game.is_feasible(&x)? {
        return Err(Error::SolverFailed(format!("restart {restart}: start not in K(x)")));
    }
    let n_players = game.n_players();
    let mut steps = vec![cfg.step; n_players];
    let nominal = vec![cfg.step; n_players];
    let mut previous: Option<Selection> = None;
    let mut trace = cfg.trace.then(Vec::new);
    let mut iters = 0;
    loop {
        let profile = Profile::from_flat(game, &x)?;
        let selection = selection_t(game, &profile)?;
        if let Some(prev) = &previous {
            // sign-based step control: a reversed direction means the player
            // stepped across a point where its normal flips
            for (p, (now, before)) in selection.components.iter().zip(&prev.components).enumerate() {
                let turn = polytope::dot(&now.direction.vector, &before.direction.vector);
                if turn < 0.0 {
                    steps[p] *= STEP_SHRINK;
                } else if turn > 0.0 {
                    steps[p] = (steps[p] * STEP_GROW).min(cfg.step);
                }
            }
        }
        let g = selection.stacked();
        let residual = residual_with_steps(game, &x, &g, &nominal)?;
        if let Some(t) = trace.as_mut() {
            t.push((iters, residual));
        }
        if residual <= cfg.tol || iters >= cfg.max_iters {
            return Ok(SvipSolution {
                point: profile,
                operator_value: selection,
                residual,
                iters,
                converged: residual <= cfg.tol,
                restart,
                trace,
            });
        }
        x = step_with(game, &x, &g, &steps)?;
        previous = Some(selection);
        iters += 1;
    }
}

/// Multistart projected fixed-point solve of `SVIP(T, K)`.
///
/// Each player's step halves whenever its selected direction reverses and
/// grows back (up to `cfg.step`) while it keeps its sign. Convergence is
/// judged by the natural residual at `cfg.step`. Returns the run with the smallest
/// final residual, ties to the lowest restart index.
pub fn solve_svip(game: &GameSpec, cfg: &SolverConfig) -> Result<SvipSolution> {
    cfg.validate()?;
    let runs: Vec<Result<SvipSolution>> = if cfg.parallel {
        (0..cfg.restarts).into_par_iter().map(|r| run(game, cfg, r)).collect()
    } else {
        (0..cfg.restarts).map(|r| run(game, cfg, r)).collect()
    };
    let mut best: Option<SvipSolution> = None;
    let mut last_err = None;
    for outcome in runs {
        match outcome {
            Ok(sol) => {
                if best.as_ref().map_or(true, |b| sol.residual < b.residual) {
                    best = Some(sol);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| match last_err {
        Some(Error::SolverFailed(m)) => Error::SolverFailed(m),
        Some(e) => Error::SolverFailed(e.to_string()),
        None => Error::SolverFailed("no restarts".into()),
    })
}
