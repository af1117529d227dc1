//! Unit directions in the normal cone `N_ν(x) = 𝒩_{U^s_ν(x)}(x^ν)`.
//!
//! Three mechanisms produce them: the negated own-gradient of a utility
//! (valid for concave utilities), the active outward row normals of an open
//! polyhedral contour, and a separating direction computed from a finite
//! sample of the contour via its minimum-norm point. Cones themselves are
//! never materialized; callers get generators and a membership test.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{self, GameSpec, Interval, PlayerId, PreferenceSpec, Profile};
use crate::polytope::{self, Halfspace};
use crate::rng;

/// Central finite-difference step for utility gradients.
pub const GRADIENT_STEP: f64 = 1e-6;
/// Gradients with smaller norm yield no direction.
pub const GRADIENT_TOL: f64 = 1e-10;
pub const MEMBERSHIP_TOL: f64 = 1e-7;
/// A contour row counts as active when `|a·x - b| <= ACTIVITY_TOL`.
pub const ACTIVITY_TOL: f64 = 1e-9;
pub const ZERO_NORM_TOL: f64 = 1e-9;
/// Contour sample size behind sampled separation.
pub const CONE_SAMPLES: usize = 1000;

/// An element of `N_ν(x) ∩ S_ν(0,1)`, or the zero direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Direction {
    pub player: PlayerId,
    pub vector: Vec<f64>,
}

impl Direction {
    /// Normalizes `v`; `None` if it has no length.
    pub fn unit(player: PlayerId, v: &[f64]) -> Option<Self> {
        let n = polytope::norm(v);
        (n > 0.0 && n.is_finite()).then(|| Self {
            player,
            vector: v.iter().map(|c| c / n).collect(),
        })
    }

    pub fn zero(player: PlayerId, dim: usize) -> Self {
        Self {
            player,
            vector: vec![0.0; dim],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.vector.iter().all(|&c| c == 0.0)
    }

    pub fn norm(&self) -> f64 {
        polytope::norm(&self.vector)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Gradient,
    Polyhedral,
    Sampled,
    /// `U^s_ν(x) = ∅`, so `N_ν(x)` is the whole space.
    FullSpace,
}

/// Finite description of (a sample of) `N_ν(x) ∩ S_ν(0,1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeGenerators {
    pub player: PlayerId,
    pub directions: Vec<Direction>,
    pub provenance: Provenance,
}

impl ConeGenerators {
    pub fn full_space(player: PlayerId) -> Self {
        Self {
            player,
            directions: Vec::new(),
            provenance: Provenance::FullSpace,
        }
    }
}

/// `-∇_{x^ν} θ_ν(x)` normalized, for a `Utility` player.
///
/// For concave `θ_ν` the result lies in `N_ν(x)`: concavity gives
/// `∇θ·(y - x^ν) >= θ(y) - θ(x) > 0` on the strict upper-contour set.
pub fn gradient_normal_direction(game: &GameSpec, player: PlayerId, x: &Profile) -> Result<Option<Direction>> {
    game.check_player(player)?;
    let PreferenceSpec::Utility { expr } = game.preference(player) else {
        return Err(Error::InvalidParameter(format!(
            "player {} has no utility to differentiate",
            player.0
        )));
    };
    let mut z = x.flat().to_vec();
    let mut grad = Vec::with_capacity(game.dim(player));
    for i in game.range(player) {
        let orig = z[i];
        z[i] = orig + GRADIENT_STEP;
        let up = expr.eval(&z)?;
        z[i] = orig - GRADIENT_STEP;
        let down = expr.eval(&z)?;
        z[i] = orig;
        let g = (up - down) / (2.0 * GRADIENT_STEP);
        if !g.is_finite() {
            return Err(Error::NonFinite {
                what: format!("gradient of `{expr}`"),
            });
        }
        grad.push(-g);
    }
    if polytope::norm(&grad) > GRADIENT_TOL {
        Ok(Direction::unit(player, &grad))
    } else {
        Ok(None)
    }
}

/// Largest `t <= 1` such that some `y` in a big box satisfies every row with
/// slack `t`; positive iff the open polyhedron is nonempty (near the box).
fn open_polyhedron_slack(rows: &[Halfspace], centre: &[f64]) -> f64 {
    const RADIUS: f64 = 1e6;
    let d = centre.len();
    let mut lifted: Vec<Halfspace> = rows
        .iter()
        .map(|h| {
            let mut normal = h.normal.clone();
            normal.push(1.0);
            Halfspace::new(normal, h.offset)
        })
        .collect();
    for (i, c) in centre.iter().enumerate() {
        let mut e = vec![0.0; d + 1];
        e[i] = 1.0;
        lifted.push(Halfspace::new(e.clone(), c + RADIUS));
        e[i] = -1.0;
        lifted.push(Halfspace::new(e, RADIUS - c));
    }
    let mut e = vec![0.0; d + 1];
    e[d] = 1.0;
    lifted.push(Halfspace::new(e.clone(), 1.0));
    e[d] = -1.0;
    lifted.push(Halfspace::new(e, 1.0));
    let mut c = vec![0.0; d + 1];
    c[d] = -1.0;
    polytope::lp_min(&c, &lifted, 1e-12).map_or(f64::NEG_INFINITY, |(v, _)| -v)
}

/// Normalized active row normals of the open polyhedron `{ y : a_i·y < b_i }`
/// at a point on its boundary.
pub fn polyhedral_normal_generators(player: PlayerId, rows: &[Halfspace], xblock: &[f64]) -> Result<ConeGenerators> {
    if open_polyhedron_slack(rows, xblock) <= 1e-12 {
        return Ok(ConeGenerators::full_space(player));
    }
    let mut directions = Vec::new();
    let mut interior = true;
    for row in rows {
        let n = polytope::norm(&row.normal);
        if n == 0.0 {
            continue;
        }
        let gap = polytope::dot(&row.normal, xblock) - row.offset;
        if gap > ACTIVITY_TOL * n.max(1.0) {
            return Err(Error::ExteriorPoint);
        }
        if gap >= -ACTIVITY_TOL * n.max(1.0) {
            interior = false;
            if let Some(d) = Direction::unit(player, &row.normal) {
                directions.push(d);
            }
        }
    }
    if interior {
        return Err(Error::InteriorPoint);
    }
    Ok(ConeGenerators {
        player,
        directions,
        provenance: Provenance::Polyhedral,
    })
}

/// A unit `d` with `⟨d, y - x^ν⟩ <= 0` for every sample `y`: the negated,
/// normalized minimum-norm point of `conv{ y - x^ν }`.
pub fn sampled_separating_direction(
    player: PlayerId,
    samples: &[Vec<f64>],
    xblock: &[f64],
) -> Result<Option<Direction>> {
    if samples.is_empty() {
        return Ok(None);
    }
    let shifted: Vec<Vec<f64>> = samples.iter().map(|y| polytope::sub(y, xblock)).collect();
    let mnp = polytope::min_norm_point(&shifted, 1e-9).expect("nonempty input");
    let norm = mnp.norm();
    if norm < ZERO_NORM_TOL {
        return Err(Error::NoSeparator { norm });
    }
    let neg: Vec<f64> = mnp.point.iter().map(|c| -c).collect();
    Ok(Direction::unit(player, &neg))
}

/// `⟨d, y - x^ν⟩ <= tol` for every sample; vacuously true without samples.
pub fn cone_membership(d: &Direction, samples: &[Vec<f64>], xblock: &[f64], tol: f64) -> bool {
    samples.iter().all(|y| {
        let v = polytope::sub(y, xblock);
        polytope::dot(&d.vector, &v) <= tol
    })
}

/// Whether `0 ∈ conv(directions)`, decided by a minimum-norm point.
///
/// A full-space cone contains the whole unit sphere, whose hull is the unit
/// ball, so it always contains zero.
pub fn zero_in_hull(generators: &ConeGenerators) -> bool {
    if generators.provenance == Provenance::FullSpace {
        return true;
    }
    let pts: Vec<Vec<f64>> = generators.directions.iter().map(|d| d.vector.clone()).collect();
    polytope::min_norm_point(&pts, ZERO_NORM_TOL).is_some_and(|m| m.norm() < ZERO_NORM_TOL)
}

/// Deterministic contour sample used to build separators at `x`.
///
/// Half the points come from a small cube around `x^ν` and half from the box
/// inflated by its own width on each side. The normal cone of a convex set at
/// a point of its closure only depends on the set near that point, so the
/// local half sharpens the separator; the wide half catches contours that do
/// not reach `x^ν` at all.
pub fn contour_probe(game: &GameSpec, player: PlayerId, x: &[f64], count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let own = &x[game.range(player)];
    let bounds = game.bounds(player);
    let widest = bounds.iter().map(Interval::width).fold(0.0, f64::max).max(1e-3);
    let local: Vec<Interval> = own
        .iter()
        .map(|&c| Interval(c - 0.1 * widest, c + 0.1 * widest))
        .collect();
    let wide: Vec<Interval> = bounds
        .iter()
        .map(|b| {
            let w = if b.width() > 0.0 { b.width() } else { 1.0 };
            Interval(b.lo() - w, b.hi() + w)
        })
        .collect();
    let base = rng::combine(rng::hash_point(seed, x), player.0 as u64);
    let mut samples = game::sample_contour_in(game, player, x, &local, count / 2, base)?;
    samples.extend(game::sample_contour_in(
        game,
        player,
        x,
        &wide,
        count - count / 2,
        rng::mix(base),
    )?);
    Ok(samples)
}

/// Generators of `N_ν(x) ∩ S_ν(0,1)` by the mechanism the preference allows:
/// gradient, then polyhedral, then sampled separation.
///
/// A generator set with no directions and non-full-space provenance means no
/// nonzero normal could be found.
pub fn normal_generators(game: &GameSpec, player: PlayerId, x: &Profile, seed: u64) -> Result<ConeGenerators> {
    game.check_player(player)?;
    let own = x.block(player);
    match game.preference(player) {
        PreferenceSpec::TrivialZero => return Ok(ConeGenerators::full_space(player)),
        PreferenceSpec::Utility { .. } => {
            if let Some(d) = gradient_normal_direction(game, player, x)? {
                return Ok(ConeGenerators {
                    player,
                    directions: vec![d],
                    provenance: Provenance::Gradient,
                });
            }
        }
        PreferenceSpec::HalfspaceContour { .. } => {
            let rows = game.contour_rows(player, x.flat())?.unwrap_or_default();
            match polyhedral_normal_generators(player, &rows, own) {
                Ok(g) => return Ok(g),
                Err(Error::InteriorPoint | Error::ExteriorPoint) => {}
                Err(e) => return Err(e),
            }
        }
        PreferenceSpec::CoordinateOrder | PreferenceSpec::ThresholdBand => {}
    }
    let samples = contour_probe(game, player, x.flat(), CONE_SAMPLES, seed)?;
    if samples.is_empty() {
        return Ok(ConeGenerators::full_space(player));
    }
    let directions = match sampled_separating_direction(player, &samples, own) {
        Ok(d) => d.into_iter().collect(),
        Err(Error::NoSeparator { .. }) => Vec::new(),
        Err(e) => return Err(e),
    };
    Ok(ConeGenerators {
        player,
        directions,
        provenance: Provenance::Sampled,
    })
}
