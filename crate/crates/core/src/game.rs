//! Generalized ordinal games: players, strategy boxes, strict-preference
//! oracles and the moving feasible sets `K_ν(x^{-ν})`.

use std::fmt;
use std::ops::Range;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::polytope::{self, Halfspace};
use crate::rng;

/// Feasibility slack used for every membership test of `K_ν`.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Relative indifference band for utility comparisons: `y` is strictly
/// preferred only if it beats `x` by more than `1e-12 * max(1, |θ(x)|)`.
/// Differences below this are floating-point noise, not preference.
pub const UTILITY_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlayerId(pub usize);

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

/// A closed interval `[lo, hi]`, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval(pub f64, pub f64);

impl Interval {
    pub fn lo(&self) -> f64 {
        self.0
    }

    pub fn hi(&self) -> f64 {
        self.1
    }

    pub fn width(&self) -> f64 {
        self.1 - self.0
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.max(self.0).min(self.1)
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.0 - tol && v <= self.1 + tol
    }
}

/// One player's strategy sub-vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Block {
    pub player: PlayerId,
    pub values: Vec<f64>,
}

impl Block {
    pub fn new(player: usize, values: Vec<f64>) -> Self {
        Self {
            player: PlayerId(player),
            values,
        }
    }
}

/// A full strategy profile, stored stacked in player order.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    values: Vec<f64>,
    offsets: Vec<usize>,
}

impl Profile {
    /// Builds a profile from a stacked vector using the game's dimensions.
    pub fn from_flat(game: &GameSpec, values: &[f64]) -> Result<Self> {
        if values.len() != game.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: game.total_dim(),
                got: values.len(),
                context: "profile length".into(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: format!("profile entry {v}"),
            });
        }
        Ok(Self {
            values: values.to_vec(),
            offsets: game.offsets(),
        })
    }

    pub fn flat(&self) -> &[f64] {
        &self.values
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.values
    }

    pub fn n_players(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn block(&self, player: PlayerId) -> &[f64] {
        &self.values[self.offsets[player.0]..self.offsets[player.0 + 1]]
    }

    pub fn blocks(&self) -> Vec<Block> {
        (0..self.n_players())
            .map(|p| Block::new(p, self.block(PlayerId(p)).to_vec()))
            .collect()
    }

    /// Same profile with player `block.player`'s strategy replaced.
    pub fn with_block(&self, block: &Block) -> Self {
        let mut out = self.clone();
        out.values[self.offsets[block.player.0]..self.offsets[block.player.0 + 1]].copy_from_slice(&block.values);
        out
    }

    /// Stacked strategies of everybody but `player`.
    pub fn rivals(&self, player: PlayerId) -> Vec<f64> {
        let r = self.offsets[player.0]..self.offsets[player.0 + 1];
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| !r.contains(i))
            .map(|(_, v)| *v)
            .collect()
    }
}

impl Serialize for Profile {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let blocks: Vec<&[f64]> = (0..self.n_players()).map(|p| self.block(PlayerId(p))).collect();
        blocks.serialize(s)
    }
}

/// Affine row `coeffs(x) · y < offset(x)` of an open polyhedral contour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourRow {
    pub coeffs: Vec<Expr>,
    pub offset: Expr,
}

/// How a player ranks its own strategies, given the rivals' strategies.
///
/// Only the strict part is represented; completeness and transitivity are
/// never assumed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum PreferenceSpec {
    /// `y ≻ x` iff `θ(y, x^{-ν}) > θ(x)` (beyond [`UTILITY_TIE_TOL`]).
    Utility { expr: Expr },
    /// `y ≻ x` iff every own coordinate of `y` strictly exceeds `x^ν`.
    CoordinateOrder,
    /// `x ⪰ y` iff `x = y = 0`; the strict part is empty.
    TrivialZero,
    /// `U^s_ν(x) = { y : coeffs_i(x) · y < offset_i(x) for all rows }`.
    HalfspaceContour { rows: Vec<ContourRow> },
    /// `(a, b) ⪰ (x, y)` iff `a >= 0` and `b >= y`: own strategies are
    /// improved to any nonnegative value, but only from a negative one.
    ThresholdBand,
}

impl PreferenceSpec {
    pub fn utility(expr: &str) -> Result<Self> {
        Ok(PreferenceSpec::Utility {
            expr: Expr::parse(expr)?,
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PreferenceSpec::Utility { .. } => "Utility",
            PreferenceSpec::CoordinateOrder => "CoordinateOrder",
            PreferenceSpec::TrivialZero => "TrivialZero",
            PreferenceSpec::HalfspaceContour { .. } => "HalfspaceContour",
            PreferenceSpec::ThresholdBand => "ThresholdBand",
        }
    }

    fn expressions(&self) -> Vec<&Expr> {
        match self {
            PreferenceSpec::Utility { expr } => vec![expr],
            PreferenceSpec::HalfspaceContour { rows } => rows
                .iter()
                .flat_map(|r| r.coeffs.iter().chain(std::iter::once(&r.offset)))
                .collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum ConstraintMapSpec {
    /// `K_ν(x^{-ν}) = X_ν`.
    BoxOnly,
    /// `K_ν(x^{-ν}) = { y ∈ X_ν : A (y, x^{-ν}) <= b }`.
    SharedLinear {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        /// Set once nonemptiness of every `K_ν` over the box has been probed.
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        nonempty_probed: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerSpec {
    pub dim: usize,
    #[serde(rename = "box")]
    pub bounds: Vec<Interval>,
    pub preference: PreferenceSpec,
}

impl PlayerSpec {
    pub fn new(bounds: Vec<Interval>, preference: PreferenceSpec) -> Self {
        Self {
            dim: bounds.len(),
            bounds,
            preference,
        }
    }
}

/// Full description of a generalized ordinal game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub players: Vec<PlayerSpec>,
    pub constraints: ConstraintMapSpec,
}

/// The feasible set `K_ν(x^{-ν})` of one player, rivals substituted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibleRegion {
    pub player: PlayerId,
    pub bounds: Vec<Interval>,
    pub halfspaces: Vec<Halfspace>,
    pub empty: bool,
}

impl FeasibleRegion {
    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        y.len() == self.dim()
            && self.bounds.iter().zip(y).all(|(b, v)| b.contains(*v, tol))
            && self.halfspaces.iter().all(|h| h.violation(y) <= tol)
    }

    /// Box faces followed by the halfspaces, as `normal · y <= offset` rows.
    pub fn rows(&self) -> Vec<Halfspace> {
        let d = self.dim();
        let mut rows = Vec::with_capacity(2 * d + self.halfspaces.len());
        for (i, b) in self.bounds.iter().enumerate() {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            rows.push(Halfspace::new(e.clone(), b.hi()));
            e[i] = -1.0;
            rows.push(Halfspace::new(e, -b.lo()));
        }
        rows.extend(self.halfspaces.iter().cloned());
        rows
    }
}

/// A problem found by [`validate_spec`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub player: Option<usize>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.player {
            Some(p) => write!(f, "player {p}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl GameSpec {
    pub fn new(players: Vec<PlayerSpec>, constraints: ConstraintMapSpec) -> Self {
        Self { players, constraints }
    }

    pub fn n_players(&self) -> usize {
        self.players.len()
    }

    pub fn player_ids(&self) -> impl Iterator<Item = PlayerId> {
        (0..self.players.len()).map(PlayerId)
    }

    pub fn dim(&self, player: PlayerId) -> usize {
        self.players[player.0].dim
    }

    pub fn total_dim(&self) -> usize {
        self.players.iter().map(|p| p.dim).sum()
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.players.len() + 1);
        out.push(0);
        for p in &self.players {
            out.push(out.last().unwrap() + p.dim);
        }
        out
    }

    /// Index range of `player`'s block inside the stacked profile.
    pub fn range(&self, player: PlayerId) -> Range<usize> {
        let start: usize = self.players[..player.0].iter().map(|p| p.dim).sum();
        start..start + self.players[player.0].dim
    }

    pub fn bounds(&self, player: PlayerId) -> &[Interval] {
        &self.players[player.0].bounds
    }

    /// All box intervals, stacked.
    pub fn stacked_bounds(&self) -> Vec<Interval> {
        self.players.iter().flat_map(|p| p.bounds.iter().copied()).collect()
    }

    pub fn preference(&self, player: PlayerId) -> &PreferenceSpec {
        &self.players[player.0].preference
    }

    pub fn check_player(&self, player: PlayerId) -> Result<()> {
        if player.0 < self.players.len() {
            Ok(())
        } else {
            Err(Error::UnknownPlayer(player.0))
        }
    }

    /// Parses a problem file and rejects specs with validation issues.
    pub fn from_json(text: &str) -> Result<Self> {
        let game: GameSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let issues = validate_spec(&game);
        if issues.is_empty() {
            Ok(game)
        } else {
            let msgs: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
            Err(Error::InvalidGame(msgs.join("; ")))
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("game specs always serialize");
        s.push('\n');
        s
    }

    /// SHA-256 of the compact JSON serialization.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("game specs always serialize");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Utility of `player` at the stacked profile `x`.
    pub fn utility(&self, player: PlayerId, x: &[f64]) -> Result<Option<f64>> {
        match self.preference(player) {
            PreferenceSpec::Utility { expr } => expr.eval(x).map(Some),
            _ => Ok(None),
        }
    }

    /// Evaluates the open-polyhedron rows of a `HalfspaceContour` player at `x`.
    pub fn contour_rows(&self, player: PlayerId, x: &[f64]) -> Result<Option<Vec<Halfspace>>> {
        let PreferenceSpec::HalfspaceContour { rows } = self.preference(player) else {
            return Ok(None);
        };
        let dim = self.dim(player);
        rows.iter()
            .map(|row| {
                if row.coeffs.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: row.coeffs.len(),
                        context: "contour row".into(),
                    });
                }
                let normal = row.coeffs.iter().map(|c| c.eval(x)).collect::<Result<Vec<_>>>()?;
                Ok(Halfspace::new(normal, row.offset.eval(x)?))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    /// `y ≻_{ν, x^{-ν}} x^ν` on stacked vectors: `y` is the candidate own
    /// block, `x` the full current profile.
    pub fn prefers(&self, player: PlayerId, y: &[f64], x: &[f64]) -> Result<bool> {
        let range = self.range(player);
        let own = &x[range.clone()];
        match self.preference(player) {
            PreferenceSpec::Utility { expr } => {
                let base = expr.eval(x)?;
                let mut z = x.to_vec();
                z[range].copy_from_slice(y);
                let cand = expr.eval(&z)?;
                Ok(utility_improves(cand, base))
            }
            PreferenceSpec::CoordinateOrder => Ok(y.iter().zip(own).all(|(a, b)| a > b)),
            PreferenceSpec::TrivialZero => Ok(false),
            PreferenceSpec::HalfspaceContour { .. } => {
                let rows = self.contour_rows(player, x)?.unwrap_or_default();
                Ok(rows.iter().all(|h| polytope::dot(&h.normal, y) < h.offset))
            }
            PreferenceSpec::ThresholdBand => Ok(y.iter().all(|&a| a >= 0.0) && !own.iter().all(|&a| a >= 0.0)),
        }
    }

    /// `K_ν` with `rivals` (stacked, own block removed) substituted.
    pub fn region_for_rivals(&self, player: PlayerId, rivals: &[f64]) -> Result<FeasibleRegion> {
        let range = self.range(player);
        let n = self.total_dim();
        if rivals.len() != n - range.len() {
            return Err(Error::DimensionMismatch {
                expected: n - range.len(),
                got: rivals.len(),
                context: "rival sub-profile".into(),
            });
        }
        let bounds = self.bounds(player).to_vec();
        let mut halfspaces = Vec::new();
        let mut trivially_empty = false;
        if let ConstraintMapSpec::SharedLinear { a, b, .. } = &self.constraints {
            for (row, &rhs) in a.iter().zip(b) {
                let mut normal = Vec::with_capacity(range.len());
                let mut offset = rhs;
                let mut k = 0;
                for (j, &coef) in row.iter().enumerate() {
                    if range.contains(&j) {
                        normal.push(coef);
                    } else {
                        offset -= coef * rivals[k];
                        k += 1;
                    }
                }
                if normal.iter().all(|c| c.abs() < 1e-15) {
                    if offset < -FEASIBILITY_TOL {
                        trivially_empty = true;
                    }
                } else {
                    halfspaces.push(Halfspace::new(normal, offset));
                }
            }
        }
        let mut region = FeasibleRegion {
            player,
            bounds,
            halfspaces,
            empty: trivially_empty,
        };
        if !region.empty && !region.halfspaces.is_empty() {
            region.empty = !region_nonempty(&region);
        }
        Ok(region)
    }

    /// `K_ν(x^{-ν})` read off the full profile `x`.
    pub fn region_at(&self, player: PlayerId, x: &[f64]) -> Result<FeasibleRegion> {
        let range = self.range(player);
        let rivals: Vec<f64> = x
            .iter()
            .enumerate()
            .filter(|(i, _)| !range.contains(i))
            .map(|(_, v)| *v)
            .collect();
        self.region_for_rivals(player, &rivals)
    }

    /// Whether `x ∈ K(x)` within [`FEASIBILITY_TOL`].
    pub fn is_feasible(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.total_dim() {
            return Ok(false);
        }
        for p in self.player_ids() {
            let region = self.region_at(p, x)?;
            if region.empty || !region.contains(&x[self.range(p)], FEASIBILITY_TOL) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn require_feasible(&self, x: &[f64]) -> Result<()> {
        if self.is_feasible(x)? {
            Ok(())
        } else {
            Err(Error::InfeasiblePoint(format!("{x:?} is not in K(x)")))
        }
    }
}

pub(crate) fn utility_improves(candidate: f64, base: f64) -> bool {
    candidate > base + UTILITY_TIE_TOL * base.abs().max(1.0)
}

fn region_nonempty(region: &FeasibleRegion) -> bool {
    let rows = region.rows();
    let d = region.dim();
    if polytope::binomial(rows.len(), d) <= polytope::VERTEX_BUDGET {
        polytope::lp_min(&vec![0.0; d], &rows, FEASIBILITY_TOL).is_some()
    } else {
        // too many vertices to enumerate: alternate projections from the box
        // centre and check where they land
        let centre: Vec<f64> = region.bounds.iter().map(|b| 0.5 * (b.lo() + b.hi())).collect();
        let y = crate::solver::dykstra(region, &centre);
        region.contains(&y, 1e-7)
    }
}

/// Stacks blocks into a profile, reordering them by player index.
pub fn assemble_profile(game: &GameSpec, blocks: &[Block]) -> Result<Profile> {
    let n = game.n_players();
    let mut slots: Vec<Option<&Block>> = vec![None; n];
    for block in blocks {
        let p = block.player.0;
        if p >= n {
            return Err(Error::UnknownPlayer(p));
        }
        if slots[p].is_some() {
            return Err(Error::DuplicatePlayer(p));
        }
        if block.values.len() != game.players[p].dim {
            return Err(Error::DimensionMismatch {
                expected: game.players[p].dim,
                got: block.values.len(),
                context: format!("block of player {p}"),
            });
        }
        slots[p] = Some(block);
    }
    let mut flat = Vec::with_capacity(game.total_dim());
    for (p, slot) in slots.iter().enumerate() {
        flat.extend_from_slice(&slot.ok_or(Error::MissingPlayer(p))?.values);
    }
    Profile::from_flat(game, &flat)
}

/// Whether `y ∈ U^s_ν(x)`.
pub fn strictly_prefers(game: &GameSpec, player: PlayerId, y: &Block, x: &Profile) -> Result<bool> {
    game.check_player(player)?;
    if y.values.len() != game.dim(player) {
        return Err(Error::DimensionMismatch {
            expected: game.dim(player),
            got: y.values.len(),
            context: "candidate block".into(),
        });
    }
    game.prefers(player, &y.values, x.flat())
}

/// `K_ν(x^{-ν})` for the given rival sub-profile. Emptiness is flagged on the
/// region rather than raised.
pub fn feasible_region(game: &GameSpec, player: PlayerId, rivals: &[f64]) -> Result<FeasibleRegion> {
    game.check_player(player)?;
    game.region_for_rivals(player, rivals)
}

/// Rejection sample of `U^s_ν(x)` restricted to the axis-aligned `domain`.
pub fn sample_contour_in(
    game: &GameSpec,
    player: PlayerId,
    x: &[f64],
    domain: &[Interval],
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return Ok(out);
    }
    if matches!(game.preference(player), PreferenceSpec::TrivialZero) {
        return Ok(out);
    }
    let mut rng = rng::seeded(seed);
    let attempts = 64 * count.max(16);
    let mut y = vec![0.0; domain.len()];
    for _ in 0..attempts {
        for (v, b) in y.iter_mut().zip(domain) {
            *v = if b.width() > 0.0 {
                rng.random_range(b.lo()..b.hi())
            } else {
                b.lo()
            };
        }
        if game.prefers(player, &y, x)? {
            out.push(y.clone());
            if out.len() == count {
                break;
            }
        }
    }
    Ok(out)
}

/// Seeded, uniform-on-the-box rejection sample of `U^s_ν(x)`.
pub fn upper_contour_sample(
    game: &GameSpec,
    player: PlayerId,
    x: &Profile,
    count: usize,
    seed: u64,
) -> Result<Vec<Block>> {
    game.check_player(player)?;
    let domain = game.bounds(player).to_vec();
    Ok(sample_contour_in(game, player, x.flat(), &domain, count, seed)?
        .into_iter()
        .map(|values| Block { player, values })
        .collect())
}

const VALIDATION_PROBES: u64 = 64;

/// Structural and sampled checks of a game description. Issues are data.
pub fn validate_spec(game: &GameSpec) -> Vec<Issue> {
    let mut issues = Vec::new();
    let n = game.total_dim();
    let mut push = |player: Option<usize>, message: String| issues.push(Issue { player, message });

    if game.players.is_empty() {
        push(None, "game has no players".into());
    }
    let mut boxes_ok = true;
    for (p, spec) in game.players.iter().enumerate() {
        if spec.dim == 0 {
            push(Some(p), "dimension must be at least 1".into());
            boxes_ok = false;
        }
        if spec.bounds.len() != spec.dim {
            push(
                Some(p),
                format!("box has {} intervals for dimension {}", spec.bounds.len(), spec.dim),
            );
            boxes_ok = false;
        }
        for (i, b) in spec.bounds.iter().enumerate() {
            if !(b.lo().is_finite() && b.hi().is_finite()) {
                push(Some(p), format!("non-finite bound in coordinate {i}"));
                boxes_ok = false;
            } else if b.lo() > b.hi() {
                push(
                    Some(p),
                    format!("empty interval [{}, {}] in coordinate {i}", b.lo(), b.hi()),
                );
                boxes_ok = false;
            }
        }
        for e in spec.preference.expressions() {
            if let Some(err) = e.parse_error() {
                push(Some(p), format!("unparsable expression: {err}"));
                boxes_ok = false;
            } else if let Some(k) = e.max_variable() {
                if k > n {
                    push(Some(p), format!("unknown variable x{k} in `{e}` ({n} variables)"));
                    boxes_ok = false;
                }
            }
        }
        match &spec.preference {
            PreferenceSpec::HalfspaceContour { rows } => {
                if rows.is_empty() {
                    push(Some(p), "contour has no rows".into());
                }
                for (r, row) in rows.iter().enumerate() {
                    if row.coeffs.len() != spec.dim {
                        push(
                            Some(p),
                            format!(
                                "contour row {r} has {} coefficients for dimension {}",
                                row.coeffs.len(),
                                spec.dim
                            ),
                        );
                        boxes_ok = false;
                    }
                }
            }
            PreferenceSpec::ThresholdBand if spec.dim != 1 => {
                push(Some(p), "ThresholdBand is defined for scalar players only".into());
            }
            _ => {}
        }
    }
    if let ConstraintMapSpec::SharedLinear { a, b, .. } = &game.constraints {
        if a.len() != b.len() {
            push(
                None,
                format!("constraint matrix has {} rows but {} offsets", a.len(), b.len()),
            );
            boxes_ok = false;
        }
        for (r, row) in a.iter().enumerate() {
            if row.len() != n {
                push(
                    None,
                    format!("constraint row {r} has {} columns, expected {n}", row.len()),
                );
                boxes_ok = false;
            }
        }
        if b.iter().chain(a.iter().flatten()).any(|v| !v.is_finite()) {
            push(None, "non-finite constraint data".into());
            boxes_ok = false;
        }
    }
    if !boxes_ok {
        return issues;
    }

    // sampled checks on the strategy box
    let bounds = game.stacked_bounds();
    for k in 1..=VALIDATION_PROBES {
        let u = rng::halton(k, n);
        let x: Vec<f64> = bounds.iter().zip(&u).map(|(b, t)| b.lo() + t * b.width()).collect();
        for p in game.player_ids() {
            let own = &x[game.range(p)];
            if let Err(e) = game.utility(p, &x) {
                issues.push(Issue {
                    player: Some(p.0),
                    message: format!("utility does not evaluate on the box: {e}"),
                });
                return issues;
            }
            match game.prefers(p, own, &x) {
                Ok(true) => {
                    issues.push(Issue {
                        player: Some(p.0),
                        message: format!("own strategy strictly preferred to itself at {x:?}"),
                    });
                    return issues;
                }
                Ok(false) => {}
                Err(e) => {
                    issues.push(Issue {
                        player: Some(p.0),
                        message: format!("preference does not evaluate on the box: {e}"),
                    });
                    return issues;
                }
            }
            if let ConstraintMapSpec::SharedLinear { .. } = game.constraints {
                match game.region_at(p, &x) {
                    Ok(r) if r.empty => {
                        issues.push(Issue {
                            player: Some(p.0),
                            message: format!("feasible set K is empty for rivals at {x:?}"),
                        });
                        return issues;
                    }
                    Ok(_) => {}
                    Err(e) => {
                        issues.push(Issue {
                            player: Some(p.0),
                            message: e.to_string(),
                        });
                        return issues;
                    }
                }
            }
        }
    }
    issues
}

/// Probes `K_ν` nonemptiness on a low-discrepancy set of rival profiles and
/// records the outcome on a `SharedLinear` constraint map.
pub fn probe_nonempty(game: &mut GameSpec) -> Result<bool> {
    let n = game.total_dim();
    let bounds = game.stacked_bounds();
    let mut ok = true;
    'outer: for k in 1..=256 {
        let x: Vec<f64> = bounds
            .iter()
            .zip(rng::halton(k, n))
            .map(|(b, t)| b.lo() + t * b.width())
            .collect();
        for p in game.player_ids() {
            if game.region_at(p, &x)?.empty {
                ok = false;
                break 'outer;
            }
        }
    }
    if let ConstraintMapSpec::SharedLinear { nonempty_probed, .. } = &mut game.constraints {
        *nonempty_probed = ok;
    }
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_game(prefs: Vec<PreferenceSpec>, constraints: ConstraintMapSpec, lo: f64, hi: f64) -> GameSpec {
        GameSpec::new(
            prefs
                .into_iter()
                .map(|p| PlayerSpec::new(vec![Interval(lo, hi)], p))
                .collect(),
            constraints,
        )
    }

    fn coordinate() -> GameSpec {
        scalar_game(
            vec![PreferenceSpec::CoordinateOrder, PreferenceSpec::CoordinateOrder],
            ConstraintMapSpec::BoxOnly,
            -1.0,
            1.0,
        )
    }

    #[test]
    fn assemble_profile_orders_by_player() {
        let g = coordinate();
        let a = assemble_profile(&g, &[Block::new(0, vec![1.0]), Block::new(1, vec![0.0])]).unwrap();
        assert_eq!(a.flat(), &[1.0, 0.0]);
        let b = assemble_profile(&g, &[Block::new(1, vec![0.0]), Block::new(0, vec![1.0])]).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            assemble_profile(&g, &[Block::new(0, vec![1.0])]),
            Err(Error::MissingPlayer(1))
        );
        assert_eq!(
            assemble_profile(&g, &[Block::new(0, vec![1.0]), Block::new(0, vec![1.0])]),
            Err(Error::DuplicatePlayer(0))
        );
        assert!(matches!(
            assemble_profile(&g, &[Block::new(0, vec![1.0, 2.0]), Block::new(1, vec![0.0])]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn blocks_round_trip() {
        let g = coordinate();
        let x = Profile::from_flat(&g, &[0.25, -0.5]).unwrap();
        assert_eq!(assemble_profile(&g, &x.blocks()).unwrap(), x);
        assert_eq!(x.rivals(PlayerId(0)), vec![-0.5]);
        assert_eq!(serde_json::to_string(&x).unwrap(), "[[0.25],[-0.5]]");
    }

    #[test]
    fn strict_preferences() {
        let g = coordinate();
        let x = Profile::from_flat(&g, &[0.0, 0.3]).unwrap();
        assert!(strictly_prefers(&g, PlayerId(0), &Block::new(0, vec![0.5]), &x).unwrap());
        assert!(!strictly_prefers(&g, PlayerId(0), &Block::new(0, vec![0.0]), &x).unwrap());

        let t = scalar_game(
            vec![PreferenceSpec::TrivialZero, PreferenceSpec::TrivialZero],
            ConstraintMapSpec::BoxOnly,
            -1.0,
            1.0,
        );
        let origin = Profile::from_flat(&t, &[0.0, 0.0]).unwrap();
        assert!(!strictly_prefers(&t, PlayerId(0), &Block::new(0, vec![0.0]), &origin).unwrap());

        let q = scalar_game(
            vec![
                PreferenceSpec::utility("-(x1-0.5*x2)^2").unwrap(),
                PreferenceSpec::utility("-(x2-0.5*x1)^2").unwrap(),
            ],
            ConstraintMapSpec::BoxOnly,
            -1.0,
            1.0,
        );
        let x = Profile::from_flat(&q, &[1.0, 0.0]).unwrap();
        assert!(strictly_prefers(&q, PlayerId(0), &Block::new(0, vec![0.0]), &x).unwrap());
    }

    #[test]
    fn threshold_band_matches_remark_contour() {
        let g = scalar_game(
            vec![PreferenceSpec::ThresholdBand, PreferenceSpec::ThresholdBand],
            ConstraintMapSpec::BoxOnly,
            -1.0,
            1.0,
        );
        // U^s(x, y) = [0, ∞) for x < 0, empty otherwise
        assert!(g.prefers(PlayerId(0), &[0.0], &[-0.5, 0.2]).unwrap());
        assert!(g.prefers(PlayerId(0), &[0.7], &[-0.5, 0.2]).unwrap());
        assert!(!g.prefers(PlayerId(0), &[-0.1], &[-0.5, 0.2]).unwrap());
        assert!(!g.prefers(PlayerId(0), &[0.7], &[0.5, 0.2]).unwrap());
        assert!(!g.prefers(PlayerId(0), &[0.7], &[0.0, 0.2]).unwrap());
    }

    #[test]
    fn halfspace_contour_preference() {
        let rows = vec![ContourRow {
            coeffs: vec![Expr::parse("-1").unwrap()],
            offset: Expr::parse("-x1").unwrap(),
        }];
        let g = scalar_game(
            vec![
                PreferenceSpec::HalfspaceContour { rows },
                PreferenceSpec::CoordinateOrder,
            ],
            ConstraintMapSpec::BoxOnly,
            -1.0,
            1.0,
        );
        assert!(g.prefers(PlayerId(0), &[0.3], &[0.2, 0.0]).unwrap());
        assert!(!g.prefers(PlayerId(0), &[0.2], &[0.2, 0.0]).unwrap());
        assert!(validate_spec(&g).is_empty());
    }

    #[test]
    fn regions() {
        let g = coordinate();
        let r = feasible_region(&g, PlayerId(0), &[0.3]).unwrap();
        assert_eq!(r.bounds, vec![Interval(-1.0, 1.0)]);
        assert!(r.halfspaces.is_empty() && !r.empty);

        let shared = scalar_game(
            vec![PreferenceSpec::CoordinateOrder, PreferenceSpec::CoordinateOrder],
            ConstraintMapSpec::SharedLinear {
                a: vec![vec![1.0, 1.0]],
                b: vec![1.0],
                nonempty_probed: false,
            },
            0.0,
            1.0,
        );
        let r = feasible_region(&shared, PlayerId(0), &[0.75]).unwrap();
        assert_eq!(r.halfspaces, vec![Halfspace::new(vec![1.0], 0.25)]);
        assert!(!r.empty);
        assert!(r.contains(&[0.25], 0.0) && !r.contains(&[0.3], 1e-9));

        let infeasible = scalar_game(
            vec![PreferenceSpec::CoordinateOrder, PreferenceSpec::CoordinateOrder],
            ConstraintMapSpec::SharedLinear {
                a: vec![vec![1.0, 1.0]],
                b: vec![-5.0],
                nonempty_probed: false,
            },
            0.0,
            1.0,
        );
        assert!(feasible_region(&infeasible, PlayerId(0), &[0.0]).unwrap().empty);
        assert!(feasible_region(&infeasible, PlayerId(0), &[0.0, 1.0]).is_err());
    }

    #[test]
    fn contour_samples() {
        let g = coordinate();
        let x = Profile::from_flat(&g, &[0.0, 0.4]).unwrap();
        let s = upper_contour_sample(&g, PlayerId(0), &x, 100, 9).unwrap();
        assert_eq!(s.len(), 100);
        assert!(s.iter().all(|b| b.values[0] > 0.0 && b.values[0] <= 1.0));
        assert_eq!(s, upper_contour_sample(&g, PlayerId(0), &x, 100, 9).unwrap());
        assert!(upper_contour_sample(&g, PlayerId(0), &x, 0, 9).unwrap().is_empty());

        let t = scalar_game(
            vec![PreferenceSpec::TrivialZero, PreferenceSpec::TrivialZero],
            ConstraintMapSpec::BoxOnly,
            -1.0,
            1.0,
        );
        let x = Profile::from_flat(&t, &[0.1, 0.2]).unwrap();
        assert!(upper_contour_sample(&t, PlayerId(1), &x, 1000, 3).unwrap().is_empty());
    }

    #[test]
    fn validation_issues() {
        assert!(validate_spec(&coordinate()).is_empty());

        let mut g = coordinate();
        g.players[0].bounds[0] = Interval(1.0, -1.0);
        let issues = validate_spec(&g);
        assert!(
            issues.iter().any(|i| i.message.contains("empty interval")),
            "{issues:?}"
        );

        let mut g = coordinate();
        g.players[1].preference = PreferenceSpec::utility("x9 + x1").unwrap();
        let issues = validate_spec(&g);
        assert!(
            issues.iter().any(|i| i.message.contains("unknown variable")),
            "{issues:?}"
        );

        let mut g = coordinate();
        g.players[1].preference = PreferenceSpec::Utility {
            expr: Expr::parse_lenient("x1 +"),
        };
        assert!(validate_spec(&g).iter().any(|i| i.message.contains("unparsable")));

        let mut g = coordinate();
        g.players[0].dim = 2;
        assert!(!validate_spec(&g).is_empty());

        // a contour that contains the current strategy is not a strict preference
        let mut g = coordinate();
        g.players[0].preference = PreferenceSpec::HalfspaceContour {
            rows: vec![ContourRow {
                coeffs: vec![Expr::parse("1").unwrap()],
                offset: Expr::parse("5").unwrap(),
            }],
        };
        assert!(validate_spec(&g)
            .iter()
            .any(|i| i.message.contains("strictly preferred to itself")));
    }

    #[test]
    fn problem_file_round_trip() {
        let mut g = scalar_game(
            vec![
                PreferenceSpec::utility("-(x1 - 1)^2").unwrap(),
                PreferenceSpec::CoordinateOrder,
            ],
            ConstraintMapSpec::SharedLinear {
                a: vec![vec![1.0, 1.0]],
                b: vec![1.0],
                nonempty_probed: false,
            },
            0.0,
            1.0,
        );
        assert!(probe_nonempty(&mut g).unwrap());
        let text = g.to_json();
        let back = GameSpec::from_json(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_json(), text);
        assert!(text.contains("\"type\": \"Utility\""));
        assert!(text.contains("\"box\""));
        assert!(matches!(GameSpec::from_json("{ \"players\": "), Err(Error::Parse(_))));
    }
}
