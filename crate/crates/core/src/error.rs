use thiserror::Error;

/// Errors raised by game construction, evaluation, solving and verification.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("expression error: {0}")]
    Expr(#[from] crate::expr::ExprError),

    #[error("non-finite value while evaluating {what}")]
    NonFinite { what: String },

    #[error("missing player {0}")]
    MissingPlayer(usize),

    #[error("duplicate player {0}")]
    DuplicatePlayer(usize),

    #[error("unknown player {0}")]
    UnknownPlayer(usize),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: String,
    },

    #[error("infeasible constraint set for player {player}")]
    InfeasibleRegion { player: usize },

    #[error("profile is not feasible: {0}")]
    InfeasiblePoint(String),

    #[error("interior point has trivial cone")]
    InteriorPoint,

    #[error("point lies outside the closure of the contour set")]
    ExteriorPoint,

    #[error("no separator found (minimum-norm point has norm {norm:e})")]
    NoSeparator { norm: f64 },

    #[error("grid budget exceeded: {points} profiles > {budget}")]
    GridBudget { points: u128, budget: u128 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("solver produced no feasible point: {0}")]
    SolverFailed(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
