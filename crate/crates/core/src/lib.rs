//! Generalized ordinal Nash games: preference-only game descriptions, normal
//! cones of strict upper contour sets, a projected fixed-point solver for the
//! associated quasivariational inequality, and independent grid-based
//! certification of the results.

pub mod cone;
pub mod corpus;
pub mod error;
pub mod expr;
pub mod game;
pub mod polytope;
pub mod report;
pub mod rng;
pub mod solver;
pub mod suite;
pub mod verify;

pub use cone::{
    cone_membership, contour_probe, gradient_normal_direction, normal_generators, polyhedral_normal_generators,
    sampled_separating_direction, zero_in_hull, ConeGenerators, Direction, Provenance,
};
pub use error::{Error, Result};
pub use expr::Expr;
pub use game::{
    assemble_profile, feasible_region, strictly_prefers, upper_contour_sample, validate_spec, Block, ConstraintMapSpec,
    FeasibleRegion, GameSpec, Interval, Issue, PlayerId, PlayerSpec, PreferenceSpec, Profile,
};
pub use polytope::Halfspace;
pub use report::Report;
pub use solver::{
    fixed_point_step, natural_residual, project_feasible, selection_t, solve_svip, Selection, SolverConfig,
    SvipSolution,
};
pub use suite::{run_suite, Suite, SuiteConfig, SuiteOutcome, SuiteSummary};
pub use verify::{
    brute_force_gne, check_gne_grid, check_svip, lhc_probe, theorem1_property, theorem2_property, Certificate,
    CertificateKind, Witness,
};
