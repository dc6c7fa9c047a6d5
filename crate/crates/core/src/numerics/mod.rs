//! Floating-point side: the symplectic potential's Legendre dual, moment-map
//! quadrature, and the Monge–Ampère continuity path.

pub mod path;
pub mod potential;
pub mod quadrature;
pub mod solver;

pub use path::{run_continuation, ContinuationReport, PathRecord};
pub use potential::{build_potential, ToricPotential};
pub use quadrature::{moment_pushforward_check, tail_estimate, MomentResiduals, QuadratureRule, QuadratureSpec};
pub use solver::{
    estimate_linear_growth, key_identity_residual, solve_continuity, ContinuitySolver, LinearGrowth, MAPathState,
    SolverConfig,
};
