//! Exact greatest lower bounds on Ricci curvature for toric Fano manifolds.
//!
//! A toric Fano manifold is described by a reflexive lattice polytope Δ
//! with facets `⟨v_r, y⟩ ≥ −1`. The bound is `R = 1/(1 + max_r⟨v_r, P_c⟩)`
//! where `P_c` is the barycenter of Δ, and `R = 1` when `P_c` is the
//! origin. Everything on that path is exact rational arithmetic:
//!
//! - [`geometry`]: polytope representations, volume, barycenter, lattice
//!   points, unimodular maps, file formats.
//! - [`bound`]: the bound itself, the boundary exit point `Q`, and a
//!   certificate check.
//! - [`numerics`]: double-precision checks of the moment-map identities
//!   behind the formula and a finite-difference continuation solver for the
//!   real Monge–Ampère family whose solvability threshold the bound
//!   describes.

pub mod bound;
pub mod corpus;
pub mod error;
pub mod geometry;
pub mod numerics;
pub mod rational;

pub use bound::{intersect_ray_boundary, ricci_lower_bound, verify_certificate, RBoundResult};
pub use error::{BoundError, GeometryError, InputError, NumericsError, ParseError};
pub use geometry::{Facet, LatticePolytope, ReflexivityReport, Simplex};
pub use rational::{Rational, RationalVector};
