//! Lower bounds for the hyperbolic dimension of Julia sets of finite-order
//! meromorphic functions.
//!
//! The crate builds the two-level inverse-branch system attached to a pole
//! `b` of a catalogued family, estimates the critical exponent of its
//! Poincaré series and compares it with the closed form
//! `ρ / (α₁ + 1 + 1/q)`.
//!
//! Module map:
//!
//! * [`families`]: evaluators and analytic metadata (tan power, Weierstrass ℘,
//!   ℘∘P, exponential-elliptic approximants).
//! * [`preimage`]: certified enumeration of `a`-points by the argument
//!   principle, counting function and order-of-growth estimate.
//! * [`ifs`]: branch construction, Poincaré sums, θ regression, one-level
//!   Bowen roots and the separation check.
//! * [`bounds`]: closed-form bound table and consistency verdicts.
//! * [`render`]: escape/pole-capture classification images and box counting.
//! * [`pipeline`]: the end-to-end run used by the CLI and the acceptance suite.

pub mod bounds;
mod error;
pub mod families;
pub mod fit;
pub mod ifs;
pub mod pipeline;
pub mod preimage;
pub mod render;

pub use error::{Error, Result};
pub use families::{ComplexPoint, EvalResult, FamilySpec, Lattice, PoleData, Polynomial, Variant};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
