//! Outage-constrained relay beamforming under Gaussian channel errors.
//!
//! The crate builds three convex restrictions of the chance-constrained
//! power-minimization problem (fourth- and second-order moment bounds, and a
//! Bernstein-type bound on the quadratic truncation), solves them with a
//! built-in conic interior-point solver, extracts rank-one relay weights, and
//! runs the Monte-Carlo experiments that compare them.

pub mod bernstein;
pub mod conic;
pub mod design;
pub mod error;
pub mod extract;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod moment;
pub mod rng;
pub mod tightness;

#[cfg(test)]
mod poly;

pub use error::{Error, Result};
pub use linalg::HermitianMatrix;
pub use model::{ChannelScenario, EvalMode, Perturbation, SystemParams};
