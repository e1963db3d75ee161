//! Optimal delegation intervals for matching markets with costly signaling.
//!
//! Senders with private types `z ~ zbar * Beta(alpha, beta)` choose costly
//! actions, receivers bid wages, and a planner restricts admissible wages to
//! an interval `[t_l, t_h]`. Every such interval induces a well-behaved
//! equilibrium described by two thresholds: the entry type `z_l` and the type
//! `z_h` above which senders pool. The crate solves that equilibrium, maximizes
//! aggregate net surplus over the thresholds and reproduces the sweep designs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod harness;
pub mod model;
pub mod optimizer;
pub mod quadrature;
pub mod roots;
pub mod separating;
pub mod special;
pub mod surplus;
pub mod thresholds;

/// Types and gaps below this are treated as zero.
pub const EFFECTIVE_ZERO: f64 = 1e-6;

pub use distributions::SenderDist;
pub use error::{Error, Result};
pub use model::ModelParams;
pub use optimizer::{optimize, DelegationOutcome, OptimizerOptions};
pub use separating::SeparatingPath;
pub use surplus::{pi_p, pi_s, pi_w, SurplusBreakdown};
pub use thresholds::{EquilibriumClass, Thresholds};
