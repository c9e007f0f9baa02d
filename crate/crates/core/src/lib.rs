//! Diffusion generated denoising of target-valued images.
//!
//! Images whose pixels live in a constraint set (a box, a sphere, the
//! positive semidefinite cone, the orthogonal group, or the real
//! projective line) are denoised by alternating heat-semigroup smoothing
//! with a pointwise projection onto the target set.

pub mod energy;
pub mod error;
pub mod experiment;
pub mod field;
pub mod heat;
pub mod io;
pub mod metrics;
pub mod solver;
pub mod synth;
pub mod targets;

pub use error::{Error, Result};
pub use field::{Boundary, Field, Grid};
pub use heat::HeatOperator;
pub use solver::{SolveResult, SolverConfig};
pub use targets::{ProjectionStats, TargetSpec};
