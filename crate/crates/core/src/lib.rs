//! Approximate solutions of Serrin's overdetermined problem near dilated
//! minimal and constant-mean-curvature surfaces.

pub mod numerics;

/// Library version, embedded in every artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod bdg;
pub mod correctors;
pub mod geometry;
pub mod halfspace_dtn;
pub mod profiles;
pub mod residual;
