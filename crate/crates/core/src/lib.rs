//! Exact verification, singularity analysis and chart-switching integration for
//! second-order polynomial differential equations in the Painlevé class.

pub mod atlas_integrator;
pub mod expr;
pub mod field;
pub mod geometry;
pub mod registry;
pub mod verifier;
