//! Simulation and control laboratory for a piezoelectric-motor linear stage.
//!
//! The crate is organised bottom-up:
//!
//! - [`friction`]: the classical static / Coulomb / viscous / drag force laws.
//! - [`plant`]: a fixed-step simulator of the stage with direction-dependent
//!   friction, stiction deadzone and a delayed viscous term.
//! - [`sysid`]: pulse-response plateau extraction and the least-squares fit of
//!   the friction coefficients.
//! - [`controllers`]: the sliding-mode controller with partial-model
//!   compensation, plus PI and boundary-layer SMC baselines.
//! - [`harness`]: reference trajectories, closed-loop tracking runs, metrics,
//!   controller comparison and file outputs.
//!
//! Independent runs (pulse sweeps, controller comparisons) are dispatched
//! through [`parallel`], which uses rayon when the `parallel` feature is
//! enabled and falls back to a plain sequential loop otherwise.

pub mod controllers;
pub mod error;
pub mod friction;
pub mod harness;
pub mod parallel;
pub mod plant;
pub mod sysid;

pub use error::{Error, Result};

/// Signum with `sgn(0) = 0`.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
