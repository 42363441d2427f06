//! Classical friction force laws.
//!
//! Each law is a pure function of its arguments. Forces are returned with the
//! sign of the quantity that produces them (velocity, or applied force for
//! static friction); the dynamics subtract them.
//!
//! ```text
//! static    F_s = 0              |f_a| >= f_s, v != 0
//!               = f_a            |f_a| <  f_s, v == 0
//!               = f_s sgn(f_a)   |f_a| >= f_s, v == 0
//! Coulomb   F_c = f_c sgn(v)
//! viscous   F_v = f_v v
//! drag      F_d = f_d v |v|
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, Result};
use crate::sgn;

/// Velocities with `|v| <= DEFAULT_ZERO_TOLERANCE` (m/s) count as zero in
/// [`static_friction`].
pub const DEFAULT_ZERO_TOLERANCE: f64 = 1e-9;

/// Coefficients of the four friction laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrictionParams {
    /// Static friction bound (N).
    pub f_s: f64,
    /// Coulomb magnitude (N).
    pub f_c: f64,
    /// Viscous coefficient (N·s/m).
    pub f_v: f64,
    /// Drag coefficient (N·s²/m²).
    pub f_d: f64,
}

impl FrictionParams {
    pub fn new(f_s: f64, f_c: f64, f_v: f64, f_d: f64) -> Result<Self> {
        let params = Self { f_s, f_c, f_v, f_d };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("f_s", self.f_s)?;
        ensure_non_negative("f_c", self.f_c)?;
        ensure_non_negative("f_v", self.f_v)?;
        ensure_non_negative("f_d", self.f_d)
    }

    /// Kinetic friction of a sliding body: Coulomb + viscous + drag.
    pub fn kinetic(&self, v: f64) -> f64 {
        self.f_c * sgn(v) + self.f_v * v + self.f_d * v * v.abs()
    }
}

/// Static friction with the default zero-velocity tolerance.
pub fn static_friction(f_a: f64, v: f64, f_s: f64) -> Result<f64> {
    static_friction_with_tolerance(f_a, v, f_s, DEFAULT_ZERO_TOLERANCE)
}

/// Static friction; `|v| <= v_zero_tol` is treated as rest.
pub fn static_friction_with_tolerance(f_a: f64, v: f64, f_s: f64, v_zero_tol: f64) -> Result<f64> {
    ensure_non_negative("f_s", f_s)?;
    ensure_non_negative("v_zero_tol", v_zero_tol)?;
    let at_rest = v.abs() <= v_zero_tol;
    Ok(if !at_rest {
        0.0
    } else if f_a.abs() < f_s {
        f_a
    } else {
        f_s * sgn(f_a)
    })
}

pub fn coulomb_friction(v: f64, f_c: f64) -> Result<f64> {
    ensure_non_negative("f_c", f_c)?;
    Ok(f_c * sgn(v))
}

pub fn viscous_friction(v: f64, f_v: f64) -> Result<f64> {
    ensure_non_negative("f_v", f_v)?;
    Ok(f_v * v)
}

pub fn drag_friction(v: f64, f_d: f64) -> Result<f64> {
    ensure_non_negative("f_d", f_d)?;
    Ok(f_d * v * v.abs())
}
