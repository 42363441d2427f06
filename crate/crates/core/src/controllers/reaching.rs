use serde::{Deserialize, Serialize};

use super::SmcpmcGains;
use crate::error::{ensure_non_negative, Result};

/// Bounds entering the sufficient reaching condition, all in the units of
/// the control input.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReachingBound {
    /// Disturbance bound `D`.
    pub d: f64,
    /// Lipschitz constant `L` of the unmodelled dynamics.
    pub l: f64,
    /// Bound `ρ_c` on the partial-model error.
    pub rho_c: f64,
}

impl ReachingBound {
    pub fn new(d: f64, l: f64, rho_c: f64) -> Result<Self> {
        ensure_non_negative("D", d)?;
        ensure_non_negative("L", l)?;
        ensure_non_negative("rho_c", rho_c)?;
        Ok(Self { d, l, rho_c })
    }
}

/// `η|s| + β - (D + L·‖e‖ + ρ_c)`; non-negative when the reaching
/// condition holds at this sample.
pub fn reaching_margin(s: f64, e_norm: f64, bound: &ReachingBound, gains: &SmcpmcGains) -> f64 {
    gains.eta * s.abs() + gains.beta - (bound.d + bound.l * e_norm + bound.rho_c)
}
