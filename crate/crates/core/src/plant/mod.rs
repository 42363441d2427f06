//! Piezoelectric stage dynamics.
//!
//! The stage is a single-axis mass driven through a voltage-to-force gain and
//! retarded by direction-dependent friction:
//!
//! ```text
//! v > v_cr:    a = -α1·v(t-τ) - α2p       + α3·u + d
//! |v| <= v_cr: net = α3·u - α1·v(t-τ) + d
//!              a = 0                      if |net| <  α_s
//!              a = net - α_s·sgn(net)     otherwise
//! v < -v_cr:   a = -α1·v(t-τ) + α2n(v, u̇) + α3·u + d
//! ```
//!
//! `α1` is picked from the sign of the delayed velocity and `α2n` switches on
//! the sign of the input rate. Units follow the identified model: the
//! coefficients are normalised by the moving mass, so "forces" are
//! accelerations (m/s²) and `α3` has units of m/(s²·V).

mod history;
mod sim;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, Result};
use crate::sgn;

pub use history::VelocityHistory;
pub use sim::{
    simulate, steady_state_velocity, Disturbance, InputProfile, InputSignal, Plant, PlantState, PositionUpdate,
    SimConfig, Trace,
};

/// How the velocity enters the exponential Coulomb term in the negative
/// direction while the input is decreasing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Alpha2nForm {
    /// `base + (1 - exp(-rate·|v|))`; bounded in `[base, base + 1)`.
    #[default]
    Magnitude,
    /// `base + (1 - exp(-rate·v))` with the signed velocity. Decreases without
    /// bound for `v < 0`; kept for sensitivity studies.
    Signed,
}

/// Identified plant coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParams {
    /// Viscous coefficient for positive delayed velocity (1/s).
    pub alpha1_pos: f64,
    /// Viscous coefficient for negative delayed velocity (1/s).
    pub alpha1_neg: f64,
    /// Coulomb term for positive motion (m/s²).
    pub alpha2_pos: f64,
    /// Coulomb term for negative motion while the input is not decreasing
    /// (m/s²). The decreasing-input branch uses `alpha2_neg - 1` as its base.
    pub alpha2_neg: f64,
    /// Rate of the exponential Coulomb build-up (s/m).
    pub alpha2n_rate: f64,
    pub alpha2n_form: Alpha2nForm,
    /// Input gain (m/(s²·V)).
    pub alpha3: f64,
    /// Breakaway cap of the stiction term (m/s²).
    pub alpha_s_cap: f64,
    /// Delay on the viscous term (s).
    pub tau: f64,
    /// Stick/slip crossover velocity (m/s).
    pub v_cr: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            alpha1_pos: 104.0154,
            alpha1_neg: 117.1441,
            alpha2_pos: 3.1023,
            alpha2_neg: 6.8216,
            alpha2n_rate: 30.0,
            alpha2n_form: Alpha2nForm::Magnitude,
            alpha3: 6.0,
            alpha_s_cap: 0.6,
            tau: 3.5e-3,
            v_cr: 5e-6,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("alpha1_pos", self.alpha1_pos)?;
        ensure_positive("alpha1_neg", self.alpha1_neg)?;
        ensure_non_negative("alpha2_pos", self.alpha2_pos)?;
        ensure_non_negative("alpha2_neg", self.alpha2_neg)?;
        ensure_non_negative("alpha2n_rate", self.alpha2n_rate)?;
        ensure_positive("alpha3", self.alpha3)?;
        ensure_positive("alpha_s_cap", self.alpha_s_cap)?;
        ensure_non_negative("tau", self.tau)?;
        ensure_positive("v_cr", self.v_cr)
    }

    /// Base of the decreasing-input Coulomb term.
    pub fn alpha2_neg_base(&self) -> f64 {
        self.alpha2_neg - 1.0
    }

    /// Replace the four identified coefficients, keeping the manual constants.
    pub fn with_identified(mut self, alpha1_pos: f64, alpha1_neg: f64, alpha2_pos: f64, alpha2_neg: f64) -> Self {
        self.alpha1_pos = alpha1_pos;
        self.alpha1_neg = alpha1_neg;
        self.alpha2_pos = alpha2_pos;
        self.alpha2_neg = alpha2_neg;
        self
    }
}

/// Viscous coefficient selected by the sign of the delayed velocity. Zero
/// takes the positive-direction value.
pub fn effective_alpha1(v_delayed: f64, params: &PlantParams) -> f64 {
    if v_delayed < 0.0 {
        params.alpha1_neg
    } else {
        params.alpha1_pos
    }
}

/// Negative-direction Coulomb term. The exponential branch applies while the
/// input is strictly decreasing; a held or rising input uses the identified
/// constant.
pub fn effective_alpha2n(v: f64, u_dot: f64, params: &PlantParams) -> f64 {
    if u_dot < 0.0 {
        let x = match params.alpha2n_form {
            Alpha2nForm::Magnitude => v.abs(),
            Alpha2nForm::Signed => v,
        };
        params.alpha2_neg_base() + (1.0 - (-params.alpha2n_rate * x).exp())
    } else {
        params.alpha2_neg
    }
}

/// Instantaneous dynamics at one integration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dynamics {
    /// Acceleration (m/s²).
    pub acceleration: f64,
    /// Net drive `α3·u - α1·v(t-τ) + d` seen by the stiction test.
    pub net_drive: f64,
    /// Whether stiction would hold the stage if it were at rest.
    pub stiction_holds: bool,
}

/// Evaluate the right-hand side of the stage dynamics.
pub fn dynamics(v: f64, v_delayed: f64, u: f64, u_dot: f64, d: f64, params: &PlantParams) -> Dynamics {
    let alpha1 = effective_alpha1(v_delayed, params);
    let viscous = alpha1 * v_delayed;
    let net_drive = params.alpha3 * u - viscous + d;
    let stiction_holds = net_drive.abs() < params.alpha_s_cap;

    let acceleration = if v > params.v_cr {
        -viscous - params.alpha2_pos + params.alpha3 * u + d
    } else if v < -params.v_cr {
        -viscous + effective_alpha2n(v, u_dot, params) + params.alpha3 * u + d
    } else if stiction_holds {
        0.0
    } else {
        net_drive - params.alpha_s_cap * sgn(net_drive)
    };

    Dynamics {
        acceleration,
        net_drive,
        stiction_holds,
    }
}

/// Acceleration only; see [`dynamics`].
pub fn acceleration(v: f64, v_delayed: f64, u: f64, u_dot: f64, d: f64, params: &PlantParams) -> f64 {
    dynamics(v, v_delayed, u, u_dot, d, params).acceleration
}
