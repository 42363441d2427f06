use serde::{Deserialize, Serialize};

use super::{ControlOutput, Controller, ControllerInput};
use crate::error::{ensure_non_negative, ensure_positive, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PiGains {
    /// Proportional gain (V/m).
    pub kp: f64,
    /// Integral gain (V/(m·s)).
    pub ki: f64,
    /// Output clamp (V).
    pub u_limit: f64,
}

impl Default for PiGains {
    fn default() -> Self {
        Self {
            kp: 1.9e4,
            ki: 6.6e5,
            u_limit: 10.0,
        }
    }
}

impl PiGains {
    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("kp", self.kp)?;
        ensure_non_negative("ki", self.ki)?;
        ensure_positive("u_limit", self.u_limit)
    }
}

/// `kp·e + ki·∫e`, clamped to the output limit.
pub fn pi_control(e: f64, integral: f64, gains: &PiGains) -> f64 {
    (gains.kp * e + gains.ki * integral).clamp(-gains.u_limit, gains.u_limit)
}

/// PI loop with trapezoidal integration. The integrator only accepts an
/// increment if the unclamped output stays inside the limit or the
/// increment pulls it back.
#[derive(Debug, Clone)]
pub struct PiController {
    gains: PiGains,
    integral: f64,
    e_prev: Option<f64>,
}

impl PiController {
    pub fn new(gains: PiGains) -> Result<Self> {
        gains.validate()?;
        Ok(Self {
            gains,
            integral: 0.0,
            e_prev: None,
        })
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn step(&mut self, e: f64, dt: f64) -> f64 {
        let g = &self.gains;
        let inc = match self.e_prev {
            Some(p) => 0.5 * (e + p) * dt,
            None => 0.0,
        };
        self.e_prev = Some(e);
        let candidate = self.integral + inc;
        let raw = g.kp * e + g.ki * candidate;
        if raw.abs() <= g.u_limit || raw * inc < 0.0 {
            self.integral = candidate;
        }
        pi_control(e, self.integral, g)
    }
}

impl Controller for PiController {
    fn name(&self) -> &str {
        "pi"
    }

    fn reset(&mut self) {
        self.integral = 0.0;
        self.e_prev = None;
    }

    fn update(&mut self, input: &ControllerInput) -> Result<ControlOutput> {
        Ok(ControlOutput {
            u: self.step(input.e, input.dt),
            s: input.e,
        })
    }
}
