use serde::{Deserialize, Serialize};

use super::feedforward::{feedforward_u_hat, DesiredMotion, FeedforwardModel};
use super::filter::DerivativeChain;
use super::surface::SlidingSurface;
use super::{ControlOutput, Controller, ControllerInput};
use crate::error::{ensure_positive, Error, Result};
use crate::sgn;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmcpmcGains {
    /// Proportional reaching gain `η` (V per unit of `s`).
    pub eta: f64,
    /// Switching gain `β` (V).
    pub beta: f64,
    /// Factor applied to the lower-order part of `ṡ`.
    pub phi_scale: f64,
}

impl Default for SmcpmcGains {
    fn default() -> Self {
        Self {
            eta: 863.1,
            beta: 1.3,
            phi_scale: 1.0 / 3.0,
        }
    }
}

impl SmcpmcGains {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("eta", self.eta)?;
        ensure_positive("beta", self.beta)?;
        if !self.phi_scale.is_finite() {
            return Err(Error::invalid("phi_scale", "must be finite"));
        }
        Ok(())
    }

    /// Half-width of the band in `s` where the switching term dominates.
    pub fn chattering_band(&self) -> f64 {
        self.beta / self.eta
    }
}

/// `u = û + φ + η·s + β·sgn(s)` for an arbitrary-order surface, with
/// `φ = phi_scale·Σ_{k=0}^{n-2} λ_k e^(k+1)`.
pub fn smcpmc_law(derivatives: &[f64], u_hat: f64, gains: &SmcpmcGains, surface: &SlidingSurface) -> Result<f64> {
    let s = surface.value(derivatives)?;
    let phi = gains.phi_scale * surface.lower_order_rate(derivatives)?;
    Ok(u_hat + phi + gains.eta * s + gains.beta * sgn(s))
}

/// Second-order instance of [`smcpmc_law`] on `[e, ė]`.
pub fn smcpmc_control(
    e: f64,
    e_dot_filtered: f64,
    u_hat: f64,
    gains: &SmcpmcGains,
    surface: &SlidingSurface,
) -> Result<f64> {
    smcpmc_law(&[e, e_dot_filtered], u_hat, gains, surface)
}

/// Sampled SMCPMC loop: filtered error derivatives, model feedforward and
/// the switching law.
#[derive(Debug, Clone)]
pub struct Smcpmc {
    gains: SmcpmcGains,
    surface: SlidingSurface,
    model: FeedforwardModel,
    derivatives: DerivativeChain,
    u_limit: f64,
    u_prev: f64,
    u_rate_prev: f64,
}

impl Smcpmc {
    pub fn new(
        gains: SmcpmcGains,
        surface: SlidingSurface,
        model: FeedforwardModel,
        filter_time_constant: f64,
        u_limit: f64,
    ) -> Result<Self> {
        gains.validate()?;
        model.params.validate()?;
        ensure_positive("u_limit", u_limit)?;
        let derivatives = DerivativeChain::new(surface.order(), filter_time_constant)?;
        Ok(Self {
            gains,
            surface,
            model,
            derivatives,
            u_limit,
            u_prev: 0.0,
            u_rate_prev: 0.0,
        })
    }

    pub fn gains(&self) -> &SmcpmcGains {
        &self.gains
    }

    pub fn surface(&self) -> &SlidingSurface {
        &self.surface
    }
}

impl Controller for Smcpmc {
    fn name(&self) -> &str {
        "smcpmc"
    }

    fn reset(&mut self) {
        self.derivatives.reset();
        self.u_prev = 0.0;
        self.u_rate_prev = 0.0;
    }

    fn update(&mut self, input: &ControllerInput) -> Result<ControlOutput> {
        let derivs = self.derivatives.update(input.e, input.dt);
        let desired = DesiredMotion {
            v_d: input.v_d,
            v_d_delayed: input.v_d_delayed,
            a_d: input.a_d,
        };
        let u_hat = feedforward_u_hat(&desired, self.u_rate_prev, self.u_prev, &self.model);
        let s = self.surface.value(&derivs)?;
        let u = smcpmc_law(&derivs, u_hat, &self.gains, &self.surface)?.clamp(-self.u_limit, self.u_limit);
        self.u_rate_prev = (u - self.u_prev) / input.dt;
        self.u_prev = u;
        Ok(ControlOutput { u, s })
    }
}
