use super::{ControlOutput, Controller, ControllerInput};
use crate::error::{ensure_positive, Result};
use crate::plant::{effective_alpha1, effective_alpha2n, PlantParams};
use crate::sgn;

/// Partial model of the stage, inverted along the desired trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedforwardModel {
    pub params: PlantParams,
}

impl FeedforwardModel {
    pub fn new(params: PlantParams) -> Self {
        Self { params }
    }
}

impl Default for FeedforwardModel {
    fn default() -> Self {
        Self::new(PlantParams::default())
    }
}

/// Desired motion at the current control instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DesiredMotion {
    /// Desired velocity `v_d(t)`.
    pub v_d: f64,
    /// Desired velocity one plant delay earlier, `v_d(t - τ)`.
    pub v_d_delayed: f64,
    /// Desired acceleration `v̇_d(t)`.
    pub a_d: f64,
}

/// Model-inverse input `û` that would make the stage follow the desired
/// motion.
///
/// `u_dot_prev` is the input rate over the previous control period and
/// selects the negative-direction Coulomb branch; `u_prev` is the previous
/// commanded input, used by the stiction branch.
pub fn feedforward_u_hat(desired: &DesiredMotion, u_dot_prev: f64, u_prev: f64, model: &FeedforwardModel) -> f64 {
    let p = &model.params;
    let DesiredMotion { v_d, v_d_delayed, a_d } = *desired;
    let alpha1 = effective_alpha1(v_d_delayed, p);
    let base = a_d + alpha1 * v_d_delayed;

    let friction = if v_d > p.v_cr {
        p.alpha2_pos
    } else if v_d < -p.v_cr {
        -effective_alpha2n(v_d, u_dot_prev, p)
    } else {
        let net = p.alpha3 * u_prev - alpha1 * v_d_delayed;
        let alpha_s = if net.abs() < p.alpha_s_cap { net } else { p.alpha_s_cap };
        alpha_s * sgn(v_d)
    };
    (base + friction) / p.alpha3
}

/// Open-loop model inversion with no feedback.
#[derive(Debug, Clone)]
pub struct FeedforwardOnly {
    model: FeedforwardModel,
    u_limit: f64,
    u_prev: f64,
    u_rate_prev: f64,
}

impl FeedforwardOnly {
    pub fn new(model: FeedforwardModel, u_limit: f64) -> Result<Self> {
        model.params.validate()?;
        ensure_positive("u_limit", u_limit)?;
        Ok(Self {
            model,
            u_limit,
            u_prev: 0.0,
            u_rate_prev: 0.0,
        })
    }
}

impl Controller for FeedforwardOnly {
    fn name(&self) -> &str {
        "feedforward"
    }

    fn reset(&mut self) {
        self.u_prev = 0.0;
        self.u_rate_prev = 0.0;
    }

    fn update(&mut self, input: &ControllerInput) -> Result<ControlOutput> {
        let desired = DesiredMotion {
            v_d: input.v_d,
            v_d_delayed: input.v_d_delayed,
            a_d: input.a_d,
        };
        let u =
            feedforward_u_hat(&desired, self.u_rate_prev, self.u_prev, &self.model).clamp(-self.u_limit, self.u_limit);
        self.u_rate_prev = (u - self.u_prev) / input.dt;
        self.u_prev = u;
        Ok(ControlOutput { u, s: input.e })
    }
}
