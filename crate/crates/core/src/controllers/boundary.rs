use serde::{Deserialize, Serialize};

use super::filter::DerivativeChain;
use super::surface::SlidingSurface;
use super::{ControlOutput, Controller, ControllerInput, SmcpmcGains};
use crate::error::{ensure_positive, Result};

/// Unit saturation.
fn sat(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// `η·s + β·sat(s/width)` on the surface `s = e + λ_1·ė`; no feedforward.
pub fn boundary_smc_control(
    e: f64,
    e_dot: f64,
    gains: &SmcpmcGains,
    surface: &SlidingSurface,
    boundary_width: f64,
) -> Result<f64> {
    ensure_positive("boundary_width", boundary_width)?;
    let s = surface.value(&[e, e_dot])?;
    Ok(gains.eta * s + gains.beta * sat(s / boundary_width))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundaryLayer {
    /// Half-width of the linear band in `s`.
    pub width: f64,
}

impl Default for BoundaryLayer {
    fn default() -> Self {
        Self { width: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct BoundarySmc {
    gains: SmcpmcGains,
    surface: SlidingSurface,
    layer: BoundaryLayer,
    derivatives: DerivativeChain,
    u_limit: f64,
}

impl BoundarySmc {
    pub fn new(
        gains: SmcpmcGains,
        surface: SlidingSurface,
        layer: BoundaryLayer,
        filter_time_constant: f64,
        u_limit: f64,
    ) -> Result<Self> {
        gains.validate()?;
        ensure_positive("boundary_width", layer.width)?;
        ensure_positive("u_limit", u_limit)?;
        let derivatives = DerivativeChain::new(surface.order(), filter_time_constant)?;
        Ok(Self {
            gains,
            surface,
            layer,
            derivatives,
            u_limit,
        })
    }
}

impl Controller for BoundarySmc {
    fn name(&self) -> &str {
        "boundary_smc"
    }

    fn reset(&mut self) {
        self.derivatives.reset();
    }

    fn update(&mut self, input: &ControllerInput) -> Result<ControlOutput> {
        let derivs = self.derivatives.update(input.e, input.dt);
        let s = self.surface.value(&derivs)?;
        let u = self.gains.eta * s + self.gains.beta * sat(s / self.layer.width);
        Ok(ControlOutput {
            u: u.clamp(-self.u_limit, self.u_limit),
            s,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn law(s: f64, bw: f64) -> f64 {
        // λ = [1, 3] with ė = 0 makes s = e
        boundary_smc_control(s, 0.0, &SmcpmcGains::default(), &SlidingSurface::default(), bw).unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(law(0.0, 1e-3), 0.0);
        assert_relative_eq!(law(1e-3, 1e-3), 863.1e-3 + 1.3, max_relative = 1e-12);
        assert_relative_eq!(law(5e-4, 1e-3), 1.08155, max_relative = 1e-12);
        assert_relative_eq!(law(-5e-3, 1e-3), -(863.1 * 5e-3 + 1.3), max_relative = 1e-12);
    }

    #[test]
    fn rejects_zero_width() {
        assert!(boundary_smc_control(0.0, 0.0, &SmcpmcGains::default(), &SlidingSurface::default(), 0.0).is_err());
    }
}
