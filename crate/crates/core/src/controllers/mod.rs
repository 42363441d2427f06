//! Tracking controllers for the stage.
//!
//! [`Smcpmc`] combines a model-inverse feedforward with a sliding-mode
//! feedback on `s = e + 3ė`. [`PiController`] and [`BoundarySmc`] are the
//! baselines; [`FeedforwardOnly`] runs the model inverse open loop.

mod boundary;
mod feedforward;
mod filter;
mod pi;
mod reaching;
mod smcpmc;
mod surface;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::plant::PlantParams;

pub use boundary::{boundary_smc_control, BoundaryLayer, BoundarySmc};
pub use feedforward::{feedforward_u_hat, DesiredMotion, FeedforwardModel, FeedforwardOnly};
pub use filter::{lowpass_step, DerivativeChain, LowPassFilter};
pub use pi::{pi_control, PiController, PiGains};
pub use reaching::{reaching_margin, ReachingBound};
pub use smcpmc::{smcpmc_control, smcpmc_law, Smcpmc, SmcpmcGains};
pub use surface::{sliding_value, SlidingSurface};

/// Default time constant of the error-derivative filter (s).
pub const DEFAULT_FILTER_TIME_CONSTANT: f64 = 0.1;

/// Signals available to a controller at one control instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControllerInput {
    pub t: f64,
    /// Control period (s).
    pub dt: f64,
    /// Tracking error `y_d - y` (m).
    pub e: f64,
    pub v_d: f64,
    /// Desired velocity one plant delay earlier.
    pub v_d_delayed: f64,
    pub a_d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    /// Commanded input, already inside the controller's limit (V).
    pub u: f64,
    /// Sliding variable; the tracking error for controllers without a
    /// surface.
    pub s: f64,
}

pub trait Controller: Send {
    fn name(&self) -> &str;
    fn reset(&mut self);
    fn update(&mut self, input: &ControllerInput) -> Result<ControlOutput>;
}

/// Serialisable controller choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControllerSpec {
    Smcpmc(SmcpmcSpec),
    Pi(PiSpec),
    BoundarySmc(BoundarySmcSpec),
    Feedforward(FeedforwardSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmcpmcSpec {
    pub label: Option<String>,
    pub eta: f64,
    pub beta: f64,
    /// Defaults to `1/λ_{n-1}`.
    pub phi_scale: Option<f64>,
    pub lambda: SlidingSurface,
    pub filter_time_constant_s: f64,
    /// Partial model used by the feedforward; the plant's own coefficients
    /// when absent.
    pub model: Option<PlantParams>,
}

impl Default for SmcpmcSpec {
    fn default() -> Self {
        let g = SmcpmcGains::default();
        Self {
            label: None,
            eta: g.eta,
            beta: g.beta,
            phi_scale: None,
            lambda: SlidingSurface::default(),
            filter_time_constant_s: DEFAULT_FILTER_TIME_CONSTANT,
            model: None,
        }
    }
}

impl SmcpmcSpec {
    pub fn gains(&self) -> SmcpmcGains {
        SmcpmcGains {
            eta: self.eta,
            beta: self.beta,
            phi_scale: self.phi_scale.unwrap_or_else(|| self.lambda.default_phi_scale()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PiSpec {
    pub label: Option<String>,
    pub kp: f64,
    pub ki: f64,
    pub u_limit: f64,
}

impl Default for PiSpec {
    fn default() -> Self {
        let g = PiGains::default();
        Self {
            label: None,
            kp: g.kp,
            ki: g.ki,
            u_limit: g.u_limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundarySmcSpec {
    pub label: Option<String>,
    pub eta: f64,
    pub beta: f64,
    pub lambda: SlidingSurface,
    pub boundary_width: f64,
    pub filter_time_constant_s: f64,
}

impl Default for BoundarySmcSpec {
    fn default() -> Self {
        let g = SmcpmcGains::default();
        Self {
            label: None,
            eta: g.eta,
            beta: g.beta,
            lambda: SlidingSurface::default(),
            boundary_width: BoundaryLayer::default().width,
            filter_time_constant_s: DEFAULT_FILTER_TIME_CONSTANT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeedforwardSpec {
    pub label: Option<String>,
    pub model: Option<PlantParams>,
}

impl Default for ControllerSpec {
    fn default() -> Self {
        ControllerSpec::Smcpmc(SmcpmcSpec::default())
    }
}

impl ControllerSpec {
    /// Display name: the configured label or the controller kind.
    pub fn label(&self) -> String {
        let (label, kind) = match self {
            ControllerSpec::Smcpmc(s) => (&s.label, "smcpmc"),
            ControllerSpec::Pi(s) => (&s.label, "pi"),
            ControllerSpec::BoundarySmc(s) => (&s.label, "boundary_smc"),
            ControllerSpec::Feedforward(s) => (&s.label, "feedforward"),
        };
        label.clone().unwrap_or_else(|| kind.to_string())
    }

    pub fn build(&self, plant: &PlantParams, u_limit: f64) -> Result<Box<dyn Controller>> {
        Ok(match self {
            ControllerSpec::Smcpmc(s) => Box::new(Smcpmc::new(
                s.gains(),
                s.lambda.clone(),
                FeedforwardModel::new(s.model.unwrap_or(*plant)),
                s.filter_time_constant_s,
                u_limit,
            )?),
            ControllerSpec::Pi(s) => Box::new(PiController::new(PiGains {
                kp: s.kp,
                ki: s.ki,
                u_limit: s.u_limit.min(u_limit),
            })?),
            ControllerSpec::BoundarySmc(s) => Box::new(BoundarySmc::new(
                SmcpmcGains {
                    eta: s.eta,
                    beta: s.beta,
                    phi_scale: 0.0,
                },
                s.lambda.clone(),
                BoundaryLayer {
                    width: s.boundary_width,
                },
                s.filter_time_constant_s,
                u_limit,
            )?),
            ControllerSpec::Feedforward(s) => Box::new(FeedforwardOnly::new(
                FeedforwardModel::new(s.model.unwrap_or(*plant)),
                u_limit,
            )?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trip_and_defaults() {
        let spec: ControllerSpec = serde_json::from_str(r#"{"kind": "smcpmc"}"#).unwrap();
        assert_eq!(spec, ControllerSpec::default());
        assert_eq!(spec.label(), "smcpmc");
        let spec: ControllerSpec = serde_json::from_str(r#"{"kind": "pi", "kp": 100.0, "label": "soft"}"#).unwrap();
        match &spec {
            ControllerSpec::Pi(p) => assert_eq!(p.kp, 100.0),
            other => panic!("{other:?}"),
        }
        assert_eq!(spec.label(), "soft");
        let back: ControllerSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(serde_json::from_str::<ControllerSpec>(r#"{"kind": "smcpmc", "etaa": 1.0}"#).is_err());
        assert!(serde_json::from_str::<ControllerSpec>(r#"{"kind": "lqr"}"#).is_err());
    }

    #[test]
    fn builds_every_kind() {
        let p = PlantParams::default();
        for spec in [
            ControllerSpec::default(),
            ControllerSpec::Pi(PiSpec::default()),
            ControllerSpec::BoundarySmc(BoundarySmcSpec::default()),
            ControllerSpec::Feedforward(FeedforwardSpec::default()),
        ] {
            let c = spec.build(&p, 10.0).unwrap();
            assert_eq!(c.name(), spec.label());
        }
    }
}
