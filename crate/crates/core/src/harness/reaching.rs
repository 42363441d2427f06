//! Measured bounds for the sufficient reaching condition.
//!
//! All quantities are expressed in input volts: accelerations are divided
//! by `α3` so they compare directly with `η|s| + β`.

use super::config::Experiment;
use super::tracking::TrackingTrace;
use crate::controllers::{
    feedforward_u_hat, reaching_margin, Controller, ControllerInput, DesiredMotion, FeedforwardModel, FeedforwardOnly,
    ReachingBound, SlidingSurface, SmcpmcGains,
};
use crate::error::Result;
use crate::plant::{acceleration, Plant, PlantParams};

/// `ρ_c`: largest gap between the acceleration the plant would produce
/// under the feedforward input along the desired trajectory and the desired
/// acceleration.
pub fn model_error_bound(exp: &Experiment, model: &FeedforwardModel) -> f64 {
    let p = &exp.params;
    let ts = exp.sim.control_period_s;
    let mut u_prev = 0.0;
    let mut rate_prev = 0.0;
    let mut worst: f64 = 0.0;
    for k in 0..=exp.sim.control_steps() {
        let t = k as f64 * ts;
        let r = exp.reference.sample(t);
        let v_del = exp.reference.sample(t - p.tau).v;
        let desired = DesiredMotion {
            v_d: r.v,
            v_d_delayed: v_del,
            a_d: r.a,
        };
        let u = feedforward_u_hat(&desired, rate_prev, u_prev, model).clamp(-exp.sim.u_sat_v, exp.sim.u_sat_v);
        let rate = (u - u_prev) / ts;
        let a = acceleration(r.v, v_del, u, rate, 0.0, p);
        worst = worst.max((a - r.a).abs() / p.alpha3);
        u_prev = u;
        rate_prev = rate;
    }
    worst
}

/// Input-free drift of the sliding-branch dynamics.
fn drift(v: f64, v_del: f64, u_dot: f64, p: &PlantParams) -> f64 {
    acceleration(v, v_del, 0.0, u_dot, 0.0, p)
}

/// `L`: largest ratio `|Δξ| / ‖[e, ė]‖` along an open-loop feedforward run,
/// over samples where the stage and the reference slide in the same
/// direction.
pub fn lipschitz_estimate(exp: &Experiment, model: &FeedforwardModel) -> Result<f64> {
    let p = exp.params;
    let sim = &exp.sim;
    let ts = sim.control_period_s;
    let substeps = sim.substeps()?;
    let mut plant = Plant::at_rest(p, sim.dt_s, exp.initial_position_m)?.with_position_update(sim.position_update);
    let mut ff = FeedforwardOnly::new(*model, sim.u_sat_v)?;
    let mut u_prev = 0.0;
    let mut worst: f64 = 0.0;

    for k in 0..sim.control_steps() {
        let t = k as f64 * ts;
        let r = exp.reference.sample(t);
        let v_d_del = exp.reference.sample(t - p.tau).v;
        let e = r.y - plant.position();
        let out = ff.update(&ControllerInput {
            t,
            dt: ts,
            e,
            v_d: r.v,
            v_d_delayed: v_d_del,
            a_d: r.a,
        })?;
        let u_dot = (out.u - u_prev) / ts;
        u_prev = out.u;

        let v = plant.velocity();
        let v_del = plant.state().history.delayed();
        let sliding = |x: f64| x.abs() > p.v_cr;
        if sliding(v) && sliding(r.v) && v.signum() == r.v.signum() && v_del * v_d_del > 0.0 {
            let e_norm = e.hypot(r.v - v);
            if e_norm > 1e-12 {
                let gap = (drift(v, v_del, u_dot, &p) - drift(r.v, v_d_del, u_dot, &p)).abs() / p.alpha3;
                worst = worst.max(gap / e_norm);
            }
        }

        for j in 0..substeps {
            let d = exp.disturbance.checked_value(t + j as f64 * sim.dt_s)?;
            plant.step(out.u, u_dot, d)?;
        }
    }
    Ok(worst)
}

/// Reaching margins of a recorded run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachingReport {
    pub margins: Vec<f64>,
    pub min_margin: f64,
    pub negatives: usize,
}

impl ReachingReport {
    pub fn all_non_negative(&self) -> bool {
        self.negatives == 0
    }
}

/// Evaluate the margin at every sample, with `ė` recovered from the
/// recorded `s` of a second-order surface.
pub fn reaching_margins(
    trace: &TrackingTrace,
    surface: &SlidingSurface,
    gains: &SmcpmcGains,
    bound: &ReachingBound,
) -> ReachingReport {
    let l = surface.coefficients();
    let (l0, l1) = (l[0], l.get(1).copied().unwrap_or(f64::INFINITY));
    let margins: Vec<f64> = trace
        .e
        .iter()
        .zip(&trace.s)
        .map(|(&e, &s)| {
            let e_dot = (s - l0 * e) / l1;
            reaching_margin(s, e.hypot(e_dot), bound, gains)
        })
        .collect();
    ReachingReport {
        min_margin: margins.iter().copied().fold(f64::INFINITY, f64::min),
        negatives: margins.iter().filter(|&&m| m < 0.0).count(),
        margins,
    }
}
