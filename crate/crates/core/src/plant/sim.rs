use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{dynamics, Dynamics, PlantParams, VelocityHistory};
use crate::error::{ensure_positive, Error, Result};

/// How position is advanced once the new velocity is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PositionUpdate {
    /// `y += v_new·dt`.
    SemiImplicit,
    /// `y += (v + v_new)/2·dt`, exact for the constant acceleration held over
    /// a step.
    #[default]
    Trapezoidal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Integration step (s).
    pub dt: f64,
    /// Simulated time (s).
    pub duration: f64,
    /// Input saturation (V).
    pub u_sat: f64,
    pub position_update: PositionUpdate,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 5e-5,
            duration: 1.0,
            u_sat: 10.0,
            position_update: PositionUpdate::Trapezoidal,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, params: &PlantParams) -> Result<()> {
        ensure_positive("dt", self.dt)?;
        ensure_positive("duration", self.duration)?;
        ensure_positive("u_sat", self.u_sat)?;
        if params.tau > 0.0 && self.dt > params.tau {
            return Err(Error::invalid(
                "dt",
                format!("must not exceed the delay tau = {} s, got {}", params.tau, self.dt),
            ));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn saturate(&self, u: f64) -> f64 {
        u.clamp(-self.u_sat, self.u_sat)
    }
}

/// Position, velocity and the delayed-velocity buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub t: f64,
    pub y: f64,
    pub v: f64,
    pub history: VelocityHistory,
}

/// Fixed-step integrator of the stage dynamics.
#[derive(Debug, Clone)]
pub struct Plant {
    params: PlantParams,
    dt: f64,
    position_update: PositionUpdate,
    steps: u64,
    state: PlantState,
}

impl Plant {
    /// Stage at rest at `y = 0`.
    pub fn new(params: PlantParams, dt: f64) -> Result<Self> {
        Self::at_rest(params, dt, 0.0)
    }

    pub fn at_rest(params: PlantParams, dt: f64, y0: f64) -> Result<Self> {
        params.validate()?;
        ensure_positive("dt", dt)?;
        if !y0.is_finite() {
            return Err(Error::invalid("y0", "must be finite"));
        }
        let mut history = VelocityHistory::new(VelocityHistory::steps_for(params.tau, dt));
        history.push(0.0);
        Ok(Self {
            params,
            dt,
            position_update: PositionUpdate::default(),
            steps: 0,
            state: PlantState {
                t: 0.0,
                y: y0,
                v: 0.0,
                history,
            },
        })
    }

    pub fn with_position_update(mut self, rule: PositionUpdate) -> Self {
        self.position_update = rule;
        self
    }

    pub fn params(&self) -> &PlantParams {
        &self.params
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn state(&self) -> &PlantState {
        &self.state
    }

    pub fn position(&self) -> f64 {
        self.state.y
    }

    pub fn velocity(&self) -> f64 {
        self.state.v
    }

    /// Advance one step under input `u` (already saturated), input rate
    /// `u_dot` and disturbance `d`.
    pub fn step(&mut self, u: f64, u_dot: f64, d: f64) -> Result<Dynamics> {
        let t = self.state.t;
        for (what, x) in [("input", u), ("input rate", u_dot), ("disturbance", d)] {
            if !x.is_finite() {
                return Err(Error::NonFinite { what, t });
            }
        }

        let v = self.state.v;
        let v_delayed = self.state.history.delayed();
        let dyn_ = dynamics(v, v_delayed, u, u_dot, d, &self.params);

        let mut v_new = v + dyn_.acceleration * self.dt;
        let stuck = v.abs() <= self.params.v_cr && dyn_.stiction_holds;
        let crossed = v * v_new < 0.0 && dyn_.stiction_holds;
        if stuck || crossed {
            v_new = 0.0;
        }
        if !v_new.is_finite() {
            return Err(Error::NonFinite { what: "velocity", t });
        }

        let dy = match self.position_update {
            PositionUpdate::SemiImplicit => v_new * self.dt,
            PositionUpdate::Trapezoidal => 0.5 * (v + v_new) * self.dt,
        };
        self.state.y += dy;
        self.state.v = v_new;
        self.steps += 1;
        self.state.t = self.steps as f64 * self.dt;
        self.state.history.push(v_new);
        Ok(dyn_)
    }
}

/// Open-loop input voltage as a function of time.
pub trait InputSignal {
    fn volts(&self, t: f64) -> f64;
}

impl<F: Fn(f64) -> f64> InputSignal for F {
    fn volts(&self, t: f64) -> f64 {
        self(t)
    }
}

/// Open-loop input shapes used for the pulse and triangle experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputProfile {
    Constant {
        volts: f64,
    },
    /// `amplitude_v` on `[start_s, start_s + width_s)`, zero elsewhere.
    Pulse {
        amplitude_v: f64,
        start_s: f64,
        width_s: f64,
    },
    /// Periodic piecewise-linear wave through `(0, 0)`, `(T/4, high)`,
    /// `(3T/4, low)`, `(T, 0)`.
    Triangle {
        high_v: f64,
        low_v: f64,
        period_s: f64,
    },
    /// Zero-order hold over `(t_s[i], u_v[i])` samples.
    Table {
        t_s: Vec<f64>,
        u_v: Vec<f64>,
    },
}

impl InputProfile {
    pub fn validate(&self) -> Result<()> {
        match self {
            InputProfile::Constant { .. } => Ok(()),
            InputProfile::Pulse { width_s, .. } => ensure_positive("width_s", *width_s),
            InputProfile::Triangle { period_s, .. } => ensure_positive("period_s", *period_s),
            InputProfile::Table { t_s, u_v } => {
                if t_s.len() != u_v.len() {
                    return Err(Error::LengthMismatch {
                        expected: t_s.len(),
                        got: u_v.len(),
                    });
                }
                if t_s.is_empty() {
                    return Err(Error::invalid("t_s", "table must not be empty"));
                }
                if t_s.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::invalid("t_s", "must be strictly increasing"));
                }
                Ok(())
            }
        }
    }
}

impl InputSignal for InputProfile {
    fn volts(&self, t: f64) -> f64 {
        match self {
            InputProfile::Constant { volts } => *volts,
            InputProfile::Pulse {
                amplitude_v,
                start_s,
                width_s,
            } => {
                if t >= *start_s && t < start_s + width_s {
                    *amplitude_v
                } else {
                    0.0
                }
            }
            InputProfile::Triangle {
                high_v,
                low_v,
                period_s,
            } => {
                let phase = (t / period_s).rem_euclid(1.0);
                if phase < 0.25 {
                    high_v * phase / 0.25
                } else if phase < 0.75 {
                    high_v + (low_v - high_v) * (phase - 0.25) / 0.5
                } else {
                    low_v * (1.0 - (phase - 0.75) / 0.25)
                }
            }
            InputProfile::Table { t_s, u_v } => {
                let idx = t_s.partition_point(|&ti| ti <= t);
                if idx == 0 {
                    0.0
                } else {
                    u_v[idx - 1]
                }
            }
        }
    }
}

/// Bounded exogenous disturbance added to the acceleration.
#[derive(Clone, Default)]
pub enum Disturbance {
    #[default]
    Zero,
    Constant(f64),
    Sine {
        amplitude: f64,
        freq_hz: f64,
        phase_rad: f64,
    },
    /// Zero-order hold over `(t, d)` samples; zero before the first sample.
    Table {
        t: Vec<f64>,
        d: Vec<f64>,
    },
    /// Arbitrary callable with a declared bound. Samples exceeding the bound
    /// abort the run.
    Custom {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        bound: f64,
    },
}

impl fmt::Debug for Disturbance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Disturbance::Zero => write!(f, "Zero"),
            Disturbance::Constant(c) => write!(f, "Constant({c})"),
            Disturbance::Sine {
                amplitude,
                freq_hz,
                phase_rad,
            } => write!(
                f,
                "Sine {{ amplitude: {amplitude}, freq_hz: {freq_hz}, phase_rad: {phase_rad} }}"
            ),
            Disturbance::Table { t, .. } => write!(f, "Table({} samples)", t.len()),
            Disturbance::Custom { bound, .. } => write!(f, "Custom {{ bound: {bound} }}"),
        }
    }
}

impl Disturbance {
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static, bound: f64) -> Self {
        Disturbance::Custom { f: Arc::new(f), bound }
    }

    /// Upper bound `D` on `|d(t)|`.
    pub fn bound(&self) -> f64 {
        match self {
            Disturbance::Zero => 0.0,
            Disturbance::Constant(c) => c.abs(),
            Disturbance::Sine { amplitude, .. } => amplitude.abs(),
            Disturbance::Table { d, .. } => d.iter().fold(0.0, |m, x| m.max(x.abs())),
            Disturbance::Custom { bound, .. } => *bound,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Disturbance::Zero => 0.0,
            Disturbance::Constant(c) => *c,
            Disturbance::Sine {
                amplitude,
                freq_hz,
                phase_rad,
            } => amplitude * (std::f64::consts::TAU * freq_hz * t + phase_rad).sin(),
            Disturbance::Table { t: ts, d } => {
                let idx = ts.partition_point(|&ti| ti <= t);
                if idx == 0 {
                    0.0
                } else {
                    d[idx - 1]
                }
            }
            Disturbance::Custom { f, .. } => f(t),
        }
    }

    /// Sample at `t`, enforcing the declared bound.
    pub fn checked_value(&self, t: f64) -> Result<f64> {
        let d = self.value(t);
        if !d.is_finite() {
            return Err(Error::NonFinite { what: "disturbance", t });
        }
        let bound = self.bound();
        if d.abs() > bound * (1.0 + 1e-12) {
            return Err(Error::invalid(
                "disturbance",
                format!("|d({t})| = {} exceeds declared bound {bound}", d.abs()),
            ));
        }
        Ok(d)
    }
}

/// Dense open-loop trace, one row per integration step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub v: Vec<f64>,
    /// Saturated input applied over `[t[i], t[i+1])`.
    pub u: Vec<f64>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W, decimation: usize) -> std::io::Result<()> {
        let step = decimation.max(1);
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "y", "v", "u"])?;
        for i in (0..self.len()).step_by(step) {
            w.write_record([
                self.t[i].to_string(),
                self.y[i].to_string(),
                self.v[i].to_string(),
                self.u[i].to_string(),
            ])?;
        }
        w.flush()
    }

    pub fn save_csv(&self, path: &Path, decimation: usize) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file), decimation)
            .map_err(|e| Error::io(path, e))
    }
}

/// Open-loop simulation from rest. The input rate fed to the dynamics is the
/// backward difference of the saturated input, with zero input before `t = 0`.
pub fn simulate(
    input: &dyn InputSignal,
    disturbance: &Disturbance,
    config: &SimConfig,
    params: &PlantParams,
) -> Result<Trace> {
    config.validate(params)?;
    let mut plant = Plant::new(*params, config.dt)?.with_position_update(config.position_update);
    let n = config.steps();
    let mut trace = Trace {
        t: Vec::with_capacity(n + 1),
        y: Vec::with_capacity(n + 1),
        v: Vec::with_capacity(n + 1),
        u: Vec::with_capacity(n + 1),
    };

    let mut u_prev = 0.0;
    for k in 0..=n {
        let t = k as f64 * config.dt;
        let raw = input.volts(t);
        if !raw.is_finite() {
            return Err(Error::NonFinite { what: "input", t });
        }
        let u = config.saturate(raw);
        trace.t.push(t);
        trace.y.push(plant.position());
        trace.v.push(plant.velocity());
        trace.u.push(u);
        if k == n {
            break;
        }
        let u_dot = (u - u_prev) / config.dt;
        let d = disturbance.checked_value(t)?;
        plant.step(u, u_dot, d)?;
        u_prev = u;
    }
    Ok(trace)
}

/// Closed-form plateau velocity under a constant input. Zero when the input
/// cannot break stiction or cannot overcome Coulomb friction.
pub fn steady_state_velocity(u: f64, params: &PlantParams) -> f64 {
    let drive = params.alpha3 * u;
    if drive.abs() < params.alpha_s_cap {
        return 0.0;
    }
    if drive > params.alpha2_pos {
        (drive - params.alpha2_pos) / params.alpha1_pos
    } else if drive < -params.alpha2_neg {
        (drive + params.alpha2_neg) / params.alpha1_neg
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(duration: f64) -> SimConfig {
        SimConfig {
            duration,
            ..SimConfig::default()
        }
    }

    #[test]
    fn rest_stays_at_rest() {
        let params = PlantParams::default();
        let mut plant = Plant::new(params, 5e-5).unwrap();
        plant.step(0.0, 0.0, 0.0).unwrap();
        assert_eq!(plant.position(), 0.0);
        assert_eq!(plant.velocity(), 0.0);
        assert_relative_eq!(plant.state().t, 5e-5);

        let trace = simulate(&|_t: f64| 0.0, &Disturbance::Zero, &cfg(0.2), &params).unwrap();
        assert!(trace.y.iter().all(|&y| y == 0.0));
    }

    #[test]
    fn plateau_is_a_fixed_point() {
        let params = PlantParams::default();
        let v_ss = steady_state_velocity(1.6, &params);
        let mut plant = Plant::new(params, 5e-5).unwrap();
        // run to the plateau first, then watch 1000 steps
        for _ in 0..20_000 {
            plant.step(1.6, 0.0, 0.0).unwrap();
        }
        for _ in 0..1000 {
            plant.step(1.6, 0.0, 0.0).unwrap();
            assert!((plant.velocity() - v_ss).abs() < 0.01 * v_ss);
        }
    }

    #[test]
    fn small_velocity_is_captured_by_stiction() {
        let params = PlantParams::default();
        let mut plant = Plant::new(params, 5e-5).unwrap();
        plant.state.v = 1e-7;
        plant.step(0.0, 0.0, 0.0).unwrap();
        assert_eq!(plant.velocity(), 0.0);
    }

    #[test]
    fn zero_crossing_clamps_when_stiction_holds() {
        let params = PlantParams {
            tau: 0.0,
            ..PlantParams::default()
        };
        let mut plant = Plant::new(params, 5e-5).unwrap();
        // slightly above v_cr and decelerating hard enough to cross zero
        plant.state.v = 6e-6;
        plant.step(-0.05, 0.0, 0.0).unwrap();
        assert_eq!(plant.velocity(), 0.0);
    }

    #[test]
    fn non_finite_input_aborts() {
        let mut plant = Plant::new(PlantParams::default(), 5e-5).unwrap();
        assert!(matches!(
            plant.step(f64::NAN, 0.0, 0.0),
            Err(Error::NonFinite { what: "input", .. })
        ));
    }

    #[test]
    fn delayed_term_reads_k_steps_back() {
        // tau = 4 dt, so the viscous term at step n must use v at step n - 4
        let dt = 1e-3;
        let params = PlantParams {
            tau: 4e-3,
            ..PlantParams::default()
        };
        let mut plant = Plant::new(params, dt).unwrap();
        let mut velocities = vec![0.0];
        for n in 0..40 {
            let v = plant.velocity();
            let v_del = if n >= 4 { velocities[n - 4] } else { 0.0 };
            let expected = super::super::acceleration(v, v_del, 2.0, 0.0, 0.0, &params);
            let dyn_ = plant.step(2.0, 0.0, 0.0).unwrap();
            assert_eq!(dyn_.acceleration, expected, "step {n}");
            velocities.push(plant.velocity());
        }
    }

    #[test]
    fn steady_state_closed_forms() {
        let p = PlantParams::default();
        assert_relative_eq!(
            steady_state_velocity(1.6, &p),
            0.062468634452206115,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            steady_state_velocity(2.5, &p),
            0.11438402390415266,
            max_relative = 1e-12
        );
        assert_eq!(steady_state_velocity(0.05, &p), 0.0);
        assert_relative_eq!(
            steady_state_velocity(-2.3, &p),
            -0.05957107528249396,
            max_relative = 1e-12
        );
        // breaks stiction but not Coulomb friction
        assert_eq!(steady_state_velocity(0.3, &p), 0.0);
    }

    #[test]
    fn input_profiles() {
        let pulse = InputProfile::Pulse {
            amplitude_v: 1.6,
            start_s: 0.1,
            width_s: 0.4,
        };
        assert_eq!(pulse.volts(0.05), 0.0);
        assert_eq!(pulse.volts(0.1), 1.6);
        assert_eq!(pulse.volts(0.49), 1.6);
        assert_eq!(pulse.volts(0.5), 0.0);

        let tri = InputProfile::Triangle {
            high_v: 1.5,
            low_v: -2.0,
            period_s: 6.0,
        };
        assert_eq!(tri.volts(0.0), 0.0);
        assert_relative_eq!(tri.volts(1.5), 1.5);
        assert_relative_eq!(tri.volts(3.0), -0.25);
        assert_relative_eq!(tri.volts(4.5), -2.0);
        assert_relative_eq!(tri.volts(6.0), 0.0, epsilon = 1e-12);

        let table = InputProfile::Table {
            t_s: vec![0.0, 1.0],
            u_v: vec![1.0, 2.0],
        };
        assert_eq!(table.volts(-1.0), 0.0);
        assert_eq!(table.volts(0.5), 1.0);
        assert_eq!(table.volts(3.0), 2.0);
        assert!(InputProfile::Table {
            t_s: vec![0.0, 0.0],
            u_v: vec![1.0, 2.0]
        }
        .validate()
        .is_err());
    }

    #[test]
    fn saturation_applies_before_plant() {
        let trace = simulate(&|_t: f64| 25.0, &Disturbance::Zero, &cfg(0.01), &PlantParams::default()).unwrap();
        assert!(trace.u.iter().all(|&u| u == 10.0));
    }

    #[test]
    fn disturbance_bound_enforced() {
        let d = Disturbance::custom(|t| 2.0 * t, 1.0);
        assert!(d.checked_value(0.4).is_ok());
        assert!(d.checked_value(0.6).is_err());
        let sine = Disturbance::Sine {
            amplitude: 1.0,
            freq_hz: 3.0,
            phase_rad: 0.0,
        };
        assert_eq!(sine.bound(), 1.0);
        assert!((0..1000).all(|i| sine.value(i as f64 * 1e-3).abs() <= 1.0));
    }

    #[test]
    fn config_rejects_dt_above_delay() {
        let params = PlantParams::default();
        let bad = SimConfig {
            dt: 1e-2,
            ..SimConfig::default()
        };
        assert!(bad.validate(&params).is_err());
    }

    #[test]
    fn csv_header_and_decimation() {
        let trace = simulate(&|_t: f64| 1.0, &Disturbance::Zero, &cfg(0.001), &PlantParams::default()).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf, 5).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,y,v,u");
        assert_eq!(lines.len(), 1 + trace.len().div_ceil(5));
    }
}
