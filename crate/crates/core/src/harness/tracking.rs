use super::config::Experiment;
use crate::controllers::{Controller, ControllerInput, ControllerSpec};
use crate::error::{Error, Result};
use crate::parallel;
use crate::plant::Plant;

/// Closed-loop signals sampled at the control period.
#[derive(Clone, Default, PartialEq)]
pub struct TrackingTrace {
    pub t: Vec<f64>,
    pub y_d: Vec<f64>,
    /// Measured position.
    pub y: Vec<f64>,
    /// `y_d - y`.
    pub e: Vec<f64>,
    /// Applied input (V).
    pub u: Vec<f64>,
    pub s: Vec<f64>,
}

impl TrackingTrace {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            t: Vec::with_capacity(n),
            y_d: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            e: Vec::with_capacity(n),
            u: Vec::with_capacity(n),
            s: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Index range of samples with `start <= t <= end`.
    pub fn window(&self, start: f64, end: f64) -> std::ops::Range<usize> {
        let eps = 1e-9;
        let lo = self.t.partition_point(|&t| t < start - eps);
        let hi = self.t.partition_point(|&t| t <= end + eps);
        lo..hi.max(lo)
    }
}

impl std::fmt::Debug for TrackingTrace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrackingTrace")
            .field("samples", &self.len())
            .field("t_end", &self.t.last())
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingMetrics {
    pub rms_error_m: f64,
    pub max_abs_error_m: f64,
    pub window_start_s: f64,
    pub window_end_s: f64,
    /// RMS of the applied input (V).
    pub control_effort_rms_v: f64,
    /// Mean `|Δu|` between consecutive samples (V).
    pub chatter_index_v: f64,
}

impl TrackingMetrics {
    pub const FIELDS: [&'static str; 6] = [
        "rms_error_m",
        "max_abs_error_m",
        "window_start_s",
        "window_end_s",
        "control_effort_rms_v",
        "chatter_index_v",
    ];

    pub fn compute(trace: &TrackingTrace, window_start_s: f64, window_end_s: f64) -> Self {
        let r = trace.window(window_start_s, window_end_s);
        let e = &trace.e[r.clone()];
        let u = &trace.u[r];
        let rms = |x: &[f64]| {
            if x.is_empty() {
                0.0
            } else {
                (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
            }
        };
        let chatter = if u.len() < 2 {
            0.0
        } else {
            u.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (u.len() - 1) as f64
        };
        Self {
            rms_error_m: rms(e),
            max_abs_error_m: e.iter().fold(0.0, |m, x| m.max(x.abs())),
            window_start_s,
            window_end_s,
            control_effort_rms_v: rms(u),
            chatter_index_v: chatter,
        }
    }

    pub fn values(&self) -> [f64; 6] {
        [
            self.rms_error_m,
            self.max_abs_error_m,
            self.window_start_s,
            self.window_end_s,
            self.control_effort_rms_v,
            self.chatter_index_v,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct TrackingRun {
    pub label: String,
    pub trace: TrackingTrace,
    pub metrics: TrackingMetrics,
}

/// Closed loop with the controller described by `spec`.
pub fn run_tracking(exp: &Experiment, spec: &ControllerSpec) -> Result<TrackingRun> {
    let mut controller = spec.build(&exp.params, exp.sim.u_sat_v)?;
    run_tracking_with(exp, controller.as_mut(), spec.label())
}

/// Closed loop with a caller-supplied controller.
///
/// The controller runs every `control_period_s`; its saturated output is
/// held over the plant substeps, and the plant sees the input rate over the
/// last control period.
pub fn run_tracking_with(exp: &Experiment, controller: &mut dyn Controller, label: String) -> Result<TrackingRun> {
    let sim = &exp.sim;
    sim.validate()?;
    let substeps = sim.substeps()?;
    let n = sim.control_steps();
    let ts = sim.control_period_s;
    let tau = exp.params.tau;

    let mut plant =
        Plant::at_rest(exp.params, sim.dt_s, exp.initial_position_m)?.with_position_update(sim.position_update);
    controller.reset();
    let mut trace = TrackingTrace::with_capacity(n + 1);
    let mut u_prev = 0.0;

    let diverged = |what, t, trace: &TrackingTrace| Error::Diverged {
        what,
        t,
        partial: Box::new(trace.clone()),
    };

    for k in 0..=n {
        let t = k as f64 * ts;
        let r = exp.reference.sample(t);
        let y = exp.measure(plant.position());
        let e = r.y - y;
        let out = controller.update(&ControllerInput {
            t,
            dt: ts,
            e,
            v_d: r.v,
            v_d_delayed: exp.reference.sample(t - tau).v,
            a_d: r.a,
        })?;
        if !out.u.is_finite() {
            return Err(diverged("control input", t, &trace));
        }
        if !out.s.is_finite() {
            return Err(diverged("sliding variable", t, &trace));
        }
        let u = out.u.clamp(-sim.u_sat_v, sim.u_sat_v);

        trace.t.push(t);
        trace.y_d.push(r.y);
        trace.y.push(y);
        trace.e.push(e);
        trace.u.push(u);
        trace.s.push(out.s);
        if k == n {
            break;
        }

        let u_dot = (u - u_prev) / ts;
        u_prev = u;
        for j in 0..substeps {
            let tj = t + j as f64 * sim.dt_s;
            let d = exp.disturbance.checked_value(tj)?;
            if let Err(err) = plant.step(u, u_dot, d) {
                return Err(match err {
                    Error::NonFinite { what, t } => diverged(what, t, &trace),
                    other => other,
                });
            }
        }
    }

    let end = exp.metrics.window_end_s.unwrap_or(n as f64 * ts);
    let metrics = TrackingMetrics::compute(&trace, exp.metrics.window_start_s, end);
    Ok(TrackingRun { label, trace, metrics })
}

/// One closed-loop experiment of a comparison.
#[derive(Debug, Clone)]
pub struct TrackingCase {
    pub experiment: Experiment,
    pub controller: ControllerSpec,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub runs: Vec<TrackingRun>,
    /// Indices into `runs`, best RMS error first.
    pub ranking: Vec<usize>,
}

impl Comparison {
    pub fn best(&self) -> Option<&TrackingRun> {
        self.ranking.first().map(|&i| &self.runs[i])
    }

    pub fn run(&self, label: &str) -> Option<&TrackingRun> {
        self.runs.iter().find(|r| r.label == label)
    }
}

fn check_shared(cases: &[TrackingCase]) -> Result<()> {
    let Some(first) = cases.first() else {
        return Err(Error::MismatchedExperiments("no experiments to compare".into()));
    };
    let a = &first.experiment;
    for (i, c) in cases.iter().enumerate().skip(1) {
        let b = &c.experiment;
        let what = if a.params != b.params {
            Some("plant")
        } else if a.reference != b.reference {
            Some("reference")
        } else if a.sim.duration_s != b.sim.duration_s
            || a.sim.control_period_s != b.sim.control_period_s
            || a.sim.dt_s != b.sim.dt_s
        {
            Some("time base")
        } else if a.metrics != b.metrics {
            Some("metric window")
        } else {
            None
        };
        if let Some(what) = what {
            return Err(Error::MismatchedExperiments(format!(
                "case {i} differs from case 0 in {what}"
            )));
        }
    }
    Ok(())
}

/// Run every case and rank by RMS tracking error.
pub fn compare_controllers(cases: &[TrackingCase]) -> Result<Comparison> {
    check_shared(cases)?;
    let runs = parallel::map(cases, |c| run_tracking(&c.experiment, &c.controller));
    finish(runs)
}

/// Sequential [`compare_controllers`].
pub fn compare_controllers_seq(cases: &[TrackingCase]) -> Result<Comparison> {
    check_shared(cases)?;
    let runs = parallel::map_seq(cases, |c| run_tracking(&c.experiment, &c.controller));
    finish(runs)
}

fn finish(runs: Vec<Result<TrackingRun>>) -> Result<Comparison> {
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let mut ranking: Vec<usize> = (0..runs.len()).collect();
    ranking.sort_by(|&i, &j| runs[i].metrics.rms_error_m.total_cmp(&runs[j].metrics.rms_error_m));
    Ok(Comparison { runs, ranking })
}

/// Cases for every controller in `specs` on one shared experiment.
pub fn cases_for(exp: &Experiment, specs: &[ControllerSpec]) -> Vec<TrackingCase> {
    specs
        .iter()
        .map(|c| TrackingCase {
            experiment: exp.clone(),
            controller: c.clone(),
        })
        .collect()
}
