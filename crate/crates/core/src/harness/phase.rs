use std::io::Write;

use super::tracking::TrackingTrace;

/// `(s, ṡ)` pairs with `ṡ` from a backward difference at the control
/// period. The first sample has no predecessor and is dropped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhasePlane {
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub s_dot: Vec<f64>,
}

impl PhasePlane {
    pub fn from_trace(trace: &TrackingTrace) -> Self {
        let mut p = PhasePlane::default();
        for i in 1..trace.len() {
            let dt = trace.t[i] - trace.t[i - 1];
            p.t.push(trace.t[i]);
            p.s.push(trace.s[i]);
            p.s_dot.push((trace.s[i] - trace.s[i - 1]) / dt);
        }
        p
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// `s,s_dot` CSV.
    pub fn write_csv<W: Write>(&self, out: W, decimation: usize) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["s", "s_dot"])?;
        for i in (0..self.len()).step_by(decimation.max(1)) {
            w.write_record([self.s[i].to_string(), self.s_dot[i].to_string()])?;
        }
        w.flush()
    }
}

/// Outcome of the `s·ṡ ≤ 0` check outside a band around the surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentReport {
    /// Half-width of the excluded band in `s`.
    pub band: f64,
    /// Samples with `|s| > band`.
    pub outside: usize,
    /// Of those, samples with `s·ṡ > 0`.
    pub violations: usize,
    /// `max |s|` before `split_s`.
    pub max_s_early: f64,
    /// `max |s|` from `split_s` on.
    pub max_s_late: f64,
}

impl DescentReport {
    /// Share of outside-band samples that descend; 1 when none are outside.
    pub fn descent_fraction(&self) -> f64 {
        if self.outside == 0 {
            1.0
        } else {
            1.0 - self.violations as f64 / self.outside as f64
        }
    }

    /// At least `min_fraction` descending and no late growth.
    pub fn passes(&self, min_fraction: f64) -> bool {
        self.descent_fraction() >= min_fraction && self.max_s_late < self.max_s_early
    }
}

pub fn descent_check(phase: &PhasePlane, band: f64, split_s: f64) -> DescentReport {
    let mut outside = 0;
    let mut violations = 0;
    let mut early: f64 = 0.0;
    let mut late: f64 = 0.0;
    for i in 0..phase.len() {
        let s = phase.s[i];
        if s.abs() > band {
            outside += 1;
            if s * phase.s_dot[i] > 0.0 {
                violations += 1;
            }
        }
        if phase.t[i] < split_s {
            early = early.max(s.abs());
        } else {
            late = late.max(s.abs());
        }
    }
    DescentReport {
        band,
        outside,
        violations,
        max_s_early: early,
        max_s_late: late,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_of(s: Vec<f64>, dt: f64) -> TrackingTrace {
        let n = s.len();
        TrackingTrace {
            t: (0..n).map(|i| i as f64 * dt).collect(),
            y_d: vec![0.0; n],
            y: vec![0.0; n],
            e: vec![0.0; n],
            u: vec![0.0; n],
            s,
        }
    }

    #[test]
    fn backward_difference() {
        let p = PhasePlane::from_trace(&trace_of(vec![1.0, 0.5, 0.25], 0.5));
        assert_eq!(p.s, vec![0.5, 0.25]);
        assert_eq!(p.s_dot, vec![-1.0, -0.5]);
        let mut buf = Vec::new();
        p.write_csv(&mut buf, 1).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "s,s_dot\n0.5,-1\n0.25,-0.5\n");
    }

    #[test]
    fn decaying_surface_passes() {
        let s: Vec<f64> = (0..100).map(|i| (-(i as f64) * 0.1).exp()).collect();
        let r = descent_check(&PhasePlane::from_trace(&trace_of(s, 0.1)), 0.01, 5.0);
        assert_eq!(r.violations, 0);
        assert!(r.passes(0.99));
    }

    #[test]
    fn growing_surface_fails() {
        let s: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
        let r = descent_check(&PhasePlane::from_trace(&trace_of(s, 0.1)), 0.01, 5.0);
        assert!(!r.passes(0.99));
    }
}
