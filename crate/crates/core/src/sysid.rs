//! Friction identification from pulse-response plateaus.
//!
//! Each pulse of constant amplitude `u` drives the stage to a plateau
//! velocity `v`. At the plateau the acceleration vanishes, so every pulse
//! gives one linear equation in the four direction-dependent coefficients:
//!
//! ```text
//! v > 0:  v·α1p   + α2p = α3·u
//! v < 0:  |v|·α1n + α2n = α3·|u|
//! ```
//!
//! Stacking the rows gives `X·A = Y` with `A = [α1p, α1n, α2p, α2n]`, solved
//! in the least-squares sense.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::parallel;
use crate::plant::{simulate, Disturbance, InputProfile, InputSignal, PlantParams, SimConfig, Trace};

/// Largest accepted `cond(XᵀX)`.
pub const CONDITION_LIMIT: f64 = 1e8;

/// Relative standard deviation above which a plateau counts as unsettled.
pub const SETTLED_TOLERANCE: f64 = 0.05;

/// Default length of the averaging window at the end of a pulse (s).
pub const DEFAULT_WINDOW: f64 = 0.1;

/// Measured `(u, v)` plateaus of the reference stage, signed.
pub const REFERENCE_PULSES: [(f64, f64); 10] = [
    (-2.3, -0.05562),
    (1.6, 0.06222),
    (-1.8, -0.03393),
    (1.3, 0.04465),
    (-2.0, -0.04622),
    (1.5, 0.05742),
    (-2.1, -0.04991),
    (1.7, 0.06863),
    (-2.5, -0.07120),
    (2.0, 0.08519),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseRow {
    pub u_volts: f64,
    pub v_steady: f64,
}

impl PulseRow {
    /// `+1` for forward motion, `-1` for reverse.
    pub fn direction(&self) -> f64 {
        self.v_steady.signum()
    }
}

/// Plateau measurements; every row has nonzero velocity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PulseDataset {
    rows: Vec<PulseRow>,
}

impl PulseDataset {
    pub fn new(rows: Vec<PulseRow>) -> Result<Self> {
        for r in &rows {
            if !r.u_volts.is_finite() || !r.v_steady.is_finite() {
                return Err(Error::invalid("pulse row", format!("non-finite value in {r:?}")));
            }
            if r.v_steady == 0.0 {
                return Err(Error::invalid(
                    "v_steady",
                    format!("zero plateau at u = {} V carries no friction information", r.u_volts),
                ));
            }
        }
        Ok(Self { rows })
    }

    pub fn reference() -> Self {
        Self {
            rows: REFERENCE_PULSES
                .iter()
                .map(|&(u_volts, v_steady)| PulseRow { u_volts, v_steady })
                .collect(),
        }
    }

    pub fn rows(&self) -> &[PulseRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Reads `u_volts,v_steady` CSV with a header row.
    pub fn read_csv<R: Read>(reader: R) -> std::result::Result<Result<Self>, csv::Error> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<PulseRow>, _>>()?;
        Ok(Self::new(rows))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file).map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["u_volts", "v_steady"])?;
        for r in &self.rows {
            w.write_record([r.u_volts.to_string(), r.v_steady.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mean velocity over the final `window` seconds of the last constant-input
/// segment with nonzero input (or of the final segment if the input is zero
/// throughout).
pub fn steady_state_from_trace(trace: &Trace, window: f64) -> Result<f64> {
    ensure_positive("window", window)?;
    let n = trace.len();
    if n < 2 {
        return Err(Error::PlateauTooShort { available: 0.0, window });
    }
    let dt = trace.t[1] - trace.t[0];

    let mut end = n - 1;
    if let Some(last_on) = trace.u.iter().rposition(|&u| u != 0.0) {
        end = last_on;
    }
    let level = trace.u[end];
    let mut start = end;
    while start > 0 && trace.u[start - 1] == level {
        start -= 1;
    }

    let available = (end - start + 1) as f64 * dt;
    let samples = (window / dt).round().max(1.0) as usize;
    if samples > end - start + 1 {
        return Err(Error::PlateauTooShort { available, window });
    }
    let v = &trace.v[end + 1 - samples..=end];
    let mean = v.iter().sum::<f64>() / samples as f64;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / samples as f64;
    let std = var.sqrt();
    if std > 0.0 {
        let variation = if mean == 0.0 { f64::INFINITY } else { std / mean.abs() };
        if variation >= SETTLED_TOLERANCE {
            return Err(Error::Unsettled {
                variation,
                limit: SETTLED_TOLERANCE,
            });
        }
    }
    Ok(mean)
}

/// Regressor system `X·A ≈ Y`, columns `[α1p, α1n, α2p, α2n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LsSystem {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

pub const COEFFICIENT_NAMES: [&str; 4] = ["alpha1_pos", "alpha1_neg", "alpha2_pos", "alpha2_neg"];

impl LsSystem {
    /// Stack the rows without checking identifiability.
    pub fn assemble(data: &PulseDataset, alpha3: f64) -> Self {
        let m = data.len();
        let mut x = DMatrix::zeros(m, 4);
        let mut y = DVector::zeros(m);
        for (i, r) in data.rows().iter().enumerate() {
            if r.v_steady > 0.0 {
                x[(i, 0)] = r.v_steady;
                x[(i, 2)] = 1.0;
                y[i] = alpha3 * r.u_volts;
            } else {
                x[(i, 1)] = r.v_steady.abs();
                x[(i, 3)] = 1.0;
                y[i] = alpha3 * r.u_volts.abs();
            }
        }
        Self { x, y }
    }
}

/// Assemble the system, requiring at least two plateaus per direction.
pub fn build_ls_system(data: &PulseDataset, alpha3: f64) -> Result<LsSystem> {
    ensure_positive("alpha3", alpha3)?;
    let pos = data.rows().iter().filter(|r| r.v_steady > 0.0).count();
    let neg = data.len() - pos;
    for (count, dir) in [(pos, "positive"), (neg, "negative")] {
        if count < 2 {
            return Err(Error::Unidentifiable(format!(
                "{count} {dir}-direction plateau(s); at least 2 are needed for the viscous and Coulomb terms"
            )));
        }
    }
    Ok(LsSystem::assemble(data, alpha3))
}

/// Least-squares coefficients; `None` for coefficients whose column is empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsSolution {
    pub alpha1_pos: Option<f64>,
    pub alpha1_neg: Option<f64>,
    pub alpha2_pos: Option<f64>,
    pub alpha2_neg: Option<f64>,
    /// `‖X·A - Y‖∞`.
    pub residual_max: f64,
    /// RMS of `X·A - Y`.
    pub residual_rms: f64,
    /// `cond(XᵀX)` over the identified columns.
    pub condition: f64,
    pub rows: usize,
}

impl LsSolution {
    pub fn coefficients(&self) -> [Option<f64>; 4] {
        [self.alpha1_pos, self.alpha1_neg, self.alpha2_pos, self.alpha2_neg]
    }

    /// Plant parameters with all four coefficients replaced. Fails if any is
    /// unidentified.
    pub fn apply_to(&self, base: PlantParams) -> Result<PlantParams> {
        match self.coefficients() {
            [Some(a1p), Some(a1n), Some(a2p), Some(a2n)] => Ok(base.with_identified(a1p, a1n, a2p, a2n)),
            _ => Err(Error::Unidentifiable(
                "fit is missing one direction; cannot build full plant parameters".into(),
            )),
        }
    }
}

/// Minimise `‖X·A - Y‖₂` by SVD over the nonzero columns of `X`.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn solve_ls(sys: &LsSystem) -> Result<LsSolution> {
    if sys.x.nrows() != sys.y.len() {
        return Err(Error::LengthMismatch {
            expected: sys.x.nrows(),
            got: sys.y.len(),
        });
    }
    if sys.x.iter().chain(sys.y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("LsSystem", "non-finite entry"));
    }
    let active: Vec<usize> = (0..sys.x.ncols())
        .filter(|&j| sys.x.column(j).iter().any(|&v| v != 0.0))
        .collect();
    if active.is_empty() {
        return Err(Error::Unidentifiable("regressor matrix is empty".into()));
    }
    let x = sys.x.select_columns(&active);

    let svd = x.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    let condition = if s_min > 0.0 {
        (s_max / s_min).powi(2)
    } else {
        f64::INFINITY
    };
    if !(condition <= CONDITION_LIMIT) || x.nrows() < x.ncols() {
        return Err(Error::IllConditioned {
            condition,
            limit: CONDITION_LIMIT,
        });
    }
    let a = svd
        .solve(&sys.y, 0.0)
        .map_err(|e| Error::Unidentifiable(e.to_string()))?;

    let residual = &x * &a - &sys.y;
    let mut coeffs = [None; 4];
    for (k, &j) in active.iter().enumerate() {
        coeffs[j] = Some(a[k]);
    }
    Ok(LsSolution {
        alpha1_pos: coeffs[0],
        alpha1_neg: coeffs[1],
        alpha2_pos: coeffs[2],
        alpha2_neg: coeffs[3],
        residual_max: residual.amax(),
        residual_rms: (residual.norm_squared() / residual.len() as f64).sqrt(),
        condition,
        rows: sys.y.len(),
    })
}

/// Identify the four coefficients from a dataset.
pub fn identify(data: &PulseDataset, alpha3: f64) -> Result<LsSolution> {
    solve_ls(&build_ls_system(data, alpha3)?)
}

/// Velocity-domain deviation of a model from a reference trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationMetrics {
    pub rms_velocity_error: f64,
    pub max_velocity_error: f64,
}

/// Simulate `params` under `input` on the time base of `reference` and
/// compare velocities.
pub fn validate_model(
    params: &PlantParams,
    input: &dyn InputSignal,
    reference: &Trace,
    config: &SimConfig,
) -> Result<ValidationMetrics> {
    let sim = simulate(input, &Disturbance::Zero, config, params)?;
    if sim.len() != reference.len() {
        return Err(Error::TimeBaseMismatch(format!(
            "reference has {} samples, simulation {}",
            reference.len(),
            sim.len()
        )));
    }
    let tol = 1e-9 * config.dt;
    if let Some(i) = (0..sim.len()).find(|&i| (sim.t[i] - reference.t[i]).abs() > tol) {
        return Err(Error::TimeBaseMismatch(format!(
            "sample {i}: reference t = {}, simulation t = {}",
            reference.t[i], sim.t[i]
        )));
    }
    let mut sum = 0.0;
    let mut max: f64 = 0.0;
    for (a, b) in sim.v.iter().zip(&reference.v) {
        let d = (a - b).abs();
        sum += d * d;
        max = max.max(d);
    }
    Ok(ValidationMetrics {
        rms_velocity_error: if sim.is_empty() {
            0.0
        } else {
            (sum / sim.len() as f64).sqrt()
        },
        max_velocity_error: max,
    })
}

/// Pulse experiment shared by all amplitudes of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseExperiment {
    pub width_s: f64,
    pub window_s: f64,
    pub dt_s: f64,
}

impl Default for PulseExperiment {
    fn default() -> Self {
        Self {
            width_s: 0.4,
            window_s: DEFAULT_WINDOW,
            dt_s: SimConfig::default().dt,
        }
    }
}

impl PulseExperiment {
    pub fn profile(&self, amplitude_v: f64) -> InputProfile {
        InputProfile::Pulse {
            amplitude_v,
            start_s: 0.0,
            width_s: self.width_s,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            dt: self.dt_s,
            duration: self.width_s,
            ..SimConfig::default()
        }
    }

    pub fn run(&self, amplitude_v: f64, params: &PlantParams) -> Result<Trace> {
        simulate(
            &self.profile(amplitude_v),
            &Disturbance::Zero,
            &self.sim_config(),
            params,
        )
    }

    pub fn plateau(&self, amplitude_v: f64, params: &PlantParams) -> Result<PulseRow> {
        let trace = self.run(amplitude_v, params)?;
        Ok(PulseRow {
            u_volts: amplitude_v,
            v_steady: steady_state_from_trace(&trace, self.window_s)?,
        })
    }
}

/// Simulate one pulse per amplitude and collect the plateaus.
pub fn pulse_sweep(amplitudes: &[f64], experiment: &PulseExperiment, params: &PlantParams) -> Result<PulseDataset> {
    let rows = parallel::map(amplitudes, |&u| experiment.plateau(u, params));
    PulseDataset::new(rows.into_iter().collect::<Result<Vec<_>>>()?)
}

/// Sequential [`pulse_sweep`].
pub fn pulse_sweep_seq(amplitudes: &[f64], experiment: &PulseExperiment, params: &PlantParams) -> Result<PulseDataset> {
    let rows = parallel::map_seq(amplitudes, |&u| experiment.plateau(u, params));
    PulseDataset::new(rows.into_iter().collect::<Result<Vec<_>>>()?)
}

/// Render a fit as `key: value` lines.
pub fn format_fitted(solution: &LsSolution) -> String {
    let mut out = String::new();
    for (name, value) in COEFFICIENT_NAMES.iter().zip(solution.coefficients()) {
        if let Some(v) = value {
            let _ = writeln!(out, "{name}: {v}");
        }
    }
    let _ = writeln!(out, "residual_max: {}", solution.residual_max);
    let _ = writeln!(out, "residual_rms: {}", solution.residual_rms);
    let _ = writeln!(out, "condition: {}", solution.condition);
    let _ = writeln!(out, "rows: {}", solution.rows);
    out
}

/// Parse `key: value` lines. Blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key: value`", lineno + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Apply a fitted-parameter document to `base`. All four coefficients must
/// be present.
pub fn parse_fitted(text: &str, base: PlantParams) -> Result<PlantParams> {
    let map = parse_key_values(text)?;
    let mut values = [0.0; 4];
    for (slot, name) in values.iter_mut().zip(COEFFICIENT_NAMES) {
        let raw = map
            .get(name)
            .ok_or_else(|| Error::Config(format!("fitted parameters: missing `{name}`")))?;
        *slot = raw
            .parse()
            .map_err(|_| Error::Config(format!("fitted parameters: `{name}` is not a number: {raw}")))?;
    }
    let params = base.with_identified(values[0], values[1], values[2], values[3]);
    params.validate()?;
    Ok(params)
}

pub fn load_fitted(path: &Path, base: PlantParams) -> Result<PlantParams> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fitted(&text, base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn synthetic_trace(u: f64, v: impl Fn(usize) -> f64, n: usize, dt: f64) -> Trace {
        Trace {
            t: (0..n).map(|i| i as f64 * dt).collect(),
            y: vec![0.0; n],
            v: (0..n).map(v).collect(),
            u: vec![u; n],
        }
    }

    #[test]
    fn plateau_of_constant_trace() {
        let tr = synthetic_trace(1.0, |_| 0.05, 5000, 1e-4);
        assert_relative_eq!(steady_state_from_trace(&tr, 0.1).unwrap(), 0.05, max_relative = 1e-12);
    }

    #[test]
    fn plateau_of_simulated_pulse() {
        let exp = PulseExperiment::default();
        let p = PlantParams::default();
        let row = exp.plateau(1.6, &p).unwrap();
        assert_relative_eq!(row.v_steady, 0.062468634452206115, max_relative = 1e-2);
        let row = exp.plateau(-2.3, &p).unwrap();
        assert_relative_eq!(row.v_steady, -0.05957107528249396, max_relative = 1e-2);
    }

    #[test]
    fn accelerating_trace_is_unsettled() {
        let tr = synthetic_trace(1.0, |i| i as f64 * 1e-3, 5000, 1e-4);
        assert!(matches!(
            steady_state_from_trace(&tr, 0.1),
            Err(Error::Unsettled { .. })
        ));
    }

    #[test]
    fn short_plateau_rejected() {
        let tr = synthetic_trace(1.0, |_| 0.05, 50, 1e-4);
        assert!(matches!(
            steady_state_from_trace(&tr, 0.1),
            Err(Error::PlateauTooShort { .. })
        ));
    }

    #[test]
    fn regressor_rows() {
        let data = PulseDataset::new(vec![
            PulseRow {
                u_volts: -2.3,
                v_steady: -0.05562,
            },
            PulseRow {
                u_volts: 1.6,
                v_steady: 0.06222,
            },
        ])
        .unwrap();
        let sys = LsSystem::assemble(&data, 6.0);
        assert_eq!(
            sys.x.row(0).iter().copied().collect::<Vec<_>>(),
            vec![0.0, 0.05562, 0.0, 1.0]
        );
        assert_relative_eq!(sys.y[0], 13.8, max_relative = 1e-12);
        assert_eq!(
            sys.x.row(1).iter().copied().collect::<Vec<_>>(),
            vec![0.06222, 0.0, 1.0, 0.0]
        );
        assert_relative_eq!(sys.y[1], 9.6, max_relative = 1e-12);
    }

    #[test]
    fn missing_direction_is_unidentifiable() {
        let data = PulseDataset::new(vec![
            PulseRow {
                u_volts: -2.3,
                v_steady: -0.05,
            },
            PulseRow {
                u_volts: -2.0,
                v_steady: -0.04,
            },
        ])
        .unwrap();
        assert!(matches!(build_ls_system(&data, 6.0), Err(Error::Unidentifiable(_))));
    }

    #[test]
    fn reference_dataset_fit() {
        let sol = identify(&PulseDataset::reference(), 6.0).unwrap();
        let want = [104.0154, 117.1441, 3.1023, 6.8216];
        for (got, want) in sol.coefficients().iter().zip(want) {
            assert_relative_eq!(got.unwrap(), want, max_relative = 1e-3);
        }
        assert!(sol.residual_max < 0.47, "{}", sol.residual_max);
        assert!(sol.condition < CONDITION_LIMIT);
    }

    #[test]
    fn consistent_positive_rows_recovered_exactly() {
        let rows = [1.0, 2.0]
            .iter()
            .map(|&u| PulseRow {
                u_volts: u,
                v_steady: (6.0 * u - 3.0) / 100.0,
            })
            .collect();
        let sol = solve_ls(&LsSystem::assemble(&PulseDataset::new(rows).unwrap(), 6.0)).unwrap();
        assert_relative_eq!(sol.alpha1_pos.unwrap(), 100.0, max_relative = 1e-10);
        assert_relative_eq!(sol.alpha2_pos.unwrap(), 3.0, max_relative = 1e-10);
        assert_eq!(sol.alpha1_neg, None);
        assert_eq!(sol.alpha2_neg, None);
    }

    #[test]
    fn duplicated_rows_do_not_move_the_fit() {
        let base = identify(&PulseDataset::reference(), 6.0).unwrap();
        let mut rows = PulseDataset::reference().rows().to_vec();
        rows.extend_from_slice(PulseDataset::reference().rows());
        let dup = identify(&PulseDataset::new(rows).unwrap(), 6.0).unwrap();
        for (a, b) in base.coefficients().iter().zip(dup.coefficients()) {
            assert_relative_eq!(a.unwrap(), b.unwrap(), max_relative = 1e-10);
        }
    }

    #[test]
    fn single_row_direction_is_ill_conditioned() {
        let data = PulseDataset::new(vec![
            PulseRow {
                u_volts: 1.0,
                v_steady: 0.03,
            },
            PulseRow {
                u_volts: -2.0,
                v_steady: -0.04,
            },
            PulseRow {
                u_volts: -2.5,
                v_steady: -0.07,
            },
        ])
        .unwrap();
        assert!(matches!(
            solve_ls(&LsSystem::assemble(&data, 6.0)),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn validation_self_consistency_and_sensitivity() {
        let p = PlantParams::default();
        let cfg = SimConfig {
            duration: 0.5,
            ..SimConfig::default()
        };
        let input = InputProfile::Triangle {
            high_v: 1.5,
            low_v: -2.0,
            period_s: 0.5,
        };
        let reference = simulate(&input, &Disturbance::Zero, &cfg, &p).unwrap();
        let m = validate_model(&p, &input, &reference, &cfg).unwrap();
        assert_eq!(m.rms_velocity_error, 0.0);

        let perturbed = PlantParams {
            alpha1_pos: p.alpha1_pos * 1.05,
            ..p
        };
        let m = validate_model(&perturbed, &input, &reference, &cfg).unwrap();
        assert!(m.rms_velocity_error > 0.0);
        assert!(m.max_velocity_error >= m.rms_velocity_error);

        let short = SimConfig { duration: 0.4, ..cfg };
        assert!(matches!(
            validate_model(&p, &input, &reference, &short),
            Err(Error::TimeBaseMismatch(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let mut buf = Vec::new();
        PulseDataset::reference().write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("u_volts,v_steady\n-2.3,-0.05562\n"));
        let back = PulseDataset::read_csv(buf.as_slice()).unwrap().unwrap();
        assert_eq!(back, PulseDataset::reference());
        let zero = "u_volts,v_steady\n0.05,0\n";
        assert!(PulseDataset::read_csv(zero.as_bytes()).unwrap().is_err());
    }

    #[test]
    fn fitted_document_round_trip() {
        let sol = identify(&PulseDataset::reference(), 6.0).unwrap();
        let text = format_fitted(&sol);
        assert!(text.starts_with("alpha1_pos: "));
        let p = parse_fitted(&text, PlantParams::default()).unwrap();
        assert_eq!(p.alpha1_pos, sol.alpha1_pos.unwrap());
        assert_eq!(p.alpha2_neg, sol.alpha2_neg.unwrap());
        assert!(parse_fitted("alpha1_pos: 1\n", PlantParams::default()).is_err());
        assert!(parse_fitted("garbage", PlantParams::default()).is_err());
    }
}
