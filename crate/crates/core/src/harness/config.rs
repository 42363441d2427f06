use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::reference::ReferenceSpec;
use crate::controllers::{BoundarySmcSpec, ControllerSpec, PiSpec};
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::plant::{Disturbance, InputProfile, PlantParams, PositionUpdate};
use crate::sysid::{load_fitted, PulseExperiment};

/// Where the plant coefficients come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantSource {
    Inline {
        #[serde(default)]
        params: PlantParams,
    },
    /// Identified coefficients from a `key: value` file layered over `base`.
    FittedFile {
        path: PathBuf,
        #[serde(default)]
        base: PlantParams,
    },
}

impl Default for PlantSource {
    fn default() -> Self {
        PlantSource::Inline {
            params: PlantParams::default(),
        }
    }
}

impl PlantSource {
    pub fn resolve(&self, base_dir: &Path) -> Result<PlantParams> {
        let params = match self {
            PlantSource::Inline { params } => *params,
            PlantSource::FittedFile { path, base } => load_fitted(&base_dir.join(path), *base)?,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    /// Plant integration step (s).
    pub dt_s: f64,
    /// Controller sampling period (s); an integer multiple of `dt_s`.
    pub control_period_s: f64,
    pub duration_s: f64,
    pub u_sat_v: f64,
    pub position_update: PositionUpdate,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            dt_s: 1e-5,
            control_period_s: 2e-5,
            duration_s: 6.0,
            u_sat_v: 10.0,
            position_update: PositionUpdate::default(),
        }
    }
}

impl SimSection {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("dt_s", self.dt_s)?;
        ensure_positive("control_period_s", self.control_period_s)?;
        ensure_positive("duration_s", self.duration_s)?;
        ensure_positive("u_sat_v", self.u_sat_v)?;
        self.substeps().map(|_| ())
    }

    /// Plant steps per control period.
    pub fn substeps(&self) -> Result<usize> {
        let ratio = self.control_period_s / self.dt_s;
        let k = ratio.round();
        if k < 1.0 || (ratio - k).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::invalid(
                "control_period_s",
                format!(
                    "must be an integer multiple of dt_s ({} / {} = {ratio})",
                    self.control_period_s, self.dt_s
                ),
            ));
        }
        Ok(k as usize)
    }

    pub fn control_steps(&self) -> usize {
        (self.duration_s / self.control_period_s).round() as usize
    }
}

/// Exogenous acceleration disturbance (m/s²).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceSpec {
    #[default]
    Zero,
    Constant {
        value_m_s2: f64,
    },
    Sine {
        amplitude_m_s2: f64,
        freq_hz: f64,
        #[serde(default)]
        phase_rad: f64,
    },
    /// Piecewise-constant values drawn uniformly from `±amplitude`, redrawn
    /// every `hold_s`, from the experiment seed.
    RandomSteps {
        amplitude_m_s2: f64,
        hold_s: f64,
    },
}

impl DisturbanceSpec {
    pub fn build(&self, seed: u64, duration_s: f64) -> Result<Disturbance> {
        Ok(match *self {
            DisturbanceSpec::Zero => Disturbance::Zero,
            DisturbanceSpec::Constant { value_m_s2 } => {
                if !value_m_s2.is_finite() {
                    return Err(Error::invalid("value_m_s2", "must be finite"));
                }
                Disturbance::Constant(value_m_s2)
            }
            DisturbanceSpec::Sine {
                amplitude_m_s2,
                freq_hz,
                phase_rad,
            } => {
                ensure_non_negative("amplitude_m_s2", amplitude_m_s2)?;
                ensure_non_negative("freq_hz", freq_hz)?;
                Disturbance::Sine {
                    amplitude: amplitude_m_s2,
                    freq_hz,
                    phase_rad,
                }
            }
            DisturbanceSpec::RandomSteps { amplitude_m_s2, hold_s } => {
                ensure_non_negative("amplitude_m_s2", amplitude_m_s2)?;
                ensure_positive("hold_s", hold_s)?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let n = (duration_s / hold_s).ceil() as usize + 1;
                let t = (0..n).map(|i| i as f64 * hold_s).collect();
                let d = (0..n)
                    .map(|_| {
                        if amplitude_m_s2 == 0.0 {
                            0.0
                        } else {
                            rng.random_range(-amplitude_m_s2..=amplitude_m_s2)
                        }
                    })
                    .collect();
                Disturbance::Table { t, d }
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    /// Samples before this time are excluded as start-up transient (s).
    pub window_start_s: f64,
    /// End of the metric window; the run end when absent.
    pub window_end_s: Option<f64>,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            window_start_s: 1.0,
            window_end_s: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Keep every n-th sample in written traces.
    pub decimation: usize,
    pub plot_script: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            decimation: 1,
            plot_script: true,
        }
    }
}

/// Dataset used by `identify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// The built-in measured plateaus.
    #[default]
    Reference,
    /// `u_volts,v_steady` CSV.
    Csv { path: PathBuf },
    /// Pulses simulated on the configured plant.
    Simulated {
        #[serde(default = "default_amplitudes")]
        amplitudes_v: Vec<f64>,
        #[serde(default)]
        pulse: PulseExperiment,
    },
}

fn default_amplitudes() -> Vec<f64> {
    crate::sysid::REFERENCE_PULSES.iter().map(|&(u, _)| u).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct IdentifySection {
    pub dataset: DatasetSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub input: InputProfile,
    pub duration_s: f64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            input: InputProfile::Pulse {
                amplitude_v: 1.6,
                start_s: 0.0,
                width_s: 0.4,
            },
            duration_s: 1.0,
        }
    }
}

/// Complete laboratory configuration. Every section has defaults, so `{}`
/// is a valid config describing the nominal experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabConfig {
    pub plant: PlantSource,
    pub sim: SimSection,
    pub reference: ReferenceSpec,
    pub disturbance: DisturbanceSpec,
    /// Controller for `track` and `phase`.
    pub controller: ControllerSpec,
    /// Controllers for `compare`.
    pub controllers: Vec<ControllerSpec>,
    pub metrics: MetricsSection,
    /// Position measurement resolution (m); exact measurement when absent.
    pub quantization_m: Option<f64>,
    pub initial_position_m: f64,
    pub seed: u64,
    pub output: OutputSection,
    pub identify: IdentifySection,
    pub simulate: SimulateSection,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            plant: PlantSource::default(),
            sim: SimSection::default(),
            reference: ReferenceSpec::default(),
            disturbance: DisturbanceSpec::default(),
            controller: ControllerSpec::default(),
            controllers: vec![
                ControllerSpec::Pi(PiSpec::default()),
                ControllerSpec::BoundarySmc(BoundarySmcSpec::default()),
                ControllerSpec::default(),
            ],
            metrics: MetricsSection::default(),
            quantization_m: None,
            initial_position_m: 0.0,
            seed: 0,
            output: OutputSection::default(),
            identify: IdentifySection::default(),
            simulate: SimulateSection::default(),
        }
    }
}

impl LabConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Resolve everything except the controller into a runnable experiment.
    /// Relative paths are taken from `base_dir`.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn experiment(&self, base_dir: &Path) -> Result<Experiment> {
        self.sim.validate()?;
        let params = self.plant.resolve(base_dir)?;
        if self.sim.dt_s > params.tau && params.tau > 0.0 {
            return Err(Error::invalid(
                "dt_s",
                format!("must not exceed the plant delay {} s", params.tau),
            ));
        }
        self.reference.validate()?;
        ensure_non_negative("window_start_s", self.metrics.window_start_s)?;
        if let Some(end) = self.metrics.window_end_s {
            if !(end >= self.metrics.window_start_s) {
                return Err(Error::invalid("window_end_s", "must not precede window_start_s"));
            }
        }
        if let Some(q) = self.quantization_m {
            ensure_positive("quantization_m", q)?;
        }
        if !self.initial_position_m.is_finite() {
            return Err(Error::invalid("initial_position_m", "must be finite"));
        }
        Ok(Experiment {
            params,
            sim: self.sim,
            reference: self.reference.clone(),
            disturbance: self.disturbance.build(self.seed, self.sim.duration_s)?,
            metrics: self.metrics,
            quantization_m: self.quantization_m,
            initial_position_m: self.initial_position_m,
        })
    }
}

/// Fully resolved closed-loop setup shared by every controller of a run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub params: PlantParams,
    pub sim: SimSection,
    pub reference: ReferenceSpec,
    pub disturbance: Disturbance,
    pub metrics: MetricsSection,
    pub quantization_m: Option<f64>,
    pub initial_position_m: f64,
}

impl Default for Experiment {
    fn default() -> Self {
        LabConfig::default()
            .experiment(Path::new("."))
            .expect("default config is valid")
    }
}

impl Experiment {
    /// Position as seen by the controller.
    pub fn measure(&self, y: f64) -> f64 {
        match self.quantization_m {
            Some(q) => (y / q).round() * q,
            None => y,
        }
    }
}
