use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

/// Desired position and its analytic derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReferenceSample {
    pub y: f64,
    pub v: f64,
    pub a: f64,
}

/// Desired trajectory. Before `t = 0` every kind reports its `t = 0`
/// position at rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSpec {
    /// `offset + amplitude·sin(ω·t + phase)`.
    Sinusoid {
        #[serde(default = "default_amplitude")]
        amplitude_m: f64,
        #[serde(default = "default_freq")]
        freq_rad_s: f64,
        #[serde(default = "default_phase")]
        phase_rad: f64,
        #[serde(default = "default_amplitude")]
        offset_m: f64,
    },
    /// Symmetric triangle from `offset` up to `offset + amplitude` at half
    /// period and back.
    Triangle {
        amplitude_m: f64,
        period_s: f64,
        #[serde(default)]
        offset_m: f64,
    },
    /// Position step of `amplitude` held over `[start, start + width)`.
    Pulse {
        amplitude_m: f64,
        #[serde(default)]
        start_s: f64,
        width_s: f64,
    },
    Constant {
        #[serde(default)]
        position_m: f64,
    },
}

fn default_amplitude() -> f64 {
    0.01
}

fn default_freq() -> f64 {
    PI
}

fn default_phase() -> f64 {
    -FRAC_PI_2
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        Self::sinusoid(PI)
    }
}

impl ReferenceSpec {
    /// `0.01·(1 + sin(ω·t - π/2))` m.
    pub fn sinusoid(freq_rad_s: f64) -> Self {
        ReferenceSpec::Sinusoid {
            amplitude_m: default_amplitude(),
            freq_rad_s,
            phase_rad: default_phase(),
            offset_m: default_amplitude(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be finite, got {v}")))
            }
        };
        match *self {
            ReferenceSpec::Sinusoid {
                amplitude_m,
                freq_rad_s,
                phase_rad,
                offset_m,
            } => {
                finite("amplitude_m", amplitude_m)?;
                finite("freq_rad_s", freq_rad_s)?;
                finite("phase_rad", phase_rad)?;
                finite("offset_m", offset_m)
            }
            ReferenceSpec::Triangle {
                amplitude_m,
                period_s,
                offset_m,
            } => {
                finite("amplitude_m", amplitude_m)?;
                ensure_positive("period_s", period_s)?;
                finite("offset_m", offset_m)
            }
            ReferenceSpec::Pulse {
                amplitude_m,
                start_s,
                width_s,
            } => {
                finite("amplitude_m", amplitude_m)?;
                finite("start_s", start_s)?;
                ensure_positive("width_s", width_s)
            }
            ReferenceSpec::Constant { position_m } => finite("position_m", position_m),
        }
    }

    /// Position, velocity and acceleration at `t`.
    pub fn sample(&self, t: f64) -> ReferenceSample {
        if t < 0.0 {
            return ReferenceSample {
                y: self.sample(0.0).y,
                v: 0.0,
                a: 0.0,
            };
        }
        match *self {
            ReferenceSpec::Sinusoid {
                amplitude_m,
                freq_rad_s: w,
                phase_rad,
                offset_m,
            } => {
                let (s, c) = (w * t + phase_rad).sin_cos();
                ReferenceSample {
                    y: offset_m + amplitude_m * s,
                    v: amplitude_m * w * c,
                    a: -amplitude_m * w * w * s,
                }
            }
            ReferenceSpec::Triangle {
                amplitude_m,
                period_s,
                offset_m,
            } => {
                let phase = (t / period_s).rem_euclid(1.0);
                let slope = 2.0 * amplitude_m / period_s;
                if phase < 0.5 {
                    ReferenceSample {
                        y: offset_m + slope * phase * period_s,
                        v: slope,
                        a: 0.0,
                    }
                } else {
                    ReferenceSample {
                        y: offset_m + slope * (1.0 - phase) * period_s,
                        v: -slope,
                        a: 0.0,
                    }
                }
            }
            ReferenceSpec::Pulse {
                amplitude_m,
                start_s,
                width_s,
            } => ReferenceSample {
                y: if t >= start_s && t < start_s + width_s {
                    amplitude_m
                } else {
                    0.0
                },
                v: 0.0,
                a: 0.0,
            },
            ReferenceSpec::Constant { position_m } => ReferenceSample {
                y: position_m,
                v: 0.0,
                a: 0.0,
            },
        }
    }
}

/// Validated reference.
pub fn make_reference(spec: &ReferenceSpec) -> Result<ReferenceSpec> {
    spec.validate()?;
    Ok(spec.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_sinusoid_samples() {
        let r = ReferenceSpec::default();
        let s0 = r.sample(0.0);
        assert!(s0.y.abs() < 1e-18);
        assert!(s0.v.abs() < 1e-17);
        assert_relative_eq!(s0.a, 0.01 * PI * PI, max_relative = 1e-12);
        let s = r.sample(0.5);
        assert_relative_eq!(s.y, 0.01, max_relative = 1e-12);
        assert_relative_eq!(s.v, 0.0314159, max_relative = 1e-6);
        let s = r.sample(1.0);
        assert_relative_eq!(s.y, 0.02, max_relative = 1e-12);
        assert!(s.v.abs() < 1e-15);
    }

    #[test]
    fn rest_before_start() {
        let r = ReferenceSpec::sinusoid(2.0 * PI);
        let s = r.sample(-1e-3);
        assert_eq!(s.v, 0.0);
        assert_eq!(s.a, 0.0);
        assert_eq!(s.y, r.sample(0.0).y);
    }

    #[test]
    fn central_difference_matches_velocity() {
        let h = 1e-4;
        for r in [ReferenceSpec::sinusoid(PI), ReferenceSpec::sinusoid(2.0 * PI)] {
            for k in 1..600 {
                let t = k as f64 * 0.01;
                let num = (r.sample(t + h).y - r.sample(t - h).y) / (2.0 * h);
                // truncation error is bounded by h²/6·max|y'''|
                assert!((num - r.sample(t).v).abs() <= 0.01 * (2.0 * PI).powi(3) * h * h / 6.0 * 1.01 + 1e-15);
            }
        }
    }

    #[test]
    fn triangle_shape() {
        let r = ReferenceSpec::Triangle {
            amplitude_m: 0.02,
            period_s: 2.0,
            offset_m: 0.0,
        };
        assert_relative_eq!(r.sample(1.0).y, 0.02, max_relative = 1e-12);
        assert_relative_eq!(r.sample(0.5).v, 0.02);
        assert_relative_eq!(r.sample(1.5).v, -0.02);
    }

    #[test]
    fn unknown_kind_and_bad_values_rejected() {
        assert!(serde_json::from_str::<ReferenceSpec>(r#"{"kind": "chirp"}"#).is_err());
        let spec: ReferenceSpec =
            serde_json::from_str(r#"{"kind": "sinusoid", "freq_rad_s": 6.283185307179586}"#).unwrap();
        assert_eq!(spec, ReferenceSpec::sinusoid(2.0 * PI));
        let bad = ReferenceSpec::Triangle {
            amplitude_m: 0.01,
            period_s: 0.0,
            offset_m: 0.0,
        };
        assert!(make_reference(&bad).is_err());
    }
}
