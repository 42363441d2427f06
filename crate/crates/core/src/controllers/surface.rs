use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear sliding surface `s = Σ λ_k e^(k)`, `k = 0..n-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SlidingSurface {
    lambda: Vec<f64>,
}

impl SlidingSurface {
    /// All coefficients must be finite and strictly positive.
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::invalid("lambda", "surface needs at least one coefficient"));
        }
        if let Some(bad) = lambda.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::invalid("lambda", format!("coefficients must be > 0, got {bad}")));
        }
        Ok(Self { lambda })
    }

    /// Same surface scaled so that `λ_0 = 1`.
    pub fn normalized(&self) -> Self {
        let l0 = self.lambda[0];
        Self {
            lambda: self.lambda.iter().map(|l| l / l0).collect(),
        }
    }

    pub fn is_normalized(&self) -> bool {
        self.lambda[0] == 1.0
    }

    pub fn order(&self) -> usize {
        self.lambda.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.lambda
    }

    /// `1 / λ_{n-1}`: the factor that turns the lower-order part of `ṡ` into
    /// an acceleration-level correction.
    pub fn default_phi_scale(&self) -> f64 {
        1.0 / self.lambda[self.lambda.len() - 1]
    }

    pub fn value(&self, derivatives: &[f64]) -> Result<f64> {
        sliding_value(derivatives, self)
    }

    /// `Σ_{k=0}^{n-2} λ_k e^(k+1)`, the part of `ṡ` not involving the highest
    /// error derivative.
    pub fn lower_order_rate(&self, derivatives: &[f64]) -> Result<f64> {
        self.check_len(derivatives)?;
        Ok(self
            .lambda
            .iter()
            .zip(derivatives.iter().skip(1))
            .map(|(l, d)| l * d)
            .sum())
    }

    fn check_len(&self, derivatives: &[f64]) -> Result<()> {
        if derivatives.len() != self.lambda.len() {
            return Err(Error::LengthMismatch {
                expected: self.lambda.len(),
                got: derivatives.len(),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for SlidingSurface {
    type Error = Error;

    fn try_from(lambda: Vec<f64>) -> Result<Self> {
        Self::new(lambda)
    }
}

impl From<SlidingSurface> for Vec<f64> {
    fn from(s: SlidingSurface) -> Self {
        s.lambda
    }
}

impl Default for SlidingSurface {
    fn default() -> Self {
        Self { lambda: vec![1.0, 3.0] }
    }
}

/// `s = Σ λ_k e^(k)` for the error and its derivatives `[e, ė, ...]`.
pub fn sliding_value(derivatives: &[f64], surface: &SlidingSurface) -> Result<f64> {
    surface.check_len(derivatives)?;
    Ok(surface.lambda.iter().zip(derivatives).map(|(l, d)| l * d).sum())
}
