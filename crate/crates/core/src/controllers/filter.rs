use crate::error::{ensure_positive, Result};

/// First-order low-pass `y += (dt/T)·(x - y)` with unit DC gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPassFilter {
    time_constant: f64,
    state: f64,
}

impl LowPassFilter {
    pub fn new(time_constant: f64) -> Result<Self> {
        ensure_positive("time_constant", time_constant)?;
        Ok(Self {
            time_constant,
            state: 0.0,
        })
    }

    pub fn with_state(mut self, y0: f64) -> Self {
        self.state = y0;
        self
    }

    pub fn time_constant(&self) -> f64 {
        self.time_constant
    }

    pub fn value(&self) -> f64 {
        self.state
    }

    pub fn reset(&mut self) {
        self.state = 0.0;
    }

    pub fn step(&mut self, x: f64, dt: f64) -> f64 {
        lowpass_step(x, self, dt)
    }
}

pub fn lowpass_step(x: f64, filt: &mut LowPassFilter, dt: f64) -> f64 {
    filt.state += dt / filt.time_constant * (x - filt.state);
    filt.state
}

/// Error derivatives `[e, ė, ë, ...]` estimated by cascaded backward
/// differences, each low-pass filtered before use.
#[derive(Debug, Clone)]
pub struct DerivativeChain {
    stages: Vec<(Option<f64>, LowPassFilter)>,
}

impl DerivativeChain {
    /// `order` is the number of outputs, i.e. the surface order.
    pub fn new(order: usize, time_constant: f64) -> Result<Self> {
        let filter = LowPassFilter::new(time_constant)?;
        Ok(Self {
            stages: vec![(None, filter); order.saturating_sub(1)],
        })
    }

    pub fn reset(&mut self) {
        for (prev, filter) in &mut self.stages {
            *prev = None;
            filter.reset();
        }
    }

    /// Feed the current error; returns `[e, filtered ė, ...]`. The first
    /// sample has no history and reports zero derivatives.
    pub fn update(&mut self, e: f64, dt: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.stages.len() + 1);
        out.push(e);
        let mut x = e;
        for (prev, filter) in &mut self.stages {
            let raw = match prev {
                Some(p) => (x - *p) / dt,
                None => 0.0,
            };
            *prev = Some(x);
            x = filter.step(raw, dt);
            out.push(x);
        }
        out
    }
}
