use std::collections::VecDeque;

/// Ring buffer of past velocities for the delayed viscous term.
///
/// Holds the most recent `delay_steps + 1` samples. Until the buffer is full
/// the delayed value reads as zero (the stage starts from rest).
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityHistory {
    delay_steps: usize,
    buf: VecDeque<f64>,
}

impl VelocityHistory {
    pub fn new(delay_steps: usize) -> Self {
        Self {
            delay_steps,
            buf: VecDeque::with_capacity(delay_steps + 1),
        }
    }

    /// Number of integration steps spanning the delay `tau` at step `dt`.
    ///
    /// Rounds to the nearest integer when `tau` is an integer multiple of
    /// `dt` up to floating-point noise, otherwise rounds up.
    pub fn steps_for(tau: f64, dt: f64) -> usize {
        if tau <= 0.0 {
            return 0;
        }
        let ratio = tau / dt;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest as usize
        } else {
            ratio.ceil() as usize
        }
    }

    pub fn delay_steps(&self) -> usize {
        self.delay_steps
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn is_warm(&self) -> bool {
        self.buf.len() == self.delay_steps + 1
    }

    /// Record the velocity of the current step.
    pub fn push(&mut self, v: f64) {
        if self.buf.len() == self.delay_steps + 1 {
            self.buf.pop_front();
        }
        self.buf.push_back(v);
    }

    /// Velocity recorded `delay_steps` pushes before the latest one.
    pub fn delayed(&self) -> f64 {
        if self.is_warm() {
            self.buf[0]
        } else {
            0.0
        }
    }
}
