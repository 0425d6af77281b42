//! Input stimulus: a sinusoid with a single frequency step and optional
//! additive white Gaussian noise, sampled at arbitrary (non-uniform)
//! instants requested by the loop.
//!
//! Phase is tracked as an exact piecewise-linear function of time (one
//! breakpoint at the step instant), not by numeric integration, so long
//! runs do not drift. Noise is drawn independently per sampling instant.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::{Error, Result};

/// Configuration of the input sinusoid.
///
/// The effective input frequency is `base_frequency` before `step_time` and
/// `base_frequency + step_scale * step_value` from `step_time` onward. The
/// step is expressed in volts and mapped to a frequency deviation through
/// `step_scale` (hertz per volt); with `step_scale == base_frequency` a step
/// of 0.2 V raises the input frequency by 20 %.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusSpec {
    /// Base input frequency in Hz. Must be positive.
    pub base_frequency: f64,
    /// Step height in volts (dimensionless normalized step).
    pub step_value: f64,
    /// Volts-to-hertz mapping for the step, in Hz/V.
    pub step_scale: f64,
    /// Instant of the frequency step in seconds.
    pub step_time: f64,
    /// Sinusoid amplitude in volts. Must be positive.
    pub amplitude: f64,
    /// Initial phase in radians, in (-pi, pi].
    pub initial_phase: f64,
    /// Signal-to-noise ratio in dB. `None` means noise-free.
    pub snr_db: Option<f64>,
    /// Seed for the per-run noise generator.
    pub seed: u64,
}

impl StimulusSpec {
    /// A noise-free stimulus at a fixed frequency with zero initial phase.
    pub fn constant(frequency_hz: f64) -> Self {
        Self {
            base_frequency: frequency_hz,
            step_value: 0.0,
            step_scale: frequency_hz,
            step_time: 0.0,
            amplitude: 1.0,
            initial_phase: 0.0,
            snr_db: None,
            seed: 0,
        }
    }

    /// Check every invariant of the stimulus.
    pub fn validate(&self) -> Result<()> {
        if !self.base_frequency.is_finite() || self.base_frequency <= 0.0 {
            return Err(Error::Config(format!(
                "base frequency must be positive and finite, got {}",
                self.base_frequency
            )));
        }
        if !self.amplitude.is_finite() || self.amplitude <= 0.0 {
            return Err(Error::Config(format!(
                "amplitude must be positive, got {}",
                self.amplitude
            )));
        }
        if self.step_time < 0.0 || !self.step_time.is_finite() {
            return Err(Error::Config(format!(
                "step time must be non-negative, got {}",
                self.step_time
            )));
        }
        if self.initial_phase <= -PI || self.initial_phase > PI {
            return Err(Error::Config(format!(
                "initial phase must lie in (-pi, pi], got {}",
                self.initial_phase
            )));
        }
        let stepped = self.stepped_frequency();
        if !stepped.is_finite() || stepped <= 0.0 {
            return Err(Error::Config(format!(
                "stepped input frequency must stay positive, got {stepped} Hz \
                 (base {} Hz, step {} V, scale {} Hz/V)",
                self.base_frequency, self.step_value, self.step_scale
            )));
        }
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return Err(Error::Config(format!("SNR must be finite, got {snr}")));
            }
        }
        Ok(())
    }

    /// Input frequency after the step has been applied.
    pub fn stepped_frequency(&self) -> f64 {
        self.base_frequency + self.step_scale * self.step_value
    }

    /// Instantaneous input frequency at time `t`.
    ///
    /// Returns a configuration error if the post-step frequency is not
    /// positive.
    pub fn input_frequency(&self, t: f64) -> Result<f64> {
        if t < self.step_time {
            Ok(self.base_frequency)
        } else {
            let f = self.stepped_frequency();
            if f > 0.0 {
                Ok(f)
            } else {
                Err(Error::Config(format!(
                    "input frequency is {f} Hz at t = {t} s; step drives it non-positive"
                )))
            }
        }
    }

    /// Accumulated phase at time `t`, in cycles.
    ///
    /// Piecewise linear with a single breakpoint at `step_time`; continuous
    /// across the step (frequency steps, phase does not jump). Times before
    /// zero extrapolate at the base frequency, which keeps delayed-channel
    /// sampling near t = 0 well defined.
    pub fn phase_cycles(&self, t: f64) -> f64 {
        let pre = t.min(self.step_time);
        let post = (t - self.step_time).max(0.0);
        self.initial_phase / TAU + self.base_frequency * pre + self.stepped_frequency() * post
    }

    /// Noise standard deviation implied by the configured SNR, if any.
    ///
    /// SNR is defined against the sinusoid power A^2/2, so
    /// sigma^2 = A^2 / (2 * 10^(snr_db/10)).
    pub fn noise_sigma(&self) -> Option<f64> {
        self.snr_db
            .map(|snr| self.amplitude / (2.0 * 10f64.powf(snr / 10.0)).sqrt())
    }

    /// Sample the stimulus at time `t`.
    ///
    /// Noise-free sampling of the same instant always returns the same
    /// value. With noise configured, each call draws one independent
    /// Gaussian variate from `rng`.
    pub fn sample_at(&self, t: f64, rng: &mut impl Rng) -> f64 {
        // Reduce to a fractional cycle before taking the sine so phase
        // accuracy does not degrade on long runs.
        let frac = self.phase_cycles(t).rem_euclid(1.0);
        let clean = self.amplitude * (TAU * frac).sin();
        match self.noise_sigma() {
            Some(sigma) => {
                let n: f64 = rng.sample(StandardNormal);
                clean + sigma * n
            }
            None => clean,
        }
    }
}
