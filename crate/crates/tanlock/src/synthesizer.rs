//! Hybrid divider pair, fractional carry accumulator, FSM edge selection
//! and loop adaptation.
//!
//! The divider pair is modeled as one dual-modulus ratio sequence plus an
//! edge-alignment offset: the negative-edge-triggered divider lags the
//! positive-edge one by half a DCO period. The fraction is stored as an
//! exact integer numerator over a fixed denominator so carry patterns are
//! exactly periodic; floating-point accumulation would drift.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::f64::consts::TAU;

use crate::loop_core::{compute_k1, compute_w, DerivedLoopQuantities, LoopParams};
use crate::signal::StimulusSpec;
use crate::{Error, Result};

/// Which divider output drives the sample-and-hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    Positive,
    Negative,
}

impl Edge {
    /// Alignment of this divider's output edges, in DCO periods.
    pub fn alignment_periods(self) -> f64 {
        match self {
            Edge::Positive => 0.0,
            Edge::Negative => 0.5,
        }
    }
}

/// Dual-modulus divider configuration: ratio N + num/den.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DividerConfig {
    /// Integer part of the division ratio. Must be at least 1.
    pub ratio_int: u32,
    /// Numerator of the fractional part. Must satisfy `num < den`.
    pub frac_num: u32,
    /// Denominator of the fractional part. Must be at least 1.
    pub frac_den: u32,
    /// Initially selected divider edge.
    pub edge: Edge,
}

impl DividerConfig {
    /// Integer division by `ratio` on the positive edge.
    pub fn integer(ratio: u32) -> Self {
        Self {
            ratio_int: ratio,
            frac_num: 0,
            frac_den: 1,
            edge: Edge::Positive,
        }
    }

    /// Fractional division by `ratio_int + num/den`.
    pub fn fractional(ratio_int: u32, num: u32, den: u32) -> Self {
        Self {
            ratio_int,
            frac_num: num,
            frac_den: den,
            edge: Edge::Positive,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ratio_int < 1 {
            return Err(Error::Config(format!(
                "integer ratio must be at least 1, got {}",
                self.ratio_int
            )));
        }
        if self.frac_den == 0 {
            return Err(Error::Config(
                "fraction denominator must not be zero".into(),
            ));
        }
        if self.frac_num >= self.frac_den {
            return Err(Error::Config(format!(
                "fraction must satisfy 0 <= num/den < 1, got {}/{}",
                self.frac_num, self.frac_den
            )));
        }
        Ok(())
    }

    /// Average division ratio N + num/den.
    pub fn average_ratio(&self) -> f64 {
        self.ratio_int as f64 + self.frac_num as f64 / self.frac_den as f64
    }

    /// Length of the repeating carry pattern (1 for integer ratios).
    pub fn pattern_period(&self) -> usize {
        if self.frac_num == 0 {
            1
        } else {
            self.frac_den as usize
        }
    }
}

/// Carry accumulator state of the fractional divider.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DividerState {
    /// Accumulator numerator over the configured denominator, always < den.
    pub accumulator_num: u64,
    /// Number of divider output cycles produced so far.
    pub cycle_index: u64,
    /// Most recent instantaneous ratio.
    pub last_ratio: u32,
}

impl DividerState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Advance the accumulator by one divider output cycle and return the
    /// instantaneous ratio for that cycle.
    ///
    /// Test-after-add convention: the accumulator gains num/den, and a
    /// carry (ratio N+1 instead of N) fires when it reaches 1. For
    /// N + 1/5 the sequence is four cycles of N followed by one of N+1.
    pub fn next_ratio(&mut self, config: &DividerConfig) -> u32 {
        self.accumulator_num += config.frac_num as u64;
        let ratio = if self.accumulator_num >= config.frac_den as u64 {
            self.accumulator_num -= config.frac_den as u64;
            config.ratio_int + 1
        } else {
            config.ratio_int
        };
        self.cycle_index += 1;
        self.last_ratio = ratio;
        ratio
    }
}

/// Gain compensation rule applied after division.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainRule {
    /// Multiply the loop-filter gain by the average ratio plus one.
    BetaPlusOne,
    /// Multiply the loop-filter gain by the average ratio.
    Beta,
}

/// Adaptation settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdaptationConfig {
    pub gain_rule: GainRule,
    pub enabled: bool,
}

impl Default for AdaptationConfig {
    fn default() -> Self {
        Self {
            gain_rule: GainRule::BetaPlusOne,
            enabled: true,
        }
    }
}

/// Resolved adaptation outputs applied to the running loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adaptation {
    /// Loop-filter gain after compensation, V/rad.
    pub effective_gain: f64,
    /// DC added to the DCO input, V. Shifts the center frequency from
    /// S*M to beta*S*M.
    pub dc_offset: f64,
}

/// Compute the gain and DC compensation for an average division ratio.
///
/// The DC offset solves S*(M + dc) = beta * S * M, i.e. dc = (beta - 1)*M,
/// which restores the divided sampling frequency to the loop's design
/// point. With adaptation disabled both outputs are the identity.
pub fn adapt(beta_avg: f64, params: &LoopParams, config: &AdaptationConfig) -> Result<Adaptation> {
    if !beta_avg.is_finite() || beta_avg < 1.0 {
        return Err(Error::Domain(format!(
            "average ratio must be at least 1, got {beta_avg}"
        )));
    }
    if !config.enabled {
        return Ok(Adaptation {
            effective_gain: params.filter_gain,
            dc_offset: 0.0,
        });
    }
    let effective_gain = match config.gain_rule {
        GainRule::BetaPlusOne => params.filter_gain * (beta_avg + 1.0),
        GainRule::Beta => params.filter_gain * beta_avg,
    };
    Ok(Adaptation {
        effective_gain,
        dc_offset: (beta_avg - 1.0) * params.dco_dc_constant,
    })
}

/// Loop operating point (W, K1) before and after adaptation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub pre: DerivedLoopQuantities,
    pub post: DerivedLoopQuantities,
}

/// Recompute W and K1 around the adapted center frequency.
///
/// `pre` evaluates the divided loop with the unshifted DCO center, where
/// the operating point has moved by the division ratio; `post` uses the
/// adapted center `beta * f_free` and the compensated gain, which brings
/// the divided-output ratio back to its design value. Uses the stimulus's
/// post-step frequency.
pub fn restored_operating_point(
    beta_avg: f64,
    params: &LoopParams,
    config: &AdaptationConfig,
    stimulus: &StimulusSpec,
) -> Result<OperatingPoint> {
    let f_in = stimulus.stepped_frequency();
    let omega_in = TAU * f_in;
    let omega_free = TAU * params.free_running_frequency();
    let pre = DerivedLoopQuantities {
        w: compute_w(omega_free, beta_avg, omega_in)?,
        k1: compute_k1(params.filter_gain, omega_free, beta_avg)?,
    };
    let adaptation = adapt(beta_avg, params, config)?;
    let omega_center =
        TAU * params.dco_sensitivity * (params.dco_dc_constant + adaptation.dc_offset);
    let post = DerivedLoopQuantities {
        w: compute_w(omega_center, beta_avg, omega_in)?,
        k1: compute_k1(adaptation.effective_gain, omega_center, beta_avg)?,
    };
    Ok(OperatingPoint { pre, post })
}

/// Step-sign estimate derived from the loop-filter output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSign {
    Positive,
    Negative,
    Unknown,
}

/// FSM sensing configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FsmConfig {
    /// Number of recent loop-filter samples averaged for sign sensing.
    pub window: usize,
    /// Dead band on the windowed mean, V. Below it the previous edge
    /// selection is retained.
    pub deadband: f64,
}

impl Default for FsmConfig {
    fn default() -> Self {
        Self {
            window: 8,
            deadband: 1e-3,
        }
    }
}

/// Edge-selection state machine.
///
/// The FSM has three inputs: the two divider outputs and the loop-filter
/// output. When the sensed input step is positive it selects the
/// negative-edge-triggered divider, otherwise the positive-edge one. The
/// sign is sensed from the mean of the recent filter output with a dead
/// band; within the dead band the previous selection stands.
#[derive(Debug, Clone, PartialEq)]
pub struct FsmState {
    pub selected_edge: Edge,
    pub step_sign_estimate: StepSign,
    history: VecDeque<f64>,
}

impl FsmState {
    pub fn new(initial_edge: Edge) -> Self {
        Self {
            selected_edge: initial_edge,
            step_sign_estimate: StepSign::Unknown,
            history: VecDeque::new(),
        }
    }

    /// Feed one loop-filter sample and pick which divider output drives the
    /// next sampling event. Returns the selected DIV value.
    pub fn select(
        &mut self,
        config: &FsmConfig,
        filter_output: f64,
        div_pos: u32,
        div_neg: u32,
    ) -> u32 {
        if self.history.len() >= config.window.max(1) {
            self.history.pop_front();
        }
        self.history.push_back(filter_output);
        if self.history.len() >= config.window.max(1) {
            let mean = self.history.iter().sum::<f64>() / self.history.len() as f64;
            if mean > config.deadband {
                self.step_sign_estimate = StepSign::Positive;
                self.selected_edge = Edge::Negative;
            } else if mean < -config.deadband {
                self.step_sign_estimate = StepSign::Negative;
                self.selected_edge = Edge::Positive;
            }
            // Inside the dead band: retain the previous selection.
        }
        match self.selected_edge {
            Edge::Positive => div_pos,
            Edge::Negative => div_neg,
        }
    }
}
