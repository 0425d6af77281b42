//! Tanlock loop recursion: four-quadrant arctangent phase detector,
//! gain-block loop filter and DCO timing, driven by divider-output
//! sampling events.
//!
//! Both variants share the same recursion; they differ in how the
//! quadrature (cosine) channel is obtained and in how divider cycles map
//! to sampling intervals:
//!
//! * TDTL samples the input a fixed delay earlier and inverts the sign
//!   (sin(x - pi/2) = -cos x). Its sampling interval is the instantaneous
//!   divider count times the DCO period, so fractional ratios imprint the
//!   carry pattern on the sampling instants.
//! * NDTL samples the input a quarter of the average divider-output period
//!   later (sin(x + pi/2) = cos x), derived from local timing, which makes
//!   the quadrature shift exactly pi/2 at lock for every input frequency.
//!   Its hybrid divider realizes the average ratio each cycle, so the
//!   sampling instants stay uniform even for fractional ratios.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::signal::StimulusSpec;
use crate::synthesizer::{Adaptation, Edge};
use crate::trace::TraceRecord;
use crate::{Error, Result};

/// Loop variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Tdtl,
    Ndtl,
}

/// Static loop configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopParams {
    pub variant: Variant,
    /// DCO sensitivity S, Hz/V.
    pub dco_sensitivity: f64,
    /// DCO DC constant M, V. The free-running frequency is S*M.
    pub dco_dc_constant: f64,
    /// Loop-filter gain G1, V/rad (the loop filter is a pure gain block).
    pub filter_gain: f64,
    /// Input delay of the TDTL quadrature channel, s. Ignored for NDTL.
    pub tdtl_delay: f64,
    /// Lower DCO clamp bound, Hz.
    pub f_floor: f64,
    /// Upper DCO clamp bound, Hz.
    pub f_ceil: f64,
}

impl LoopParams {
    /// Build parameters with the default delay and clamp bounds derived
    /// from the free-running frequency S*M: the TDTL delay is a quarter
    /// period at S*M and the clamps are [1e-3, 100] times S*M.
    pub fn new(variant: Variant, sensitivity: f64, dc_constant: f64, filter_gain: f64) -> Self {
        let f_free = sensitivity * dc_constant;
        Self {
            variant,
            dco_sensitivity: sensitivity,
            dco_dc_constant: dc_constant,
            filter_gain,
            tdtl_delay: 1.0 / (4.0 * f_free),
            f_floor: 1e-3 * f_free,
            f_ceil: 100.0 * f_free,
        }
    }

    /// Free-running DCO frequency S*M, Hz.
    pub fn free_running_frequency(&self) -> f64 {
        self.dco_sensitivity * self.dco_dc_constant
    }

    pub fn validate(&self) -> Result<()> {
        if !self.dco_sensitivity.is_finite() || self.dco_sensitivity <= 0.0 {
            return Err(Error::Config(format!(
                "DCO sensitivity must be positive, got {}",
                self.dco_sensitivity
            )));
        }
        if self.dco_dc_constant < 0.0 {
            return Err(Error::Config(format!(
                "DCO DC constant must be non-negative, got {}",
                self.dco_dc_constant
            )));
        }
        if !self.filter_gain.is_finite() || self.filter_gain <= 0.0 {
            return Err(Error::Config(format!(
                "filter gain must be positive, got {}",
                self.filter_gain
            )));
        }
        if self.variant == Variant::Tdtl && (!self.tdtl_delay.is_finite() || self.tdtl_delay <= 0.0)
        {
            return Err(Error::Config(format!(
                "TDTL delay must be positive, got {}",
                self.tdtl_delay
            )));
        }
        if !(self.f_floor > 0.0 && self.f_floor < self.f_ceil) {
            return Err(Error::Config(format!(
                "clamp bounds must satisfy 0 < floor < ceil, got [{}, {}]",
                self.f_floor, self.f_ceil
            )));
        }
        let f_free = self.free_running_frequency();
        if f_free < self.f_floor || f_free > self.f_ceil {
            return Err(Error::Config(format!(
                "free-running frequency {f_free} Hz outside clamp bounds [{}, {}]",
                self.f_floor, self.f_ceil
            )));
        }
        Ok(())
    }
}

/// Evolving loop state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopState {
    /// Number of loop updates taken so far.
    pub step_index: u64,
    /// Current sampling instant, s. Strictly increasing.
    pub t: f64,
    /// DCO period used for the most recent interval, s.
    pub period: f64,
    /// Loop-filter output, V.
    pub v: f64,
    /// Phase-detector output, rad, in (-pi, pi].
    pub phi: f64,
}

impl LoopState {
    /// State at t = 0 with zero phase error and zero control voltage.
    pub fn initial(params: &LoopParams, adaptation: &Adaptation) -> Self {
        let (f, _) = dco_frequency(params, adaptation.dc_offset, 0.0);
        Self {
            step_index: 0,
            t: 0.0,
            period: 1.0 / f,
            v: 0.0,
            phi: 0.0,
        }
    }
}

/// Normalized operating-point coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedLoopQuantities {
    /// Frequency ratio W.
    pub w: f64,
    /// Loop gain K1.
    pub k1: f64,
}

/// Normalized frequency ratio W = omega0 / (beta * omega).
pub fn compute_w(omega0: f64, beta: f64, omega: f64) -> Result<f64> {
    if !(omega0 > 0.0 && beta > 0.0 && omega > 0.0) {
        return Err(Error::Domain(format!(
            "W requires positive arguments, got omega0 = {omega0}, beta = {beta}, omega = {omega}"
        )));
    }
    Ok(omega0 / (beta * omega))
}

/// Normalized loop gain K1 = G1 * omega0 / beta.
pub fn compute_k1(g1: f64, omega0: f64, beta: f64) -> Result<f64> {
    if !(g1 > 0.0 && omega0 > 0.0 && beta > 0.0) {
        return Err(Error::Domain(format!(
            "K1 requires positive arguments, got g1 = {g1}, omega0 = {omega0}, beta = {beta}"
        )));
    }
    Ok(g1 * omega0 / beta)
}

/// Four-quadrant phase detection of a (sine, cosine) sample pair.
///
/// Returns the angle in (-pi, pi] and a degenerate flag that is set when
/// both inputs are exactly zero (the angle is then reported as 0).
pub fn phase_detect(s_sin: f64, s_cos: f64) -> (f64, bool) {
    if s_sin == 0.0 && s_cos == 0.0 {
        return (0.0, true);
    }
    let mut phi = s_sin.atan2(s_cos);
    // atan2 returns [-pi, pi]; fold the closed lower end onto +pi.
    if phi == -PI {
        phi = PI;
    }
    (phi, false)
}

/// How the quadrature channel samples the input relative to the in-phase
/// sampling instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSampling {
    /// Offset added to the sampling instant, s.
    pub offset: f64,
    /// Whether the sampled value is sign-inverted before phase detection.
    pub negate: bool,
}

/// Quadrature sampling rule for a variant.
///
/// TDTL: the cosine channel is the input sampled `tdtl_delay` earlier with
/// sign inversion. NDTL: the cosine channel is the input sampled a quarter
/// of the divider-output period later, with `ratio` divider counts per
/// output period; at lock that shift is exactly pi/2 regardless of the
/// input frequency.
pub fn quadrature_sample_offset(
    variant: Variant,
    t_dco: f64,
    ratio: f64,
    tdtl_delay: f64,
) -> QuadratureSampling {
    match variant {
        Variant::Tdtl => QuadratureSampling {
            offset: -tdtl_delay,
            negate: true,
        },
        Variant::Ndtl => QuadratureSampling {
            offset: ratio * t_dco / 4.0,
            negate: false,
        },
    }
}

/// Linear DCO law f = S * (M + dc + control), clamped to the configured
/// bounds. The second return value flags clamping.
pub fn dco_frequency(params: &LoopParams, dc_offset: f64, control: f64) -> (f64, bool) {
    let raw = params.dco_sensitivity * (params.dco_dc_constant + dc_offset + control);
    if raw < params.f_floor {
        (params.f_floor, true)
    } else if raw > params.f_ceil {
        (params.f_ceil, true)
    } else {
        (raw, false)
    }
}

/// One divider output cycle as seen by the loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DividerCycle {
    /// Instantaneous dual-modulus count for this cycle.
    pub ratio: u32,
    /// DCO periods spanned by this sampling interval. Equal to `ratio` for
    /// the TDTL's plain divider; equal to the average ratio for the NDTL's
    /// hybrid divider.
    pub interval_periods: f64,
    /// Divider edge driving the sample-and-hold.
    pub edge: Edge,
    /// One-shot realignment in DCO periods when the FSM switches edges
    /// (+0.5 or -0.5), zero otherwise.
    pub realign_periods: f64,
}

/// Advance the loop by one divider-output cycle.
///
/// Computes the DCO period from the held control voltage, advances the
/// sampling instant, samples both detector channels, and updates the
/// phase error and loop-filter output. The control voltage is zero-order
/// held across the interval.
pub fn loop_step(
    state: &LoopState,
    params: &LoopParams,
    stimulus: &StimulusSpec,
    adaptation: &Adaptation,
    cycle: &DividerCycle,
    rng: &mut impl Rng,
) -> Result<(LoopState, TraceRecord)> {
    let (f_dco, saturated) = dco_frequency(params, adaptation.dc_offset, state.v);
    let t_dco = 1.0 / f_dco;
    let t_next = state.t + (cycle.interval_periods + cycle.realign_periods) * t_dco;

    let s_sin = stimulus.sample_at(t_next, rng);
    let quad = quadrature_sample_offset(
        params.variant,
        t_dco,
        cycle.interval_periods,
        params.tdtl_delay,
    );
    let raw_cos = stimulus.sample_at(t_next + quad.offset, rng);
    let s_cos = if quad.negate { -raw_cos } else { raw_cos };

    let (phi, degenerate) = phase_detect(s_sin, s_cos);
    let v_next = adaptation.effective_gain * phi;

    let next = LoopState {
        step_index: state.step_index + 1,
        t: t_next,
        period: t_dco,
        v: v_next,
        phi,
    };
    let record = TraceRecord {
        k: next.step_index,
        t: t_next,
        ratio: cycle.ratio,
        edge: cycle.edge,
        f_dco,
        s_sin,
        s_cos,
        phi,
        v_filter: v_next,
        saturated,
        degenerate,
    };
    Ok((next, record))
}
