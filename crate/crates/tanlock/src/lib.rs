//! Discrete-time simulation of tanlock digital phase-locked loops extended
//! into a hybrid integer/fractional frequency synthesizer.
//!
//! The library models two loop variants built around a four-quadrant
//! arctangent phase detector, a gain-block loop filter and a linear
//! digitally controlled oscillator:
//!
//! * **TDTL** derives its quadrature channel by delaying the input signal by
//!   a fixed time, so the quadrature shift is only exactly 90 degrees at one
//!   design frequency. Its sampling clock is the raw dual-modulus divider
//!   output, which carries the fractional carry pattern.
//! * **NDTL** derives the quadrature channel from local divider timing
//!   (a quarter of the average divider-output period), so the shift is
//!   exactly 90 degrees at lock for any input frequency. Its hybrid divider
//!   pair realizes the average division ratio per cycle, which removes the
//!   carry-pattern ripple from the sampling instants.
//!
//! On top of the loop core sit a dual-modulus fractional divider with an
//! exact carry accumulator, an FSM that selects between positive- and
//! negative-edge divider outputs, loop adaptation that restores the
//! operating point after division, and analysis tooling (lock detection,
//! phase planes, period-jitter statistics, lock-range and SNR sweeps).
//!
//! All simulation state is per-run value state; runs are deterministic for
//! a given seed and may execute concurrently without coordination.

pub mod analysis;
pub mod engine;
pub mod loop_core;
pub mod signal;
pub mod synthesizer;
pub mod trace;

pub use analysis::{
    detect_lock, jitter_rms, linearized_convergence_factor, lock_range_sweep, phase_plane,
    snr_jitter_sweep, JitterReport, JitterSweep, LockCriteria, LockRangeSweep, LockReport,
    RunStrategy,
};
pub use engine::{derive_seed, run, RunConfig};
pub use loop_core::{
    compute_k1, compute_w, dco_frequency, loop_step, phase_detect, quadrature_sample_offset,
    DerivedLoopQuantities, DividerCycle, LoopParams, LoopState, QuadratureSampling, Variant,
};
pub use signal::StimulusSpec;
pub use synthesizer::{
    adapt, restored_operating_point, Adaptation, AdaptationConfig, DividerConfig, DividerState,
    Edge, FsmConfig, FsmState, GainRule, OperatingPoint, StepSign,
};
pub use trace::{Trace, TraceRecord};

/// Errors produced by configuration validation and by the analysis layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value violates an invariant.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A mathematical operation was called outside its domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A trace is too short for the requested analysis.
    #[error("trace too short: need at least {needed} samples, got {actual}")]
    TraceTooShort { needed: usize, actual: usize },
    /// Jitter was requested on a run that never locked; extend the run or
    /// relax the lock criteria.
    #[error("trace did not lock; extend the run before measuring jitter")]
    NotLocked,
}

pub type Result<T> = std::result::Result<T, Error>;
