//! Lock detection, phase-plane extraction, period-jitter statistics and
//! the lock-range and SNR sweep drivers.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::ops::Range;

use crate::engine::{derive_seed, run, RunConfig};
use crate::loop_core::{LoopParams, Variant};
use crate::trace::Trace;
use crate::{Error, Result};

/// Execution strategy for sweeps. Points and trials are independent and
/// results are merged by index, so the output does not depend on the
/// strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStrategy {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for RunStrategy {
    #[cfg(feature = "parallel")]
    fn default() -> Self {
        RunStrategy::Parallel
    }
    #[cfg(not(feature = "parallel"))]
    fn default() -> Self {
        RunStrategy::Sequential
    }
}

fn map_indexed<T, F>(n: usize, strategy: RunStrategy, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match strategy {
        RunStrategy::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        RunStrategy::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
    }
}

/// Lock detection thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockCriteria {
    /// Phase-stability band around the steady value, rad.
    pub epsilon: f64,
    /// Number of consecutive in-band samples required.
    pub hold: usize,
}

impl Default for LockCriteria {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            hold: 100,
        }
    }
}

/// Lock verdict and steady-state statistics of one trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockReport {
    pub locked: bool,
    /// First index from which the phase stays in band for `hold` samples.
    pub lock_index: Option<usize>,
    /// Sampling instant at the lock index, s.
    pub lock_time: Option<f64>,
    /// Mean phase error over the steady window, rad.
    pub steady_phi_mean: f64,
    /// Phase-error standard deviation over the steady window, rad.
    pub steady_phi_std: f64,
    /// Mean sampling (divider output) frequency over the steady window, Hz.
    pub mean_sample_freq: f64,
    /// Mean DCO frequency over the steady window, Hz.
    pub mean_dco_freq: f64,
}

/// Detect lock as phase stabilization: the first index from which the
/// phase error stays within `epsilon` of its steady value for `hold`
/// consecutive samples.
///
/// The steady value is estimated from the mean over the trailing `hold`
/// samples of the trace. A first-order loop carries a nonzero static phase
/// error after a frequency step, so stability is measured against that
/// value rather than against zero. Steady statistics are computed over the
/// trailing half of the post-lock trace (or of the whole trace when
/// unlocked).
pub fn detect_lock(trace: &Trace, criteria: &LockCriteria) -> LockReport {
    let len = trace.len();
    let hold = criteria.hold.max(1);
    let unlocked_stats_start = len - (len / 2).max(1).min(len);
    if len < hold || len < 2 {
        let (mean, std) = phi_stats(trace, unlocked_stats_start..len);
        return LockReport {
            locked: false,
            lock_index: None,
            lock_time: None,
            steady_phi_mean: mean,
            steady_phi_std: std,
            mean_sample_freq: trace
                .mean_sample_frequency(unlocked_stats_start, len)
                .unwrap_or(f64::NAN),
            mean_dco_freq: trace
                .mean_dco_frequency(unlocked_stats_start, len)
                .unwrap_or(f64::NAN),
        };
    }

    let records = trace.records();
    let steady_estimate = records[len - hold..].iter().map(|r| r.phi).sum::<f64>() / hold as f64;

    let mut lock_index = None;
    let mut run_start = 0usize;
    let mut run_len = 0usize;
    for (i, r) in records.iter().enumerate() {
        if (r.phi - steady_estimate).abs() < criteria.epsilon {
            if run_len == 0 {
                run_start = i;
            }
            run_len += 1;
            if run_len >= hold {
                lock_index = Some(run_start);
                break;
            }
        } else {
            run_len = 0;
        }
    }

    match lock_index {
        Some(idx) => {
            let stats_start = idx + (len - idx) / 2;
            let (mean, std) = phi_stats(trace, stats_start..len);
            LockReport {
                locked: true,
                lock_index: Some(idx),
                lock_time: Some(records[idx].t),
                steady_phi_mean: mean,
                steady_phi_std: std,
                mean_sample_freq: trace
                    .mean_sample_frequency(stats_start, len)
                    .unwrap_or(f64::NAN),
                mean_dco_freq: trace
                    .mean_dco_frequency(stats_start, len)
                    .unwrap_or(f64::NAN),
            }
        }
        None => {
            let (mean, std) = phi_stats(trace, unlocked_stats_start..len);
            LockReport {
                locked: false,
                lock_index: None,
                lock_time: None,
                steady_phi_mean: mean,
                steady_phi_std: std,
                mean_sample_freq: trace
                    .mean_sample_frequency(unlocked_stats_start, len)
                    .unwrap_or(f64::NAN),
                mean_dco_freq: trace
                    .mean_dco_frequency(unlocked_stats_start, len)
                    .unwrap_or(f64::NAN),
            }
        }
    }
}

fn phi_stats(trace: &Trace, range: Range<usize>) -> (f64, f64) {
    let slice = &trace.records()[range];
    if slice.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = slice.len() as f64;
    let mean = slice.iter().map(|r| r.phi).sum::<f64>() / n;
    let var = slice.iter().map(|r| (r.phi - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Consecutive phase-error pairs (phi_k, phi_{k+1}).
pub fn phase_plane(trace: &Trace) -> Vec<(f64, f64)> {
    trace
        .records()
        .windows(2)
        .map(|w| (w[0].phi, w[1].phi))
        .collect()
}

/// Period-jitter statistics over a window of sampling intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitterReport {
    /// Standard deviation of the sampling intervals, s.
    pub rms_jitter: f64,
    /// Max minus min sampling interval, s.
    pub peak_to_peak_jitter: f64,
    /// RMS after removing the deterministic fractional carry pattern
    /// (per-position mean over each pattern period), s. Equals
    /// `rms_jitter` for integer ratios.
    pub pattern_compensated_rms: f64,
    /// First trace index of the window.
    pub window_start: usize,
    /// One past the last trace index of the window.
    pub window_end: usize,
}

/// Measure period jitter over `window`.
///
/// `pattern_period` is the divider carry-pattern length (1 for integer
/// ratios); it is used to compute the pattern-compensated RMS, which
/// separates noise jitter from deterministic fractional ripple.
pub fn jitter_rms(
    trace: &Trace,
    window: Range<usize>,
    pattern_period: usize,
) -> Result<JitterReport> {
    let len = trace.len();
    if window.end > len || window.start >= window.end {
        return Err(Error::Config(format!(
            "jitter window {window:?} out of bounds for trace of length {len}"
        )));
    }
    let records = &trace.records()[window.clone()];
    if records.len() < 3 {
        return Err(Error::TraceTooShort {
            needed: 3,
            actual: records.len(),
        });
    }
    let intervals: Vec<f64> = records.windows(2).map(|w| w[1].t - w[0].t).collect();
    let n = intervals.len() as f64;
    let mean = intervals.iter().sum::<f64>() / n;
    let var = intervals.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    let max = intervals.iter().cloned().fold(f64::MIN, f64::max);
    let min = intervals.iter().cloned().fold(f64::MAX, f64::min);

    let period = pattern_period.max(1);
    let compensated = if period == 1 {
        var.sqrt()
    } else {
        // Interval i is produced by the divider cycle of its right
        // endpoint; group by that cycle's position in the carry pattern.
        let mut sums = vec![0.0f64; period];
        let mut counts = vec![0usize; period];
        for (i, d) in intervals.iter().enumerate() {
            let pos = (records[i + 1].k % period as u64) as usize;
            sums[pos] += d;
            counts[pos] += 1;
        }
        let mut residual_sq = 0.0;
        for (i, d) in intervals.iter().enumerate() {
            let pos = (records[i + 1].k % period as u64) as usize;
            let group_mean = sums[pos] / counts[pos].max(1) as f64;
            residual_sq += (d - group_mean).powi(2);
        }
        (residual_sq / n).sqrt()
    };

    Ok(JitterReport {
        rms_jitter: var.sqrt(),
        peak_to_peak_jitter: max - min,
        pattern_compensated_rms: compensated,
        window_start: window.start,
        window_end: window.end,
    })
}

/// Trailing window covering `fraction` of the post-lock trace.
///
/// Errors with [`Error::NotLocked`] when the report is unlocked, which
/// signals the caller to extend the run.
pub fn steady_window(trace: &Trace, report: &LockReport, fraction: f64) -> Result<Range<usize>> {
    let idx = report.lock_index.ok_or(Error::NotLocked)?;
    let len = trace.len();
    let post = len - idx;
    let count = ((post as f64 * fraction).round() as usize).clamp(3.min(post), post);
    Ok(len - count..len)
}

/// Trailing window covering `fraction` of the whole trace, independent of
/// lock state. Used by sweeps that must report jitter for marginal runs.
pub fn trailing_window(len: usize, fraction: f64) -> Range<usize> {
    let count = ((len as f64 * fraction).round() as usize).clamp(3.min(len), len);
    len - count..len
}

/// Relative tolerance of the post-lock frequency identity checks.
const FREQ_IDENTITY_TOL: f64 = 1e-3;

/// One point of a lock-range sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockRangePoint {
    /// Frequency ratio W for this point.
    pub w: f64,
    /// Input frequency realizing that ratio, Hz.
    pub f_in: f64,
    /// True lock: phase stabilized and the divided output frequency
    /// matches the input (rejects subharmonic orbits).
    pub locked: bool,
    pub report: LockReport,
}

/// Lock-range sweep result for one variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockRangeSweep {
    pub variant: Variant,
    pub points: Vec<LockRangePoint>,
    /// Smallest W of the contiguous locked region containing W = 1.
    pub lower_edge: Option<f64>,
    /// Largest W of the contiguous locked region containing W = 1.
    pub upper_edge: Option<f64>,
    /// |(upper - 1) - (1 - lower)|: imbalance of the two lock-range
    /// half-widths.
    pub asymmetry: Option<f64>,
}

/// Sweep the normalized frequency ratio W over `w_grid` (noise-free).
///
/// For each W the input frequency is set so that the loop's design ratio
/// equals that W (f_in = f_free / W), the loop runs from its center, and
/// lock is judged by phase stability plus the frequency identity. The
/// sweep reports the contiguous locked region around W = 1 and its
/// asymmetry.
pub fn lock_range_sweep(
    base: &RunConfig,
    criteria: &LockCriteria,
    w_grid: &[f64],
    strategy: RunStrategy,
) -> Result<LockRangeSweep> {
    ensure_strictly_increasing(w_grid)?;
    if w_grid.iter().any(|&w| !w.is_finite() || w <= 0.0) {
        return Err(Error::Config("W grid values must be positive".into()));
    }
    let f_free = base.params.free_running_frequency();
    let results: Vec<Result<LockRangePoint>> = map_indexed(w_grid.len(), strategy, |i| {
        let w = w_grid[i];
        let f_in = f_free / w;
        let mut config = base.clone();
        config.stimulus.base_frequency = f_in;
        config.stimulus.step_value = 0.0;
        config.stimulus.snr_db = None;
        let trace = run(&config)?;
        let report = detect_lock(&trace, criteria);
        let freq_ok = report.mean_sample_freq.is_finite()
            && ((report.mean_sample_freq - f_in) / f_in).abs() < FREQ_IDENTITY_TOL;
        Ok(LockRangePoint {
            w,
            f_in,
            locked: report.locked && freq_ok,
            report,
        })
    });
    let points = results.into_iter().collect::<Result<Vec<_>>>()?;

    // Contiguous locked region containing the grid point closest to W = 1.
    let center = w_grid
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - 1.0)
                .abs()
                .partial_cmp(&(b.1 - 1.0).abs())
                .expect("finite grid")
        })
        .map(|(i, _)| i)
        .expect("non-empty grid");
    let (mut lower_edge, mut upper_edge, mut asymmetry) = (None, None, None);
    if points[center].locked {
        let mut lo = center;
        while lo > 0 && points[lo - 1].locked {
            lo -= 1;
        }
        let mut hi = center;
        while hi + 1 < points.len() && points[hi + 1].locked {
            hi += 1;
        }
        let lower = points[lo].w;
        let upper = points[hi].w;
        lower_edge = Some(lower);
        upper_edge = Some(upper);
        asymmetry = Some(((upper - 1.0) - (1.0 - lower)).abs());
    }

    Ok(LockRangeSweep {
        variant: base.params.variant,
        points,
        lower_edge,
        upper_edge,
        asymmetry,
    })
}

/// Per-trial outcome of one SNR sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitterTrial {
    pub seed: u64,
    pub rms_jitter: f64,
    pub pattern_compensated_rms: f64,
    pub locked: bool,
}

/// Aggregated jitter at one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JitterSweepPoint {
    pub snr_db: f64,
    /// Mean RMS jitter over the trials, s.
    pub mean_rms: f64,
    pub mean_pattern_compensated_rms: f64,
    /// Fraction of trials whose trace satisfied the lock criteria.
    pub locked_fraction: f64,
    pub trials: Vec<JitterTrial>,
}

/// SNR jitter sweep result for one variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JitterSweep {
    pub variant: Variant,
    pub points: Vec<JitterSweepPoint>,
}

/// Run the SNR jitter sweep for both variants at identical configurations.
///
/// Every (point, trial) pair gets an independent seed derived from the
/// template seed; the two variants share the seed of each pair. Jitter is
/// measured over the trailing `window_fraction` of each trace so marginal
/// and slipping runs still produce a number; the per-trial lock verdict is
/// reported alongside.
pub fn snr_jitter_sweep(
    template: &RunConfig,
    criteria: &LockCriteria,
    snr_grid: &[f64],
    trials: usize,
    window_fraction: f64,
    strategy: RunStrategy,
) -> Result<(JitterSweep, JitterSweep)> {
    ensure_strictly_increasing(snr_grid)?;
    if trials == 0 {
        return Err(Error::Config("SNR sweep needs at least one trial".into()));
    }
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::Config(format!(
            "jitter window fraction must lie in (0, 1], got {window_fraction}"
        )));
    }
    let tdtl = sweep_variant(
        template,
        Variant::Tdtl,
        criteria,
        snr_grid,
        trials,
        window_fraction,
        strategy,
    )?;
    let ndtl = sweep_variant(
        template,
        Variant::Ndtl,
        criteria,
        snr_grid,
        trials,
        window_fraction,
        strategy,
    )?;
    Ok((tdtl, ndtl))
}

fn sweep_variant(
    template: &RunConfig,
    variant: Variant,
    criteria: &LockCriteria,
    snr_grid: &[f64],
    trials: usize,
    window_fraction: f64,
    strategy: RunStrategy,
) -> Result<JitterSweep> {
    let base = template.with_variant(variant);
    let pattern = base.divider.pattern_period();
    let jobs = snr_grid.len() * trials;
    let outcomes: Vec<Result<JitterTrial>> = map_indexed(jobs, strategy, |j| {
        let point = j / trials;
        let trial = j % trials;
        let seed = derive_seed(template.stimulus.seed, (point * trials + trial) as u64);
        let mut config = base.with_seed(seed);
        config.stimulus.snr_db = Some(snr_grid[point]);
        let trace = run(&config)?;
        let window = trailing_window(trace.len(), window_fraction);
        let jitter = jitter_rms(&trace, window, pattern)?;
        let report = detect_lock(&trace, criteria);
        Ok(JitterTrial {
            seed,
            rms_jitter: jitter.rms_jitter,
            pattern_compensated_rms: jitter.pattern_compensated_rms,
            locked: report.locked,
        })
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let points = snr_grid
        .iter()
        .enumerate()
        .map(|(point, &snr_db)| {
            let slice = &outcomes[point * trials..(point + 1) * trials];
            let n = slice.len() as f64;
            JitterSweepPoint {
                snr_db,
                mean_rms: slice.iter().map(|t| t.rms_jitter).sum::<f64>() / n,
                mean_pattern_compensated_rms: slice
                    .iter()
                    .map(|t| t.pattern_compensated_rms)
                    .sum::<f64>()
                    / n,
                locked_fraction: slice.iter().filter(|t| t.locked).count() as f64 / n,
                trials: slice.to_vec(),
            }
        })
        .collect();

    Ok(JitterSweep { variant, points })
}

/// Geometric convergence factor of the linearized loop recursion about its
/// fixed point.
///
/// For the frequency-controlled DCO the phase map is
/// `phi' = phi + omega * beta * T(g * phi)` (mod 2 pi) with
/// `T(v) = 1 / (S * (M_total + v))`. Differentiating at the fixed point,
/// where the divided DCO output equals the input frequency, gives
/// `lambda = 1 - 2 pi S g / (f_in * beta)`. Small phase perturbations decay
/// by this factor per sample; valid when f_in lies inside the lock range.
pub fn linearized_convergence_factor(
    params: &LoopParams,
    effective_gain: f64,
    beta_avg: f64,
    f_in: f64,
) -> f64 {
    1.0 - TAU * params.dco_sensitivity * effective_gain / (f_in * beta_avg)
}

fn ensure_strictly_increasing(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("sweep grid must not be empty".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "sweep grid values must be strictly increasing".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesizer::Edge;
    use crate::trace::TraceRecord;

    fn synthetic_trace(phis: &[f64]) -> Trace {
        let dt = 0.01;
        phis.iter()
            .enumerate()
            .map(|(i, &phi)| TraceRecord {
                k: i as u64 + 1,
                t: (i + 1) as f64 * dt,
                ratio: 4,
                edge: Edge::Positive,
                f_dco: 400.0,
                s_sin: phi.sin(),
                s_cos: phi.cos(),
                phi,
                v_filter: 0.01 * phi,
                saturated: false,
                degenerate: false,
            })
            .collect::<Vec<_>>()
            .into()
    }

    fn trace_with_times(ts: &[f64]) -> Trace {
        ts.iter()
            .enumerate()
            .map(|(i, &t)| TraceRecord {
                k: i as u64 + 1,
                t,
                ratio: 4,
                edge: Edge::Positive,
                f_dco: 400.0,
                s_sin: 0.0,
                s_cos: 1.0,
                phi: 0.0,
                v_filter: 0.0,
                saturated: false,
                degenerate: false,
            })
            .collect::<Vec<_>>()
            .into()
    }

    #[test]
    fn all_zero_trace_locks_at_index_zero() {
        let trace = synthetic_trace(&vec![0.0; 300]);
        let report = detect_lock(&trace, &LockCriteria::default());
        assert!(report.locked);
        assert_eq!(report.lock_index, Some(0));
        assert_eq!(report.steady_phi_mean, 0.0);
    }

    #[test]
    fn geometric_decay_locks_where_the_threshold_is_crossed() {
        use std::f64::consts::PI;
        let phis: Vec<f64> = (0..400).map(|k| PI * 0.9f64.powi(k)).collect();
        let trace = synthetic_trace(&phis);
        let report = detect_lock(&trace, &LockCriteria::default());
        assert!(report.locked);
        // First k with pi * 0.9^k < 0.01.
        assert_eq!(report.lock_index, Some(55));
    }

    #[test]
    fn alternating_phase_never_locks() {
        let phis: Vec<f64> = (0..300)
            .map(|k| if k % 2 == 0 { 0.1 } else { -0.1 })
            .collect();
        let trace = synthetic_trace(&phis);
        let report = detect_lock(&trace, &LockCriteria::default());
        assert!(!report.locked);
        assert_eq!(report.lock_index, None);
    }

    #[test]
    fn short_trace_reports_unlocked() {
        let trace = synthetic_trace(&[0.0; 10]);
        let report = detect_lock(&trace, &LockCriteria::default());
        assert!(!report.locked);
    }

    #[test]
    fn lock_detection_is_monotone_in_epsilon() {
        use std::f64::consts::PI;
        let phis: Vec<f64> = (0..400).map(|k| PI * 0.93f64.powi(k)).collect();
        let trace = synthetic_trace(&phis);
        let mut previous = usize::MAX;
        for eps in [0.002, 0.01, 0.05, 0.2, 1.0] {
            let report = detect_lock(
                &trace,
                &LockCriteria {
                    epsilon: eps,
                    hold: 100,
                },
            );
            let idx = report.lock_index.expect("monotone decay locks");
            assert!(idx <= previous, "epsilon {eps} gave later index {idx}");
            previous = idx;
        }
    }

    #[test]
    fn phase_plane_of_a_constant_trace_sits_on_the_diagonal() {
        let trace = synthetic_trace(&[0.37; 20]);
        let pairs = phase_plane(&trace);
        assert_eq!(pairs.len(), 19);
        assert!(pairs.iter().all(|&(a, b)| a == 0.37 && b == 0.37));
    }

    #[test]
    fn phase_plane_of_a_short_trace_is_empty() {
        let trace = synthetic_trace(&[0.1]);
        assert!(phase_plane(&trace).is_empty());
        assert!(phase_plane(&Trace::new()).is_empty());
    }

    #[test]
    fn periodic_intervals_have_zero_jitter() {
        let ts: Vec<f64> = (0..100).map(|i| i as f64 * 0.01).collect();
        let trace = trace_with_times(&ts);
        let report = jitter_rms(&trace, 0..trace.len(), 1).unwrap();
        assert!(report.rms_jitter < 1e-15);
        assert!(report.peak_to_peak_jitter < 1e-15);
    }

    #[test]
    fn alternating_intervals_have_rms_delta() {
        // Intervals T + d, T - d alternating: population std is exactly d.
        let t0 = 0.01;
        let d = 1e-4;
        let mut ts = vec![0.0];
        for i in 0..200 {
            let dt = if i % 2 == 0 { t0 + d } else { t0 - d };
            ts.push(ts.last().unwrap() + dt);
        }
        let trace = trace_with_times(&ts);
        let report = jitter_rms(&trace, 0..trace.len(), 1).unwrap();
        assert!((report.rms_jitter - d).abs() < 1e-12);
        assert!((report.peak_to_peak_jitter - 2.0 * d).abs() < 1e-12);
    }

    #[test]
    fn pattern_compensation_removes_periodic_ripple() {
        // Period-5 deterministic interval pattern and no noise: raw rms is
        // large, compensated rms is zero.
        let pattern = [0.01, 0.01, 0.01, 0.01, 0.0125];
        let mut ts = vec![0.0];
        for i in 0..500 {
            ts.push(ts.last().unwrap() + pattern[i % 5]);
        }
        let trace = trace_with_times(&ts);
        let report = jitter_rms(&trace, 0..trace.len(), 5).unwrap();
        assert!(report.rms_jitter > 5e-4);
        assert!(report.pattern_compensated_rms < 1e-15);
    }

    #[test]
    fn jitter_is_invariant_under_time_translation() {
        let ts: Vec<f64> = (0..200)
            .map(|i| i as f64 * 0.01 + (i as f64 * 0.7).sin() * 1e-4)
            .collect();
        let shifted: Vec<f64> = ts.iter().map(|t| t + 123.456).collect();
        let a = jitter_rms(&trace_with_times(&ts), 10..180, 1).unwrap();
        let b = jitter_rms(&trace_with_times(&shifted), 10..180, 1).unwrap();
        // Shifted times round differently, so compare to float precision.
        assert!((a.rms_jitter - b.rms_jitter).abs() < 1e-9 * a.rms_jitter.max(1e-30));
        assert!(
            (a.peak_to_peak_jitter - b.peak_to_peak_jitter).abs()
                < 1e-9 * a.peak_to_peak_jitter.max(1e-30)
        );
    }

    #[test]
    fn jitter_window_must_be_long_enough() {
        let ts: Vec<f64> = (0..10).map(|i| i as f64 * 0.01).collect();
        let trace = trace_with_times(&ts);
        assert!(matches!(
            jitter_rms(&trace, 0..2, 1),
            Err(Error::TraceTooShort { .. })
        ));
        assert!(jitter_rms(&trace, 0..20, 1).is_err());
    }

    #[test]
    fn steady_window_requires_lock() {
        let trace = synthetic_trace(&vec![0.5; 50]);
        let unlocked = LockReport {
            locked: false,
            lock_index: None,
            lock_time: None,
            steady_phi_mean: 0.0,
            steady_phi_std: 0.0,
            mean_sample_freq: 0.0,
            mean_dco_freq: 0.0,
        };
        assert!(matches!(
            steady_window(&trace, &unlocked, 0.5),
            Err(Error::NotLocked)
        ));
    }

    #[test]
    fn grids_must_be_strictly_increasing() {
        assert!(ensure_strictly_increasing(&[0.0, 5.0, 10.0]).is_ok());
        assert!(ensure_strictly_increasing(&[0.0, 5.0, 5.0]).is_err());
        assert!(ensure_strictly_increasing(&[]).is_err());
    }
}
