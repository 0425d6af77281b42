//! Property tests for the loop primitives and analysis tools.

use proptest::prelude::*;
use std::f64::consts::PI;

use tanlock::*;

fn arb_divider() -> impl Strategy<Value = DividerConfig> {
    (1u32..=16, 1u32..=64).prop_flat_map(|(n, den)| {
        (Just(n), 0..den, Just(den))
            .prop_map(|(n, num, den)| DividerConfig::fractional(n, num, den))
    })
}

proptest! {
    #[test]
    fn phase_detect_stays_in_range(s_sin in -1e6f64..1e6, s_cos in -1e6f64..1e6) {
        let (phi, _) = phase_detect(s_sin, s_cos);
        prop_assert!(phi > -PI && phi <= PI, "phi = {phi}");
    }

    #[test]
    fn phase_detect_handles_axis_points(v in -1e3f64..1e3) {
        for (s, c) in [(v, 0.0), (0.0, v), (v, -0.0), (-0.0, v)] {
            let (phi, _) = phase_detect(s, c);
            prop_assert!(phi > -PI && phi <= PI);
        }
    }

    #[test]
    fn divider_matches_floor_difference_oracle(config in arb_divider(), steps in 1usize..5000) {
        let mut state = DividerState::new();
        let num = config.frac_num as u64;
        let den = config.frac_den as u64;
        for k in 1..=steps as u64 {
            let expected = config.ratio_int as u64 + (k * num) / den - ((k - 1) * num) / den;
            prop_assert_eq!(state.next_ratio(&config) as u64, expected);
        }
    }

    #[test]
    fn divider_window_sums_are_exact(config in arb_divider(), offset in 0usize..200) {
        let mut state = DividerState::new();
        let den = config.frac_den as usize;
        let total = offset + 3 * den;
        let seq: Vec<u64> = (0..total).map(|_| state.next_ratio(&config) as u64).collect();
        let expected = config.ratio_int as u64 * den as u64 + config.frac_num as u64;
        for window in seq[offset..].windows(den) {
            prop_assert_eq!(window.iter().sum::<u64>(), expected);
        }
    }

    #[test]
    fn sampling_instants_increase_monotonically(
        config in arb_divider(),
        g1 in 0.05f64..0.6,
        step in -0.3f64..0.3,
        snr in proptest::option::of(0.0f64..40.0),
        seed in any::<u64>(),
        tdtl in any::<bool>(),
    ) {
        let variant = if tdtl { Variant::Tdtl } else { Variant::Ndtl };
        let params = LoopParams::new(variant, 32.0, 3.125, g1);
        let mut stimulus = StimulusSpec::constant(params.free_running_frequency());
        stimulus.step_value = step;
        stimulus.step_time = 0.5;
        stimulus.snr_db = snr;
        stimulus.seed = seed;
        let cfg = RunConfig {
            params,
            stimulus,
            divider: config,
            adaptation: AdaptationConfig::default(),
            fsm: FsmConfig::default(),
            samples: 500,
        };
        let trace = run(&cfg).unwrap();
        for pair in trace.records().windows(2) {
            prop_assert!(pair[1].t > pair[0].t, "t not monotone at k = {}", pair[1].k);
        }
    }

    #[test]
    fn identical_seeds_reproduce_runs(seed in any::<u64>()) {
        let params = LoopParams::new(Variant::Ndtl, 32.0, 3.125, 0.3);
        let mut stimulus = StimulusSpec::constant(params.free_running_frequency());
        stimulus.snr_db = Some(12.0);
        stimulus.seed = seed;
        let cfg = RunConfig {
            params,
            stimulus,
            divider: DividerConfig::fractional(4, 1, 5),
            adaptation: AdaptationConfig::default(),
            fsm: FsmConfig::default(),
            samples: 120,
        };
        prop_assert_eq!(run(&cfg).unwrap(), run(&cfg).unwrap());
    }

    #[test]
    fn lock_index_is_monotone_in_epsilon(
        decay in 0.85f64..0.99,
        scale in 0.5f64..3.0,
    ) {
        let phis: Vec<f64> = (0..600).map(|k| scale * decay.powi(k)).collect();
        let records: Vec<TraceRecord> = phis
            .iter()
            .enumerate()
            .map(|(i, &phi)| TraceRecord {
                k: i as u64 + 1,
                t: 0.01 * (i + 1) as f64,
                ratio: 4,
                edge: Edge::Positive,
                f_dco: 400.0,
                s_sin: phi.sin(),
                s_cos: phi.cos(),
                phi,
                v_filter: 0.0,
                saturated: false,
                degenerate: false,
            })
            .collect();
        let trace: Trace = records.into();
        let mut previous = usize::MAX;
        for eps in [0.005, 0.02, 0.1, 0.5] {
            let report = detect_lock(&trace, &LockCriteria { epsilon: eps, hold: 50 });
            if let Some(idx) = report.lock_index {
                prop_assert!(idx <= previous);
                previous = idx;
            }
        }
    }

    #[test]
    fn input_phase_is_lipschitz_continuous(
        t in 0.0f64..10.0,
        delta in 1e-9f64..1e-3,
        step in -0.4f64..0.4,
    ) {
        let mut spec = StimulusSpec::constant(100.0);
        spec.step_value = step;
        spec.step_time = 1.0;
        let f_max = spec.base_frequency.max(spec.stepped_frequency());
        let dc = (spec.phase_cycles(t + delta) - spec.phase_cycles(t)).abs();
        prop_assert!(dc <= f_max * delta * (1.0 + 1e-9));
    }
}

/// The sweep output must not depend on the execution strategy.
#[cfg(feature = "parallel")]
#[test]
fn parallel_and_sequential_sweeps_agree_exactly() {
    let params = LoopParams::new(Variant::Ndtl, 32.0, 3.125, 0.35);
    let mut stimulus = StimulusSpec::constant(params.free_running_frequency());
    stimulus.step_value = 0.3;
    stimulus.step_time = 0.5;
    stimulus.seed = 21;
    let template = RunConfig {
        params,
        stimulus,
        divider: DividerConfig::fractional(4, 1, 5),
        adaptation: AdaptationConfig::default(),
        fsm: FsmConfig::default(),
        samples: 800,
    };
    let criteria = LockCriteria::default();
    let grid = vec![0.0, 15.0, 30.0];
    let seq =
        snr_jitter_sweep(&template, &criteria, &grid, 3, 0.5, RunStrategy::Sequential).unwrap();
    let par = snr_jitter_sweep(&template, &criteria, &grid, 3, 0.5, RunStrategy::Parallel).unwrap();
    assert_eq!(seq, par);

    let w_grid: Vec<f64> = (0..11).map(|i| 0.9 + 0.02 * i as f64).collect();
    let base = template.with_variant(Variant::Tdtl);
    let seq = lock_range_sweep(&base, &criteria, &w_grid, RunStrategy::Sequential).unwrap();
    let par = lock_range_sweep(&base, &criteria, &w_grid, RunStrategy::Parallel).unwrap();
    assert_eq!(seq, par);
}

/// Adaptation restores lock after division: for every ratio in the grid
/// the adapted loop reacquires from a +0.2 V step, while without
/// adaptation the divided sampling frequency is wrong by the ratio.
#[test]
fn adaptation_restores_lock_across_the_ratio_grid() {
    for (ratio_int, num, den) in [
        (2, 0, 1),
        (3, 0, 1),
        (3, 1, 8),
        (4, 0, 1),
        (4, 1, 5),
        (8, 0, 1),
    ] {
        let divider = DividerConfig::fractional(ratio_int, num, den);
        let beta = divider.average_ratio();
        let params = LoopParams::new(Variant::Ndtl, 32.0, 3.125, 0.3);
        let f_free = params.free_running_frequency();
        let mut stimulus = StimulusSpec::constant(f_free);
        stimulus.step_value = 0.2;
        stimulus.step_time = 0.5;
        let mut config = RunConfig {
            params,
            stimulus,
            divider,
            adaptation: AdaptationConfig::default(),
            fsm: FsmConfig::default(),
            samples: 3000,
        };

        let trace = run(&config).unwrap();
        let report = detect_lock(&trace, &LockCriteria::default());
        let f_in = config.stimulus.stepped_frequency();
        assert!(report.locked, "beta = {beta}: adapted loop must lock");
        assert!(
            ((report.mean_sample_freq - f_in) / f_in).abs() < 1e-3,
            "beta = {beta}: adapted sampling frequency {} vs input {f_in}",
            report.mean_sample_freq
        );

        // Unadapted, the DCO center stays at f_free and the divided
        // sampling rate lands near f_free/beta, a factor beta below the
        // input. The loop cannot track there.
        config.adaptation.enabled = false;
        let trace = run(&config).unwrap();
        let report = detect_lock(&trace, &LockCriteria::default());
        let expected = f_free / beta;
        assert!(
            (report.mean_sample_freq / expected - 1.0).abs() < 0.3,
            "beta = {beta}: unadapted sampling frequency {} should sit near {expected}",
            report.mean_sample_freq
        );
        assert!(
            report.mean_sample_freq < f_in / 1.5,
            "beta = {beta}: unadapted sampling frequency {} is not wrong by the ratio",
            report.mean_sample_freq
        );
    }
}

/// A frequency ratio far from 1 is outside the lock range.
#[test]
fn far_off_ratios_do_not_lock() {
    let params = LoopParams::new(Variant::Ndtl, 32.0, 3.125, 0.3);
    let stimulus = StimulusSpec::constant(params.free_running_frequency());
    let base = RunConfig {
        params,
        stimulus,
        divider: DividerConfig::integer(4),
        adaptation: AdaptationConfig::default(),
        fsm: FsmConfig::default(),
        samples: 1500,
    };
    let sweep = lock_range_sweep(
        &base,
        &LockCriteria::default(),
        &[0.1, 1.0],
        RunStrategy::default(),
    )
    .unwrap();
    assert!(!sweep.points[0].locked, "W = 0.1 must not lock");
    assert!(sweep.points[1].locked, "W = 1 must lock");
}
