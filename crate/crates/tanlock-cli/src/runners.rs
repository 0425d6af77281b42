//! Experiment runners behind the CLI subcommands.

use anyhow::{bail, Context, Result};
use std::fs;
use std::io::Write;
use std::path::Path;

use tanlock::{
    adapt, detect_lock, jitter_rms, lock_range_sweep, phase_plane, restored_operating_point,
    snr_jitter_sweep, DividerConfig, DividerState, RunStrategy, Variant,
};

use crate::output::{
    compare_rows, write_jitter_sweep_csv, write_json, write_lockrange_csv, write_phase_plane_csv,
    write_trace_csv, CompareReport, DerivedInfo, LockRangeSummary, Report, TOOL_VERSION,
};
use crate::scenario::Scenario;
use crate::{EXIT_OK, EXIT_UNLOCKED};

fn ensure_out_dir(out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))
}

fn derived_info(scenario: &Scenario) -> Result<DerivedInfo> {
    let beta = scenario.divider.average_ratio();
    let adaptation = adapt(beta, &scenario.loop_params, &scenario.adaptation)?;
    let operating_point = restored_operating_point(
        beta,
        &scenario.loop_params,
        &scenario.adaptation,
        &scenario.stimulus,
    )?;
    Ok(DerivedInfo {
        beta_avg: beta,
        f_free: scenario.loop_params.free_running_frequency(),
        effective_gain: adaptation.effective_gain,
        dc_offset: adaptation.dc_offset,
        operating_point,
    })
}

/// Run one scenario and write `trace.csv`, `phase_plane.csv` and
/// `report.json` into `out_dir`.
///
/// Exits 0 when the loop locked and 2 when the run completed without
/// locking (outputs are still written).
pub fn run_scenario(scenario: &Scenario, out_dir: &Path) -> Result<i32> {
    ensure_out_dir(out_dir)?;
    let config = scenario.to_run_config();
    let trace = tanlock::run(&config)?;
    let lock = detect_lock(&trace, &scenario.lock_criteria());

    let fraction = scenario.analysis.jitter_window_fraction;
    let window = match tanlock::analysis::steady_window(&trace, &lock, fraction) {
        Ok(w) => w,
        // Unlocked runs still report jitter over the trailing window.
        Err(_) => tanlock::analysis::trailing_window(trace.len(), fraction),
    };
    let jitter = jitter_rms(&trace, window, scenario.divider.pattern_period()).ok();

    write_trace_csv(&out_dir.join("trace.csv"), &trace)?;
    write_phase_plane_csv(&out_dir.join("phase_plane.csv"), &phase_plane(&trace))?;
    let report = Report {
        tool: "tanlock",
        version: TOOL_VERSION,
        seed: scenario.stimulus.seed,
        scenario,
        derived: derived_info(scenario)?,
        lock: &lock,
        jitter: jitter.as_ref(),
    };
    write_json(&out_dir.join("report.json"), &report)?;

    Ok(if lock.locked { EXIT_OK } else { EXIT_UNLOCKED })
}

/// Run the TDTL/NDTL jitter comparison sweep and write
/// `jitter_sweep.csv` and `compare.json`.
pub fn run_compare(scenario: &Scenario, out_dir: &Path) -> Result<i32> {
    if scenario.variant_specified {
        bail!(
            "compare templates must omit loop.variant; both variants are instantiated internally"
        );
    }
    ensure_out_dir(out_dir)?;
    let template = scenario.to_run_config();
    let grid = scenario.sweep.grid();
    let (tdtl, ndtl) = snr_jitter_sweep(
        &template,
        &scenario.lock_criteria(),
        &grid,
        scenario.sweep.trials,
        scenario.analysis.jitter_window_fraction,
        RunStrategy::default(),
    )?;

    let rows = compare_rows(&tdtl, &ndtl);
    let everywhere = rows.iter().all(|r| r.ndtl_rms_s < r.tdtl_rms_s);
    let majority = rows.iter().filter(|r| r.ratio <= 0.1).count() * 2 > rows.len();
    let verdict = match (everywhere, majority) {
        (true, true) => "ndtl outperforms tdtl at every point, by 10x or more at a majority",
        (true, false) => "ndtl outperforms tdtl at every point",
        (false, _) => "ndtl does not outperform tdtl everywhere",
    };

    write_jitter_sweep_csv(&out_dir.join("jitter_sweep.csv"), &rows)?;
    let report = CompareReport {
        tool: "tanlock",
        version: TOOL_VERSION,
        seed: scenario.stimulus.seed,
        scenario,
        trials: scenario.sweep.trials,
        rows,
        ndtl_below_tdtl_everywhere: everywhere,
        majority_ratio_at_most_tenth: majority,
        verdict: verdict.to_string(),
    };
    write_json(&out_dir.join("compare.json"), &report)?;
    Ok(EXIT_OK)
}

/// Evenly spaced W grid, inclusive of both ends.
pub fn w_grid(w_min: f64, w_max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        bail!("w grid needs at least one step");
    }
    if steps == 1 {
        return Ok(vec![w_min]);
    }
    if w_max <= w_min {
        bail!("w-max must exceed w-min for multi-point grids");
    }
    let dw = (w_max - w_min) / (steps - 1) as f64;
    Ok((0..steps).map(|i| w_min + dw * i as f64).collect())
}

/// Sweep the lock range for both variants and write
/// `lockrange_tdtl.csv`, `lockrange_ndtl.csv` and `lockrange_summary.json`.
pub fn run_lockrange(
    scenario: &Scenario,
    w_min: f64,
    w_max: f64,
    w_steps: usize,
    out_dir: &Path,
) -> Result<i32> {
    if scenario.variant_specified {
        bail!("lockrange templates must omit loop.variant; both variants are swept");
    }
    ensure_out_dir(out_dir)?;
    let grid = w_grid(w_min, w_max, w_steps)?;
    let criteria = scenario.lock_criteria();
    let base = scenario.to_run_config();
    let tdtl = lock_range_sweep(
        &base.with_variant(Variant::Tdtl),
        &criteria,
        &grid,
        RunStrategy::default(),
    )?;
    let ndtl = lock_range_sweep(
        &base.with_variant(Variant::Ndtl),
        &criteria,
        &grid,
        RunStrategy::default(),
    )?;

    write_lockrange_csv(&out_dir.join("lockrange_tdtl.csv"), &tdtl)?;
    write_lockrange_csv(&out_dir.join("lockrange_ndtl.csv"), &ndtl)?;

    let ndtl_less_asymmetric = match (grid.len() >= 2, tdtl.asymmetry, ndtl.asymmetry) {
        (true, Some(t), Some(n)) => Some(n < t),
        _ => None,
    };
    let summary = LockRangeSummary {
        tool: "tanlock",
        version: TOOL_VERSION,
        scenario,
        tdtl: (&tdtl).into(),
        ndtl: (&ndtl).into(),
        ndtl_less_asymmetric,
    };
    write_json(&out_dir.join("lockrange_summary.json"), &summary)?;
    Ok(EXIT_OK)
}

/// Print the dual-modulus carry sequence for cross-checking.
pub fn oracle_divider(n: u32, num: u32, den: u32, count: u64, out: &mut impl Write) -> Result<i32> {
    let config = DividerConfig {
        ratio_int: n,
        frac_num: num,
        frac_den: den,
        edge: tanlock::Edge::Positive,
    };
    config.validate()?;
    let mut state = DividerState::new();
    for _ in 0..count {
        writeln!(out, "{}", state.next_ratio(&config))?;
    }
    Ok(EXIT_OK)
}
