//! CSV and JSON serialization of runs, sweeps and reports.
//!
//! Column orders and header names are frozen; golden-file tests guard
//! them. Floats use Rust's shortest round-trip formatting, booleans are
//! written as 0/1 and edges as pos/neg, so reruns with the same seed are
//! byte-identical.

use serde::Serialize;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use tanlock::{Edge, JitterReport, JitterSweep, LockRangeSweep, LockReport, OperatingPoint, Trace};

use crate::scenario::Scenario;

pub const TRACE_HEADER: &str = "k,t,ratio,edge,f_dco,s_sin,s_cos,phi,v_filter,saturated,degenerate";
pub const PHASE_PLANE_HEADER: &str = "phi_k,phi_k1";
pub const JITTER_SWEEP_HEADER: &str = "snr_db,tdtl_rms_s,ndtl_rms_s,ratio";
pub const LOCKRANGE_HEADER: &str = "W,locked,acquisition_samples";

/// Tool version embedded in every report.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

fn edge_label(edge: Edge) -> &'static str {
    match edge {
        Edge::Positive => "pos",
        Edge::Negative => "neg",
    }
}

fn flag(b: bool) -> u8 {
    u8::from(b)
}

/// Write the per-sample trace in the frozen column order.
pub fn write_trace_csv(path: &Path, trace: &Trace) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{TRACE_HEADER}")?;
    for r in trace {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.k,
            r.t,
            r.ratio,
            edge_label(r.edge),
            r.f_dco,
            r.s_sin,
            r.s_cos,
            r.phi,
            r.v_filter,
            flag(r.saturated),
            flag(r.degenerate),
        )?;
    }
    w.flush()
}

/// Write consecutive phase-error pairs.
pub fn write_phase_plane_csv(path: &Path, pairs: &[(f64, f64)]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{PHASE_PLANE_HEADER}")?;
    for (a, b) in pairs {
        writeln!(w, "{a},{b}")?;
    }
    w.flush()
}

/// Derived loop quantities echoed in reports.
#[derive(Debug, Serialize)]
pub struct DerivedInfo {
    pub beta_avg: f64,
    pub f_free: f64,
    pub effective_gain: f64,
    pub dc_offset: f64,
    pub operating_point: OperatingPoint,
}

/// Full single-run report: verdicts plus everything needed to reproduce
/// the run.
#[derive(Debug, Serialize)]
pub struct Report<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub scenario: &'a Scenario,
    pub derived: DerivedInfo,
    pub lock: &'a LockReport,
    pub jitter: Option<&'a JitterReport>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()
}

/// One row of the TDTL/NDTL jitter comparison.
#[derive(Debug, Serialize)]
pub struct CompareRow {
    pub snr_db: f64,
    pub tdtl_rms_s: f64,
    pub ndtl_rms_s: f64,
    /// ndtl_rms_s / tdtl_rms_s.
    pub ratio: f64,
    pub tdtl_locked_fraction: f64,
    pub ndtl_locked_fraction: f64,
}

/// Jitter comparison verdicts.
#[derive(Debug, Serialize)]
pub struct CompareReport<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub scenario: &'a Scenario,
    pub trials: usize,
    pub rows: Vec<CompareRow>,
    /// NDTL mean rms below TDTL mean rms at every grid point.
    pub ndtl_below_tdtl_everywhere: bool,
    /// NDTL/TDTL ratio at most 0.1 at a majority of grid points.
    pub majority_ratio_at_most_tenth: bool,
    pub verdict: String,
}

pub fn compare_rows(tdtl: &JitterSweep, ndtl: &JitterSweep) -> Vec<CompareRow> {
    tdtl.points
        .iter()
        .zip(&ndtl.points)
        .map(|(t, n)| CompareRow {
            snr_db: t.snr_db,
            tdtl_rms_s: t.mean_rms,
            ndtl_rms_s: n.mean_rms,
            ratio: n.mean_rms / t.mean_rms,
            tdtl_locked_fraction: t.locked_fraction,
            ndtl_locked_fraction: n.locked_fraction,
        })
        .collect()
}

/// Write the jitter sweep table.
pub fn write_jitter_sweep_csv(path: &Path, rows: &[CompareRow]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{JITTER_SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.snr_db, r.tdtl_rms_s, r.ndtl_rms_s, r.ratio
        )?;
    }
    w.flush()
}

/// Write one variant's lock-range table.
pub fn write_lockrange_csv(path: &Path, sweep: &LockRangeSweep) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{LOCKRANGE_HEADER}")?;
    for p in &sweep.points {
        let acquisition = p
            .report
            .lock_index
            .map(|i| i.to_string())
            .unwrap_or_default();
        writeln!(w, "{},{},{}", p.w, flag(p.locked), acquisition)?;
    }
    w.flush()
}

/// Per-variant lock-range edges.
#[derive(Debug, Serialize)]
pub struct LockRangeEdges {
    pub lower_edge: Option<f64>,
    pub upper_edge: Option<f64>,
    pub asymmetry: Option<f64>,
}

impl From<&LockRangeSweep> for LockRangeEdges {
    fn from(s: &LockRangeSweep) -> Self {
        Self {
            lower_edge: s.lower_edge,
            upper_edge: s.upper_edge,
            asymmetry: s.asymmetry,
        }
    }
}

/// Lock-range summary across both variants.
#[derive(Debug, Serialize)]
pub struct LockRangeSummary<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario: &'a Scenario,
    pub tdtl: LockRangeEdges,
    pub ndtl: LockRangeEdges,
    /// True when the NDTL asymmetry is strictly below the TDTL one.
    /// Absent for degenerate grids or when either region is empty.
    pub ndtl_less_asymmetric: Option<bool>,
}
