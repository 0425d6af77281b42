//! Per-sample telemetry emitted by the loop.

use serde::{Deserialize, Serialize};

use crate::synthesizer::Edge;

/// One loop update worth of telemetry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Loop update index, starting at 1 for the first sampling event.
    pub k: u64,
    /// Sampling instant, s.
    pub t: f64,
    /// Instantaneous divider count for this cycle.
    pub ratio: u32,
    /// Divider edge that produced the sampling event.
    pub edge: Edge,
    /// DCO frequency held across this interval, Hz.
    pub f_dco: f64,
    /// In-phase channel sample, V.
    pub s_sin: f64,
    /// Quadrature channel sample after any sign inversion, V.
    pub s_cos: f64,
    /// Phase-detector output, rad.
    pub phi: f64,
    /// Loop-filter output after this update, V.
    pub v_filter: f64,
    /// DCO clamp engaged during this interval.
    pub saturated: bool,
    /// Phase detector saw the degenerate (0, 0) sample pair.
    pub degenerate: bool,
}

/// Ordered sequence of loop telemetry records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    records: Vec<TraceRecord>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            records: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TraceRecord> {
        self.records.iter()
    }

    /// Mean sampling frequency over an index range, from the elapsed time
    /// between the first and last record of the range.
    pub fn mean_sample_frequency(&self, start: usize, end: usize) -> Option<f64> {
        let slice = self.records.get(start..end)?;
        if slice.len() < 2 {
            return None;
        }
        let span = slice.last()?.t - slice.first()?.t;
        if span <= 0.0 {
            return None;
        }
        Some((slice.len() - 1) as f64 / span)
    }

    /// Mean DCO frequency over an index range.
    pub fn mean_dco_frequency(&self, start: usize, end: usize) -> Option<f64> {
        let slice = self.records.get(start..end)?;
        if slice.is_empty() {
            return None;
        }
        Some(slice.iter().map(|r| r.f_dco).sum::<f64>() / slice.len() as f64)
    }
}

impl From<Vec<TraceRecord>> for Trace {
    fn from(records: Vec<TraceRecord>) -> Self {
        Self { records }
    }
}

impl<'a> IntoIterator for &'a Trace {
    type Item = &'a TraceRecord;
    type IntoIter = std::slice::Iter<'a, TraceRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}
