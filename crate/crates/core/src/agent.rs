//! Single-pass stream summarizer run at each monitoring agent.
//!
//! Observations collect in a bounded data buffer. When it fills (or on an
//! explicit [`AgentSketch::flush`]) the buffer's empirical CDF is averaged
//! with the CDF implied by the quantile buffer, weighted by their counts,
//! and the average is inverted at every level of the grid. Memory stays at
//! the grid size plus the buffer capacity no matter how long the stream is.

use crate::buffer::{DataBuffer, QuantileBuffer, ValueTransform};
use crate::error::{Error, Result};
use crate::grid::ProbabilityGrid;
use crate::interp::Scheme;
use crate::record::SummaryRecord;

/// Settings for an [`AgentSketch`].
#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub grid: ProbabilityGrid,
    pub buffer_capacity: usize,
    pub scheme: Scheme,
    /// Levels reported in agent records; must be a subset of `grid`.
    pub report: ProbabilityGrid,
    /// Largest number of observations shipped as a raw record.
    pub record_capacity: usize,
    pub transform: ValueTransform,
}

impl AgentConfig {
    /// Linear interpolation, identity transform, all grid levels reported.
    pub fn new(grid: ProbabilityGrid, buffer_capacity: usize) -> Self {
        let record_capacity = grid.len();
        Self {
            report: grid.clone(),
            grid,
            buffer_capacity,
            scheme: Scheme::Linear,
            record_capacity,
            transform: ValueTransform::Identity,
        }
    }

    pub fn scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    /// Sets the report levels and resizes the raw-record limit to match.
    pub fn report(mut self, report: ProbabilityGrid) -> Self {
        self.record_capacity = report.len();
        self.report = report;
        self
    }

    pub fn record_capacity(mut self, capacity: usize) -> Self {
        self.record_capacity = capacity;
        self
    }

    pub fn transform(mut self, transform: ValueTransform) -> Self {
        self.transform = transform;
        self
    }
}

#[derive(Debug, Clone)]
pub struct AgentSketch {
    q: QuantileBuffer,
    pending: DataBuffer<f64>,
    scheme: Scheme,
    report: ProbabilityGrid,
    report_index: Vec<usize>,
    record_capacity: usize,
    transform: ValueTransform,
    // Original values of everything flushed so far, kept only while the
    // total stays within `record_capacity` so small streams ship raw.
    raw: Option<Vec<f64>>,
    extremes: Option<(f64, f64)>,
}

impl AgentSketch {
    pub fn new(config: AgentConfig) -> Result<Self> {
        let report_index = config
            .report
            .levels()
            .iter()
            .map(|&p| config.grid.position(p))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Config("report levels must be a subset of the grid".into()))?;
        Ok(Self {
            q: QuantileBuffer::new(config.grid),
            pending: DataBuffer::new(config.buffer_capacity)?,
            scheme: config.scheme,
            report: config.report,
            report_index,
            record_capacity: config.record_capacity,
            transform: config.transform,
            raw: Some(Vec::new()),
            extremes: None,
        })
    }

    /// Ingests one value, flushing when the data buffer fills. Non-finite
    /// values (and non-positive ones under `Log10`) are rejected and leave
    /// the sketch untouched.
    pub fn observe(&mut self, x: f64) -> Result<()> {
        self.transform.admit(x)?;
        self.extremes = Some(match self.extremes {
            None => (x, x),
            Some((lo, hi)) => (lo.min(x), hi.max(x)),
        });
        if self.total_count() >= self.record_capacity as u64 {
            self.raw = None;
        }
        if self.pending.push(x) {
            self.flush();
        }
        Ok(())
    }

    /// Folds the pending observations into the quantile buffer.
    pub fn flush(&mut self) {
        if self.pending.is_empty() {
            return;
        }
        let transform = self.transform;
        let originals: Vec<f64> = self.pending.drain().collect();
        let mut data: Vec<f64> = originals.iter().map(|&x| transform.forward(x).expect("admitted at ingest")).collect();
        data.sort_by(f64::total_cmp);
        self.q.update(self.scheme, &data, &[]).expect("quantile buffer and sorted data form a valid merge");
        if let Some(raw) = self.raw.as_mut() {
            raw.extend(originals);
        }
    }

    /// Observations ingested so far, flushed or not.
    pub fn total_count(&self) -> u64 {
        self.q.count() + self.pending.len() as u64
    }

    pub fn pending(&self) -> &[f64] {
        self.pending.items()
    }

    /// Quantile buffer, on the transformed scale.
    pub fn buffer(&self) -> &QuantileBuffer {
        &self.q
    }

    pub fn extremes(&self) -> Option<(f64, f64)> {
        self.extremes
    }

    /// Values currently held in memory across all buffers.
    pub fn stored_values(&self) -> usize {
        self.q.values().len() + self.pending.len() + self.raw.as_ref().map_or(0, Vec::len)
    }

    /// Estimate of the `p` quantile in original units, after flushing.
    pub fn quantile(&mut self, p: f64) -> Result<f64> {
        self.flush();
        let (lo, hi) = self.extremes.ok_or(Error::Empty("quantile of an empty sketch"))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilityDomain(p));
        }
        Ok(match p {
            0.0 => lo,
            1.0 => hi,
            _ => self.transform.inverse(self.q.quantile(p, self.scheme)?),
        })
    }

    /// Flushes and summarizes everything ingested so far. Small streams are
    /// shipped as raw values; otherwise the report levels are read from the
    /// quantile buffer and converted back to original units. The sketch
    /// keeps its state.
    pub fn emit_record(&mut self) -> SummaryRecord {
        self.flush();
        if let Some(raw) = &self.raw {
            return SummaryRecord::agent_raw(raw.clone());
        }
        SummaryRecord::agent_quantiles(
            self.q.count(),
            self.report.levels().to_vec(),
            report_values(&self.q, &self.report_index, self.transform, self.extremes),
        )
    }
}

/// Report-level values in original units with the exact extremes at the ends.
pub(crate) fn report_values(
    q: &QuantileBuffer,
    index: &[usize],
    transform: ValueTransform,
    extremes: Option<(f64, f64)>,
) -> Vec<f64> {
    let mut out: Vec<f64> = index.iter().map(|&i| transform.inverse(q.values()[i])).collect();
    if let (Some((lo, hi)), Some(last)) = (extremes, out.len().checked_sub(1)) {
        // the inverse transform can land a tied neighbour an ulp outside
        for v in out.iter_mut() {
            *v = v.clamp(lo, hi);
        }
        out[0] = lo;
        out[last] = hi;
    }
    out
}
