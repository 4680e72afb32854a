//! Record aggregator run at a server, and again at every higher level.
//!
//! Incoming records wait in a bounded batch. A flush averages the CDF of the
//! server's quantile buffer with the empirical CDF of all raw values in the
//! batch and with the CDF implied by each quantile record, each weighted by
//! the number of values it represents, then inverts the average on the
//! server grid. Server records have the same shape as agent records, so the
//! output of one aggregator is valid input for the next.

use crate::agent::report_values;
use crate::buffer::{DataBuffer, QuantileBuffer, QuantileSource, ValueTransform};
use crate::error::{Error, Result};
use crate::grid::ProbabilityGrid;
use crate::interp::Scheme;
use crate::record::{Payload, RecordKind, SummaryRecord};

/// Settings for a [`ServerAggregator`].
#[derive(Debug, Clone, PartialEq)]
pub struct ServerConfig {
    pub grid: ProbabilityGrid,
    /// Records held before a merge.
    pub batch_capacity: usize,
    pub scheme: Scheme,
    pub report: ProbabilityGrid,
    pub record_capacity: usize,
    pub transform: ValueTransform,
}

impl ServerConfig {
    pub fn new(grid: ProbabilityGrid, batch_capacity: usize) -> Self {
        let record_capacity = grid.len();
        Self {
            report: grid.clone(),
            grid,
            batch_capacity,
            scheme: Scheme::Linear,
            record_capacity,
            transform: ValueTransform::Identity,
        }
    }

    pub fn scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

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
pub struct ServerAggregator {
    q: QuantileBuffer,
    agent_count: u64,
    pending: DataBuffer<SummaryRecord>,
    pending_count: u64,
    scheme: Scheme,
    report: ProbabilityGrid,
    report_index: Vec<usize>,
    record_capacity: usize,
    transform: ValueTransform,
    absorbed: u64,
    // Pooled raw values while every record so far was raw and small enough
    // to pass through unsummarized.
    raw: Option<Vec<f64>>,
    extremes: Option<(f64, f64)>,
}

impl ServerAggregator {
    pub fn new(config: ServerConfig) -> Result<Self> {
        let report_index = config
            .report
            .levels()
            .iter()
            .map(|&p| config.grid.position(p))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Config("report levels must be a subset of the grid".into()))?;
        Ok(Self {
            q: QuantileBuffer::new(config.grid),
            agent_count: 0,
            pending: DataBuffer::new(config.batch_capacity)?,
            pending_count: 0,
            scheme: config.scheme,
            report: config.report,
            report_index,
            record_capacity: config.record_capacity,
            transform: config.transform,
            absorbed: 0,
            raw: Some(Vec::new()),
            extremes: None,
        })
    }

    /// Queues a record, merging when the batch fills. Invalid records (and,
    /// under `Log10`, records with non-positive values) are rejected and
    /// leave the aggregator untouched.
    pub fn absorb(&mut self, record: SummaryRecord) -> Result<()> {
        record.validate()?;
        let values: &[f64] = match &record.payload {
            Payload::Quantiles { values, .. } => values,
            Payload::Raw(v) => v,
        };
        for &v in values {
            self.transform.admit(v)?;
        }
        if let (Some(lo), Some(hi)) = (record.min(), record.max()) {
            self.extremes = Some(match self.extremes {
                None => (lo, hi),
                Some((a, b)) => (a.min(lo), b.max(hi)),
            });
        }
        let total = self.total_count() + record.total_count;
        match (&mut self.raw, &record.payload) {
            (Some(pool), Payload::Raw(v)) if total <= self.record_capacity as u64 => pool.extend_from_slice(v),
            _ => self.raw = None,
        }
        self.absorbed += 1;
        self.pending_count += record.total_count;
        if self.pending.push(record) {
            self.merge_flush();
        }
        Ok(())
    }

    /// Merges the pending batch into the quantile buffer.
    pub fn merge_flush(&mut self) {
        if self.pending.is_empty() {
            return;
        }
        let transform = self.transform;
        let forward = |v: &f64| transform.forward(*v).expect("admitted at absorb");
        let batch: Vec<SummaryRecord> = self.pending.drain().collect();
        let mut raw = Vec::new();
        let mut transformed: Vec<(&[f64], Vec<f64>, u64)> = Vec::new();
        for r in &batch {
            self.agent_count += match r.kind {
                RecordKind::Agent => 1,
                RecordKind::Server => r.agent_count,
            };
            match &r.payload {
                Payload::Raw(v) => raw.extend(v.iter().map(forward)),
                Payload::Quantiles { levels, values } => {
                    transformed.push((levels, values.iter().map(forward).collect(), r.total_count))
                }
            }
        }
        raw.sort_by(f64::total_cmp);
        let sources: Vec<QuantileSource<'_>> =
            transformed.iter().map(|(levels, values, count)| (*levels, values.as_slice(), *count)).collect();
        self.q.update(self.scheme, &raw, &sources).expect("validated records form a valid merge");
        self.pending_count = 0;
    }

    /// Values represented by everything absorbed, merged or pending.
    pub fn total_count(&self) -> u64 {
        self.q.count() + self.pending_count
    }

    /// Agent-level sources represented by the merged records.
    pub fn agent_count(&self) -> u64 {
        self.agent_count
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    pub fn buffer(&self) -> &QuantileBuffer {
        &self.q
    }

    pub fn extremes(&self) -> Option<(f64, f64)> {
        self.extremes
    }

    /// Estimate of the `p` quantile in original units, after merging.
    pub fn quantile(&mut self, p: f64) -> Result<f64> {
        self.merge_flush();
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilityDomain(p));
        }
        let (lo, hi) = self.extremes.ok_or(Error::Empty("quantile of an empty aggregate"))?;
        Ok(match p {
            0.0 => lo,
            1.0 => hi,
            _ => self.transform.inverse(self.q.quantile(p, self.scheme)?),
        })
    }

    /// Merges what is pending and summarizes every absorbed record.
    pub fn emit_record(&mut self) -> Result<SummaryRecord> {
        self.merge_flush();
        if self.absorbed == 0 {
            return Err(Error::Empty("no records have been absorbed"));
        }
        let payload = match &self.raw {
            Some(pool) => Payload::Raw(pool.clone()),
            None => Payload::Quantiles {
                levels: self.report.levels().to_vec(),
                values: report_values(&self.q, &self.report_index, self.transform, self.extremes),
            },
        };
        Ok(SummaryRecord {
            kind: RecordKind::Server,
            total_count: self.q.count(),
            agent_count: self.agent_count.max(1),
            payload,
        })
    }
}
