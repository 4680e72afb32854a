//! Summary records exchanged between agents, servers and higher levels.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Agent,
    Server,
}

/// Either quantiles on explicit levels or the raw values themselves.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Quantiles { levels: Vec<f64>, values: Vec<f64> },
    Raw(Vec<f64>),
}

/// The first invariant a record breaks.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordViolation {
    #[error("agent records must have agent_count 1, found {0}")]
    AgentCount(u64),
    #[error("server records must have a positive agent_count")]
    ZeroAgents,
    #[error("{levels} levels but {values} values")]
    LengthMismatch { levels: usize, values: usize },
    #[error("levels must start at 0, end at 1, be strictly increasing and number at least 3")]
    BadLevels,
    #[error("quantile values are not nondecreasing")]
    NonMonotone,
    #[error("record contains a non-finite value")]
    NonFinite,
    #[error("quantile records must represent at least one value")]
    EmptyQuantiles,
    #[error("raw payload holds {len} values but total_count is {total}")]
    CountMismatch { len: usize, total: u64 },
    #[error("raw payload of {len} values exceeds the record capacity {capacity}")]
    OverCapacity { len: usize, capacity: usize },
}

/// A fixed-size summary of some number of observations.
///
/// `total_count` is the number of observations represented; `agent_count`
/// the number of agent-level sources folded in (always 1 for agent records).
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRecord {
    pub kind: RecordKind,
    pub total_count: u64,
    pub agent_count: u64,
    pub payload: Payload,
}

impl SummaryRecord {
    pub fn agent_quantiles(total_count: u64, levels: Vec<f64>, values: Vec<f64>) -> Self {
        Self { kind: RecordKind::Agent, total_count, agent_count: 1, payload: Payload::Quantiles { levels, values } }
    }

    pub fn agent_raw(values: Vec<f64>) -> Self {
        Self {
            kind: RecordKind::Agent,
            total_count: values.len() as u64,
            agent_count: 1,
            payload: Payload::Raw(values),
        }
    }

    /// Structural invariants only; see [`SummaryRecord::validate_with_capacity`].
    pub fn validate(&self) -> Result<(), RecordViolation> {
        self.validate_with_capacity(None)
    }

    /// All invariants, including the raw-payload size limit when `capacity`
    /// is given.
    pub fn validate_with_capacity(&self, capacity: Option<usize>) -> Result<(), RecordViolation> {
        match self.kind {
            RecordKind::Agent if self.agent_count != 1 => return Err(RecordViolation::AgentCount(self.agent_count)),
            RecordKind::Server if self.agent_count == 0 => return Err(RecordViolation::ZeroAgents),
            _ => {}
        }
        match &self.payload {
            Payload::Quantiles { levels, values } => {
                if levels.len() != values.len() {
                    return Err(RecordViolation::LengthMismatch { levels: levels.len(), values: values.len() });
                }
                if levels.len() < 3
                    || levels[0] != 0.0
                    || levels[levels.len() - 1] != 1.0
                    || levels.windows(2).any(|w| !(w[0] < w[1]))
                {
                    return Err(RecordViolation::BadLevels);
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(RecordViolation::NonFinite);
                }
                if values.windows(2).any(|w| w[0] > w[1]) {
                    return Err(RecordViolation::NonMonotone);
                }
                if self.total_count == 0 {
                    return Err(RecordViolation::EmptyQuantiles);
                }
            }
            Payload::Raw(values) => {
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(RecordViolation::NonFinite);
                }
                if values.len() as u64 != self.total_count {
                    return Err(RecordViolation::CountMismatch { len: values.len(), total: self.total_count });
                }
                if let Some(capacity) = capacity {
                    if values.len() > capacity {
                        return Err(RecordViolation::OverCapacity { len: values.len(), capacity });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_raw(&self) -> bool {
        matches!(self.payload, Payload::Raw(_))
    }

    /// Smallest value the record carries, if any.
    pub fn min(&self) -> Option<f64> {
        match &self.payload {
            Payload::Quantiles { values, .. } => values.first().copied(),
            Payload::Raw(v) => v.iter().copied().reduce(f64::min),
        }
    }

    pub fn max(&self) -> Option<f64> {
        match &self.payload {
            Payload::Quantiles { values, .. } => values.last().copied(),
            Payload::Raw(v) => v.iter().copied().reduce(f64::max),
        }
    }
}
