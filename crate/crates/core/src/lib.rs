//! Incremental-quantile sketches for distributed performance monitoring.
//!
//! An [`AgentSketch`] summarizes one stream of observations in fixed memory
//! and emits small fixed-length [`SummaryRecord`]s. A [`ServerAggregator`]
//! merges any mix of agent and server records into a record of the same
//! shape, so aggregation can be repeated up a hierarchy of groups and time
//! windows. Both keep quantile estimates on a [`ProbabilityGrid`] and update
//! them by averaging CDFs weighted by counts, then inverting the average.

pub mod agent;
pub mod buffer;
pub mod codec;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod interp;
pub mod oracle;
pub mod query;
pub mod record;
pub mod server;

pub use agent::{AgentConfig, AgentSketch};
pub use buffer::{DataBuffer, Observation, QuantileBuffer, ValueTransform};
pub use codec::{decode_record, encode_record, RecordEnvelope};
pub use error::{Error, Result};
pub use grid::{GridSpacing, ProbabilityGrid};
pub use interp::{MergedCdf, Scheme};
pub use oracle::{empirical_quantiles, mixture_cdf_quantiles, rmse_ratio, CdfDescription, RatioCurve};
pub use query::record_quantiles;
pub use record::{Payload, RecordKind, RecordViolation, SummaryRecord};
pub use server::{ServerAggregator, ServerConfig};
