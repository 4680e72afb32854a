//! Line-delimited JSON encoding of summary records.
//!
//! Each record is one line:
//!
//! ```text
//! {"version":1,"kind":"agent","total_count":3,"agent_count":1,"levels":null,"values":null,"raw":[1.0,2.0,3.0],"metadata":{}}
//! ```
//!
//! Quantile records carry aligned `levels` and `values` arrays and a null
//! `raw`; raw records the reverse. Numbers use shortest round-trip
//! formatting, so decoding reproduces every value bit for bit.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::record::{Payload, RecordKind, RecordViolation, SummaryRecord};

pub const FORMAT_VERSION: u32 = 1;

/// A record plus free-form string metadata (stream key, window, transform).
#[derive(Debug, Clone, PartialEq)]
pub struct RecordEnvelope {
    pub format_version: u32,
    pub record: SummaryRecord,
    pub metadata: BTreeMap<String, String>,
}

impl RecordEnvelope {
    pub fn new(record: SummaryRecord) -> Self {
        Self { format_version: FORMAT_VERSION, record, metadata: BTreeMap::new() }
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }
}

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("malformed record: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format version {found} (this build reads up to {FORMAT_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("field `{0}` is required for this record")]
    Missing(&'static str),
    #[error("field `{field}` has {found} entries, expected {expected}")]
    Length { field: &'static str, expected: usize, found: usize },
    #[error("a record carries either `levels`/`values` or `raw`, not both")]
    Ambiguous,
    #[error("invalid record: {0}")]
    Invalid(#[from] RecordViolation),
    #[error("line {line}: {source}")]
    Line { line: usize, source: Box<CodecError> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Serialize, Deserialize)]
struct Wire {
    version: u32,
    kind: RecordKind,
    total_count: u64,
    agent_count: u64,
    #[serde(default)]
    levels: Option<Vec<f64>>,
    #[serde(default)]
    values: Option<Vec<f64>>,
    #[serde(default)]
    raw: Option<Vec<f64>>,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

/// One JSON line (without '\n'). Invalid records are refused.
pub fn encode_record(e: &RecordEnvelope) -> Result<String, CodecError> {
    e.record.validate()?;
    let r = &e.record;
    let (levels, values, raw) = match &r.payload {
        Payload::Quantiles { levels, values } => (Some(levels.clone()), Some(values.clone()), None),
        Payload::Raw(v) => (None, None, Some(v.clone())),
    };
    let wire = Wire {
        version: e.format_version,
        kind: r.kind,
        total_count: r.total_count,
        agent_count: r.agent_count,
        levels,
        values,
        raw,
        metadata: e.metadata.clone(),
    };
    Ok(serde_json::to_string(&wire)?)
}

/// Parses and validates one line.
pub fn decode_record(bytes: &[u8]) -> Result<RecordEnvelope, CodecError> {
    let wire: Wire = serde_json::from_slice(bytes)?;
    if wire.version == 0 || wire.version > FORMAT_VERSION {
        return Err(CodecError::UnsupportedVersion { found: wire.version });
    }
    let payload = match (wire.levels, wire.values, wire.raw) {
        (Some(levels), Some(values), None) => {
            if values.len() != levels.len() {
                return Err(CodecError::Length { field: "values", expected: levels.len(), found: values.len() });
            }
            Payload::Quantiles { levels, values }
        }
        (None, None, Some(raw)) => Payload::Raw(raw),
        (Some(_), None, None) => return Err(CodecError::Missing("values")),
        (None, Some(_), None) => return Err(CodecError::Missing("levels")),
        (None, None, None) => return Err(CodecError::Missing("raw")),
        _ => return Err(CodecError::Ambiguous),
    };
    let record =
        SummaryRecord { kind: wire.kind, total_count: wire.total_count, agent_count: wire.agent_count, payload };
    record.validate()?;
    Ok(RecordEnvelope { format_version: wire.version, record, metadata: wire.metadata })
}

/// Reads every non-blank line, tagging failures with their 1-based line.
pub fn read_records(reader: impl BufRead) -> Result<Vec<RecordEnvelope>, CodecError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e = decode_record(line.as_bytes())
            .map_err(|source| CodecError::Line { line: i + 1, source: Box::new(source) })?;
        out.push(e);
    }
    Ok(out)
}

pub fn write_records(mut writer: impl Write, records: &[RecordEnvelope]) -> Result<(), CodecError> {
    for e in records {
        writeln!(writer, "{}", encode_record(e)?)?;
    }
    Ok(())
}

/// Writes `contents` to a temporary sibling of `path` and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
