use std::collections::HashMap;
use std::io::BufRead;

use crate::{Failure, Outcome};

/// Values grouped by stream key, keys in order of first appearance.
pub type Streams = Vec<(Option<String>, Vec<f64>)>;

/// Reads `value` or `key value` lines (whitespace or comma separated).
/// Blank lines and lines starting with `#` are skipped.
pub fn read_values(reader: impl BufRead) -> Outcome<Streams> {
    let mut streams: Streams = Vec::new();
    let mut index: HashMap<Option<String>, usize> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> =
            trimmed.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
        let (key, text) = match fields[..] {
            [v] => (None, v),
            [k, v] => (Some(k.to_string()), v),
            _ => return Err(Failure::Input(format!("line {}: expected `value` or `key value`", i + 1))),
        };
        let value: f64 =
            text.parse().map_err(|_| Failure::Input(format!("line {}: `{text}` is not a number", i + 1)))?;
        if !value.is_finite() {
            return Err(Failure::Input(format!("line {}: non-finite value {text}", i + 1)));
        }
        let slot = *index.entry(key.clone()).or_insert_with(|| {
            streams.push((key, Vec::new()));
            streams.len() - 1
        });
        streams[slot].1.push(value);
    }
    Ok(streams)
}
