//! Quantile estimates read back from a single summary record.

use crate::buffer::ValueTransform;
use crate::error::{Error, Result};
use crate::interp::{invert_merged_cdf, MergedCdf, Scheme};
use crate::oracle::sorted_quantile;
use crate::record::{Payload, SummaryRecord};

/// Estimates at `levels` from one record, in original units.
///
/// Raw payloads are inverted empirically and quantile payloads through their
/// implied CDF, both on the `transform` scale. Levels stored in the record,
/// and the extremes, are returned as stored.
pub fn record_quantiles(
    record: &SummaryRecord,
    levels: &[f64],
    scheme: Scheme,
    transform: ValueTransform,
) -> Result<Vec<f64>> {
    record.validate()?;
    if let Some(&p) = levels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::ProbabilityDomain(p));
    }
    let (lo, hi) = (record.min().expect("valid"), record.max().expect("valid"));
    let forward = |v: &f64| transform.forward(*v);
    match &record.payload {
        Payload::Raw(values) => {
            let mut t = values.iter().map(forward).collect::<Result<Vec<f64>>>()?;
            t.sort_by(f64::total_cmp);
            levels
                .iter()
                .map(|&p| match p {
                    0.0 => Ok(lo),
                    1.0 => Ok(hi),
                    _ => Ok(transform.inverse(sorted_quantile(&t, p)?)),
                })
                .collect()
        }
        Payload::Quantiles { levels: stored, values } => {
            let t = values.iter().map(forward).collect::<Result<Vec<f64>>>()?;
            let mut cdf = MergedCdf::new(scheme);
            cdf.push_quantiles(stored, &t, record.total_count)?;
            let table = cdf.tabulate()?;
            levels
                .iter()
                .map(|&p| {
                    if let Some(i) = stored.iter().position(|&s| s == p) {
                        return Ok(values[i]);
                    }
                    let y = invert_merged_cdf(&table, p, scheme)?;
                    Ok(transform.inverse(y).clamp(lo, hi))
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_records_match_the_oracle() {
        let r = SummaryRecord::agent_raw(vec![4.0, 1.0, 3.0, 2.0]);
        let q = record_quantiles(&r, &[0.0, 0.25, 0.5, 0.6, 1.0], Scheme::Linear, ValueTransform::Identity).unwrap();
        assert_eq!(q, vec![1.0, 1.5, 2.5, 3.0, 4.0]);
    }

    #[test]
    fn stored_levels_are_returned_verbatim() {
        let levels = vec![0.0, 0.5, 1.0];
        let r = SummaryRecord::agent_quantiles(10, levels.clone(), vec![1.0, 5.0, 9.0]);
        let q = record_quantiles(&r, &levels, Scheme::Logit, ValueTransform::Identity).unwrap();
        assert_eq!(q, vec![1.0, 5.0, 9.0]);
        let mid = record_quantiles(&r, &[0.25, 0.75], Scheme::Linear, ValueTransform::Identity).unwrap();
        assert!(mid[0] > 1.0 && mid[0] < 5.0 && mid[1] > 5.0 && mid[1] < 9.0);
    }

    #[test]
    fn rejects_bad_levels_and_values() {
        let r = SummaryRecord::agent_raw(vec![0.0, 1.0]);
        assert!(record_quantiles(&r, &[1.5], Scheme::Linear, ValueTransform::Identity).is_err());
        assert!(record_quantiles(&r, &[0.5], Scheme::Linear, ValueTransform::Log10).is_err());
    }
}
