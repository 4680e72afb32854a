//! Quantile and data buffers, observations, and the value transform.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ProbabilityGrid;
use crate::interp::{MergedCdf, Scheme};

/// A finite observation, optionally tagged with the stream it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub value: f64,
    pub stream: Option<String>,
}

impl Observation {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFinite(value));
        }
        Ok(Self { value, stream: None })
    }

    pub fn keyed(value: f64, stream: impl Into<String>) -> Result<Self> {
        let mut obs = Self::new(value)?;
        obs.stream = Some(stream.into());
        Ok(obs)
    }
}

/// Scale on which buffers are updated. Records and queries always use the
/// original units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueTransform {
    #[default]
    Identity,
    Log10,
}

impl ValueTransform {
    pub fn forward(self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        match self {
            Self::Identity => Ok(x),
            Self::Log10 if x > 0.0 => Ok(x.log10()),
            Self::Log10 => Err(Error::NonPositive(x)),
        }
    }

    pub fn inverse(self, y: f64) -> f64 {
        match self {
            Self::Identity => y,
            Self::Log10 => 10f64.powf(y),
        }
    }

    /// Checks that `x` can be ingested without transforming it.
    pub fn admit(self, x: f64) -> Result<()> {
        self.forward(x).map(|_| ())
    }
}

/// Current quantile estimates on a fixed grid, plus the number of values
/// they summarize. Empty until the first update.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileBuffer {
    grid: ProbabilityGrid,
    values: Vec<f64>,
    count: u64,
}

/// A quantile vector entering a merge: `(levels, values, count)`.
pub type QuantileSource<'a> = (&'a [f64], &'a [f64], u64);

impl QuantileBuffer {
    pub fn new(grid: ProbabilityGrid) -> Self {
        Self { grid, values: Vec::new(), count: 0 }
    }

    pub fn grid(&self) -> &ProbabilityGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Replaces the estimates with quantiles of the count-weighted average of
    /// this buffer's CDF, the empirical CDF of `raw` (sorted) and the CDFs of
    /// `others`.
    pub fn update(&mut self, scheme: Scheme, raw: &[f64], others: &[QuantileSource<'_>]) -> Result<()> {
        let mut cdf = MergedCdf::new(scheme);
        if self.count > 0 {
            cdf.push_quantiles(self.grid.levels(), &self.values, self.count)?;
        }
        cdf.push_empirical(raw);
        for &(levels, values, count) in others {
            if count > 0 {
                cdf.push_quantiles(levels, values, count)?;
            }
        }
        if cdf.total_weight() == self.count {
            return Ok(());
        }
        let next = cdf.quantiles(self.grid.levels())?;
        self.count = cdf.total_weight();
        self.values = next;
        Ok(())
    }

    /// Estimate at level `p`: the stored value when `p` is a grid level,
    /// otherwise the inversion of this buffer's CDF.
    pub fn quantile(&self, p: f64, scheme: Scheme) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::Empty("quantile of an empty buffer"));
        }
        if let Some(i) = self.grid.position(p) {
            return Ok(self.values[i]);
        }
        let mut cdf = MergedCdf::new(scheme);
        cdf.push_quantiles(self.grid.levels(), &self.values, self.count)?;
        cdf.quantiles(&[p]).map(|q| q[0])
    }
}

/// Bounded staging area for observations or records awaiting a flush.
#[derive(Debug, Clone, PartialEq)]
pub struct DataBuffer<T> {
    capacity: usize,
    items: Vec<T>,
}

impl<T> DataBuffer<T> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("buffer capacity must be positive".into()));
        }
        Ok(Self { capacity, items: Vec::with_capacity(capacity) })
    }

    /// Appends `item` and reports whether the buffer is now full.
    pub fn push(&mut self, item: T) -> bool {
        debug_assert!(self.items.len() < self.capacity);
        self.items.push(item);
        self.is_full()
    }

    pub fn is_full(&self) -> bool {
        self.items.len() >= self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn items(&self) -> &[T] {
        &self.items
    }

    pub fn drain(&mut self) -> std::vec::Drain<'_, T> {
        self.items.drain(..)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpacing;

    #[test]
    fn observation_rejects_non_finite() {
        assert!(Observation::new(f64::NAN).is_err());
        assert!(Observation::new(f64::INFINITY).is_err());
        assert_eq!(Observation::keyed(1.5, "a1").unwrap().stream.as_deref(), Some("a1"));
    }

    #[test]
    fn transform_round_trip() {
        let t = ValueTransform::Log10;
        assert_eq!(t.forward(100.0).unwrap(), 2.0);
        assert_eq!(t.inverse(2.0), 100.0);
        assert!(matches!(t.forward(0.0), Err(Error::NonPositive(_))));
        assert!(matches!(t.forward(-3.0), Err(Error::NonPositive(_))));
        assert_eq!(ValueTransform::Identity.forward(-3.0).unwrap(), -3.0);
    }

    #[test]
    fn data_buffer_fills() {
        let mut d = DataBuffer::new(2).unwrap();
        assert!(!d.push(1.0));
        assert!(d.push(2.0));
        assert_eq!(d.drain().count(), 2);
        assert!(d.is_empty());
        assert!(DataBuffer::<f64>::new(0).is_err());
    }

    #[test]
    fn quantile_buffer_first_update_is_empirical() {
        let grid = ProbabilityGrid::new(GridSpacing::Uniform, 3, 0.25, 0.75).unwrap();
        let mut q = QuantileBuffer::new(grid);
        assert!(q.quantile(0.5, Scheme::Linear).is_err());
        let data: Vec<f64> = (1..=10).map(f64::from).collect();
        q.update(Scheme::Linear, &data, &[]).unwrap();
        assert_eq!(q.values(), &[1.0, 3.0, 5.5, 8.0, 10.0]);
        assert_eq!(q.count(), 10);
        assert_eq!(q.quantile(0.25, Scheme::Linear).unwrap(), 3.0);
        let between = q.quantile(0.4, Scheme::Linear).unwrap();
        assert!(between > 3.0 && between < 5.5);
        // nothing new: state is left alone
        q.update(Scheme::Linear, &[], &[]).unwrap();
        assert_eq!(q.count(), 10);
    }
}
