//! Probability grids that index the quantile buffers and summary records.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{inv_logit, logit};

/// How the interior levels of a grid were laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridSpacing {
    Uniform,
    Logit,
    Explicit,
}

/// Strictly increasing probability levels starting at exactly 0 and ending at
/// exactly 1. The extremes are ordinary entries: the quantile stored at level
/// 0 is the running minimum and the one at level 1 the running maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityGrid {
    levels: Vec<f64>,
    spacing: GridSpacing,
}

// Evenly spaced levels land a few ulps off the round values they are meant
// to be (0.5000000000000001 for 0.5); move them onto a nearby short decimal.
fn snap(p: f64) -> f64 {
    let short: f64 = format!("{p:.11e}").parse().expect("formatted float parses");
    if (short - p).abs() <= 8.0 * f64::EPSILON * p {
        short
    } else {
        p
    }
}

impl ProbabilityGrid {
    /// Builds `{0} ∪ interior ∪ {1}` where the `interior` levels are equally
    /// spaced between `low` and `high` on the probability scale (`Uniform`)
    /// or on the log-odds scale (`Logit`). A single interior level requires
    /// `low == high`.
    pub fn new(spacing: GridSpacing, interior: usize, low: f64, high: f64) -> Result<Self> {
        if interior == 0 {
            return Err(Error::InvalidGrid("at least one interior level is required".into()));
        }
        if !(low > 0.0 && high < 1.0 && low <= high) || (interior > 1 && low == high) {
            return Err(Error::InvalidGrid(format!("bounds [{low}, {high}] must satisfy 0 < low < high < 1")));
        }
        let step = |lo: f64, hi: f64, i: usize| {
            if interior == 1 {
                lo
            } else if i == interior - 1 {
                hi
            } else {
                let d = (interior - 1) as f64;
                (lo * (d - i as f64) + hi * i as f64) / d
            }
        };
        let inner: Vec<f64> = match spacing {
            GridSpacing::Uniform => (0..interior).map(|i| snap(step(low, high, i))).collect(),
            GridSpacing::Logit => {
                let (lo, hi) = (logit(low), logit(high));
                (0..interior)
                    .map(|i| match i {
                        0 => low,
                        i if i == interior - 1 => high,
                        i => inv_logit(step(lo, hi, i)),
                    })
                    .collect()
            }
            GridSpacing::Explicit => {
                return Err(Error::InvalidGrid("explicit grids are built with ProbabilityGrid::explicit".into()))
            }
        };
        let mut levels = Vec::with_capacity(interior + 2);
        levels.push(0.0);
        levels.extend(inner);
        levels.push(1.0);
        Self::checked(levels, spacing)
    }

    /// Grid from caller-supplied levels; they must already include 0 and 1.
    pub fn explicit(levels: Vec<f64>) -> Result<Self> {
        Self::checked(levels, GridSpacing::Explicit)
    }

    fn checked(levels: Vec<f64>, spacing: GridSpacing) -> Result<Self> {
        if levels.len() < 3 {
            return Err(Error::InvalidGrid(format!("a grid needs at least 3 levels, got {}", levels.len())));
        }
        if levels[0] != 0.0 || levels[levels.len() - 1] != 1.0 {
            return Err(Error::InvalidGrid("first level must be 0 and last must be 1".into()));
        }
        if let Some(w) = levels.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidGrid(format!(
                "levels must be strictly increasing, found {} then {}",
                w[0], w[1]
            )));
        }
        Ok(Self { levels, spacing })
    }

    /// Sorted union with another grid's levels. Spacing becomes `Explicit`
    /// unless `other` adds nothing.
    pub fn union(&self, other: &[f64]) -> Result<Self> {
        let mut levels = self.levels.clone();
        levels.extend_from_slice(other);
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        if levels.len() == self.levels.len() {
            return Ok(self.clone());
        }
        Self::checked(levels, GridSpacing::Explicit)
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn spacing(&self) -> GridSpacing {
        self.spacing
    }

    /// Index of `p` if it is exactly one of the levels.
    pub fn position(&self, p: f64) -> Option<usize> {
        self.levels.binary_search_by(|l| l.total_cmp(&p)).ok()
    }

    /// True when every level of `self` is also a level of `other`.
    pub fn is_subset_of(&self, other: &ProbabilityGrid) -> bool {
        self.levels.iter().all(|&p| other.position(p).is_some())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_levels_are_round() {
        let g = ProbabilityGrid::new(GridSpacing::Uniform, 99, 0.01, 0.99).unwrap();
        assert!(g.levels().iter().enumerate().all(|(k, &p)| p == k as f64 / 100.0));
        let g = ProbabilityGrid::new(GridSpacing::Uniform, 19, 0.05, 0.95).unwrap();
        assert_eq!(g.position(0.5), Some(10));
        let g = ProbabilityGrid::new(GridSpacing::Uniform, 6, 1.0 / 7.0, 6.0 / 7.0).unwrap();
        assert_eq!(g.levels()[3], 3.0 / 7.0);
    }

    #[test]
    fn uniform_three_interior() {
        let g = ProbabilityGrid::new(GridSpacing::Uniform, 3, 0.25, 0.75).unwrap();
        assert_eq!(g.levels(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn logit_hundred_levels_is_symmetric() {
        let g = ProbabilityGrid::new(GridSpacing::Logit, 98, 0.0025, 0.9975).unwrap();
        assert_eq!(g.len(), 100);
        assert_eq!(g.levels()[1], 0.0025);
        assert_eq!(g.levels()[98], 0.9975);
        let n = g.len();
        for i in 0..n {
            let s = g.levels()[i] + g.levels()[n - 1 - i];
            assert!((s - 1.0).abs() <= 1e-12, "level {i}: sum {s}");
        }
        // logit spacing crowds the tails
        let l = g.levels();
        assert!(l[2] - l[1] < l[50] - l[49]);
    }

    #[test]
    fn single_interior_point() {
        let g = ProbabilityGrid::new(GridSpacing::Logit, 1, 0.5, 0.5).unwrap();
        assert_eq!(g.levels(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn rejects_bad_bounds_and_counts() {
        assert!(ProbabilityGrid::new(GridSpacing::Uniform, 0, 0.2, 0.8).is_err());
        assert!(ProbabilityGrid::new(GridSpacing::Uniform, 3, 0.0, 0.8).is_err());
        assert!(ProbabilityGrid::new(GridSpacing::Uniform, 3, 0.2, 1.0).is_err());
        assert!(ProbabilityGrid::new(GridSpacing::Logit, 3, 0.8, 0.2).is_err());
        assert!(ProbabilityGrid::new(GridSpacing::Logit, 3, 0.5, 0.5).is_err());
        assert!(ProbabilityGrid::explicit(vec![0.0, 1.0]).is_err());
        assert!(ProbabilityGrid::explicit(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(ProbabilityGrid::explicit(vec![0.1, 0.5, 1.0]).is_err());
    }

    #[test]
    fn union_keeps_order_and_membership() {
        let g = ProbabilityGrid::new(GridSpacing::Uniform, 3, 0.25, 0.75).unwrap();
        let u = g.union(&[0.999, 0.5, 0.1]).unwrap();
        assert_eq!(u.levels(), &[0.0, 0.1, 0.25, 0.5, 0.75, 0.999, 1.0]);
        assert!(g.is_subset_of(&u));
        assert!(!u.is_subset_of(&g));
        assert_eq!(u.position(0.999), Some(5));
        assert_eq!(u.position(0.3), None);
    }
}
