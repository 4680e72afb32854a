//! Ground truth: exact empirical quantiles, direct evaluation of small mixture
//! CDFs, and the RMSE ratio used to score estimates.
//!
//! These routines deliberately avoid the buffered code paths. Empirical
//! quantiles are found from ranks in the sorted data; mixtures are summed and
//! searched by linear scans. Tie handling matches the sketches, so results
//! can be compared for exact equality.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interp::{bracket_weight, interp, trim, Scheme};

/// Quantiles of the empirical distribution of `data` at each of `levels`.
///
/// For a level `p` the bracketing values are the smallest `x` with
/// `#{d <= x} / n >= p` and the largest with `#{d < x} / n <= p`; when these
/// differ the empirical CDF is flat at `p` between them and the midpoint is
/// returned. `p = 0` and `p = 1` give the minimum and maximum.
pub fn empirical_quantiles(data: &[f64], levels: &[f64]) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::Empty("empirical quantiles of no data"));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    levels.iter().map(|&p| sorted_quantile(&sorted, p)).collect()
}

/// [`empirical_quantiles`] for data that is already sorted.
pub fn sorted_quantile(sorted: &[f64], p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityDomain(p));
    }
    let n = sorted.len();
    if n == 0 {
        return Err(Error::Empty("empirical quantiles of no data"));
    }
    let nf = n as f64;
    let frac = |k: usize| k as f64 / nf;
    // smallest count k with k/n >= p, and largest c with c/n <= p
    let k = first_count(n, |k| frac(k) >= p).unwrap_or(n);
    let c = first_count(n, |c| frac(c) > p).map_or(n, |c| c - 1);
    let x_plus = sorted[k.max(1) - 1];
    let x_minus = sorted[c.min(n - 1)];
    if x_plus == x_minus {
        return Ok(x_minus);
    }
    let f_plus = frac(sorted.partition_point(|&v| v <= x_plus));
    let f_minus = frac(sorted.partition_point(|&v| v < x_minus));
    let rho = bracket_weight(f_plus, f_minus, p, Scheme::Linear);
    Ok(rho * x_minus + (1.0 - rho) * x_plus)
}

/// Smallest `k` in `0..=n` satisfying a monotone predicate.
fn first_count(n: usize, pred: impl Fn(usize) -> bool) -> Option<usize> {
    let (mut lo, mut hi) = (0usize, n + 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    (lo <= n).then_some(lo)
}

/// One component of a mixture handed to [`mixture_cdf_quantiles`].
#[derive(Debug, Clone, PartialEq)]
pub enum CdfDescription {
    /// Empirical CDF of raw values (any order).
    Empirical(Vec<f64>),
    /// CDF implied by a quantile vector summarizing `count` values.
    Quantiles { levels: Vec<f64>, values: Vec<f64>, count: u64 },
}

impl CdfDescription {
    fn support(&self) -> &[f64] {
        match self {
            Self::Empirical(v) => v,
            Self::Quantiles { values, .. } => values,
        }
    }

    // Right value and left limit, by scanning.
    fn eval(&self, x: f64, scheme: Scheme) -> (f64, f64) {
        match self {
            Self::Empirical(v) => {
                let n = v.len() as f64;
                let le = v.iter().filter(|&&d| d <= x).count() as f64;
                let lt = v.iter().filter(|&&d| d < x).count() as f64;
                (le / n, lt / n)
            }
            Self::Quantiles { levels, values, count } => {
                let p: Vec<f64> = levels.iter().map(|&l| trim(l, *count)).collect();
                let m = values.len();
                let right = if x < values[0] {
                    0.0
                } else if x >= values[m - 1] {
                    1.0
                } else {
                    let i = (0..m - 1).rev().find(|&i| values[i] <= x).unwrap();
                    interp(scheme, x, values[i], values[i + 1], p[i], p[i + 1]).unwrap()
                };
                let left = if x <= values[0] {
                    0.0
                } else if x > values[m - 1] {
                    1.0
                } else {
                    let i = (0..m - 1).rev().find(|&i| values[i] < x).unwrap();
                    if values[i + 1] == x {
                        p[i + 1]
                    } else {
                        interp(scheme, x, values[i], values[i + 1], p[i], p[i + 1]).unwrap()
                    }
                };
                (right, left)
            }
        }
    }
}

/// Quantiles of the weighted average of `components`, computed by direct
/// evaluation on the union of their support points.
pub fn mixture_cdf_quantiles(components: &[(f64, CdfDescription)], levels: &[f64], scheme: Scheme) -> Result<Vec<f64>> {
    let total: f64 = components.iter().map(|(w, _)| w).sum();
    if components.is_empty() || !(total > 0.0) {
        return Err(Error::Empty("mixture with no positive weight"));
    }
    let mut support: Vec<f64> = components.iter().flat_map(|(_, c)| c.support().iter().copied()).collect();
    support.sort_by(f64::total_cmp);
    support.dedup();
    let table: Vec<(f64, f64)> = support
        .iter()
        .map(|&x| {
            let (mut up, mut lo) = (0.0, 0.0);
            for (w, c) in components {
                let (u, l) = c.eval(x, scheme);
                up += w * u;
                lo += w * l;
            }
            (up / total, lo / total)
        })
        .collect();
    levels
        .iter()
        .map(|&p| {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::ProbabilityDomain(p));
            }
            let plus = (0..support.len()).find(|&i| table[i].0 >= p).unwrap_or(support.len() - 1);
            let minus = (0..support.len()).rev().find(|&i| table[i].1 <= p).unwrap_or(0);
            if plus == minus {
                return Ok(support[minus]);
            }
            let rho = bracket_weight(table[plus].0, table[minus].1, p, scheme);
            Ok(rho * support[minus] + (1.0 - rho) * support[plus])
        })
        .collect()
}

/// Per-level accuracy of one estimator relative to another.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioCurve {
    pub levels: Vec<f64>,
    pub iq_rmse: Vec<f64>,
    pub eq_rmse: Vec<f64>,
    /// `iq_rmse / eq_rmse`; NaN where `eq_rmse` is zero.
    pub ratio: Vec<f64>,
    /// Delta-method Monte Carlo standard error of `ratio`.
    pub ratio_se: Vec<f64>,
    pub runs: usize,
}

impl RatioCurve {
    /// Largest finite ratio over levels strictly inside (0, 1).
    pub fn max_interior_ratio(&self) -> f64 {
        self.interior().map(|(_, r, _)| r).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Mean ratio over levels in the open interval `(lo, hi)`.
    pub fn mean_ratio_within(&self, lo: f64, hi: f64) -> f64 {
        let inside: Vec<f64> = self
            .levels
            .iter()
            .zip(&self.ratio)
            .filter(|(&p, r)| p > lo && p < hi && r.is_finite())
            .map(|(_, &r)| r)
            .collect();
        inside.iter().sum::<f64>() / inside.len() as f64
    }

    /// `(level, ratio, se)` for finite interior entries.
    pub fn interior(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.levels
            .iter()
            .zip(&self.ratio)
            .zip(&self.ratio_se)
            .filter(|((&p, r), _)| p > 0.0 && p < 1.0 && r.is_finite())
            .map(|((&p, &r), &s)| (p, r, s))
    }
}

/// RMSE of `estimates` and of `references` against `truth`, level by level,
/// and their ratio. Both matrices are runs × levels.
pub fn rmse_ratio(
    levels: &[f64],
    estimates: &[Vec<f64>],
    references: &[Vec<f64>],
    truth: &[f64],
) -> Result<RatioCurve> {
    let runs = estimates.len();
    let m = truth.len();
    if runs == 0 {
        return Err(Error::Dimension("at least one run is required".into()));
    }
    if references.len() != runs || levels.len() != m || estimates.iter().chain(references).any(|row| row.len() != m) {
        return Err(Error::Dimension(format!("expected {runs} runs of {m} levels for both estimators")));
    }
    let r = runs as f64;
    let mut curve = RatioCurve {
        levels: levels.to_vec(),
        iq_rmse: Vec::with_capacity(m),
        eq_rmse: Vec::with_capacity(m),
        ratio: Vec::with_capacity(m),
        ratio_se: Vec::with_capacity(m),
        runs,
    };
    for j in 0..m {
        let a: Vec<f64> = estimates.iter().map(|row| (row[j] - truth[j]).powi(2)).collect();
        let b: Vec<f64> = references.iter().map(|row| (row[j] - truth[j]).powi(2)).collect();
        let ma = a.iter().sum::<f64>() / r;
        let mb = b.iter().sum::<f64>() / r;
        let ratio = if mb == 0.0 { f64::NAN } else { (ma / mb).sqrt() };
        let se = if runs < 2 || !(ma > 0.0) || !(mb > 0.0) {
            f64::NAN
        } else {
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for (x, y) in a.iter().zip(&b) {
                va += (x - ma).powi(2);
                vb += (y - mb).powi(2);
                cov += (x - ma) * (y - mb);
            }
            let d = r - 1.0;
            let (va, vb, cov) = (va / d, vb / d, cov / d);
            let var_log = 0.25 * (va / (ma * ma) + vb / (mb * mb) - 2.0 * cov / (ma * mb)) / r;
            ratio * var_log.max(0.0).sqrt()
        };
        curve.iq_rmse.push(ma.sqrt());
        curve.eq_rmse.push(mb.sqrt());
        curve.ratio.push(ratio);
        curve.ratio_se.push(se);
    }
    Ok(curve)
}
