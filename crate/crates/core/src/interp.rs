//! CDF evaluation and inversion.
//!
//! A quantile vector `(Q_1..Q_M)` on levels `(p_1..p_M)` describes a CDF that
//! is 0 below `Q_1`, 1 from `Q_M` on, and interpolates the trimmed levels
//! `p*_m = clamp(p_m, 0.5/T, 1 - 0.5/T)` in between. Trimming leaves jumps of
//! `0.5/T` at the extremes, so the minimum and maximum stay exact under
//! repeated averaging. A batch of raw values contributes its two-sided
//! empirical CDF. Several such sources are averaged with count weights in a
//! [`MergedCdf`] and inverted level by level with bracketing values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interpolation used between adjacent stored quantiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Straight lines in probability.
    Linear,
    /// Straight lines in log-odds, `g(p) = ln(p / (1 - p))`.
    Logit,
}

/// Log-odds `ln(p / (1 - p))`.
pub fn logit(p: f64) -> f64 {
    p.ln() - (-p).ln_1p()
}

/// Inverse of [`logit`].
pub fn inv_logit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Value at `x` of the curve through `(x0, p0)` and `(x1, p1)`.
///
/// Both schemes return `p0` and `p1` exactly at the endpoints. The logit
/// scheme needs `0 < p0, p1 < 1`.
pub fn interp(scheme: Scheme, x: f64, x0: f64, x1: f64, p0: f64, p1: f64) -> Result<f64> {
    if !(x0 < x1) {
        return Err(Error::DegenerateInterval { x0, x1 });
    }
    let t = (x - x0) / (x1 - x0);
    if scheme == Scheme::Logit {
        for p in [p0, p1] {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::ProbabilityDomain(p));
            }
        }
    }
    Ok(match scheme {
        Scheme::Linear => blend_linear(t, p0, p1),
        Scheme::Logit => blend_logit(t, p0, p1, logit(p0), logit(p1)),
    })
}

fn blend_linear(t: f64, p0: f64, p1: f64) -> f64 {
    if t <= 0.0 {
        return p0;
    }
    if t >= 1.0 {
        return p1;
    }
    let (lo, hi) = if p0 <= p1 { (p0, p1) } else { (p1, p0) };
    (p0 + (p1 - p0) * t).clamp(lo, hi)
}

// `g0`, `g1` are the logits of `p0`, `p1`.
fn blend_logit(t: f64, p0: f64, p1: f64, g0: f64, g1: f64) -> f64 {
    if t <= 0.0 {
        return p0;
    }
    if t >= 1.0 {
        return p1;
    }
    let (lo, hi) = if p0 <= p1 { (p0, p1) } else { (p1, p0) };
    inv_logit(g0 + (g1 - g0) * t).clamp(lo, hi)
}

/// `p` trimmed to `[0.5/count, 1 - 0.5/count]`.
pub fn trim(p: f64, count: u64) -> f64 {
    let half = 0.5 / count as f64;
    p.clamp(half, 1.0 - half)
}

/// The CDF implied by a quantile vector, with its trimmed levels cached.
#[derive(Debug, Clone)]
pub struct QuantileCdf<'a> {
    values: &'a [f64],
    trimmed: Vec<f64>,
    // logits of `trimmed`, filled for the logit scheme only
    log_odds: Vec<f64>,
    count: u64,
    scheme: Scheme,
}

impl<'a> QuantileCdf<'a> {
    pub fn new(levels: &[f64], values: &'a [f64], count: u64, scheme: Scheme) -> Result<Self> {
        if values.is_empty() || count == 0 {
            return Err(Error::Empty("quantile CDF needs values and a positive count"));
        }
        if levels.len() != values.len() {
            return Err(Error::Dimension(format!("{} levels for {} quantile values", levels.len(), values.len())));
        }
        let trimmed: Vec<f64> = levels.iter().map(|&p| trim(p, count)).collect();
        let log_odds = match scheme {
            Scheme::Logit => trimmed.iter().map(|&p| logit(p)).collect(),
            Scheme::Linear => Vec::new(),
        };
        Ok(Self { values, trimmed, log_odds, count, scheme })
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn values(&self) -> &[f64] {
        self.values
    }

    /// Right-continuous value `F(x)`. A run of tied quantiles is a jump to
    /// the largest level carried by the tie.
    pub fn eval(&self, x: f64) -> f64 {
        let v = self.values;
        let last = v.len() - 1;
        if x < v[0] {
            return 0.0;
        }
        if x >= v[last] {
            return 1.0;
        }
        let m = v.partition_point(|&q| q <= x) - 1;
        self.segment(m, x)
    }

    /// Left limit `F(x-)`.
    pub fn eval_left(&self, x: f64) -> f64 {
        let v = self.values;
        let last = v.len() - 1;
        if x <= v[0] {
            return 0.0;
        }
        if x > v[last] {
            return 1.0;
        }
        let m = v.partition_point(|&q| q < x) - 1;
        if v[m + 1] == x {
            return self.trimmed[m + 1];
        }
        self.segment(m, x)
    }

    fn segment(&self, m: usize, x: f64) -> f64 {
        // v[m] <= x < v[m + 1], so the interval has positive width and the
        // trimmed levels lie strictly inside (0, 1).
        let (x0, x1) = (self.values[m], self.values[m + 1]);
        let t = (x - x0) / (x1 - x0);
        let (p0, p1) = (self.trimmed[m], self.trimmed[m + 1]);
        match self.scheme {
            Scheme::Linear => blend_linear(t, p0, p1),
            Scheme::Logit => blend_logit(t, p0, p1, self.log_odds[m], self.log_odds[m + 1]),
        }
    }
}

/// Right-continuous CDF of a quantile vector at `x`.
pub fn eval_quantile_cdf(levels: &[f64], values: &[f64], count: u64, scheme: Scheme, x: f64) -> Result<f64> {
    Ok(QuantileCdf::new(levels, values, count, scheme)?.eval(x))
}

/// `(|{d <= x}| / n, |{d < x}| / n)` for unsorted `data`.
pub fn eval_empirical_cdf(data: &[f64], x: f64) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::Empty("empirical CDF of no data"));
    }
    let le = data.iter().filter(|&&d| d <= x).count();
    let lt = data.iter().filter(|&&d| d < x).count();
    let n = data.len() as f64;
    Ok((le as f64 / n, lt as f64 / n))
}

#[derive(Debug, Clone)]
enum Source<'a> {
    Quantiles(QuantileCdf<'a>),
    /// Sorted raw values.
    Empirical(&'a [f64]),
}

/// Count-weighted average of quantile and empirical CDFs.
///
/// The empirical parts enter through their integer counts, so a merge of
/// raw data alone reproduces `k / n` bit for bit.
#[derive(Debug, Clone)]
pub struct MergedCdf<'a> {
    sources: Vec<Source<'a>>,
    total: u64,
    scheme: Scheme,
}

/// A merged CDF tabulated at its support points.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportTable {
    pub support: Vec<f64>,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
}

impl<'a> MergedCdf<'a> {
    pub fn new(scheme: Scheme) -> Self {
        Self { sources: Vec::new(), total: 0, scheme }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Adds the CDF of a quantile vector, weighted by `count`.
    pub fn push_quantiles(&mut self, levels: &[f64], values: &'a [f64], count: u64) -> Result<()> {
        let cdf = QuantileCdf::new(levels, values, count, self.scheme)?;
        self.total += count;
        self.sources.push(Source::Quantiles(cdf));
        Ok(())
    }

    /// Adds the empirical CDF of `sorted`, weighted by its length. Empty
    /// slices are ignored.
    pub fn push_empirical(&mut self, sorted: &'a [f64]) {
        debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
        if !sorted.is_empty() {
            self.total += sorted.len() as u64;
            self.sources.push(Source::Empirical(sorted));
        }
    }

    pub fn total_weight(&self) -> u64 {
        self.total
    }

    /// `(F+(x), F-(x))`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let mut upper = 0.0;
        let mut lower = 0.0;
        for s in &self.sources {
            match s {
                Source::Quantiles(q) => {
                    let w = q.count() as f64;
                    upper += w * q.eval(x);
                    lower += w * q.eval_left(x);
                }
                Source::Empirical(d) => {
                    upper += d.partition_point(|&v| v <= x) as f64;
                    lower += d.partition_point(|&v| v < x) as f64;
                }
            }
        }
        let w = self.total as f64;
        (upper / w, lower / w)
    }

    /// Sorted distinct values of every source.
    pub fn support(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .sources
            .iter()
            .flat_map(|s| match s {
                Source::Quantiles(q) => q.values().iter(),
                Source::Empirical(d) => d.iter(),
            })
            .copied()
            .collect();
        all.sort_by(f64::total_cmp);
        all.dedup_by(|a, b| a == b);
        all
    }

    pub fn tabulate(&self) -> Result<SupportTable> {
        if self.total == 0 {
            return Err(Error::Empty("merged CDF has zero total weight"));
        }
        let support = self.support();
        let (upper, lower) = support.iter().map(|&x| self.eval(x)).unzip();
        Ok(SupportTable { support, upper, lower })
    }

    /// Inverts at every level of `levels`.
    pub fn quantiles(&self, levels: &[f64]) -> Result<Vec<f64>> {
        let table = self.tabulate()?;
        levels.iter().map(|&p| invert_merged_cdf(&table, p, self.scheme)).collect()
    }
}

/// Quantile at level `p` of a tabulated merged CDF.
///
/// With `x+` the smallest support point where `F+ >= p` and `x-` the largest
/// where `F- <= p`, returns `x-` when they coincide and otherwise
/// `rho * x- + (1 - rho) * x+`, where
/// `rho = (h(F+(x+)) - h(p)) / (h(F+(x+)) - h(F-(x-)))` and `h` is the
/// identity (linear) or the logit. The logit form falls back to the linear
/// one when an end value is exactly 0 or 1, and a zero denominator gives the
/// midpoint.
pub fn invert_merged_cdf(table: &SupportTable, p: f64, scheme: Scheme) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityDomain(p));
    }
    let n = table.support.len();
    if n == 0 {
        return Err(Error::Empty("inversion over an empty support"));
    }
    let plus = table.upper.partition_point(|&f| f < p).min(n - 1);
    let minus = table.lower.partition_point(|&f| f <= p).saturating_sub(1);
    let (xp, xm) = (table.support[plus], table.support[minus]);
    if plus == minus {
        return Ok(xm);
    }
    let rho = bracket_weight(table.upper[plus], table.lower[minus], p, scheme);
    Ok(rho * xm + (1.0 - rho) * xp)
}

/// Weight given to `x-` when blending the two brackets.
pub(crate) fn bracket_weight(f_plus: f64, f_minus: f64, p: f64, scheme: Scheme) -> f64 {
    let interior = |f: f64| f > 0.0 && f < 1.0;
    let (num, den) = match scheme {
        Scheme::Logit if interior(f_plus) && interior(f_minus) && interior(p) => {
            let gp = logit(f_plus);
            (gp - logit(p), gp - logit(f_minus))
        }
        _ => (f_plus - p, f_plus - f_minus),
    };
    if den == 0.0 {
        0.5
    } else {
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_endpoint_and_midpoint() {
        assert_eq!(interp(Scheme::Linear, 1.0, 1.0, 3.0, 0.2, 0.4).unwrap(), 0.2);
        let mid = interp(Scheme::Linear, 2.0, 1.0, 3.0, 0.2, 0.4).unwrap();
        assert!((mid - 0.3).abs() < 1e-15);
    }

    #[test]
    fn logit_midpoint() {
        // g(0.5) = 0, g(0.9) = ln 9, halfway is ln 3 and inv_logit(ln 3) = 3/4
        let p = interp(Scheme::Logit, 0.5, 0.0, 1.0, 0.5, 0.9).unwrap();
        assert!((p - 0.75).abs() < 1e-12, "{p}");
    }

    #[test]
    fn interp_errors() {
        assert!(matches!(interp(Scheme::Linear, 1.0, 1.0, 1.0, 0.2, 0.4), Err(Error::DegenerateInterval { .. })));
        assert!(matches!(interp(Scheme::Logit, 0.5, 0.0, 1.0, 0.0, 0.4), Err(Error::ProbabilityDomain(_))));
        assert!(interp(Scheme::Linear, 0.5, 0.0, 1.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn logit_round_trip_accuracy() {
        let mut p = 1e-9;
        while p < 1.0 - 1e-9 {
            assert!((inv_logit(logit(p)) - p).abs() <= 1e-12, "p = {p}");
            p += 9.7e-4;
        }
        for p in [1e-9, 1.0 - 1e-9, 0.5, 1e-6, 1.0 - 1e-6] {
            assert!((inv_logit(logit(p)) - p).abs() <= 1e-12, "p = {p}");
        }
    }

    #[test]
    fn quantile_cdf_cases() {
        let levels = [0.0, 1.0];
        let values = [0.0, 10.0];
        // trimmed levels are (0.25, 0.75) for T = 2
        let f = |x| eval_quantile_cdf(&levels, &values, 2, Scheme::Linear, x).unwrap();
        assert_eq!(f(-1.0), 0.0);
        assert_eq!(f(10.0), 1.0);
        assert_eq!(f(11.0), 1.0);
        assert_eq!(f(5.0), 0.5);
        assert_eq!(f(0.0), 0.25);
        assert!(eval_quantile_cdf(&levels, &[], 2, Scheme::Linear, 0.0).is_err());
        assert!(eval_quantile_cdf(&levels, &values, 0, Scheme::Linear, 0.0).is_err());
    }

    #[test]
    fn tied_quantiles_jump_to_highest_level() {
        let levels = [0.0, 0.25, 0.5, 0.75, 1.0];
        let values = [1.0, 2.0, 2.0, 2.0, 3.0];
        let q = QuantileCdf::new(&levels, &values, 1000, Scheme::Linear).unwrap();
        assert_eq!(q.eval(2.0), 0.75);
        assert_eq!(q.eval_left(2.0), 0.25);
        assert_eq!(q.eval_left(1.0), 0.0);
        assert_eq!(q.eval(1.0), 0.0005);
        assert_eq!(q.eval_left(3.0), 0.9995);
    }

    #[test]
    fn empirical_cdf_cases() {
        let d = [3.0, 1.0, 2.0];
        assert_eq!(eval_empirical_cdf(&d, 2.0).unwrap(), (2.0 / 3.0, 1.0 / 3.0));
        assert_eq!(eval_empirical_cdf(&d, 0.0).unwrap(), (0.0, 0.0));
        assert_eq!(eval_empirical_cdf(&d, 3.0).unwrap(), (1.0, 2.0 / 3.0));
        assert!(eval_empirical_cdf(&[], 3.0).is_err());
    }

    #[test]
    fn inversion_of_pure_empirical() {
        let d: Vec<f64> = (1..=10).map(f64::from).collect();
        let mut cdf = MergedCdf::new(Scheme::Linear);
        cdf.push_empirical(&d);
        let t = cdf.tabulate().unwrap();
        assert_eq!(invert_merged_cdf(&t, 0.25, Scheme::Linear).unwrap(), 3.0);
        assert_eq!(invert_merged_cdf(&t, 0.0, Scheme::Linear).unwrap(), 1.0);
        assert_eq!(invert_merged_cdf(&t, 0.5, Scheme::Linear).unwrap(), 5.5);
        assert_eq!(invert_merged_cdf(&t, 1.0, Scheme::Linear).unwrap(), 10.0);
        assert_eq!(invert_merged_cdf(&t, 0.5, Scheme::Logit).unwrap(), 5.5);
        assert!(matches!(invert_merged_cdf(&t, 1.5, Scheme::Linear), Err(Error::ProbabilityDomain(_))));
        let empty = SupportTable { support: vec![], upper: vec![], lower: vec![] };
        assert!(invert_merged_cdf(&empty, 0.5, Scheme::Linear).is_err());
        assert!(MergedCdf::new(Scheme::Linear).tabulate().is_err());
    }

    fn random_cdf() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, u64, Vec<f64>)> {
        (
            prop::collection::vec(-100.0f64..100.0, 3..12),
            prop::collection::vec(0.01f64..0.99, 1..6),
            1u64..500,
            prop::collection::vec(-120.0f64..120.0, 0..30),
        )
            .prop_map(|(mut vals, mut inner, count, mut raw)| {
                vals.sort_by(f64::total_cmp);
                inner.sort_by(f64::total_cmp);
                inner.dedup();
                let mut levels = vec![0.0];
                levels.extend(inner);
                levels.push(1.0);
                vals.truncate(levels.len());
                while vals.len() < levels.len() {
                    vals.push(*vals.last().unwrap());
                }
                raw.sort_by(f64::total_cmp);
                (levels, vals, count, raw)
            })
    }

    proptest! {
        #[test]
        fn interp_is_monotone_and_bounded(
            x0 in -50.0f64..50.0,
            w in 0.001f64..100.0,
            a in 0.0f64..1.0,
            b in 0.0f64..1.0,
            p0 in 0.001f64..0.999,
            p1 in 0.001f64..0.999,
        ) {
            let x1 = x0 + w;
            let (xa, xb) = if a <= b { (x0 + a * w, x0 + b * w) } else { (x0 + b * w, x0 + a * w) };
            for scheme in [Scheme::Linear, Scheme::Logit] {
                let fa = interp(scheme, xa, x0, x1, p0, p1).unwrap();
                let fb = interp(scheme, xb, x0, x1, p0, p1).unwrap();
                prop_assert!(fa >= p0.min(p1) && fa <= p0.max(p1));
                if p0 <= p1 { prop_assert!(fa <= fb); } else { prop_assert!(fa >= fb); }
            }
            prop_assert_eq!(interp(Scheme::Linear, x0, x0, x1, p0, p1).unwrap(),
                            interp(Scheme::Logit, x0, x0, x1, p0, p1).unwrap());
            prop_assert_eq!(interp(Scheme::Linear, x1, x0, x1, p0, p1).unwrap(),
                            interp(Scheme::Logit, x1, x0, x1, p0, p1).unwrap());
        }

        #[test]
        fn inversion_is_monotone_in_p((levels, vals, count, raw) in random_cdf(), logit in any::<bool>()) {
            let scheme = if logit { Scheme::Logit } else { Scheme::Linear };
            let mut cdf = MergedCdf::new(scheme);
            cdf.push_quantiles(&levels, &vals, count).unwrap();
            cdf.push_empirical(&raw);
            let t = cdf.tabulate().unwrap();
            for w in t.upper.windows(2) { prop_assert!(w[0] <= w[1]); }
            for (u, l) in t.upper.iter().zip(&t.lower) { prop_assert!(l <= u); }
            prop_assert_eq!(*t.upper.last().unwrap(), 1.0);
            prop_assert_eq!(t.lower[0], 0.0);
            let mut prev = f64::NEG_INFINITY;
            for k in 0..=200 {
                let q = invert_merged_cdf(&t, k as f64 / 200.0, scheme).unwrap();
                prop_assert!(q >= prev, "quantile function decreased at k = {}", k);
                prev = q;
            }
        }

        #[test]
        fn empirical_round_trip(mut vals in prop::collection::vec(-1e6f64..1e6, 1..60)) {
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            let n = vals.len();
            let mut cdf = MergedCdf::new(Scheme::Linear);
            cdf.push_empirical(&vals);
            let t = cdf.tabulate().unwrap();
            for k in 1..=n {
                let p = k as f64 / n as f64;
                let v = invert_merged_cdf(&t, p, Scheme::Linear).unwrap();
                let (up, lo) = eval_empirical_cdf(&vals, v).unwrap();
                prop_assert!(lo <= p && p <= up, "p = {}, v = {}, F- = {}, F+ = {}", p, v, lo, up);
            }
        }
    }
}
