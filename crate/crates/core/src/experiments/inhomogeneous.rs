//! Server accuracy when agents have different distributions.
//!
//! Agent `a` draws its log10 median `mu_a` from N(M_a, V2), with `M_a` equal
//! to 0 for nominal agents and `outlier_median` for outliers, then draws
//! log10 values from N(mu_a, V1). Agents ship exact empirical quantiles, so
//! all error comes from the server merge.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, LogNormal, Normal};

use super::{run_rng, Replications};
use crate::buffer::ValueTransform;
use crate::error::{Error, Result};
use crate::grid::{GridSpacing, ProbabilityGrid};
use crate::interp::Scheme;
use crate::oracle::{empirical_quantiles, RatioCurve};
use crate::record::SummaryRecord;
use crate::server::{ServerAggregator, ServerConfig};

/// Scale on which the server interpolates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Nominal,
    Log10,
}

impl Scale {
    pub fn name(self) -> &'static str {
        match self {
            Scale::Nominal => "nominal",
            Scale::Log10 => "log10",
        }
    }

    fn transform(self) -> ValueTransform {
        match self {
            Scale::Nominal => ValueTransform::Identity,
            Scale::Log10 => ValueTransform::Log10,
        }
    }
}

/// Order in which agent records reach the server.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordOrder {
    Random,
    /// Ascending agent median.
    SortedByMedian,
}

impl RecordOrder {
    pub fn name(self) -> &'static str {
        match self {
            RecordOrder::Random => "random",
            RecordOrder::SortedByMedian => "sorted",
        }
    }
}

/// V1 = V2 such that an agent's 99th and 1st percentiles differ by a
/// factor of 100: `1 / (2 z^2)` with `z` the standard normal 0.99 quantile.
pub fn design_variance() -> f64 {
    let z = Normal::new(0.0, 1.0).expect("valid").inverse_cdf(0.99);
    0.5 / (z * z)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InhomogeneousBenchConfig {
    pub n_agents: usize,
    pub values_per_agent: usize,
    pub outlier_prob: f64,
    /// `M_a` of outlying agents, in log10 units.
    pub outlier_median: f64,
    /// Within-agent variance of log10 values.
    pub v1: f64,
    /// Variance of agent log10 medians around `M_a`.
    pub v2: f64,
    /// Interior levels of agent records, logit-spaced over `record_bounds`.
    pub record_interior: usize,
    pub record_bounds: (f64, f64),
    pub batch: usize,
    /// Interior levels of the server grid, logit-spaced over `server_bounds`.
    pub server_interior: usize,
    pub server_bounds: (f64, f64),
    pub scale: Scale,
    pub order: RecordOrder,
    pub runs: usize,
    pub seed: u64,
}

impl Default for InhomogeneousBenchConfig {
    fn default() -> Self {
        let v = design_variance();
        Self {
            n_agents: 1000,
            values_per_agent: 1000,
            outlier_prob: 0.01,
            outlier_median: 2.0,
            v1: v,
            v2: v,
            record_interior: 8,
            record_bounds: (0.005, 0.995),
            batch: 100,
            server_interior: 998,
            server_bounds: (1e-6, 1.0 - 1e-6),
            scale: Scale::Log10,
            order: RecordOrder::Random,
            runs: 100,
            seed: 1,
        }
    }
}

impl InhomogeneousBenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 || self.values_per_agent == 0 || self.batch == 0 || self.runs == 0 {
            return Err(Error::Config("agents, values, batch and runs must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.outlier_prob) {
            return Err(Error::Config(format!("outlier probability {} is not in [0, 1]", self.outlier_prob)));
        }
        if !(self.v1 >= 0.0 && self.v2 >= 0.0 && self.outlier_median.is_finite()) {
            return Err(Error::Config("variances must be nonnegative and the outlier median finite".into()));
        }
        Ok(())
    }

    /// Fields that differ from the default, as `name=value` pairs, ignoring
    /// scale, order, runs and seed.
    pub fn overrides(&self) -> Vec<String> {
        let d = Self { scale: self.scale, order: self.order, runs: self.runs, seed: self.seed, ..Self::default() };
        let (a, b) = (serde_json::to_value(self).expect("plain"), serde_json::to_value(&d).expect("plain"));
        let (a, b) = (a.as_object().expect("struct"), b.as_object().expect("struct"));
        a.iter().filter(|(k, v)| b.get(*k) != Some(v)).map(|(k, v)| format!("{k}={v}")).collect()
    }

    pub fn record_grid(&self) -> Result<ProbabilityGrid> {
        ProbabilityGrid::new(GridSpacing::Logit, self.record_interior, self.record_bounds.0, self.record_bounds.1)
    }

    pub fn server_grid(&self) -> Result<ProbabilityGrid> {
        ProbabilityGrid::new(GridSpacing::Logit, self.server_interior, self.server_bounds.0, self.server_bounds.1)
    }

    /// Population quantile of the pooled values; infinite at 1.
    pub fn truth(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return f64::INFINITY;
        }
        let s = (self.v1 + self.v2).sqrt();
        let n = Normal::new(0.0, 1.0).expect("valid");
        if s == 0.0 || self.outlier_prob == 0.0 {
            return 10f64.powf(s * n.inverse_cdf(p));
        }
        let cdf = |y: f64| {
            (1.0 - self.outlier_prob) * n.cdf(y / s) + self.outlier_prob * n.cdf((y - self.outlier_median) / s)
        };
        let (mut lo, mut hi) = (-40.0 * s - 1.0, self.outlier_median.max(0.0) + 40.0 * s + 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * mid.abs().max(1.0) {
                break;
            }
        }
        10f64.powf(0.5 * (lo + hi))
    }
}

/// Q(0.99 | M) / Q(0.01 | M) for an agent with group median log10 `m`,
/// from the log-normal quantile function of its values.
pub fn design_quantile_ratio(cfg: &InhomogeneousBenchConfig, m: f64) -> f64 {
    let ln10 = std::f64::consts::LN_10;
    let q = LogNormal::new(m * ln10, (cfg.v1 + cfg.v2).sqrt() * ln10).expect("valid");
    q.inverse_cdf(0.99) / q.inverse_cdf(0.01)
}

/// The configuration's scale and order only.
pub fn run_inhomogeneous_benchmark(cfg: &InhomogeneousBenchConfig) -> Result<RatioCurve> {
    let mut curves = run_inhomogeneous_variants(cfg, &[(cfg.scale, cfg.order)])?;
    Ok(curves.remove(0))
}

/// One curve per (scale, order) variant, all computed on the same simulated
/// data; `cfg.scale` and `cfg.order` are ignored.
pub fn run_inhomogeneous_variants(
    cfg: &InhomogeneousBenchConfig,
    variants: &[(Scale, RecordOrder)],
) -> Result<Vec<RatioCurve>> {
    cfg.validate()?;
    let record_grid = cfg.record_grid()?;
    let server_grid = cfg.server_grid()?;
    let levels = server_grid.levels().to_vec();
    let mut reps: Vec<Replications> = variants.iter().map(|_| Replications::new(levels.clone())).collect();
    let (sd1, sd2) = (cfg.v1.sqrt(), cfg.v2.sqrt());
    for run in 0..cfg.runs {
        let mut rng = run_rng(cfg.seed, run as u64);
        let mut pooled = Vec::with_capacity(cfg.n_agents * cfg.values_per_agent);
        let mut agents: Vec<(f64, SummaryRecord)> = Vec::with_capacity(cfg.n_agents);
        for _ in 0..cfg.n_agents {
            let m = if rng.random::<f64>() < cfg.outlier_prob { cfg.outlier_median } else { 0.0 };
            let mu = m + sd2 * rng.sample::<f64, _>(StandardNormal);
            let values: Vec<f64> = (0..cfg.values_per_agent)
                .map(|_| 10f64.powf(mu + sd1 * rng.sample::<f64, _>(StandardNormal)))
                .collect();
            let q = empirical_quantiles(&values, record_grid.levels())?;
            agents.push((mu, SummaryRecord::agent_quantiles(values.len() as u64, record_grid.levels().to_vec(), q)));
            pooled.extend(values);
        }
        let mut shuffled: Vec<usize> = (0..agents.len()).collect();
        shuffled.shuffle(&mut rng);
        let mut sorted: Vec<usize> = (0..agents.len()).collect();
        sorted.sort_by(|&a, &b| agents[a].0.total_cmp(&agents[b].0));

        let eq = empirical_quantiles(&pooled, &levels)?;
        let lo = pooled.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = pooled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        drop(pooled);
        for (rep, &(scale, order)) in reps.iter_mut().zip(variants) {
            let config =
                ServerConfig::new(server_grid.clone(), cfg.batch).scheme(Scheme::Logit).transform(scale.transform());
            let mut server = ServerAggregator::new(config)?;
            let sequence = match order {
                RecordOrder::Random => &shuffled,
                RecordOrder::SortedByMedian => &sorted,
            };
            for &i in sequence {
                server.absorb(agents[i].1.clone())?;
            }
            let iq = levels.iter().map(|&p| server.quantile(p)).collect::<Result<Vec<_>>>()?;
            rep.iq.push(iq);
            rep.eq.push(eq.clone());
            rep.extremes.push((lo, hi));
        }
    }
    let truth: Vec<f64> = levels.iter().map(|&p| cfg.truth(p)).collect();
    reps.iter().map(|r| r.curve(&truth)).collect()
}
