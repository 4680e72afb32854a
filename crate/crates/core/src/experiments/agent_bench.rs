//! Single-agent accuracy on i.i.d. samples.

use rand::Rng;
use rand_distr::{Beta, Distribution as _, LogNormal, Normal};
use serde::Serialize;
use statrs::distribution::{self as sd, ContinuousCDF};

use super::{run_rng, Replications};
use crate::agent::{AgentConfig, AgentSketch};
use crate::error::{Error, Result};
use crate::grid::{GridSpacing, ProbabilityGrid};
use crate::interp::Scheme;
use crate::oracle::{empirical_quantiles, RatioCurve};

/// Sampling distributions of the agent benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    /// Standard normal.
    Normal,
    /// Standard log-normal.
    LogNormal,
    /// Beta(9, 2).
    Beta,
}

impl Distribution {
    pub const ALL: [Distribution; 3] = [Distribution::Normal, Distribution::LogNormal, Distribution::Beta];

    pub fn name(self) -> &'static str {
        match self {
            Distribution::Normal => "normal",
            Distribution::LogNormal => "lognormal",
            Distribution::Beta => "beta",
        }
    }

    pub fn sample(self, rng: &mut impl Rng, n: usize) -> Vec<f64> {
        match self {
            Distribution::Normal => Normal::new(0.0, 1.0).expect("valid").sample_iter(rng).take(n).collect(),
            Distribution::LogNormal => LogNormal::new(0.0, 1.0).expect("valid").sample_iter(rng).take(n).collect(),
            Distribution::Beta => Beta::new(9.0, 2.0).expect("valid").sample_iter(rng).take(n).collect(),
        }
    }

    /// Population quantile; infinite at an unbounded end.
    pub fn quantile(self, p: f64) -> f64 {
        match self {
            Distribution::Normal => sd::Normal::new(0.0, 1.0).expect("valid").inverse_cdf(p),
            Distribution::LogNormal => match p {
                0.0 => 0.0,
                1.0 => f64::INFINITY,
                _ => sd::LogNormal::new(0.0, 1.0).expect("valid").inverse_cdf(p),
            },
            Distribution::Beta => match p {
                0.0 => 0.0,
                1.0 => 1.0,
                _ => sd::Beta::new(9.0, 2.0).expect("valid").inverse_cdf(p),
            },
        }
    }
}

/// Grid spacing paired with the interpolation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    UniformLinear,
    LogitLogit,
}

impl Pairing {
    pub fn name(self) -> &'static str {
        match self {
            Pairing::UniformLinear => "uniform-linear",
            Pairing::LogitLogit => "logit-logit",
        }
    }

    pub fn scheme(self) -> Scheme {
        match self {
            Pairing::UniformLinear => Scheme::Linear,
            Pairing::LogitLogit => Scheme::Logit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentBenchConfig {
    pub distribution: Distribution,
    pub sample_size: usize,
    /// Capacity of the raw-value buffer.
    pub buffer_size: usize,
    /// Number of levels in the quantile buffer, ends included.
    pub grid_size: usize,
    pub pairing: Pairing,
    /// Outermost interior levels of a logit grid.
    pub logit_bounds: (f64, f64),
    pub runs: usize,
    pub seed: u64,
    /// Levels to score; `None` scores the sketch's own grid.
    pub eval_levels: Option<Vec<f64>>,
}

impl AgentBenchConfig {
    /// 41-value buffers scored on the sketch grid.
    pub fn new(distribution: Distribution, sample_size: usize, pairing: Pairing, runs: usize, seed: u64) -> Self {
        Self {
            distribution,
            sample_size,
            buffer_size: 41,
            grid_size: 41,
            pairing,
            logit_bounds: (0.005, 0.995),
            runs,
            seed,
            eval_levels: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_size == 0 || self.buffer_size == 0 || self.runs == 0 {
            return Err(Error::Config("sample size, buffer size and runs must be positive".into()));
        }
        if self.grid_size < 3 {
            return Err(Error::Config("the grid needs at least 3 levels".into()));
        }
        Ok(())
    }

    /// `grid_size` levels: uniform `k / (grid_size - 1)`, or logit-spaced
    /// between `logit_bounds` plus the ends.
    pub fn sketch_grid(&self) -> Result<ProbabilityGrid> {
        let interior = self.grid_size - 2;
        match self.pairing {
            Pairing::UniformLinear => {
                let step = 1.0 / (self.grid_size - 1) as f64;
                ProbabilityGrid::new(GridSpacing::Uniform, interior, step, 1.0 - step)
            }
            Pairing::LogitLogit => {
                ProbabilityGrid::new(GridSpacing::Logit, interior, self.logit_bounds.0, self.logit_bounds.1)
            }
        }
    }
}

/// Both 41-level grids together with the 1% and 99% levels, so the two
/// pairings are scored on the same levels.
pub fn comparison_levels() -> Vec<f64> {
    let uniform = ProbabilityGrid::new(GridSpacing::Uniform, 39, 0.025, 0.975).expect("valid grid");
    let logit = ProbabilityGrid::new(GridSpacing::Logit, 39, 0.005, 0.995).expect("valid grid");
    let both = uniform.union(logit.levels()).expect("valid grid");
    both.union(&[0.01, 0.99]).expect("valid grid").levels().to_vec()
}

/// Sketch and exact estimates for every run.
pub fn replicate_agent_benchmark(cfg: &AgentBenchConfig) -> Result<Replications> {
    cfg.validate()?;
    let grid = cfg.sketch_grid()?;
    let levels = match &cfg.eval_levels {
        Some(l) => ProbabilityGrid::explicit(l.clone())?.levels().to_vec(),
        None => grid.levels().to_vec(),
    };
    let mut reps = Replications::new(levels);
    for run in 0..cfg.runs {
        let mut rng = run_rng(cfg.seed, run as u64);
        let data = cfg.distribution.sample(&mut rng, cfg.sample_size);
        let config = AgentConfig::new(grid.clone(), cfg.buffer_size).scheme(cfg.pairing.scheme());
        let mut sketch = AgentSketch::new(config)?;
        for &x in &data {
            sketch.observe(x)?;
        }
        sketch.flush();
        let iq = reps.levels.iter().map(|&p| sketch.quantile(p)).collect::<Result<Vec<_>>>()?;
        let eq = empirical_quantiles(&data, &reps.levels)?;
        let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        reps.iq.push(iq);
        reps.eq.push(eq);
        reps.extremes.push((lo, hi));
    }
    Ok(reps)
}

/// RMSE ratio of the sketch to exact quantiles against population truth.
pub fn run_agent_benchmark(cfg: &AgentBenchConfig) -> Result<RatioCurve> {
    let reps = replicate_agent_benchmark(cfg)?;
    let truth: Vec<f64> = reps.levels.iter().map(|&p| cfg.distribution.quantile(p)).collect();
    reps.curve(&truth)
}

/// Mean ratio over the middle levels at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub sample_size: usize,
    /// Mean ratio over levels in (0.025, 0.975).
    pub mean_ratio: f64,
    /// Mean of the per-level standard errors, an upper bound on the
    /// standard error of `mean_ratio`.
    pub mean_ratio_se: f64,
    pub runs: usize,
    #[serde(skip)]
    pub curve: RatioCurve,
}

/// Log-normal data through buffers of `buffers` values on a logit grid with
/// logit interpolation, at each sample size.
pub fn run_scaling_benchmark(sizes: &[usize], buffers: usize, runs: usize, seed: u64) -> Result<Vec<ScalingRow>> {
    if buffers < 3 {
        return Err(Error::Config("buffers must hold at least 3 values".into()));
    }
    for &n in sizes {
        let mut k = n;
        while k > 1 && k % 10 == 0 {
            k /= 10;
        }
        if k != 1 || n > 100_000 {
            return Err(Error::Config(format!("sample sizes must be powers of 10 up to 10^5, got {n}")));
        }
    }
    let lo = 0.5 / buffers as f64;
    sizes
        .iter()
        .map(|&n| {
            let cfg = AgentBenchConfig {
                buffer_size: buffers,
                grid_size: buffers,
                logit_bounds: (lo, 1.0 - lo),
                ..AgentBenchConfig::new(Distribution::LogNormal, n, Pairing::LogitLogit, runs, seed)
            };
            let curve = run_agent_benchmark(&cfg)?;
            let se: Vec<f64> = curve
                .interior()
                .filter(|&(p, _, s)| p > 0.025 && p < 0.975 && s.is_finite())
                .map(|(_, _, s)| s)
                .collect();
            Ok(ScalingRow {
                sample_size: n,
                mean_ratio: curve.mean_ratio_within(0.025, 0.975),
                mean_ratio_se: if se.is_empty() { 0.0 } else { se.iter().sum::<f64>() / se.len() as f64 },
                runs,
                curve,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_have_the_configured_shape() {
        let u = AgentBenchConfig::new(Distribution::Normal, 10, Pairing::UniformLinear, 1, 0).sketch_grid().unwrap();
        assert_eq!(u.len(), 41);
        assert!((u.levels()[1] - 0.025).abs() < 1e-15);
        let l = AgentBenchConfig::new(Distribution::Normal, 10, Pairing::LogitLogit, 1, 0).sketch_grid().unwrap();
        assert_eq!(l.len(), 41);
        assert_eq!(l.levels()[1], 0.005);
        let f = comparison_levels();
        assert!(f.contains(&0.99) && f.contains(&0.01) && f.contains(&0.5));
    }

    #[test]
    fn truth_quantiles() {
        assert!((Distribution::Normal.quantile(0.975) - 1.959963984540054).abs() < 1e-9);
        assert!((Distribution::LogNormal.quantile(0.5) - 1.0).abs() < 1e-12);
        assert!(Distribution::Normal.quantile(1.0).is_infinite());
        // median of beta(9, 2), by bisection of its closed-form CDF
        let cdf = |x: f64| 10.0 * x.powi(9) - 9.0 * x.powi(10);
        let (mut a, mut b) = (0.0, 1.0);
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if cdf(m) < 0.5 {
                a = m
            } else {
                b = m
            }
        }
        assert!((Distribution::Beta.quantile(0.5) - a).abs() < 1e-8);
    }

    #[test]
    fn small_samples_are_exact() {
        for d in Distribution::ALL {
            let cfg = AgentBenchConfig::new(d, 41, Pairing::LogitLogit, 5, 3);
            let reps = replicate_agent_benchmark(&cfg).unwrap();
            assert_eq!(reps.iq, reps.eq);
            assert!(reps.extremes_exact());
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = AgentBenchConfig::new(Distribution::Beta, 300, Pairing::UniformLinear, 3, 11);
        let a = format!("{:?}", run_agent_benchmark(&cfg).unwrap());
        assert_eq!(a, format!("{:?}", run_agent_benchmark(&cfg).unwrap()));
    }

    #[test]
    fn scaling_rejects_bad_sizes() {
        assert!(run_scaling_benchmark(&[500], 1000, 1, 0).is_err());
        assert!(run_scaling_benchmark(&[1_000_000], 1000, 1, 0).is_err());
    }
}
