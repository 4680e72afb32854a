//! Seeded Monte Carlo studies comparing sketch estimates with exact
//! empirical quantiles.
//!
//! Every run draws from its own ChaCha8 stream derived from the master seed,
//! so results do not depend on the order in which runs execute.

mod agent_bench;
mod hierarchy;
mod inhomogeneous;
mod output;

pub use agent_bench::{
    comparison_levels, replicate_agent_benchmark, run_agent_benchmark, run_scaling_benchmark, AgentBenchConfig,
    Distribution, Pairing, ScalingRow,
};
pub use hierarchy::{run_hierarchy_benchmark, HierarchyConfig, HierarchyReport, HierarchyRow, Stage};
pub use inhomogeneous::{
    design_quantile_ratio, design_variance, run_inhomogeneous_benchmark, run_inhomogeneous_variants,
    InhomogeneousBenchConfig, RecordOrder, Scale,
};
pub use output::{write_curve_csv, write_metadata, write_table_csv};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::oracle::{rmse_ratio, RatioCurve};

/// Name of the generator recorded in benchmark metadata.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha), seed_from_u64(seed), stream = run index";

/// Generator for one run.
pub fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

/// Sketch and exact estimates from repeated runs, one row per run.
#[derive(Debug, Clone, PartialEq)]
pub struct Replications {
    pub levels: Vec<f64>,
    pub iq: Vec<Vec<f64>>,
    pub eq: Vec<Vec<f64>>,
    /// True sample (min, max) of each run.
    pub extremes: Vec<(f64, f64)>,
}

impl Replications {
    fn new(levels: Vec<f64>) -> Self {
        Self { levels, iq: Vec::new(), eq: Vec::new(), extremes: Vec::new() }
    }

    /// Whether both estimators return the sample extremes at 0 and 1 in
    /// every run.
    pub fn extremes_exact(&self) -> bool {
        let at = |p: f64| self.levels.iter().position(|&l| l == p);
        let (lo, hi) = (at(0.0), at(1.0));
        self.extremes.iter().enumerate().all(|(r, &(min, max))| {
            lo.is_none_or(|j| self.iq[r][j] == min && self.eq[r][j] == min)
                && hi.is_none_or(|j| self.iq[r][j] == max && self.eq[r][j] == max)
        })
    }

    /// RMSE ratio against `truth`. Levels whose truth is not finite (the
    /// unbounded ends of a distribution) are scored against the mean exact
    /// estimate instead.
    pub fn curve(&self, truth: &[f64]) -> Result<RatioCurve> {
        let runs = self.eq.len() as f64;
        let truth: Vec<f64> = truth
            .iter()
            .enumerate()
            .map(|(j, &t)| if t.is_finite() { t } else { self.eq.iter().map(|row| row[j]).sum::<f64>() / runs })
            .collect();
        rmse_ratio(&self.levels, &self.iq, &self.eq, &truth)
    }
}
