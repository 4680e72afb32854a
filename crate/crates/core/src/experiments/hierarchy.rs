//! Hourly agent records rolled up into hourly and daily group records.
//!
//! The data are synthetic: each agent has a log-normal bulk with a slower
//! log-normal component, and hourly volumes that rise during working hours.
//! Every stage interpolates linearly on log10 values.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::run_rng;
use crate::agent::{AgentConfig, AgentSketch};
use crate::buffer::ValueTransform;
use crate::error::{Error, Result};
use crate::grid::ProbabilityGrid;
use crate::interp::Scheme;
use crate::oracle::empirical_quantiles;
use crate::query::record_quantiles;
use crate::record::SummaryRecord;
use crate::server::{ServerAggregator, ServerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    AgentHourly,
    GroupHourly,
    GroupDaily,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::AgentHourly, Stage::GroupHourly, Stage::GroupDaily];

    pub fn name(self) -> &'static str {
        match self {
            Stage::AgentHourly => "agent-hourly",
            Stage::GroupHourly => "group-hourly",
            Stage::GroupDaily => "group-daily",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HierarchyConfig {
    pub n_agents: usize,
    pub hours_per_day: usize,
    pub days: usize,
    /// Largest hourly count per agent during working hours (8 to 17).
    pub busy_max: usize,
    /// Largest hourly count per agent outside working hours.
    pub quiet_max: usize,
    /// Size of every raw-value buffer, record batch and quantile grid step.
    pub buffer: usize,
    /// Levels shipped in every record.
    pub record_levels: Vec<f64>,
    pub seed: u64,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        Self {
            n_agents: 15,
            hours_per_day: 24,
            days: 30,
            busy_max: 40,
            quiet_max: 6,
            buffer: 100,
            record_levels: vec![0.0, 0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95, 0.99, 0.999, 1.0],
            seed: 1,
        }
    }
}

impl HierarchyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 || self.hours_per_day == 0 || self.days == 0 || self.buffer < 3 {
            return Err(Error::Config("agents, hours and days must be positive and buffers at least 3".into()));
        }
        ProbabilityGrid::explicit(self.record_levels.clone())?;
        Ok(())
    }

    /// Uniform levels `k / buffer` together with the record levels.
    pub fn grid(&self) -> Result<ProbabilityGrid> {
        let uniform: Vec<f64> = (0..=self.buffer).map(|k| k as f64 / self.buffer as f64).collect();
        ProbabilityGrid::explicit(uniform)?.union(&self.record_levels)
    }
}

/// Agreement with exact quantiles for one stage and level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HierarchyRow {
    pub stage: Stage,
    pub level: f64,
    /// Records compared.
    pub cases: usize,
    /// Records within 10% of the exact quantile of the values they cover.
    pub within: usize,
    pub fraction: f64,
    /// Largest relative difference from the exact quantile.
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HierarchyReport {
    pub rows: Vec<HierarchyRow>,
    /// Agent-hour records shipped raw.
    pub raw_agent_records: usize,
    pub agent_records: usize,
    /// Largest relative difference at any level between a raw agent-hour
    /// record and the exact quantiles of its values.
    pub raw_max_deviation: f64,
}

impl HierarchyReport {
    pub fn fraction(&self, stage: Stage, level: f64) -> Option<f64> {
        self.rows.iter().find(|r| r.stage == stage && r.level == level).map(|r| r.fraction)
    }
}

// Per-agent parameters: log10 median, log10 spread, slow-component share.
fn agent_profile(rng: &mut impl Rng) -> (f64, f64, f64) {
    let median = 2.3 + 0.25 * rng.sample::<f64, _>(StandardNormal);
    (median, rng.random_range(0.25..0.45), rng.random_range(0.02..0.08))
}

fn draw_value(rng: &mut impl Rng, (median, spread, slow): (f64, f64, f64)) -> f64 {
    let shift = if rng.random::<f64>() < slow { 1.0 } else { 0.0 };
    10f64.powf(median + shift + spread * rng.sample::<f64, _>(StandardNormal))
}

/// Exact quantiles on the log10 scale, mapped back; the reference each
/// stage should reproduce.
fn oracle(values: &[f64], levels: &[f64]) -> Result<Vec<f64>> {
    let logs: Vec<f64> = values.iter().map(|v| v.log10()).collect();
    let q = empirical_quantiles(&logs, levels)?;
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    Ok(levels
        .iter()
        .zip(q)
        .map(|(&p, y)| match p {
            0.0 => lo,
            1.0 => hi,
            _ => 10f64.powf(y),
        })
        .collect())
}

struct Tally {
    cases: Vec<usize>,
    within: Vec<usize>,
    worst: Vec<f64>,
}

impl Tally {
    fn new(m: usize) -> Self {
        Self { cases: vec![0; m], within: vec![0; m], worst: vec![0.0; m] }
    }

    fn add(&mut self, record: &SummaryRecord, values: &[f64], levels: &[f64]) -> Result<()> {
        let est = record_quantiles(record, levels, Scheme::Linear, ValueTransform::Log10)?;
        for (j, (e, t)) in est.iter().zip(oracle(values, levels)?).enumerate() {
            self.cases[j] += 1;
            self.worst[j] = self.worst[j].max((e - t).abs() / t.abs());
            if (e - t).abs() <= 0.1 * t.abs() {
                self.within[j] += 1;
            }
        }
        Ok(())
    }
}

/// Runs the three-stage pipeline over synthetic traffic.
pub fn run_hierarchy_benchmark(cfg: &HierarchyConfig) -> Result<HierarchyReport> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let report = ProbabilityGrid::explicit(cfg.record_levels.clone())?;
    let levels = report.levels();
    let capacity = levels.len();
    let agent_config = AgentConfig::new(grid.clone(), cfg.buffer)
        .scheme(Scheme::Linear)
        .transform(ValueTransform::Log10)
        .report(report.clone())
        .record_capacity(capacity);
    let server_config = ServerConfig::new(grid, cfg.buffer)
        .scheme(Scheme::Linear)
        .transform(ValueTransform::Log10)
        .report(report.clone())
        .record_capacity(capacity);

    let mut rng = run_rng(cfg.seed, 0);
    let profiles: Vec<_> = (0..cfg.n_agents).map(|_| agent_profile(&mut rng)).collect();
    let mut tallies: Vec<Tally> = Stage::ALL.iter().map(|_| Tally::new(levels.len())).collect();
    let (mut raw_records, mut agent_records, mut raw_dev) = (0, 0, 0.0f64);

    for _day in 0..cfg.days {
        let mut daily = ServerAggregator::new(server_config.clone())?;
        let mut day_values = Vec::new();
        for hour in 0..cfg.hours_per_day {
            let max = if (8..18).contains(&hour) { cfg.busy_max } else { cfg.quiet_max };
            let mut hourly = ServerAggregator::new(server_config.clone())?;
            let mut hour_values = Vec::new();
            for &profile in &profiles {
                let n = rng.random_range(0..=max);
                if n == 0 {
                    continue;
                }
                let values: Vec<f64> = (0..n).map(|_| draw_value(&mut rng, profile)).collect();
                let mut agent = AgentSketch::new(agent_config.clone())?;
                for &v in &values {
                    agent.observe(v)?;
                }
                let record = agent.emit_record();
                agent_records += 1;
                if record.is_raw() {
                    raw_records += 1;
                    let est = record_quantiles(&record, levels, Scheme::Linear, ValueTransform::Log10)?;
                    for (e, t) in est.iter().zip(oracle(&values, levels)?) {
                        raw_dev = raw_dev.max((e - t).abs() / t.abs());
                    }
                }
                tallies[0].add(&record, &values, levels)?;
                hourly.absorb(record)?;
                hour_values.extend(values);
            }
            if hour_values.is_empty() {
                continue;
            }
            let record = hourly.emit_record()?;
            tallies[1].add(&record, &hour_values, levels)?;
            daily.absorb(record)?;
            day_values.extend(hour_values);
        }
        if day_values.is_empty() {
            continue;
        }
        let record = daily.emit_record()?;
        tallies[2].add(&record, &day_values, levels)?;
    }

    let mut rows = Vec::new();
    for (stage, tally) in Stage::ALL.iter().zip(&tallies) {
        for (j, &level) in levels.iter().enumerate() {
            let cases = tally.cases[j];
            rows.push(HierarchyRow {
                stage: *stage,
                level,
                cases,
                within: tally.within[j],
                max_rel_error: tally.worst[j],
                fraction: if cases == 0 { f64::NAN } else { tally.within[j] as f64 / cases as f64 },
            });
        }
    }
    Ok(HierarchyReport { rows, raw_agent_records: raw_records, agent_records, raw_max_deviation: raw_dev })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_contains_record_levels() {
        let cfg = HierarchyConfig::default();
        let g = cfg.grid().unwrap();
        assert!(ProbabilityGrid::explicit(cfg.record_levels.clone()).unwrap().is_subset_of(&g));
        assert_eq!(g.len(), 102);
    }

    #[test]
    fn single_agent_hour_is_exact() {
        for n in [5, 11, 12, 60, 100] {
            let cfg = HierarchyConfig {
                n_agents: 1,
                hours_per_day: 1,
                days: 1,
                busy_max: n,
                quiet_max: n,
                seed: n as u64,
                ..Default::default()
            };
            let r = run_hierarchy_benchmark(&cfg).unwrap();
            for row in r.rows.iter().filter(|r| r.cases > 0) {
                assert!(row.max_rel_error < 1e-12, "{n} values, {row:?}");
            }
            if n <= 11 {
                assert!(r.rows.iter().all(|row| row.max_rel_error == 0.0));
            }
        }
    }

    #[test]
    fn extremes_always_agree() {
        let cfg = HierarchyConfig { days: 2, ..Default::default() };
        let r = run_hierarchy_benchmark(&cfg).unwrap();
        for stage in Stage::ALL {
            assert_eq!(r.fraction(stage, 0.0), Some(1.0));
            assert_eq!(r.fraction(stage, 1.0), Some(1.0));
        }
        assert!(r.raw_agent_records > 0 && r.raw_agent_records < r.agent_records);
        assert!(r.raw_max_deviation < 1e-12);
    }
}
