use std::path::{Path, PathBuf};
use std::time::SystemTime;

use clap::{Args, ValueEnum};
use log::info;

use iq_core::experiments::{
    comparison_levels, run_agent_benchmark, run_hierarchy_benchmark, run_inhomogeneous_variants, run_scaling_benchmark,
    write_curve_csv, write_metadata, write_table_csv, AgentBenchConfig, Distribution, HierarchyConfig,
    InhomogeneousBenchConfig, Pairing, RecordOrder, Scale,
};

use crate::{Failure, Outcome};

#[derive(Clone, Copy, ValueEnum)]
pub enum Experiment {
    /// Single agents on normal, log-normal and beta(9, 2) samples.
    Agents,
    /// Single agents with 1000-value buffers on growing log-normal samples.
    Scaling,
    /// A server merging records from inhomogeneous agents.
    Server,
    /// Hourly and daily roll-ups of synthetic agent traffic.
    Hierarchy,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(value_enum)]
    experiment: Experiment,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Replications (default: 200 for agents and scaling, 100 for server;
    /// ignored by hierarchy).
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long, default_value = "bench-out")]
    out_dir: PathBuf,
}

fn files(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.json")))
}

pub fn run(args: BenchArgs) -> Outcome<()> {
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Failure::Input(format!("{}: {e}", args.out_dir.display())))?;
    let dir = args.out_dir.as_path();
    let seed = args.seed;
    match args.experiment {
        Experiment::Agents => {
            let runs = args.runs.unwrap_or(200);
            for d in Distribution::ALL {
                for pairing in [Pairing::UniformLinear, Pairing::LogitLogit] {
                    for n in [1000, 10_000] {
                        let started = SystemTime::now();
                        let cfg = AgentBenchConfig {
                            eval_levels: Some(comparison_levels()),
                            ..AgentBenchConfig::new(d, n, pairing, runs, seed)
                        };
                        let curve = run_agent_benchmark(&cfg)?;
                        let (csv, meta) = files(dir, &format!("agents_{}_{}_n{n}", d.name(), pairing.name()));
                        write_curve_csv(&csv, &curve)?;
                        write_metadata(&meta, "agents", &cfg, seed, started, &[])?;
                        info!("{}: max interior ratio {:.3}", csv.display(), curve.max_interior_ratio());
                    }
                }
            }
        }
        Experiment::Scaling => {
            let runs = args.runs.unwrap_or(200);
            let started = SystemTime::now();
            let sizes = [1_000, 10_000, 100_000];
            let rows = run_scaling_benchmark(&sizes, 1000, runs, seed)?;
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.sample_size.to_string(),
                        r.mean_ratio.to_string(),
                        r.mean_ratio_se.to_string(),
                        r.runs.to_string(),
                    ]
                })
                .collect();
            for r in &rows {
                write_curve_csv(&dir.join(format!("scaling_n{}.csv", r.sample_size)), &r.curve)?;
            }
            let (csv, meta) = files(dir, "scaling");
            write_table_csv(&csv, &["sample_size", "mean_ratio", "mean_ratio_se", "runs"], &table)?;
            let config = ScalingConfig {
                sample_sizes: &sizes,
                buffers: 1000,
                distribution: "lognormal",
                pairing: "logit-logit",
                runs,
            };
            write_metadata(&meta, "scaling", &config, seed, started, &[])?;
        }
        Experiment::Server => {
            let started = SystemTime::now();
            let cfg = InhomogeneousBenchConfig { runs: args.runs.unwrap_or(100), seed, ..Default::default() };
            let variants = [
                (Scale::Nominal, RecordOrder::Random),
                (Scale::Log10, RecordOrder::Random),
                (Scale::Nominal, RecordOrder::SortedByMedian),
                (Scale::Log10, RecordOrder::SortedByMedian),
            ];
            let curves = run_inhomogeneous_variants(&cfg, &variants)?;
            let overrides = cfg.overrides().join(" ");
            for ((scale, order), curve) in variants.iter().zip(&curves) {
                let (csv, meta) = files(dir, &format!("server_{}_{}", scale.name(), order.name()));
                write_curve_csv(&csv, curve)?;
                let cfg = InhomogeneousBenchConfig { scale: *scale, order: *order, ..cfg.clone() };
                write_metadata(&meta, "server", &cfg, seed, started, &[("overrides", overrides.clone())])?;
                info!("{}: max interior ratio {:.3}", csv.display(), curve.max_interior_ratio());
            }
        }
        Experiment::Hierarchy => {
            let started = SystemTime::now();
            let cfg = HierarchyConfig { seed, ..Default::default() };
            let report = run_hierarchy_benchmark(&cfg)?;
            let table: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.stage.name().to_string(),
                        r.level.to_string(),
                        r.cases.to_string(),
                        r.within.to_string(),
                        r.fraction.to_string(),
                        r.max_rel_error.to_string(),
                    ]
                })
                .collect();
            let (csv, meta) = files(dir, "hierarchy");
            write_table_csv(&csv, &["stage", "level", "cases", "within_10pct", "fraction", "max_rel_error"], &table)?;
            let notes = [
                ("data", "synthetic log-normal mixtures".to_string()),
                ("raw_agent_records", report.raw_agent_records.to_string()),
                ("agent_records", report.agent_records.to_string()),
            ];
            write_metadata(&meta, "hierarchy", &cfg, seed, started, &notes)?;
        }
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct ScalingConfig<'a> {
    sample_sizes: &'a [usize],
    buffers: usize,
    distribution: &'static str,
    pairing: &'static str,
    runs: usize,
}
