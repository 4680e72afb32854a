use std::time::SystemTime;

use iq_core::experiments::{
    replicate_agent_benchmark, run_agent_benchmark, run_hierarchy_benchmark, run_inhomogeneous_benchmark,
    run_scaling_benchmark, write_curve_csv, write_metadata, AgentBenchConfig, Distribution, HierarchyConfig,
    InhomogeneousBenchConfig, Pairing,
};

#[test]
fn csv_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = AgentBenchConfig::new(Distribution::LogNormal, 500, Pairing::LogitLogit, 20, 42);
    let mut files = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let path = dir.path().join(name);
        write_curve_csv(&path, &run_agent_benchmark(&cfg).unwrap()).unwrap();
        files.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let other = AgentBenchConfig { seed: 43, ..cfg.clone() };
    let path = dir.path().join("c.csv");
    write_curve_csv(&path, &run_agent_benchmark(&other).unwrap()).unwrap();
    assert_ne!(std::fs::read(&path).unwrap(), files[0]);

    let meta = dir.path().join("a.json");
    write_metadata(&meta, "agent", &cfg, cfg.seed, SystemTime::now(), &[]).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&meta).unwrap()).unwrap();
    assert_eq!(v["config"]["sample_size"], 500);
    assert_eq!(v["config"]["distribution"], "lognormal");
}

#[test]
fn extremes_match_in_every_run() {
    for pairing in [Pairing::UniformLinear, Pairing::LogitLogit] {
        for d in Distribution::ALL {
            let reps = replicate_agent_benchmark(&AgentBenchConfig::new(d, 700, pairing, 10, 5)).unwrap();
            assert!(reps.extremes_exact(), "{d:?} {pairing:?}");
        }
    }
}

#[test]
fn buffers_at_least_the_sample_give_ratio_one() {
    let rows = run_scaling_benchmark(&[1000], 1000, 5, 3).unwrap();
    assert!(rows[0].curve.ratio.iter().all(|&r| r == 1.0));
    assert_eq!(rows[0].mean_ratio, 1.0);
}

#[test]
fn small_server_study_is_deterministic() {
    let cfg = InhomogeneousBenchConfig {
        n_agents: 50,
        values_per_agent: 100,
        batch: 10,
        server_interior: 198,
        runs: 3,
        ..Default::default()
    };
    let a = run_inhomogeneous_benchmark(&cfg).unwrap();
    let b = run_inhomogeneous_benchmark(&cfg).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
    assert_eq!(a.levels.len(), 200);
}

#[test]
fn hierarchy_report_covers_every_stage_and_level() {
    let cfg = HierarchyConfig { days: 3, ..Default::default() };
    let r = run_hierarchy_benchmark(&cfg).unwrap();
    assert_eq!(r.rows.len(), 3 * cfg.record_levels.len());
    assert!(r.rows.iter().all(|row| row.cases > 0 && row.within <= row.cases));
    assert_eq!(format!("{r:?}"), format!("{:?}", run_hierarchy_benchmark(&cfg).unwrap()));
}
