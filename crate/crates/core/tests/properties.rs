use proptest::prelude::*;

use iq_core::{
    empirical_quantiles, AgentConfig, AgentSketch, GridSpacing, Payload, ProbabilityGrid, Scheme, ServerAggregator,
    ServerConfig, SummaryRecord, ValueTransform,
};

fn grid_strategy() -> impl Strategy<Value = ProbabilityGrid> {
    (1usize..40, any::<bool>(), -4.0f64..-0.5).prop_map(|(interior, logit, lo)| {
        if interior == 1 {
            return ProbabilityGrid::new(GridSpacing::Uniform, 1, 0.5, 0.5).unwrap();
        }
        if logit {
            let lo = 10f64.powf(lo);
            ProbabilityGrid::new(GridSpacing::Logit, interior, lo, 1.0 - lo).unwrap()
        } else {
            let step = 1.0 / (interior + 1) as f64;
            ProbabilityGrid::new(GridSpacing::Uniform, interior, step, 1.0 - step).unwrap()
        }
    })
}

fn scheme_strategy() -> impl Strategy<Value = Scheme> {
    prop_oneof![Just(Scheme::Linear), Just(Scheme::Logit)]
}

fn values_strategy(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        prop::collection::vec((0u8..6).prop_map(f64::from), 1..max),
        prop::collection::vec(-1e6f64..1e6, 1..max),
        prop::collection::vec((-3.0f64..3.0).prop_map(|e| 10f64.powf(e)), 1..max),
    ]
}

fn positive(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| x.abs() + 1e-3).collect()
}

fn nondecreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn agent_keeps_extremes_and_order(
        grid in grid_strategy(),
        scheme in scheme_strategy(),
        cap in 1usize..50,
        data in values_strategy(400),
        log in any::<bool>(),
    ) {
        let (data, transform) = if log {
            (positive(data), ValueTransform::Log10)
        } else {
            (data, ValueTransform::Identity)
        };
        let m = grid.len();
        let cfg = AgentConfig::new(grid, cap).scheme(scheme).transform(transform).record_capacity(5);
        let mut s = AgentSketch::new(cfg).unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (i, &x) in data.iter().enumerate() {
            s.observe(x).unwrap();
            lo = lo.min(x);
            hi = hi.max(x);
            prop_assert!(s.stored_values() <= m + cap.max(5));
            prop_assert!(s.buffer().is_empty() || nondecreasing(s.buffer().values()));
            prop_assert_eq!(s.buffer().count() + s.pending().len() as u64, i as u64 + 1);
        }
        prop_assert_eq!(s.quantile(0.0).unwrap(), lo);
        prop_assert_eq!(s.quantile(1.0).unwrap(), hi);
        prop_assert_eq!(s.buffer().count(), data.len() as u64);
        let r = s.emit_record();
        prop_assert!(r.validate().is_ok());
        prop_assert_eq!((r.min(), r.max(), r.total_count), (Some(lo), Some(hi), data.len() as u64));
    }

    #[test]
    fn memory_stays_within_buffers(grid in grid_strategy(), cap in 11usize..60, n in 0usize..2000) {
        let m = grid.len();
        let mut s = AgentSketch::new(AgentConfig::new(grid, cap).record_capacity(11)).unwrap();
        for i in 0..n {
            s.observe((i * 7919 % 1013) as f64).unwrap();
            prop_assert!(s.stored_values() <= m + cap);
        }
    }

    #[test]
    fn all_raw_batches_equal_the_pooled_oracle(
        grid in grid_strategy(),
        scheme in scheme_strategy(),
        records in prop::collection::vec(values_strategy(12), 1..8),
    ) {
        let mut agg = ServerAggregator::new(ServerConfig::new(grid.clone(), 8).scheme(scheme)).unwrap();
        let mut pooled = Vec::new();
        for r in &records {
            agg.absorb(SummaryRecord::agent_raw(r.clone())).unwrap();
            pooled.extend_from_slice(r);
        }
        agg.merge_flush();
        let oracle = empirical_quantiles(&pooled, grid.levels()).unwrap();
        prop_assert_eq!(agg.buffer().values(), oracle.as_slice());
        prop_assert_eq!(agg.total_count(), pooled.len() as u64);
    }

    #[test]
    fn log_transform_is_equivariant(
        grid in grid_strategy(),
        scheme in scheme_strategy(),
        records in prop::collection::vec(values_strategy(60), 1..6),
        batch in 1usize..4,
    ) {
        let records: Vec<Vec<f64>> = records.into_iter().map(positive).collect();
        let report = grid.clone();
        let agent_cfg = AgentConfig::new(grid.clone(), 16).scheme(scheme);
        let mut natural = Vec::new();
        for r in &records {
            let mut a = AgentSketch::new(agent_cfg.clone().transform(ValueTransform::Log10)).unwrap();
            for &x in r {
                a.observe(x).unwrap();
            }
            natural.push(a.emit_record());
        }
        let logged: Vec<SummaryRecord> = natural
            .iter()
            .map(|r| {
                let mut l = r.clone();
                match &mut l.payload {
                    Payload::Quantiles { values, .. } | Payload::Raw(values) => {
                        values.iter_mut().for_each(|v| *v = v.log10())
                    }
                }
                l
            })
            .collect();
        let server = ServerConfig::new(grid.clone(), batch).scheme(scheme).report(report);
        let mut direct = ServerAggregator::new(server.clone().transform(ValueTransform::Log10)).unwrap();
        let mut manual = ServerAggregator::new(server).unwrap();
        for (n, l) in natural.into_iter().zip(logged) {
            direct.absorb(n).unwrap();
            manual.absorb(l).unwrap();
        }
        let (Payload::Quantiles { values: d, .. }, Payload::Quantiles { values: m, .. }) =
            (direct.emit_record().unwrap().payload, manual.emit_record().unwrap().payload)
        else {
            // every record is raw only when the pooled data fit a raw record
            return Ok(());
        };
        let last = d.len() - 1;
        for i in 1..last {
            prop_assert_eq!(d[i].to_bits(), 10f64.powf(m[i]).clamp(d[0], d[last]).to_bits());
        }
        for i in [0, last] {
            let back = 10f64.powf(m[i]);
            prop_assert!((d[i] - back).abs() <= 1e-13 * back);
        }
    }
}
