use std::collections::{BTreeMap, BTreeSet};

use medbench_core::corpus::{build_registry, multimedbench_tasks, Context, Sample, Split, TaskRegistry};
use medbench_core::mixture::{empirical_ratios, FillRule, MixtureConfig, MixtureSampler};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn registry() -> TaskRegistry {
    let tasks = multimedbench_tasks();
    let mut samples = Vec::new();
    for t in &tasks {
        for i in 0..7 {
            samples.push(Sample {
                sample_id: format!("{}-{i}", t.task_id),
                task_id: t.task_id.clone(),
                split: Split::Train,
                image_refs: if t.task_type.is_multimodal() {
                    vec!["x.png".into()]
                } else {
                    vec![]
                },
                context: Context::new(),
                question: "q".into(),
                target: t.options.first().cloned().unwrap_or_else(|| "t".into()),
                class_index: if t.options.is_empty() { None } else { Some(0) },
            });
        }
    }
    build_registry(tasks, samples).unwrap()
}

#[test]
fn fill_draws_pass_chi_square() {
    let reg = registry();
    let cfg = MixtureConfig::from_registry(&reg, 1000, 2024);
    let sampler = MixtureSampler::new(&reg, &cfg).unwrap();
    let n_batches = 100;
    let batches = sampler.batches(cfg.seed, n_batches);

    let mut counts: BTreeMap<&str, f64> = BTreeMap::new();
    for e in batches.iter().flat_map(|b| &b.entries) {
        *counts.entry(e.task_id.as_str()).or_default() += 1.0;
    }
    // Seeded slots are fixed at one per task per batch; test only the fill.
    let probs = cfg.normalized();
    let weights: BTreeMap<&str, f64> = probs
        .iter()
        .map(|(t, p)| (t.as_str(), (1000.0 * p - 1.0).max(0.0)))
        .collect();
    let w_total: f64 = weights.values().sum();
    let fill_n = (n_batches * (1000 - probs.len())) as f64;
    let mut stat = 0.0;
    for (t, w) in &weights {
        let expected = fill_n * w / w_total;
        let observed = counts[t] - n_batches as f64;
        stat += (observed - expected).powi(2) / expected;
    }
    let p = 1.0 - ChiSquared::new((weights.len() - 1) as f64).unwrap().cdf(stat);
    assert!(p > 0.001, "chi2 = {stat}, p = {p}");

    let emp = empirical_ratios(&batches);
    assert!((emp.values().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn proportional_fill_over_represents_rare_tasks_at_small_batches() {
    let reg = registry();
    let mut cfg = MixtureConfig::from_registry(&reg, 128, 1);
    cfg.fill = FillRule::Proportional;
    let batches = MixtureSampler::new(&reg, &cfg).unwrap().batches(1, 200);
    let emp = empirical_ratios(&batches);
    assert!(emp["vqa_rad"] > 1.0 / 128.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coverage_and_size_hold(size in 12usize..300, seed in any::<u64>(), proportional in any::<bool>()) {
        let reg = registry();
        let mut cfg = MixtureConfig::from_registry(&reg, size, seed);
        if proportional {
            cfg.fill = FillRule::Proportional;
        }
        let sampler = MixtureSampler::new(&reg, &cfg).unwrap();
        for b in sampler.batches(seed, 3) {
            prop_assert_eq!(b.len(), size);
            let tasks: BTreeSet<_> = b.entries.iter().map(|e| e.task_id.as_str()).collect();
            prop_assert_eq!(tasks.len(), 12);
            for e in &b.entries {
                prop_assert!(e.sample_id.starts_with(&e.task_id));
            }
        }
    }
}
