//! Task-mixture batch sampling with a per-batch coverage guarantee.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{Split, TaskRegistry};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MixtureError {
    #[error("batch size {batch_size} is smaller than the {tasks} tasks that must appear in every batch")]
    BatchTooSmall { batch_size: usize, tasks: usize },
    #[error("no task has a positive mixture ratio")]
    NoTasks,
    #[error("mixture names task `{0}` which is not in the registry")]
    UnknownTask(String),
    #[error("ratio for `{task_id}` is {ratio}, expected a finite value >= 0")]
    BadRatio { task_id: String, ratio: f64 },
    #[error("task `{0}` has a positive ratio but no train samples")]
    NoTrainSamples(String),
}

/// How the slots left after seeding one sample per task are filled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillRule {
    /// Fill weight `max(B*p - 1, 0)`: expected counts equal `B*p` whenever
    /// every task has `B*p >= 1`, so the seeded slot does not inflate rare
    /// tasks.
    #[default]
    Residual,
    /// Fill i.i.d. by the configured ratios. Tasks gain about `1/B` each
    /// from seeding.
    Proportional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureConfig {
    pub ratios: BTreeMap<String, f64>,
    pub batch_size: usize,
    pub seed: u64,
    #[serde(default)]
    pub fill: FillRule,
}

impl MixtureConfig {
    /// Ratios taken from the registry's task table (tasks with ratio 0
    /// are left out).
    pub fn from_registry(registry: &TaskRegistry, batch_size: usize, seed: u64) -> Self {
        let ratios = registry
            .tasks()
            .iter()
            .filter(|t| t.mixture_ratio > 0.0)
            .map(|t| (t.task_id.clone(), t.mixture_ratio))
            .collect();
        Self {
            ratios,
            batch_size,
            seed,
            fill: FillRule::default(),
        }
    }

    /// Configured ratios scaled to sum to one, positive entries only.
    pub fn normalized(&self) -> BTreeMap<String, f64> {
        let total: f64 = self.ratios.values().filter(|r| **r > 0.0).sum();
        self.ratios
            .iter()
            .filter(|(_, r)| **r > 0.0)
            .map(|(k, r)| (k.clone(), r / total))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchEntry {
    pub task_id: String,
    pub sample_id: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub entries: Vec<BatchEntry>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone)]
struct Pool<'a> {
    task_id: &'a str,
    sample_ids: Vec<&'a str>,
}

/// Prepared sampler; draws are driven by the caller's RNG.
#[derive(Debug, Clone)]
pub struct MixtureSampler<'a> {
    pools: Vec<Pool<'a>>,
    /// Cumulative fill weights, last entry is the total.
    cumulative: Vec<f64>,
    batch_size: usize,
}

impl<'a> MixtureSampler<'a> {
    pub fn new(registry: &'a TaskRegistry, config: &MixtureConfig) -> Result<Self, MixtureError> {
        for (task_id, &ratio) in &config.ratios {
            if !ratio.is_finite() || ratio < 0.0 {
                return Err(MixtureError::BadRatio {
                    task_id: task_id.clone(),
                    ratio,
                });
            }
            if registry.task(task_id).is_none() {
                return Err(MixtureError::UnknownTask(task_id.clone()));
            }
        }
        let probs = config.normalized();
        if probs.is_empty() {
            return Err(MixtureError::NoTasks);
        }
        if config.batch_size < probs.len() {
            return Err(MixtureError::BatchTooSmall {
                batch_size: config.batch_size,
                tasks: probs.len(),
            });
        }
        let mut pools = Vec::with_capacity(probs.len());
        for task_id in probs.keys() {
            let task = registry.task(task_id).expect("checked above");
            let sample_ids: Vec<&str> = registry
                .split_samples(&task.task_id, Split::Train)
                .map(|s| s.sample_id.as_str())
                .collect();
            if sample_ids.is_empty() {
                return Err(MixtureError::NoTrainSamples(task_id.clone()));
            }
            pools.push(Pool {
                task_id: task.task_id.as_str(),
                sample_ids,
            });
        }

        let b = config.batch_size as f64;
        let mut weights: Vec<f64> = match config.fill {
            FillRule::Proportional => probs.values().copied().collect(),
            FillRule::Residual => probs.values().map(|p| (b * p - 1.0).max(0.0)).collect(),
        };
        if weights.iter().sum::<f64>() <= 0.0 {
            weights = probs.values().copied().collect();
        }
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self {
            pools,
            cumulative,
            batch_size: config.batch_size,
        })
    }

    fn pick_task(&self, rng: &mut Rng) -> usize {
        let total = *self.cumulative.last().expect("non-empty");
        let u = rng::unit_f64(rng) * total;
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.cumulative.len() - 1)
    }

    fn entry(&self, task: usize, rng: &mut Rng) -> BatchEntry {
        let pool = &self.pools[task];
        let i = rng::index(rng, pool.sample_ids.len());
        BatchEntry {
            task_id: pool.task_id.into(),
            sample_id: pool.sample_ids[i].into(),
        }
    }

    /// One sample per task first, the rest by fill weight, then shuffled.
    pub fn next_batch(&self, rng: &mut Rng) -> Batch {
        let mut entries = Vec::with_capacity(self.batch_size);
        for task in 0..self.pools.len() {
            entries.push(self.entry(task, rng));
        }
        while entries.len() < self.batch_size {
            let task = self.pick_task(rng);
            entries.push(self.entry(task, rng));
        }
        rng::shuffle(rng, &mut entries);
        Batch { entries }
    }

    /// `n` consecutive batches from a generator seeded with `seed`.
    pub fn batches(&self, seed: u64, n: usize) -> Vec<Batch> {
        let mut rng = mixture_rng(seed);
        (0..n).map(|_| self.next_batch(&mut rng)).collect()
    }
}

/// The sampler's RNG for a master seed.
pub fn mixture_rng(seed: u64) -> Rng {
    rng::seeded(rng::derive_seed(seed, "mixture"))
}

/// Single-step form: consumes the RNG state and returns the advanced one.
pub fn sample_batch(
    registry: &TaskRegistry,
    config: &MixtureConfig,
    mut rng_state: Rng,
) -> Result<(Batch, Rng), MixtureError> {
    let sampler = MixtureSampler::new(registry, config)?;
    let batch = sampler.next_batch(&mut rng_state);
    Ok((batch, rng_state))
}

/// Per-task share of all entries. Empty input gives an empty map.
pub fn empirical_ratios(batches: &[Batch]) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut total = 0usize;
    for e in batches.iter().flat_map(|b| &b.entries) {
        *counts.entry(e.task_id.clone()).or_default() += 1;
        total += 1;
    }
    counts.into_iter().map(|(k, n)| (k, n as f64 / total as f64)).collect()
}

/// Expected per-task share of entries for a configuration, accounting for
/// the seeded slot and the fill rule.
pub fn expected_ratios(config: &MixtureConfig) -> BTreeMap<String, f64> {
    let probs = config.normalized();
    let b = config.batch_size as f64;
    let k = probs.len() as f64;
    let mut weights: Vec<f64> = match config.fill {
        FillRule::Proportional => probs.values().copied().collect(),
        FillRule::Residual => probs.values().map(|p| (b * p - 1.0).max(0.0)).collect(),
    };
    if weights.iter().sum::<f64>() <= 0.0 {
        weights = probs.values().copied().collect();
    }
    let total: f64 = weights.iter().sum();
    probs
        .keys()
        .zip(weights)
        .map(|(t, w)| (t.clone(), (1.0 + (b - k) * w / total) / b))
        .collect()
}
