//! The four batch stages: prepare, prompt, sample, evaluate.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use medbench_core::corpus::{build_registry, Sample, Split, TaskRegistry, TaskSpec};
use medbench_core::mixture::{empirical_ratios, expected_ratios, FillRule, MixtureConfig, MixtureSampler};
use medbench_core::preprocess::{
    augment, conform, encode_pileup, extract_sections, passes_length_filter, AugmentOp, LengthRule, RebalancePlan,
    ReportSections, PILEUP_CHANNELS,
};
use medbench_core::prompt::{exemplars_for, PromptTemplate};
use medbench_core::rng::derive_seed;
use serde::{Deserialize, Serialize};

use crate::evaluate::{evaluate, MetricReport, Prediction};
use crate::fsio::{resolve_with, write_json, write_jsonl};
use crate::imageio::{read_image, write_png};
use crate::Error;

/// Context key holding a raw free-text report to be sectioned.
pub const RAW_REPORT_KEY: &str = "report";

#[derive(Debug, Clone, Default)]
pub struct PrepareOptions {
    pub seed: u64,
    /// Augmented copies written per eligible training sample.
    pub augment_copies: usize,
    /// Prefix for relative image paths; `None` uses them as given.
    pub data_root: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrepareReport {
    pub input_samples: usize,
    pub output_samples: usize,
    /// Dropped: report without the needed sections.
    pub dropped_unsectioned: Vec<String>,
    /// Dropped: findings over the task's length limit.
    pub dropped_length: Vec<String>,
    /// Task -> (train samples before, after) for rebalanced tasks.
    pub rebalanced: BTreeMap<String, (usize, usize)>,
    pub augmented: usize,
    pub images_written: usize,
}

fn file_stem(sample_id: &str) -> String {
    sample_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

enum Sectioned {
    Keep(Sample),
    Unsectioned,
    TooLong,
}

/// Splits a raw report into fields and applies the findings length rule.
/// Report generation targets the findings; summarization reads findings
/// and targets the impression.
fn section(mut s: Sample) -> Sectioned {
    if let Some(raw) = s.context.remove(RAW_REPORT_KEY) {
        let Ok(sections) = extract_sections(&raw) else {
            return Sectioned::Unsectioned;
        };
        let ReportSections {
            indication,
            findings,
            impression,
        } = sections.clone();
        match s.task_id.as_str() {
            "mimic_cxr_report" => {
                let Some(f) = findings else {
                    return Sectioned::Unsectioned;
                };
                if let (Some(ind), None) = (indication, s.context.get("indication")) {
                    s.context.insert("indication", ind);
                }
                s.target = f;
            }
            "mimic_iii" => {
                let (Some(f), Some(imp)) = (findings, impression) else {
                    return Sectioned::Unsectioned;
                };
                s.context.insert("findings", f);
                s.target = imp;
            }
            _ => {}
        }
        if !passes_length_filter(&sections, &s.task_id) {
            return Sectioned::TooLong;
        }
        return Sectioned::Keep(s);
    }
    let findings = match s.task_id.as_str() {
        "mimic_cxr_report" => Some(s.target.as_str()),
        "mimic_iii" => s.context.get("findings"),
        _ => None,
    };
    match (LengthRule::for_task(&s.task_id), findings) {
        (Some(rule), Some(f)) if !rule.accepts(f) => Sectioned::TooLong,
        _ => Sectioned::Keep(s),
    }
}

/// Sections and filters reports, conforms images (pileups are encoded),
/// rebalances training splits, and optionally adds augmented copies.
/// Writes `manifest.jsonl`, `images/` and `prepare_report.json` under `out`.
pub fn prepare(
    samples: Vec<Sample>,
    tasks: &[TaskSpec],
    out: &Path,
    opts: &PrepareOptions,
) -> Result<PrepareReport, Error> {
    let mut report = PrepareReport {
        input_samples: samples.len(),
        ..Default::default()
    };
    let image_dir = out.join("images");
    let mut prepared = Vec::new();
    for s in samples {
        let id = s.sample_id.clone();
        let mut s = match section(s) {
            Sectioned::Keep(s) => s,
            Sectioned::Unsectioned => {
                report.dropped_unsectioned.push(id);
                continue;
            }
            Sectioned::TooLong => {
                report.dropped_length.push(id);
                continue;
            }
        };

        let mut images = Vec::with_capacity(s.image_refs.len());
        let mut new_refs = Vec::with_capacity(s.image_refs.len());
        for (k, r) in s.image_refs.iter().enumerate() {
            let src = resolve_with(opts.data_root.as_deref(), Path::new(r));
            let raw = read_image(&src)?;
            let img = if raw.channels() == PILEUP_CHANNELS {
                encode_pileup(&raw)?
            } else {
                conform(&raw)?
            };
            let name = format!("{}_{k}.png", file_stem(&s.sample_id));
            write_png(&image_dir.join(&name), &img)?;
            report.images_written += 1;
            new_refs.push(format!("images/{name}"));
            images.push(img);
        }
        s.image_refs = new_refs;

        let copies = match (s.split, RebalancePlan::for_task(&s.task_id)) {
            (Split::Train, Some(plan)) => {
                let c = plan.apply(std::slice::from_ref(&s))?;
                let e = report.rebalanced.entry(s.task_id.clone()).or_default();
                e.0 += 1;
                e.1 += c.len();
                c
            }
            _ => vec![s.clone()],
        };
        for (k, mut c) in copies.into_iter().enumerate() {
            if k > 0 {
                c.sample_id = format!("{}~r{k}", s.sample_id);
            }
            prepared.push(c);
        }

        let ops = AugmentOp::set_for_task(&s.task_id);
        if let (Split::Train, Some(ops), true) = (s.split, ops, !images.is_empty()) {
            for copy in 1..=opts.augment_copies {
                let mut a = s.clone();
                a.sample_id = format!("{}~a{copy}", s.sample_id);
                a.image_refs.clear();
                for (k, img) in images.iter().enumerate() {
                    let seed = derive_seed(opts.seed, &format!("prepare/augment/{}/{copy}", s.sample_id));
                    let seed = derive_seed(seed, &k.to_string());
                    let name = format!("{}_{k}.png", file_stem(&a.sample_id));
                    write_png(&image_dir.join(&name), &augment(img, ops, seed))?;
                    report.images_written += 1;
                    a.image_refs.push(format!("images/{name}"));
                }
                report.augmented += 1;
                prepared.push(a);
            }
        }
    }
    // Same validation the downstream stages apply.
    build_registry(tasks.to_vec(), prepared.clone())?;
    report.output_samples = prepared.len();
    write_jsonl(&out.join("manifest.jsonl"), &prepared)?;
    write_json(&out.join("prepare_report.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub sample_id: String,
    pub task_id: String,
    pub image_refs: Vec<String>,
    pub text: String,
    pub image_slots: Vec<usize>,
    pub answer_prefix: String,
}

/// Renders one prompt per sample of `split`, optionally limited to
/// `task_ids`, in manifest order.
pub fn prompts(
    registry: &TaskRegistry,
    split: Split,
    task_ids: &[String],
    seed: u64,
) -> Result<Vec<PromptRecord>, Error> {
    let mut templates: BTreeMap<&str, PromptTemplate> = BTreeMap::new();
    let mut out = Vec::new();
    for s in registry.samples() {
        if s.split != split || (!task_ids.is_empty() && !task_ids.contains(&s.task_id)) {
            continue;
        }
        let task = registry
            .task(&s.task_id)
            .ok_or_else(|| Error::Invalid(format!("unknown task `{}`", s.task_id)))?;
        if !templates.contains_key(task.task_id.as_str()) {
            let t = PromptTemplate::builtin(&task.task_id)
                .ok_or_else(|| medbench_core::prompt::PromptError::NoTemplate(task.task_id.clone()))?;
            templates.insert(task.task_id.as_str(), t);
        }
        let template = &templates[task.task_id.as_str()];
        let exemplars = exemplars_for(template, registry, task, s, seed)?;
        let bundle = template.render_prompt(task, s, &exemplars)?;
        out.push(PromptRecord {
            sample_id: s.sample_id.clone(),
            task_id: s.task_id.clone(),
            image_refs: s.image_refs.clone(),
            text: bundle.text,
            image_slots: bundle.image_slots,
            answer_prefix: bundle.answer_prefix,
        });
    }
    Ok(out)
}

pub fn write_prompts(
    registry: &TaskRegistry,
    split: Split,
    task_ids: &[String],
    seed: u64,
    out: &Path,
) -> Result<usize, Error> {
    let rows = prompts(registry, split, task_ids, seed)?;
    write_jsonl(&out.join("prompts.jsonl"), &rows)?;
    Ok(rows.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSummary {
    pub batches: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub fill: FillRule,
    pub configured: BTreeMap<String, f64>,
    pub expected: BTreeMap<String, f64>,
    pub empirical: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct BatchLine<'a> {
    batch: usize,
    entries: &'a [medbench_core::mixture::BatchEntry],
}

#[derive(Serialize)]
struct TaskBatchLine<'a> {
    batch: usize,
    counts: BTreeMap<&'a str, usize>,
}

/// One stand-in training sample per task, for task-level sampling without
/// a manifest. The sample id is the task id.
pub fn placeholder_samples(tasks: &[TaskSpec]) -> Vec<Sample> {
    tasks
        .iter()
        .filter(|t| t.mixture_ratio > 0.0)
        .map(|t| Sample {
            sample_id: t.task_id.clone(),
            task_id: t.task_id.clone(),
            split: Split::Train,
            image_refs: if t.task_type.is_multimodal() {
                vec!["-".into()]
            } else {
                vec![]
            },
            context: Default::default(),
            question: String::new(),
            target: String::new(),
            class_index: t.is_multiple_choice().then_some(0),
        })
        .collect()
}

/// Draws `n_batches` batches and writes `batches.jsonl` and
/// `mixture_summary.json`. With `task_level`, batch lines carry per-task
/// counts instead of entries.
pub fn write_batches(
    registry: &TaskRegistry,
    batch_size: usize,
    n_batches: usize,
    seed: u64,
    fill: FillRule,
    task_level: bool,
    out: &Path,
) -> Result<MixtureSummary, Error> {
    let mut cfg = MixtureConfig::from_registry(registry, batch_size, seed);
    cfg.fill = fill;
    let sampler = MixtureSampler::new(registry, &cfg)?;
    let batches = sampler.batches(seed, n_batches);
    let bytes = if task_level {
        crate::fsio::to_jsonl(batches.iter().enumerate().map(|(i, b)| TaskBatchLine {
            batch: i,
            counts: b.entries.iter().fold(BTreeMap::new(), |mut m, e| {
                *m.entry(e.task_id.as_str()).or_insert(0) += 1;
                m
            }),
        }))?
    } else {
        crate::fsio::to_jsonl(batches.iter().enumerate().map(|(i, b)| BatchLine {
            batch: i,
            entries: &b.entries,
        }))?
    };
    crate::fsio::atomic_write(&out.join("batches.jsonl"), &bytes)?;
    let summary = MixtureSummary {
        batches: n_batches,
        batch_size,
        seed,
        fill,
        configured: cfg.normalized(),
        expected: expected_ratios(&cfg),
        empirical: empirical_ratios(&batches),
    };
    write_json(&out.join("mixture_summary.json"), &summary)?;
    Ok(summary)
}

/// Scores `preds` against the task's samples in `split`.
pub fn evaluate_split(
    registry: &TaskRegistry,
    task_id: &str,
    split: Split,
    preds: &[Prediction],
) -> Result<MetricReport, Error> {
    let task = registry
        .task(task_id)
        .ok_or_else(|| Error::Invalid(format!("unknown task `{task_id}`")))?;
    let samples: Vec<&Sample> = registry.split_samples(task_id, split).collect();
    evaluate(task, &samples, preds)
}
