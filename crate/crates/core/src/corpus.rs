//! Benchmark data model: task specifications, samples, and the task registry.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Accepted range for the sum of mixture ratios. Ratios given as rounded
/// percentages drift slightly off 1.
pub const RATIO_SUM_MIN: f64 = 0.99;
pub const RATIO_SUM_MAX: f64 = 1.01;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorpusError {
    #[error("duplicate task id `{0}`")]
    DuplicateTask(String),
    #[error("mixture ratios sum to {0:.4}, outside [0.99, 1.01]")]
    RatioSum(f64),
    #[error("sample `{sample_id}` references unknown task `{task_id}`")]
    OrphanSample { sample_id: String, task_id: String },
    #[error("unknown task ids: {}", .0.join(", "))]
    UnknownTasks(Vec<String>),
    #[error("invalid task `{task_id}`: {reason}")]
    InvalidTask { task_id: String, reason: String },
    #[error("invalid sample `{sample_id}`: {reason}")]
    InvalidSample { sample_id: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    QuestionAnswering,
    ReportSummarization,
    VisualQuestionAnswering,
    ReportGeneration,
    ImageClassification,
}

impl TaskType {
    /// Whether samples of this type carry at least one image.
    pub fn is_multimodal(self) -> bool {
        matches!(
            self,
            TaskType::VisualQuestionAnswering | TaskType::ReportGeneration | TaskType::ImageClassification
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Text,
    Radiology,
    Pathology,
    Dermatology,
    ChestXray,
    Mammography,
    Genomics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FewShotMode {
    ZeroShot,
    TextOnlyOneShot,
    TwoShotText,
}

impl FewShotMode {
    pub fn exemplar_count(self) -> usize {
        match self {
            FewShotMode::ZeroShot => 0,
            FewShotMode::TextOnlyOneShot => 1,
            FewShotMode::TwoShotText => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MetricId {
    #[serde(rename = "accuracy")]
    Accuracy,
    #[serde(rename = "bleu1")]
    Bleu1,
    #[serde(rename = "bleu4")]
    Bleu4,
    #[serde(rename = "rouge_l")]
    RougeL,
    #[serde(rename = "cider_d")]
    CiderD,
    #[serde(rename = "token_f1")]
    TokenF1,
    #[serde(rename = "ce_micro_f1_14")]
    CeMicroF1All,
    #[serde(rename = "ce_macro_f1_14")]
    CeMacroF1All,
    #[serde(rename = "ce_micro_f1_5")]
    CeMicroF1Major,
    #[serde(rename = "ce_macro_f1_5")]
    CeMacroF1Major,
    #[serde(rename = "graph_f1")]
    GraphF1,
    #[serde(rename = "macro_auc")]
    MacroAuc,
    #[serde(rename = "macro_f1")]
    MacroF1,
    #[serde(rename = "snp_f1")]
    SnpF1,
    #[serde(rename = "indel_f1")]
    IndelF1,
}

impl MetricId {
    pub fn name(self) -> &'static str {
        match self {
            MetricId::Accuracy => "accuracy",
            MetricId::Bleu1 => "bleu1",
            MetricId::Bleu4 => "bleu4",
            MetricId::RougeL => "rouge_l",
            MetricId::CiderD => "cider_d",
            MetricId::TokenF1 => "token_f1",
            MetricId::CeMicroF1All => "ce_micro_f1_14",
            MetricId::CeMacroF1All => "ce_macro_f1_14",
            MetricId::CeMicroF1Major => "ce_micro_f1_5",
            MetricId::CeMacroF1Major => "ce_macro_f1_5",
            MetricId::GraphF1 => "graph_f1",
            MetricId::MacroAuc => "macro_auc",
            MetricId::MacroF1 => "macro_f1",
            MetricId::SnpF1 => "snp_f1",
            MetricId::IndelF1 => "indel_f1",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task_id: String,
    pub task_type: TaskType,
    pub modality: Modality,
    pub mixture_ratio: f64,
    pub fewshot_mode: FewShotMode,
    #[serde(default)]
    pub options: Vec<String>,
    #[serde(default)]
    pub metrics: BTreeSet<MetricId>,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let invalid = |reason: &str| CorpusError::InvalidTask {
            task_id: self.task_id.clone(),
            reason: reason.to_string(),
        };
        if self.task_id.is_empty() {
            return Err(invalid("empty task id"));
        }
        if !self.mixture_ratio.is_finite() || !(0.0..=1.0).contains(&self.mixture_ratio) {
            return Err(invalid("mixture ratio must lie in [0, 1]"));
        }
        match self.task_type {
            TaskType::ImageClassification if self.options.is_empty() => {
                return Err(invalid("classification task without options"))
            }
            TaskType::ImageClassification | TaskType::QuestionAnswering => {}
            _ if !self.options.is_empty() => return Err(invalid("generative task must not declare options")),
            _ => {}
        }
        if !self.options.is_empty() && !(2..=26).contains(&self.options.len()) {
            return Err(invalid("option count must be between 2 and 26"));
        }
        Ok(())
    }

    pub fn is_multiple_choice(&self) -> bool {
        !self.options.is_empty()
    }
}

/// Named text fields attached to a sample, in insertion order.
///
/// Serialized as a JSON object; key order is preserved on round trip and
/// unknown keys are kept verbatim.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Context(Vec<(String, String)>);

impl Context {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Sets `key`, replacing an existing value in place.
    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) {
        let key = key.into();
        let value = value.into();
        match self.0.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.0.push((key, value)),
        }
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        let pos = self.0.iter().position(|(k, _)| k == key)?;
        Some(self.0.remove(pos).1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for Context {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        let mut ctx = Context::new();
        for (k, v) in iter {
            ctx.insert(k, v);
        }
        ctx
    }
}

impl Serialize for Context {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Context {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ContextVisitor;

        impl<'de> Visitor<'de> for ContextVisitor {
            type Value = Context;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object of string fields")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Context, A::Error> {
                let mut ctx = Context::new();
                while let Some((k, v)) = access.next_entry::<String, String>()? {
                    ctx.insert(k, v);
                }
                Ok(ctx)
            }
        }

        deserializer.deserialize_map(ContextVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub sample_id: String,
    pub task_id: String,
    pub split: Split,
    #[serde(default)]
    pub image_refs: Vec<String>,
    #[serde(default)]
    pub context: Context,
    pub question: String,
    pub target: String,
    pub class_index: Option<usize>,
}

impl Sample {
    /// Per-question answer options carried in the context as `option_a`,
    /// `option_b`, ... (used by multiple-choice QA where every question has
    /// its own choices). Empty when the sample has none.
    pub fn own_options(&self) -> Vec<String> {
        let mut out = Vec::new();
        for letter in b'a'..=b'z' {
            let key = format!("option_{}", letter as char);
            match self.context.get(&key) {
                Some(v) => out.push(v.to_string()),
                None => break,
            }
        }
        out
    }

    /// Answer options in effect for this sample: its own options when
    /// present, otherwise the task's.
    pub fn options(&self, task: &TaskSpec) -> Vec<String> {
        let own = self.own_options();
        if own.is_empty() {
            task.options.clone()
        } else {
            own
        }
    }

    pub fn validate(&self, task: &TaskSpec) -> Result<(), CorpusError> {
        let invalid = |reason: String| CorpusError::InvalidSample {
            sample_id: self.sample_id.clone(),
            reason,
        };
        if self.task_id != task.task_id {
            return Err(invalid(format!(
                "validated against task `{}` but belongs to `{}`",
                task.task_id, self.task_id
            )));
        }
        let options = self.options(task);
        match (self.class_index, options.is_empty()) {
            (Some(_), true) => return Err(invalid("class_index set on a generative task".into())),
            (None, false) => return Err(invalid("class_index missing on a multiple-choice task".into())),
            (Some(i), false) if i >= options.len() => {
                return Err(invalid(format!(
                    "class_index {i} out of range for {} options",
                    options.len()
                )))
            }
            _ => {}
        }
        if task.task_type.is_multimodal() && self.image_refs.is_empty() {
            return Err(invalid("multimodal task sample without image_refs".into()));
        }
        Ok(())
    }
}

/// Immutable set of task specifications with their samples indexed by task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskRegistry {
    tasks: Vec<TaskSpec>,
    samples: Vec<Sample>,
    by_task: BTreeMap<String, Vec<usize>>,
}

impl TaskRegistry {
    pub fn tasks(&self) -> &[TaskSpec] {
        &self.tasks
    }

    pub fn task(&self, task_id: &str) -> Option<&TaskSpec> {
        self.tasks.iter().find(|t| t.task_id == task_id)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// Samples of `task_id` in manifest order.
    pub fn samples_for<'a>(&'a self, task_id: &str) -> impl Iterator<Item = &'a Sample> + 'a {
        self.by_task
            .get(task_id)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
            .iter()
            .map(move |&i| &self.samples[i])
    }

    pub fn split_samples<'a>(&'a self, task_id: &str, split: Split) -> impl Iterator<Item = &'a Sample> + 'a {
        self.samples_for(task_id).filter(move |s| s.split == split)
    }

    pub fn ratio_sum(&self) -> f64 {
        self.tasks.iter().map(|t| t.mixture_ratio).sum()
    }
}

/// Validates task specs and samples and indexes samples by task.
pub fn build_registry(specs: Vec<TaskSpec>, samples: Vec<Sample>) -> Result<TaskRegistry, CorpusError> {
    let mut seen = BTreeSet::new();
    for spec in &specs {
        spec.validate()?;
        if !seen.insert(spec.task_id.as_str()) {
            return Err(CorpusError::DuplicateTask(spec.task_id.clone()));
        }
    }
    let sum: f64 = specs.iter().map(|t| t.mixture_ratio).sum();
    if !(RATIO_SUM_MIN..=RATIO_SUM_MAX).contains(&sum) {
        return Err(CorpusError::RatioSum(sum));
    }

    let mut by_task: BTreeMap<String, Vec<usize>> = specs.iter().map(|t| (t.task_id.clone(), Vec::new())).collect();
    for (i, sample) in samples.iter().enumerate() {
        let Some(task) = specs.iter().find(|t| t.task_id == sample.task_id) else {
            return Err(CorpusError::OrphanSample {
                sample_id: sample.sample_id.clone(),
                task_id: sample.task_id.clone(),
            });
        };
        sample.validate(task)?;
        if let Some(v) = by_task.get_mut(&sample.task_id) {
            v.push(i);
        }
    }
    Ok(TaskRegistry {
        tasks: specs,
        samples,
        by_task,
    })
}

/// Rejects samples whose task id is not among `tasks`, listing every
/// unknown id once in first-seen order.
pub fn check_known_tasks(samples: &[Sample], tasks: &[TaskSpec]) -> Result<(), CorpusError> {
    let mut unknown: Vec<String> = Vec::new();
    for s in samples {
        if !tasks.iter().any(|t| t.task_id == s.task_id) && !unknown.contains(&s.task_id) {
            unknown.push(s.task_id.clone());
        }
    }
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(CorpusError::UnknownTasks(unknown))
    }
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn spec(
    task_id: &str,
    task_type: TaskType,
    modality: Modality,
    ratio_percent: f64,
    fewshot_mode: FewShotMode,
    options: &[&str],
    metrics: &[MetricId],
) -> TaskSpec {
    TaskSpec {
        task_id: task_id.to_string(),
        task_type,
        modality,
        mixture_ratio: ratio_percent / 100.0,
        fewshot_mode,
        options: strings(options),
        metrics: metrics.iter().copied().collect(),
    }
}

pub const PAD_UFES_CLASSES: [&str; 6] = [
    "Nevus",
    "Basal Cell Carcinoma",
    "Squamous Cell Carcinoma",
    "Actinic Keratosis",
    "Seborrheic Keratosis",
    "Melanoma",
];

/// The twelve MultiMedBench training tasks with their mixture ratios and
/// few-shot setups.
pub fn multimedbench_tasks() -> Vec<TaskSpec> {
    use FewShotMode::*;
    use MetricId::*;
    use Modality as M;
    use TaskType::*;
    let report_metrics = [
        CeMicroF1All,
        CeMacroF1All,
        CeMicroF1Major,
        CeMacroF1Major,
        GraphF1,
        Bleu1,
        Bleu4,
        RougeL,
        CiderD,
    ];
    let vqa_metrics = [Bleu1, TokenF1];
    let cls_metrics = [MacroAuc, MacroF1];
    alloc::vec![
        spec(
            "medqa",
            QuestionAnswering,
            M::Text,
            3.13,
            TwoShotText,
            &["A", "B", "C", "D"],
            &[Accuracy]
        ),
        spec(
            "medmcqa",
            QuestionAnswering,
            M::Text,
            6.25,
            TwoShotText,
            &["A", "B", "C", "D"],
            &[Accuracy]
        ),
        spec(
            "mimic_iii",
            ReportSummarization,
            M::Radiology,
            3.13,
            ZeroShot,
            &[],
            &[RougeL, Bleu4, GraphF1]
        ),
        spec(
            "vqa_rad",
            VisualQuestionAnswering,
            M::Radiology,
            0.15,
            TextOnlyOneShot,
            &[],
            &vqa_metrics
        ),
        spec(
            "slake_vqa",
            VisualQuestionAnswering,
            M::Radiology,
            2.64,
            TextOnlyOneShot,
            &[],
            &vqa_metrics
        ),
        spec(
            "path_vqa",
            VisualQuestionAnswering,
            M::Pathology,
            1.90,
            TextOnlyOneShot,
            &[],
            &vqa_metrics
        ),
        spec(
            "mimic_cxr_report",
            ReportGeneration,
            M::ChestXray,
            59.90,
            TextOnlyOneShot,
            &[],
            &report_metrics
        ),
        spec(
            "pad_ufes_20",
            ImageClassification,
            M::Dermatology,
            6.25,
            TextOnlyOneShot,
            &PAD_UFES_CLASSES,
            &cls_metrics
        ),
        spec(
            "vindr_mammo",
            ImageClassification,
            M::Mammography,
            1.56,
            TextOnlyOneShot,
            &["1", "2", "3", "4", "5"],
            &cls_metrics
        ),
        spec(
            "cbis_ddsm",
            ImageClassification,
            M::Mammography,
            1.56,
            ZeroShot,
            &["BENIGN", "BENIGN_WITHOUT_CALLBACK", "MALIGNANT"],
            &cls_metrics
        ),
        spec(
            "mimic_cxr_cls",
            ImageClassification,
            M::ChestXray,
            11.98,
            TextOnlyOneShot,
            &["No", "Yes"],
            &cls_metrics
        ),
        spec(
            "precision_fda",
            ImageClassification,
            M::Genomics,
            1.56,
            ZeroShot,
            &["0", "1", "2"],
            &[SnpF1, IndelF1]
        ),
    ]
}

/// PubMedQA is evaluation-only: it carries a zero mixture ratio so it never
/// appears in training batches.
pub fn pubmedqa_task() -> TaskSpec {
    spec(
        "pubmedqa",
        TaskType::QuestionAnswering,
        Modality::Text,
        0.0,
        FewShotMode::ZeroShot,
        &["yes", "no", "maybe"],
        &[MetricId::Accuracy],
    )
}

/// Zero-shot tuberculosis chain-of-thought probe: a hand-written text-only
/// exemplar followed by the real image. Evaluation-only.
pub fn tb_cot_task() -> TaskSpec {
    spec(
        "montgomery_tb_cot",
        TaskType::ImageClassification,
        Modality::ChestXray,
        0.0,
        FewShotMode::TextOnlyOneShot,
        &["No", "Yes"],
        &[MetricId::Accuracy],
    )
}

/// The twelve training tasks plus the evaluation-only PubMedQA task.
pub fn default_tasks() -> Vec<TaskSpec> {
    let mut tasks = multimedbench_tasks();
    tasks.push(pubmedqa_task());
    tasks
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sample(id: &str, task: &str, class_index: Option<usize>, images: &[&str]) -> Sample {
        Sample {
            sample_id: id.into(),
            task_id: task.into(),
            split: Split::Train,
            image_refs: strings(images),
            context: Context::new(),
            question: "q".into(),
            target: "t".into(),
            class_index,
        }
    }

    #[test]
    fn multimedbench_mixture_is_a_valid_registry() {
        let tasks = multimedbench_tasks();
        assert_eq!(tasks.len(), 12);
        let reg = build_registry(tasks, vec![]).unwrap();
        assert!((reg.ratio_sum() - 1.0001).abs() < 1e-9);
    }

    #[test]
    fn multimedbench_fewshot_modes() {
        let tasks = multimedbench_tasks();
        let mode = |id: &str| tasks.iter().find(|t| t.task_id == id).unwrap().fewshot_mode;
        assert_eq!(mode("medqa"), FewShotMode::TwoShotText);
        assert_eq!(mode("medmcqa"), FewShotMode::TwoShotText);
        assert_eq!(mode("mimic_iii"), FewShotMode::ZeroShot);
        assert_eq!(mode("cbis_ddsm"), FewShotMode::ZeroShot);
        assert_eq!(mode("precision_fda"), FewShotMode::ZeroShot);
        for id in [
            "vqa_rad",
            "slake_vqa",
            "path_vqa",
            "mimic_cxr_report",
            "pad_ufes_20",
            "vindr_mammo",
            "mimic_cxr_cls",
        ] {
            assert_eq!(mode(id), FewShotMode::TextOnlyOneShot, "{id}");
        }
    }

    #[test]
    fn default_tasks_include_eval_only_pubmedqa() {
        let reg = build_registry(default_tasks(), vec![]).unwrap();
        assert_eq!(reg.task("pubmedqa").unwrap().mixture_ratio, 0.0);
    }

    #[test]
    fn single_task_with_full_ratio() {
        let mut t = pubmedqa_task();
        t.mixture_ratio = 1.0;
        assert!(build_registry(vec![t], vec![]).is_ok());
    }

    #[test]
    fn ratio_sum_violation() {
        let mut a = pubmedqa_task();
        a.mixture_ratio = 0.5;
        let mut b = pubmedqa_task();
        b.task_id = "other".into();
        b.mixture_ratio = 0.6;
        match build_registry(vec![a, b], vec![]) {
            Err(CorpusError::RatioSum(s)) => assert!((s - 1.1).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_and_orphan() {
        let mut a = pubmedqa_task();
        a.mixture_ratio = 0.5;
        let b = a.clone();
        assert_eq!(
            build_registry(vec![a.clone(), b], vec![]),
            Err(CorpusError::DuplicateTask("pubmedqa".into()))
        );
        a.mixture_ratio = 1.0;
        let err = build_registry(vec![a], vec![sample("s1", "nope", None, &[])]).unwrap_err();
        assert!(matches!(err, CorpusError::OrphanSample { .. }));
    }

    #[test]
    fn sample_invariants() {
        let tasks = multimedbench_tasks();
        let cls = tasks.iter().find(|t| t.task_id == "mimic_cxr_cls").unwrap();
        assert!(sample("a", "mimic_cxr_cls", Some(1), &["x.png"]).validate(cls).is_ok());
        assert!(sample("a", "mimic_cxr_cls", Some(2), &["x.png"]).validate(cls).is_err());
        assert!(sample("a", "mimic_cxr_cls", None, &["x.png"]).validate(cls).is_err());
        assert!(sample("a", "mimic_cxr_cls", Some(0), &[]).validate(cls).is_err());
        let vqa = tasks.iter().find(|t| t.task_id == "vqa_rad").unwrap();
        assert!(sample("b", "vqa_rad", Some(0), &["x.png"]).validate(vqa).is_err());
        assert!(sample("b", "vqa_rad", None, &["x.png"]).validate(vqa).is_ok());
    }

    #[test]
    fn per_question_options_override_task_options() {
        let tasks = multimedbench_tasks();
        let medqa = tasks.iter().find(|t| t.task_id == "medqa").unwrap();
        let mut s = sample("q", "medqa", Some(2), &[]);
        s.context = [("option_a", "x"), ("option_b", "y"), ("option_c", "z")]
            .into_iter()
            .collect();
        assert_eq!(s.options(medqa), strings(&["x", "y", "z"]));
        assert!(s.validate(medqa).is_ok());
        s.class_index = Some(3);
        assert!(s.validate(medqa).is_err());
    }

    #[test]
    fn context_keeps_order_and_replaces_in_place() {
        let mut c = Context::new();
        c.insert("b", "1");
        c.insert("a", "2");
        c.insert("b", "3");
        let keys: Vec<_> = c.iter().map(|(k, _)| k).collect();
        assert_eq!(keys, ["b", "a"]);
        assert_eq!(c.get("b"), Some("3"));
    }

    #[test]
    fn unknown_task_listing() {
        let s = vec![
            sample("1", "x", None, &[]),
            sample("2", "y", None, &[]),
            sample("3", "x", None, &[]),
        ];
        assert_eq!(
            check_known_tasks(&s, &multimedbench_tasks()),
            Err(CorpusError::UnknownTasks(vec!["x".into(), "y".into()]))
        );
    }
}
