//! Scores model outputs for one task against a manifest.

use std::collections::BTreeMap;

use medbench_core::corpus::{MetricId, Sample, TaskSpec};
use medbench_core::metrics::classification::{accuracy, macro_auc, macro_f1_multiclass, OptionScores};
use medbench_core::metrics::clinical::{ce_f1, Averaging, ObservationSubset};
use medbench_core::metrics::graph::{graph_f1, EntityExtractor, RuleExtractor};
use medbench_core::metrics::labeler::{ReportLabeler, RuleLabeler};
use medbench_core::metrics::text::{cider_d, corpus_bleu, rouge_l, token_f1, tokenize, Smoothing, TokenSeq};
use medbench_core::metrics::variant::{variant_f1, VariantType};
use medbench_core::prompt::parse_answer;
use serde::{Deserialize, Serialize};

use crate::Error;

/// One model output. `option_scores` (per-option scores such as
/// log-likelihoods) is needed only for AUC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub sample_id: String,
    pub prediction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub option_scores: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub task_id: String,
    pub n_samples: usize,
    /// Samples with no prediction; scored as empty output.
    pub missing_predictions: Vec<String>,
    /// Predictions whose sample is not among the evaluated samples.
    pub unmatched_predictions: usize,
    /// Multiple-choice outputs that matched no option.
    pub unparseable: usize,
    pub metrics: BTreeMap<String, Option<f64>>,
    pub notes: Vec<String>,
}

/// Context key naming a genotyping candidate's variant type.
pub const VARIANT_TYPE_KEY: &str = "variant_type";

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    if n == 0 {
        0.0
    } else {
        values.sum::<f64>() / n as f64
    }
}

/// Scores every metric the task declares. Samples are matched to
/// predictions by id; a repeated prediction id keeps the last one.
pub fn evaluate(task: &TaskSpec, samples: &[&Sample], preds: &[Prediction]) -> Result<MetricReport, Error> {
    let by_id: BTreeMap<&str, &Prediction> = preds.iter().map(|p| (p.sample_id.as_str(), p)).collect();
    let wanted: std::collections::BTreeSet<&str> = samples.iter().map(|s| s.sample_id.as_str()).collect();
    let unmatched_predictions = by_id.keys().filter(|k| !wanted.contains(*k)).count();
    let mut missing_predictions = Vec::new();
    let mut outputs: Vec<&str> = Vec::with_capacity(samples.len());
    for s in samples {
        match by_id.get(s.sample_id.as_str()) {
            Some(p) => outputs.push(p.prediction.as_str()),
            None => {
                missing_predictions.push(s.sample_id.clone());
                outputs.push("");
            }
        }
    }

    let mut notes = Vec::new();
    let mut metrics = BTreeMap::new();
    let parsed: Vec<Option<usize>> = samples
        .iter()
        .zip(&outputs)
        .map(|(s, o)| parse_answer(o, &s.options(task)))
        .collect();
    let unparseable = if task.is_multiple_choice() {
        parsed.iter().filter(|p| p.is_none()).count()
    } else {
        0
    };
    let truth_class: Vec<usize> = samples.iter().map(|s| s.class_index.unwrap_or(0)).collect();
    let cand_tokens: Vec<TokenSeq> = outputs.iter().map(|o| tokenize(o)).collect();
    let ref_tokens: Vec<TokenSeq> = samples.iter().map(|s| tokenize(&s.target)).collect();
    let refs: Vec<Vec<TokenSeq>> = ref_tokens.iter().map(|r| vec![r.clone()]).collect();

    let labeler = RuleLabeler::default();
    let ce = |subset, mode| -> Result<f64, Error> {
        let pred: Vec<_> = outputs.iter().map(|o| labeler.label(o)).collect();
        let truth: Vec<_> = samples.iter().map(|s| labeler.label(&s.target)).collect();
        Ok(ce_f1(&pred, &truth, subset, mode)?)
    };

    for metric in &task.metrics {
        let value = match metric {
            MetricId::Accuracy => Some(accuracy(&parsed, &truth_class)?),
            MetricId::Bleu1 => Some(corpus_bleu(&cand_tokens, &refs, 1, Smoothing::None)?),
            MetricId::Bleu4 => Some(corpus_bleu(&cand_tokens, &refs, 4, Smoothing::None)?),
            MetricId::RougeL => Some(mean(cand_tokens.iter().zip(&ref_tokens).map(|(c, r)| rouge_l(c, r)))),
            MetricId::TokenF1 => Some(mean(cand_tokens.iter().zip(&ref_tokens).map(|(c, r)| token_f1(c, r)))),
            MetricId::CiderD => {
                if samples.is_empty() {
                    None
                } else {
                    Some(cider_d(&cand_tokens, &refs)?.0)
                }
            }
            MetricId::CeMicroF1All => Some(ce(ObservationSubset::All14, Averaging::Micro)?),
            MetricId::CeMacroF1All => Some(ce(ObservationSubset::All14, Averaging::Macro)?),
            MetricId::CeMicroF1Major => Some(ce(ObservationSubset::Major5, Averaging::Micro)?),
            MetricId::CeMacroF1Major => Some(ce(ObservationSubset::Major5, Averaging::Macro)?),
            MetricId::GraphF1 => {
                let ex = RuleExtractor::default();
                Some(mean(
                    samples
                        .iter()
                        .zip(&outputs)
                        .map(|(s, o)| graph_f1(&ex.extract(o), &ex.extract(&s.target))),
                ))
            }
            MetricId::MacroAuc => {
                let k = task.options.len();
                let scores: Option<Vec<OptionScores>> = samples
                    .iter()
                    .map(|s| {
                        by_id
                            .get(s.sample_id.as_str())
                            .and_then(|p| p.option_scores.clone())
                            .filter(|v| v.len() == k)
                            .map(OptionScores)
                    })
                    .collect();
                match scores {
                    Some(scores) if !scores.is_empty() => {
                        let r = macro_auc(&scores, &truth_class)?;
                        if !r.skipped.is_empty() {
                            notes.push(format!(
                                "macro_auc skipped classes {:?} lacking positives or negatives",
                                r.skipped
                            ));
                        }
                        r.value
                    }
                    _ => {
                        notes.push(format!("macro_auc needs option_scores of length {k} for every sample"));
                        None
                    }
                }
            }
            MetricId::MacroF1 => Some(macro_f1_multiclass(&parsed, &truth_class, task.options.len())?),
            MetricId::SnpF1 | MetricId::IndelF1 => {
                let types: Option<Vec<VariantType>> = samples
                    .iter()
                    .map(
                        |s| match s.context.get(VARIANT_TYPE_KEY).map(str::to_ascii_lowercase).as_deref() {
                            Some("snp") => Some(VariantType::Snp),
                            Some("indel") => Some(VariantType::Indel),
                            _ => None,
                        },
                    )
                    .collect();
                match types {
                    Some(types) => {
                        // An unparseable answer is no call.
                        let calls: Vec<usize> = parsed.iter().map(|p| p.unwrap_or(0)).collect();
                        let r = variant_f1(&calls, &truth_class, &types)?;
                        if *metric == MetricId::SnpF1 {
                            r.snp
                        } else {
                            r.indel
                        }
                    }
                    None => {
                        notes.push(format!(
                            "{} needs context `{VARIANT_TYPE_KEY}` of snp or indel on every sample",
                            metric.name()
                        ));
                        None
                    }
                }
            }
        };
        metrics.insert(metric.name().to_string(), value);
    }
    notes.dedup();
    Ok(MetricReport {
        task_id: task.task_id.clone(),
        n_samples: samples.len(),
        missing_predictions,
        unmatched_predictions,
        unparseable,
        metrics,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use medbench_core::corpus::{default_tasks, Context, Split};

    fn task(id: &str) -> TaskSpec {
        default_tasks().into_iter().find(|t| t.task_id == id).unwrap()
    }

    fn sample(id: &str, task: &str, target: &str, class: Option<usize>) -> Sample {
        Sample {
            sample_id: id.into(),
            task_id: task.into(),
            split: Split::Test,
            image_refs: vec!["x.png".into()],
            context: Context::new(),
            question: "q".into(),
            target: target.into(),
            class_index: class,
        }
    }

    fn pred(id: &str, text: &str) -> Prediction {
        Prediction {
            sample_id: id.into(),
            prediction: text.into(),
            option_scores: None,
        }
    }

    #[test]
    fn report_generation_fields() {
        let t = task("mimic_cxr_report");
        let s = [
            sample("a", &t.task_id, "Mild cardiomegaly. No pleural effusion.", None),
            sample("b", &t.task_id, "Small left pleural effusion.", None),
        ];
        let refs: Vec<&Sample> = s.iter().collect();
        let r = evaluate(
            &t,
            &refs,
            &[pred("a", "Mild cardiomegaly. No pleural effusion."), pred("z", "x")],
        )
        .unwrap();
        assert_eq!(r.missing_predictions, vec!["b".to_string()]);
        assert_eq!(r.unmatched_predictions, 1);
        for key in [
            "ce_micro_f1_14",
            "ce_macro_f1_5",
            "graph_f1",
            "bleu4",
            "cider_d",
            "rouge_l",
        ] {
            assert!(r.metrics[key].is_some(), "{key}");
        }
        // a: cardiomegaly TP. b: effusion FN, and the empty output is
        // labeled no finding (FP).
        assert_eq!(r.metrics["ce_micro_f1_14"], Some(2.0 / (2.0 + 1.0 + 1.0)));
    }

    #[test]
    fn classification_and_auc() {
        let t = task("mimic_cxr_cls");
        let s = [
            sample("a", &t.task_id, "Yes", Some(1)),
            sample("b", &t.task_id, "No", Some(0)),
        ];
        let refs: Vec<&Sample> = s.iter().collect();
        let mut p = vec![pred("a", "Yes"), pred("b", "maybe")];
        let r = evaluate(&t, &refs, &p).unwrap();
        assert_eq!(r.unparseable, 1);
        assert_eq!(r.metrics["macro_auc"], None);
        p[0].option_scores = Some(vec![-2.0, -0.1]);
        p[1].option_scores = Some(vec![-0.2, -3.0]);
        let r = evaluate(&t, &refs, &p).unwrap();
        assert_eq!(r.metrics["macro_auc"], Some(1.0));
        assert_eq!(r.metrics["macro_f1"], Some(0.5));
    }

    #[test]
    fn genotype_strata() {
        let t = task("precision_fda");
        let mut s = [
            sample("a", &t.task_id, "1", Some(1)),
            sample("b", &t.task_id, "2", Some(2)),
        ];
        s[0].context.insert(VARIANT_TYPE_KEY, "snp");
        s[1].context.insert(VARIANT_TYPE_KEY, "indel");
        let refs: Vec<&Sample> = s.iter().collect();
        let r = evaluate(&t, &refs, &[pred("a", "1"), pred("b", "1")]).unwrap();
        assert_eq!(r.metrics["snp_f1"], Some(1.0));
        assert_eq!(r.metrics["indel_f1"], Some(0.0));
    }
}
