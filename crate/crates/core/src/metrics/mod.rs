//! Evaluation metrics.

pub mod classification;
pub mod clinical;
pub mod graph;
pub mod labeler;
pub mod text;
pub mod variant;

pub use classification::{accuracy, macro_auc, macro_f1_multiclass, roc_auc, MacroAuc, OptionScores};
pub use clinical::{ce_f1, Averaging, ObservationSubset};
pub use graph::{graph_f1, EntityExtractor, EntityGraph, RuleExtractor};
pub use labeler::{label_report, LabelVector14, Lexicon, Observation, ReportLabeler, RuleLabeler};
pub use text::{bleu, cider_d, corpus_bleu, rouge_l, token_f1, tokenize, Smoothing, TokenSeq};
pub use variant::{variant_f1, VariantF1, VariantType};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("input lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty reference corpus")]
    EmptyCorpus,
    #[error("BLEU order must be 1 to 4, got {0}")]
    BleuOrder(usize),
    #[error("class {class} out of range for {classes} classes")]
    ClassOutOfRange { class: usize, classes: usize },
}

/// `2tp / (2tp + fp + fn)`, or 0 when there is nothing to count.
pub fn f1_from_counts(tp: u64, fp: u64, fn_: u64) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}
