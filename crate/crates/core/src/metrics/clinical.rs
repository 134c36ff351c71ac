//! Clinical-efficacy F1 over labeler outputs.

use super::labeler::{LabelVector14, Observation, MAJOR_FIVE};
use super::{f1_from_counts, MetricsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ObservationSubset {
    All14,
    Major5,
}

impl ObservationSubset {
    pub fn observations(self) -> &'static [Observation] {
        match self {
            ObservationSubset::All14 => &Observation::ALL,
            ObservationSubset::Major5 => &MAJOR_FIVE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Averaging {
    Micro,
    Macro,
}

/// True-positive, false-positive and false-negative counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn f1(&self) -> f64 {
        f1_from_counts(self.tp, self.fp, self.fn_)
    }
}

/// Per-observation confusion counts, in subset order.
pub fn confusion(
    pred: &[LabelVector14],
    truth: &[LabelVector14],
    subset: ObservationSubset,
) -> Result<alloc::vec::Vec<Confusion>, MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    Ok(subset
        .observations()
        .iter()
        .map(|&obs| {
            let mut c = Confusion::default();
            for (p, t) in pred.iter().zip(truth) {
                match (p.get(obs), t.get(obs)) {
                    (true, true) => c.tp += 1,
                    (true, false) => c.fp += 1,
                    (false, true) => c.fn_ += 1,
                    (false, false) => {}
                }
            }
            c
        })
        .collect())
}

/// Micro F1 pools counts over the subset; macro averages per-observation
/// F1, where an observation with no positives on either side scores 0.
pub fn ce_f1(
    pred: &[LabelVector14],
    truth: &[LabelVector14],
    subset: ObservationSubset,
    mode: Averaging,
) -> Result<f64, MetricsError> {
    let per = confusion(pred, truth, subset)?;
    Ok(match mode {
        Averaging::Micro => {
            let pooled = per.iter().fold(Confusion::default(), |a, c| Confusion {
                tp: a.tp + c.tp,
                fp: a.fp + c.fp,
                fn_: a.fn_ + c.fn_,
            });
            pooled.f1()
        }
        Averaging::Macro => per.iter().map(Confusion::f1).sum::<f64>() / per.len() as f64,
    })
}
