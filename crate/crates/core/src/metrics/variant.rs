//! Stratified genotype-call F1 for SNPs and indels.

use serde::{Deserialize, Serialize};

use super::{f1_from_counts, MetricsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantType {
    Snp,
    Indel,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VariantF1 {
    /// `None` when the stratum has no candidates or no calls either way.
    pub snp: Option<f64>,
    pub indel: Option<f64>,
}

/// Genotypes are copy counts (0, 1, 2). A non-zero prediction is a call:
/// a call matching the truth is a TP; a call that does not is a FP; a
/// non-zero truth not matched is a FN (so a wrong non-zero genotype counts
/// as both FP and FN).
pub fn variant_f1(preds: &[usize], truth: &[usize], types: &[VariantType]) -> Result<VariantF1, MetricsError> {
    if preds.len() != truth.len() || preds.len() != types.len() {
        return Err(MetricsError::LengthMismatch {
            left: preds.len(),
            right: if preds.len() != truth.len() {
                truth.len()
            } else {
                types.len()
            },
        });
    }
    let stratum = |kind: VariantType| {
        let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
        for ((&p, &t), &ty) in preds.iter().zip(truth).zip(types) {
            if ty != kind {
                continue;
            }
            if p != 0 && p == t {
                tp += 1;
            }
            if p != 0 && p != t {
                fp += 1;
            }
            if t != 0 && p != t {
                fn_ += 1;
            }
        }
        (tp + fp + fn_ > 0).then(|| f1_from_counts(tp, fp, fn_))
    };
    Ok(VariantF1 {
        snp: stratum(VariantType::Snp),
        indel: stratum(VariantType::Indel),
    })
}
