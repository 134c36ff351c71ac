//! Accuracy, one-vs-rest AUC, and macro F1 for option-based tasks.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{f1_from_counts, MetricsError};

/// Raw per-option scores for one sample (e.g. log-likelihoods).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionScores(pub Vec<f64>);

impl OptionScores {
    /// Softmax over options, shifted by the maximum for stability.
    pub fn probabilities(&self) -> Vec<f64> {
        let max = self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = self.0.iter().map(|s| libm::exp(s - max)).collect();
        let total: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / total).collect()
    }
}

/// Share of samples whose parsed prediction equals the truth; unparseable
/// (`None`) predictions count as wrong. Empty input gives 0.
pub fn accuracy(preds: &[Option<usize>], truth: &[usize]) -> Result<f64, MetricsError> {
    check_len(preds.len(), truth.len())?;
    if truth.is_empty() {
        return Ok(0.0);
    }
    let correct = preds.iter().zip(truth).filter(|(p, t)| **p == Some(**t)).count();
    Ok(correct as f64 / truth.len() as f64)
}

fn check_len(left: usize, right: usize) -> Result<(), MetricsError> {
    if left == right {
        Ok(())
    } else {
        Err(MetricsError::LengthMismatch { left, right })
    }
}

/// Area under the ROC curve from the rank statistic: the share of
/// (positive, negative) pairs ordered correctly, ties counting one half.
/// `None` when either class is absent.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<Option<f64>, MetricsError> {
    check_len(scores.len(), labels.len())?;
    let n_pos = labels.iter().filter(|l| **l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Ok(None);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Midranks (1-based) over tie groups.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if labels[k] {
                rank_sum_pos += mid;
            }
        }
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok(Some((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroAuc {
    /// Mean over scored classes; `None` if no class could be scored.
    pub value: Option<f64>,
    pub per_class: Vec<Option<f64>>,
    /// Classes skipped for lacking positives or negatives.
    pub skipped: Vec<usize>,
}

/// Unweighted mean of one-vs-rest AUCs on softmax probabilities.
pub fn macro_auc(scores: &[OptionScores], truth: &[usize]) -> Result<MacroAuc, MetricsError> {
    check_len(scores.len(), truth.len())?;
    let k = scores.first().map_or(0, |s| s.0.len());
    if let Some(bad) = scores.iter().find(|s| s.0.len() != k) {
        return Err(MetricsError::LengthMismatch {
            left: k,
            right: bad.0.len(),
        });
    }
    if let Some(&t) = truth.iter().find(|&&t| t >= k) {
        return Err(MetricsError::ClassOutOfRange { class: t, classes: k });
    }
    let probs: Vec<Vec<f64>> = scores.iter().map(OptionScores::probabilities).collect();
    let mut per_class = Vec::with_capacity(k);
    let mut skipped = Vec::new();
    for c in 0..k {
        let col: Vec<f64> = probs.iter().map(|p| p[c]).collect();
        let labels: Vec<bool> = truth.iter().map(|&t| t == c).collect();
        let auc = roc_auc(&col, &labels)?;
        if auc.is_none() {
            skipped.push(c);
        }
        per_class.push(auc);
    }
    let scored: Vec<f64> = per_class.iter().flatten().copied().collect();
    let value = (!scored.is_empty()).then(|| scored.iter().sum::<f64>() / scored.len() as f64);
    Ok(MacroAuc {
        value,
        per_class,
        skipped,
    })
}

/// Unweighted mean of per-class one-vs-rest F1 over all `k` classes. A
/// class with no true and no predicted members scores 0. Unparseable
/// predictions are misses for their true class only.
pub fn macro_f1_multiclass(preds: &[Option<usize>], truth: &[usize], k: usize) -> Result<f64, MetricsError> {
    check_len(preds.len(), truth.len())?;
    if k == 0 {
        return Ok(0.0);
    }
    for &c in truth.iter().chain(preds.iter().flatten()) {
        if c >= k {
            return Err(MetricsError::ClassOutOfRange { class: c, classes: k });
        }
    }
    let mut total = 0.0;
    for c in 0..k {
        let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
        for (p, &t) in preds.iter().zip(truth) {
            let predicted = *p == Some(c);
            match (predicted, t == c) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        total += f1_from_counts(tp, fp, fn_);
    }
    Ok(total / k as f64)
}
