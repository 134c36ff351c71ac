//! Tokenization and text-overlap metrics: BLEU, ROUGE-L, CIDEr-D, token F1.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use super::MetricsError;

/// Ordered lowercase tokens with no empty entries.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    /// Lowercases each token and drops empty ones.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self(
            tokens
                .into_iter()
                .map(|t| t.as_ref().to_lowercase())
                .filter(|t| !t.is_empty())
                .collect(),
        )
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn join(&self) -> String {
        self.0.join(" ")
    }
}

/// Lowercases, splits on whitespace, and peels leading and trailing ASCII
/// punctuation into single-character tokens. Inner punctuation stays
/// (`1.7`, `x-ray`).
pub fn tokenize(text: &str) -> TokenSeq {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let lower = chunk.to_lowercase();
        let start = lower.find(|c: char| !c.is_ascii_punctuation()).unwrap_or(lower.len());
        for c in lower[..start].chars() {
            out.push(String::from(c));
        }
        let rest = &lower[start..];
        let end = rest
            .rfind(|c: char| !c.is_ascii_punctuation())
            .map_or(0, |i| i + rest[i..].chars().next().map_or(1, char::len_utf8));
        if end > 0 {
            out.push(String::from(&rest[..end]));
        }
        for c in rest[end..].chars() {
            out.push(String::from(c));
        }
    }
    TokenSeq(out)
}

type Counts<'a> = BTreeMap<&'a [String], usize>;

fn ngram_counts(tokens: &[String], n: usize) -> Counts<'_> {
    let mut counts = BTreeMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

/// How zero n-gram matches are handled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Smoothing {
    /// Any zero precision makes the score 0.
    #[default]
    None,
    /// Add one to numerator and denominator for n >= 2.
    AddOne,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct BleuStats {
    matches: [u64; 4],
    totals: [u64; 4],
    cand_len: u64,
    ref_len: u64,
}

fn closest_ref_len(cand_len: usize, refs: &[TokenSeq]) -> usize {
    refs.iter()
        .map(TokenSeq::len)
        .min_by_key(|&r| (r.abs_diff(cand_len), r))
        .unwrap_or(0)
}

fn bleu_stats(candidate: &TokenSeq, references: &[TokenSeq], max_n: usize) -> BleuStats {
    let mut s = BleuStats {
        cand_len: candidate.len() as u64,
        ref_len: closest_ref_len(candidate.len(), references) as u64,
        ..Default::default()
    };
    for n in 1..=max_n {
        let cand = ngram_counts(&candidate.0, n);
        let mut max_ref: Counts<'_> = BTreeMap::new();
        for r in references {
            for (g, c) in ngram_counts(&r.0, n) {
                let slot = max_ref.entry(g).or_insert(0);
                *slot = (*slot).max(c);
            }
        }
        s.matches[n - 1] = cand
            .iter()
            .map(|(g, c)| (*c).min(max_ref.get(g).copied().unwrap_or(0)) as u64)
            .sum();
        s.totals[n - 1] = candidate.len().saturating_sub(n - 1) as u64;
    }
    s
}

fn bleu_from_stats(s: &BleuStats, max_n: usize, smoothing: Smoothing) -> f64 {
    if s.cand_len == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 0..max_n {
        let (mut m, mut t) = (s.matches[n] as f64, s.totals[n] as f64);
        if smoothing == Smoothing::AddOne && n > 0 {
            m += 1.0;
            t += 1.0;
        }
        if m == 0.0 || t == 0.0 {
            return 0.0;
        }
        log_sum += libm::log(m / t);
    }
    let bp = if s.cand_len > s.ref_len {
        1.0
    } else {
        libm::exp(1.0 - s.ref_len as f64 / s.cand_len as f64)
    };
    bp * libm::exp(log_sum / max_n as f64)
}

fn check_order(max_n: usize) -> Result<(), MetricsError> {
    if (1..=4).contains(&max_n) {
        Ok(())
    } else {
        Err(MetricsError::BleuOrder(max_n))
    }
}

/// Sentence BLEU with clipped n-gram precision, the brevity penalty against
/// the closest reference length (ties go to the shorter), uniform weights,
/// and no smoothing.
pub fn bleu(candidate: &TokenSeq, references: &[TokenSeq], max_n: usize) -> Result<f64, MetricsError> {
    bleu_smoothed(candidate, references, max_n, Smoothing::None)
}

pub fn bleu_smoothed(
    candidate: &TokenSeq,
    references: &[TokenSeq],
    max_n: usize,
    smoothing: Smoothing,
) -> Result<f64, MetricsError> {
    check_order(max_n)?;
    Ok(bleu_from_stats(
        &bleu_stats(candidate, references, max_n),
        max_n,
        smoothing,
    ))
}

/// Corpus BLEU: match and length counts are pooled before combining.
pub fn corpus_bleu(
    candidates: &[TokenSeq],
    references: &[Vec<TokenSeq>],
    max_n: usize,
    smoothing: Smoothing,
) -> Result<f64, MetricsError> {
    check_order(max_n)?;
    if candidates.len() != references.len() {
        return Err(MetricsError::LengthMismatch {
            left: candidates.len(),
            right: references.len(),
        });
    }
    let mut total = BleuStats::default();
    for (c, refs) in candidates.iter().zip(references) {
        let s = bleu_stats(c, refs, max_n);
        for n in 0..4 {
            total.matches[n] += s.matches[n];
            total.totals[n] += s.totals[n];
        }
        total.cand_len += s.cand_len;
        total.ref_len += s.ref_len;
    }
    Ok(bleu_from_stats(&total, max_n, smoothing))
}

/// ROUGE-L recall weighting.
pub const ROUGE_L_BETA: f64 = 1.2;

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = alloc::vec![0usize; b.len() + 1];
    let mut cur = alloc::vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// LCS-based F-measure, `(1+b^2)PR / (R + b^2 P)` with b = 1.2. Empty
/// input scores 0.
pub fn rouge_l(candidate: &TokenSeq, reference: &TokenSeq) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(&candidate.0, &reference.0) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let p = lcs / candidate.len() as f64;
    let r = lcs / reference.len() as f64;
    let b2 = ROUGE_L_BETA * ROUGE_L_BETA;
    (1.0 + b2) * p * r / (r + b2 * p)
}

/// Multiset token overlap F1. Two empty sequences score 1.
pub fn token_f1(prediction: &TokenSeq, target: &TokenSeq) -> f64 {
    if prediction.is_empty() && target.is_empty() {
        return 1.0;
    }
    if prediction.is_empty() || target.is_empty() {
        return 0.0;
    }
    let pred = ngram_counts(&prediction.0, 1);
    let gold = ngram_counts(&target.0, 1);
    let common: usize = pred
        .iter()
        .map(|(g, c)| (*c).min(gold.get(g).copied().unwrap_or(0)))
        .sum();
    if common == 0 {
        return 0.0;
    }
    let p = common as f64 / prediction.len() as f64;
    let r = common as f64 / target.len() as f64;
    2.0 * p * r / (p + r)
}

/// Highest n-gram order in CIDEr-D.
pub const CIDER_MAX_N: usize = 4;
/// Gaussian length-penalty width.
pub const CIDER_SIGMA: f64 = 6.0;

struct CiderVec<'a> {
    vec: [BTreeMap<&'a [String], f64>; CIDER_MAX_N],
    norm: [f64; CIDER_MAX_N],
    /// Bigram count, the length measure used by the reference scorer.
    length: f64,
}

/// Document frequencies over a reference corpus, one entry per reference
/// set (image).
#[derive(Debug, Clone)]
pub struct CiderD {
    df: BTreeMap<Vec<String>, f64>,
    log_n: f64,
}

impl CiderD {
    /// Builds IDF statistics; each inner list is one item's references.
    pub fn from_corpus(corpus: &[Vec<TokenSeq>]) -> Result<Self, MetricsError> {
        if corpus.is_empty() {
            return Err(MetricsError::EmptyCorpus);
        }
        let mut df: BTreeMap<Vec<String>, f64> = BTreeMap::new();
        for refs in corpus {
            let mut seen: BTreeSet<&[String]> = BTreeSet::new();
            for r in refs {
                for n in 1..=CIDER_MAX_N {
                    seen.extend(ngram_counts(&r.0, n).into_keys());
                }
            }
            for g in seen {
                *df.entry(g.to_vec()).or_insert(0.0) += 1.0;
            }
        }
        Ok(Self {
            df,
            log_n: libm::log(corpus.len() as f64),
        })
    }

    fn vectorize<'a>(&self, seq: &'a TokenSeq) -> CiderVec<'a> {
        let mut out = CiderVec {
            vec: Default::default(),
            norm: [0.0; CIDER_MAX_N],
            length: seq.len().saturating_sub(1) as f64,
        };
        for n in 1..=CIDER_MAX_N {
            for (g, tf) in ngram_counts(&seq.0, n) {
                let df = self.df.get(g).copied().unwrap_or(0.0).max(1.0);
                let w = tf as f64 * (self.log_n - libm::log(df));
                out.norm[n - 1] += w * w;
                out.vec[n - 1].insert(g, w);
            }
        }
        for v in &mut out.norm {
            *v = libm::sqrt(*v);
        }
        out
    }

    fn sim(hyp: &CiderVec<'_>, refv: &CiderVec<'_>) -> [f64; CIDER_MAX_N] {
        let delta = hyp.length - refv.length;
        let penalty = libm::exp(-(delta * delta) / (2.0 * CIDER_SIGMA * CIDER_SIGMA));
        let mut val = [0.0; CIDER_MAX_N];
        for (n, v) in val.iter_mut().enumerate() {
            for (g, h) in &hyp.vec[n] {
                if let Some(r) = refv.vec[n].get(g) {
                    *v += h.min(*r) * r;
                }
            }
            if hyp.norm[n] != 0.0 && refv.norm[n] != 0.0 {
                *v /= hyp.norm[n] * refv.norm[n];
            }
            *v *= penalty;
        }
        val
    }

    /// Score of one candidate against its references.
    pub fn score(&self, candidate: &TokenSeq, references: &[TokenSeq]) -> f64 {
        if references.is_empty() {
            return 0.0;
        }
        let hyp = self.vectorize(candidate);
        let mut acc = [0.0; CIDER_MAX_N];
        for r in references {
            let s = Self::sim(&hyp, &self.vectorize(r));
            for n in 0..CIDER_MAX_N {
                acc[n] += s[n];
            }
        }
        let mean: f64 = acc.iter().sum::<f64>() / CIDER_MAX_N as f64;
        mean / references.len() as f64 * 10.0
    }
}

/// Corpus CIDEr-D with IDF over `references`; returns the mean and the
/// per-item scores.
pub fn cider_d(candidates: &[TokenSeq], references: &[Vec<TokenSeq>]) -> Result<(f64, Vec<f64>), MetricsError> {
    cider_d_with_corpus(candidates, references, references)
}

/// As [`cider_d`] but with IDF from a separate reference corpus.
pub fn cider_d_with_corpus(
    candidates: &[TokenSeq],
    references: &[Vec<TokenSeq>],
    corpus: &[Vec<TokenSeq>],
) -> Result<(f64, Vec<f64>), MetricsError> {
    if candidates.len() != references.len() {
        return Err(MetricsError::LengthMismatch {
            left: candidates.len(),
            right: references.len(),
        });
    }
    let scorer = CiderD::from_corpus(corpus)?;
    let scores: Vec<f64> = candidates
        .iter()
        .zip(references)
        .map(|(c, r)| scorer.score(c, r))
        .collect();
    let mean = if scores.is_empty() {
        0.0
    } else {
        scores.iter().sum::<f64>() / scores.len() as f64
    };
    Ok((mean, scores))
}
