//! Slow, direct re-implementations of the text metrics.

use std::collections::HashMap;

use medbench_core::metrics::text::{bleu, cider_d, rouge_l, token_f1, TokenSeq, CIDER_SIGMA};
use medbench_core::rng::{index, seeded, Rng};

pub const ALPHABET: [&str; 4] = ["a", "b", "c", "d"];

pub fn random_seq(rng: &mut Rng, max_len: usize) -> Vec<&'static str> {
    let len = index(rng, max_len + 1);
    (0..len).map(|_| ALPHABET[index(rng, 4)]).collect()
}

pub fn seq(tokens: &[&str]) -> TokenSeq {
    TokenSeq::from_tokens(tokens.iter().copied())
}

pub fn occurrences(hay: &[&str], gram: &[&str]) -> usize {
    if gram.len() > hay.len() {
        return 0;
    }
    (0..=hay.len() - gram.len())
        .filter(|&i| &hay[i..i + gram.len()] == gram)
        .count()
}

/// BLEU computed straight from the definition, one n-gram position at a time.
pub fn bleu_oracle(cand: &[&str], refs: &[Vec<&str>], max_n: usize) -> f64 {
    if cand.is_empty() {
        return 0.0;
    }
    let mut product = 1.0f64;
    for n in 1..=max_n {
        if cand.len() < n {
            return 0.0;
        }
        let mut seen: Vec<&[&str]> = Vec::new();
        let mut clipped = 0usize;
        for i in 0..=cand.len() - n {
            let g = &cand[i..i + n];
            if seen.contains(&g) {
                continue;
            }
            seen.push(g);
            let in_cand = occurrences(cand, g);
            let best_ref = refs.iter().map(|r| occurrences(r, g)).max().unwrap_or(0);
            clipped += in_cand.min(best_ref);
        }
        if clipped == 0 {
            return 0.0;
        }
        product *= clipped as f64 / (cand.len() - n + 1) as f64;
    }
    let c = cand.len() as f64;
    let mut r = refs[0].len();
    for x in refs {
        let (d_new, d_old) = ((x.len() as f64 - c).abs(), (r as f64 - c).abs());
        if d_new < d_old || (d_new == d_old && x.len() < r) {
            r = x.len();
        }
    }
    let bp = if c > r as f64 { 1.0 } else { (1.0 - r as f64 / c).exp() };
    bp * product.powf(1.0 / max_n as f64)
}

pub fn is_subsequence(needle: &[&str], hay: &[&str]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|n| it.any(|h| h == n))
}

/// LCS by enumerating every subsequence of the candidate.
pub fn lcs_oracle(a: &[&str], b: &[&str]) -> usize {
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let sub: Vec<&str> = (0..a.len()).filter(|i| mask & (1 << i) != 0).map(|i| a[i]).collect();
        if sub.len() > best && is_subsequence(&sub, b) {
            best = sub.len();
        }
    }
    best
}

pub fn rouge_oracle(cand: &[&str], reference: &[&str]) -> f64 {
    if cand.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_oracle(cand, reference) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let (p, r) = (lcs / cand.len() as f64, lcs / reference.len() as f64);
    let b2 = 1.2f64 * 1.2;
    (1.0 + b2) * p * r / (r + b2 * p)
}

/// Multiset overlap by striking matched tokens out of a copy.
pub fn token_f1_oracle(pred: &[&str], gold: &[&str]) -> f64 {
    if pred.is_empty() && gold.is_empty() {
        return 1.0;
    }
    let mut pool: Vec<&str> = gold.to_vec();
    let mut common = 0;
    for p in pred {
        if let Some(i) = pool.iter().position(|g| g == p) {
            pool.remove(i);
            common += 1;
        }
    }
    if common == 0 {
        return 0.0;
    }
    let (p, r) = (common as f64 / pred.len() as f64, common as f64 / gold.len() as f64);
    2.0 * p * r / (p + r)
}

/// CIDEr-D written out over an explicit n-gram vocabulary with dense vectors.
pub fn cider_oracle(cands: &[Vec<&str>], refs: &[Vec<Vec<&str>>]) -> Vec<f64> {
    let n_docs = refs.len() as f64;
    let grams = |s: &[&str], n: usize| -> Vec<Vec<String>> {
        if s.len() < n {
            return vec![];
        }
        (0..=s.len() - n)
            .map(|i| s[i..i + n].iter().map(|x| x.to_string()).collect())
            .collect()
    };
    // Document frequency: number of reference sets containing the n-gram.
    let mut df: HashMap<Vec<String>, f64> = HashMap::new();
    for set in refs {
        let mut in_set: Vec<Vec<String>> = Vec::new();
        for r in set {
            for n in 1..=4 {
                for g in grams(r, n) {
                    if !in_set.contains(&g) {
                        in_set.push(g);
                    }
                }
            }
        }
        for g in in_set {
            *df.entry(g).or_insert(0.0) += 1.0;
        }
    }
    let vector = |s: &[&str], n: usize, vocab: &[Vec<String>]| -> Vec<f64> {
        let gs = grams(s, n);
        vocab
            .iter()
            .map(|g| {
                let tf = gs.iter().filter(|x| *x == g).count() as f64;
                let d = df.get(g).copied().unwrap_or(0.0).max(1.0);
                tf * (n_docs.ln() - d.ln())
            })
            .collect()
    };
    let mut out = Vec::new();
    for (cand, set) in cands.iter().zip(refs) {
        let mut total = 0.0;
        for r in set {
            let mut per_n = 0.0;
            for n in 1..=4 {
                let mut vocab: Vec<Vec<String>> = Vec::new();
                for g in grams(cand, n).into_iter().chain(grams(r, n)) {
                    if !vocab.contains(&g) {
                        vocab.push(g);
                    }
                }
                let h = vector(cand, n, &vocab);
                let v = vector(r, n, &vocab);
                let dot: f64 = h.iter().zip(&v).map(|(a, b)| a.min(*b) * b).sum();
                let nh = h.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                let cos = if nh != 0.0 && nv != 0.0 { dot / (nh * nv) } else { dot };
                let delta = cand.len().saturating_sub(1) as f64 - r.len().saturating_sub(1) as f64;
                per_n += cos * (-(delta * delta) / (2.0 * CIDER_SIGMA * CIDER_SIGMA)).exp();
            }
            total += per_n / 4.0;
        }
        out.push(10.0 * total / set.len() as f64);
    }
    out
}

pub fn w(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

/// Candidates, and one reference set per candidate.
pub type CiderCorpus = (Vec<Vec<&'static str>>, Vec<Vec<Vec<&'static str>>>);

pub fn cider_corpora() -> Vec<CiderCorpus> {
    // (candidates, one "|"-separated reference set per candidate)
    let raw: [(&[&str], &[&str]); 20] = [
        (
            &["no acute disease", "heart is normal"],
            &["no acute disease|no acute process", "heart size normal"],
        ),
        (&["a b c", "a b", "c d"], &["a b c|a b d", "a b", "d c"]),
        (
            &["lungs are clear", "small effusion"],
            &["lungs clear", "small left effusion|tiny effusion"],
        ),
        (&["x", "y", "z"], &["x", "y", "q"]),
        (&["a a a a", "b"], &["a a", "b b b"]),
        (
            &["stable cardiomegaly", "no pneumothorax seen", "edema"],
            &["cardiomegaly stable", "no pneumothorax", "mild edema|edema"],
        ),
        (
            &["one two three four five six", "one two"],
            &["one two three four five six", "two one"],
        ),
        (&["a b c d", "a b c d"], &["a b c d", "d c b a"]),
        (
            &["tube in place", "line tip in svc"],
            &["tube in good position|tube in place", "line tip svc"],
        ),
        (&["p q", "q r", "r s", "s p"], &["p q", "q r", "r s", "s t"]),
        (&["", "a"], &["a", "a"]),
        (
            &["mild opacity base", "clear"],
            &["opacity at base", "lungs are clear|clear lungs"],
        ),
        (&["a", "b", "c", "d"], &["a b", "b c", "c d", "d a"]),
        (
            &["heart normal lungs clear", "no effusion"],
            &["heart normal|lungs clear", "no pleural effusion"],
        ),
        (&["c c c", "d d"], &["c", "d"]),
        (
            &["new consolidation", "old fracture", "no change"],
            &["new consolidation right", "healed fracture", "no interval change"],
        ),
        (&["a b a b", "b a b a"], &["a b", "b a"]),
        (
            &["single candidate words here", "more words"],
            &["single candidate words here", "words more|more words"],
        ),
        (&["e f g h i j", "e f"], &["e f g|h i j", "f e"]),
        (
            &["atelectasis left base", "atelectasis right base", "no atelectasis"],
            &["left basilar atelectasis", "right base atelectasis", "no atelectasis"],
        ),
    ];
    raw.iter()
        .map(|(c, r)| {
            (
                c.iter().map(|s| w(s)).collect(),
                r.iter().map(|set| set.split('|').map(w).collect()).collect(),
            )
        })
        .collect()
}

/// Worst absolute gap between the library and the oracles over `trials`
/// random pairs (BLEU-1..4 against one or two references, ROUGE-L and
/// token F1 against the first reference), with the offending case.
pub fn random_pair_max_error(seed: u64, trials: usize) -> (f64, String) {
    let mut rng = seeded(seed);
    let mut worst = (0.0f64, String::new());
    let mut note = |gap: f64, what: String| {
        if gap > worst.0 || gap.is_nan() {
            worst = (if gap.is_nan() { f64::INFINITY } else { gap }, what);
        }
    };
    for _ in 0..trials {
        let cand = random_seq(&mut rng, 6);
        let n_refs = 1 + index(&mut rng, 2);
        let refs: Vec<Vec<&str>> = (0..n_refs).map(|_| random_seq(&mut rng, 6)).collect();
        let ref_seqs: Vec<TokenSeq> = refs.iter().map(|r| seq(r)).collect();
        for max_n in 1..=4 {
            let got = bleu(&seq(&cand), &ref_seqs, max_n).unwrap();
            let want = bleu_oracle(&cand, &refs, max_n);
            note(
                (got - want).abs(),
                format!("bleu-{max_n} {cand:?} {refs:?}: {got} vs {want}"),
            );
        }
        let got = rouge_l(&seq(&cand), &ref_seqs[0]);
        let want = rouge_oracle(&cand, &refs[0]);
        note(
            (got - want).abs(),
            format!("rouge_l {cand:?} {:?}: {got} vs {want}", refs[0]),
        );
        let got = token_f1(&seq(&cand), &ref_seqs[0]);
        let want = token_f1_oracle(&cand, &refs[0]);
        note(
            (got - want).abs(),
            format!("token_f1 {cand:?} {:?}: {got} vs {want}", refs[0]),
        );
    }
    worst
}

/// Worst gap between `cider_d` and the dense-vector oracle over the 20
/// corpora, per-candidate scores and corpus means both.
pub fn cider_max_error() -> f64 {
    let mut worst = 0.0f64;
    for (cands, refs) in cider_corpora() {
        let c: Vec<TokenSeq> = cands.iter().map(|s| seq(s)).collect();
        let r: Vec<Vec<TokenSeq>> = refs.iter().map(|set| set.iter().map(|s| seq(s)).collect()).collect();
        let (mean, per) = cider_d(&c, &r).unwrap();
        let want = cider_oracle(&cands, &refs);
        if per.len() != want.len() {
            return f64::INFINITY;
        }
        for (g, w) in per.iter().zip(&want) {
            worst = worst.max((g - w).abs());
        }
        worst = worst.max((mean - want.iter().sum::<f64>() / want.len() as f64).abs());
    }
    worst
}
