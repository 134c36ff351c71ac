//! Radiologist evaluation: blinded case presentation, rankings, passage
//! annotations, and per-report error and omission rates with bootstrap
//! intervals.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::rng::{derive_seed, index, seeded, shuffle, Rng};

/// Source of a findings paragraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Reference,
    M12b,
    M84b,
    M562b,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::Reference, Arm::M12b, Arm::M84b, Arm::M562b];
    pub const MODELS: [Arm; 3] = [Arm::M12b, Arm::M84b, Arm::M562b];

    pub fn as_str(self) -> &'static str {
        match self {
            Arm::Reference => "reference",
            Arm::M12b => "m12b",
            Arm::M84b => "m84b",
            Arm::M562b => "m562b",
        }
    }

    pub fn parse(s: &str) -> Option<Arm> {
        Arm::ALL.into_iter().find(|a| a.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HumevalError {
    #[error("case {0} must have exactly the four arms")]
    ArmSet(String),
    #[error("case {0} has no indication")]
    MissingIndication(String),
    #[error("ranking for case {0} is not a permutation of its arms")]
    NotPermutation(String),
    #[error("arm {0} cannot be annotated; only model arms are rated")]
    NotModelArm(&'static str),
    #[error("span {start}..{end} invalid for findings of {len} chars")]
    Span { start: usize, end: usize, len: usize },
    #[error("no records")]
    NoRecords,
    #[error("bootstrap needs at least one resample")]
    NoResamples,
    #[error("confidence level must be in (0, 1), got {0}")]
    Level(f64),
    #[error("slot {0} out of range")]
    Slot(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCase {
    pub case_id: String,
    pub image_ref: String,
    pub indication: String,
    pub arms: BTreeMap<Arm, String>,
}

impl EvalCase {
    pub fn validate(&self) -> Result<(), HumevalError> {
        if Arm::ALL.iter().any(|a| !self.arms.contains_key(a)) {
            return Err(HumevalError::ArmSet(self.case_id.clone()));
        }
        if self.indication.trim().is_empty() {
            return Err(HumevalError::MissingIndication(self.case_id.clone()));
        }
        Ok(())
    }

    pub fn findings(&self, arm: Arm) -> &str {
        self.arms.get(&arm).map_or("", String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingRecord {
    pub case_id: String,
    pub rater_id: String,
    /// Best first.
    pub ranking: Vec<Arm>,
    pub presentation_order: Vec<Arm>,
    pub timestamp: u64,
}

fn is_permutation(arms: &[Arm]) -> bool {
    arms.len() == 4 && Arm::ALL.iter().all(|a| arms.contains(a))
}

impl RankingRecord {
    pub fn validate(&self) -> Result<(), HumevalError> {
        if is_permutation(&self.ranking) && is_permutation(&self.presentation_order) {
            Ok(())
        } else {
            Err(HumevalError::NotPermutation(self.case_id.clone()))
        }
    }

    /// 1-based rank of `arm`.
    pub fn rank_of(&self, arm: Arm) -> Option<usize> {
        self.ranking.iter().position(|a| *a == arm).map(|i| i + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorType {
    NoFinding,
    IncorrectLocation,
    IncorrectSeverity,
    NonexistentView,
    NonexistentStudy,
}

impl ErrorType {
    /// Errors about the findings themselves, as opposed to references to
    /// views or studies that do not exist.
    pub fn is_clinical(self) -> bool {
        !matches!(self, ErrorType::NonexistentView | ErrorType::NonexistentStudy)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorAnnotation {
    /// Char offsets into the findings.
    pub start: usize,
    pub end: usize,
    pub error_type: ErrorType,
    pub clinically_significant: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replacement_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmissionAnnotation {
    pub missing_passage: String,
    pub clinically_significant: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndependentRecord {
    pub case_id: String,
    pub rater_id: String,
    pub arm: Arm,
    pub image_quality_sufficient: bool,
    #[serde(default)]
    pub errors: Vec<ErrorAnnotation>,
    #[serde(default)]
    pub omissions: Vec<OmissionAnnotation>,
    #[serde(default)]
    pub timestamp: u64,
}

impl IndependentRecord {
    /// Checks the arm and that every span lies inside `findings`.
    pub fn validate(&self, findings: &str) -> Result<(), HumevalError> {
        if self.arm == Arm::Reference {
            return Err(HumevalError::NotModelArm(self.arm.as_str()));
        }
        let len = findings.chars().count();
        for e in &self.errors {
            if e.start >= e.end || e.end > len {
                return Err(HumevalError::Span {
                    start: e.start,
                    end: e.end,
                    len,
                });
            }
        }
        Ok(())
    }
}

/// Random presentation order for a case, fixed by `(case_id, seed)`.
pub fn blind_order(case_id: &str, seed: u64) -> [Arm; 4] {
    let mut rng = seeded(derive_seed(seed, &format!("humeval/blind/{case_id}")));
    let mut order = Arm::ALL;
    shuffle(&mut rng, &mut order);
    order
}

/// What a rater's client receives: findings by 1-based slot, no arm names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlindedCase {
    pub case_id: String,
    pub image_ref: String,
    pub indication: String,
    pub options: Vec<BlindedOption>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlindedOption {
    pub slot: usize,
    pub findings: String,
}

pub fn blind_case(case: &EvalCase, seed: u64) -> BlindedCase {
    let order = blind_order(&case.case_id, seed);
    BlindedCase {
        case_id: case.case_id.clone(),
        image_ref: case.image_ref.clone(),
        indication: case.indication.clone(),
        options: order
            .iter()
            .enumerate()
            .map(|(i, a)| BlindedOption {
                slot: i + 1,
                findings: String::from(case.findings(*a)),
            })
            .collect(),
    }
}

/// Maps a best-first list of 1-based slots back to arms.
pub fn unblind_ranking(order: &[Arm; 4], slots: &[usize]) -> Result<Vec<Arm>, HumevalError> {
    slots
        .iter()
        .map(|&s| {
            s.checked_sub(1)
                .and_then(|i| order.get(i).copied())
                .ok_or(HumevalError::Slot(s))
        })
        .collect()
}

/// Seeded uniform choice of a rater for a case.
pub fn assign_rater<'a>(case_id: &str, raters: &'a [String], seed: u64) -> Option<&'a str> {
    if raters.is_empty() {
        return None;
    }
    let mut rng = seeded(derive_seed(seed, &format!("humeval/assign/{case_id}")));
    Some(raters[index(&mut rng, raters.len())].as_str())
}

/// Model arm -> ranked above the reference.
pub fn derive_pairwise(record: &RankingRecord) -> Result<BTreeMap<Arm, bool>, HumevalError> {
    record.validate()?;
    let reference = record.rank_of(Arm::Reference).unwrap_or(usize::MAX);
    Ok(Arm::MODELS
        .into_iter()
        .map(|a| (a, record.rank_of(a).is_some_and(|r| r < reference)))
        .collect())
}

/// Per model arm, the share of records ranking it above the reference.
pub fn pairwise_preference(records: &[RankingRecord]) -> Result<BTreeMap<Arm, f64>, HumevalError> {
    if records.is_empty() {
        return Err(HumevalError::NoRecords);
    }
    let mut wins: BTreeMap<Arm, usize> = Arm::MODELS.into_iter().map(|a| (a, 0)).collect();
    for r in records {
        for (arm, preferred) in derive_pairwise(r)? {
            if preferred {
                *wins.entry(arm).or_default() += 1;
            }
        }
    }
    let n = records.len() as f64;
    Ok(wins.into_iter().map(|(a, w)| (a, w as f64 / n)).collect())
}

/// Share of records in which each arm is ranked first.
pub fn best_of_four(records: &[RankingRecord]) -> Result<BTreeMap<Arm, f64>, HumevalError> {
    if records.is_empty() {
        return Err(HumevalError::NoRecords);
    }
    let mut firsts: BTreeMap<Arm, usize> = Arm::ALL.into_iter().map(|a| (a, 0)).collect();
    for r in records {
        r.validate()?;
        *firsts.entry(r.ranking[0]).or_default() += 1;
    }
    let n = records.len() as f64;
    Ok(firsts.into_iter().map(|(a, c)| (a, c as f64 / n)).collect())
}

/// Best-of-four shares pooled over all records, per rater, and as the
/// unweighted mean of the per-rater shares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingSummary {
    pub n_records: usize,
    pub pooled: BTreeMap<Arm, f64>,
    pub per_rater: BTreeMap<String, BTreeMap<Arm, f64>>,
    pub averaged: BTreeMap<Arm, f64>,
    pub preferred_over_reference: BTreeMap<Arm, f64>,
}

pub fn ranking_summary(records: &[RankingRecord]) -> Result<RankingSummary, HumevalError> {
    let pooled = best_of_four(records)?;
    let mut by_rater: BTreeMap<&str, Vec<RankingRecord>> = BTreeMap::new();
    for r in records {
        by_rater.entry(r.rater_id.as_str()).or_default().push(r.clone());
    }
    let mut per_rater = BTreeMap::new();
    for (rater, rs) in &by_rater {
        per_rater.insert(String::from(*rater), best_of_four(rs)?);
    }
    let k = per_rater.len() as f64;
    let averaged = Arm::ALL
        .into_iter()
        .map(|a| (a, per_rater.values().map(|m| m[&a]).sum::<f64>() / k))
        .collect();
    Ok(RankingSummary {
        n_records: records.len(),
        pooled,
        per_rater,
        averaged,
        preferred_over_reference: pairwise_preference(records)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Annotated {
    Errors,
    Omissions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterLevel {
    Total,
    /// Drops errors that refer to views or studies not present.
    Clinical,
    /// Clinical and marked clinically significant.
    Significant,
}

/// Serialized by name, e.g. `"clinical-errors"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct RateFilter {
    pub annotated: Annotated,
    pub level: FilterLevel,
}

impl RateFilter {
    pub const fn new(annotated: Annotated, level: FilterLevel) -> Self {
        Self { annotated, level }
    }

    /// Parses `errors`, `clinical-errors`, `significant-omissions`, ...
    pub fn parse(s: &str) -> Option<Self> {
        let (level, rest) = match s.split_once('-') {
            Some(("total", r)) => (FilterLevel::Total, r),
            Some(("clinical", r)) => (FilterLevel::Clinical, r),
            Some(("significant", r)) => (FilterLevel::Significant, r),
            Some(_) => return None,
            None => (FilterLevel::Total, s),
        };
        let annotated = match rest {
            "errors" => Annotated::Errors,
            "omissions" => Annotated::Omissions,
            _ => return None,
        };
        Some(Self { annotated, level })
    }

    pub fn name(&self) -> String {
        let level = match self.level {
            FilterLevel::Total => "total",
            FilterLevel::Clinical => "clinical",
            FilterLevel::Significant => "significant",
        };
        let what = match self.annotated {
            Annotated::Errors => "errors",
            Annotated::Omissions => "omissions",
        };
        format!("{level}-{what}")
    }

    /// The six rows of a rate table.
    pub const ALL: [RateFilter; 6] = [
        RateFilter::new(Annotated::Errors, FilterLevel::Total),
        RateFilter::new(Annotated::Errors, FilterLevel::Clinical),
        RateFilter::new(Annotated::Errors, FilterLevel::Significant),
        RateFilter::new(Annotated::Omissions, FilterLevel::Total),
        RateFilter::new(Annotated::Omissions, FilterLevel::Clinical),
        RateFilter::new(Annotated::Omissions, FilterLevel::Significant),
    ];

    /// Annotations on one report passing the filter. Omissions carry no
    /// type, so their clinical level equals the total.
    pub fn count(&self, record: &IndependentRecord) -> usize {
        match self.annotated {
            Annotated::Errors => record
                .errors
                .iter()
                .filter(|e| match self.level {
                    FilterLevel::Total => true,
                    FilterLevel::Clinical => e.error_type.is_clinical(),
                    FilterLevel::Significant => e.error_type.is_clinical() && e.clinically_significant,
                })
                .count(),
            Annotated::Omissions => record
                .omissions
                .iter()
                .filter(|o| self.level != FilterLevel::Significant || o.clinically_significant)
                .count(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    /// Mean count per report.
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_reports: usize,
    pub level: f64,
    pub filter: RateFilter,
}

pub const DEFAULT_RESAMPLES: usize = 10_000;
pub const DEFAULT_LEVEL: f64 = 0.95;

/// Means of `n_resamples` report-level resamples (with replacement), in
/// draw order.
pub fn bootstrap_means(counts: &[usize], n_resamples: usize, rng: &mut Rng) -> Vec<f64> {
    let n = counts.len();
    (0..n_resamples)
        .map(|_| {
            let total: usize = (0..n).map(|_| counts[index(rng, n)]).sum();
            total as f64 / n as f64
        })
        .collect()
}

/// Inverse empirical CDF: the `ceil(p * len)`-th smallest value (at least
/// the first). `sorted` must be ascending and non-empty.
pub fn quantile_type1(sorted: &[f64], p: f64) -> f64 {
    let k = libm::ceil(p * sorted.len() as f64) as usize;
    sorted[k.clamp(1, sorted.len()) - 1]
}

/// Mean of per-report counts with a percentile bootstrap interval. The
/// interval is widened if needed so it contains the mean.
pub fn rate_from_counts(
    counts: &[usize],
    filter: RateFilter,
    n_resamples: usize,
    level: f64,
    seed: u64,
) -> Result<RateEstimate, HumevalError> {
    if counts.is_empty() {
        return Err(HumevalError::NoRecords);
    }
    if n_resamples == 0 {
        return Err(HumevalError::NoResamples);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(HumevalError::Level(level));
    }
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    let mut rng = seeded(derive_seed(seed, "humeval/bootstrap"));
    let mut means = bootstrap_means(counts, n_resamples, &mut rng);
    means.sort_by(f64::total_cmp);
    let alpha = 1.0 - level;
    let lo = quantile_type1(&means, alpha / 2.0);
    let hi = quantile_type1(&means, 1.0 - alpha / 2.0);
    Ok(RateEstimate {
        mean,
        ci_low: lo.min(mean),
        ci_high: hi.max(mean),
        n_reports: counts.len(),
        level,
        filter,
    })
}

/// Per-report rate for `filter` over independent records (one record is
/// one report).
pub fn rate_with_ci(
    records: &[IndependentRecord],
    filter: RateFilter,
    n_resamples: usize,
    level: f64,
    seed: u64,
) -> Result<RateEstimate, HumevalError> {
    let counts: Vec<usize> = records.iter().map(|r| filter.count(r)).collect();
    rate_from_counts(&counts, filter, n_resamples, level, seed)
}

/// All six filters for each model arm present in `records`.
pub fn rate_table(
    records: &[IndependentRecord],
    n_resamples: usize,
    level: f64,
    seed: u64,
) -> Result<BTreeMap<Arm, Vec<RateEstimate>>, HumevalError> {
    if records.is_empty() {
        return Err(HumevalError::NoRecords);
    }
    let mut by_arm: BTreeMap<Arm, Vec<IndependentRecord>> = BTreeMap::new();
    for r in records {
        by_arm.entry(r.arm).or_default().push(r.clone());
    }
    let mut out = BTreeMap::new();
    for (arm, rs) in by_arm {
        let rows = RateFilter::ALL
            .iter()
            .map(|f| rate_with_ci(&rs, *f, n_resamples, level, seed))
            .collect::<Result<Vec<_>, _>>()?;
        out.insert(arm, rows);
    }
    Ok(out)
}

/// Keeps the newest record per key; on equal timestamps the later one in
/// the log wins. Output is in first-appearance order of the keys.
pub fn latest_by_key<T, K: Ord>(records: Vec<T>, key: impl Fn(&T) -> K, timestamp: impl Fn(&T) -> u64) -> Vec<T> {
    let mut slot: BTreeMap<K, usize> = BTreeMap::new();
    let mut kept: Vec<Option<T>> = Vec::new();
    for r in records {
        let k = key(&r);
        match slot.get(&k) {
            Some(&i) => {
                if kept[i].as_ref().is_none_or(|old| timestamp(&r) >= timestamp(old)) {
                    kept[i] = Some(r);
                }
            }
            None => {
                slot.insert(k, kept.len());
                kept.push(Some(r));
            }
        }
    }
    kept.into_iter().flatten().collect()
}

pub fn latest_rankings(records: Vec<RankingRecord>) -> Vec<RankingRecord> {
    latest_by_key(records, |r| (r.case_id.clone(), r.rater_id.clone()), |r| r.timestamp)
}

pub fn latest_annotations(records: Vec<IndependentRecord>) -> Vec<IndependentRecord> {
    latest_by_key(
        records,
        |r| (r.case_id.clone(), r.rater_id.clone(), r.arm),
        |r| r.timestamp,
    )
}

impl From<RateFilter> for String {
    fn from(f: RateFilter) -> String {
        f.name()
    }
}

impl TryFrom<String> for RateFilter {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        RateFilter::parse(&s).ok_or_else(|| format!("unknown rate filter `{s}`"))
    }
}
