//! Ranking fixtures with hand counts, and synthetic annotation corpora.

use medbench_core::humeval::*;
use medbench_core::rng::{index, seeded, shuffle, unit_f64, Rng};

pub fn random_ranking(rng: &mut Rng, rater: &str) -> RankingRecord {
    let mut ranking = Arm::ALL;
    shuffle(rng, &mut ranking);
    let mut shown = Arm::ALL;
    shuffle(rng, &mut shown);
    RankingRecord {
        case_id: format!("case-{}", index(rng, 1000)),
        rater_id: rater.into(),
        ranking: ranking.to_vec(),
        presentation_order: shown.to_vec(),
        timestamp: 0,
    }
}

pub fn poisson(rng: &mut Rng, lambda: f64) -> usize {
    let limit = (-lambda).exp();
    let mut k = 0;
    let mut p = unit_f64(rng);
    while p > limit {
        k += 1;
        p *= unit_f64(rng);
    }
    k
}

pub fn synthetic_records(rng: &mut Rng, n: usize, lambda: f64) -> Vec<IndependentRecord> {
    let types = [
        ErrorType::NoFinding,
        ErrorType::IncorrectLocation,
        ErrorType::IncorrectSeverity,
        ErrorType::NonexistentView,
        ErrorType::NonexistentStudy,
    ];
    (0..n)
        .map(|i| {
            let k = poisson(rng, lambda);
            IndependentRecord {
                case_id: format!("case-{i}"),
                rater_id: "r".into(),
                arm: Arm::M84b,
                image_quality_sufficient: true,
                errors: (0..k)
                    .map(|j| ErrorAnnotation {
                        start: j,
                        end: j + 1,
                        error_type: types[index(rng, types.len())],
                        clinically_significant: unit_f64(rng) < 0.5,
                        replacement_text: None,
                    })
                    .collect(),
                omissions: (0..poisson(rng, lambda))
                    .map(|_| OmissionAnnotation {
                        missing_passage: "x".into(),
                        clinically_significant: unit_f64(rng) < 0.3,
                    })
                    .collect(),
                timestamp: 0,
            }
        })
        .collect()
}

/// Checks one fixture against counts taken by walking each ranking.
pub fn ranking_fixture_matches(records: &[RankingRecord]) -> bool {
    let n = records.len() as f64;
    let slot = |a: Arm| Arm::ALL.iter().position(|x| *x == a).unwrap();
    let mut first = [0usize; 4];
    let mut above_ref = [0usize; 4];
    for r in records {
        first[slot(r.ranking[0])] += 1;
        let ref_pos = r.ranking.iter().position(|a| *a == Arm::Reference).unwrap();
        for a in &r.ranking[..ref_pos] {
            above_ref[slot(*a)] += 1;
        }
        let p = derive_pairwise(r).unwrap();
        for m in Arm::MODELS {
            let pos = r.ranking.iter().position(|a| *a == m).unwrap();
            if p[&m] != (pos < ref_pos) {
                return false;
            }
        }
    }
    let best = best_of_four(records).unwrap();
    let pref = pairwise_preference(records).unwrap();
    let mut reversed = records.to_vec();
    reversed.reverse();
    Arm::ALL.iter().enumerate().all(|(i, a)| best[a] == first[i] as f64 / n)
        && Arm::MODELS.iter().all(|a| pref[a] == above_ref[slot(*a)] as f64 / n)
        && best_of_four(&reversed).unwrap() == best
}

/// Indices of the `n` seeded random fixtures that disagree with the hand
/// counts.
pub fn ranking_fixture_mismatches(seed: u64, n: usize) -> Vec<usize> {
    let mut rng = seeded(seed);
    (0..n)
        .filter(|_| {
            let k = 1 + index(&mut rng, 12);
            let records: Vec<RankingRecord> = (0..k).map(|_| random_ranking(&mut rng, "r")).collect();
            !ranking_fixture_matches(&records)
        })
        .collect()
}
