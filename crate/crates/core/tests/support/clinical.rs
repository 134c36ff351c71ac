//! Clinical-efficacy fixtures and hand computations.

use medbench_core::metrics::clinical::{ce_f1, Averaging, ObservationSubset};
use medbench_core::metrics::labeler::{LabelVector14, Observation, ReportLabeler, RuleLabeler, MAJOR_FIVE};
use medbench_core::rng::{coin, index, seeded, unit_f64};
use Observation::*;

pub fn random_fixture(seed: u64) -> (Vec<LabelVector14>, Vec<LabelVector14>) {
    let mut rng = seeded(seed);
    let n = 1 + index(&mut rng, 20);
    // Per-fixture density so some fixtures are sparse and some dense.
    let density = unit_f64(&mut rng);
    let draw = |rng: &mut _| {
        let mut v = LabelVector14::default();
        for o in Observation::ALL {
            v.set(o, unit_f64(rng) < density && coin(rng));
        }
        v
    };
    let pred = (0..n).map(|_| draw(&mut rng)).collect();
    let truth = (0..n).map(|_| draw(&mut rng)).collect();
    (pred, truth)
}

/// Counts by walking every (sample, observation) cell of the confusion table.
pub fn hand_f1(pred: &[LabelVector14], truth: &[LabelVector14], cols: &[usize], mode: Averaging) -> f64 {
    let mut table = vec![[0u64; 3]; cols.len()];
    for (p, t) in pred.iter().zip(truth) {
        for (k, &c) in cols.iter().enumerate() {
            let (pp, tt) = (p.0[c], t.0[c]);
            if pp && tt {
                table[k][0] += 1;
            }
            if pp && !tt {
                table[k][1] += 1;
            }
            if !pp && tt {
                table[k][2] += 1;
            }
        }
    }
    let f1 = |tp: u64, fp: u64, fn_: u64| {
        if tp + fp + fn_ == 0 {
            0.0
        } else {
            2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
        }
    };
    match mode {
        Averaging::Micro => {
            let tp: u64 = table.iter().map(|r| r[0]).sum();
            let fp: u64 = table.iter().map(|r| r[1]).sum();
            let fn_: u64 = table.iter().map(|r| r[2]).sum();
            f1(tp, fp, fn_)
        }
        Averaging::Macro => table.iter().map(|r| f1(r[0], r[1], r[2])).sum::<f64>() / cols.len() as f64,
    }
}

/// Sentences with the labels obtained by applying the rules by hand.
pub const CORPUS: [(&str, &[Observation]); 30] = [
    ("There is no pleural effusion.", &[NoFinding]),
    ("Mild cardiomegaly is noted.", &[Cardiomegaly]),
    ("Possible consolidation.", &[]),
    ("The lungs are clear.", &[NoFinding]),
    ("Small left pleural effusion.", &[PleuralEffusion]),
    ("No pneumothorax.", &[NoFinding]),
    ("Endotracheal tube in place.", &[SupportDevices, NoFinding]),
    ("Pneumothorax is not seen.", &[NoFinding]),
    ("Right lower lobe opacity may represent atelectasis.", &[LungOpacity]),
    ("Findings concerning for pneumonia.", &[]),
    ("No evidence of edema.", &[NoFinding]),
    ("Pulmonary vascular congestion is present.", &[Edema]),
    ("No change in mild cardiomegaly.", &[Cardiomegaly]),
    ("No effusion, but there is consolidation.", &[Consolidation]),
    ("Healed rib fracture.", &[Fracture]),
    ("Pneumonia cannot be excluded.", &[]),
    ("Small pericardial effusion.", &[NoFinding]),
    ("Stable pulmonary nodule.", &[LungLesion]),
    ("Widened mediastinum.", &[EnlargedCardiomediastinum]),
    ("Left pleural thickening.", &[PleuralOther]),
    ("The heart is enlarged.", &[Cardiomegaly]),
    (
        "Pacemaker leads terminate in the right ventricle.",
        &[SupportDevices, NoFinding],
    ),
    ("Without focal consolidation or pneumothorax.", &[NoFinding]),
    ("Bibasilar atelectasis is present.", &[Atelectasis]),
    ("Pleural effusions have resolved.", &[NoFinding]),
    ("Interval removal of the chest tube.", &[NoFinding]),
    ("Mass effect on the trachea.", &[NoFinding]),
    ("Questionable left apical pneumothorax.", &[]),
    ("Diffuse interstitial opacities and edema.", &[LungOpacity, Edema]),
    (
        "No acute fracture, however there is a new right pneumothorax.",
        &[Pneumothorax],
    ),
];

/// Fixture seeds `0..n` where `ce_f1` and the hand count differ in any of
/// the four subset/averaging combinations.
pub fn ce_fixture_mismatches(n: u64) -> Vec<u64> {
    let all: Vec<usize> = (0..14).collect();
    let five: Vec<usize> = MAJOR_FIVE.iter().map(|o| o.index()).collect();
    (0..n)
        .filter(|&seed| {
            let (pred, truth) = random_fixture(seed);
            [(ObservationSubset::All14, &all), (ObservationSubset::Major5, &five)]
                .into_iter()
                .flat_map(|(s, cols)| [(s, cols, Averaging::Micro), (s, cols, Averaging::Macro)])
                .any(|(subset, cols, mode)| {
                    ce_f1(&pred, &truth, subset, mode).unwrap() != hand_f1(&pred, &truth, cols, mode)
                })
        })
        .collect()
}

pub fn hand_labels(positives: &[Observation]) -> LabelVector14 {
    let mut v = LabelVector14::default();
    for &o in positives {
        v.set(o, true);
    }
    v
}

/// Corpus sentences the labeler labels differently from the hand labels.
pub fn labeler_disagreements() -> Vec<&'static str> {
    let labeler = RuleLabeler::default();
    CORPUS
        .iter()
        .filter(|(text, positives)| labeler.label(text) != hand_labels(positives))
        .map(|(text, _)| *text)
        .collect()
}
