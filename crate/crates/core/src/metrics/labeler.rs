//! Rule-based chest X-ray report labeler over 14 observations.
//!
//! Reports are split into sentences and clauses; each clause is scanned
//! left to right for the longest lexicon phrase. A mention is uncertain if
//! an uncertainty cue precedes or follows it in the clause, otherwise
//! negative if a negation cue does, otherwise positive. Uncertain mentions
//! are reported as negative. Pseudo-negations such as "no change" are
//! removed before cue search.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

macro_rules! observations {
    ($($variant:ident => $name:literal),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum Observation {
            $($variant),*
        }

        impl Observation {
            /// Fixed label order.
            pub const ALL: [Observation; 14] = [$(Observation::$variant),*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Observation::$variant => $name),*
                }
            }
        }
    };
}

observations! {
    NoFinding => "no finding",
    Atelectasis => "atelectasis",
    Cardiomegaly => "cardiomegaly",
    Consolidation => "consolidation",
    Edema => "edema",
    PleuralEffusion => "pleural effusion",
    LungOpacity => "lung opacity",
    EnlargedCardiomediastinum => "enlarged cardiomediastinum",
    Fracture => "fracture",
    Pneumonia => "pneumonia",
    SupportDevices => "support devices",
    Pneumothorax => "pneumothorax",
    PleuralOther => "pleural other",
    LungLesion => "lung lesion",
}

impl Observation {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// The five major conditions.
pub const MAJOR_FIVE: [Observation; 5] = [
    Observation::Atelectasis,
    Observation::Cardiomegaly,
    Observation::Consolidation,
    Observation::Edema,
    Observation::PleuralEffusion,
];

/// One boolean per observation, in [`Observation::ALL`] order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelVector14(pub [bool; 14]);

impl LabelVector14 {
    pub fn get(&self, obs: Observation) -> bool {
        self.0[obs.index()]
    }

    pub fn set(&mut self, obs: Observation, value: bool) {
        self.0[obs.index()] = value;
    }

    pub fn positives(&self) -> impl Iterator<Item = Observation> + '_ {
        Observation::ALL.into_iter().filter(|o| self.get(*o))
    }
}

/// Per-mention outcome before uncertain is folded into negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Certainty {
    Negative,
    Uncertain,
    Positive,
}

type Phrase = Vec<String>;

fn phrases(list: &[&str]) -> Vec<Phrase> {
    list.iter()
        .map(|p| p.split_whitespace().map(String::from).collect())
        .collect()
}

/// Mention phrases and cue lists. Phrases are lowercase word sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    pub mentions: Vec<(Observation, Vec<Phrase>)>,
    /// Phrases consumed without producing a mention ("pericardial effusion").
    pub ignored: Vec<Phrase>,
    pub pre_negation: Vec<Phrase>,
    pub post_negation: Vec<Phrase>,
    pub pre_uncertain: Vec<Phrase>,
    pub post_uncertain: Vec<Phrase>,
    /// Masked before cue search ("no change").
    pub pseudo_negation: Vec<Phrase>,
    /// Words that start a new clause.
    pub clause_breaks: Vec<String>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Self::chest_xray()
    }
}

impl Lexicon {
    pub fn chest_xray() -> Self {
        use Observation::*;
        let mentions = alloc::vec![
            (Atelectasis, phrases(&["atelectasis", "atelectatic", "collapse"])),
            (
                Cardiomegaly,
                phrases(&[
                    "cardiomegaly",
                    "enlarged heart",
                    "heart is enlarged",
                    "heart size is enlarged",
                    "cardiac enlargement",
                    "enlarged cardiac silhouette",
                ]),
            ),
            (
                Consolidation,
                phrases(&["consolidation", "consolidations", "consolidative"])
            ),
            (
                Edema,
                phrases(&["edema", "vascular congestion", "pulmonary vascular congestion"])
            ),
            (
                PleuralEffusion,
                phrases(&[
                    "pleural effusion",
                    "pleural effusions",
                    "effusion",
                    "effusions",
                    "pleural fluid"
                ]),
            ),
            (
                LungOpacity,
                phrases(&[
                    "opacity",
                    "opacities",
                    "opacification",
                    "infiltrate",
                    "infiltrates",
                    "haziness",
                    "airspace disease",
                ]),
            ),
            (
                EnlargedCardiomediastinum,
                phrases(&[
                    "enlarged cardiomediastinum",
                    "widened mediastinum",
                    "mediastinal widening",
                    "cardiomediastinal enlargement",
                ]),
            ),
            (Fracture, phrases(&["fracture", "fractures", "fractured"])),
            (Pneumonia, phrases(&["pneumonia", "infection", "infectious process"])),
            (
                SupportDevices,
                phrases(&[
                    "tube",
                    "tubes",
                    "line",
                    "lines",
                    "catheter",
                    "catheters",
                    "pacemaker",
                    "wire",
                    "wires",
                    "clip",
                    "clips",
                    "stent",
                    "device",
                    "devices",
                    "port",
                    "drain",
                ]),
            ),
            (Pneumothorax, phrases(&["pneumothorax", "pneumothoraces"])),
            (
                PleuralOther,
                phrases(&[
                    "pleural thickening",
                    "fibrothorax",
                    "pleural scarring",
                    "pleural plaque",
                    "pleural plaques"
                ]),
            ),
            (
                LungLesion,
                phrases(&[
                    "nodule",
                    "nodules",
                    "mass",
                    "masses",
                    "lesion",
                    "lesions",
                    "nodular opacity"
                ]),
            ),
        ];
        Self {
            mentions,
            ignored: phrases(&["pericardial effusion", "mass effect"]),
            pre_negation: phrases(&[
                "no",
                "not",
                "without",
                "free of",
                "negative for",
                "absence of",
                "clear of",
                "removal of",
            ]),
            post_negation: phrases(&[
                "not seen",
                "not identified",
                "not present",
                "absent",
                "resolved",
                "removed",
            ]),
            pre_uncertain: phrases(&[
                "possible",
                "possibly",
                "probable",
                "may",
                "might",
                "could",
                "questionable",
                "suspicious for",
                "concerning for",
                "suggestive of",
                "cannot exclude",
                "cannot rule out",
                "versus",
                "vs",
                "borderline",
                "equivocal",
            ]),
            post_uncertain: phrases(&[
                "cannot be excluded",
                "can not be excluded",
                "not excluded",
                "is possible",
                "are possible",
                "is suspected",
            ]),
            pseudo_negation: phrases(&[
                "no change",
                "no interval change",
                "no significant change",
                "no significant interval change",
                "not changed",
                "without change",
            ]),
            clause_breaks: ["but", "however", "although", "though", "whereas", "there"]
                .into_iter()
                .map(String::from)
                .collect(),
        }
    }
}

/// Lowercase words of one clause.
pub(crate) type Clause = Vec<String>;

/// Splits into sentences (on `.`, `!`, `?` before whitespace or end, `;`,
/// and newlines), each split into clauses at clause-break words.
pub(crate) fn sentences(text: &str, lexicon: &Lexicon) -> Vec<Vec<Clause>> {
    let mut raw_sentences: Vec<String> = Vec::new();
    let mut cur = String::new();
    let chars: Vec<char> = text.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        let boundary = match c {
            '\n' | ';' | '!' | '?' => true,
            '.' => chars.get(i + 1).is_none_or(|n| n.is_whitespace()),
            _ => false,
        };
        if boundary {
            raw_sentences.push(core::mem::take(&mut cur));
        } else {
            cur.push(c);
        }
    }
    raw_sentences.push(cur);

    raw_sentences
        .iter()
        .map(|s| {
            let words: Vec<String> = s
                .split(|c: char| !(c.is_alphanumeric() || c == '.'))
                .map(|w| w.trim_matches('.').to_lowercase())
                .filter(|w| !w.is_empty())
                .collect();
            let mut clauses: Vec<Clause> = Vec::new();
            let mut clause = Clause::new();
            for w in words {
                if lexicon.clause_breaks.contains(&w) && !clause.is_empty() {
                    clauses.push(core::mem::take(&mut clause));
                }
                clause.push(w);
            }
            if !clause.is_empty() {
                clauses.push(clause);
            }
            clauses
        })
        .filter(|c: &Vec<Clause>| !c.is_empty())
        .collect()
}

fn starts_with_at(words: &[String], at: usize, phrase: &[String]) -> bool {
    words.len() >= at + phrase.len() && words[at..at + phrase.len()] == *phrase
}

fn contains_phrase(words: &[Option<&String>], phrase: &[String]) -> bool {
    if phrase.is_empty() || words.len() < phrase.len() {
        return false;
    }
    words
        .windows(phrase.len())
        .any(|w| w.iter().zip(phrase).all(|(a, b)| a.is_some_and(|a| a == b)))
}

/// Tag attached to a phrase in the scanner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Tag<T> {
    Mention(Observation),
    Ignore,
    Extra(T),
}

/// A matched phrase in a clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Hit<T> {
    pub start: usize,
    pub end: usize,
    pub tag: Tag<T>,
}

/// Greedy longest-match scan over mention phrases plus caller extras.
pub(crate) fn scan<T: Copy>(clause: &[String], lexicon: &Lexicon, extra: &[(Phrase, T)]) -> Vec<Hit<T>> {
    let mut table: Vec<(&[String], Tag<T>)> = Vec::new();
    for (obs, list) in &lexicon.mentions {
        for p in list {
            table.push((p, Tag::Mention(*obs)));
        }
    }
    for p in &lexicon.ignored {
        table.push((p, Tag::Ignore));
    }
    for (p, t) in extra {
        table.push((p, Tag::Extra(*t)));
    }
    let mut hits = Vec::new();
    let mut i = 0;
    while i < clause.len() {
        let best = table
            .iter()
            .filter(|(p, _)| !p.is_empty() && starts_with_at(clause, i, p))
            .max_by_key(|(p, _)| p.len());
        match best {
            Some((p, tag)) => {
                hits.push(Hit {
                    start: i,
                    end: i + p.len(),
                    tag: *tag,
                });
                i += p.len();
            }
            None => i += 1,
        }
    }
    hits
}

/// Certainty of the mention at `[start, end)` within `clause`.
pub(crate) fn certainty(clause: &[String], start: usize, end: usize, lexicon: &Lexicon) -> Certainty {
    let mut masked: Vec<Option<&String>> = clause.iter().map(Some).collect();
    for p in &lexicon.pseudo_negation {
        let mut i = 0;
        while i + p.len() <= clause.len() {
            if starts_with_at(clause, i, p) {
                for slot in &mut masked[i..i + p.len()] {
                    *slot = None;
                }
                i += p.len();
            } else {
                i += 1;
            }
        }
    }
    let before = &masked[..start];
    let after = &masked[end..];
    let any = |scope: &[Option<&String>], list: &[Phrase]| list.iter().any(|p| contains_phrase(scope, p));
    if any(before, &lexicon.pre_uncertain) || any(after, &lexicon.post_uncertain) {
        Certainty::Uncertain
    } else if any(before, &lexicon.pre_negation) || any(after, &lexicon.post_negation) {
        Certainty::Negative
    } else {
        Certainty::Positive
    }
}

/// Produces the 14-observation label vector for a report.
pub trait ReportLabeler {
    fn label(&self, report: &str) -> LabelVector14;
}

/// Lexicon-driven labeler; the default surrogate for a neural labeler.
#[derive(Debug, Clone, Default)]
pub struct RuleLabeler {
    pub lexicon: Lexicon,
}

impl RuleLabeler {
    pub fn new(lexicon: Lexicon) -> Self {
        Self { lexicon }
    }

    /// Strongest certainty seen per observation (`None` when never
    /// mentioned).
    pub fn certainties(&self, report: &str) -> [Option<Certainty>; 14] {
        let mut out: [Option<Certainty>; 14] = [None; 14];
        for sentence in sentences(report, &self.lexicon) {
            for clause in &sentence {
                for hit in scan::<()>(clause, &self.lexicon, &[]) {
                    if let Tag::Mention(obs) = hit.tag {
                        let c = certainty(clause, hit.start, hit.end, &self.lexicon);
                        let slot = &mut out[obs.index()];
                        *slot = Some(slot.map_or(c, |s| s.max(c)));
                    }
                }
            }
        }
        out
    }
}

impl ReportLabeler for RuleLabeler {
    fn label(&self, report: &str) -> LabelVector14 {
        let c = self.certainties(report);
        let mut v = LabelVector14::default();
        for obs in Observation::ALL {
            v.set(obs, c[obs.index()] == Some(Certainty::Positive));
        }
        let any_pathology = Observation::ALL
            .into_iter()
            .filter(|o| !matches!(o, Observation::NoFinding | Observation::SupportDevices))
            .any(|o| matches!(c[o.index()], Some(Certainty::Positive | Certainty::Uncertain)));
        v.set(Observation::NoFinding, !any_pathology);
        v
    }
}

/// Labels `findings` with a rule labeler built from `lexicon`.
pub fn label_report(findings: &str, lexicon: &Lexicon) -> LabelVector14 {
    RuleLabeler::new(lexicon.clone()).label(findings)
}
