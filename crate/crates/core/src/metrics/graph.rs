//! Entity/relation graphs and their overlap F1, with a rule-based
//! extractor standing in for a neural one.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::labeler::{certainty, scan, sentences, Certainty, Lexicon, Tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityCategory {
    #[serde(rename = "ANAT-DP")]
    Anatomy,
    #[serde(rename = "OBS-DP")]
    ObservationPresent,
    #[serde(rename = "OBS-DA")]
    ObservationAbsent,
    #[serde(rename = "OBS-U")]
    ObservationUncertain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    LocatedAt,
    SuggestiveOf,
    Modify,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Entity {
    pub text: String,
    pub category: EntityCategory,
}

impl Entity {
    pub fn new(text: impl Into<String>, category: EntityCategory) -> Self {
        Self {
            text: text.into(),
            category,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub head: Entity,
    pub relation: Relation,
    pub tail: Entity,
}

/// Node and edge sets; every edge endpoint is also a node.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityGraph {
    nodes: BTreeSet<Entity>,
    edges: BTreeSet<Edge>,
}

impl EntityGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, node: Entity) {
        self.nodes.insert(node);
    }

    /// Inserts the edge and both endpoints.
    pub fn add_edge(&mut self, head: Entity, relation: Relation, tail: Entity) {
        self.nodes.insert(head.clone());
        self.nodes.insert(tail.clone());
        self.edges.insert(Edge { head, relation, tail });
    }

    pub fn nodes(&self) -> &BTreeSet<Entity> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    /// Nodes plus edges.
    pub fn item_count(&self) -> usize {
        self.nodes.len() + self.edges.len()
    }
}

/// F1 over nodes and edges together: a node matches on identical text and
/// category, an edge on identical endpoints and relation. Two empty graphs
/// score 1.
pub fn graph_f1(pred: &EntityGraph, truth: &EntityGraph) -> f64 {
    let total = pred.item_count() + truth.item_count();
    if total == 0 {
        return 1.0;
    }
    let matched = pred.nodes.intersection(&truth.nodes).count() + pred.edges.intersection(&truth.edges).count();
    2.0 * matched as f64 / total as f64
}

/// Turns report text into an entity graph.
pub trait EntityExtractor {
    fn extract(&self, report: &str) -> EntityGraph;
}

/// Lexicon mentions become observation nodes (category from negation and
/// uncertainty cues), anatomy phrases become anatomy nodes, and every
/// observation is `located_at` every anatomy phrase in the same sentence.
#[derive(Debug, Clone)]
pub struct RuleExtractor {
    pub lexicon: Lexicon,
    pub anatomy: Vec<Vec<String>>,
}

impl Default for RuleExtractor {
    fn default() -> Self {
        let anatomy = [
            "right lower lobe",
            "left lower lobe",
            "right upper lobe",
            "left upper lobe",
            "right middle lobe",
            "lingula",
            "lung",
            "lungs",
            "right lung",
            "left lung",
            "lung bases",
            "lung base",
            "bases",
            "base",
            "apex",
            "apices",
            "heart",
            "mediastinum",
            "hilum",
            "hila",
            "costophrenic angle",
            "costophrenic angles",
            "pleural space",
            "chest",
            "rib",
            "ribs",
            "spine",
            "aorta",
            "diaphragm",
            "hemidiaphragm",
            "stomach",
            "atrium",
            "svc",
        ];
        Self {
            lexicon: Lexicon::default(),
            anatomy: anatomy
                .iter()
                .map(|p| p.split_whitespace().map(String::from).collect())
                .collect(),
        }
    }
}

impl EntityExtractor for RuleExtractor {
    fn extract(&self, report: &str) -> EntityGraph {
        let extra: Vec<(Vec<String>, ())> = self.anatomy.iter().map(|p| (p.clone(), ())).collect();
        let mut g = EntityGraph::new();
        for sentence in sentences(report, &self.lexicon) {
            let mut observations = Vec::new();
            let mut anatomy = Vec::new();
            for clause in &sentence {
                for hit in scan(clause, &self.lexicon, &extra) {
                    let text = clause[hit.start..hit.end].join(" ");
                    match hit.tag {
                        Tag::Mention(_) => {
                            let category = match certainty(clause, hit.start, hit.end, &self.lexicon) {
                                Certainty::Positive => EntityCategory::ObservationPresent,
                                Certainty::Negative => EntityCategory::ObservationAbsent,
                                Certainty::Uncertain => EntityCategory::ObservationUncertain,
                            };
                            observations.push(Entity::new(text, category));
                        }
                        Tag::Extra(()) => anatomy.push(Entity::new(text, EntityCategory::Anatomy)),
                        Tag::Ignore => {}
                    }
                }
            }
            for o in &observations {
                g.add_node(o.clone());
                for a in &anatomy {
                    g.add_edge(o.clone(), Relation::LocatedAt, a.clone());
                }
            }
            for a in anatomy {
                g.add_node(a);
            }
        }
        g
    }
}
