//! Prompt fixtures and their stored renderings.

use std::fs;
use std::path::PathBuf;

use medbench_core::corpus::{default_tasks, Sample};
use medbench_core::prompt::{make_exemplar, render_prompt};
use serde::Deserialize;

#[derive(Deserialize)]
pub struct Fixture {
    pub name: String,
    pub task_id: String,
    pub sample: Sample,
    pub exemplars: Vec<Sample>,
}

/// Stands for an image position in a golden file.
pub const MARKER: &str = "<<IMAGE>>";

/// Both crates sit next to each other under `crates/`.
pub fn goldens_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/goldens")
}

pub fn load_fixtures() -> Vec<Fixture> {
    let raw = fs::read_to_string(goldens_dir().join("fixtures.jsonl")).unwrap();
    raw.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// Golden text with markers removed, and the char offsets they stood at.
pub fn expected(name: &str) -> (String, Vec<usize>) {
    let raw = fs::read_to_string(goldens_dir().join(format!("{name}.golden"))).unwrap();
    let raw = raw.strip_suffix('\n').unwrap_or(&raw);
    let mut text = String::new();
    let mut slots = Vec::new();
    let mut chars = 0;
    for (i, piece) in raw.split(MARKER).enumerate() {
        if i > 0 {
            slots.push(chars);
        }
        text.push_str(piece);
        chars += piece.chars().count();
    }
    (text, slots)
}

/// Names of fixtures whose rendering differs from the golden, and the
/// number of fixtures checked.
pub fn golden_mismatches() -> (Vec<String>, usize) {
    let tasks = default_tasks();
    let fixtures = load_fixtures();
    let n = fixtures.len();
    let bad = fixtures
        .into_iter()
        .filter(|fx| {
            let task = tasks.iter().find(|t| t.task_id == fx.task_id).unwrap();
            let exemplars: Vec<_> = fx.exemplars.iter().map(|s| make_exemplar(s, task).unwrap()).collect();
            let bundle = render_prompt(task, &fx.sample, &exemplars).unwrap();
            (bundle.text, bundle.image_slots) != expected(&fx.name)
        })
        .map(|fx| fx.name)
        .collect();
    (bad, n)
}
