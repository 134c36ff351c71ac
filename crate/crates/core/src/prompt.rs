//! Instruction prompt rendering.
//!
//! A template asset is plain text split into `@`-sections:
//!
//! ```text
//! @version 1
//! @instruction
//! You are a helpful ...
//! @context
//! Reason for the study: {ctx:indication}.
//! @query
//! Given {image}. Q: {question}
//! {options}
//! A:
//! @prompt
//! Instructions: {instruction}
//!
//! {exemplars}{query}
//! ```
//!
//! `@query` is rendered once per exemplar (images become the literal
//! `<img>`, the target follows the answer prefix) and once for the sample
//! itself (images become zero-width slots recorded in
//! [`PromptBundle::image_slots`]). The answer prefix is the last
//! whitespace-separated token of `@query`. `@extrapolated` marks templates
//! written by analogy, with no worked example behind them.
//!
//! Query placeholders: `{image}`, `{question}`, `{options}`, `{context}`,
//! `{ctx:KEY}`. Prompt placeholders: `{instruction}`, `{exemplars}`,
//! `{query}`. A placeholder whose value already ends in `.`, `?` or `!`
//! swallows a `.` that immediately follows it in the template. A line
//! holding only `{options}` disappears when the sample has no options.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{Sample, TaskRegistry, TaskSpec};
use crate::rng;

/// Literal that stands in for an image inside exemplars.
pub const IMAGE_PLACEHOLDER: &str = "<img>";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("multiple-choice prompts need 2 to 26 options, got {0}")]
    OptionCount(usize),
    #[error("template: {0}")]
    Template(String),
    #[error("no prompt template for task `{0}`")]
    NoTemplate(String),
    #[error("sample `{sample_id}` is for task `{sample_task}`, not `{task_id}`")]
    TaskMismatch {
        sample_id: String,
        sample_task: String,
        task_id: String,
    },
    #[error("sample `{sample_id}` lacks context key `{key}`")]
    MissingContext { sample_id: String, key: String },
    #[error("sample `{0}` has no image but the template needs one")]
    MissingImage(String),
    #[error("sample `{sample_id}` has {count} image(s) the template has no slot for")]
    UnusedImages { sample_id: String, count: usize },
    #[error("task `{task_id}` takes {expected} exemplar(s), got {got}")]
    ExemplarCount {
        task_id: String,
        expected: usize,
        got: usize,
    },
    #[error("sample `{0}` has an empty target")]
    EmptyTarget(String),
    #[error("sample `{0}` has an empty question")]
    EmptyQuestion(String),
    #[error("task `{task_id}` needs {needed} exemplar(s) from train, found {available}")]
    NotEnoughExemplars {
        task_id: String,
        needed: usize,
        available: usize,
    },
}

/// A text-only demonstration placed before the real question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub rendered_body: String,
    pub uses_placeholder: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub text: String,
    /// Character (not byte) offsets into `text` where the sample's images
    /// are embedded, in image order.
    pub image_slots: Vec<usize>,
    pub answer_prefix: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Slot {
    Instruction,
    Exemplars,
    Query,
    Context,
    Question,
    Options,
    Image,
    Ctx(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Text(String),
    Slot(Slot),
}

fn parse_segments(src: &str, allowed: &[&str], section: &str) -> Result<Vec<Segment>, PromptError> {
    let mut out = Vec::new();
    let mut rest = src;
    while let Some(open) = rest.find('{') {
        if open > 0 {
            out.push(Segment::Text(rest[..open].to_string()));
        }
        let close = rest[open..]
            .find('}')
            .map(|i| open + i)
            .ok_or_else(|| PromptError::Template(format!("unclosed `{{` in @{section}")))?;
        let name = &rest[open + 1..close];
        let slot = match name {
            "instruction" => Slot::Instruction,
            "exemplars" => Slot::Exemplars,
            "query" => Slot::Query,
            "context" => Slot::Context,
            "question" => Slot::Question,
            "options" => Slot::Options,
            "image" => Slot::Image,
            _ => match name.strip_prefix("ctx:") {
                Some(key) if !key.is_empty() => Slot::Ctx(key.to_string()),
                _ => return Err(PromptError::Template(format!("unknown placeholder `{{{name}}}`"))),
            },
        };
        let kind = if matches!(slot, Slot::Ctx(_)) { "ctx" } else { name };
        if !allowed.contains(&kind) {
            return Err(PromptError::Template(format!(
                "placeholder `{{{name}}}` not allowed in @{section}"
            )));
        }
        out.push(Segment::Slot(slot));
        rest = &rest[close + 1..];
    }
    if !rest.is_empty() {
        out.push(Segment::Text(rest.to_string()));
    }
    Ok(out)
}

fn count_slots(segments: &[Segment], slot: &Slot) -> usize {
    segments
        .iter()
        .filter(|s| matches!(s, Segment::Slot(x) if x == slot))
        .count()
}

/// A parsed template asset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    version: u32,
    extrapolated: bool,
    instruction: Option<String>,
    context: Option<Vec<Segment>>,
    query: Vec<Segment>,
    prompt: Vec<Segment>,
    answer_prefix: String,
    fixed_exemplars: Vec<Exemplar>,
}

const QUERY_SLOTS: [&str; 5] = ["image", "question", "options", "context", "ctx"];
const CONTEXT_SLOTS: [&str; 1] = ["ctx"];
const PROMPT_SLOTS: [&str; 3] = ["instruction", "exemplars", "query"];

impl PromptTemplate {
    pub fn parse(asset: &str) -> Result<Self, PromptError> {
        let mut version = None;
        let mut extrapolated = false;
        let mut sections: Vec<(String, String)> = Vec::new();
        for line in asset.lines() {
            if let Some(directive) = line.strip_prefix('@') {
                let (name, arg) = directive.split_once(' ').unwrap_or((directive, ""));
                match name {
                    "version" => {
                        let v = arg
                            .trim()
                            .parse()
                            .map_err(|_| PromptError::Template(format!("bad version `{arg}`")))?;
                        version = Some(v);
                    }
                    "extrapolated" => extrapolated = true,
                    "instruction" | "context" | "query" | "prompt" => {
                        if sections.iter().any(|(n, _)| n == name) {
                            return Err(PromptError::Template(format!("duplicate @{name}")));
                        }
                        sections.push((name.to_string(), String::new()));
                    }
                    _ => return Err(PromptError::Template(format!("unknown directive @{name}"))),
                }
                continue;
            }
            match sections.last_mut() {
                Some((_, body)) => {
                    body.push_str(line);
                    body.push('\n');
                }
                None if line.trim().is_empty() => {}
                None => return Err(PromptError::Template("text before the first section".into())),
            }
        }
        let take = |name: &str| -> Option<String> {
            sections
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, b)| b.trim_end_matches('\n').to_string())
        };
        let version = version.ok_or_else(|| PromptError::Template("missing @version".into()))?;
        let instruction = take("instruction").map(|s| s.trim_end().to_string());
        let query_src = take("query").ok_or_else(|| PromptError::Template("missing @query".into()))?;
        let prompt_src = take("prompt").ok_or_else(|| PromptError::Template("missing @prompt".into()))?;
        let context = take("context")
            .map(|c| parse_segments(c.trim_end(), &CONTEXT_SLOTS, "context"))
            .transpose()?;
        let query = parse_segments(&query_src, &QUERY_SLOTS, "query")?;
        let prompt = parse_segments(&prompt_src, &PROMPT_SLOTS, "prompt")?;

        if count_slots(&prompt, &Slot::Query) != 1 {
            return Err(PromptError::Template(
                "@prompt must contain {query} exactly once".into(),
            ));
        }
        if count_slots(&prompt, &Slot::Exemplars) > 1 {
            return Err(PromptError::Template("@prompt repeats {exemplars}".into()));
        }
        if count_slots(&prompt, &Slot::Instruction) > 0 && instruction.is_none() {
            return Err(PromptError::Template("{instruction} used without @instruction".into()));
        }
        if count_slots(&query, &Slot::Context) > 0 && context.is_none() {
            return Err(PromptError::Template("{context} used without @context".into()));
        }
        if count_slots(&query, &Slot::Image) > 1 {
            return Err(PromptError::Template("@query repeats {image}".into()));
        }
        let answer_prefix = match query.last() {
            Some(Segment::Text(t)) => t.split_whitespace().last().unwrap_or_default().to_string(),
            _ => String::new(),
        };
        if !answer_prefix.ends_with(':') {
            return Err(PromptError::Template(
                "@query must end with an answer prefix like `A:`".into(),
            ));
        }
        Ok(Self {
            version,
            extrapolated,
            instruction,
            context,
            query,
            prompt,
            answer_prefix,
            fixed_exemplars: Vec::new(),
        })
    }

    /// Bundled template for one of the built-in tasks.
    pub fn builtin(task_id: &str) -> Option<Self> {
        let asset = builtin_asset(task_id)?;
        let mut template = Self::parse(asset).expect("bundled template parses");
        if let Some(ex) = builtin_exemplar(task_id) {
            template.fixed_exemplars.push(ex);
        }
        Some(template)
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    /// True when the wording was written by analogy with other tasks.
    pub fn is_extrapolated(&self) -> bool {
        self.extrapolated
    }

    pub fn instruction(&self) -> Option<&str> {
        self.instruction.as_deref()
    }

    pub fn answer_prefix(&self) -> &str {
        &self.answer_prefix
    }

    /// Hand-written exemplars that replace train-split selection.
    pub fn fixed_exemplars(&self) -> &[Exemplar] {
        &self.fixed_exemplars
    }

    pub fn with_fixed_exemplars(mut self, exemplars: Vec<Exemplar>) -> Self {
        self.fixed_exemplars = exemplars;
        self
    }

    fn render_query(&self, sample: &Sample, task: &TaskSpec, mode: ImageMode) -> Result<Rendered, PromptError> {
        if sample.question.trim().is_empty() {
            return Err(PromptError::EmptyQuestion(sample.sample_id.clone()));
        }
        let options = sample.options(task);
        let options_text = if options.is_empty() {
            String::new()
        } else {
            format_mcq(&options)?
        };
        let n_images = sample.image_refs.len();
        let has_image_slot = count_slots(&self.query, &Slot::Image) > 0;
        if has_image_slot && n_images == 0 {
            return Err(PromptError::MissingImage(sample.sample_id.clone()));
        }
        if !has_image_slot && n_images > 0 {
            return Err(PromptError::UnusedImages {
                sample_id: sample.sample_id.clone(),
                count: n_images,
            });
        }

        let segments = if options.is_empty() {
            drop_options(&self.query)
        } else {
            self.query.clone()
        };
        let mut out = Rendered::default();
        for seg in &segments {
            match seg {
                Segment::Text(t) => out.text(t),
                Segment::Slot(Slot::Question) => out.value(&sample.question),
                Segment::Slot(Slot::Options) => out.value(&options_text),
                Segment::Slot(Slot::Ctx(key)) => out.value(ctx_value(sample, key)?),
                Segment::Slot(Slot::Context) => {
                    let mut sub = Rendered::default();
                    for seg in self.context.as_deref().unwrap_or_default() {
                        match seg {
                            Segment::Text(t) => sub.text(t),
                            Segment::Slot(Slot::Ctx(key)) => sub.value(ctx_value(sample, key)?),
                            Segment::Slot(_) => unreachable!("checked at parse"),
                        }
                    }
                    out.value(&sub.text);
                }
                Segment::Slot(Slot::Image) => match mode {
                    ImageMode::Placeholder => {
                        let mut v = String::new();
                        for i in 0..n_images {
                            if i > 0 {
                                v.push(' ');
                            }
                            v.push_str(IMAGE_PLACEHOLDER);
                        }
                        out.value(&v);
                    }
                    ImageMode::Slots => {
                        for i in 0..n_images {
                            if i > 0 {
                                out.text(" ");
                            }
                            out.slots.push(out.chars);
                        }
                        out.after_value("");
                    }
                },
                Segment::Slot(_) => unreachable!("checked at parse"),
            }
        }
        Ok(out)
    }

    /// Builds a text-only exemplar from a solved sample.
    pub fn make_exemplar(&self, sample: &Sample, task: &TaskSpec) -> Result<Exemplar, PromptError> {
        let target = sample.target.trim();
        if target.is_empty() {
            return Err(PromptError::EmptyTarget(sample.sample_id.clone()));
        }
        let mut body = self.render_query(sample, task, ImageMode::Placeholder)?.text;
        body.push(' ');
        body.push_str(target);
        if !ends_sentence(target) {
            body.push('.');
        }
        Ok(Exemplar {
            rendered_body: body,
            uses_placeholder: !sample.image_refs.is_empty(),
        })
    }

    pub fn render_prompt(
        &self,
        task: &TaskSpec,
        sample: &Sample,
        exemplars: &[Exemplar],
    ) -> Result<PromptBundle, PromptError> {
        if sample.task_id != task.task_id {
            return Err(PromptError::TaskMismatch {
                sample_id: sample.sample_id.clone(),
                sample_task: sample.task_id.clone(),
                task_id: task.task_id.clone(),
            });
        }
        let expected = task.fewshot_mode.exemplar_count();
        if exemplars.len() != expected {
            return Err(PromptError::ExemplarCount {
                task_id: task.task_id.clone(),
                expected,
                got: exemplars.len(),
            });
        }
        let query = self.render_query(sample, task, ImageMode::Slots)?;
        let mut out = Rendered::default();
        for seg in &self.prompt {
            match seg {
                Segment::Text(t) => out.text(t),
                Segment::Slot(Slot::Instruction) => out.value(self.instruction.as_deref().unwrap_or_default()),
                Segment::Slot(Slot::Exemplars) => {
                    for ex in exemplars {
                        out.text(&ex.rendered_body);
                        out.text("\n\n");
                    }
                }
                Segment::Slot(Slot::Query) => {
                    let base = out.chars;
                    out.slots.extend(query.slots.iter().map(|s| s + base));
                    out.value(&query.text);
                }
                Segment::Slot(_) => unreachable!("checked at parse"),
            }
        }
        Ok(PromptBundle {
            text: out.text,
            image_slots: out.slots,
            answer_prefix: self.answer_prefix.clone(),
        })
    }
}

#[derive(Clone, Copy)]
enum ImageMode {
    Placeholder,
    Slots,
}

#[derive(Default)]
struct Rendered {
    text: String,
    chars: usize,
    slots: Vec<usize>,
    swallow_dot: bool,
}

impl Rendered {
    fn text(&mut self, t: &str) {
        let t = if self.swallow_dot {
            t.strip_prefix('.').unwrap_or(t)
        } else {
            t
        };
        self.swallow_dot = false;
        self.push(t);
    }

    fn value(&mut self, v: &str) {
        self.swallow_dot = false;
        self.push(v);
        self.after_value(v);
    }

    fn after_value(&mut self, v: &str) {
        self.swallow_dot = ends_sentence(v);
    }

    fn push(&mut self, s: &str) {
        self.text.push_str(s);
        self.chars += s.chars().count();
    }
}

fn ends_sentence(s: &str) -> bool {
    matches!(s.chars().last(), Some('.' | '?' | '!'))
}

fn ctx_value<'a>(sample: &'a Sample, key: &str) -> Result<&'a str, PromptError> {
    sample.context.get(key).ok_or_else(|| PromptError::MissingContext {
        sample_id: sample.sample_id.clone(),
        key: key.to_string(),
    })
}

/// Removes `{options}` for option-less samples: a line holding only the
/// placeholder goes entirely, an inline one takes a neighbouring space.
fn drop_options(segments: &[Segment]) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::with_capacity(segments.len());
    let mut trim_next: Option<char> = None;
    for seg in segments {
        match seg {
            Segment::Slot(Slot::Options) => {
                let prev_ends_line = match out.last() {
                    None => true,
                    Some(Segment::Text(t)) => t.ends_with('\n'),
                    Some(Segment::Slot(_)) => false,
                };
                let prev_ends_space = matches!(out.last(), Some(Segment::Text(t)) if t.ends_with(' '));
                trim_next = Some(if prev_ends_line { '\n' } else { ' ' });
                if !prev_ends_line && prev_ends_space {
                    if let Some(Segment::Text(t)) = out.last_mut() {
                        t.pop();
                    }
                    trim_next = None;
                }
            }
            Segment::Text(t) => {
                let t = match trim_next.take() {
                    Some(c) => t.strip_prefix(c).unwrap_or(t),
                    None => t,
                };
                if !t.is_empty() {
                    out.push(Segment::Text(t.to_string()));
                }
            }
            other => {
                trim_next = None;
                out.push(other.clone());
            }
        }
    }
    out
}

/// `(A) first (B) second ...`
pub fn format_mcq<S: AsRef<str>>(options: &[S]) -> Result<String, PromptError> {
    if !(2..=26).contains(&options.len()) {
        return Err(PromptError::OptionCount(options.len()));
    }
    let mut out = String::new();
    for (i, opt) in options.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push('(');
        out.push((b'A' + i as u8) as char);
        out.push_str(") ");
        out.push_str(opt.as_ref());
    }
    Ok(out)
}

/// Lowercases, drops ASCII punctuation, and collapses whitespace.
pub fn normalize_answer(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        let word: String = word
            .chars()
            .filter(|c| !c.is_ascii_punctuation())
            .flat_map(char::to_lowercase)
            .collect();
        if word.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&word);
    }
    out
}

/// Splits a leading `(B)`, `B:`, `B)` or `B.` tag off `text`.
fn strip_letter_tag(text: &str) -> Option<(char, &str)> {
    let t = text.trim_start();
    let b = t.as_bytes();
    let (letter, len) = match b {
        [b'(', l, b')', ..] if l.is_ascii_alphabetic() => (*l, 3),
        [l, b':' | b')' | b'.', ..] if l.is_ascii_alphabetic() => (*l, 2),
        _ => return None,
    };
    let rest = &t[len..];
    if !(rest.is_empty() || rest.starts_with(char::is_whitespace)) {
        return None;
    }
    Some((letter.to_ascii_uppercase() as char, rest))
}

/// Maps free-text output to an option index. Uses the first non-empty
/// line, removes up to two leading letter tags, and requires the
/// normalized remainder to equal exactly one normalized option. A bare tag
/// resolves by its letter. `None` means unparseable.
pub fn parse_answer<S: AsRef<str>>(generated: &str, options: &[S]) -> Option<usize> {
    if options.is_empty() {
        return None;
    }
    let line = generated.lines().find(|l| !l.trim().is_empty())?;
    let normalized: Vec<String> = options.iter().map(|o| normalize_answer(o.as_ref())).collect();
    let unique_match = |candidate: &str| -> Option<usize> {
        let c = normalize_answer(candidate);
        if c.is_empty() {
            return None;
        }
        let mut hits = normalized.iter().enumerate().filter(|(_, o)| **o == c);
        let first = hits.next()?.0;
        hits.next().is_none().then_some(first)
    };

    let mut candidate = line;
    let mut last_letter = None;
    for _ in 0..=2 {
        if let Some(i) = unique_match(candidate) {
            return Some(i);
        }
        match strip_letter_tag(candidate) {
            Some((letter, rest)) => {
                last_letter = Some(letter);
                candidate = rest;
            }
            None => break,
        }
    }
    if let Some(i) = unique_match(candidate) {
        return Some(i);
    }
    if normalize_answer(candidate).is_empty() {
        let idx = (last_letter? as u8 - b'A') as usize;
        return (idx < options.len()).then_some(idx);
    }
    None
}

fn builtin_asset(task_id: &str) -> Option<&'static str> {
    Some(match task_id {
        "medqa" => include_str!("../templates/medqa.tmpl"),
        "medmcqa" => include_str!("../templates/medmcqa.tmpl"),
        "pubmedqa" => include_str!("../templates/pubmedqa.tmpl"),
        "mimic_iii" => include_str!("../templates/mimic_iii.tmpl"),
        "vqa_rad" => include_str!("../templates/vqa_rad.tmpl"),
        "slake_vqa" => include_str!("../templates/slake_vqa.tmpl"),
        "path_vqa" => include_str!("../templates/path_vqa.tmpl"),
        "mimic_cxr_report" => include_str!("../templates/mimic_cxr_report.tmpl"),
        "mimic_cxr_cls" => include_str!("../templates/mimic_cxr_cls.tmpl"),
        "pad_ufes_20" => include_str!("../templates/pad_ufes_20.tmpl"),
        "vindr_mammo" => include_str!("../templates/vindr_mammo.tmpl"),
        "cbis_ddsm" => include_str!("../templates/cbis_ddsm.tmpl"),
        "precision_fda" => include_str!("../templates/precision_fda.tmpl"),
        "montgomery_tb_cot" => include_str!("../templates/montgomery_tb_cot.tmpl"),
        _ => return None,
    })
}

fn builtin_exemplar(task_id: &str) -> Option<Exemplar> {
    let body = match task_id {
        "montgomery_tb_cot" => include_str!("../templates/montgomery_tb_cot.exemplar"),
        _ => return None,
    };
    Some(exemplar_from_text(body))
}

/// Wraps a stored exemplar body.
pub fn exemplar_from_text(body: &str) -> Exemplar {
    let body = body.trim_end();
    Exemplar {
        rendered_body: body.to_string(),
        uses_placeholder: body.contains(IMAGE_PLACEHOLDER),
    }
}

/// Renders with the task's bundled template.
pub fn render_prompt(task: &TaskSpec, sample: &Sample, exemplars: &[Exemplar]) -> Result<PromptBundle, PromptError> {
    builtin_for(task)?.render_prompt(task, sample, exemplars)
}

pub fn make_exemplar(sample: &Sample, task: &TaskSpec) -> Result<Exemplar, PromptError> {
    builtin_for(task)?.make_exemplar(sample, task)
}

fn builtin_for(task: &TaskSpec) -> Result<PromptTemplate, PromptError> {
    PromptTemplate::builtin(&task.task_id).ok_or_else(|| PromptError::NoTemplate(task.task_id.clone()))
}

/// Picks the exemplar samples for `query`: the task's train split in a
/// seeded order that is the same for every query, skipping the query
/// itself.
pub fn select_exemplars<'a>(
    registry: &'a TaskRegistry,
    task: &TaskSpec,
    query: &Sample,
    seed: u64,
) -> Result<Vec<&'a Sample>, PromptError> {
    let needed = task.fewshot_mode.exemplar_count();
    if needed == 0 {
        return Ok(Vec::new());
    }
    let mut pool: Vec<&Sample> = registry
        .split_samples(&task.task_id, crate::corpus::Split::Train)
        .collect();
    let mut r = rng::seeded(rng::derive_seed(seed, &format!("prompt/exemplars/{}", task.task_id)));
    rng::shuffle(&mut r, &mut pool);
    let chosen: Vec<&Sample> = pool
        .iter()
        .copied()
        .filter(|s| s.sample_id != query.sample_id)
        .take(needed)
        .collect();
    if chosen.len() < needed {
        return Err(PromptError::NotEnoughExemplars {
            task_id: task.task_id.clone(),
            needed,
            available: chosen.len(),
        });
    }
    Ok(chosen)
}

/// Exemplars for `query`: the template's stored ones when it has any,
/// otherwise rendered from seeded train-split picks.
pub fn exemplars_for(
    template: &PromptTemplate,
    registry: &TaskRegistry,
    task: &TaskSpec,
    query: &Sample,
    seed: u64,
) -> Result<Vec<Exemplar>, PromptError> {
    if !template.fixed_exemplars.is_empty() {
        return Ok(template.fixed_exemplars.clone());
    }
    select_exemplars(registry, task, query, seed)?
        .into_iter()
        .map(|s| template.make_exemplar(s, task))
        .collect()
}
