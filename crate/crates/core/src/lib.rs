//! Core of the medbench harness: benchmark data model, preprocessing
//! transforms, instruction prompt rendering, task-mixture sampling,
//! automatic metrics, and human-evaluation statistics.
//!
//! Everything here is pure computation over in-memory values and builds
//! without `std` (an allocator is required). File formats, the CLI and the
//! rater service live in the `medbench` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod humeval;
pub mod metrics;
pub mod mixture;
pub mod preprocess;
pub mod prompt;
pub mod rng;

pub use corpus::{
    build_registry, CorpusError, FewShotMode, MetricId, Modality, Sample, Split, TaskRegistry, TaskSpec, TaskType,
};
pub use prompt::{PromptBundle, PromptTemplate};
