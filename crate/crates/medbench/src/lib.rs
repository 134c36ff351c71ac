//! File formats, pipeline stages, the rater service and the command line
//! around `medbench-core`.

use std::path::{Path, PathBuf};

pub mod cli;
pub mod evaluate;
pub mod fsio;
pub mod imageio;
pub mod manifest;
pub mod pipeline;
pub mod service;

pub use cli::run;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}: {message}", path.display())]
    Line {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Image { path: PathBuf, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Corpus(#[from] medbench_core::corpus::CorpusError),
    #[error(transparent)]
    Preprocess(#[from] medbench_core::preprocess::PreprocessError),
    #[error(transparent)]
    Prompt(#[from] medbench_core::prompt::PromptError),
    #[error(transparent)]
    Mixture(#[from] medbench_core::mixture::MixtureError),
    #[error(transparent)]
    Metrics(#[from] medbench_core::metrics::MetricsError),
    #[error(transparent)]
    Humeval(#[from] medbench_core::humeval::HumevalError),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
