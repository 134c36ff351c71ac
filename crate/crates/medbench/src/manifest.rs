//! JSON-lines sample manifests and task-spec files.

use std::path::Path;

use medbench_core::corpus::{check_known_tasks, default_tasks, Sample, TaskSpec};

use crate::fsio::{parse_jsonl, read_to_string, write_jsonl};
use crate::Error;

/// Reads every record in file order. Unknown task ids are not checked.
pub fn read_manifest(path: &Path) -> Result<Vec<Sample>, Error> {
    parse_jsonl(path, &read_to_string(path)?)
}

/// Reads a manifest and rejects records whose task is not in `tasks`.
pub fn load_manifest(path: &Path, tasks: &[TaskSpec]) -> Result<Vec<Sample>, Error> {
    let samples = read_manifest(path)?;
    check_known_tasks(&samples, tasks)?;
    Ok(samples)
}

pub fn write_manifest(path: &Path, samples: &[Sample]) -> Result<(), Error> {
    write_jsonl(path, samples)
}

/// Task specs from a JSON array file, or the built-in defaults.
pub fn load_tasks(path: Option<&Path>) -> Result<Vec<TaskSpec>, Error> {
    match path {
        None => Ok(default_tasks()),
        Some(p) => {
            let text = read_to_string(p)?;
            let tasks: Vec<TaskSpec> = serde_json::from_str(&text).map_err(|e| Error::Line {
                path: p.to_path_buf(),
                line: e.line(),
                message: e.to_string(),
            })?;
            for t in &tasks {
                t.validate()?;
            }
            Ok(tasks)
        }
    }
}
