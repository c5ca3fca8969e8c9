//! Dataset ingestion, end-to-end evaluation over records × models ×
//! summaries, optional summary generation and report emission.

mod config;
mod dataset;
mod evaluate;
mod report;

use thiserror::Error;

use crate::llm::ChatBackend;
use crate::pipeline::{ModelSpec, Prompts, StageError};

pub use config::{BackendMode, Config, ModelConfig, PARALLELISM_ENV};
pub use dataset::{load_dataset, parse_record, Summary, SummarySource, TaskRecord, SUMMARIES_PER_RECORD};
pub use evaluate::{evaluate, model_summary, EvalModel, Evaluator};
pub use report::{
    AggregateRow, CellFailure, CellMetrics, CellRow, MeasureStats, MetricsReport, OneSampleRow,
    PairwiseRow, REPORT_FILES,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("I/O: {0}")]
    Io(String),
    #[error("parse error in {file}: {message}")]
    Parse { file: String, message: String },
    #[error("record `{record}`: {message}")]
    Validation { record: String, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("problem `{name}`: {message}")]
    Problem { name: String, message: String },
    #[error("strict mode: {0}")]
    FixtureMiss(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Stage(#[from] StageError),
}

/// Asks `model` to condense step descriptions into one command.
///
/// Empty descriptions are skipped when numbering. The first non-empty line
/// of the response is returned, trimmed.
pub fn summarize_steps(
    backend: &dyn ChatBackend,
    model: &ModelSpec,
    prompts: &Prompts,
    task: &str,
    step_nl: &[Option<String>],
) -> Result<String, HarnessError> {
    let steps: Vec<&str> = step_nl
        .iter()
        .flatten()
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .collect();
    if steps.is_empty() {
        return Err(HarnessError::Precondition("no step has a description".into()));
    }
    let prompt = prompts.summarize(task.trim(), &steps);
    let request = model.request(prompt).map_err(StageError::from)?;
    let text = backend
        .complete(&request)
        .map_err(StageError::from)?
        .text;
    Ok(text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or("")
        .to_string())
}
