use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::actionseq::{parse_vh, ActionInstance, ActionSequence, AliasTable};
use crate::domain::ProblemDefinition;

/// Summaries per record.
pub const SUMMARIES_PER_RECORD: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummarySource {
    Human,
    Model,
}

impl fmt::Display for SummarySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SummarySource::Human => "human",
            SummarySource::Model => "model",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub source: SummarySource,
    pub text: String,
}

/// One evaluation item: a task, its human action sequence with optional
/// per-step descriptions, and three one-sentence summaries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskRecord {
    pub id: String,
    pub category: String,
    pub problem: String,
    pub task: String,
    pub synthetic: bool,
    /// Canonicalized reference actions.
    pub reference: ActionSequence,
    /// Aligned with `reference`.
    pub step_nl: Vec<Option<String>>,
    pub summaries: Vec<Summary>,
}

impl TaskRecord {
    /// Checks that every reference action grounds against `problem`.
    pub fn check_against(&self, problem: &ProblemDefinition) -> Result<(), HarnessError> {
        for (i, action) in self.reference.iter().enumerate() {
            problem.ground_instance(action).map_err(|e| HarnessError::Validation {
                record: self.id.clone(),
                message: format!("reference step {} `{action}`: {e}", i + 1),
            })?;
        }
        Ok(())
    }

    /// The non-empty step descriptions in order.
    pub fn described_steps(&self) -> Vec<&str> {
        self.step_nl
            .iter()
            .flatten()
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .collect()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    category: String,
    problem: String,
    task: String,
    #[serde(default)]
    synthetic: bool,
    steps: Vec<RawStep>,
    summaries: Vec<Summary>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStep {
    action: String,
    #[serde(default)]
    nl: Option<String>,
}

/// Parses one record file's text.
///
/// ```toml
/// id = "phone_call_01"
/// category = "phone_call"
/// problem = "home"
/// synthetic = true
/// task = "You are home and the phone rings."
///
/// [[steps]]
/// action = "[Walk] <bedroom> (1)"
/// nl = "look for him"
///
/// [[summaries]]
/// source = "human"
/// text = "Tell my roommate about the call."
/// ```
///
/// Step actions may be script-style (`[Walk] <bedroom> (1)`) or call-style
/// (`walk(bedroom)`); both are canonicalized through `aliases`.
pub fn parse_record(text: &str, aliases: &AliasTable) -> Result<TaskRecord, HarnessError> {
    let raw: RawRecord = toml::from_str(text).map_err(|e| HarnessError::Parse {
        file: String::new(),
        message: e.to_string(),
    })?;
    let invalid = |message: String| HarnessError::Validation {
        record: raw.id.clone(),
        message,
    };
    if raw.id.trim().is_empty() {
        return Err(invalid("empty id".into()));
    }
    if raw.task.trim().is_empty() {
        return Err(invalid("empty task".into()));
    }
    if raw.steps.is_empty() {
        return Err(invalid("no reference steps".into()));
    }
    if raw.summaries.len() != SUMMARIES_PER_RECORD {
        return Err(invalid(format!(
            "expected {SUMMARIES_PER_RECORD} summaries, found {}",
            raw.summaries.len()
        )));
    }
    let humans = raw.summaries.iter().filter(|s| s.source == SummarySource::Human).count();
    if humans != 2 {
        return Err(invalid(format!(
            "expected 2 human summaries and 1 model summary, found {humans} human"
        )));
    }
    if let Some(i) = raw.summaries.iter().position(|s| s.text.trim().is_empty()) {
        return Err(invalid(format!("summary {} is empty", i + 1)));
    }

    let mut actions = Vec::with_capacity(raw.steps.len());
    let mut step_nl = Vec::with_capacity(raw.steps.len());
    for (i, step) in raw.steps.iter().enumerate() {
        let action = parse_step(&step.action)
            .map_err(|m| invalid(format!("step {}: {m}", i + 1)))?;
        actions.push(aliases.canonicalize(&action).0);
        step_nl.push(step.nl.clone().filter(|s| !s.trim().is_empty()));
    }
    Ok(TaskRecord {
        id: raw.id,
        category: raw.category,
        problem: raw.problem,
        task: raw.task,
        synthetic: raw.synthetic,
        reference: ActionSequence::new(actions),
        step_nl,
        summaries: raw.summaries,
    })
}

fn parse_step(text: &str) -> Result<ActionInstance, String> {
    let text = text.trim();
    if text.starts_with('[') {
        let seq = parse_vh(text).map_err(|e| e.to_string())?;
        match seq.into_inner().as_slice() {
            [one] => Ok(one.clone()),
            _ => Err(format!("`{text}` must hold exactly one action")),
        }
    } else {
        text.parse::<ActionInstance>().map_err(|e| e.to_string())
    }
}

/// Loads every `*.toml` file in `dir`, sorted by file name. Record ids must
/// be unique.
pub fn load_dataset(dir: &Path, aliases: &AliasTable) -> Result<Vec<TaskRecord>, HarnessError> {
    let io = |e: std::io::Error| HarnessError::Io(format!("{}: {e}", dir.display()));
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(io)?
        .collect::<Result<Vec<_>, _>>()
        .map_err(io)?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    let mut seen = BTreeSet::new();
    let mut records = Vec::with_capacity(paths.len());
    for path in paths {
        let text = fs::read_to_string(&path)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        let record = parse_record(&text, aliases).map_err(|e| match e {
            HarnessError::Parse { message, .. } => HarnessError::Parse {
                file: path.display().to_string(),
                message,
            },
            other => other,
        })?;
        if !seen.insert(record.id.clone()) {
            return Err(HarnessError::Validation {
                record: record.id,
                message: format!("duplicate id (again in {})", path.display()),
            });
        }
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    const RECORD: &str = r#"
id = "phone_call_01"
category = "phone_call"
problem = "home"
synthetic = true
task = "You are home and the phone rings."

[[steps]]
action = "[Walk] <bedroom> (1)"
nl = "look for him"

[[steps]]
action = "talk(\"call for you\")"

[[summaries]]
source = "human"
text = "Tell my roommate."

[[summaries]]
source = "human"
text = "Let them know about the call."

[[summaries]]
source = "model"
text = "Find your roommate and tell them they have a phone call."
"#;

    #[test]
    fn parses_and_canonicalizes() {
        let r = parse_record(RECORD, &AliasTable::bundled()).unwrap();
        assert_eq!(r.reference.to_string(), "move_to(bedroom)\nsay(\"call for you\")\n");
        assert_eq!(r.step_nl, [Some("look for him".to_string()), None]);
        assert_eq!(r.described_steps(), ["look for him"]);
        assert!(r.synthetic);
    }

    #[test]
    fn rejects_wrong_summary_count() {
        let two = RECORD.rsplit_once("[[summaries]]").unwrap().0;
        match parse_record(two, &AliasTable::bundled()).unwrap_err() {
            HarnessError::Validation { record, message } => {
                assert_eq!(record, "phone_call_01");
                assert!(message.contains("3 summaries"), "{message}");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn rejects_unknown_fields_and_bad_steps() {
        let extra = format!("{RECORD}\nextra = 1\n");
        assert!(parse_record(&extra, &AliasTable::bundled()).is_err());
        let bad = RECORD.replace("[Walk] <bedroom> (1)", "[Walk] <bedroom> (1) [Run] <hall> (1)");
        assert!(matches!(
            parse_record(&bad, &AliasTable::bundled()),
            Err(HarnessError::Validation { .. })
        ));
    }

    #[test]
    fn empty_directory_gives_no_records() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_dataset(dir.path(), &AliasTable::bundled()).unwrap().is_empty());
    }
}
