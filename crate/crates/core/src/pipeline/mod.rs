//! Command-to-actions pipeline: entity inference, command translation and
//! post-processing.

mod postprocess;
mod prompts;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::actionseq::{parse_generic, parse_vh_lines, ActionSequence, AliasTable};
use crate::domain::{normalize_token, ActionSchema, EntityId, ProblemDefinition};
use crate::llm::{ChatBackend, ChatRequest, LlmError, DEFAULT_MAX_TOKENS};

pub use postprocess::{post_process, Removal, RemovalReason};
pub use prompts::{fill, Prompts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    EntityInference,
    Translate,
    PostProcess,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::EntityInference => "entity_inference",
            Stage::Translate => "translate",
            Stage::PostProcess => "post_process",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StageError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("no entities could be parsed from the response")]
    EmptyShortlist,
    #[error("no actions could be parsed from the response")]
    EmptyParse,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: StageError,
    },
}

impl PipelineError {
    pub fn stage(&self) -> Option<Stage> {
        match self {
            PipelineError::Stage { stage, .. } => Some(*stage),
            PipelineError::Precondition(_) => None,
        }
    }

    pub fn is_fixture_miss(&self) -> bool {
        matches!(
            self,
            PipelineError::Stage {
                source: StageError::Llm(e),
                ..
            } if e.is_fixture_miss()
        )
    }

    fn at(stage: Stage) -> impl Fn(StageError) -> PipelineError {
        move |source| PipelineError::Stage { stage, source }
    }
}

/// How one model is called.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Append the action catalog to the translation prompt. Models trained
    /// on the action vocabulary do without it.
    pub include_catalog: bool,
}

impl ModelSpec {
    pub fn new(model_id: impl Into<String>) -> Self {
        ModelSpec {
            model_id: model_id.into(),
            temperature: 0.0,
            max_tokens: DEFAULT_MAX_TOKENS,
            include_catalog: false,
        }
    }

    pub fn with_catalog(mut self, include: bool) -> Self {
        self.include_catalog = include;
        self
    }

    pub fn request(&self, prompt: String) -> Result<ChatRequest, LlmError> {
        ChatRequest::new(&self.model_id, "", prompt)?
            .with_temperature(self.temperature)?
            .with_max_tokens(self.max_tokens)
    }
}

/// A backend together with the model it should be asked for.
#[derive(Clone, Copy)]
pub struct ModelRef<'a> {
    pub backend: &'a dyn ChatBackend,
    pub spec: &'a ModelSpec,
}

impl<'a> ModelRef<'a> {
    pub fn new(backend: &'a dyn ChatBackend, spec: &'a ModelSpec) -> Self {
        ModelRef { backend, spec }
    }

    fn ask(&self, prompt: String) -> Result<String, StageError> {
        let request = self.spec.request(prompt)?;
        Ok(self.backend.complete(&request)?.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntityShortlist {
    pub entities: Vec<EntityId>,
    /// Shortlisted entities the problem does not declare.
    pub unknown: Vec<EntityId>,
}

impl EntityShortlist {
    pub fn names(&self) -> Vec<&str> {
        self.entities.iter().map(EntityId::as_str).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineResult {
    pub command: String,
    pub shortlist: EntityShortlist,
    pub raw_text: String,
    pub raw_sequence: ActionSequence,
    pub final_sequence: ActionSequence,
    pub removal_log: Vec<Removal>,
}

impl fmt::Display for PipelineResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "command: {}", self.command)?;
        let unknown: Vec<&str> = self.shortlist.unknown.iter().map(EntityId::as_str).collect();
        writeln!(f, "entities: {}", self.shortlist.names().join(", "))?;
        writeln!(f, "unknown entities: {}", unknown.join(", "))?;
        writeln!(f, "raw response:")?;
        for line in self.raw_text.lines() {
            writeln!(f, "  | {line}")?;
        }
        writeln!(f, "raw sequence:")?;
        for a in &self.raw_sequence {
            writeln!(f, "  {a}")?;
        }
        writeln!(f, "removed:")?;
        for r in &self.removal_log {
            writeln!(f, "  {r}")?;
        }
        writeln!(f, "final sequence:")?;
        for a in &self.final_sequence {
            writeln!(f, "  {a}")?;
        }
        Ok(())
    }
}

/// Templates and keyword mapping shared by every pipeline run.
#[derive(Debug, Clone, Default)]
pub struct Pipeline {
    pub prompts: Prompts,
    pub aliases: AliasTable,
}

impl Pipeline {
    pub fn new(prompts: Prompts, aliases: AliasTable) -> Self {
        Pipeline { prompts, aliases }
    }

    /// Bundled prompts and alias table.
    pub fn bundled() -> Self {
        Pipeline::new(Prompts::bundled(), AliasTable::bundled())
    }

    pub fn entity_prompt(&self, problem: &ProblemDefinition, command: &str) -> String {
        let names: Vec<&str> = problem.entity_ids().map(EntityId::as_str).collect();
        self.prompts.entity_inference(&names, command)
    }

    pub fn translation_prompt(
        &self,
        shortlist: &EntityShortlist,
        command: &str,
        catalog: Option<&[ActionSchema]>,
    ) -> String {
        self.prompts.translation(&shortlist.names(), command, catalog)
    }

    /// Asks for the entities relevant to `command`. Entities the problem does
    /// not declare are kept and listed in `unknown`.
    pub fn infer_entities(
        &self,
        model: ModelRef<'_>,
        problem: &ProblemDefinition,
        command: &str,
    ) -> Result<EntityShortlist, PipelineError> {
        if problem.entity_count() == 0 {
            return Err(PipelineError::Precondition("problem declares no entities".into()));
        }
        let at = PipelineError::at(Stage::EntityInference);
        let text = model.ask(self.entity_prompt(problem, command)).map_err(&at)?;
        let entities = parse_shortlist(&text);
        if entities.is_empty() {
            return Err(at(StageError::EmptyShortlist));
        }
        let unknown = entities.iter().filter(|e| !problem.has_entity(e)).cloned().collect();
        Ok(EntityShortlist { entities, unknown })
    }

    /// Asks for an action sequence; returns the raw response and its parse.
    pub fn translate(
        &self,
        model: ModelRef<'_>,
        shortlist: &EntityShortlist,
        command: &str,
        catalog: Option<&[ActionSchema]>,
    ) -> Result<(String, ActionSequence), PipelineError> {
        if shortlist.entities.is_empty() {
            return Err(PipelineError::Precondition("entity shortlist is empty".into()));
        }
        let at = PipelineError::at(Stage::Translate);
        let text = model
            .ask(self.translation_prompt(shortlist, command, catalog))
            .map_err(&at)?;
        let seq = parse_response(&text).ok_or_else(|| at(StageError::EmptyParse))?;
        Ok((text, seq))
    }

    /// Runs all three stages. The catalog is included in the translation
    /// prompt when the translator's [`ModelSpec::include_catalog`] is set.
    pub fn run(
        &self,
        entity_model: ModelRef<'_>,
        translator: ModelRef<'_>,
        problem: &ProblemDefinition,
        command: &str,
    ) -> Result<PipelineResult, PipelineError> {
        if command.trim().is_empty() {
            return Err(PipelineError::Precondition("command is empty".into()));
        }
        let shortlist = self.infer_entities(entity_model, problem, command)?;
        let catalog = translator.spec.include_catalog.then(|| problem.schemas());
        let (raw_text, raw_sequence) = self.translate(translator, &shortlist, command, catalog)?;
        let (final_sequence, removal_log) = post_process(&raw_sequence, problem, &self.aliases);
        Ok(PipelineResult {
            command: command.to_string(),
            shortlist,
            raw_text,
            raw_sequence,
            final_sequence,
            removal_log,
        })
    }
}

/// Free-form call syntax first, script-style lines as the fallback.
pub fn parse_response(text: &str) -> Option<ActionSequence> {
    if let Ok(parsed) = parse_generic(text) {
        return Some(parsed.sequence);
    }
    let seq = parse_vh_lines(text);
    (!seq.is_empty()).then_some(seq)
}

/// Splits a comma- or newline-separated entity list, dropping list markers,
/// quotes, a leading `and`, and any lead-in ending in a colon. Order is kept
/// and repeats are dropped.
pub fn parse_shortlist(text: &str) -> Vec<EntityId> {
    let mut out: Vec<EntityId> = Vec::new();
    for line in text.lines() {
        let line = line.rsplit(':').next().unwrap_or(line);
        for item in line.split([',', ';']) {
            let mut item = item.trim();
            item = item.trim_start_matches(|c: char| {
                c == '-' || c == '*' || c == '•' || c.is_ascii_digit() || c == '.' || c == ')' || c.is_whitespace()
            });
            if let Some(rest) = item.strip_prefix("and ") {
                item = rest;
            }
            let token = normalize_token(item);
            if token.is_empty() {
                continue;
            }
            if let Ok(id) = EntityId::new(&token) {
                if !out.contains(&id) {
                    out.push(id);
                }
            }
        }
    }
    out
}
