//! Action instances, action sequences and the text formats they travel in.
//!
//! Two readers exist. [`parse_vh`] is strict and accepts the bracketed
//! script style (`[Walk] <kitchen> (1)`); [`parse_generic`] scans free-form
//! model output for `verb(args)` calls and skips everything else. Both
//! produce lowercase names and normalized entity arguments.

mod alias;
mod generic;
mod vh;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{normalize_token, DomainError, EntityId};

pub use alias::{canonicalize, AliasRule, AliasTable, MapFlag};
pub use generic::{parse_generic, GenericParse, SkippedLine};
pub use vh::{parse_vh, parse_vh_lines, serialize_vh};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("no actions could be recovered from the text")]
    EmptyParse,
    #[error("alias table line {line}: {message}")]
    Alias { line: usize, message: String },
}

/// One argument of an action: a world entity or a verbatim quoted string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Arg {
    Entity(EntityId),
    Text(String),
}

impl Arg {
    pub fn entity(raw: &str) -> Result<Arg, DomainError> {
        EntityId::new(raw).map(Arg::Entity)
    }

    pub fn as_entity(&self) -> Option<&EntityId> {
        match self {
            Arg::Entity(e) => Some(e),
            Arg::Text(_) => None,
        }
    }

    pub fn is_text(&self) -> bool {
        matches!(self, Arg::Text(_))
    }
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Entity(e) => write!(f, "{e}"),
            Arg::Text(t) => {
                f.write_str("\"")?;
                for ch in t.chars() {
                    if ch == '"' || ch == '\\' {
                        f.write_str("\\")?;
                    }
                    write!(f, "{ch}")?;
                }
                f.write_str("\"")
            }
        }
    }
}

/// A symbolic action: a lowercase verb and its ordered arguments.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionInstance {
    name: String,
    args: Vec<Arg>,
}

impl ActionInstance {
    pub fn new(name: &str, args: Vec<Arg>) -> Result<Self, DomainError> {
        let norm = normalize_token(name);
        if norm.is_empty() {
            return Err(DomainError::InvalidName(name.to_string()));
        }
        Ok(ActionInstance { name: norm, args })
    }

    /// Convenience constructor with entity-only arguments.
    pub fn with_entities(name: &str, args: &[&str]) -> Result<Self, DomainError> {
        let args = args
            .iter()
            .map(|a| Arg::entity(a))
            .collect::<Result<Vec<_>, _>>()?;
        ActionInstance::new(name, args)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn args(&self) -> &[Arg] {
        &self.args
    }

    pub(crate) fn set_name(&mut self, name: String) {
        self.name = name;
    }

    pub(crate) fn args_mut(&mut self) -> &mut Vec<Arg> {
        &mut self.args
    }
}

impl fmt::Display for ActionInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

impl FromStr for ActionInstance {
    type Err = ParseError;

    /// Parses a single `verb(args)` call.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parsed = parse_generic(s)?;
        match parsed.sequence.actions() {
            [only] if parsed.skipped.is_empty() => Ok(only.clone()),
            _ => Err(ParseError::Malformed {
                line: 1,
                message: format!("expected exactly one action call, got `{s}`"),
            }),
        }
    }
}

/// An ordered list of actions. Duplicates are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionSequence {
    actions: Vec<ActionInstance>,
}

impl ActionSequence {
    pub fn new(actions: Vec<ActionInstance>) -> Self {
        ActionSequence { actions }
    }

    pub fn actions(&self) -> &[ActionInstance] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ActionInstance> {
        self.actions.iter()
    }

    pub fn push(&mut self, action: ActionInstance) {
        self.actions.push(action);
    }

    pub fn into_inner(self) -> Vec<ActionInstance> {
        self.actions
    }

    /// Reads a sequence file: bracketed script style when every non-blank
    /// line starts with `[`, one `verb(args)` call per line otherwise.
    pub fn parse_file_text(text: &str) -> Result<ActionSequence, ParseError> {
        let bracketed = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .all(|l| l.starts_with('['));
        if bracketed {
            let body: Vec<&str> = text
                .lines()
                .filter(|l| !l.trim_start().starts_with('#'))
                .collect();
            parse_vh(&body.join("\n"))
        } else {
            match parse_generic(text) {
                Ok(p) => Ok(p.sequence),
                Err(ParseError::EmptyParse) if text.trim().is_empty() => Ok(ActionSequence::default()),
                Err(e) => Err(e),
            }
        }
    }
}

impl fmt::Display for ActionSequence {
    /// One action per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.actions {
            writeln!(f, "{a}")?;
        }
        Ok(())
    }
}

impl FromIterator<ActionInstance> for ActionSequence {
    fn from_iter<T: IntoIterator<Item = ActionInstance>>(iter: T) -> Self {
        ActionSequence::new(iter.into_iter().collect())
    }
}

impl AsRef<[ActionInstance]> for ActionSequence {
    fn as_ref(&self) -> &[ActionInstance] {
        &self.actions
    }
}

impl<'a> IntoIterator for &'a ActionSequence {
    type Item = &'a ActionInstance;
    type IntoIter = std::slice::Iter<'a, ActionInstance>;

    fn into_iter(self) -> Self::IntoIter {
        self.actions.iter()
    }
}
