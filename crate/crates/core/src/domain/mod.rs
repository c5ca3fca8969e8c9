//! The symbolic household domain: entities, ground fluents, world states and
//! STRIPS-style action schemas.

mod entity;
mod fluent;
mod problem;
mod schema;

use thiserror::Error;

pub use entity::{normalize_token, Category, EntityId};
pub use fluent::{Fluent, WorldState, ROBOT_AT};
pub use problem::{load_problem, ProblemDefinition, AT, ROOM};
pub use schema::{
    applicable, apply, ActionSchema, Binding, FluentTemplate, GroundAction, Param, Role, Step, Term,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("`{0}` is not a valid identifier")]
    InvalidName(String),
    #[error("fluent `{predicate}` has arity {arity}, expected 1 to 3")]
    FluentArity { predicate: String, arity: usize },
    #[error("world state must hold exactly one robot_at fluent, found {0}")]
    RobotPlacement(usize),
    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid problem: {0}")]
    Validation(String),
    #[error("`{action}` takes {expected} argument(s), got {got}")]
    ArityMismatch {
        action: String,
        expected: usize,
        got: usize,
    },
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("`{action}` parameter ?{param} expects {expected}, got {got}")]
    RoleMismatch {
        action: String,
        param: String,
        expected: Role,
        got: String,
    },
    #[error("`{0}` is not applicable in this state")]
    NotApplicable(String),
    #[error("{0}")]
    Io(String),
}
