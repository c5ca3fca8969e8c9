use std::fmt;

use serde::Serialize;

use crate::actionseq::{ActionInstance, ActionSequence, AliasTable, Arg};
use crate::domain::ProblemDefinition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalReason {
    /// The canonical name is not an action of the problem.
    Unmapped,
    /// An entity argument is not declared by the problem.
    NonexistentEntity,
    /// Equal to the previous surviving action.
    ConsecutiveDuplicate,
    /// A do-nothing action such as `wait`.
    Extraneous,
}

impl RemovalReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RemovalReason::Unmapped => "unmapped",
            RemovalReason::NonexistentEntity => "nonexistent_entity",
            RemovalReason::ConsecutiveDuplicate => "consecutive_duplicate",
            RemovalReason::Extraneous => "extraneous",
        }
    }
}

impl fmt::Display for RemovalReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Removal {
    /// Position in the raw sequence.
    pub index: usize,
    /// The action after canonicalization.
    pub action: ActionInstance,
    pub reason: RemovalReason,
}

impl fmt::Display for Removal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} {} ({})", self.index + 1, self.action, self.reason)
    }
}

/// Canonicalizes each action, then drops it when, checked in this order,
/// it is (a) not a catalog action, (b) referring to an undeclared entity,
/// (c) equal to the previous kept action, or (d) extraneous.
///
/// Quoted-text arguments are exempt from (b). Names in the alias table's
/// extraneous set are reported under (d) rather than (a).
pub fn post_process(
    raw: &ActionSequence,
    problem: &ProblemDefinition,
    aliases: &AliasTable,
) -> (ActionSequence, Vec<Removal>) {
    let mut kept: Vec<ActionInstance> = Vec::with_capacity(raw.len());
    let mut log = Vec::new();
    for (index, action) in raw.iter().enumerate() {
        let (action, _) = aliases.canonicalize(action);
        let extraneous = aliases.is_extraneous(action.name());
        let reason = if !extraneous && problem.schema(action.name()).is_none() {
            Some(RemovalReason::Unmapped)
        } else if action.args().iter().any(|a| match a {
            Arg::Entity(e) => !problem.has_entity(e),
            Arg::Text(_) => false,
        }) {
            Some(RemovalReason::NonexistentEntity)
        } else if kept.last() == Some(&action) {
            Some(RemovalReason::ConsecutiveDuplicate)
        } else if extraneous {
            Some(RemovalReason::Extraneous)
        } else {
            None
        };
        match reason {
            Some(reason) => log.push(Removal {
                index,
                action,
                reason,
            }),
            None => kept.push(action),
        }
    }
    (ActionSequence::new(kept), log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::load_problem;

    const PROBLEM: &str = "\
[entities]
kitchen: location
roommate: person at kitchen
phone: object at kitchen

[schemas]
move_to(?target: any)
grab(?obj: object)
say(?utterance: text)
look_at(?target: any)

[initial]
robot_at(kitchen)
";

    fn run(items: &[&str]) -> (Vec<String>, Vec<(usize, RemovalReason)>) {
        let p = load_problem(PROBLEM).unwrap();
        let raw: ActionSequence = items.iter().map(|s| s.parse::<ActionInstance>().unwrap()).collect();
        let (seq, log) = post_process(&raw, &p, &AliasTable::bundled());
        (
            seq.iter().map(ToString::to_string).collect(),
            log.iter().map(|r| (r.index, r.reason)).collect(),
        )
    }

    #[test]
    fn extraneous_then_duplicate() {
        let (seq, log) = run(&["walk(roommate)", "wait()", "walk(roommate)"]);
        assert_eq!(seq, ["move_to(roommate)"]);
        assert_eq!(
            log,
            [(1, RemovalReason::Extraneous), (2, RemovalReason::ConsecutiveDuplicate)]
        );
    }

    #[test]
    fn nonexistent_entity_and_unmapped() {
        let (seq, log) = run(&["grab(unicorn)"]);
        assert!(seq.is_empty());
        assert_eq!(log, [(0, RemovalReason::NonexistentEntity)]);
        let (seq, log) = run(&["dance(phone)", "wait(unicorn)"]);
        assert!(seq.is_empty());
        assert_eq!(log, [(0, RemovalReason::Unmapped), (1, RemovalReason::NonexistentEntity)]);
        assert_eq!(run(&[]), (vec![], vec![]));
    }

    #[test]
    fn text_arguments_are_exempt_and_non_adjacent_repeats_survive() {
        let (seq, log) = run(&[
            "talk(\"I found my phone!\")",
            "turnto(roommate)",
            "lookat(roommate)",
            "grab(phone)",
            "look_at(roommate)",
        ]);
        assert_eq!(
            seq,
            ["say(\"I found my phone!\")", "look_at(roommate)", "grab(phone)", "look_at(roommate)"]
        );
        assert_eq!(log, [(2, RemovalReason::ConsecutiveDuplicate)]);
    }
}
