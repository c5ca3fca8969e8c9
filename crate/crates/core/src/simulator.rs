//! Lenient execution of action sequences over a problem's symbolic world.
//!
//! Actions that cannot be grounded (unknown name, wrong arity, undeclared
//! entity, role mismatch such as `grab(car)`) or whose preconditions fail are
//! skipped and recorded in the trace; execution never errors.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::actionseq::{ActionInstance, ActionSequence, Arg};
use crate::domain::{Fluent, ProblemDefinition, Step, WorldState, ROBOT_AT};

/// Name of the navigation action inserted by [`Mode::Assisted`].
pub const MOVE_ACTION: &str = "move_to";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Apply applicable actions, skip the rest.
    StrictSkip,
    /// Like `StrictSkip`, but first walk the robot to the required location
    /// when that is the only thing missing.
    #[default]
    Assisted,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::StrictSkip => "strict_skip",
            Mode::Assisted => "assisted",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "strict_skip" | "strict" => Ok(Mode::StrictSkip),
            "assisted" => Ok(Mode::Assisted),
            other => Err(format!("unknown mode `{other}` (expected strict_skip or assisted)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SkipReason {
    /// The action could not be bound to a schema of the problem.
    Ungroundable { detail: String },
    /// Grounded, but its preconditions did not hold.
    NotApplicable,
}

impl SkipReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            SkipReason::Ungroundable { .. } => "ungroundable",
            SkipReason::NotApplicable => "not_applicable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Executed,
    /// A navigation step inserted by assisted mode.
    Implicit,
    Skipped(SkipReason),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub action: ActionInstance,
    pub outcome: Outcome,
}

impl TraceEntry {
    pub fn is_explicit(&self) -> bool {
        self.outcome != Outcome::Implicit
    }
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.outcome {
            Outcome::Executed => write!(f, "executed explicit {}", self.action),
            Outcome::Implicit => write!(f, "executed implicit {}", self.action),
            Outcome::Skipped(r) => write!(f, "skipped {} {}", r.as_str(), self.action),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Execution {
    pub final_state: WorldState,
    pub trace: Vec<TraceEntry>,
}

impl Execution {
    /// One trace line per entry, newline-terminated.
    pub fn trace_log(&self) -> String {
        self.trace.iter().map(|e| format!("{e}\n")).collect()
    }

    pub fn executed(&self) -> impl Iterator<Item = &TraceEntry> {
        self.trace.iter().filter(|e| !matches!(e.outcome, Outcome::Skipped(_)))
    }
}

/// Runs `seq` from the problem's initial state.
pub fn execute(problem: &ProblemDefinition, seq: &ActionSequence, mode: Mode) -> Execution {
    execute_from(problem, problem.initial().clone(), seq, mode)
}

/// Runs `seq` from an arbitrary state of the problem.
pub fn execute_from(
    problem: &ProblemDefinition,
    mut state: WorldState,
    seq: &ActionSequence,
    mode: Mode,
) -> Execution {
    let mut trace = Vec::with_capacity(seq.len());
    for action in seq {
        state = step(problem, &state, action, mode, &mut trace);
    }
    Execution {
        final_state: state,
        trace,
    }
}

/// Executes a single action, appending its trace entries, and returns the
/// successor state.
pub fn step(
    problem: &ProblemDefinition,
    state: &WorldState,
    action: &ActionInstance,
    mode: Mode,
    trace: &mut Vec<TraceEntry>,
) -> WorldState {
    let skip = |trace: &mut Vec<TraceEntry>, reason| {
        trace.push(TraceEntry {
            action: action.clone(),
            outcome: Outcome::Skipped(reason),
        });
        state.clone()
    };
    let ground = match problem.ground_instance(action) {
        Ok(g) => g,
        Err(e) => return skip(trace, SkipReason::Ungroundable { detail: e.to_string() }),
    };
    let executed = |trace: &mut Vec<TraceEntry>, step: &Step, from: &WorldState| {
        match step.apply_unchecked(from) {
            Ok(next) => {
                trace.push(TraceEntry {
                    action: ground.instance().clone(),
                    outcome: Outcome::Executed,
                });
                Some(next)
            }
            Err(_) => None,
        }
    };

    let Some(resolved) = ground.resolve(state) else {
        return skip(trace, SkipReason::NotApplicable);
    };
    if resolved.applicable(state) {
        return executed(trace, &resolved, state).unwrap_or_else(|| skip(trace, SkipReason::NotApplicable));
    }
    if mode == Mode::Assisted {
        if let Some((move_action, moved)) = navigate(problem, state, &resolved) {
            if let Some(step) = ground.resolve(&moved).filter(|s| s.applicable(&moved)) {
                let mut local = vec![TraceEntry {
                    action: move_action,
                    outcome: Outcome::Implicit,
                }];
                if let Some(next) = executed(&mut local, &step, &moved) {
                    trace.extend(local);
                    return next;
                }
            }
        }
    }
    skip(trace, SkipReason::NotApplicable)
}

/// If the only unmet preconditions are a single `robot_at(x)`, moves there.
fn navigate(
    problem: &ProblemDefinition,
    state: &WorldState,
    step: &Step,
) -> Option<(ActionInstance, WorldState)> {
    let missing: Vec<&Fluent> = step.missing(state).collect();
    let [target] = missing.as_slice() else {
        return None;
    };
    if target.predicate() != ROBOT_AT {
        return None;
    }
    let schema = problem.schema(MOVE_ACTION)?;
    let args = [Arg::Entity(target.args()[0].clone())];
    let ground = problem.ground(schema, &args).ok()?;
    let mv = ground.resolve(state).filter(|s| s.applicable(state))?;
    let moved = mv.apply_unchecked(state).ok()?;
    moved
        .contains(target)
        .then(|| (ground.instance().clone(), moved))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::load_problem;

    const PROBLEM: &str = "\
[entities]
hall: location
kitchen: location
car: location
phone: object at kitchen
roommate: person at kitchen

[schemas]
move_to(?x: any)
  context room(?x, ?l), robot_at(?f)
  add robot_at(?l)
  del robot_at(?f)
grab(?o: object)
  context at(?o, ?p), room(?o, ?l)
  pre robot_at(?l)
  add holding(?o)
  del at(?o, ?p), room(?o, ?l)
say(?t: text)

[initial]
robot_at(hall)
";

    fn setup() -> ProblemDefinition {
        load_problem(PROBLEM).unwrap()
    }

    fn seq(items: &[&str]) -> ActionSequence {
        items.iter().map(|s| s.parse::<ActionInstance>().unwrap()).collect()
    }

    #[test]
    fn empty_sequence_is_identity() {
        let p = setup();
        let run = execute(&p, &ActionSequence::default(), Mode::Assisted);
        assert_eq!(&run.final_state, p.initial());
        assert!(run.trace.is_empty());
    }

    #[test]
    fn strict_skips_out_of_reach_grab() {
        let p = setup();
        let run = execute(&p, &seq(&["grab(phone)"]), Mode::StrictSkip);
        assert_eq!(&run.final_state, p.initial());
        assert_eq!(run.trace_log(), "skipped not_applicable grab(phone)\n");
    }

    #[test]
    fn assisted_inserts_navigation() {
        let p = setup();
        let run = execute(&p, &seq(&["grab(phone)"]), Mode::Assisted);
        assert_eq!(
            run.trace_log(),
            "executed implicit move_to(kitchen)\nexecuted explicit grab(phone)\n"
        );
        assert!(run.final_state.contains(&"holding(phone)".parse().unwrap()));
        assert!(!run.final_state.contains(&"at(phone, kitchen)".parse().unwrap()));
        assert_eq!(run.final_state.robot_location().as_str(), "kitchen");
    }

    #[test]
    fn role_mismatch_is_ungroundable() {
        let p = setup();
        for mode in [Mode::StrictSkip, Mode::Assisted] {
            let run = execute(&p, &seq(&["grab(car)"]), mode);
            assert_eq!(run.trace_log(), "skipped ungroundable grab(car)\n");
            assert_eq!(&run.final_state, p.initial());
        }
        let run = execute(&p, &seq(&["fly(phone)", "grab(unicorn)", "grab(phone, car)"]), Mode::Assisted);
        assert!(run
            .trace
            .iter()
            .all(|e| matches!(e.outcome, Outcome::Skipped(SkipReason::Ungroundable { .. }))));
    }

    #[test]
    fn move_to_person_and_text_actions() {
        let p = setup();
        let run = execute(&p, &seq(&["walk(roommate)", "move_to(roommate)", "say(\"hi\")"]), Mode::StrictSkip);
        let lines = run.trace_log();
        assert_eq!(
            lines,
            "skipped ungroundable walk(roommate)\nexecuted explicit move_to(roommate)\nexecuted explicit say(\"hi\")\n"
        );
        // already in the kitchen: moving there again changes nothing and is skipped
        let again = execute_from(&p, run.final_state.clone(), &seq(&["move_to(kitchen)"]), Mode::Assisted);
        assert_eq!(again.trace_log(), "skipped not_applicable move_to(kitchen)\n");
    }

    #[test]
    fn grab_twice_second_skipped() {
        let p = setup();
        let run = execute(&p, &seq(&["grab(phone)", "grab(phone)"]), Mode::Assisted);
        assert_eq!(run.trace.len(), 3);
        assert_eq!(
            run.trace[2].outcome,
            Outcome::Skipped(SkipReason::NotApplicable)
        );
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("strict_skip".parse::<Mode>().unwrap(), Mode::StrictSkip);
        assert_eq!("strict-skip".parse::<Mode>().unwrap(), Mode::StrictSkip);
        assert_eq!("Assisted".parse::<Mode>().unwrap(), Mode::Assisted);
        assert!("lazy".parse::<Mode>().is_err());
    }
}
