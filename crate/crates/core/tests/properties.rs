//! Randomized invariants over the bundled home problem.

use std::path::Path;
use std::sync::OnceLock;

use proptest::prelude::*;

use cas_core::actionseq::{ActionInstance, ActionSequence, AliasTable, Arg};
use cas_core::domain::{ProblemDefinition, ROBOT_AT};
use cas_core::metrics::{self, final_state_similarity, length_discrepancy, levenshtein, plan_difference};
use cas_core::pipeline::{post_process, RemovalReason};
use cas_core::simulator::{self, Mode, Outcome};

fn home() -> &'static ProblemDefinition {
    static HOME: OnceLock<ProblemDefinition> = OnceLock::new();
    HOME.get_or_init(|| {
        ProblemDefinition::load(
            &Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/problems/home.problem"),
        )
        .unwrap()
    })
}

const NAMES: &[&str] = &[
    "move_to", "find", "look_at", "grab", "put_down", "put_on", "turn_on", "turn_off", "open",
    "close", "give", "say", "Walk", "PutBack", "SwitchOn", "TurnTo", "wait", "noop", "fly",
];
const ENTITIES: &[&str] = &[
    "kitchen", "living_room", "bedroom", "entrance", "garage", "table", "cup", "phone", "mail",
    "mailbox", "roommate", "tv", "refrigerator", "desk", "unicorn",
];

fn action() -> impl Strategy<Value = ActionInstance> {
    let arg = prop_oneof![
        9 => prop::sample::select(ENTITIES).prop_map(|e| Arg::entity(e).unwrap()),
        1 => "[a-z ]{0,8}".prop_map(Arg::Text),
    ];
    (prop::sample::select(NAMES), prop::collection::vec(arg, 0..3))
        .prop_map(|(n, args)| ActionInstance::new(n, args).unwrap())
}

fn sequence(max: usize) -> impl Strategy<Value = ActionSequence> {
    prop::collection::vec(action(), 0..max).prop_map(ActionSequence::new)
}

/// In-catalog sequences: grounded names, declared entities.
fn catalog_sequence(max: usize) -> impl Strategy<Value = ActionSequence> {
    sequence(max).prop_map(|s| post_process(&s, home(), &AliasTable::bundled()).0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn post_process_accounts_for_every_action(raw in sequence(14)) {
        let aliases = AliasTable::bundled();
        let (kept, removals) = post_process(&raw, home(), &aliases);
        prop_assert_eq!(kept.len() + removals.len(), raw.len());
        // removal indices are increasing and point at the raw input
        prop_assert!(removals.windows(2).all(|w| w[0].index < w[1].index));
        let mut survivors = Vec::new();
        for (i, a) in raw.iter().enumerate() {
            if !removals.iter().any(|r| r.index == i) {
                survivors.push(aliases.canonicalize(a).0);
            }
        }
        prop_assert_eq!(kept.actions(), &survivors[..]);
        for a in kept.iter() {
            prop_assert!(home().schema(a.name()).is_some(), "{a}");
            prop_assert!(!aliases.is_extraneous(a.name()));
        }
        prop_assert!(kept.actions().windows(2).all(|w| w[0] != w[1]));
        for r in &removals {
            if r.reason == RemovalReason::Extraneous {
                prop_assert!(aliases.is_extraneous(r.action.name()));
            }
        }
        let (again, none) = post_process(&kept, home(), &aliases);
        prop_assert_eq!(again, kept);
        prop_assert!(none.is_empty());
    }

    #[test]
    fn simulation_keeps_one_robot_and_accounts_for_actions(seq in sequence(12), assisted in any::<bool>()) {
        let mode = if assisted { Mode::Assisted } else { Mode::StrictSkip };
        let run = simulator::execute(home(), &seq, mode);
        let robots = run.final_state.iter().filter(|f| f.predicate() == ROBOT_AT).count();
        prop_assert_eq!(robots, 1);
        let explicit = run.trace.iter().filter(|e| e.is_explicit()).count();
        prop_assert_eq!(explicit, seq.len());
        if !assisted {
            prop_assert!(run.trace.iter().all(|e| e.outcome != Outcome::Implicit));
        }
        // every implicit step is a move followed by the action it enabled
        for (i, e) in run.trace.iter().enumerate() {
            if e.outcome == Outcome::Implicit {
                prop_assert_eq!(e.action.name(), simulator::MOVE_ACTION);
                prop_assert_eq!(&run.trace[i + 1].outcome, &Outcome::Executed);
            }
        }
    }

    #[test]
    fn replaying_the_executed_actions_is_skip_free(seq in sequence(12), assisted in any::<bool>()) {
        let mode = if assisted { Mode::Assisted } else { Mode::StrictSkip };
        let run = simulator::execute(home(), &seq, mode);
        let executed = ActionSequence::new(run.executed().map(|e| e.action.clone()).collect());
        let replay = simulator::execute(home(), &executed, Mode::StrictSkip);
        prop_assert!(replay.trace.iter().all(|e| e.outcome == Outcome::Executed));
        prop_assert_eq!(replay.final_state, run.final_state);
    }

    #[test]
    fn metric_relations(a in catalog_sequence(10), b in catalog_sequence(10)) {
        let (x, y) = (a.actions(), b.actions());
        let len = length_discrepancy(x, y);
        prop_assert!(plan_difference(x, y) >= len);
        prop_assert!(levenshtein(x, y) >= len);
        prop_assert!(levenshtein(x, y) <= x.len().max(y.len()));
        prop_assert!(plan_difference(x, y) <= 2 * levenshtein(x, y));

        let initial = home().initial();
        let fa = simulator::execute(home(), &a, Mode::Assisted).final_state;
        let fb = simulator::execute(home(), &b, Mode::Assisted).final_state;
        let s: f64 = final_state_similarity(initial, &fa, &fb);
        prop_assert!(s <= 1.0);
        prop_assert_eq!(final_state_similarity::<f64>(initial, &fa, &fa), 1.0);
        let v: cas_core::MetricValues = metrics::compare(x, y, initial, &fa, &fb);
        prop_assert_eq!(v.final_state_similarity, s);
        prop_assert_eq!(v.levenshtein, levenshtein(y, x));
    }
}
