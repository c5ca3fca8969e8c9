use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use cas_core::actionseq::AliasTable;
use cas_core::domain::ProblemDefinition;
use cas_core::harness::{load_dataset, SummarySource};
use cas_core::simulator::{self, Mode, Outcome};

fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

#[test]
fn bundled_dataset_is_synthetic_and_grounds() {
    let records = load_dataset(&data().join("dataset"), &AliasTable::bundled()).unwrap();
    assert_eq!(records.len(), 40);
    let home = ProblemDefinition::load(&data().join("problems/home.problem")).unwrap();
    let categories: BTreeSet<_> = records.iter().map(|r| r.category.as_str()).collect();
    assert!(categories.len() >= 18, "{categories:?}");
    let mut failures = Vec::new();
    for r in &records {
        assert!(r.synthetic, "{}", r.id);
        assert_eq!(r.problem, "home");
        r.check_against(&home).unwrap();
        assert_eq!(r.summaries.iter().filter(|s| s.source == SummarySource::Model).count(), 1);
        let run = simulator::execute(&home, &r.reference, Mode::StrictSkip);
        let skipped: Vec<_> = run
            .trace
            .iter()
            .filter(|e| matches!(e.outcome, Outcome::Skipped(_)))
            .map(|e| e.to_string())
            .collect();
        if !skipped.is_empty() {
            failures.push(format!("{}: {skipped:?}", r.id));
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}
