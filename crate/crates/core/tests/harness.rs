use std::path::{Path, PathBuf};

use cas_core::harness::{
    load_dataset, model_summary, summarize_steps, BackendMode, Config, Evaluator, HarnessError,
    TaskRecord,
};
use cas_core::llm::{FixtureStore, ReplayBackend};
use cas_core::metrics::Measure;
use cas_core::pipeline::{ModelSpec, Prompts};

fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn setup() -> (Config, Vec<TaskRecord>) {
    let config = Config::load(&data().join("models.toml")).unwrap();
    let records = load_dataset(&data().join("dataset"), &config.pipeline().unwrap().aliases).unwrap();
    (config, records)
}

#[test]
fn summarizes_the_phone_call_steps() {
    let backend = ReplayBackend::new(FixtureStore::new(data().join("fixtures/paper")));
    let steps = [
        Some("look for him".to_string()),
        None,
        Some("inform him about the call".to_string()),
        Some("place the phone on the table and ask him to talk".to_string()),
    ];
    let text = summarize_steps(
        &backend,
        &ModelSpec::new("sonnet-3.5-v2"),
        &Prompts::bundled(),
        "You are home and the phone rings. The person on the other end of the line asks to speak to your roommate.",
        &steps,
    )
    .unwrap();
    assert_eq!(text, "Find your roommate and tell them they have a phone call.");
    let empty = summarize_steps(&backend, &ModelSpec::new("m"), &Prompts::bundled(), "t", &[None]);
    assert!(matches!(empty, Err(HarnessError::Precondition(_))));
}

#[test]
fn summary_fixtures_reproduce_model_summaries() {
    let (config, records) = setup();
    let model = config.summary_model.as_ref().unwrap();
    let backend = config.backend(model, BackendMode::Replay).unwrap();
    let prompts = config.pipeline().unwrap().prompts;
    for r in &records {
        let text = summarize_steps(backend.as_ref(), &model.spec, &prompts, &r.task, &r.step_nl).unwrap();
        assert_eq!(Some(text.as_str()), model_summary(r), "{}", r.id);
    }
}

#[test]
fn full_evaluation_shape_and_invariants() {
    let (config, records) = setup();
    let report = Evaluator::from_config(&config, BackendMode::Replay, &records)
        .unwrap()
        .evaluate(&records)
        .unwrap();
    assert_eq!(report.cells.len(), 40 * 4 * 3);
    assert_eq!(report.aggregates.len(), 40 * 4);
    assert_eq!(report.synthetic_records, 40);
    assert_eq!(report.failed_cells(), 1);

    // ordered by (record, model, summary)
    let order: Vec<(usize, usize, usize)> = report
        .cells
        .iter()
        .map(|c| {
            (
                report.records.iter().position(|r| *r == c.record).unwrap(),
                report.models.iter().position(|m| *m == c.model).unwrap(),
                c.summary,
            )
        })
        .collect();
    assert!(order.windows(2).all(|w| w[0] < w[1]));

    for agg in &report.aggregates {
        let cells: Vec<_> = report
            .cells
            .iter()
            .filter(|c| c.record == agg.record && c.model == agg.model)
            .collect();
        assert_eq!(cells.len(), 3);
        match &agg.means {
            None => assert!(cells.iter().any(|c| c.outcome.is_err())),
            Some(means) => {
                let values: Vec<_> = cells.iter().map(|c| c.outcome.as_ref().unwrap().values).collect();
                let mean = values.iter().map(|v| v.final_state_similarity).sum::<f64>() / 3.0;
                assert!((means.final_state_similarity - mean).abs() < 1e-12);
                let lev = values.iter().map(|v| v.levenshtein as f64).sum::<f64>() / 3.0;
                assert!((means.levenshtein - lev).abs() < 1e-12);
            }
        }
    }

    let stats = report.stats.as_ref().unwrap();
    assert_eq!(stats.len(), 4);
    for s in stats {
        let friedman = s.friedman.as_ref().unwrap();
        assert_eq!(friedman.df, Some(3));
        // the block with the failed cell is dropped
        assert_eq!(s.blocks, 39);
        assert_eq!(s.pairwise.len(), 6);
        assert_eq!(s.comparisons, 6);
        assert_eq!(s.one_sample.is_empty(), s.measure != Measure::FinalStateSimilarity);
    }
}

#[test]
fn single_model_has_no_statistics() {
    let (mut config, records) = setup();
    config.models.truncate(1);
    let report = Evaluator::from_config(&config, BackendMode::Replay, &records[..5])
        .unwrap()
        .evaluate(&records[..5])
        .unwrap();
    assert!(report.stats.is_none());
    assert_eq!(report.cells.len(), 15);
    assert!(report.summary_text().contains("mean (median)"));
}

#[test]
fn deleting_a_record_only_touches_its_rows() {
    let (config, records) = setup();
    let evaluator = Evaluator::from_config(&config, BackendMode::Replay, &records).unwrap();
    let full = evaluator.evaluate(&records).unwrap();
    let fewer: Vec<TaskRecord> = records.iter().filter(|r| r.id != "laundry_01").cloned().collect();
    let partial = evaluator.evaluate(&fewer).unwrap();
    let kept = |rows: &[cas_core::harness::CellRow]| -> Vec<_> {
        rows.iter().filter(|c| c.record != "laundry_01").cloned().collect()
    };
    assert_eq!(kept(&full.cells), partial.cells);
    assert_eq!(
        full.aggregates.iter().filter(|a| a.record != "laundry_01").cloned().collect::<Vec<_>>(),
        partial.aggregates
    );
    assert_ne!(full.stats, partial.stats);
}

#[test]
fn missing_fixtures_fail_cells_unless_strict() {
    let (mut config, records) = setup();
    let empty = tempfile::tempdir().unwrap();
    config.models[1].fixtures = empty.path().to_path_buf();
    let some = &records[..3];
    let evaluator = Evaluator::from_config(&config, BackendMode::Replay, some).unwrap();
    let report = evaluator.evaluate(some).unwrap();
    let failed: Vec<_> = report.cells.iter().filter(|c| c.outcome.is_err()).collect();
    assert_eq!(failed.len(), 9);
    assert!(failed.iter().all(|c| c.model == config.models[1].id));
    assert!(failed.iter().all(|c| c.outcome.as_ref().unwrap_err().fixture_miss));
    // no complete blocks remain, so the tests report errors instead of values
    assert!(report.stats.as_ref().unwrap().iter().all(|s| s.friedman.is_err()));

    let strict = Evaluator::from_config(&config, BackendMode::Replay, some)
        .unwrap()
        .with_strict(true)
        .evaluate(some);
    assert!(matches!(strict, Err(HarnessError::FixtureMiss(_))));
}
