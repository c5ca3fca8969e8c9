use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::config::{BackendMode, Config, ModelConfig};
use super::dataset::{SummarySource, TaskRecord};
use super::report::{
    AggregateRow, CellFailure, CellMetrics, CellRow, MeasureStats, MetricsReport, OneSampleRow,
    PairwiseRow,
};
use super::HarnessError;
use crate::domain::ProblemDefinition;
use crate::llm::ChatBackend;
use crate::metrics::{self, Measure};
use crate::pipeline::{ModelRef, Pipeline};
use crate::simulator::{self, Execution, Mode, Outcome};
use crate::stats::{self, BlockedSample};

/// A configured model with the backend that serves it.
#[derive(Clone)]
pub struct EvalModel {
    pub config: ModelConfig,
    pub backend: Arc<dyn ChatBackend>,
}

/// Runs every (record, model, summary) cell and assembles the report.
pub struct Evaluator {
    pipeline: Pipeline,
    problems: BTreeMap<String, ProblemDefinition>,
    entity: EvalModel,
    models: Vec<EvalModel>,
    mode: Mode,
    parallelism: usize,
    strict: bool,
}

impl Evaluator {
    pub fn new(
        pipeline: Pipeline,
        problems: BTreeMap<String, ProblemDefinition>,
        entity: EvalModel,
        models: Vec<EvalModel>,
    ) -> Self {
        Evaluator {
            pipeline,
            problems,
            entity,
            models,
            mode: Mode::Assisted,
            parallelism: 1,
            strict: false,
        }
    }

    /// Builds backends for every configured model and loads each problem
    /// the records refer to.
    pub fn from_config(
        config: &Config,
        backend_mode: BackendMode,
        records: &[TaskRecord],
    ) -> Result<Self, HarnessError> {
        let mut problems = BTreeMap::new();
        for r in records {
            if !problems.contains_key(&r.problem) {
                let path = config.problem_path(&r.problem);
                let problem = ProblemDefinition::load(&path).map_err(|e| HarnessError::Problem {
                    name: r.problem.clone(),
                    message: e.to_string(),
                })?;
                problems.insert(r.problem.clone(), problem);
            }
        }
        let build = |m: &ModelConfig| -> Result<EvalModel, HarnessError> {
            Ok(EvalModel {
                config: m.clone(),
                backend: config.backend(m, backend_mode)?,
            })
        };
        let entity = build(&config.entity_model)?;
        let models = config.models.iter().map(build).collect::<Result<Vec<_>, _>>()?;
        Ok(Evaluator::new(config.pipeline()?, problems, entity, models)
            .with_mode(config.mode)
            .with_parallelism(config.parallelism))
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_parallelism(mut self, parallelism: usize) -> Self {
        self.parallelism = parallelism.max(1);
        self
    }

    /// In strict mode a missing fixture aborts the evaluation.
    pub fn with_strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn models(&self) -> impl Iterator<Item = &str> {
        self.models.iter().map(|m| m.config.id.as_str())
    }

    pub fn evaluate(&self, records: &[TaskRecord]) -> Result<MetricsReport, HarnessError> {
        let mut references = Vec::with_capacity(records.len());
        for r in records {
            let problem = self.problems.get(&r.problem).ok_or_else(|| HarnessError::Problem {
                name: r.problem.clone(),
                message: "not loaded".into(),
            })?;
            r.check_against(problem)?;
            references.push(simulator::execute(problem, &r.reference, self.mode));
        }

        let jobs: Vec<(usize, usize, usize)> = (0..records.len())
            .flat_map(|r| {
                (0..self.models.len()).flat_map(move |m| {
                    (0..records[r].summaries.len()).map(move |s| (r, m, s))
                })
            })
            .collect();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.parallelism)
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let cells: Vec<CellRow> = pool.install(|| {
            jobs.par_iter()
                .map(|&(r, m, s)| self.cell(&records[r], &references[r], &self.models[m], s))
                .collect()
        });

        if self.strict {
            if let Some(miss) = cells
                .iter()
                .find_map(|c| c.outcome.as_ref().err().filter(|f| f.fixture_miss))
            {
                return Err(HarnessError::FixtureMiss(miss.message.clone()));
            }
        }

        let model_ids: Vec<String> = self.models.iter().map(|m| m.config.id.clone()).collect();
        let aggregates = aggregate_cells(records, &model_ids, &cells);
        let stats = (model_ids.len() >= 2).then(|| run_stats(records, &model_ids, &aggregates));
        Ok(MetricsReport {
            records: records.iter().map(|r| r.id.clone()).collect(),
            synthetic_records: records.iter().filter(|r| r.synthetic).count(),
            models: model_ids,
            mode: self.mode,
            cells,
            aggregates,
            stats,
        })
    }

    fn cell(
        &self,
        record: &TaskRecord,
        reference: &Execution,
        model: &EvalModel,
        summary: usize,
    ) -> CellRow {
        let problem = &self.problems[&record.problem];
        let command = record.summaries[summary].text.trim();
        let result = self.pipeline.run(
            ModelRef::new(self.entity.backend.as_ref(), &self.entity.config.spec),
            ModelRef::new(model.backend.as_ref(), &model.config.spec),
            problem,
            command,
        );
        let outcome = match result {
            Ok(run) => {
                let candidate = simulator::execute(problem, &run.final_sequence, self.mode);
                let values = metrics::compare(
                    record.reference.actions(),
                    run.final_sequence.actions(),
                    problem.initial(),
                    &reference.final_state,
                    &candidate.final_state,
                );
                Ok(CellMetrics {
                    values,
                    candidate_length: run.final_sequence.len(),
                    reference_length: record.reference.len(),
                    removed: run.removal_log.len(),
                    skipped: candidate
                        .trace
                        .iter()
                        .filter(|e| matches!(e.outcome, Outcome::Skipped(_)))
                        .count(),
                    sequence: run.final_sequence,
                })
            }
            Err(e) => Err(CellFailure {
                stage: e.stage(),
                fixture_miss: e.is_fixture_miss(),
                message: e.to_string(),
            }),
        };
        CellRow {
            record: record.id.clone(),
            category: record.category.clone(),
            model: model.config.id.clone(),
            summary,
            source: record.summaries[summary].source,
            outcome,
        }
    }
}

fn aggregate_cells(records: &[TaskRecord], models: &[String], cells: &[CellRow]) -> Vec<AggregateRow> {
    let mut by_key: BTreeMap<(&str, &str), Vec<&CellRow>> = BTreeMap::new();
    for c in cells {
        by_key.entry((&c.record, &c.model)).or_default().push(c);
    }
    let mut rows = Vec::with_capacity(records.len() * models.len());
    for r in records {
        for m in models {
            let group = by_key.get(&(r.id.as_str(), m.as_str())).cloned().unwrap_or_default();
            let values: Option<Vec<_>> = group
                .iter()
                .map(|c| c.outcome.as_ref().ok().map(|o| o.values))
                .collect();
            let means = values
                .filter(|v| v.len() == r.summaries.len())
                .and_then(|v| metrics::aggregate(&v).ok());
            rows.push(AggregateRow {
                record: r.id.clone(),
                model: m.clone(),
                means,
            });
        }
    }
    rows
}

fn run_stats(records: &[TaskRecord], models: &[String], aggregates: &[AggregateRow]) -> Vec<MeasureStats> {
    let k = models.len();
    // Complete blocks only: a record enters when every model has a mean.
    let blocks: Vec<Vec<crate::MetricMeans>> = records
        .iter()
        .enumerate()
        .filter_map(|(i, _)| {
            aggregates[i * k..(i + 1) * k]
                .iter()
                .map(|a| a.means)
                .collect::<Option<Vec<_>>>()
        })
        .collect();
    let comparisons = k * (k - 1) / 2;
    Measure::ALL
        .iter()
        .map(|&measure| {
            let rows: Vec<Vec<f64>> = blocks
                .iter()
                .map(|b| b.iter().map(|m| m.get(measure)).collect())
                .collect();
            let column = |j: usize| -> Vec<f64> { rows.iter().map(|r| r[j]).collect() };
            let friedman = BlockedSample::new(rows.clone())
                .map_err(|e| e.to_string())
                .and_then(|s| stats::friedman(&s).map_err(|e| e.to_string()));
            let mut pairwise = Vec::with_capacity(comparisons);
            for a in 0..k {
                for b in a + 1..k {
                    let result = stats::wilcoxon_signed_rank(&column(a), &column(b))
                        .map_err(|e| e.to_string());
                    let p_adjusted = result
                        .as_ref()
                        .ok()
                        .map(|t| stats::bonferroni(t.p_value, comparisons));
                    pairwise.push(PairwiseRow {
                        a: models[a].clone(),
                        b: models[b].clone(),
                        result,
                        p_adjusted,
                    });
                }
            }
            let one_sample = if measure == Measure::FinalStateSimilarity {
                (0..k)
                    .map(|j| OneSampleRow {
                        model: models[j].clone(),
                        mu0: 0.0,
                        result: stats::wilcoxon_one_sample(&column(j), 0.0)
                            .map_err(|e| e.to_string()),
                    })
                    .collect()
            } else {
                Vec::new()
            };
            MeasureStats {
                measure,
                blocks: rows.len(),
                comparisons,
                friedman,
                pairwise,
                one_sample,
            }
        })
        .collect()
}

/// Loads the dataset's problems and backends from `config` and evaluates.
pub fn evaluate(
    records: &[TaskRecord],
    config: &Config,
    backend_mode: BackendMode,
    strict: bool,
) -> Result<MetricsReport, HarnessError> {
    Evaluator::from_config(config, backend_mode, records)?
        .with_strict(strict)
        .evaluate(records)
}

/// Model-tagged summaries are the ones a summary model should reproduce.
pub fn model_summary(record: &TaskRecord) -> Option<&str> {
    record
        .summaries
        .iter()
        .find(|s| s.source == SummarySource::Model)
        .map(|s| s.text.as_str())
}
