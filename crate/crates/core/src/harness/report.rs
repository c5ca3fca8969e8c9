use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::dataset::SummarySource;
use super::HarnessError;
use crate::actionseq::ActionSequence;
use crate::metrics::Measure;
use crate::pipeline::Stage;
use crate::simulator::Mode;
use crate::{MetricMeans, MetricValues, TestResult};

#[derive(Debug, Clone, PartialEq)]
pub struct CellMetrics {
    pub values: MetricValues,
    pub sequence: ActionSequence,
    pub candidate_length: usize,
    pub reference_length: usize,
    /// Actions dropped by post-processing.
    pub removed: usize,
    /// Candidate actions the simulator skipped.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub stage: Option<Stage>,
    pub fixture_miss: bool,
    pub message: String,
}

/// One (record, model, summary) evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRow {
    pub record: String,
    pub category: String,
    pub model: String,
    /// Index into the record's summaries.
    pub summary: usize,
    pub source: SummarySource,
    pub outcome: Result<CellMetrics, CellFailure>,
}

/// Mean over a record's summary cells for one model; `None` if any failed.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub record: String,
    pub model: String,
    pub means: Option<MetricMeans>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseRow {
    pub a: String,
    pub b: String,
    pub result: Result<TestResult, String>,
    pub p_adjusted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneSampleRow {
    pub model: String,
    pub mu0: f64,
    pub result: Result<TestResult, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureStats {
    pub measure: Measure,
    /// Records with an aggregate for every model.
    pub blocks: usize,
    /// Bonferroni factor for the pairwise tests.
    pub comparisons: usize,
    pub friedman: Result<TestResult, String>,
    pub pairwise: Vec<PairwiseRow>,
    pub one_sample: Vec<OneSampleRow>,
}

/// Everything an evaluation produced. `stats` is `None` with fewer than two
/// models.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub records: Vec<String>,
    pub synthetic_records: usize,
    pub models: Vec<String>,
    pub mode: Mode,
    pub cells: Vec<CellRow>,
    pub aggregates: Vec<AggregateRow>,
    pub stats: Option<Vec<MeasureStats>>,
}

/// File names written by [`MetricsReport::write`].
pub const REPORT_FILES: [&str; 4] = ["cells.csv", "aggregates.csv", "stats.csv", "summary.txt"];

fn num(x: f64) -> String {
    format!("{x:.6}")
}

fn csv_err(e: csv::Error) -> HarnessError {
    HarnessError::Io(e.to_string())
}

impl MetricsReport {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.outcome.is_err()).count()
    }

    pub fn failed_aggregates(&self) -> usize {
        self.aggregates.iter().filter(|a| a.means.is_none()).count()
    }

    /// Writes `cells.csv`, `aggregates.csv`, `stats.csv` and `summary.txt`.
    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
        let files = [
            (REPORT_FILES[0], self.cells_csv()?),
            (REPORT_FILES[1], self.aggregates_csv()?),
            (REPORT_FILES[2], self.stats_csv()?),
            (REPORT_FILES[3], self.summary_text()),
        ];
        for (name, body) in files {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }

    /// Columns: `record, category, model, summary, source, status,
    /// plan_difference, levenshtein, final_state_similarity,
    /// length_discrepancy, candidate_length, reference_length, removed,
    /// skipped, sequence, error`. Metric columns are empty for failed cells;
    /// `sequence` joins the final actions with `; `.
    pub fn cells_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "record",
            "category",
            "model",
            "summary",
            "source",
            "status",
            "plan_difference",
            "levenshtein",
            "final_state_similarity",
            "length_discrepancy",
            "candidate_length",
            "reference_length",
            "removed",
            "skipped",
            "sequence",
            "error",
        ])
        .map_err(csv_err)?;
        for c in &self.cells {
            let mut row = vec![
                c.record.clone(),
                c.category.clone(),
                c.model.clone(),
                (c.summary + 1).to_string(),
                c.source.to_string(),
            ];
            match &c.outcome {
                Ok(m) => {
                    let seq: Vec<String> = m.sequence.iter().map(ToString::to_string).collect();
                    row.extend([
                        "ok".to_string(),
                        m.values.plan_difference.to_string(),
                        m.values.levenshtein.to_string(),
                        num(m.values.final_state_similarity),
                        m.values.length_discrepancy.to_string(),
                        m.candidate_length.to_string(),
                        m.reference_length.to_string(),
                        m.removed.to_string(),
                        m.skipped.to_string(),
                        seq.join("; "),
                        String::new(),
                    ]);
                }
                Err(f) => {
                    row.push("failed".into());
                    row.extend(std::iter::repeat(String::new()).take(9));
                    row.push(f.message.clone());
                }
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        finish(w)
    }

    /// Columns: `record, model, status, plan_difference, levenshtein,
    /// final_state_similarity, length_discrepancy` (means of the summary
    /// cells).
    pub fn aggregates_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["record", "model", "status"];
        header.extend(Measure::ALL.iter().map(|m| m.as_str()));
        w.write_record(&header).map_err(csv_err)?;
        for a in &self.aggregates {
            let mut row = vec![a.record.clone(), a.model.clone()];
            match &a.means {
                Some(m) => {
                    row.push("ok".into());
                    row.extend(Measure::ALL.iter().map(|&x| num(m.get(x))));
                }
                None => {
                    row.push("failed".into());
                    row.extend(std::iter::repeat(String::new()).take(4));
                }
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        finish(w)
    }

    /// Columns: `measure, test, model_a, model_b, n, statistic, df, p_value,
    /// p_adjusted, note`. Tests that could not run carry the reason in
    /// `note`.
    pub fn stats_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "measure", "test", "model_a", "model_b", "n", "statistic", "df", "p_value", "p_adjusted", "note",
        ])
        .map_err(csv_err)?;
        let row = |measure: &str,
                   test: &str,
                   a: &str,
                   b: &str,
                   r: &Result<TestResult, String>,
                   adj: Option<f64>|
         -> Vec<String> {
            let mut v = vec![measure.to_string(), test.to_string(), a.to_string(), b.to_string()];
            match r {
                Ok(t) => v.extend([
                    t.n.to_string(),
                    num(t.statistic),
                    t.df.map(|d| d.to_string()).unwrap_or_default(),
                    num(t.p_value),
                    adj.map(num).unwrap_or_default(),
                    t.method.to_string(),
                ]),
                Err(e) => {
                    v.extend(std::iter::repeat(String::new()).take(5));
                    v.push(e.clone());
                }
            }
            v
        };
        for s in self.stats.iter().flatten() {
            let m = s.measure.as_str();
            w.write_record(row(m, "friedman", "", "", &s.friedman, None))
                .map_err(csv_err)?;
            for p in &s.pairwise {
                w.write_record(row(m, "wilcoxon_paired", &p.a, &p.b, &p.result, p.p_adjusted))
                    .map_err(csv_err)?;
            }
            for o in &s.one_sample {
                w.write_record(row(m, "wilcoxon_one_sample", &o.model, "", &o.result, None))
                    .map_err(csv_err)?;
            }
        }
        finish(w)
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "records: {} ({} synthetic)",
            self.records.len(),
            self.synthetic_records
        );
        let _ = writeln!(out, "models: {}", self.models.join(", "));
        let _ = writeln!(out, "simulation mode: {}", self.mode);
        let _ = writeln!(out, "cells: {} ({} failed)", self.cells.len(), self.failed_cells());
        let _ = writeln!(
            out,
            "aggregates: {} ({} failed)",
            self.aggregates.len(),
            self.failed_aggregates()
        );
        for c in self.cells.iter().filter(|c| c.outcome.is_err()) {
            if let Err(f) = &c.outcome {
                let _ = writeln!(out, "  failed: {} / {} / summary {}: {}", c.record, c.model, c.summary + 1, f.message);
            }
        }

        let _ = writeln!(out, "\nmean (median) per model over successful aggregates");
        let width = self.models.iter().map(String::len).max().unwrap_or(5).max(5);
        let _ = write!(out, "{:width$}", "model");
        for m in Measure::ALL {
            let _ = write!(out, "  {:>24}", m.as_str());
        }
        let _ = writeln!(out);
        for model in &self.models {
            let means: Vec<MetricMeans> = self
                .aggregates
                .iter()
                .filter(|a| &a.model == model)
                .filter_map(|a| a.means)
                .collect();
            let _ = write!(out, "{model:width$}");
            for m in Measure::ALL {
                let mut xs: Vec<f64> = means.iter().map(|v| v.get(m)).collect();
                let cell = if xs.is_empty() {
                    "n/a".to_string()
                } else {
                    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
                    xs.sort_by(f64::total_cmp);
                    let mid = xs.len() / 2;
                    let median = if xs.len() % 2 == 0 {
                        (xs[mid - 1] + xs[mid]) / 2.0
                    } else {
                        xs[mid]
                    };
                    format!("{mean:.3} ({median:.3})")
                };
                let _ = write!(out, "  {cell:>24}");
            }
            let _ = writeln!(out);
        }

        let Some(stats) = &self.stats else {
            let _ = writeln!(out, "\nstatistics: omitted (fewer than two models)");
            return out;
        };
        for s in stats {
            let _ = writeln!(out, "\n{} ({} complete records)", s.measure.as_str(), s.blocks);
            match &s.friedman {
                Ok(t) => {
                    let _ = writeln!(
                        out,
                        "  Friedman chi2({}) = {:.3}, p = {:.4}",
                        t.df.unwrap_or(0),
                        t.statistic,
                        t.p_value
                    );
                }
                Err(e) => {
                    let _ = writeln!(out, "  Friedman: not computed ({e})");
                }
            }
            let _ = writeln!(out, "  pairwise Wilcoxon, Bonferroni m = {}", s.comparisons);
            for p in &s.pairwise {
                match (&p.result, p.p_adjusted) {
                    (Ok(t), Some(adj)) => {
                        let _ = writeln!(
                            out,
                            "    {} vs {}: W = {:.1}, p = {:.4}, adjusted p = {:.4}{}",
                            p.a,
                            p.b,
                            t.statistic,
                            t.p_value,
                            adj,
                            stars(adj)
                        );
                    }
                    _ => {
                        let reason = p.result.as_ref().err().cloned().unwrap_or_default();
                        let _ = writeln!(out, "    {} vs {}: not computed ({reason})", p.a, p.b);
                    }
                }
            }
            if !s.one_sample.is_empty() {
                let _ = writeln!(out, "  one-sample Wilcoxon against 0");
                for o in &s.one_sample {
                    match &o.result {
                        Ok(t) => {
                            let _ = writeln!(
                                out,
                                "    {}: W = {:.1}, p = {:.4}{}",
                                o.model,
                                t.statistic,
                                t.p_value,
                                stars(t.p_value)
                            );
                        }
                        Err(e) => {
                            let _ = writeln!(out, "    {}: not computed ({e})", o.model);
                        }
                    }
                }
            }
        }
        out
    }
}

fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        " **"
    } else if p < 0.05 {
        " *"
    } else if p < 0.1 {
        " +"
    } else {
        ""
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, HarnessError> {
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::Io(e.to_string()))
}
