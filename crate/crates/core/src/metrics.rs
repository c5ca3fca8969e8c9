//! Human-likeness measures between a reference action sequence and a
//! generated one.
//!
//! Two action-similarity distances (order-free plan difference and
//! Levenshtein), a final-state similarity over simulated world states, and
//! the absolute length discrepancy.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::domain::WorldState;
use crate::real::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("cannot aggregate an empty list of metric values")]
    EmptyInput,
}

/// The four measures for one (reference, candidate) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricValues<F> {
    pub plan_difference: usize,
    pub levenshtein: usize,
    pub final_state_similarity: F,
    pub length_discrepancy: usize,
}

/// Field-wise means over several [`MetricValues`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricMeans<F> {
    pub plan_difference: F,
    pub levenshtein: F,
    pub final_state_similarity: F,
    pub length_discrepancy: F,
}

/// Names of the four measures in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    PlanDifference,
    Levenshtein,
    FinalStateSimilarity,
    LengthDiscrepancy,
}

impl Measure {
    pub const ALL: [Measure; 4] = [
        Measure::PlanDifference,
        Measure::Levenshtein,
        Measure::FinalStateSimilarity,
        Measure::LengthDiscrepancy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::PlanDifference => "plan_difference",
            Measure::Levenshtein => "levenshtein",
            Measure::FinalStateSimilarity => "final_state_similarity",
            Measure::LengthDiscrepancy => "length_discrepancy",
        }
    }
}

impl<F: Real> MetricMeans<F> {
    pub fn get(&self, measure: Measure) -> F {
        match measure {
            Measure::PlanDifference => self.plan_difference,
            Measure::Levenshtein => self.levenshtein,
            Measure::FinalStateSimilarity => self.final_state_similarity,
            Measure::LengthDiscrepancy => self.length_discrepancy,
        }
    }
}

/// Order-free distance `|A − B| + |B − A|` with multiset difference.
pub fn plan_difference<T: Ord>(a: &[T], b: &[T]) -> usize {
    let mut counts: BTreeMap<&T, isize> = BTreeMap::new();
    for x in a {
        *counts.entry(x).or_default() += 1;
    }
    for x in b {
        *counts.entry(x).or_default() -= 1;
    }
    counts.values().map(|c| c.unsigned_abs()).sum()
}

/// Unit-cost edit distance (insert, delete, substitute) over whole actions.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let cost = usize::from(x != y);
            cur[j + 1] = (cur[j] + 1).min(prev[j + 1] + 1).min(prev[j] + cost);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn length_discrepancy<T>(a: &[T], b: &[T]) -> usize {
    a.len().abs_diff(b.len())
}

/// `1 − |F_h △ F_l| / |F_h △ I|`, with symmetric set differences.
///
/// When the reference run leaves the initial state unchanged the ratio is
/// undefined; the result is then 1 if both final states agree and 0
/// otherwise. Values below zero are kept.
pub fn final_state_similarity<F: Real>(
    initial: &WorldState,
    human_final: &WorldState,
    llm_final: &WorldState,
) -> F {
    let numerator = human_final.distance(llm_final);
    let denominator = human_final.distance(initial);
    if denominator == 0 {
        return if numerator == 0 { F::one() } else { F::zero() };
    }
    F::one() - F::of_usize(numerator) / F::of_usize(denominator)
}

/// Computes all four measures. `reference` is the human sequence.
pub fn compare<F: Real, T: Ord>(
    reference: &[T],
    candidate: &[T],
    initial: &WorldState,
    reference_final: &WorldState,
    candidate_final: &WorldState,
) -> MetricValues<F> {
    MetricValues {
        plan_difference: plan_difference(candidate, reference),
        levenshtein: levenshtein(candidate, reference),
        final_state_similarity: final_state_similarity(initial, reference_final, candidate_final),
        length_discrepancy: length_discrepancy(candidate, reference),
    }
}

/// Arithmetic mean of each field.
pub fn aggregate<F: Real>(values: &[MetricValues<F>]) -> Result<MetricMeans<F>, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = F::of_usize(values.len());
    let mean_of = |f: &dyn Fn(&MetricValues<F>) -> F| values.iter().map(f).sum::<F>() / n;
    Ok(MetricMeans {
        plan_difference: mean_of(&|v| F::of_usize(v.plan_difference)),
        levenshtein: mean_of(&|v| F::of_usize(v.levenshtein)),
        final_state_similarity: mean_of(&|v| v.final_state_similarity),
        length_discrepancy: mean_of(&|v| F::of_usize(v.length_discrepancy)),
    })
}
