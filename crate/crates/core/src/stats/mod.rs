//! Nonparametric tests for comparing models over shared task records: the
//! Friedman test across all models, Wilcoxon signed-rank tests for pairs and
//! against a fixed location, and the Bonferroni adjustment.

pub mod special;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::real::Real;

/// Effective sample sizes up to this value get an exact Wilcoxon p-value.
pub const EXACT_WILCOXON_MAX_N: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("all paired differences are zero")]
    AllZeroDifferences,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// `n` blocks (rows) by `k` treatments (columns), complete.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockedSample<F> {
    blocks: usize,
    treatments: usize,
    values: Vec<F>,
}

impl<F: Real> BlockedSample<F> {
    pub fn new(rows: Vec<Vec<F>>) -> Result<Self, StatsError> {
        let blocks = rows.len();
        let treatments = rows.first().map_or(0, Vec::len);
        if blocks < 2 || treatments < 2 {
            return Err(StatsError::DegenerateSample(format!(
                "need at least 2 blocks and 2 treatments, got {blocks}x{treatments}"
            )));
        }
        if rows.iter().any(|r| r.len() != treatments) {
            return Err(StatsError::InvalidInput("rows differ in length".into()));
        }
        if rows.iter().flatten().any(|v| v.is_nan()) {
            return Err(StatsError::InvalidInput("missing (NaN) cell".into()));
        }
        Ok(BlockedSample {
            blocks,
            treatments,
            values: rows.into_iter().flatten().collect(),
        })
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn treatments(&self) -> usize {
        self.treatments
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.values[i * self.treatments..(i + 1) * self.treatments]
    }

    pub fn column(&self, j: usize) -> Vec<F> {
        (0..self.blocks).map(|i| self.row(i)[j]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    Friedman,
    WilcoxonExact,
    WilcoxonNormal,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Friedman => "friedman",
            Method::WilcoxonExact => "wilcoxon-exact",
            Method::WilcoxonNormal => "wilcoxon-normal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult<F> {
    pub statistic: F,
    pub df: Option<usize>,
    pub p_value: F,
    pub method: Method,
    /// Blocks for Friedman, non-zero differences for Wilcoxon.
    pub n: usize,
}

/// Ascending mid-ranks (1-based, ties share the mean rank), doubled so they
/// are integers, plus the sizes of every tie group.
pub fn doubled_midranks<F: Real>(values: &[F]) -> (Vec<u64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0u64; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j hold ranks i+1..=j+1; their mean doubled is i+j+2
        for &idx in &order[i..=j] {
            ranks[idx] = (i + j + 2) as u64;
        }
        if j > i {
            ties.push(j - i + 1);
        }
        i = j + 1;
    }
    (ranks, ties)
}

/// Friedman rank test with the tie correction.
///
/// When every block is constant there is no rank variation at all and the
/// result is `χ² = 0, p = 1`.
pub fn friedman<F: Real>(sample: &BlockedSample<F>) -> Result<TestResult<F>, StatsError> {
    let n = sample.blocks();
    let k = sample.treatments();
    let mut rank_sums = vec![0u64; k];
    let mut tie_term = 0u64;
    for i in 0..n {
        let (ranks, ties) = doubled_midranks(sample.row(i));
        for (j, r) in ranks.into_iter().enumerate() {
            rank_sums[j] += r;
        }
        tie_term += ties.iter().map(|&t| (t * t * t - t) as u64).sum::<u64>();
    }
    let nf = F::of_usize(n);
    let kf = F::of_usize(k);
    let half = F::lit(0.5);
    let sum_sq: F = rank_sums
        .iter()
        .map(|&r| {
            let r = F::from_u64(r).expect("rank sum") * half;
            r * r
        })
        .sum();
    let correction = F::one()
        - F::from_u64(tie_term).expect("tie term") / (nf * kf * (kf * kf - F::one()));
    let statistic = if correction <= F::epsilon() {
        F::zero()
    } else {
        let raw = F::lit(12.0) / (nf * kf * (kf + F::one())) * sum_sq
            - F::lit(3.0) * nf * (kf + F::one());
        (raw / correction).max(F::zero())
    };
    Ok(TestResult {
        statistic,
        df: Some(k - 1),
        p_value: special::chi_square_sf(statistic, k - 1).min(F::one()),
        method: Method::Friedman,
        n,
    })
}

/// How the Wilcoxon p-value is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WilcoxonMethod {
    /// Exact up to [`EXACT_WILCOXON_MAX_N`] non-zero differences, normal beyond.
    #[default]
    Auto,
    Exact,
    Normal,
}

/// Number of sign assignments reaching each doubled positive-rank sum.
///
/// Enumerates all `2^n` assignments; counts sum to `2^n`.
pub fn signed_rank_null_distribution(doubled_ranks: &[u64]) -> BTreeMap<u64, u64> {
    assert!(doubled_ranks.len() < 31, "enumeration limited to 30 ranks");
    let mut dist = BTreeMap::new();
    for mask in 0u64..(1u64 << doubled_ranks.len()) {
        let sum: u64 = doubled_ranks
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, r)| r)
            .sum();
        *dist.entry(sum).or_insert(0) += 1;
    }
    dist
}

/// Paired two-sided Wilcoxon signed-rank test on `x − y`.
///
/// Zero differences are dropped before ranking.
pub fn wilcoxon_signed_rank<F: Real>(x: &[F], y: &[F]) -> Result<TestResult<F>, StatsError> {
    wilcoxon_signed_rank_with(x, y, WilcoxonMethod::Auto)
}

pub fn wilcoxon_signed_rank_with<F: Real>(
    x: &[F],
    y: &[F],
    method: WilcoxonMethod,
) -> Result<TestResult<F>, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::InvalidInput(format!(
            "paired samples differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(StatsError::InvalidInput("need at least 2 pairs".into()));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(StatsError::InvalidInput("NaN in sample".into()));
    }
    let diffs: Vec<F> = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| a - b)
        .filter(|d| *d != F::zero())
        .collect();
    if diffs.is_empty() {
        return Err(StatsError::AllZeroDifferences);
    }
    let n = diffs.len();
    let magnitudes: Vec<F> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = doubled_midranks(&magnitudes);
    let w_plus2: u64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > F::zero())
        .map(|(r, _)| r)
        .sum();
    let total2 = (n * (n + 1)) as u64;
    let w_minus2 = total2 - w_plus2;
    let half = F::lit(0.5);
    let statistic = F::from_u64(w_plus2.min(w_minus2)).expect("rank sum") * half;

    let use_exact = match method {
        WilcoxonMethod::Exact => true,
        WilcoxonMethod::Normal => false,
        WilcoxonMethod::Auto => n <= EXACT_WILCOXON_MAX_N,
    };
    let (p_value, method) = if use_exact {
        let dist = signed_rank_null_distribution(&ranks);
        let le: u64 = dist.range(..=w_plus2).map(|(_, c)| c).sum();
        let ge: u64 = dist.range(w_plus2..).map(|(_, c)| c).sum();
        let total = F::from_u64(1u64 << n).expect("2^n");
        let tail = F::from_u64(le.min(ge)).expect("count") / total;
        ((F::lit(2.0) * tail).min(F::one()), Method::WilcoxonExact)
    } else {
        let nf = F::of_usize(n);
        let mean = nf * (nf + F::one()) * F::lit(0.25);
        let tie_adj: F = ties
            .iter()
            .map(|&t| F::of_usize(t * t * t - t))
            .sum::<F>()
            / F::lit(48.0);
        let var = nf * (nf + F::one()) * (F::lit(2.0) * nf + F::one()) / F::lit(24.0) - tie_adj;
        let w_plus = F::from_u64(w_plus2).expect("rank sum") * half;
        let z = ((w_plus - mean).abs() - half).max(F::zero()) / var.sqrt();
        (
            (F::lit(2.0) * special::normal_sf(z)).min(F::one()),
            Method::WilcoxonNormal,
        )
    };
    Ok(TestResult {
        statistic,
        df: None,
        p_value,
        method,
        n,
    })
}

/// One-sample signed-rank test of `x` against location `mu0`.
pub fn wilcoxon_one_sample<F: Real>(x: &[F], mu0: F) -> Result<TestResult<F>, StatsError> {
    let reference = vec![mu0; x.len()];
    wilcoxon_signed_rank(x, &reference)
}

/// `min(1, p · m)`.
pub fn bonferroni<F: Real>(p: F, m: usize) -> F {
    assert!(m >= 1, "number of comparisons must be positive");
    (p * F::of_usize(m)).min(F::one())
}
