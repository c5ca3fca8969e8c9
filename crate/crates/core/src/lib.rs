//! Turns natural-language household commands into symbolic robot action
//! sequences with a language model, simulates them over a symbolic world,
//! and scores them against human reference sequences.

pub mod actionseq;
pub mod domain;
pub mod harness;
pub mod llm;
pub mod metrics;
pub mod pipeline;
pub mod simulator;
mod real;
pub mod stats;

pub use real::Real;

/// Metric values in double precision.
pub type MetricValues = metrics::MetricValues<f64>;
/// Per-record metric means in double precision.
pub type MetricMeans = metrics::MetricMeans<f64>;
/// Statistical test result in double precision.
pub type TestResult = stats::TestResult<f64>;
/// Blocked sample (records x models) in double precision.
pub type BlockedSample = stats::BlockedSample<f64>;
