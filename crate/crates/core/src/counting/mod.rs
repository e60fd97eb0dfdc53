//! Canonical copy counting, copy degrees, expectation formulas, pattern
//! arithmetic (2-density, balance, thresholds, valid edge orderings), and
//! binomial utilities.

mod binomials;
mod copies;
mod patterns;

pub use binomials::{
    binomial, check_binomial_merging, check_binomial_splitting, check_scaled_binomial, log_choose,
};
pub use copies::{
    bad_family_b3, count_canonical, deg_edge, deg_edge_potential, deg_vertex, expected_count,
    expected_count_uniform, is_bad_count, is_bad_instance, per_edge_counts, per_vertex_counts,
    CopyCount,
};
pub use patterns::{
    balance_class, edge_threshold, one_valid_sequence, two_density, valid_sequence_count,
    valid_sequences, BalanceClass, ValidSequence, ValidSequences,
};

use crate::model::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CountingError {
    #[error("pattern mismatch: {0}")]
    PatternMismatch(String),
    #[error("edge ({a}, {b}) absent from pair ({x}, {y})")]
    EdgeAbsent {
        x: usize,
        y: usize,
        a: usize,
        b: usize,
    },
    #[error("two-density needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("pattern too large for subgraph enumeration ({0} vertices)")]
    PatternTooLarge(usize),
    #[error("domain violated: b = {b} exceeds a = {a}")]
    DomainError { a: u64, b: u64 },
    #[error("scaling factor must be a rational in (0, 1] with x*a integral")]
    BadScalingFactor,
    #[error("threshold does not fit a 64-bit integer")]
    ThresholdOverflow,
    #[error(transparent)]
    Model(#[from] ModelError),
}
