// SPDX-License-Identifier: MIT OR Apache-2.0

//! Estimator quality metrics and numerical checks of the consistency theory.

mod hausdorff;
mod lemma1;
mod summary;
mod theory;

pub use hausdorff::{hausdorff, HausdorffPair};
pub use lemma1::{lemma1_check, Lemma1Mode, Lemma1Options, Lemma1Report, ENUMERATION_LIMIT};
pub use summary::{quantile, CellSummary, Quartiles, ReplicateOutcome};
pub use theory::{
    bn_term, decomposition_suite, intersection_counts, random_terms, sample_corner_free,
    DecompositionSummary, IntersectionCounts, TheoryDecomposition, TheoryFrame,
    DECOMPOSITION_TOLERANCE,
};
