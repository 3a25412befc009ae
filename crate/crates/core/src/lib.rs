// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact least-squares recovery of diagonal blocks in a symmetric matrix.
//!
//! The baseline level outside the blocks is estimated once from the top-right
//! corner of the matrix, which makes the criterion additive over blocks and
//! exactly solvable by dynamic programming. The number of blocks is chosen by
//! minimising the criterion directly, with no penalty term.

#![forbid(unsafe_code)]

pub mod dp;
pub mod enumerate;
pub mod error;
pub mod eval;
pub mod io;
pub mod model;
pub mod random;
pub mod simulate;
pub mod stats;

#[cfg(test)]
pub(crate) mod testutil;

pub use dp::{brute_force_segment, criterion_value, segment_for_k, select_k, DpTable};
pub use error::{Error, Result};
pub use io::{load_matrix, save_matrix};
pub use model::{
    GroundTruth, KFit, KSolution, ObservationMatrix, SegConfig, SegLimits, Segmentation,
    SegmentationResult,
};
pub use simulate::{generate, MeanModel, NoiseModel, SimSpec, Simulated};
pub use stats::{PrefixStats, TriSum};
