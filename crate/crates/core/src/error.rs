// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

/// Errors produced by the segmentation engine and its harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix side length {n} is below the minimum of {min}")]
    TooSmall { n: usize, min: usize },

    #[error("matrix is not square: row {row} has {found} columns, expected {expected}")]
    NotSquare {
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("cell ({row}, {col}) is not a finite number: {text:?}")]
    BadCell {
        row: usize,
        col: usize,
        text: String,
    },

    #[error("matrix is not symmetric at ({row}, {col}): {upper} vs {lower}")]
    Asymmetric {
        row: usize,
        col: usize,
        upper: f64,
        lower: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid segmentation: {0}")]
    Segmentation(String),

    #[error("invalid ground truth: {0}")]
    Truth(String),

    #[error("index range [{a}, {b}) is invalid for n = {n}")]
    IndexOrder { a: usize, b: usize, n: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("block [{a}, {b}) intersects the top-right corner used for the baseline mean")]
    CornerOverlap { a: usize, b: usize },

    #[error("enumeration of {count} segmentations exceeds the guard of {limit}")]
    GuardExceeded { count: u128, limit: u128 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("I/O error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}
