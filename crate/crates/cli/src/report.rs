// SPDX-License-Identifier: MIT OR Apache-2.0

//! JSON documents written by the commands.

use blockseg::eval::{DecompositionSummary, Lemma1Report};
use blockseg::{SegConfig, SegLimits, SegmentationResult, SimSpec};
use serde::{Deserialize, Serialize};

/// Output of `segment`. Boundaries are listed twice: `boundaries` are
/// 0-based block starts `0 = b_0 < ... < b_K = n`, `t` the 1-based
/// convention `t_k = b_k + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentReport {
    pub n: usize,
    pub config: ConfigEcho,
    pub m01: f64,
    pub per_k: Vec<KEntry>,
    pub k_hat: usize,
    pub boundaries_hat: Vec<usize>,
    pub t_hat: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigEcho {
    pub c: f64,
    pub min_len: usize,
    pub k_max: usize,
    pub symmetrize: bool,
    pub max_len: usize,
    pub n0: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KEntry {
    pub k: usize,
    pub feasible: bool,
    pub boundaries: Option<Vec<usize>>,
    pub t: Option<Vec<usize>>,
    pub criterion: Option<f64>,
}

impl SegmentReport {
    pub fn new(result: &SegmentationResult, cfg: &SegConfig, limits: &SegLimits) -> Self {
        let per_k = result
            .per_k
            .iter()
            .map(|fit| KEntry {
                k: fit.k,
                feasible: fit.solution.is_some(),
                boundaries: fit
                    .solution
                    .as_ref()
                    .map(|s| s.segmentation.boundaries().to_vec()),
                t: fit.solution.as_ref().map(|s| s.segmentation.one_based()),
                criterion: fit.solution.as_ref().map(|s| s.criterion),
            })
            .collect();
        Self {
            n: result.n,
            config: ConfigEcho {
                c: cfg.c,
                min_len: cfg.min_len,
                k_max: cfg.k_max,
                symmetrize: cfg.symmetrize,
                max_len: limits.max_len,
                n0: limits.n0,
            },
            m01: result.m01,
            per_k,
            k_hat: result.k_hat,
            boundaries_hat: result.boundaries_hat.boundaries().to_vec(),
            t_hat: result.boundaries_hat.one_based(),
        }
    }
}

/// Sidecar written by `simulate` next to the matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSidecar {
    pub spec: SimSpec,
    pub c: f64,
    pub min_len: usize,
    pub n0: usize,
    pub boundaries: Vec<usize>,
    pub t: Vec<usize>,
}

/// Output of `theory-check`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoryCheckReport {
    #[serde(flatten)]
    pub lemma1: Lemma1Report,
    pub decomposition: DecompositionSummary,
    pub all_hold: bool,
}
