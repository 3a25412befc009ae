// SPDX-License-Identifier: MIT OR Apache-2.0

//! Numerical check of the lower bounds on the deterministic term `B_n`.
//!
//! | mode        | candidates                                 | bound                                              |
//! |-------------|--------------------------------------------|----------------------------------------------------|
//! | `under`     | `K < K*`, lengths in `[1, max_len]`        | `lambda^2 dtau^4 / 64`                             |
//! | `over`      | `K* < K <= k_max`, lengths in `[min_len, max_len]` | `lambda^2 (min_len / n)^2 / 4`             |
//! | `equal_far` | `K = K*`, lengths in `[1, max_len]`, `‖t - t*‖∞ > n delta` | `lambda^2 min(dtau / 2, delta) dtau^3 / 32` |
//!
//! Classes up to [`ENUMERATION_LIMIT`] members are enumerated exhaustively;
//! larger ones are sampled uniformly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::theory::TheoryFrame;
use crate::enumerate::{Family, UniformSampler};
use crate::error::{Error, Result};
use crate::model::{GroundTruth, SegConfig, SegLimits, Segmentation};
use crate::random::SeededRng;

pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// Draws per sampling chunk; chunk `c` uses seed `seed + c`.
const SAMPLE_CHUNK: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma1Mode {
    Under,
    Over,
    EqualFar,
}

impl std::str::FromStr for Lemma1Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "under" => Ok(Self::Under),
            "over" => Ok(Self::Over),
            "equal_far" | "equal-far" => Ok(Self::EqualFar),
            other => Err(Error::Config(format!(
                "unknown mode {other:?}, expected under, over or equal_far"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Lemma1Options {
    pub mode: Lemma1Mode,
    /// Distance threshold for `equal_far`; defaults to `dtau / 4`.
    pub delta: Option<f64>,
    pub sample_budget: u64,
    pub seed: u64,
}

impl Lemma1Options {
    pub fn new(mode: Lemma1Mode) -> Self {
        Self {
            mode,
            delta: None,
            sample_budget: 1_000_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma1Report {
    pub mode: Lemma1Mode,
    pub n: usize,
    pub k_star: usize,
    pub k_values: Vec<usize>,
    pub min_len: usize,
    pub max_len: usize,
    pub delta: Option<f64>,
    pub bound: f64,
    pub min_bn: Option<f64>,
    pub argmin: Option<Vec<usize>>,
    pub margin: Option<f64>,
    pub candidates_checked: u64,
    /// Candidates left out because a block reaches the corner.
    pub skipped_corner: u64,
    /// Size of the length-constrained class before the distance filter.
    pub class_size: u128,
    pub sampled: bool,
    pub no_candidates: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, Default)]
struct Tally {
    best: Option<(f64, Vec<usize>)>,
    checked: u64,
    skipped: u64,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.checked += other.checked;
        self.skipped += other.skipped;
        self.best = match (self.best.take(), other.best) {
            (None, b) | (b, None) => b,
            (Some(a), Some(b)) => Some(if (b.0, &b.1) < (a.0, &a.1) { b } else { a }),
        };
        self
    }

    fn offer(&mut self, frame: &TheoryFrame, filter: &impl Fn(&[usize]) -> bool, b: &[usize]) {
        if !filter(b) {
            return;
        }
        let t = Segmentation::new(b.to_vec()).expect("family yields valid boundaries");
        match frame.bn(&t) {
            Ok(v) => {
                self.checked += 1;
                let better = match &self.best {
                    None => true,
                    Some((bv, bb)) => (v, b) < (*bv, bb.as_slice()),
                };
                if better {
                    self.best = Some((v, b.to_vec()));
                }
            }
            Err(Error::CornerOverlap { .. }) => self.skipped += 1,
            Err(e) => panic!("unexpected theory error: {e}"),
        }
    }
}

fn class_limits(mode: Lemma1Mode, limits: &SegLimits) -> Result<SegLimits> {
    match mode {
        Lemma1Mode::Over => Ok(*limits),
        Lemma1Mode::Under | Lemma1Mode::EqualFar => limits.with_min_len(1),
    }
}

pub fn lemma1_check(
    truth: &GroundTruth,
    cfg: &SegConfig,
    n: usize,
    opts: &Lemma1Options,
) -> Result<Lemma1Report> {
    let frame = TheoryFrame::new(truth, cfg, n)?;
    let lambda = truth.lambda_inf();
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::Precondition(
            "every block mean must differ from the baseline mean".into(),
        ));
    }
    let dtau = truth.delta_tau();
    let k_star = truth.k();
    let limits = class_limits(opts.mode, frame.limits())?;

    let (k_values, bound, delta): (Vec<usize>, f64, Option<f64>) = match opts.mode {
        Lemma1Mode::Under => (
            (1..k_star).filter(|&k| limits.feasible(k)).collect(),
            lambda.powi(2) * dtau.powi(4) / 64.0,
            None,
        ),
        Lemma1Mode::Over => {
            let dn = limits.min_len as f64 / n as f64;
            (
                (k_star + 1..=cfg.k_max)
                    .filter(|&k| limits.feasible(k))
                    .collect(),
                lambda.powi(2) * dn * dn / 4.0,
                None,
            )
        }
        Lemma1Mode::EqualFar => {
            let delta = opts.delta.unwrap_or(dtau / 4.0);
            if delta.is_nan() || delta <= 0.0 {
                return Err(Error::Config(format!(
                    "delta must be positive, got {delta}"
                )));
            }
            let k = if limits.feasible(k_star) {
                vec![k_star]
            } else {
                vec![]
            };
            (
                k,
                lambda.powi(2) * (dtau / 2.0).min(delta) * dtau.powi(3) / 32.0,
                Some(delta),
            )
        }
    };

    let truth_b = frame.truth_boundaries().boundaries().to_vec();
    let far = delta.map(|d| n as f64 * d);
    let filter = move |b: &[usize]| match far {
        None => true,
        Some(threshold) => {
            let dist = b
                .iter()
                .zip(&truth_b)
                .map(|(x, y)| x.abs_diff(*y))
                .max()
                .unwrap_or(0);
            dist as f64 > threshold
        }
    };

    let families: Vec<Family> = k_values
        .iter()
        .map(|&k| Family {
            n,
            k,
            min_len: limits.min_len,
            max_len: limits.max_len,
        })
        .collect();
    let class_size = families
        .iter()
        .fold(0u128, |acc, f| acc.saturating_add(f.count()));
    let sampled = class_size > ENUMERATION_LIMIT;

    let tally = if sampled {
        sample_class(&frame, &families, &filter, opts)
    } else {
        let jobs: Vec<(Family, usize)> = families
            .iter()
            .flat_map(|f| f.first_boundaries().into_iter().map(move |b1| (*f, b1)))
            .collect();
        jobs.par_iter()
            .map(|(fam, b1)| {
                let mut tally = Tally::default();
                fam.for_each_with_first(*b1, |b| tally.offer(&frame, &filter, b));
                tally
            })
            .reduce(Tally::default, Tally::merge)
    };

    let (min_bn, argmin) = match tally.best {
        Some((v, b)) => (Some(v), Some(b)),
        None => (None, None),
    };
    let margin = min_bn.map(|v| v - bound);
    Ok(Lemma1Report {
        mode: opts.mode,
        n,
        k_star,
        k_values,
        min_len: limits.min_len,
        max_len: limits.max_len,
        delta,
        bound,
        min_bn,
        argmin,
        margin,
        candidates_checked: tally.checked,
        skipped_corner: tally.skipped,
        class_size,
        sampled,
        no_candidates: tally.checked == 0,
        holds: margin.is_none_or(|m| m >= 0.0),
    })
}

fn sample_class(
    frame: &TheoryFrame,
    families: &[Family],
    filter: &(impl Fn(&[usize]) -> bool + Sync),
    opts: &Lemma1Options,
) -> Tally {
    let samplers: Vec<UniformSampler> = families
        .iter()
        .filter_map(|f| UniformSampler::new(*f))
        .collect();
    if samplers.is_empty() || opts.sample_budget == 0 {
        return Tally::default();
    }
    let sizes: Vec<f64> = samplers.iter().map(UniformSampler::size).collect();
    let total: f64 = sizes.iter().sum();
    let chunks = opts.sample_budget.div_ceil(SAMPLE_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = SeededRng::new(opts.seed.wrapping_add(c));
            let draws = SAMPLE_CHUNK.min(opts.sample_budget - c * SAMPLE_CHUNK);
            let mut tally = Tally::default();
            for _ in 0..draws {
                let mut target = rng.uniform() * total;
                let mut idx = samplers.len() - 1;
                for (i, &s) in sizes.iter().enumerate() {
                    if target < s {
                        idx = i;
                        break;
                    }
                    target -= s;
                }
                let t = samplers[idx].sample(&mut rng);
                tally.offer(frame, filter, t.boundaries());
            }
            tally
        })
        .reduce(Tally::default, Tally::merge)
}
