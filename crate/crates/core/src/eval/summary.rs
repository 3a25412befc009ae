// SPDX-License-Identifier: MIT OR Apache-2.0

//! Per-cell summaries of replicate outcomes.

use serde::Serialize;

/// Sample quantile with linear interpolation between order statistics
/// (`x[h]` at `h = (m - 1) p`), the default of most statistics packages.
/// `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Quartiles {
    /// `None` for an empty sample.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(Self {
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
        })
    }
}

/// One replicate outcome, as far as the summary needs it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReplicateOutcome {
    pub k_hat: usize,
    pub h1: usize,
    pub h2: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    pub replicates: usize,
    pub k_star: usize,
    pub k_hat: Quartiles,
    pub h1: Quartiles,
    pub h2: Quartiles,
    pub frac_k_hat_eq: f64,
    pub frac_k_hat_gt: f64,
    pub frac_k_hat_lt: f64,
}

impl CellSummary {
    pub fn of(k_star: usize, outcomes: &[ReplicateOutcome]) -> Option<Self> {
        let m = outcomes.len() as f64;
        let frac = |f: &dyn Fn(&ReplicateOutcome) -> bool| {
            outcomes.iter().filter(|o| f(o)).count() as f64 / m
        };
        Some(Self {
            replicates: outcomes.len(),
            k_star,
            k_hat: Quartiles::of(outcomes.iter().map(|o| o.k_hat as f64))?,
            h1: Quartiles::of(outcomes.iter().map(|o| o.h1 as f64))?,
            h2: Quartiles::of(outcomes.iter().map(|o| o.h2 as f64))?,
            frac_k_hat_eq: frac(&|o| o.k_hat == k_star),
            frac_k_hat_gt: frac(&|o| o.k_hat > k_star),
            frac_k_hat_lt: frac(&|o| o.k_hat < k_star),
        })
    }
}
