// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact minimisation of the modified least-squares criterion.
//!
//! The corner mean `m01` does not depend on the segmentation, so
//! `Q_n^K(t) = c0 + sum_k g(b_{k-1}, b_k)` is additive over blocks and the
//! classic segment-neighbourhood recurrence
//!
//! ```text
//! cost[k][j] = min_{j - max_len <= i <= j - min_len} cost[k-1][i] + g(i, j)
//! ```
//!
//! gives the optimum for every `K <= k_max` from one table.
//!
//! Tie rules: the inner minimum keeps the smallest predecessor `i`, and `K`
//! selection keeps the smallest `K`.

use crate::enumerate::Family;
use crate::error::{Error, Result};
use crate::model::{
    KFit, KSolution, ObservationMatrix, SegConfig, SegLimits, Segmentation, SegmentationResult,
};
use crate::stats::PrefixStats;

/// Upper bound on the number of candidates [`brute_force_segment`] visits.
pub const BRUTE_FORCE_GUARD: u128 = 10_000_000;

#[derive(Clone, Debug)]
pub struct DpTable {
    n: usize,
    k_max: usize,
    /// `(k_max + 1) x (n + 1)`, row-major by `k`.
    cost: Vec<f64>,
    arg: Vec<usize>,
}

impl DpTable {
    pub fn build(stats: &PrefixStats, k_max: usize) -> Self {
        let limits = *stats.limits();
        let n = stats.n();
        let w = n + 1;
        let mut cost = vec![f64::INFINITY; (k_max + 1) * w];
        let mut arg = vec![usize::MAX; (k_max + 1) * w];
        cost[0] = 0.0;

        let mut g = vec![0.0; limits.max_len + 1];
        for j in limits.min_len..=n {
            let lo = j.saturating_sub(limits.max_len);
            let hi = j - limits.min_len;
            // block costs do not depend on k; compute once per end point
            for i in lo..=hi {
                g[i - lo] = stats.cost_unchecked(i, j);
            }
            let k_first = j.div_ceil(limits.max_len).max(1);
            let k_last = (j / limits.min_len).min(k_max);
            for k in k_first..=k_last {
                let prev = &cost[(k - 1) * w..k * w];
                let mut best = f64::INFINITY;
                let mut best_i = usize::MAX;
                for i in lo..=hi {
                    let v = prev[i] + g[i - lo];
                    if v < best {
                        best = v;
                        best_i = i;
                    }
                }
                cost[k * w + j] = best;
                arg[k * w + j] = best_i;
            }
        }
        Self {
            n,
            k_max,
            cost,
            arg,
        }
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Minimal sum of block costs tiling `[0, j)` with `k` blocks.
    pub fn cost(&self, k: usize, j: usize) -> f64 {
        self.cost[k * (self.n + 1) + j]
    }

    pub fn predecessor(&self, k: usize, j: usize) -> Option<usize> {
        let p = self.arg[k * (self.n + 1) + j];
        (p != usize::MAX).then_some(p)
    }

    /// Optimal boundaries for `k` blocks, `None` when infeasible.
    pub fn backtrack(&self, k: usize) -> Option<Segmentation> {
        if k == 0 || k > self.k_max || !self.cost(k, self.n).is_finite() {
            return None;
        }
        let mut b = vec![self.n];
        let mut j = self.n;
        for kk in (1..=k).rev() {
            j = self.predecessor(kk, j)?;
            b.push(j);
        }
        debug_assert_eq!(j, 0);
        b.reverse();
        Segmentation::new(b).ok()
    }
}

/// Exact minimiser of `Q_n^K` over admissible segmentations with `k` blocks.
/// Returns `Ok(None)` when no admissible segmentation has `k` blocks.
pub fn segment_for_k(stats: &PrefixStats, k: usize) -> Result<Option<KSolution>> {
    let limits = stats.limits();
    if k == 0 || k > limits.k_max {
        return Err(Error::Config(format!(
            "K = {k} is outside 1..={}",
            limits.k_max
        )));
    }
    if !limits.feasible(k) {
        return Ok(None);
    }
    let table = DpTable::build(stats, k);
    Ok(solution(stats, &table, k))
}

fn solution(stats: &PrefixStats, table: &DpTable, k: usize) -> Option<KSolution> {
    let segmentation = table.backtrack(k)?;
    Some(KSolution {
        criterion: stats.c0() + table.cost(k, stats.n()),
        segmentation,
    })
}

/// Runs the full sweep `K = 1..=k_max` and picks the `K` with the smallest
/// criterion, without any penalty.
pub fn select_k(stats: &PrefixStats) -> Result<SegmentationResult> {
    let limits = stats.limits();
    let k_max = limits.k_max;
    let table = DpTable::build(stats, k_max);
    let per_k: Vec<KFit> = (1..=k_max)
        .map(|k| KFit {
            k,
            solution: if limits.feasible(k) {
                solution(stats, &table, k)
            } else {
                None
            },
        })
        .collect();

    let mut best: Option<&KFit> = None;
    for fit in &per_k {
        let Some(sol) = &fit.solution else { continue };
        match best.and_then(|b| b.solution.as_ref()) {
            Some(cur) if sol.criterion >= cur.criterion => {}
            _ => best = Some(fit),
        }
    }
    let best =
        best.ok_or_else(|| Error::Config(format!("no feasible number of blocks in 1..={k_max}")))?;
    let sol = best.solution.as_ref().expect("selected row is feasible");
    Ok(SegmentationResult {
        n: stats.n(),
        k_hat: best.k,
        boundaries_hat: sol.segmentation.clone(),
        m01: stats.m01(),
        per_k,
    })
}

/// Mean of `Y` over the top-right corner, summed cell by cell.
fn naive_corner_mean(y: &ObservationMatrix, n0: usize) -> f64 {
    let n = y.n();
    let mut s = 0.0;
    for i in 0..n0 {
        for j in n - n0..n {
            s += y.get(i, j);
        }
    }
    s / (n0 * n0) as f64
}

fn naive_criterion(y: &ObservationMatrix, m01: f64, t: &Segmentation) -> f64 {
    let n = y.n();
    let k = t.k();
    let block = |i: usize| t.block_of(i);
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for i in 0..n {
        for j in i..n {
            let (bi, bj) = (block(i), block(j));
            if bi == bj {
                sums[bi] += y.get(i, j);
                counts[bi] += 1;
            }
        }
    }
    let means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let mut q = 0.0;
    for i in 0..n {
        for j in i..n {
            let (bi, bj) = (block(i), block(j));
            let v = y.get(i, j);
            let centre = if bi == bj { means[bi] } else { m01 };
            q += (v - centre) * (v - centre);
        }
    }
    q
}

/// `Q_n^K(t)` evaluated directly from its definition: within-block sums of
/// squares plus squared deviations of every off-block upper-triangle cell from
/// the corner mean. No prefix tables are involved.
pub fn criterion_value(y: &ObservationMatrix, cfg: &SegConfig, t: &Segmentation) -> Result<f64> {
    let limits = cfg.limits(y.n())?;
    if t.n() != y.n() {
        return Err(Error::Segmentation(format!(
            "segmentation ends at {} but the matrix side is {}",
            t.n(),
            y.n()
        )));
    }
    Ok(naive_criterion(y, naive_corner_mean(y, limits.n0), t))
}

/// Exhaustive minimiser used as an oracle for [`segment_for_k`]. Among exact
/// ties it keeps the candidate that is smallest when boundaries are compared
/// from the last one backwards, which is what the DP backtrack produces.
pub fn brute_force_segment(
    y: &ObservationMatrix,
    cfg: &SegConfig,
    k: usize,
) -> Result<Option<KSolution>> {
    let limits = cfg.limits(y.n())?;
    brute_force_with_limits(y, &limits, k)
}

pub(crate) fn brute_force_with_limits(
    y: &ObservationMatrix,
    limits: &SegLimits,
    k: usize,
) -> Result<Option<KSolution>> {
    let family = Family {
        n: limits.n,
        k,
        min_len: limits.min_len,
        max_len: limits.max_len,
    };
    let count = family.count();
    if count > BRUTE_FORCE_GUARD {
        return Err(Error::GuardExceeded {
            count,
            limit: BRUTE_FORCE_GUARD,
        });
    }
    let m01 = naive_corner_mean(y, limits.n0);
    let mut best: Option<(f64, Vec<usize>)> = None;
    family.for_each(|b| {
        let t = Segmentation::new(b.to_vec()).expect("family yields valid boundaries");
        let q = naive_criterion(y, m01, &t);
        let better = match &best {
            None => true,
            Some((bq, bb)) => q < *bq || (q == *bq && b.iter().rev().lt(bb.iter().rev())),
        };
        if better {
            best = Some((q, b.to_vec()));
        }
    });
    Ok(best.map(|(criterion, b)| KSolution {
        segmentation: Segmentation::new(b).expect("valid"),
        criterion,
    }))
}
