// SPDX-License-Identifier: MIT OR Apache-2.0

//! Deterministic and random terms of the normalised criterion gap
//! `J_n(t) = 2 / (n (n + 1)) * (Q_n^K(t) - Q_n^{K*}(t*))`.
//!
//! Everything here is a direct O(n^2) sweep over the upper triangle. Region
//! index 0 stands for the baseline part outside the corner (`G_00` for the
//! candidate, `G*_00` for the truth); indices `1..` are blocks.
//!
//! The identities below assume no candidate block reaches the corner `G_01`;
//! such segmentations are rejected with [`Error::CornerOverlap`].

use serde::Serialize;

use crate::dp::criterion_value;
use crate::enumerate::{Family, UniformSampler};
use crate::error::{Error, Result};
use crate::model::{GroundTruth, ObservationMatrix, SegConfig, SegLimits, Segmentation};
use crate::random::SeededRng;
use crate::simulate::{generate, MeanModel, NoiseModel, SimSpec};

/// Validated truth geometry for one side length.
#[derive(Clone, Debug)]
pub struct TheoryFrame {
    truth: GroundTruth,
    limits: SegLimits,
    cfg: SegConfig,
    model: MeanModel,
    /// `mu[0] = mu0`, `mu[l] = mu*_l`.
    mu: Vec<f64>,
    true_labels: Vec<usize>,
}

impl TheoryFrame {
    pub fn new(truth: &GroundTruth, cfg: &SegConfig, n: usize) -> Result<Self> {
        let limits = cfg.limits(n)?;
        let model = MeanModel::new(truth, &limits, cfg.c)?;
        let true_labels = labels(model.truth_boundaries());
        let mu = std::iter::once(truth.mu0)
            .chain(truth.mu.iter().copied())
            .collect();
        Ok(Self {
            truth: truth.clone(),
            limits,
            cfg: cfg.clone(),
            model,
            mu,
            true_labels,
        })
    }

    pub fn n(&self) -> usize {
        self.limits.n
    }

    pub fn limits(&self) -> &SegLimits {
        &self.limits
    }

    pub fn truth(&self) -> &GroundTruth {
        &self.truth
    }

    pub fn truth_boundaries(&self) -> &Segmentation {
        self.model.truth_boundaries()
    }

    pub fn mean_model(&self) -> &MeanModel {
        &self.model
    }

    fn check(&self, t: &Segmentation) -> Result<()> {
        if t.n() != self.n() {
            return Err(Error::Dimension(format!(
                "segmentation covers {} positions, truth has n = {}",
                t.n(),
                self.n()
            )));
        }
        match t
            .blocks()
            .find(|&(a, b)| self.limits.block_meets_corner(a, b))
        {
            Some((a, b)) => Err(Error::CornerOverlap { a, b }),
            None => Ok(()),
        }
    }

    #[inline]
    fn in_corner(&self, i: usize, j: usize) -> bool {
        i < self.limits.n0 && j >= self.n() - self.limits.n0
    }

    pub fn counts(&self, t: &Segmentation) -> Result<IntersectionCounts> {
        self.check(t)?;
        let n = self.n();
        let est = labels(t);
        let tru = &self.true_labels;
        let mut counts = vec![vec![0u64; self.truth.k() + 1]; t.k() + 1];
        for i in 0..n {
            for j in i..n {
                if self.in_corner(i, j) {
                    continue;
                }
                let e = if est[i] == est[j] { est[i] + 1 } else { 0 };
                let s = if tru[i] == tru[j] { tru[i] + 1 } else { 0 };
                counts[e][s] += 1;
            }
        }
        Ok(IntersectionCounts::from_counts(counts))
    }

    pub fn bn(&self, t: &Segmentation) -> Result<f64> {
        let counts = self.counts(t)?;
        Ok(bn_from_counts(&counts, &self.mu, self.n()))
    }
}

fn labels(t: &Segmentation) -> Vec<usize> {
    let mut out = Vec::with_capacity(t.n());
    for (k, (a, b)) in t.blocks().enumerate() {
        out.extend(std::iter::repeat_n(k, b - a));
    }
    out
}

/// `n_{k,l} = |D_k ∩ D*_l|` with region 0 the baseline outside the corner.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntersectionCounts {
    /// `(K + 1) x (K* + 1)`.
    pub counts: Vec<Vec<u64>>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
}

impl IntersectionCounts {
    fn from_counts(counts: Vec<Vec<u64>>) -> Self {
        let row_sums = counts.iter().map(|r| r.iter().sum()).collect();
        let cols = counts.first().map_or(0, Vec::len);
        let col_sums = (0..cols)
            .map(|l| counts.iter().map(|r| r[l]).sum())
            .collect();
        Self {
            counts,
            row_sums,
            col_sums,
        }
    }

    pub fn total(&self) -> u64 {
        self.row_sums.iter().sum()
    }
}

fn bn_from_counts(c: &IntersectionCounts, mu: &[f64], n: usize) -> f64 {
    let scale = 1.0 / (n * (n + 1)) as f64;
    let base: f64 = c.counts[0]
        .iter()
        .zip(mu)
        .map(|(&cnt, &m)| cnt as f64 * (m - mu[0]).powi(2))
        .sum();
    let mut blocks = 0.0;
    for (row, &nk) in c.counts.iter().zip(&c.row_sums).skip(1) {
        let mut acc = 0.0;
        for (l, &a) in row.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (lp, &b) in row.iter().enumerate() {
                acc += (a * b) as f64 * (mu[l] - mu[lp]).powi(2);
            }
        }
        blocks += acc / nk as f64;
    }
    2.0 * scale * base + scale * blocks
}

pub fn intersection_counts(
    t: &Segmentation,
    truth: &GroundTruth,
    cfg: &SegConfig,
    n: usize,
) -> Result<IntersectionCounts> {
    TheoryFrame::new(truth, cfg, n)?.counts(t)
}

/// Deterministic part `B_n(t)` of `J_n(t)`, from the intersection counts.
pub fn bn_term(t: &Segmentation, truth: &GroundTruth, cfg: &SegConfig, n: usize) -> Result<f64> {
    TheoryFrame::new(truth, cfg, n)?.bn(t)
}

/// Terms of `J_n(t) = B_n + V_n + W_n + Z_n` for one observed matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoryDecomposition {
    pub bn: f64,
    pub vn: f64,
    pub wn: f64,
    pub zn: f64,
    /// `J_n(t)`, from two direct criterion evaluations.
    pub jn: f64,
    pub bn_blocks: f64,
    pub bn_base: f64,
    pub vn_blocks: f64,
    pub vn_base: f64,
    pub wn_blocks: f64,
    pub wn_base: f64,
    pub lambda_inf: f64,
    pub lambda_bar: f64,
    pub delta_tau: f64,
}

impl TheoryDecomposition {
    pub fn residual(&self) -> f64 {
        self.bn + self.vn + self.wn + self.zn - self.jn
    }

    /// `|B + V + W + Z - J| / max(1, |J|)`.
    pub fn relative_residual(&self) -> f64 {
        self.residual().abs() / self.jn.abs().max(1.0)
    }
}

/// Computes every term of the decomposition for candidate `t` on matrix `y`
/// generated from `truth` (the noise is recovered as `Y - E[Y]`). Requires no
/// corner shift, since the decomposition assumes the corner mean is unbiased.
pub fn random_terms(
    t: &Segmentation,
    y: &ObservationMatrix,
    truth: &GroundTruth,
    cfg: &SegConfig,
) -> Result<TheoryDecomposition> {
    if truth.omega != 0.0 {
        return Err(Error::Precondition(
            "the decomposition needs an unshifted corner (omega = 0)".into(),
        ));
    }
    let n = y.n();
    if t.n() != n {
        return Err(Error::Dimension(format!(
            "segmentation covers {} positions, matrix has {n}",
            t.n()
        )));
    }
    let frame = TheoryFrame::new(truth, cfg, n)?;
    let counts = frame.counts(t)?;
    let mu = &frame.mu;
    let k = t.k();
    let k_star = truth.k();
    let est = labels(t);
    let tru = &frame.true_labels;
    let n0 = frame.limits.n0;

    // noise sums per region
    let mut eps_est = vec![0.0; k + 1];
    let mut eps_true = vec![0.0; k_star + 1];
    let mut eps_corner = 0.0;
    for i in 0..n {
        for j in i..n {
            let e = y.get(i, j) - frame.model.value(i, j);
            if frame.in_corner(i, j) {
                eps_corner += e;
                continue;
            }
            let a = if est[i] == est[j] { est[i] + 1 } else { 0 };
            let b = if tru[i] == tru[j] { tru[i] + 1 } else { 0 };
            eps_est[a] += e;
            eps_true[b] += e;
        }
    }

    let scale = 2.0 / (n * (n + 1)) as f64;
    let corner_count = (n0 * n0) as f64;
    let corner_mean_eps = eps_corner / corner_count;
    let g00 = counts.row_sums[0] as f64;
    let g00_true = counts.col_sums[0] as f64;

    // E[mean of Y over D_k] for k >= 1
    let block_means: Vec<f64> = (1..=k)
        .map(|kk| {
            let row = &counts.counts[kk];
            row.iter().zip(mu).map(|(&c, &m)| c as f64 * m).sum::<f64>()
                / counts.row_sums[kk] as f64
        })
        .collect();

    let vn_blocks = scale
        * ((1..=k_star)
            .map(|l| eps_true[l].powi(2) / counts.col_sums[l] as f64)
            .sum::<f64>()
            - (1..=k)
                .map(|kk| eps_est[kk].powi(2) / counts.row_sums[kk] as f64)
                .sum::<f64>());
    let vn_base = scale * corner_mean_eps.powi(2) * (g00 - g00_true);
    let wn_blocks = 2.0
        * scale
        * ((1..=k_star).map(|l| eps_true[l] * mu[l]).sum::<f64>()
            - (1..=k)
                .map(|kk| eps_est[kk] * block_means[kk - 1])
                .sum::<f64>());
    let wn_base = 2.0 * scale * truth.mu0 * (eps_true[0] - eps_est[0]);
    let base_bias: f64 = counts.counts[0]
        .iter()
        .zip(mu)
        .map(|(&c, &m)| c as f64 * (m - truth.mu0))
        .sum();
    let zn = 2.0 * scale * corner_mean_eps * ((eps_true[0] - eps_est[0]) - base_bias);

    let bn_base = scale
        * counts.counts[0]
            .iter()
            .zip(mu)
            .map(|(&c, &m)| c as f64 * (m - truth.mu0).powi(2))
            .sum::<f64>();
    let bn = bn_from_counts(&counts, mu, n);
    let bn_blocks = bn - bn_base;

    let q_t = criterion_value(y, &frame.cfg, t)?;
    let q_star = criterion_value(y, &frame.cfg, frame.truth_boundaries())?;
    let jn = scale * (q_t - q_star);

    Ok(TheoryDecomposition {
        bn,
        vn: vn_blocks + vn_base,
        wn: wn_blocks + wn_base,
        zn,
        jn,
        bn_blocks,
        bn_base,
        vn_blocks,
        vn_base,
        wn_blocks,
        wn_base,
        lambda_inf: truth.lambda_inf(),
        lambda_bar: truth.lambda_bar(),
        delta_tau: truth.delta_tau(),
    })
}

/// Uniform draw among admissible `k`-block segmentations none of whose blocks
/// reach the corner, by rejection. `None` if the family is empty or no
/// corner-free member turned up in 10 000 draws.
pub fn sample_corner_free(
    limits: &SegLimits,
    k: usize,
    rng: &mut SeededRng,
) -> Option<Segmentation> {
    let family = Family {
        n: limits.n,
        k,
        min_len: limits.min_len,
        max_len: limits.max_len,
    };
    let sampler = UniformSampler::new(family)?;
    (0..10_000)
        .map(|_| sampler.sample(rng))
        .find(|t| t.blocks().all(|(a, b)| !limits.block_meets_corner(a, b)))
}

/// Outcome of [`decomposition_suite`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionSummary {
    pub pairs: usize,
    pub max_relative_residual: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Tolerance on `|B + V + W + Z - J| / max(1, |J|)`.
pub const DECOMPOSITION_TOLERANCE: f64 = 1e-8;

/// Checks the decomposition on `pairs` (matrix, candidate) pairs: pair `p`
/// simulates with seed `seed + p` and draws a corner-free candidate whose
/// block count cycles through the feasible values in `[2, K* + 3]`.
pub fn decomposition_suite(
    truth: &GroundTruth,
    cfg: &SegConfig,
    n: usize,
    pairs: usize,
    seed: u64,
) -> Result<DecompositionSummary> {
    let frame = TheoryFrame::new(truth, cfg, n)?;
    let limits = frame.limits;
    let ks: Vec<usize> = (2..=truth.k() + 3)
        .filter(|&k| limits.feasible(k))
        .collect();
    if ks.is_empty() {
        return Err(Error::Config(format!(
            "no feasible K in [2, {}]",
            truth.k() + 3
        )));
    }
    let mut rng = SeededRng::new(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut worst = 0.0f64;
    for p in 0..pairs {
        let spec = SimSpec {
            n,
            truth: truth.clone(),
            seed: seed.wrapping_add(p as u64),
            noise: NoiseModel::Gaussian,
        };
        let sim = generate(&spec, cfg)?;
        let k = ks[p % ks.len()];
        let Some(t) = sample_corner_free(&limits, k, &mut rng) else {
            continue;
        };
        let d = random_terms(&t, &sim.matrix, truth, cfg)?;
        worst = worst.max(d.relative_residual());
    }
    Ok(DecompositionSummary {
        pairs,
        max_relative_residual: worst,
        tolerance: DECOMPOSITION_TOLERANCE,
        holds: worst <= DECOMPOSITION_TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn thirds(sigma: f64) -> GroundTruth {
        GroundTruth {
            tau: vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0],
            mu: vec![1.0, 1.0, 1.0],
            mu0: 0.0,
            sigma,
            omega: 0.0,
        }
    }

    fn uneven(sigma: f64) -> GroundTruth {
        GroundTruth {
            tau: vec![0.0, 0.2, 0.45, 0.7, 1.0],
            mu: vec![1.5, -0.5, 2.0, 0.7],
            mu0: 0.3,
            sigma,
            omega: 0.0,
        }
    }

    fn seg(b: &[usize]) -> Segmentation {
        Segmentation::new(b.to_vec()).unwrap()
    }

    fn random_t(rng: &mut SeededRng, limits: &SegLimits, k: usize) -> Segmentation {
        sample_corner_free(limits, k, rng).unwrap()
    }

    /// `B_n` written out with expectations: cell means, block-mean
    /// expectations and the corner expectation, no counts.
    fn bn_by_definition(t: &Segmentation, frame: &TheoryFrame) -> f64 {
        let n = frame.n();
        let m = frame.mean_model();
        let n0 = frame.limits().n0;
        let corner = |i: usize, j: usize| i < n0 && j >= n - n0;
        let mut corner_sum = 0.0;
        for i in 0..n0 {
            for j in n - n0..n {
                corner_sum += m.value(i, j);
            }
        }
        let corner_mean = corner_sum / (n0 * n0) as f64;
        let mut kd = 0.0;
        for (a, b) in t.blocks() {
            let mut s = 0.0;
            let mut c = 0.0;
            for i in a..b {
                for j in i..b {
                    s += m.value(i, j);
                    c += 1.0;
                }
            }
            let mean = s / c;
            for i in a..b {
                for j in i..b {
                    kd += (m.value(i, j) - mean).powi(2);
                }
            }
        }
        let mut k0 = 0.0;
        for i in 0..n {
            for j in i..n {
                if t.block_of(i) != t.block_of(j) && !corner(i, j) {
                    k0 += (m.value(i, j) - corner_mean).powi(2);
                }
            }
        }
        2.0 / (n * (n + 1)) as f64 * (kd + k0)
    }

    #[test]
    fn counts_at_truth_are_diagonal() {
        let truth = uneven(1.0);
        let cfg = SegConfig::default();
        let n = 40;
        let frame = TheoryFrame::new(&truth, &cfg, n).unwrap();
        let t = frame.truth_boundaries().clone();
        let c = frame.counts(&t).unwrap();
        for (k, (a, b)) in t.blocks().enumerate() {
            let len = (b - a) as u64;
            assert_eq!(c.counts[k + 1][k + 1], len * (len + 1) / 2);
        }
        for k in 0..c.counts.len() {
            for l in 0..c.counts[k].len() {
                if k != l {
                    assert_eq!(c.counts[k][l], 0, "({k},{l})");
                }
            }
        }
        assert_eq!(frame.bn(&t).unwrap(), 0.0);
    }

    #[test]
    fn sixteen_by_sixteen_sums() {
        // n = 16 with four true blocks, as in the introductory illustration
        let truth = GroundTruth {
            tau: vec![0.0, 0.375, 0.625, 0.75, 1.0],
            mu: vec![1.0, 2.0, 3.0, 4.0],
            mu0: 0.0,
            sigma: 0.0,
            omega: 0.0,
        };
        let cfg = SegConfig::default();
        let t = seg(&[0, 2, 9, 13, 16]);
        let c = intersection_counts(&t, &truth, &cfg, 16).unwrap();
        let n0 = 4u64;
        assert_eq!(c.total(), 16 * 17 / 2 - n0 * n0);
        // direct cardinalities
        let tri = |l: u64| l * (l + 1) / 2;
        assert_eq!(&c.row_sums[1..], &[tri(2), tri(7), tri(4), tri(3)]);
        assert_eq!(&c.col_sums[1..], &[tri(6), tri(4), tri(2), tri(4)]);
        assert_eq!(
            c.row_sums[0],
            c.total() - c.row_sums[1..].iter().sum::<u64>()
        );
        // D_2 = [2,9) meets D*_1 = [0,6) in rows/cols 2..6: 4*5/2 cells
        assert_eq!(c.counts[2][1], 10);
    }

    #[test]
    fn total_count_invariant() {
        let truth = uneven(1.0);
        let cfg = SegConfig::default();
        let frame = TheoryFrame::new(&truth, &cfg, 40).unwrap();
        let mut rng = SeededRng::new(4);
        for r in 0..100 {
            let t = random_t(&mut rng, frame.limits(), 2 + r % 6);
            let c = frame.counts(&t).unwrap();
            assert_eq!(c.total(), 40 * 41 / 2 - 100);
            for (k, (a, b)) in t.blocks().enumerate() {
                let len = (b - a) as u64;
                assert_eq!(c.row_sums[k + 1], len * (len + 1) / 2);
            }
        }
    }

    #[test]
    fn corner_overlap_rejected() {
        let cfg = SegConfig::default();
        // n = 20: n0 = 5, block [4, 16) reaches cell (4, 15)
        let t = seg(&[0, 4, 16, 20]);
        assert!(matches!(
            bn_term(&t, &thirds(1.0), &cfg, 20),
            Err(Error::CornerOverlap { a: 4, b: 16 })
        ));
    }

    #[test]
    fn bn_matches_definition() {
        let cfg = SegConfig::default();
        for (truth, n) in [(thirds(0.0), 30), (uneven(0.0), 40)] {
            let frame = TheoryFrame::new(&truth, &cfg, n).unwrap();
            let mut rng = SeededRng::new(n as u64);
            for r in 0..50 {
                let t = random_t(&mut rng, frame.limits(), 2 + r % 5);
                let fast = frame.bn(&t).unwrap();
                let slow = bn_by_definition(&t, &frame);
                assert!(fast >= 0.0);
                assert!(
                    (fast - slow).abs() <= 1e-10 * slow.abs().max(1e-300),
                    "{fast} vs {slow}"
                );
            }
        }
    }

    #[test]
    fn merged_blocks_lower_bound() {
        let truth = uneven(0.0);
        let cfg = SegConfig::default();
        let frame = TheoryFrame::new(&truth, &cfg, 40).unwrap();
        // truth (0, 8, 18, 28, 40); merge the first two blocks
        let t = seg(&[0, 18, 28, 40]);
        let bound = truth.lambda_inf().powi(2) * truth.delta_tau().powi(4) / 64.0;
        assert!(frame.bn(&t).unwrap() >= bound);
    }

    fn spec(truth: GroundTruth, n: usize, seed: u64) -> SimSpec {
        SimSpec {
            n,
            truth,
            seed,
            noise: NoiseModel::Gaussian,
        }
    }

    #[test]
    fn noiseless_terms_vanish() {
        let cfg = SegConfig::default();
        let truth = uneven(0.0);
        let sim = generate(&spec(truth.clone(), 40, 1), &cfg).unwrap();
        let frame = TheoryFrame::new(&truth, &cfg, 40).unwrap();
        let mut rng = SeededRng::new(2);
        for r in 0..20 {
            let t = random_t(&mut rng, frame.limits(), 2 + r % 5);
            let d = random_terms(&t, &sim.matrix, &truth, &cfg).unwrap();
            assert_eq!((d.vn, d.wn, d.zn), (0.0, 0.0, 0.0));
            assert!(
                (d.jn - d.bn).abs() <= 1e-12 * d.bn.max(1.0),
                "{} vs {}",
                d.jn,
                d.bn
            );
        }
    }

    #[test]
    fn truth_gap_is_zero() {
        let cfg = SegConfig::default();
        let truth = uneven(1.0);
        let sim = generate(&spec(truth.clone(), 40, 3), &cfg).unwrap();
        let d = random_terms(&sim.truth_boundaries, &sim.matrix, &truth, &cfg).unwrap();
        assert_eq!(d.jn, 0.0);
        assert_eq!(d.bn, 0.0);
        assert!((d.vn + d.wn + d.zn).abs() <= 1e-8);
    }

    #[test]
    fn decomposition_identity() {
        let cfg = SegConfig::default();
        for (i, n) in [20usize, 40].into_iter().enumerate() {
            for sigma in [0.5, 1.0, 4.0] {
                let truth = uneven(sigma);
                let frame = TheoryFrame::new(&truth, &cfg, n).unwrap();
                let mut rng = SeededRng::new(90 + i as u64);
                for seed in 0..10 {
                    let sim = generate(&spec(truth.clone(), n, seed), &cfg).unwrap();
                    let t = random_t(&mut rng, frame.limits(), 2 + seed as usize % 6);
                    let d = random_terms(&t, &sim.matrix, &truth, &cfg).unwrap();
                    assert!(d.relative_residual() <= 1e-8, "{d:?}");
                }
            }
        }
    }

    #[test]
    fn suite_reports_identity() {
        let s = decomposition_suite(&uneven(1.0), &SegConfig::default(), 20, 12, 5).unwrap();
        assert!(s.holds, "{s:?}");
        assert_eq!(s.pairs, 12);
    }

    #[test]
    fn random_terms_preconditions() {
        let cfg = SegConfig::default();
        let mut truth = uneven(1.0);
        let sim = generate(&spec(truth.clone(), 40, 0), &cfg).unwrap();
        let t = sim.truth_boundaries.clone();
        let other = generate(&spec(truth.clone(), 20, 0), &cfg).unwrap();
        assert!(matches!(
            random_terms(&t, &other.matrix, &truth, &cfg),
            Err(Error::Dimension(_))
        ));
        truth.omega = 0.5;
        assert!(matches!(
            random_terms(&t, &sim.matrix, &truth, &cfg),
            Err(Error::Precondition(_))
        ));
    }
}
