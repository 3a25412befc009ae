// SPDX-License-Identifier: MIT OR Apache-2.0

//! Domain types shared by every other module.
//!
//! Index convention: blocks are 0-based half-open ranges `[b_{k-1}, b_k)` over
//! the matrix side. A block covers the upper-triangle cells `(i, j)` with
//! `b_{k-1} <= i <= j < b_k`, diagonal included. The 1-based boundaries used
//! in the literature are `t_k = b_k + 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest side length accepted for an observation matrix.
pub const MIN_SIDE: usize = 8;

/// Absorbs representation error when a real-valued bound such as `c * n`
/// lands within rounding distance of an integer.
const ROUNDING_SLACK: f64 = 1e-9;

pub(crate) fn floor_index(x: f64) -> usize {
    (x + ROUNDING_SLACK).floor().max(0.0) as usize
}

pub(crate) fn ceil_index(x: f64) -> usize {
    (x - ROUNDING_SLACK).ceil().max(0.0) as usize
}

/// Dense symmetric `n x n` matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationMatrix {
    n: usize,
    values: Vec<f64>,
}

impl ObservationMatrix {
    /// Builds a matrix from row-major values, rejecting non-finite entries and
    /// asymmetry beyond `1e-9 * max(1, |y_ij|)`. With `symmetrize` set the
    /// matrix is replaced by `(Y + Y^T) / 2` instead of being rejected.
    pub fn new(n: usize, mut values: Vec<f64>, symmetrize: bool) -> Result<Self> {
        if n < MIN_SIDE {
            return Err(Error::TooSmall { n, min: MIN_SIDE });
        }
        if values.len() != n * n {
            return Err(Error::Dimension(format!(
                "expected {} values for a {n}x{n} matrix, got {}",
                n * n,
                values.len()
            )));
        }
        for (idx, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::BadCell {
                    row: idx / n,
                    col: idx % n,
                    text: v.to_string(),
                });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let upper = values[i * n + j];
                let lower = values[j * n + i];
                if symmetrize {
                    let avg = 0.5 * (upper + lower);
                    values[i * n + j] = avg;
                    values[j * n + i] = avg;
                } else if (upper - lower).abs() > 1e-9 * upper.abs().max(1.0) {
                    return Err(Error::Asymmetric {
                        row: i,
                        col: j,
                        upper,
                        lower,
                    });
                }
            }
        }
        Ok(Self { n, values })
    }

    /// Builds a matrix from a function of the upper-triangle coordinates
    /// `(i, j)` with `i <= j`; the lower triangle is mirrored.
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self::new(n, values, false)
    }

    pub(crate) fn from_symmetric_unchecked(n: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n * n);
        Self { n, values }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

/// Ordered boundary vector `0 = b_0 < b_1 < ... < b_K = n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Segmentation {
    boundaries: Vec<usize>,
}

impl Segmentation {
    pub fn new(boundaries: Vec<usize>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::Segmentation(format!(
                "need at least two boundaries, got {boundaries:?}"
            )));
        }
        if boundaries[0] != 0 {
            return Err(Error::Segmentation(format!(
                "first boundary must be 0, got {boundaries:?}"
            )));
        }
        if boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Segmentation(format!(
                "boundaries must be strictly increasing: {boundaries:?}"
            )));
        }
        Ok(Self { boundaries })
    }

    /// Converts 1-based boundaries `1 = t_0 < ... < t_K = n + 1`.
    pub fn from_one_based(t: &[usize]) -> Result<Self> {
        if t.contains(&0) {
            return Err(Error::Segmentation(format!(
                "1-based boundaries must be positive: {t:?}"
            )));
        }
        Self::new(t.iter().map(|&v| v - 1).collect())
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.boundaries.iter().map(|&b| b + 1).collect()
    }

    /// Number of blocks `K`.
    pub fn k(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// Side length covered, i.e. the last boundary.
    pub fn n(&self) -> usize {
        *self.boundaries.last().expect("non-empty by construction")
    }

    /// Iterates the half-open blocks `[b_{k-1}, b_k)`.
    pub fn blocks(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.boundaries.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn is_admissible(&self, limits: &SegLimits) -> bool {
        self.n() == limits.n
            && self
                .blocks()
                .all(|(a, b)| (limits.min_len..=limits.max_len).contains(&(b - a)))
    }

    /// Index of the block containing position `i`.
    pub fn block_of(&self, i: usize) -> usize {
        self.boundaries.partition_point(|&b| b <= i) - 1
    }
}

impl TryFrom<Vec<usize>> for Segmentation {
    type Error = Error;

    fn try_from(value: Vec<usize>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Segmentation> for Vec<usize> {
    fn from(value: Segmentation) -> Self {
        value.boundaries
    }
}

/// User-facing segmentation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegConfig {
    /// Maximal block-size fraction, in `[1/2, 1)`.
    pub c: f64,
    /// Minimal block length.
    pub min_len: usize,
    /// Largest number of blocks tried.
    pub k_max: usize,
    /// Average `(Y + Y^T) / 2` on load instead of rejecting asymmetric input.
    pub symmetrize: bool,
}

impl Default for SegConfig {
    fn default() -> Self {
        Self {
            c: 0.75,
            min_len: 2,
            k_max: 20,
            symmetrize: false,
        }
    }
}

/// Integer constants derived from a [`SegConfig`] for a given side length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SegLimits {
    pub n: usize,
    pub min_len: usize,
    /// Largest block length strictly below `c * n`.
    pub max_len: usize,
    /// Side of the top-right corner used to estimate the baseline mean.
    pub n0: usize,
    /// Smallest `K` with `K * max_len >= n`.
    pub k_lo: usize,
    /// Largest `K` with `K * min_len <= n`.
    pub k_hi: usize,
    pub k_max: usize,
}

impl SegLimits {
    /// Whether `k` blocks can tile `[0, n)` within the length bounds.
    pub fn feasible(&self, k: usize) -> bool {
        k >= 1 && k * self.min_len <= self.n && self.n <= k * self.max_len
    }

    /// Feasible block counts that are also `<= k_max`.
    pub fn searched_k(&self) -> std::ops::RangeInclusive<usize> {
        self.k_lo..=self.k_hi.min(self.k_max)
    }

    /// Same limits with a different minimal length.
    pub fn with_min_len(&self, min_len: usize) -> Result<Self> {
        derive_limits(self.n, self.max_len, self.n0, min_len, self.k_max)
    }

    /// Whether the block `[a, b)` contains a cell of the top-right corner
    /// `{(i, j) : i < n0, j >= n - n0}`.
    pub fn block_meets_corner(&self, a: usize, b: usize) -> bool {
        a < self.n0 && b > self.n - self.n0
    }
}

impl SegConfig {
    /// Validates the configuration against side length `n` and derives the
    /// integer constants.
    pub fn limits(&self, n: usize) -> Result<SegLimits> {
        if !(0.5..1.0).contains(&self.c) {
            return Err(Error::Config(format!(
                "c must lie in [1/2, 1), got {}",
                self.c
            )));
        }
        if self.min_len == 0 {
            return Err(Error::Config("min_len must be positive".into()));
        }
        if self.k_max == 0 {
            return Err(Error::Config("k_max must be positive".into()));
        }
        let nf = n as f64;
        let max_len = ceil_index(self.c * nf).saturating_sub(1);
        let n0 = floor_index((1.0 - self.c) * nf);
        derive_limits(n, max_len, n0, self.min_len, self.k_max)
    }
}

fn derive_limits(
    n: usize,
    max_len: usize,
    n0: usize,
    min_len: usize,
    k_max: usize,
) -> Result<SegLimits> {
    if n0 < 1 {
        return Err(Error::Config(format!(
            "corner side n0 = floor((1 - c) n) must be at least 1 (n = {n})"
        )));
    }
    if 2 * n0 > n {
        return Err(Error::Config(format!(
            "corner side n0 = {n0} must satisfy 2 n0 <= n = {n}"
        )));
    }
    if min_len > max_len {
        return Err(Error::Config(format!(
            "min_len = {min_len} exceeds the maximal block length {max_len}"
        )));
    }
    let k_lo = n.div_ceil(max_len);
    let k_hi = n / min_len;
    if k_lo > k_hi {
        return Err(Error::Config(format!(
            "no feasible number of blocks for n = {n}, lengths in [{min_len}, {max_len}]"
        )));
    }
    if k_max < k_lo {
        return Err(Error::Config(format!(
            "k_max = {k_max} is below the smallest feasible number of blocks {k_lo}"
        )));
    }
    Ok(SegLimits {
        n,
        min_len,
        max_len,
        n0,
        k_lo,
        k_hi,
        k_max,
    })
}

/// Parameters of the block-diagonal mean model and its noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    /// Break fractions `0 = tau_0 < ... < tau_K = 1`.
    pub tau: Vec<f64>,
    /// Block means, one per block.
    pub mu: Vec<f64>,
    /// Baseline mean outside the blocks.
    pub mu0: f64,
    /// Gaussian noise standard deviation.
    pub sigma: f64,
    /// Mean shift applied to the top-right `n0 x n0` corner.
    #[serde(default)]
    pub omega: f64,
}

impl GroundTruth {
    /// Number of true blocks.
    pub fn k(&self) -> usize {
        self.tau.len().saturating_sub(1)
    }

    /// Structural checks that do not depend on `n`.
    pub fn validate_shape(&self) -> Result<()> {
        let tau = &self.tau;
        if tau.len() < 2 {
            return Err(Error::Truth("tau needs at least two entries".into()));
        }
        if tau[0] != 0.0 || *tau.last().unwrap() != 1.0 {
            return Err(Error::Truth(format!(
                "tau must start at 0 and end at 1: {tau:?}"
            )));
        }
        if tau.iter().any(|t| !t.is_finite()) || tau.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Truth(format!(
                "tau must be strictly increasing: {tau:?}"
            )));
        }
        if self.mu.len() != self.k() {
            return Err(Error::Truth(format!(
                "{} block means given for {} blocks",
                self.mu.len(),
                self.k()
            )));
        }
        if self
            .mu
            .iter()
            .chain([&self.mu0, &self.omega])
            .any(|v| !v.is_finite())
        {
            return Err(Error::Truth("means must be finite".into()));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::Truth(format!(
                "sigma must be finite and nonnegative, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    /// True boundaries `b*_k = floor(n tau_k)`.
    pub fn boundaries(&self, n: usize) -> Result<Segmentation> {
        self.validate_shape()?;
        let b: Vec<usize> = self
            .tau
            .iter()
            .map(|&t| floor_index(n as f64 * t))
            .collect();
        Segmentation::new(b).map_err(|_| {
            Error::Truth(format!(
                "break fractions collapse at n = {n}: {:?}",
                self.tau
            ))
        })
    }

    /// Validates the truth for side `n` under `limits` and returns its
    /// boundaries: widths at most `c`, true blocks admissible.
    pub fn admissible_boundaries(&self, limits: &SegLimits, c: f64) -> Result<Segmentation> {
        let truth = self.boundaries(limits.n)?;
        if self
            .tau
            .windows(2)
            .any(|w| w[1] - w[0] > c + ROUNDING_SLACK)
        {
            return Err(Error::Truth(format!(
                "a break-fraction gap exceeds c = {c}: {:?}",
                self.tau
            )));
        }
        if let Some((a, b)) = truth
            .blocks()
            .find(|&(a, b)| !(limits.min_len..=limits.max_len).contains(&(b - a)))
        {
            return Err(Error::Truth(format!(
                "true block [{a}, {b}) of length {} is outside [{}, {}] at n = {}",
                b - a,
                limits.min_len,
                limits.max_len,
                limits.n
            )));
        }
        // the corner must lie in the true baseline region
        if let Some((a, b)) = truth
            .blocks()
            .find(|&(a, b)| limits.block_meets_corner(a, b))
        {
            return Err(Error::Truth(format!(
                "true block [{a}, {b}) reaches the top-right {0}x{0} corner",
                limits.n0
            )));
        }
        Ok(truth)
    }

    /// `min_k |mu_k - mu_0|`.
    pub fn lambda_inf(&self) -> f64 {
        self.mu
            .iter()
            .map(|m| (m - self.mu0).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// `max_{k != l} |mu_k - mu_l|` over the block means and the baseline.
    pub fn lambda_bar(&self) -> f64 {
        let all: Vec<f64> = std::iter::once(self.mu0)
            .chain(self.mu.iter().copied())
            .collect();
        let mut best = 0.0f64;
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                best = best.max((a - b).abs());
            }
        }
        best
    }

    /// Smallest break-fraction gap.
    pub fn delta_tau(&self) -> f64 {
        self.tau
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Optimal segmentation for one block count.
#[derive(Clone, Debug, PartialEq)]
pub struct KSolution {
    pub segmentation: Segmentation,
    /// `Q_n^K` at the optimum, baseline constant included.
    pub criterion: f64,
}

/// One row of the `K` sweep; `solution` is `None` when `K` is infeasible.
#[derive(Clone, Debug, PartialEq)]
pub struct KFit {
    pub k: usize,
    pub solution: Option<KSolution>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentationResult {
    pub n: usize,
    /// Rows for `K = 1..=k_max`.
    pub per_k: Vec<KFit>,
    pub k_hat: usize,
    pub boundaries_hat: Segmentation,
    /// Mean of the top-right corner.
    pub m01: f64,
}

impl SegmentationResult {
    pub fn fit(&self, k: usize) -> Option<&KSolution> {
        self.per_k
            .iter()
            .find(|f| f.k == k)
            .and_then(|f| f.solution.as_ref())
    }
}
