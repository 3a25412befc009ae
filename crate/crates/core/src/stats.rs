// SPDX-License-Identifier: MIT OR Apache-2.0

//! Summed-area tables over the observation matrix.
//!
//! For a symmetric matrix the upper-triangle sum over a diagonal block
//! `[a, b)` is `(rect[a..b, a..b] + diag[a..b]) / 2`, so every block query is
//! O(1) after an O(n^2) build.

use crate::error::{Error, Result};
use crate::model::{ObservationMatrix, SegConfig, SegLimits, Segmentation};

/// Sums over the upper triangle of one diagonal block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriSum {
    pub sum: f64,
    pub sq_sum: f64,
    pub count: usize,
}

#[derive(Clone, Debug)]
pub struct PrefixStats {
    n: usize,
    limits: SegLimits,
    /// `(n+1) x (n+1)` prefix sums of `Y`, row-major.
    s: Vec<f64>,
    /// Same for `Y^2`.
    s2: Vec<f64>,
    /// Prefix sums of the diagonal.
    d: Vec<f64>,
    d2: Vec<f64>,
    m01: f64,
    g01_count: usize,
    c0: f64,
}

impl PrefixStats {
    pub fn build(y: &ObservationMatrix, cfg: &SegConfig) -> Result<Self> {
        let limits = cfg.limits(y.n())?;
        Ok(Self::with_limits(y, limits))
    }

    pub fn with_limits(y: &ObservationMatrix, limits: SegLimits) -> Self {
        let n = y.n();
        assert_eq!(n, limits.n, "limits derived for a different side length");
        let w = n + 1;
        let mut s = vec![0.0; w * w];
        let mut s2 = vec![0.0; w * w];
        let mut d = vec![0.0; w];
        let mut d2 = vec![0.0; w];
        for r in 0..n {
            let row = y.row(r);
            let (mut acc, mut acc2) = (0.0, 0.0);
            for (c, &v) in row.iter().enumerate() {
                acc += v;
                acc2 += v * v;
                s[(r + 1) * w + c + 1] = s[r * w + c + 1] + acc;
                s2[(r + 1) * w + c + 1] = s2[r * w + c + 1] + acc2;
            }
            let v = row[r];
            d[r + 1] = d[r] + v;
            d2[r + 1] = d2[r] + v * v;
        }

        let n0 = limits.n0;
        let mut corner = 0.0;
        for i in 0..n0 {
            corner += y.row(i)[n - n0..].iter().sum::<f64>();
        }
        let g01_count = n0 * n0;
        let m01 = corner / g01_count as f64;

        let mut stats = Self {
            n,
            limits,
            s,
            s2,
            d,
            d2,
            m01,
            g01_count,
            c0: 0.0,
        };
        let total = stats.tri_unchecked(0, n);
        stats.c0 = (total.sq_sum - 2.0 * m01 * total.sum + m01 * m01 * total.count as f64).max(0.0);
        stats
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn limits(&self) -> &SegLimits {
        &self.limits
    }

    /// Mean of `Y` over the top-right `n0 x n0` corner.
    pub fn m01(&self) -> f64 {
        self.m01
    }

    pub fn g01_count(&self) -> usize {
        self.g01_count
    }

    /// `sum over the upper triangle of (Y - m01)^2`.
    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Sum of `Y` over rows `[r0, r1)` and columns `[c0, c1)`.
    pub fn rect_sum(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> f64 {
        rect(&self.s, self.n + 1, r0, r1, c0, c1)
    }

    pub fn tri_sum(&self, a: usize, b: usize) -> Result<TriSum> {
        self.check(a, b)?;
        Ok(self.tri_unchecked(a, b))
    }

    /// Additive cost of block `[a, b)`: its within-block sum of squares minus
    /// its contribution to the baseline term, equal to
    /// `-count * (mean - m01)^2`. The criterion is `c0 + sum of costs`.
    pub fn segment_cost(&self, a: usize, b: usize) -> Result<f64> {
        self.check(a, b)?;
        Ok(self.cost_unchecked(a, b))
    }

    /// `Q_n^K(t)` evaluated through the prefix tables.
    pub fn criterion(&self, t: &Segmentation) -> Result<f64> {
        if t.n() != self.n {
            return Err(Error::Dimension(format!(
                "segmentation covers {} positions, matrix has {}",
                t.n(),
                self.n
            )));
        }
        Ok(self.c0
            + t.blocks()
                .map(|(a, b)| self.cost_unchecked(a, b))
                .sum::<f64>())
    }

    #[inline]
    pub(crate) fn tri_unchecked(&self, a: usize, b: usize) -> TriSum {
        let w = self.n + 1;
        let len = b - a;
        TriSum {
            sum: 0.5 * (rect(&self.s, w, a, b, a, b) + self.d[b] - self.d[a]),
            sq_sum: 0.5 * (rect(&self.s2, w, a, b, a, b) + self.d2[b] - self.d2[a]),
            count: len * (len + 1) / 2,
        }
    }

    #[inline]
    pub(crate) fn cost_unchecked(&self, a: usize, b: usize) -> f64 {
        let w = self.n + 1;
        let len = b - a;
        let count = (len * (len + 1) / 2) as f64;
        let sum = 0.5 * (rect(&self.s, w, a, b, a, b) + self.d[b] - self.d[a]);
        let dev = sum - self.m01 * count;
        -dev * dev / count
    }

    fn check(&self, a: usize, b: usize) -> Result<()> {
        if a < b && b <= self.n {
            Ok(())
        } else {
            Err(Error::IndexOrder { a, b, n: self.n })
        }
    }
}

#[inline]
fn rect(table: &[f64], w: usize, r0: usize, r1: usize, c0: usize, c1: usize) -> f64 {
    table[r1 * w + c1] - table[r0 * w + c1] - table[r1 * w + c0] + table[r0 * w + c0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_symmetric, Rng};

    fn naive_tri(y: &ObservationMatrix, a: usize, b: usize) -> (f64, f64, usize) {
        let (mut s, mut s2, mut c) = (0.0, 0.0, 0);
        for i in a..b {
            for j in i..b {
                let v = y.get(i, j);
                s += v;
                s2 += v * v;
                c += 1;
            }
        }
        (s, s2, c)
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn constant_matrix() {
        let y = ObservationMatrix::from_upper_fn(8, |_, _| 1.0).unwrap();
        let st = PrefixStats::build(&y, &SegConfig::default()).unwrap();
        assert_eq!(st.m01(), 1.0);
        assert_eq!(st.c0(), 0.0);
        assert_eq!(st.g01_count(), 4);
        let t = st.tri_sum(0, 4).unwrap();
        assert_eq!((t.sum, t.sq_sum, t.count), (10.0, 10.0, 10));
        for a in 0..8 {
            for b in a + 1..=8 {
                assert_eq!(st.segment_cost(a, b).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn corner_mean_of_index_sum() {
        let y = ObservationMatrix::from_upper_fn(8, |i, j| (i + j) as f64).unwrap();
        let st = PrefixStats::build(&y, &SegConfig::default()).unwrap();
        // cells (0,6), (0,7), (1,6), (1,7)
        assert_eq!(st.m01(), 7.0);
    }

    #[test]
    fn zero_matrix() {
        let y = ObservationMatrix::from_upper_fn(9, |_, _| 0.0).unwrap();
        let st = PrefixStats::build(&y, &SegConfig::default()).unwrap();
        assert_eq!((st.m01(), st.c0()), (0.0, 0.0));
        assert!(st.s.iter().chain(&st.s2).chain(&st.d).all(|&v| v == 0.0));
    }

    #[test]
    fn single_cell() {
        let y = ObservationMatrix::from_upper_fn(8, |i, j| (i * 10 + j) as f64).unwrap();
        let st = PrefixStats::build(&y, &SegConfig::default()).unwrap();
        let t = st.tri_sum(3, 4).unwrap();
        assert_eq!((t.sum, t.sq_sum, t.count), (33.0, 1089.0, 1));
    }

    #[test]
    fn index_order_errors() {
        let y = ObservationMatrix::from_upper_fn(8, |_, _| 0.0).unwrap();
        let st = PrefixStats::build(&y, &SegConfig::default()).unwrap();
        assert!(matches!(st.tri_sum(4, 4), Err(Error::IndexOrder { .. })));
        assert!(matches!(
            st.segment_cost(5, 3),
            Err(Error::IndexOrder { .. })
        ));
        assert!(matches!(st.tri_sum(0, 9), Err(Error::IndexOrder { .. })));
    }

    #[test]
    fn block_against_zero_baseline() {
        // ones on [0,4), zero elsewhere, corner mean zero
        let y = ObservationMatrix::from_upper_fn(12, |i, j| if j < 4 && i < 4 { 1.0 } else { 0.0 })
            .unwrap();
        let st = PrefixStats::build(&y, &SegConfig::default()).unwrap();
        assert_eq!(st.m01(), 0.0);
        assert_eq!(st.segment_cost(0, 4).unwrap(), -10.0);
    }

    #[test]
    fn integer_matrices_exact() {
        let mut rng = Rng::new(11);
        for _ in 0..20 {
            let y =
                ObservationMatrix::from_upper_fn(13, |_, _| (rng.below(21) as f64) - 10.0).unwrap();
            let st = PrefixStats::build(&y, &SegConfig::default()).unwrap();
            for a in 0..13 {
                for b in a + 1..=13 {
                    let t = st.tri_sum(a, b).unwrap();
                    assert_eq!((t.sum, t.sq_sum, t.count), naive_tri(&y, a, b));
                }
            }
        }
    }

    #[test]
    fn real_matrices_close() {
        for seed in 0..20 {
            let y = random_symmetric(10, seed);
            let st = PrefixStats::build(&y, &SegConfig::default()).unwrap();
            for a in 0..10 {
                for b in a + 1..=10 {
                    let t = st.tri_sum(a, b).unwrap();
                    let (s, s2, c) = naive_tri(&y, a, b);
                    assert!(close(t.sum, s, 1e-12), "{} vs {s}", t.sum);
                    assert!(close(t.sq_sum, s2, 1e-12));
                    assert_eq!(t.count, c);
                }
            }
        }
    }

    #[test]
    fn cost_matches_bracket_form() {
        for seed in 0..10 {
            let y = random_symmetric(14, 100 + seed);
            let st = PrefixStats::build(&y, &SegConfig::default()).unwrap();
            for a in 0..14 {
                for b in a + 1..=14 {
                    let t = st.tri_sum(a, b).unwrap();
                    let c = t.count as f64;
                    let sse = t.sq_sum - t.sum * t.sum / c;
                    let base = t.sq_sum - 2.0 * st.m01() * t.sum + st.m01() * st.m01() * c;
                    let g = st.segment_cost(a, b).unwrap();
                    assert!(close(g, sse - base, 1e-10), "{g} vs {}", sse - base);
                }
            }
        }
    }

    #[test]
    fn corner_mean_invariant_under_corner_preserving_permutation() {
        // Swapping rows/columns 0 and 1 permutes corner cells among themselves.
        let y = random_symmetric(12, 5);
        let n = 12;
        let perm = |i: usize| match i {
            0 => 1,
            1 => 0,
            10 => 11,
            11 => 10,
            other => other,
        };
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                v[i * n + j] = y.get(perm(i), perm(j));
            }
        }
        let z = ObservationMatrix::new(n, v, false).unwrap();
        let a = PrefixStats::build(&y, &SegConfig::default()).unwrap();
        let b = PrefixStats::build(&z, &SegConfig::default()).unwrap();
        assert!(close(a.m01(), b.m01(), 1e-14));
    }
}
