// SPDX-License-Identifier: MIT OR Apache-2.0

//! Counting, enumeration and uniform sampling of boundary vectors whose
//! segment lengths lie in `[min_len, max_len]`.

use crate::model::Segmentation;
use crate::random::SeededRng;

/// Length constraints of a segmentation family over `[0, n)` with `k` blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Family {
    pub n: usize,
    pub k: usize,
    pub min_len: usize,
    pub max_len: usize,
}

impl Family {
    fn fits(&self, remaining: usize, parts: usize) -> bool {
        parts * self.min_len <= remaining && remaining <= parts * self.max_len
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0 || !self.fits(self.n, self.k)
    }

    /// Number of members, saturating at `u128::MAX`.
    pub fn count(&self) -> u128 {
        if self.k == 0 {
            return 0;
        }
        // ways[j] for the current number of parts
        let mut ways = vec![0u128; self.n + 1];
        ways[0] = 1;
        for _ in 0..self.k {
            let mut next = vec![0u128; self.n + 1];
            for (j, slot) in next.iter_mut().enumerate().skip(self.min_len) {
                let lo = j.saturating_sub(self.max_len);
                let hi = j - self.min_len;
                *slot = ways[lo..=hi]
                    .iter()
                    .fold(0u128, |acc, &w| acc.saturating_add(w));
            }
            ways = next;
        }
        ways[self.n]
    }

    /// Candidate positions for the first interior boundary `b_1`, ascending.
    pub fn first_boundaries(&self) -> Vec<usize> {
        if self.is_empty() {
            return Vec::new();
        }
        if self.k == 1 {
            return vec![self.n];
        }
        (self.min_len..=self.max_len.min(self.n))
            .filter(|&b1| self.fits(self.n - b1, self.k - 1))
            .collect()
    }

    /// Visits every member in lexicographic order.
    pub fn for_each(&self, mut f: impl FnMut(&[usize])) {
        for b1 in self.first_boundaries() {
            self.for_each_with_first(b1, &mut f);
        }
    }

    /// Visits, in lexicographic order, every member whose first interior
    /// boundary is `b1`.
    pub fn for_each_with_first(&self, b1: usize, mut f: impl FnMut(&[usize])) {
        if self.is_empty() || b1 < self.min_len || b1 > self.max_len {
            return;
        }
        let mut buf = Vec::with_capacity(self.k + 1);
        buf.push(0);
        buf.push(b1);
        if self.k == 1 {
            if b1 == self.n {
                f(&buf);
            }
            return;
        }
        if !self.fits(self.n - b1, self.k - 1) {
            return;
        }
        self.recurse(&mut buf, &mut f);
    }

    fn recurse(&self, buf: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        let placed = buf.len() - 1;
        let last = *buf.last().unwrap();
        if placed == self.k {
            if last == self.n {
                f(buf);
            }
            return;
        }
        let parts_left = self.k - placed;
        if parts_left == 1 {
            let len = self.n - last;
            if (self.min_len..=self.max_len).contains(&len) {
                buf.push(self.n);
                f(buf);
                buf.pop();
            }
            return;
        }
        for len in self.min_len..=self.max_len {
            let next = last + len;
            if next >= self.n {
                break;
            }
            if !self.fits(self.n - next, parts_left - 1) {
                continue;
            }
            buf.push(next);
            self.recurse(buf, f);
            buf.pop();
        }
    }
}

/// Draws members of a [`Family`] uniformly at random.
#[derive(Clone, Debug)]
pub struct UniformSampler {
    family: Family,
    /// `ways[p][j]`: number of ways to tile `[0, j)` with `p` parts, as f64.
    ways: Vec<Vec<f64>>,
}

impl UniformSampler {
    pub fn new(family: Family) -> Option<Self> {
        if family.is_empty() {
            return None;
        }
        let n = family.n;
        let mut ways = vec![vec![0.0; n + 1]; family.k + 1];
        ways[0][0] = 1.0;
        for p in 1..=family.k {
            for j in family.min_len..=n {
                let lo = j.saturating_sub(family.max_len);
                let hi = j - family.min_len;
                ways[p][j] = ways[p - 1][lo..=hi].iter().sum();
            }
        }
        Some(Self { family, ways })
    }

    /// Number of members as a float (exact for moderate sizes).
    pub fn size(&self) -> f64 {
        self.ways[self.family.k][self.family.n]
    }

    pub fn sample(&self, rng: &mut SeededRng) -> Segmentation {
        let fam = self.family;
        let mut rev = vec![fam.n];
        let mut j = fam.n;
        for p in (1..=fam.k).rev() {
            let lo = j.saturating_sub(fam.max_len);
            let hi = j - fam.min_len;
            let total: f64 = self.ways[p - 1][lo..=hi].iter().sum();
            let mut target = rng.uniform() * total;
            let mut pick = hi;
            for i in lo..=hi {
                let w = self.ways[p - 1][i];
                if w == 0.0 {
                    continue;
                }
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
                pick = i;
            }
            rev.push(pick);
            j = pick;
        }
        debug_assert_eq!(j, 0);
        rev.reverse();
        Segmentation::new(rev).expect("sampler yields valid boundaries")
    }
}
