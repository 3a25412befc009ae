// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Segmentation;

/// The two one-sided parts of the Hausdorff distance between boundary sets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HausdorffPair {
    /// Worst distance from a true boundary to the nearest estimated one.
    pub h1: usize,
    /// Worst distance from an estimated boundary to the nearest true one.
    pub h2: usize,
}

impl HausdorffPair {
    pub fn full(&self) -> usize {
        self.h1.max(self.h2)
    }
}

fn directed(from: &[usize], to: &[usize]) -> usize {
    from.iter()
        .map(|&a| to.iter().map(|&b| a.abs_diff(b)).min().unwrap_or(0))
        .max()
        .unwrap_or(0)
}

/// Endpoints are part of both vectors and contribute zero.
pub fn hausdorff(t_true: &Segmentation, t_hat: &Segmentation) -> Result<HausdorffPair> {
    if t_true.n() != t_hat.n() {
        return Err(Error::Dimension(format!(
            "segmentations cover {} and {} positions",
            t_true.n(),
            t_hat.n()
        )));
    }
    Ok(HausdorffPair {
        h1: directed(t_true.boundaries(), t_hat.boundaries()),
        h2: directed(t_hat.boundaries(), t_true.boundaries()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seg(b: &[usize]) -> Segmentation {
        Segmentation::new(b.to_vec()).unwrap()
    }

    #[test]
    fn definition_examples() {
        let truth = seg(&[0, 5, 10]);
        assert_eq!(
            hausdorff(&truth, &truth).unwrap(),
            HausdorffPair { h1: 0, h2: 0 }
        );
        assert_eq!(
            hausdorff(&truth, &seg(&[0, 3, 5, 10])).unwrap(),
            HausdorffPair { h1: 0, h2: 2 }
        );
        assert_eq!(
            hausdorff(&truth, &seg(&[0, 4, 10])).unwrap(),
            HausdorffPair { h1: 1, h2: 1 }
        );
        assert!(hausdorff(&truth, &seg(&[0, 4, 11])).is_err());
    }

    fn arb_seg(n: usize) -> impl Strategy<Value = Segmentation> {
        proptest::collection::btree_set(1..n, 0..6).prop_map(move |s| {
            let mut b = vec![0];
            b.extend(s);
            b.push(n);
            Segmentation::new(b).unwrap()
        })
    }

    proptest! {
        #[test]
        fn swap_exchanges_parts(a in arb_seg(40), b in arb_seg(40)) {
            let ab = hausdorff(&a, &b).unwrap();
            let ba = hausdorff(&b, &a).unwrap();
            prop_assert_eq!((ab.h1, ab.h2), (ba.h2, ba.h1));
            prop_assert_eq!(ab.h1 == 0 && ab.h2 == 0, a == b);
        }
    }
}
