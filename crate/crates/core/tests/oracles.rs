// SPDX-License-Identifier: MIT OR Apache-2.0

//! Fast paths against their naive counterparts on random inputs.

use blockseg::enumerate::{Family, UniformSampler};
use blockseg::eval::{hausdorff, random_terms, sample_corner_free};
use blockseg::random::SeededRng;
use blockseg::{
    brute_force_segment, criterion_value, generate, segment_for_k, select_k, GroundTruth,
    ObservationMatrix, PrefixStats, SegConfig, SimSpec,
};
use proptest::prelude::*;

fn matrix(n: usize, seed: u64) -> ObservationMatrix {
    let mut rng = SeededRng::new(seed);
    ObservationMatrix::from_upper_fn(n, |_, _| rng.standard_normal()).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dp_matches_enumeration(n in 8usize..14, k in 2usize..5, min_len in 1usize..3, seed: u64) {
        let cfg = SegConfig { k_max: k, min_len, ..SegConfig::default() };
        let y = matrix(n, seed);
        let stats = PrefixStats::build(&y, &cfg).unwrap();
        let dp = segment_for_k(&stats, k).unwrap();
        let bf = brute_force_segment(&y, &cfg, k).unwrap();
        prop_assert_eq!(dp.is_some(), bf.is_some());
        if let (Some(a), Some(b)) = (dp, bf) {
            prop_assert_eq!(a.segmentation, b.segmentation);
            prop_assert!(close(a.criterion, b.criterion));
        }
    }

    #[test]
    fn selected_k_minimises_over_per_k_optima(n in 8usize..13, seed: u64) {
        let cfg = SegConfig { k_max: 4, ..SegConfig::default() };
        let y = matrix(n, seed);
        let res = select_k(&PrefixStats::build(&y, &cfg).unwrap()).unwrap();
        let best = (1..=4)
            .filter_map(|k| brute_force_segment(&y, &cfg, k).unwrap().map(|s| (k, s.criterion)))
            .fold(None::<(usize, f64)>, |acc, (k, c)| match acc {
                Some((_, bc)) if bc <= c => acc,
                _ => Some((k, c)),
            })
            .unwrap();
        prop_assert!(close(res.fit(res.k_hat).unwrap().criterion, best.1));
    }

    #[test]
    fn additive_criterion_equals_naive(n in 8usize..61, pick: u64, seed: u64) {
        let cfg = SegConfig { k_max: n, ..SegConfig::default() };
        let limits = cfg.limits(n).unwrap();
        let ks: Vec<usize> = limits.searched_k().collect();
        let k = ks[(pick % ks.len() as u64) as usize];
        let fam = Family { n, k, min_len: limits.min_len, max_len: limits.max_len };
        let mut rng = SeededRng::new(seed);
        let t = UniformSampler::new(fam).unwrap().sample(&mut rng);
        let y = matrix(n, seed ^ 1);
        let stats = PrefixStats::build(&y, &cfg).unwrap();
        prop_assert!(close(stats.criterion(&t).unwrap(), criterion_value(&y, &cfg, &t).unwrap()));
    }

    #[test]
    fn decomposition_is_exact(sigma in 0.1f64..5.0, n in 20usize..41, seed: u64) {
        let truth = GroundTruth {
            tau: vec![0.0, 0.3, 0.65, 1.0],
            mu: vec![1.0, -0.5, 2.0],
            mu0: 0.25,
            sigma,
            omega: 0.0,
        };
        let cfg = SegConfig::default();
        let y = generate(&SimSpec { n, truth: truth.clone(), seed, noise: Default::default() }, &cfg)
            .unwrap()
            .matrix;
        let limits = cfg.limits(n).unwrap();
        let mut rng = SeededRng::new(seed);
        let k = 2 + (seed % 4) as usize;
        if let Some(t) = sample_corner_free(&limits, k, &mut rng) {
            let d = random_terms(&t, &y, &truth, &cfg).unwrap();
            prop_assert!(d.relative_residual() <= 1e-8, "{:?}", d);
        }
    }

    #[test]
    fn noiseless_truth_is_recovered(
        cuts in proptest::collection::btree_set(1usize..20, 2..5),
        means in proptest::collection::vec(0.5f64..3.0, 5),
    ) {
        // Break fractions on a grid of 1/20, blocks no longer than 0.6.
        let mut tau = vec![0.0];
        tau.extend(cuts.iter().map(|&c| c as f64 / 20.0));
        tau.push(1.0);
        prop_assume!(tau.windows(2).all(|w| w[1] - w[0] <= 0.6 + 1e-12));
        let k = tau.len() - 1;
        let truth = GroundTruth { tau, mu: means[..k].to_vec(), mu0: 0.0, sigma: 0.0, omega: 0.0 };
        let cfg = SegConfig { k_max: 8, ..SegConfig::default() };
        let sim = generate(&SimSpec { n: 100, truth, seed: 0, noise: Default::default() }, &cfg).unwrap();
        let res = select_k(&PrefixStats::build(&sim.matrix, &cfg).unwrap()).unwrap();
        prop_assert_eq!(res.k_hat, k);
        prop_assert_eq!(&res.boundaries_hat, &sim.truth_boundaries);
        let h = hausdorff(&sim.truth_boundaries, &res.boundaries_hat).unwrap();
        prop_assert_eq!((h.h1, h.h2), (0, 0));
    }
}
