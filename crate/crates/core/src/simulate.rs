// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic block-diagonal matrices.
//!
//! Noise is drawn for the upper triangle only, row by row (`i` ascending, then
//! `j = i..n`), from a [`SeededRng`] seeded with the spec seed, and mirrored
//! to the lower triangle. Replicate `r` of an experiment uses seed
//! `seed + r` (wrapping).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GroundTruth, ObservationMatrix, SegConfig, SegLimits, Segmentation};
use crate::random::SeededRng;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModel {
    #[default]
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub n: usize,
    pub truth: GroundTruth,
    pub seed: u64,
    #[serde(default)]
    pub noise: NoiseModel,
}

impl SimSpec {
    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// Block means of the model, including the optional corner shift.
#[derive(Clone, Debug)]
pub struct MeanModel {
    truth_boundaries: Segmentation,
    mu: Vec<f64>,
    mu0: f64,
    omega: f64,
    n0: usize,
}

impl MeanModel {
    pub fn new(truth: &GroundTruth, limits: &SegLimits, c: f64) -> Result<Self> {
        Ok(Self {
            truth_boundaries: truth.admissible_boundaries(limits, c)?,
            mu: truth.mu.clone(),
            mu0: truth.mu0,
            omega: truth.omega,
            n0: limits.n0,
        })
    }

    pub fn truth_boundaries(&self) -> &Segmentation {
        &self.truth_boundaries
    }

    pub fn n(&self) -> usize {
        self.truth_boundaries.n()
    }

    /// `E[Y_ij]` for `i <= j`.
    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        let t = &self.truth_boundaries;
        let bi = t.block_of(i);
        if bi == t.block_of(j) {
            self.mu[bi]
        } else if i < self.n0 && j >= self.n() - self.n0 {
            self.mu0 + self.omega
        } else {
            self.mu0
        }
    }
}

#[derive(Clone, Debug)]
pub struct Simulated {
    pub matrix: ObservationMatrix,
    pub truth_boundaries: Segmentation,
}

/// Draws `Y = E[Y] + sigma * eps` for `spec`, with the corner geometry of
/// `cfg`. Same spec, same matrix, bit for bit.
pub fn generate(spec: &SimSpec, cfg: &SegConfig) -> Result<Simulated> {
    let limits = cfg.limits(spec.n)?;
    let model = MeanModel::new(&spec.truth, &limits, cfg.c)?;
    let n = spec.n;
    let sigma = spec.truth.sigma;
    let mut rng = SeededRng::new(spec.seed);
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let noise = match spec.noise {
                NoiseModel::Gaussian if sigma > 0.0 => sigma * rng.standard_normal(),
                NoiseModel::Gaussian => 0.0,
            };
            let v = model.value(i, j) + noise;
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    Ok(Simulated {
        matrix: ObservationMatrix::from_symmetric_unchecked(n, values),
        truth_boundaries: model.truth_boundaries,
    })
}

/// Sample mean and unbiased variance of the generated noise over the upper
/// triangle, pooled across `replicates` seeds `spec.seed + r`.
pub fn empirical_noise_moments(
    spec: &SimSpec,
    cfg: &SegConfig,
    replicates: usize,
) -> Result<(f64, f64)> {
    if replicates == 0 {
        return Err(Error::Precondition("replicates must be positive".into()));
    }
    let limits = cfg.limits(spec.n)?;
    let model = MeanModel::new(&spec.truth, &limits, cfg.c)?;
    let n = spec.n;
    let (mut count, mut mean, mut m2) = (0u64, 0.0f64, 0.0f64);
    for r in 0..replicates {
        let sim = generate(&spec.with_seed(spec.seed.wrapping_add(r as u64)), cfg)?;
        for i in 0..n {
            for j in i..n {
                let e = sim.matrix.get(i, j) - model.value(i, j);
                count += 1;
                let delta = e - mean;
                mean += delta / count as f64;
                m2 += delta * (e - mean);
            }
        }
    }
    let var = if count > 1 {
        m2 / (count - 1) as f64
    } else {
        0.0
    };
    Ok((mean, var))
}
