// SPDX-License-Identifier: MIT OR Apache-2.0

use crate::model::ObservationMatrix;
pub(crate) use crate::random::SeededRng as Rng;

/// Symmetric matrix with i.i.d. standard normal upper triangle.
pub(crate) fn random_symmetric(n: usize, seed: u64) -> ObservationMatrix {
    let mut rng = Rng::new(seed);
    ObservationMatrix::from_upper_fn(n, |_, _| rng.standard_normal()).unwrap()
}
