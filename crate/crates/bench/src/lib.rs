//! Seeded inputs shared by the benchmarks.

use std::f64::consts::{FRAC_PI_2, TAU};

use ident_core::{Complex64, ComplexMatrix, ParticleEnsemble, SpatialMode, Statistics};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// n×n matrix with entries uniform in the unit square.
pub fn random_matrix(n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ComplexMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .expect("finite entries")
}

/// `n` bosons, half spin-up, in random detector modes.
pub fn random_ensemble(n: usize, seed: u64) -> ParticleEnsemble {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = (0..n)
        .map(|_| SpatialMode::new(rng.random_range(0.0..FRAC_PI_2), rng.random_range(0.0..TAU)).expect("angles in range"))
        .collect();
    ParticleEnsemble::new(n / 2, modes, Statistics::Boson).expect("valid ensemble")
}
