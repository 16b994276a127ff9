#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sigkern::Sequence;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sequence of `n_points` points with iid uniform coordinates in `[-scale, scale]`.
pub fn uniform_sequence(rng: &mut impl Rng, n_points: usize, dim: usize, scale: f64) -> Sequence {
    let data = (0..n_points * dim)
        .map(|_| rng.random_range(-scale..=scale))
        .collect();
    Sequence::from_flat(dim, data).unwrap()
}

/// Gaussian random walk from the origin with per-step drift `drift` on every
/// coordinate and step standard deviation `sigma`.
pub fn random_walk(
    rng: &mut impl Rng,
    steps: usize,
    dim: usize,
    sigma: f64,
    drift: f64,
) -> Sequence {
    let mut data = vec![0.0; dim];
    for t in 0..steps {
        for k in 0..dim {
            let z: f64 = rng.sample(StandardNormal);
            let prev = data[t * dim + k];
            data.push(prev + drift + sigma * z);
        }
    }
    Sequence::from_flat(dim, data).unwrap()
}

pub fn rel_err(got: f64, expected: f64) -> f64 {
    if got == expected {
        0.0
    } else {
        (got - expected).abs() / expected.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn factorial(m: usize) -> f64 {
    (1..=m).map(|k| k as f64).product()
}

/// Per-level magnitude of the absolute terms, `Σ Π|∇| / (i! j!)`. Levels whose
/// terms cancel are compared against this scale instead of their own value.
pub fn level_scales(
    x: &Sequence,
    y: &Sequence,
    spec: &sigkern::StaticKernelSpec,
    level: usize,
) -> Vec<f64> {
    let nabla = sigkern::increment_matrix(spec, x, y).unwrap();
    let abs = sigkern::IncrementMatrix::from_values(
        nabla.rows(),
        nabla.cols(),
        nabla.values().iter().map(|v| v.abs()).collect(),
    );
    sigkern::dp::levels_from_increments(&abs, level)
        .values()
        .to_vec()
}

/// `|got - expected| / max(|expected|, scale)`.
pub fn scaled_err(got: f64, expected: f64, scale: f64) -> f64 {
    if got == expected {
        0.0
    } else {
        (got - expected).abs() / expected.abs().max(scale).max(f64::MIN_POSITIVE)
    }
}
