//! Helpers shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigrecon_core::{signature, Group64, Path64, Tensor64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform coefficients in `[-scale, scale]` with the given level-0 value.
pub fn random_tensor(rng: &mut ChaCha8Rng, dim: usize, depth: usize, scale: f64, level0: f64) -> Tensor64 {
    let mut t = Tensor64::zeros(dim, depth).unwrap();
    for c in t.coeffs_mut().iter_mut() {
        *c = rng.random_range(-scale..scale);
    }
    t.coeffs_mut()[0] = level0;
    t
}

pub fn random_vector(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-scale..scale)).collect()
}

/// Piecewise-linear path with `segments` random increments.
pub fn random_path(rng: &mut ChaCha8Rng, dim: usize, segments: usize) -> Path64 {
    let mut points = vec![vec![0.0; dim]];
    let mut times = vec![0.0];
    for k in 0..segments {
        let step = random_vector(rng, dim, 1.0);
        let next = points[k].iter().zip(&step).map(|(x, s)| x + s).collect();
        points.push(next);
        times.push(times[k] + rng.random_range(0.1..1.0));
    }
    Path64::new(times, points).unwrap()
}

pub fn random_group(rng: &mut ChaCha8Rng, dim: usize, depth: usize) -> Group64 {
    let path = random_path(rng, dim, 4);
    signature::signature_of_path(&path, depth).unwrap()
}

/// Central-difference gradient of `f` over the flat coefficients of `x`,
/// skipping level 0.
pub fn fd_gradient(x: &Tensor64, step: f64, f: impl Fn(&Tensor64) -> f64) -> Tensor64 {
    let mut out = Tensor64::zeros(x.dim(), x.depth()).unwrap();
    for j in 1..x.len() {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus.coeffs_mut()[j] += step;
        minus.coeffs_mut()[j] -= step;
        out.coeffs_mut()[j] = (f(&plus) - f(&minus)) / (2.0 * step);
    }
    out
}

/// `|a − b| / max(|b|, floor)` in the Euclidean norm.
pub fn relative_error(a: &Tensor64, b: &Tensor64, floor: f64) -> f64 {
    a.try_sub(b).unwrap().norm() / b.norm().max(floor)
}
