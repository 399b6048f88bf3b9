//! Test-path generators with reproducible seeding.
//!
//! Randomness comes from ChaCha20 (`rand_chacha::ChaCha20Rng::seed_from_u64`),
//! a counter-based stream cipher whose output is fixed by its specification,
//! so a seed yields the same path on every platform. Standard normals are
//! drawn with `rand_distr::StandardNormal` in step-major, coordinate-minor
//! order, one draw per coordinate per step.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::signature::PiecewisePath;

/// Parameters of `dX = κ(θ − X)dt + σ dW`, one entry per coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct OuParams<S> {
    pub theta: Vec<S>,
    pub kappa: Vec<S>,
    pub sigma: Vec<S>,
    pub x0: Vec<S>,
    pub steps: usize,
    pub horizon: S,
    pub seed: u64,
}

impl<S: Scalar> OuParams<S> {
    /// Independent coordinates sharing `θ, κ, σ`, starting at 0, 100 steps on `[0, 1]`.
    pub fn isotropic(dim: usize, theta: S, kappa: S, sigma: S, seed: u64) -> Self {
        Self {
            theta: vec![theta; dim],
            kappa: vec![kappa; dim],
            sigma: vec![sigma; dim],
            x0: vec![S::zero(); dim],
            steps: 100,
            horizon: S::one(),
            seed,
        }
    }

    pub fn with_grid(mut self, steps: usize, horizon: S) -> Self {
        self.steps = steps;
        self.horizon = horizon;
        self
    }

    /// Overrides the parameters of one coordinate.
    pub fn with_coordinate(mut self, i: usize, theta: S, kappa: S, sigma: S) -> Self {
        self.theta[i] = theta;
        self.kappa[i] = kappa;
        self.sigma[i] = sigma;
        self
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::param("dim", "must be >= 1"));
        }
        if self.kappa.len() != d || self.sigma.len() != d || self.x0.len() != d {
            return Err(Error::param("dim", "per-coordinate parameter lengths differ"));
        }
        if self.steps < 1 {
            return Err(Error::param("steps", "must be >= 1"));
        }
        if !(self.horizon > S::zero()) || !self.horizon.is_finite() {
            return Err(Error::param("horizon", format!("must be positive, got {}", self.horizon)));
        }
        if self.kappa.iter().any(|&k| !(k >= S::zero()) || !k.is_finite()) {
            return Err(Error::param("kappa", "must be finite and >= 0"));
        }
        if self.sigma.iter().any(|&s| !(s >= S::zero()) || !s.is_finite()) {
            return Err(Error::param("sigma", "must be finite and >= 0"));
        }
        if self.theta.iter().chain(&self.x0).any(|x| !x.is_finite()) {
            return Err(Error::param("theta", "must be finite"));
        }
        Ok(())
    }
}

/// Euler–Maruyama path `X_{k+1} = X_k + κ(θ − X_k)Δt + σ√Δt·Z_k`, returned
/// as `X − x0` so that it starts at the origin.
pub fn simulate_ou<S: Scalar>(params: &OuParams<S>) -> Result<PiecewisePath<S>> {
    params.validate()?;
    let d = params.dim();
    let n = params.steps;
    let dt = params.horizon / S::from_usize_lossy(n);
    let sqrt_dt = dt.sqrt();
    let mut rng = ChaCha20Rng::seed_from_u64(params.seed);

    let mut x = params.x0.clone();
    let mut times = Vec::with_capacity(n + 1);
    let mut points = Vec::with_capacity(n + 1);
    times.push(S::zero());
    points.push(vec![S::zero(); d]);
    for k in 1..=n {
        for i in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            x[i] = x[i] + params.kappa[i] * (params.theta[i] - x[i]) * dt + params.sigma[i] * sqrt_dt * S::lit(z);
        }
        times.push(params.horizon * S::from_usize_lossy(k) / S::from_usize_lossy(n));
        points.push(x.iter().zip(&params.x0).map(|(&xi, &x0)| xi - x0).collect());
    }
    PiecewisePath::new(times, points)
}

/// Scaled Brownian motion: [`simulate_ou`] with `κ = 0`.
pub fn simulate_bm<S: Scalar>(dim: usize, sigma: S, steps: usize, horizon: S, seed: u64) -> Result<PiecewisePath<S>> {
    let params = OuParams::isotropic(dim, S::zero(), S::zero(), sigma, seed).with_grid(steps, horizon);
    simulate_ou(&params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_zero_noise() {
        let p = OuParams::<f64>::isotropic(2, 0.0, 0.5, 0.0, 1);
        let path = simulate_ou(&p).unwrap();
        assert_eq!(path.len(), 101);
        assert!(path.points().iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn deterministic_recursion_and_closed_form() {
        let p = OuParams::<f64>::isotropic(1, 5.0, 0.5, 0.0, 3);
        let path = simulate_ou(&p).unwrap();
        let mut x = 0.0;
        for k in 0..100 {
            x += 0.5 * (5.0 - x) * 0.01;
            assert_eq!(path.points()[k + 1][0], x);
        }
        let exact = 5.0 * (1.0 - (-0.5f64).exp());
        assert!((x - exact).abs() <= 1e-2);
        assert!((exact - 1.96735).abs() < 1e-5);
    }

    #[test]
    fn seed_determinism() {
        let p = OuParams::<f64>::isotropic(3, 5.0, 0.5, 1.0, 42);
        let a = simulate_ou(&p).unwrap();
        let b = simulate_ou(&p).unwrap();
        assert_eq!(a, b);
        let c = simulate_ou(&OuParams { seed: 43, ..p }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn brownian_matches_ou_without_drift() {
        let bm = simulate_bm::<f64>(2, 0.7, 50, 2.0, 9).unwrap();
        let ou = simulate_ou(&OuParams::isotropic(2, 3.0, 0.0, 0.7, 9).with_grid(50, 2.0)).unwrap();
        assert_eq!(bm, ou);
        assert!(simulate_bm::<f64>(2, 0.0, 10, 1.0, 1)
            .unwrap()
            .points()
            .iter()
            .flatten()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn brownian_increment_variance() {
        let (sigma, steps, horizon) = (1.3, 10_000, 2.0);
        let path = simulate_bm::<f64>(1, sigma, steps, horizon, 2024).unwrap();
        let incs: Vec<f64> = path.increments().map(|v| v[0]).collect();
        let n = incs.len() as f64;
        let mean = incs.iter().sum::<f64>() / n;
        let var = incs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let expected = sigma * sigma * horizon / steps as f64;
        // standard error of the sample variance of a normal sample
        let se = expected * (2.0 / (n - 1.0)).sqrt();
        assert!((var - expected).abs() <= 3.0 * se, "var {var} vs {expected}");
        assert!(mean.abs() <= 3.0 * (expected / n).sqrt());
    }

    #[test]
    fn per_coordinate_override() {
        let p = OuParams::<f64>::isotropic(2, 5.0, 0.5, 0.0, 1).with_coordinate(1, 0.0, 0.5, 0.0);
        let path = simulate_ou(&p).unwrap();
        assert!(path.endpoint()[0] > 1.9);
        assert_eq!(path.endpoint()[1], 0.0);
    }

    #[test]
    fn nonzero_start_is_shifted() {
        let mut p = OuParams::<f64>::isotropic(1, 0.0, 1.0, 0.0, 1);
        p.x0 = vec![2.0];
        let path = simulate_ou(&p).unwrap();
        assert_eq!(path.points()[0], vec![0.0]);
        assert!(path.endpoint()[0] < 0.0);
    }

    #[test]
    fn invalid_params() {
        let p = OuParams::<f64>::isotropic(2, 5.0, 0.5, 1.0, 1);
        assert!(simulate_ou(&OuParams { steps: 0, ..p.clone() }).is_err());
        assert!(simulate_ou(&p.clone().with_coordinate(0, 1.0, -1.0, 1.0)).is_err());
        assert!(simulate_ou(&p.clone().with_coordinate(0, 1.0, 1.0, -1.0)).is_err());
        assert!(simulate_ou(&OuParams::<f64>::isotropic(0, 5.0, 0.5, 1.0, 1)).is_err());
    }
}
