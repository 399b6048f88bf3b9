//! Signatures of piecewise-linear paths and the controlled flow on the group.
//!
//! A control `a(t) ∈ R^d` drives `ξ̇ = Σ aᵢ Uᵢ(ξ)` with `Uᵢ(ξ) = ξ ⊗ eᵢ`.
//! Controls are piecewise constant on a uniform grid, so each step of the
//! flow is exactly `ξ ⊗ exp(a·dt)` by Chen's relation.

use crate::error::{Error, Result};
use crate::scalar::{norm2, Scalar};
use crate::tensor::{GroupElement, TruncatedTensor};

/// Sampled path `x: [0, T] → R^d` with `x(0) = 0`, linear between samples.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePath<S> {
    times: Vec<S>,
    points: Vec<Vec<S>>,
}

impl<S: Scalar> PiecewisePath<S> {
    pub fn new(times: Vec<S>, points: Vec<Vec<S>>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidPath("no samples".into()));
        }
        if times.len() != points.len() {
            return Err(Error::InvalidPath(format!(
                "{} times but {} points",
                times.len(),
                points.len()
            )));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::InvalidPath("zero-dimensional points".into()));
        }
        if times[0] != S::zero() {
            return Err(Error::InvalidPath(format!("first time is {}, expected 0", times[0])));
        }
        if points[0].iter().any(|&x| x != S::zero()) {
            return Err(Error::InvalidPath("path must start at the origin".into()));
        }
        for (k, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidPath(format!(
                    "sample {k} has dimension {}, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|x| !x.is_finite()) || !times[k].is_finite() {
                return Err(Error::InvalidPath(format!("sample {k} is not finite")));
            }
        }
        if let Some(k) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPath(format!(
                "times not strictly increasing at sample {}",
                k + 1
            )));
        }
        Ok(Self { times, points })
    }

    /// Uniform-time path through `points`, shifted so that it starts at the origin.
    pub fn from_points_uniform(points: Vec<Vec<S>>, horizon: S) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidPath("need at least two samples".into()));
        }
        let n = points.len() - 1;
        let origin = points[0].clone();
        let shifted = points
            .into_iter()
            .map(|p| p.iter().zip(&origin).map(|(&x, &o)| x - o).collect())
            .collect();
        let times = (0..=n)
            .map(|k| horizon * S::from_usize_lossy(k) / S::from_usize_lossy(n))
            .collect();
        Self::new(times, shifted)
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[S] {
        &self.times
    }

    pub fn points(&self) -> &[Vec<S>] {
        &self.points
    }

    pub fn horizon(&self) -> S {
        self.times[self.times.len() - 1]
    }

    pub fn endpoint(&self) -> &[S] {
        &self.points[self.points.len() - 1]
    }

    pub fn increments(&self) -> impl Iterator<Item = Vec<S>> + '_ {
        self.points
            .windows(2)
            .map(|w| w[1].iter().zip(&w[0]).map(|(&b, &a)| b - a).collect())
    }

    /// Polyline length `Σ |x(t_k) − x(t_{k−1})|₂`.
    pub fn length(&self) -> S {
        self.increments().map(|dx| norm2(&dx)).sum()
    }

    /// Restriction to samples `from..=to`, re-anchored at the origin and time zero.
    pub fn sub_path(&self, from: usize, to: usize) -> Result<Self> {
        if from >= to || to >= self.len() {
            return Err(Error::InvalidPath(format!("bad sample range {from}..={to}")));
        }
        let t0 = self.times[from];
        let x0 = &self.points[from];
        let times = self.times[from..=to].iter().map(|&t| t - t0).collect();
        let points = self.points[from..=to]
            .iter()
            .map(|p| p.iter().zip(x0).map(|(&x, &o)| x - o).collect())
            .collect();
        Self::new(times, points)
    }

    /// Linear interpolation at normalized parameter `s ∈ [0, 1]`.
    pub fn sample_normalized(&self, s: S) -> Vec<S> {
        let t = s.max(S::zero()).min(S::one()) * self.horizon();
        let k = match self.times.iter().position(|&tk| tk >= t) {
            Some(0) => return self.points[0].clone(),
            Some(k) => k,
            None => return self.endpoint().to_vec(),
        };
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        self.points[k - 1]
            .iter()
            .zip(&self.points[k])
            .map(|(&a, &b)| a + w * (b - a))
            .collect()
    }
}

/// Piecewise-constant controls on the uniform grid `t_k = k·T/D`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlPath<S> {
    horizon: S,
    values: Vec<Vec<S>>,
}

impl<S: Scalar> ControlPath<S> {
    pub fn new(horizon: S, values: Vec<Vec<S>>) -> Result<Self> {
        if !(horizon > S::zero()) || !horizon.is_finite() {
            return Err(Error::InvalidControls(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidControls("no grid intervals".into()));
        }
        let dim = values[0].len();
        if dim == 0 {
            return Err(Error::InvalidControls("zero-dimensional controls".into()));
        }
        for (k, v) in values.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::InvalidControls(format!(
                    "interval {k} has dimension {}, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidControls(format!("interval {k} is not finite")));
            }
        }
        Ok(Self { horizon, values })
    }

    pub fn constant(horizon: S, steps: usize, value: &[S]) -> Result<Self> {
        Self::new(horizon, vec![value.to_vec(); steps])
    }

    pub fn zeros(dim: usize, steps: usize, horizon: S) -> Result<Self> {
        Self::new(horizon, vec![vec![S::zero(); dim]; steps])
    }

    pub fn horizon(&self) -> S {
        self.horizon
    }

    /// Number of grid intervals `D`.
    pub fn steps(&self) -> usize {
        self.values.len()
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    /// Grid spacing `T/D`.
    pub fn step_size(&self) -> S {
        self.horizon / S::from_usize_lossy(self.steps())
    }

    pub fn time(&self, k: usize) -> S {
        self.horizon * S::from_usize_lossy(k) / S::from_usize_lossy(self.steps())
    }

    pub fn values(&self) -> &[Vec<S>] {
        &self.values
    }

    pub fn value(&self, k: usize) -> &[S] {
        &self.values[k]
    }

    pub fn speeds(&self) -> Vec<S> {
        self.values.iter().map(|v| norm2(v)).collect()
    }

    /// Same control values on a different horizon.
    pub fn with_horizon(&self, horizon: S) -> Result<Self> {
        Self::new(horizon, self.values.clone())
    }

    /// Resamples onto `steps` intervals over `horizon`, reading the control at
    /// the midpoint of each new interval in normalized time.
    pub fn resample(&self, horizon: S, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidControls("no grid intervals".into()));
        }
        let old = self.steps();
        let values = (0..steps)
            .map(|k| {
                let mid = (2 * k + 1) * old / (2 * steps);
                self.values[mid.min(old - 1)].clone()
            })
            .collect();
        Self::new(horizon, values)
    }

    /// Rescales every value to unit Euclidean norm. Zero values take the
    /// direction of the nearest preceding nonzero value, or `e₁` if none.
    pub fn normalized(&self) -> Self {
        let tiny = S::lit(1e-300).max(S::min_positive_value());
        let mut last: Option<Vec<S>> = None;
        let mut values = Vec::with_capacity(self.values.len());
        for v in &self.values {
            let n = norm2(v);
            let u = if n > tiny {
                v.iter().map(|&x| x / n).collect::<Vec<_>>()
            } else if let Some(prev) = &last {
                prev.clone()
            } else {
                let mut e = vec![S::zero(); v.len()];
                e[0] = S::one();
                e
            };
            last = Some(u.clone());
            values.push(u);
        }
        Self {
            horizon: self.horizon,
            values,
        }
    }
}

/// Grid-sampled state trajectory `ξ(t_k)`, `k = 0..=D`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignatureCurve<S> {
    horizon: S,
    states: Vec<GroupElement<S>>,
}

impl<S: Scalar> SignatureCurve<S> {
    pub(crate) fn from_states(horizon: S, states: Vec<GroupElement<S>>) -> Self {
        Self { horizon, states }
    }

    pub fn horizon(&self) -> S {
        self.horizon
    }

    pub fn states(&self) -> &[GroupElement<S>] {
        &self.states
    }

    pub fn state(&self, k: usize) -> &GroupElement<S> {
        &self.states[k]
    }

    pub fn endpoint(&self) -> &GroupElement<S> {
        &self.states[self.states.len() - 1]
    }

    /// Number of grid intervals.
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }
}

/// `Uᵢ(ξ) = ξ ⊗ eᵢ` for letter `i ∈ 0..d`.
pub fn vector_field<S: Scalar>(xi: &TruncatedTensor<S>, letter: usize) -> Result<TruncatedTensor<S>> {
    let d = xi.dim();
    if letter >= d {
        return Err(Error::LetterOutOfRange { letter, dim: d });
    }
    let mut a = vec![S::zero(); d];
    a[letter] = S::one();
    Ok(directional_field(xi, &a))
}

/// `Σᵢ aᵢ Uᵢ(ξ) = ξ ⊗ a`: level `k` entry of word `l·i` is `ξ_l aᵢ`.
pub fn directional_field<S: Scalar>(xi: &TruncatedTensor<S>, a: &[S]) -> TruncatedTensor<S> {
    let d = xi.dim();
    debug_assert_eq!(a.len(), d);
    let mut out = TruncatedTensor::zeros(d, xi.depth()).expect("shape of an existing tensor");
    for k in 1..=xi.depth() {
        let prefix = xi.level(k - 1).to_vec();
        let block = out.level_mut(k);
        for (p, &xl) in prefix.iter().enumerate() {
            for (i, &ai) in a.iter().enumerate() {
                block[p * d + i] = xl * ai;
            }
        }
    }
    out
}

/// Adjoint of [`directional_field`] in `a`: `bᵢ = ⟨λ, Uᵢ(ξ)⟩ = Σ_l λ_{l·i} ξ_l`.
pub fn field_pairing<S: Scalar>(lambda: &TruncatedTensor<S>, xi: &TruncatedTensor<S>) -> Vec<S> {
    let d = xi.dim();
    let mut b = vec![S::zero(); d];
    for k in 1..=xi.depth() {
        let prefix = xi.level(k - 1);
        let block = lambda.level(k);
        for (p, &xl) in prefix.iter().enumerate() {
            for (i, bi) in b.iter_mut().enumerate() {
                *bi += block[p * d + i] * xl;
            }
        }
    }
    b
}

/// Adjoint of `t ↦ t ⊗ a` restricted to levels below the depth:
/// `(C t)_j = Σᵢ t_{j·i} aᵢ` for `|j| < N`, zero at level `N`.
pub(crate) fn contract_last_letter<S: Scalar>(t: &TruncatedTensor<S>, a: &[S]) -> TruncatedTensor<S> {
    let d = t.dim();
    let mut out = TruncatedTensor::zeros(d, t.depth()).expect("shape of an existing tensor");
    for k in 0..t.depth() {
        let upper = t.level(k + 1).to_vec();
        let block = out.level_mut(k);
        for (p, slot) in block.iter_mut().enumerate() {
            *slot = upper[p * d..(p + 1) * d]
                .iter()
                .zip(a)
                .map(|(&u, &ai)| u * ai)
                .sum();
        }
    }
    out
}

/// Signature `⊗ₖ exp(Δxₖ)` of the piecewise-linear interpolation of `path`.
pub fn signature_of_path<S: Scalar>(path: &PiecewisePath<S>, depth: usize) -> Result<GroupElement<S>> {
    if path.len() < 2 {
        return Err(Error::InvalidPath("need at least two samples".into()));
    }
    let mut sig = GroupElement::unit(path.dim(), depth)?;
    for dx in path.increments() {
        sig = sig.mul_exp_vector(&dx);
    }
    sig.check_finite()?;
    Ok(sig)
}

/// One exact step of the flow: `ξ ⊗ exp(a·dt)`.
pub fn flow_step<S: Scalar>(xi: &GroupElement<S>, a: &[S], dt: S) -> Result<GroupElement<S>> {
    if !(dt > S::zero()) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    if a.len() != xi.dim() {
        return Err(Error::InvalidControls(format!(
            "control has dimension {}, state has {}",
            a.len(),
            xi.dim()
        )));
    }
    let v: Vec<S> = a.iter().map(|&x| x * dt).collect();
    Ok(xi.mul_exp_vector(&v))
}

/// State trajectory generated by `controls`, starting at the unit.
pub fn flow<S: Scalar>(controls: &ControlPath<S>, depth: usize) -> Result<SignatureCurve<S>> {
    let dt = controls.step_size();
    let mut states = Vec::with_capacity(controls.steps() + 1);
    states.push(GroupElement::unit(controls.dim(), depth)?);
    for a in controls.values() {
        let next = flow_step(&states[states.len() - 1], a, dt)?;
        states.push(next);
    }
    Ok(SignatureCurve::from_states(controls.horizon(), states))
}

/// Integrates `ẋ = a`, `x(0) = 0`, on the control grid.
pub fn path_from_controls<S: Scalar>(controls: &ControlPath<S>) -> PiecewisePath<S> {
    let dt = controls.step_size();
    let d = controls.dim();
    let mut points = Vec::with_capacity(controls.steps() + 1);
    let mut x = vec![S::zero(); d];
    points.push(x.clone());
    for a in controls.values() {
        for (xi, &ai) in x.iter_mut().zip(a) {
            *xi += ai * dt;
        }
        points.push(x.clone());
    }
    let times = (0..=controls.steps()).map(|k| controls.time(k)).collect();
    PiecewisePath::new(times, points).expect("controls are validated finite")
}

/// `(T/D) Σₖ |a(t_k)|₂`.
pub fn length<S: Scalar>(controls: &ControlPath<S>) -> S {
    controls.step_size() * controls.speeds().into_iter().sum::<S>()
}

/// `½ (T/D) Σₖ |a(t_k)|₂²`.
pub fn energy<S: Scalar>(controls: &ControlPath<S>) -> S {
    S::lit(0.5)
        * controls.step_size()
        * controls
            .values()
            .iter()
            .map(|v| v.iter().map(|&x| x * x).sum::<S>())
            .sum::<S>()
}
