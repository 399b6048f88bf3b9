//! Iterative Pontryagin scheme with an augmented Hamiltonian.
//!
//! Each iteration
//! 1. solves the costate equation backward with implicit Euler steps, each
//!    resolved by fixed-point iteration;
//! 2. sweeps forward, choosing `a(t_k)` as the minimiser of
//!    `H(ξ(t_k), ω, p(t_k)) + C|ω − a_prev(t_k)|²` and advancing
//!    `ξ(t_{k+1}) = ξ(t_k) ⊗ exp(a(t_k)·T/D)` right away;
//! 3. keeps the candidate only if the objective strictly decreases, otherwise
//!    multiplies `C` by `c_grow` and retries from the previous controls.

use crate::cost::{self, control_coupling, hamiltonian_state_gradient, terminal_cost, CostParams, Mode};
use crate::error::{Error, Result};
use crate::scalar::{norm2, Scalar};
use crate::signature::{self, contract_last_letter, flow, flow_step, ControlPath, SignatureCurve};
use crate::tensor::{GroupElement, TruncatedTensor};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverParams<S> {
    /// Grid intervals `D`.
    pub steps: usize,
    /// Iteration cap `M`.
    pub max_iters: usize,
    /// Initial augmentation constant.
    pub c0: S,
    /// Multiplier applied to `C` after a rejected update.
    pub c_grow: S,
    /// Multiplier applied to `C` after an accepted update (1 keeps `C` fixed).
    pub c_shrink: S,
    pub c_min: S,
    /// The run stops once `C` exceeds this value.
    pub c_max: S,
    pub fp_iters: usize,
    pub fp_tol: S,
    /// Relative improvement below which an accepted step counts as stalled.
    pub stall_tol: S,
    /// Consecutive stalled accepted steps before stopping.
    pub stall_window: usize,
    /// Stop as soon as the objective is at or below this value.
    pub cost_floor: S,
    pub mode: Mode,
    pub gamma: S,
    pub horizon: S,
}

impl<S: Scalar> Default for SolverParams<S> {
    fn default() -> Self {
        Self {
            steps: 100,
            max_iters: 2000,
            c0: S::one(),
            c_grow: S::lit(2.0),
            c_shrink: S::lit(0.9),
            c_min: S::lit(1e-6),
            c_max: S::lit(1e15),
            fp_iters: 50,
            fp_tol: S::lit(1e-10),
            stall_tol: S::lit(1e-10),
            stall_window: 10,
            cost_floor: S::zero(),
            mode: Mode::Penalty,
            gamma: S::lit(1e3),
            horizon: S::one(),
        }
    }
}

impl<S: Scalar> SolverParams<S> {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: S| {
            if v > S::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive, got {v}")))
            }
        };
        if self.steps < 2 {
            return Err(Error::param("steps", format!("must be >= 2, got {}", self.steps)));
        }
        if self.max_iters < 1 {
            return Err(Error::param("max_iters", "must be >= 1"));
        }
        if self.fp_iters < 1 {
            return Err(Error::param("fp_iters", "must be >= 1"));
        }
        positive("c0", self.c0)?;
        positive("c_min", self.c_min)?;
        positive("fp_tol", self.fp_tol)?;
        positive("horizon", self.horizon)?;
        if !(self.c_max > self.c0) {
            return Err(Error::param("c_max", "must exceed c0"));
        }
        if !(self.c_grow > S::one()) {
            return Err(Error::param("c_grow", format!("must be > 1, got {}", self.c_grow)));
        }
        if !(self.c_shrink > S::zero() && self.c_shrink <= S::one()) {
            return Err(Error::param("c_shrink", format!("must lie in (0, 1], got {}", self.c_shrink)));
        }
        if !(self.stall_tol >= S::zero()) {
            return Err(Error::param("stall_tol", "must be >= 0"));
        }
        if !(self.cost_floor >= S::zero()) {
            return Err(Error::param("cost_floor", "must be >= 0"));
        }
        if !(self.gamma >= S::zero()) || !self.gamma.is_finite() {
            return Err(Error::param("gamma", format!("must be finite and >= 0, got {}", self.gamma)));
        }
        Ok(())
    }
}

/// Costate trajectory `p(t_k)`, `k = 0..=D`, with `p(t_D) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct CostateCurve<S> {
    horizon: S,
    costates: Vec<TruncatedTensor<S>>,
    max_change: S,
    max_fp_iterations: usize,
}

impl<S: Scalar> CostateCurve<S> {
    pub fn horizon(&self) -> S {
        self.horizon
    }

    pub fn costates(&self) -> &[TruncatedTensor<S>] {
        &self.costates
    }

    pub fn costate(&self, k: usize) -> &TruncatedTensor<S> {
        &self.costates[k]
    }

    pub fn steps(&self) -> usize {
        self.costates.len() - 1
    }

    /// Largest last fixed-point change over all nodes.
    pub fn max_change(&self) -> S {
        self.max_change
    }

    pub fn max_fp_iterations(&self) -> usize {
        self.max_fp_iterations
    }
}

/// Solves `p(t_k) = p(t_{k+1}) + (T/D)·∂H/∂ξ(ξ(t_k), a(t_k), p(t_k))` from
/// `p(t_D) = 0` down to `k = 0`.
pub fn costate_backward<S: Scalar>(
    states: &SignatureCurve<S>,
    controls: &ControlPath<S>,
    cost: &CostParams<S>,
    params: &SolverParams<S>,
) -> Result<CostateCurve<S>> {
    let steps = controls.steps();
    if states.steps() != steps {
        return Err(Error::InvalidControls(format!(
            "{} control intervals but {} state intervals",
            steps,
            states.steps()
        )));
    }
    let h = controls.step_size();
    let first = states.state(0);
    let zero = TruncatedTensor::zeros(first.dim(), first.depth())?;
    let mut costates = vec![zero.clone(); steps + 1];
    let mut max_change = S::zero();
    let mut max_fp_iterations = 0;

    for k in (0..steps).rev() {
        let xi = states.state(k);
        let a = controls.value(k);
        // ∂H/∂ξ is affine in p: G(p) = G(0) + C_a(p).
        let drift = hamiltonian_state_gradient(xi, a, &zero, cost)?;
        let next = costates[k + 1].clone();
        let mut current = next.clone();
        let mut change = S::infinity();
        let mut iterations = 0;
        while iterations < params.fp_iters {
            iterations += 1;
            let mut candidate = next.clone();
            candidate.axpy(h, &drift)?;
            candidate.axpy(h, &contract_last_letter(&current, a))?;
            candidate.coeffs_mut()[0] = S::zero();
            change = candidate.max_abs_diff(&current)?;
            current = candidate;
            if change <= params.fp_tol {
                break;
            }
        }
        if !(change <= params.fp_tol) {
            return Err(Error::NonContraction {
                node: k,
                change: change.as_f64(),
                iterations,
            });
        }
        max_change = max_change.max(change);
        max_fp_iterations = max_fp_iterations.max(iterations);
        costates[k] = current;
    }

    Ok(CostateCurve {
        horizon: controls.horizon(),
        costates,
        max_change,
        max_fp_iterations,
    })
}

/// Minimiser of the augmented Hamiltonian `H(ξ, ω, p) + C|ω − a_prev|²`.
///
/// Penalty mode: `ω = (2C·a_prev − b)/(1 + 2C)`. Variable-time mode restricts
/// `ω` to the unit sphere: `ω = (2C·a_prev − b)/|2C·a_prev − b|`, keeping
/// `a_prev` when the numerator vanishes.
pub fn control_update<S: Scalar>(
    xi: &GroupElement<S>,
    a_prev: &[S],
    p: &TruncatedTensor<S>,
    c: S,
    cost: &CostParams<S>,
) -> Result<Vec<S>> {
    let b = control_coupling(xi, p, cost)?;
    Ok(augmented_minimizer(&b, a_prev, c, cost.mode))
}

fn augmented_minimizer<S: Scalar>(b: &[S], a_prev: &[S], c: S, mode: Mode) -> Vec<S> {
    let two_c = c + c;
    let w: Vec<S> = a_prev.iter().zip(b).map(|(&a, &bi)| two_c * a - bi).collect();
    match mode {
        Mode::Penalty => {
            let denom = S::one() + two_c;
            w.into_iter().map(|x| x / denom).collect()
        }
        Mode::VariableTime => {
            let n = norm2(&w);
            if n < S::lit(1e-12) {
                a_prev.to_vec()
            } else {
                w.into_iter().map(|x| x / n).collect()
            }
        }
    }
}

/// Interleaved control/state sweep driven by the costates of the previous iterate.
pub fn forward_update<S: Scalar>(
    costates: &CostateCurve<S>,
    prev: &ControlPath<S>,
    c: S,
    cost: &CostParams<S>,
) -> Result<(ControlPath<S>, SignatureCurve<S>)> {
    let steps = prev.steps();
    if costates.steps() != steps {
        return Err(Error::InvalidControls(format!(
            "{} control intervals but {} costate intervals",
            steps,
            costates.steps()
        )));
    }
    let dt = prev.step_size();
    let target = &cost.target;
    let mut xi = GroupElement::unit(target.dim(), target.depth())?;
    let mut states = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity(steps);
    for k in 0..steps {
        let a = control_update(&xi, prev.value(k), costates.costate(k), c, cost)?;
        let next = flow_step(&xi, &a, dt)?;
        if !a.iter().all(|x| x.is_finite()) || !next.is_finite() {
            return Err(Error::Diverged { node: k });
        }
        states.push(xi);
        values.push(a);
        xi = next;
    }
    states.push(xi);
    let controls = ControlPath::new(prev.horizon(), values)?;
    Ok((controls, SignatureCurve::from_states(prev.horizon(), states)))
}

/// Penalty: `½∫|a|² + γ f(ξ(T), ḡ)`. Variable time: `f(ξ(T), ḡ)`.
pub fn objective<S: Scalar>(
    controls: &ControlPath<S>,
    states: &SignatureCurve<S>,
    cost: &CostParams<S>,
) -> Result<S> {
    let f = terminal_cost(states.endpoint(), &cost.target)?;
    Ok(match cost.mode {
        Mode::Penalty => signature::energy(controls) + cost.gamma * f,
        Mode::VariableTime => f,
    })
}

/// Constant control `π₁(ḡ)/T`: the straight chord to the level-1 part of the target.
pub fn chord_init<S: Scalar>(target: &GroupElement<S>, horizon: S, steps: usize) -> Result<ControlPath<S>> {
    let v: Vec<S> = target.level(1).iter().map(|&x| x / horizon).collect();
    ControlPath::constant(horizon, steps, &v)
}

/// Why a run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    /// Objective reached `cost_floor` (zero by default).
    Converged,
    /// Relative improvement stayed below `stall_tol` for `stall_window` accepted steps.
    Stalled,
    /// `C` grew past `c_max`: no decrease found even for tiny control updates.
    StepCollapsed,
    /// `max_iters` exhausted.
    IterationLimit,
    /// Not a single update was accepted although the objective is positive.
    NoProgress,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::Stalled => "stalled",
            SolveStatus::StepCollapsed => "step_collapsed",
            SolveStatus::IterationLimit => "iteration_limit",
            SolveStatus::NoProgress => "no_progress",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult<S> {
    pub controls: ControlPath<S>,
    pub states: SignatureCurve<S>,
    /// Costates of the returned controls.
    pub costates: CostateCurve<S>,
    /// Objective of the initial guess followed by every accepted iterate.
    pub cost_trace: Vec<S>,
    pub endpoint_error: S,
    pub length: S,
    pub energy: S,
    pub iterations_used: usize,
    pub rejections: usize,
    pub final_c: S,
    /// `max_k |a(t_k) + b(t_k)|_∞` (penalty) or the tangential part of `b`
    /// (variable time): first-order residual of the pointwise minimisation.
    pub stationarity: S,
    pub status: SolveStatus,
}

/// Snapshot handed to an observer after each candidate evaluation.
pub struct IterationRecord<'a, S> {
    pub iteration: usize,
    /// Accepted iterate the costates were computed from.
    pub states: &'a SignatureCurve<S>,
    pub controls: &'a ControlPath<S>,
    pub costates: &'a CostateCurve<S>,
    pub cost: &'a CostParams<S>,
    pub current_cost: S,
    pub candidate_cost: S,
    pub accepted: bool,
    pub c: S,
}

/// Runs the scheme from `init` towards `target`.
pub fn solve<S: Scalar>(
    target: &GroupElement<S>,
    init: &ControlPath<S>,
    params: &SolverParams<S>,
) -> Result<SolveResult<S>> {
    solve_observed(target, init, params, &mut |_| {})
}

/// [`solve`] with a callback invoked once per iteration.
pub fn solve_observed<S: Scalar>(
    target: &GroupElement<S>,
    init: &ControlPath<S>,
    params: &SolverParams<S>,
    observer: &mut dyn FnMut(&IterationRecord<'_, S>),
) -> Result<SolveResult<S>> {
    params.validate()?;
    if init.dim() != target.dim() {
        return Err(Error::InvalidControls(format!(
            "initial controls have dimension {}, target has {}",
            init.dim(),
            target.dim()
        )));
    }
    let cost = CostParams::new(params.gamma, params.mode, target.clone())?;
    let mut controls = if init.steps() == params.steps && init.horizon() == params.horizon {
        init.clone()
    } else {
        init.resample(params.horizon, params.steps)?
    };
    if params.mode == Mode::VariableTime {
        controls = controls.normalized();
    }
    let depth = target.depth();
    let mut states = flow(&controls, depth)?;
    let mut current = objective(&controls, &states, &cost)?;
    let mut trace = vec![current];
    let mut c = params.c0;
    let mut rejections = 0;
    let mut accepted_steps = 0;
    let mut stalled = 0;
    let mut iterations = 0;
    let mut status = SolveStatus::IterationLimit;

    if current <= params.cost_floor {
        status = SolveStatus::Converged;
    } else {
        while iterations < params.max_iters {
            iterations += 1;
            let costates = costate_backward(&states, &controls, &cost, params)?;
            let candidate = match forward_update(&costates, &controls, c, &cost) {
                Ok(pair) => Some(pair),
                Err(Error::Diverged { .. }) => None,
                Err(e) => return Err(e),
            };
            let cand_cost = match &candidate {
                Some((cand_controls, cand_states)) => objective(cand_controls, cand_states, &cost)?,
                None => S::infinity(),
            };
            let accepted = cand_cost.is_finite() && cand_cost < current;
            observer(&IterationRecord {
                iteration: iterations,
                states: &states,
                controls: &controls,
                costates: &costates,
                cost: &cost,
                current_cost: current,
                candidate_cost: cand_cost,
                accepted,
                c,
            });
            if let (true, Some((cand_controls, cand_states))) = (accepted, candidate) {
                let improvement = (current - cand_cost) / current;
                controls = cand_controls;
                states = cand_states;
                current = cand_cost;
                trace.push(current);
                accepted_steps += 1;
                c = (c * params.c_shrink).max(params.c_min);
                if current <= params.cost_floor {
                    status = SolveStatus::Converged;
                    break;
                }
                stalled = if improvement < params.stall_tol { stalled + 1 } else { 0 };
                if stalled >= params.stall_window {
                    status = SolveStatus::Stalled;
                    break;
                }
            } else {
                rejections += 1;
                c *= params.c_grow;
                if c > params.c_max {
                    status = SolveStatus::StepCollapsed;
                    break;
                }
            }
        }
        if accepted_steps == 0 {
            status = SolveStatus::NoProgress;
        }
    }

    let costates = costate_backward(&states, &controls, &cost, params)?;
    let stationarity = stationarity(&states, &controls, &costates, &cost)?;
    let endpoint_error = terminal_cost(states.endpoint(), target)?;
    Ok(SolveResult {
        length: signature::length(&controls),
        energy: signature::energy(&controls),
        controls,
        states,
        costates,
        cost_trace: trace,
        endpoint_error,
        iterations_used: iterations,
        rejections,
        final_c: c,
        stationarity,
        status,
    })
}

fn stationarity<S: Scalar>(
    states: &SignatureCurve<S>,
    controls: &ControlPath<S>,
    costates: &CostateCurve<S>,
    cost: &CostParams<S>,
) -> Result<S> {
    let mut worst = S::zero();
    for k in 0..controls.steps() {
        let b = cost::control_coupling(states.state(k), costates.costate(k), cost)?;
        let a = controls.value(k);
        let residual: Vec<S> = match cost.mode {
            Mode::Penalty => a.iter().zip(&b).map(|(&x, &y)| x + y).collect(),
            Mode::VariableTime => {
                // tangential component of b on the unit sphere at a
                let along: S = a.iter().zip(&b).map(|(&x, &y)| x * y).sum();
                a.iter().zip(&b).map(|(&x, &y)| y - along * x).collect()
            }
        };
        for r in residual {
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}
