//! Free final time: search the smallest horizon `T*` at which unit-speed
//! controls reach the target within `eps`, so that the recovered path length
//! is `T*` itself.
//!
//! Phase one grows `T` geometrically while the fixed-horizon solve leaves the
//! terminal error above `eps`. Phase two bisects between the largest
//! infeasible and the smallest feasible horizon seen so far.

use crate::cost::Mode;
use crate::error::{Error, Result};
use crate::pmp::{self, IterationRecord, SolveResult, SolverParams};
use crate::scalar::{norm2, Scalar};
use crate::signature::ControlPath;
use crate::tensor::GroupElement;

#[derive(Clone, Debug, PartialEq)]
pub struct TimeSearchParams<S> {
    pub t_init: S,
    /// Feasibility threshold on `f(ξ(T), ḡ)`.
    pub eps: S,
    /// Horizon multiplier while infeasible.
    pub grow: S,
    /// Maximum number of bracketing solves.
    pub refine_steps: usize,
    /// Position of the next trial inside the bracket, `lower + refine_shrink·(upper − lower)`.
    pub refine_shrink: S,
    pub max_expansions: usize,
    /// Fixed-horizon solver settings; `mode` and `horizon` are overwritten.
    pub inner: SolverParams<S>,
}

impl<S: Scalar> TimeSearchParams<S> {
    /// Defaults with `t_init = max(|π₁(ḡ)|, 1e-3)`.
    pub fn for_target(target: &GroupElement<S>) -> Self {
        let eps = S::lit(1e-3);
        Self {
            t_init: norm2(target.level(1)).max(S::lit(1e-3)),
            eps,
            grow: S::lit(1.5),
            refine_steps: 25,
            refine_shrink: S::lit(0.5),
            max_expansions: 20,
            inner: SolverParams {
                mode: Mode::VariableTime,
                max_iters: 3000,
                cost_floor: eps * S::lit(0.1),
                ..SolverParams::default()
            },
        }
    }

    /// Sets `eps` and keeps the inner stopping floor one decade below it.
    pub fn with_eps(mut self, eps: S) -> Self {
        self.eps = eps;
        self.inner.cost_floor = eps * S::lit(0.1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_init > S::zero()) || !self.t_init.is_finite() {
            return Err(Error::param("t_init", format!("must be positive, got {}", self.t_init)));
        }
        if !(self.eps > S::zero()) {
            return Err(Error::param("eps", format!("must be positive, got {}", self.eps)));
        }
        if !(self.grow > S::one()) {
            return Err(Error::param("grow", format!("must be > 1, got {}", self.grow)));
        }
        if !(self.refine_shrink > S::zero() && self.refine_shrink < S::one()) {
            return Err(Error::param(
                "refine_shrink",
                format!("must lie in (0, 1), got {}", self.refine_shrink),
            ));
        }
        self.inner_at(self.t_init).validate()
    }

    fn inner_at(&self, horizon: S) -> SolverParams<S> {
        SolverParams {
            mode: Mode::VariableTime,
            horizon,
            ..self.inner.clone()
        }
    }
}

/// Classification of one outer iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    /// Horizon too short: terminal error above `eps`.
    S1,
    /// The accepted horizon.
    S2,
    /// Feasible but not the smallest feasible horizon found.
    S3,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::S1 => "S1",
            Scenario::S2 => "S2",
            Scenario::S3 => "S3",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistoryEntry<S> {
    pub horizon: S,
    pub endpoint_error: S,
    pub length: S,
    pub scenario: Scenario,
}

#[derive(Clone, Debug)]
pub struct VarTimeResult<S> {
    pub t_star: S,
    pub result: SolveResult<S>,
    pub history: Vec<HistoryEntry<S>>,
}

impl<S: Scalar> VarTimeResult<S> {
    pub fn scenario_trace(&self) -> Vec<Scenario> {
        self.history.iter().map(|h| h.scenario).collect()
    }
}

/// Unit-speed initial guess along the chord `π₁(ḡ)`, or `e₁` if the chord vanishes.
pub fn chord_controls<S: Scalar>(target: &GroupElement<S>, horizon: S, steps: usize) -> Result<ControlPath<S>> {
    ControlPath::constant(horizon, steps, target.level(1)).map(|c| c.normalized())
}

pub fn search_final_time<S: Scalar>(
    target: &GroupElement<S>,
    params: &TimeSearchParams<S>,
) -> Result<VarTimeResult<S>> {
    search_final_time_from(target, None, params, &mut |_| {})
}

/// Horizon search starting from `init` (chord controls when `None`); the
/// observer sees every inner iteration of every fixed-horizon solve.
pub fn search_final_time_from<S: Scalar>(
    target: &GroupElement<S>,
    init: Option<&ControlPath<S>>,
    params: &TimeSearchParams<S>,
    observer: &mut dyn FnMut(&IterationRecord<'_, S>),
) -> Result<VarTimeResult<S>> {
    params.validate()?;
    let steps = params.inner.steps;
    let mut warm = match init {
        Some(c) => c.resample(params.t_init, steps)?.normalized(),
        None => chord_controls(target, params.t_init, steps)?,
    };
    let mut history = Vec::new();
    let mut solve_at = |horizon: S, start: &ControlPath<S>, history: &mut Vec<HistoryEntry<S>>| {
        let guess = start.resample(horizon, steps)?.normalized();
        let res = pmp::solve_observed(target, &guess, &params.inner_at(horizon), observer)?;
        let feasible = res.endpoint_error <= params.eps;
        history.push(HistoryEntry {
            horizon,
            endpoint_error: res.endpoint_error,
            length: res.length,
            scenario: if feasible { Scenario::S3 } else { Scenario::S1 },
        });
        Ok::<_, Error>((feasible, res))
    };

    // grow until feasible
    let mut horizon = params.t_init;
    let mut lower: Option<S> = None;
    let mut expansions = 0;
    let (mut upper, mut best, mut best_index) = loop {
        let (feasible, res) = solve_at(horizon, &warm, &mut history)?;
        if feasible {
            break (horizon, res, history.len() - 1);
        }
        lower = Some(horizon);
        if expansions >= params.max_expansions {
            return Err(Error::Unreachable {
                expansions,
                last_horizon: horizon.as_f64(),
                last_error: res.endpoint_error.as_f64(),
            });
        }
        warm = res.controls;
        expansions += 1;
        horizon *= params.grow;
    };

    // bracket the feasibility boundary from above
    for _ in 0..params.refine_steps {
        let lo = lower.unwrap_or(S::zero());
        if upper - lo <= params.eps * upper {
            break;
        }
        let trial = lo + params.refine_shrink * (upper - lo);
        let start = best.controls.clone();
        let (feasible, res) = solve_at(trial, &start, &mut history)?;
        if feasible {
            upper = trial;
            best = res;
            best_index = history.len() - 1;
        } else {
            lower = Some(trial);
        }
    }

    history[best_index].scenario = Scenario::S2;
    Ok(VarTimeResult {
        t_star: upper,
        result: best,
        history,
    })
}

/// Mean and coefficient of variation of the speeds `|a(t_k)|₂`.
pub fn speed_profile<S: Scalar>(controls: &ControlPath<S>) -> (S, S) {
    let speeds = controls.speeds();
    let n = S::from_usize_lossy(speeds.len());
    let mean = speeds.iter().copied().sum::<S>() / n;
    if mean == S::zero() {
        return (mean, S::zero());
    }
    let var = speeds.iter().map(|&s| (s - mean) * (s - mean)).sum::<S>() / n;
    (mean, var.sqrt() / mean)
}
