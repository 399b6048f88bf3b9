//! Terminal cost `f(ξ, ḡ) = √(1 + |ξ − ḡ|²) − 1`, the Hamiltonian built on its
//! time derivative, and the state gradient that drives the costate equation.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::signature::{contract_last_letter, directional_field, field_pairing};
use crate::tensor::{GroupElement, TruncatedTensor};

/// Which objective the solver minimises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// `½∫|a|² + γ f(ξ(T), ḡ)` with free controls.
    Penalty,
    /// `f(ξ(T), ḡ)` over unit-speed controls.
    VariableTime,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Penalty => "penalty",
            Mode::VariableTime => "vartime",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "penalty" => Ok(Mode::Penalty),
            "vartime" | "variable_time" | "variable-time" => Ok(Mode::VariableTime),
            other => Err(Error::param("mode", format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CostParams<S> {
    pub gamma: S,
    pub mode: Mode,
    pub target: GroupElement<S>,
}

impl<S: Scalar> CostParams<S> {
    pub fn new(gamma: S, mode: Mode, target: GroupElement<S>) -> Result<Self> {
        if !(gamma >= S::zero()) || !gamma.is_finite() {
            return Err(Error::param("gamma", format!("must be finite and >= 0, got {gamma}")));
        }
        Ok(Self { gamma, mode, target })
    }

    /// Weight on the terminal cost; the penalty weight is dropped in variable-time mode.
    pub fn weight(&self) -> S {
        match self.mode {
            Mode::Penalty => self.gamma,
            Mode::VariableTime => S::one(),
        }
    }
}

/// `ξ − ḡ` with the level-0 entry cleared.
fn deviation<S: Scalar>(g: &TruncatedTensor<S>, target: &TruncatedTensor<S>) -> Result<TruncatedTensor<S>> {
    let mut e = g.try_sub(target)?;
    e.coeffs_mut()[0] = S::zero();
    Ok(e)
}

/// `√(1 + |g − ḡ|²) − 1`, evaluated without cancellation for small deviations.
pub fn terminal_cost<S: Scalar>(g: &TruncatedTensor<S>, target: &TruncatedTensor<S>) -> Result<S> {
    let sq = deviation(g, target)?.norm_squared();
    Ok(sq / ((S::one() + sq).sqrt() + S::one()))
}

/// `∇_ξ f = (ξ − ḡ) / √(1 + |ξ − ḡ|²)`, zero at level 0.
pub fn terminal_cost_gradient<S: Scalar>(
    g: &TruncatedTensor<S>,
    target: &TruncatedTensor<S>,
) -> Result<TruncatedTensor<S>> {
    let e = deviation(g, target)?;
    let r = (S::one() + e.norm_squared()).sqrt();
    Ok(e.scale(S::one() / r))
}

/// `∂ₛ f(ξ(s), ḡ) = ⟨∇_ξ f, Σ aᵢ Uᵢ(ξ)⟩` (unweighted).
pub fn running_cost_rate<S: Scalar>(xi: &TruncatedTensor<S>, a: &[S], params: &CostParams<S>) -> Result<S> {
    check_control(xi, a)?;
    let grad = terminal_cost_gradient(xi, &params.target)?;
    grad.inner_product(&directional_field(xi, a))
}

/// `H(ξ, ω, p) = ½|ω|² + ⟨γ∇f + p, Σ ωᵢ Uᵢ(ξ)⟩`; the quadratic term is
/// omitted and `γ = 1` in variable-time mode.
pub fn hamiltonian<S: Scalar>(
    xi: &TruncatedTensor<S>,
    omega: &[S],
    p: &TruncatedTensor<S>,
    params: &CostParams<S>,
) -> Result<S> {
    check_control(xi, omega)?;
    let lambda = adjoint_weight(xi, p, params)?;
    let linear = lambda.inner_product(&directional_field(xi, omega))?;
    Ok(match params.mode {
        Mode::Penalty => S::lit(0.5) * omega.iter().map(|&w| w * w).sum::<S>() + linear,
        Mode::VariableTime => linear,
    })
}

/// `λ = γ∇_ξ f(ξ, ḡ) + p`, the tensor paired with the vector fields.
pub fn adjoint_weight<S: Scalar>(
    xi: &TruncatedTensor<S>,
    p: &TruncatedTensor<S>,
    params: &CostParams<S>,
) -> Result<TruncatedTensor<S>> {
    let mut lambda = terminal_cost_gradient(xi, &params.target)?.scale(params.weight());
    lambda.axpy(S::one(), p)?;
    Ok(lambda)
}

/// Coefficients `bᵢ = ⟨γ∇f + p, Uᵢ(ξ)⟩` of the part of `H` linear in `ω`.
pub fn control_coupling<S: Scalar>(
    xi: &TruncatedTensor<S>,
    p: &TruncatedTensor<S>,
    params: &CostParams<S>,
) -> Result<Vec<S>> {
    Ok(field_pairing(&adjoint_weight(xi, p, params)?, xi))
}

/// `∂H/∂ξ_j` for every word `j`, level 0 excluded (it is pinned to one).
///
/// With `e = ξ − ḡ`, `r = √(1 + |e|²)`, `F = ξ ⊗ a` and `s = ⟨e, F⟩`:
///
/// ```text
/// ∂H/∂ξ_j = γ [ (F_j + Σᵢ e_{j·i} aᵢ) / r − s·e_j / r³ ] + Σᵢ p_{j·i} aᵢ
/// ```
///
/// where `F_j = a_{j_k} ξ_{j∖j_k}` (with `ξ_∅ = 1`) and the two sums over `i`
/// vanish on the top level.
pub fn hamiltonian_state_gradient<S: Scalar>(
    xi: &TruncatedTensor<S>,
    a: &[S],
    p: &TruncatedTensor<S>,
    params: &CostParams<S>,
) -> Result<TruncatedTensor<S>> {
    check_control(xi, a)?;
    xi.check_shape(p)?;
    let e = deviation(xi, &params.target)?;
    let r2 = S::one() + e.norm_squared();
    let r = r2.sqrt();
    let field = directional_field(xi, a);
    let s = e.inner_product(&field)?;

    let gamma = params.weight();
    let mut grad = field;
    grad.axpy(S::one(), &contract_last_letter(&e, a))?;
    let mut grad = grad.scale(gamma / r);
    grad.axpy(-gamma * s / (r2 * r), &e)?;
    grad.axpy(S::one(), &contract_last_letter(p, a))?;
    grad.coeffs_mut()[0] = S::zero();
    Ok(grad)
}

fn check_control<S: Scalar>(xi: &TruncatedTensor<S>, a: &[S]) -> Result<()> {
    if a.len() != xi.dim() {
        return Err(Error::InvalidControls(format!(
            "control has dimension {}, state has {}",
            a.len(),
            xi.dim()
        )));
    }
    Ok(())
}
