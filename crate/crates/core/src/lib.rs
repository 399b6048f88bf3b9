//! Truncated path signatures and recovery of the shortest path that generates
//! a given signature.
//!
//! The recovery treats the signature map as a control system on the free
//! nilpotent group, `ξ̇ = Σ aᵢ ξ ⊗ eᵢ`, and minimises either the energy plus a
//! terminal penalty ([`pmp::solve`] in [`Mode::Penalty`]) or the terminal
//! error over unit-speed controls for a searched horizon
//! ([`vartime::search_final_time`]).
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the common double-precision case.

pub mod cost;
pub mod error;
pub mod io;
pub mod pmp;
pub mod procgen;
pub mod scalar;
pub mod signature;
pub mod tensor;
pub mod vartime;

pub use cost::{CostParams, Mode};
pub use error::{Error, Result};
pub use pmp::{CostateCurve, SolveResult, SolveStatus, SolverParams};
pub use procgen::OuParams;
pub use scalar::Scalar;
pub use signature::{ControlPath, PiecewisePath, SignatureCurve};
pub use tensor::{GroupElement, TruncatedTensor};
pub use vartime::{TimeSearchParams, VarTimeResult};

pub type Tensor64 = TruncatedTensor<f64>;
pub type Tensor32 = TruncatedTensor<f32>;
pub type Group64 = GroupElement<f64>;
pub type Group32 = GroupElement<f32>;
pub type Path64 = PiecewisePath<f64>;
pub type Controls64 = ControlPath<f64>;
pub type SolverParams64 = SolverParams<f64>;
pub type SolveResult64 = SolveResult<f64>;
pub type TimeSearchParams64 = TimeSearchParams<f64>;
pub type VarTimeResult64 = VarTimeResult<f64>;
