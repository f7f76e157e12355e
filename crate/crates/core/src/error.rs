use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failures reported by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("basis is inconsistent with the model parameters (2j = {basis_two_j}, expected {params_two_j})")]
    BasisMismatch { basis_two_j: u32, params_two_j: u32 },

    #[error("phase-space point outside the Bloch disk (Q^2 + P^2 = {0})")]
    OutsideBlochDisk(f64),

    #[error("energy {eps} lies below the classical ground-state energy {min}")]
    BelowGroundEnergy { eps: f64, min: f64 },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("energy window holds {found} converged eigenstates, at least {needed} required")]
    EmptyWindow { found: usize, needed: usize },

    #[error("integrator step size collapsed at t = {t} (h = {h:e})")]
    StepSizeCollapse { t: f64, h: f64 },

    #[error("energy shell at eps = {0} produced no admissible points")]
    EmptyShell(f64),

    #[error("Renyi order must be non-negative, got {0}")]
    NegativeAlpha(f64),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("Newton refinement diverged at iteration {iteration} (residual {residual:e})")]
    NewtonDiverged { iteration: usize, residual: f64 },

    #[error("singular Newton system at iteration {iteration} (smallest singular value {sigma_min:e})")]
    NewtonSingular { iteration: usize, sigma_min: f64 },

    #[error("Newton refinement did not reach tolerance in {iterations} iterations (residual {residual:e})")]
    NewtonMaxIterations { iterations: usize, residual: f64 },

    #[error("no admissible bosonic momentum at (Q, P) = ({0}, {1}) on this shell")]
    NoAdmissibleMomentum(f64, f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
