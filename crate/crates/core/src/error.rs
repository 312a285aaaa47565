use thiserror::Error;

/// Errors produced while setting up or evaluating the model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("interaction is not symmetric under k -> -k at {k:?}")]
    AsymmetricInteraction { k: [i64; 3] },

    #[error("interaction support {k:?} lies outside the cutoff radius {radius}")]
    InteractionOutsideCutoff { k: [i64; 3], radius: f64 },

    #[error("patch count must be a positive even integer, got {0}")]
    OddPatchCount(usize),

    #[error("corridor of angular half-width {margin} rad leaves patch {alpha} empty")]
    CorridorTooWide { alpha: usize, margin: f64 },

    #[error("patch {alpha} is not in I_k for k = {k:?}")]
    NotInIndexSet { alpha: usize, k: [i64; 3] },

    #[error("matrix not positive definite (smallest eigenvalue {min_eig:e})")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("matrix too close to singular (condition number {cond:e})")]
    NearSingular { cond: f64 },

    #[error("rank-one update is singular (denominator {denom:e})")]
    SingularUpdate { denom: f64 },

    #[error("quadrature did not converge: estimate {value:e}, error {error:e} after {subdivisions} subdivisions")]
    QuadratureNonConvergence {
        value: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("momentum {q:?} does not lie in any patch")]
    OutsidePatches { q: [i64; 3] },
}

pub type Result<T> = std::result::Result<T, Error>;
