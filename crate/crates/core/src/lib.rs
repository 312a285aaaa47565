//! Bosonized random-phase approximation for the momentum distribution of a
//! mean-field Fermi gas on the discrete torus.
//!
//! The crate builds the closed-shell lattice geometry, the patch
//! decomposition of the Fermi shell, the per-momentum Bogoliubov kernels, and
//! evaluates occupation numbers `n_q` by several independent routes, together
//! with the infinite-volume limit and the Daniel-Vosko comparison.

pub mod error;
pub mod kernel;
pub mod lattice;
pub mod linalg;
pub mod occupation;
pub mod patches;
pub mod quadrature;
pub mod thermo;

pub use error::{Error, Result};
pub use kernel::KernelBundle;
pub use lattice::{closed_shell_params, FermiGeometry, InteractionFourier, ModelParams, Momentum3};
pub use occupation::{quasiparticle_weight, Model, OccupationResult, Route, Routes};
pub use patches::PatchSet;
pub use quadrature::{Integral, QuadratureSpec};
pub use thermo::{DvSide, ThermoParams};
