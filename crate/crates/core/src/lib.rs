//! Free-fermion simulation of DMERA and QAOA circuits for the critical
//! transverse-field Ising chain.
//!
//! States are Gaussian and stored as Majorana covariance matrices, so a
//! two-site matchgate costs `O(L)` and a full scaling layer `O(L²)`.

pub mod dmera;
pub mod error;
pub mod fit;
pub mod gaussian;
pub mod io;
pub mod models;
pub mod optimize;
pub mod qaoa;
pub mod symmetry;

pub use error::{Error, Result};
pub use gaussian::{CovarianceState, ModeSubset};
pub use models::{ExactSolution, Model, QuadraticHamiltonian};

/// Infinite-volume ground-state energy density of the critical Ising chain.
pub const ISING_ENERGY_DENSITY: f64 = -4.0 / std::f64::consts::PI;
