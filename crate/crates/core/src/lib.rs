//! Self-gravitating polytrope laboratory: equilibrium structure, linear
//! radial pulsation spectra, and nonlinear Lagrangian oscillation dynamics
//! with a vacuum free boundary.
//!
//! The pipeline runs in four stages, each usable on its own:
//!
//! 1. [`lane_emden`] integrates the dimensionless equilibrium equation and
//!    expands it near the vacuum surface;
//! 2. [`equilibrium`] scales the profile to physical units, builds the
//!    singular coordinate map `x` on (0, 1), and tabulates the coefficients
//!    of the linear pulsation operator;
//! 3. [`spectral`] solves the pulsation eigenproblem by a weighted Galerkin
//!    method and, independently, by two-sided series shooting;
//! 4. [`evolution`] integrates the full nonlinear oscillation equation in
//!    mass coordinates and reconstructs physical fields and the moving
//!    surface radius.
//!
//! [`validation`] packages the quantitative experiments (eigenvalue sign map,
//! period-density law, linearization order, vacuum exponent) as report
//! generators.
//!
//! All solvers are generic over the floating-point type through
//! [`scalar::Scalar`]; `f64` aliases live at the crate root.

pub mod equilibrium;
pub mod evolution;
pub mod jacobi;
pub mod lane_emden;
pub mod linalg;
pub mod ode;
pub mod scalar;
pub mod spectral;
pub mod validation;

pub use scalar::Scalar;

use thiserror::Error;

/// Umbrella error for the full pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    LaneEmden(#[from] lane_emden::LaneEmdenError),
    #[error(transparent)]
    Equilibrium(#[from] equilibrium::EquilibriumError),
    #[error(transparent)]
    Spectral(#[from] spectral::SpectralError),
    #[error(transparent)]
    Evolution(#[from] evolution::EvolutionError),
    #[error(transparent)]
    Ode(#[from] ode::OdeError),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

pub type Result<T> = std::result::Result<T, Error>;

// Concrete double-precision aliases; the acceptance tolerances are stated
// for these.
/// Builds the complete equilibrium star for a gas: dimensionless profile,
/// surface series, spectral nodes, and coefficient tables.
pub fn build_profile<T: Scalar>(
    params: lane_emden::GasParams<T>,
    ode_tol: T,
    basis_size: usize,
) -> Result<equilibrium::EquilibriumProfile<T>> {
    let le = lane_emden::integrate(&params, ode_tol)?;
    let bs = lane_emden::boundary_series(&params, &le, 8)?;
    let space = spectral::WeightedSpace::new(params.big_n(), basis_size)?;
    Ok(equilibrium::build(params, le, bs, &space.x_nodes)?)
}

pub type GasParams64 = lane_emden::GasParams<f64>;
pub type LaneEmdenSolution64 = lane_emden::LaneEmdenSolution<f64>;
pub type BoundarySeries64 = lane_emden::BoundarySeries<f64>;
pub type EquilibriumProfile64 = equilibrium::EquilibriumProfile<f64>;
pub type WeightedSpace64 = spectral::WeightedSpace<f64>;
pub type EigenMode64 = spectral::EigenMode<f64>;
pub type StateField64 = evolution::StateField<f64>;
pub type Trajectory64 = evolution::Trajectory<f64>;
