//! Spectral Vlasov-Poisson-Fokker-Planck simulator near a global Maxwellian.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`). The aliases
//! at the crate root fix the scalar to `f64`, which is what the experiments
//! and the command line tool use.

pub mod error;
pub mod experiments;
pub mod io;
pub mod linear;
pub mod multiplier;
pub mod quadrature;
pub mod real;
pub mod semigroup;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
pub use real::Real;

pub type SemigroupValue = semigroup::SemigroupValue<f64>;
pub type PhaseGrid = solver::PhaseGrid<f64>;
pub type SpectralField = solver::SpectralField<f64>;
pub type HydroMoments = solver::moments::HydroMoments<f64>;
pub type Solver = solver::stepper::Solver<f64>;
pub type StepStats = solver::stepper::StepStats<f64>;
pub type InteractionKernel = linear::InteractionKernel<f64>;
pub type NormSpec = multiplier::NormSpec<f64>;
