//! Nonlinear spectral evolution of the perturbation `h = F - mu`.

pub mod field;
pub mod moments;
pub mod ops;
pub mod stencil;
pub mod stepper;
pub mod grid;
pub mod init;

pub use field::SpectralField;
pub use grid::PhaseGrid;
