//! Strang composition of the exact and explicit pieces.

use serde::Serialize;

use super::field::SpectralField;
use super::grid::PhaseGrid;
use super::moments::{compute_moments, conserved_quantities, Closure, Conserved, HydroMoments};
use super::ops::{nonlinear_rhs, ou_step, transport_step, Coupling};
use crate::error::{Error, Result};
use crate::linear::InteractionKernel;
use crate::real::Real;

/// Reality defect tolerated before symmetrization, relative to the field maximum.
pub const REALITY_TOL: f64 = 1e-12;
/// Aliasing sentinel on the outermost `eta` cells, relative to the field maximum.
pub const BOUNDARY_TOL: f64 = 1e-8;

/// Per-run conservation bookkeeping.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepStats<T> {
    pub steps: usize,
    pub initial: Conserved<T>,
    pub current: Conserved<T>,
    /// Largest single-step change of the mass.
    pub max_mass_step: T,
    /// Largest single-step change of the momentum.
    pub max_momentum_step: T,
    /// Largest `|energy - energy(0)| / maxwellian energy` seen so far.
    pub max_energy_drift: T,
    pub max_reality_defect: T,
    pub max_boundary_ratio: T,
}

/// Time stepper for `h = F - mu` on a fixed aligned grid.
#[derive(Debug, Clone)]
pub struct Solver<T: Real> {
    pub grid: PhaseGrid<T>,
    pub nu: T,
    pub kernel: InteractionKernel<T>,
    pub coupling: Coupling,
    pub stats: Option<StepStats<T>>,
}

impl<T: Real> Solver<T> {
    pub fn new(grid: PhaseGrid<T>, nu: T, kernel: InteractionKernel<T>, coupling: Coupling) -> Result<Self> {
        grid.validate()?;
        if !(nu >= T::zero()) || !nu.is_finite() {
            return Err(Error::domain(format!("nu must be finite and nonnegative, got {}", nu)));
        }
        Ok(Solver {
            grid,
            nu,
            kernel,
            coupling,
            stats: None,
        })
    }

    pub fn closure(&self) -> Closure {
        match self.coupling {
            Coupling::Full => Closure::Nonlinear,
            _ => Closure::Linear,
        }
    }

    pub fn moments(&self, field: &SpectralField<T>) -> Result<HydroMoments<T>> {
        compute_moments(field, &self.kernel, self.closure())
    }

    fn rhs(&self, y: &SpectralField<T>, out: &mut SpectralField<T>) -> Result<()> {
        let m = self.moments(y)?;
        nonlinear_rhs(y, &m, self.nu, self.coupling, out);
        Ok(())
    }

    /// Classical fourth-order Runge-Kutta over `h` for the explicit terms.
    fn rk4(&self, field: &mut SpectralField<T>, h: T) -> Result<()> {
        if self.coupling == Coupling::None {
            return Ok(());
        }
        let g = self.grid;
        let mut k1 = SpectralField::zeros(g);
        let mut k2 = SpectralField::zeros(g);
        let mut k3 = SpectralField::zeros(g);
        let mut k4 = SpectralField::zeros(g);
        let half = h * T::lit(0.5);
        self.rhs(field, &mut k1)?;
        let mut y = field.clone();
        y.axpy(half, &k1);
        self.rhs(&y, &mut k2)?;
        y.data.copy_from_slice(&field.data);
        y.axpy(half, &k2);
        self.rhs(&y, &mut k3)?;
        y.data.copy_from_slice(&field.data);
        y.axpy(h, &k3);
        self.rhs(&y, &mut k4)?;
        let sixth = h / T::lit(6.0);
        let third = h / T::lit(3.0);
        field.axpy(sixth, &k1);
        field.axpy(third, &k2);
        field.axpy(third, &k3);
        field.axpy(sixth, &k4);
        Ok(())
    }

    /// Starts conservation tracking from `field`.
    pub fn begin(&mut self, field: &SpectralField<T>) -> Result<HydroMoments<T>> {
        if field.grid != self.grid {
            return Err(Error::domain("field grid differs from solver grid"));
        }
        let m = self.moments(field)?;
        let c = conserved_quantities(&m, &self.kernel);
        self.stats = Some(StepStats {
            steps: 0,
            initial: c,
            current: c,
            max_mass_step: T::zero(),
            max_momentum_step: T::zero(),
            max_energy_drift: T::zero(),
            max_reality_defect: T::zero(),
            max_boundary_ratio: field.boundary_ratio(),
        });
        Ok(m)
    }

    /// One Strang step of length `dt`; returns the moments of the new state.
    pub fn step(&mut self, field: &mut SpectralField<T>) -> Result<HydroMoments<T>> {
        if self.stats.is_none() {
            self.begin(field)?;
        }
        let dt = self.grid.dt;
        let half = dt * T::lit(0.5);
        ou_step(field, self.nu, half);
        self.rk4(field, half)?;
        transport_step(field)?;
        self.rk4(field, half)?;
        ou_step(field, self.nu, half);

        let scale = field.max_abs();
        let defect = field.reality_defect();
        if defect > T::lit(REALITY_TOL) * scale {
            return Err(Error::invariant(format!(
                "reality symmetry defect {:.3e} (relative) at t = {}",
                (defect / scale).as_f64(),
                field.time
            )));
        }
        field.symmetrize();
        let boundary = field.boundary_ratio();
        if boundary > T::lit(BOUNDARY_TOL) {
            return Err(Error::Aliasing(format!(
                "boundary cells hold {:.3e} of the field maximum at t = {}; increase eta_max",
                boundary.as_f64(),
                field.time
            )));
        }

        let m = self.moments(field)?;
        let c = conserved_quantities(&m, &self.kernel);
        let st = self.stats.as_mut().expect("stats initialized");
        let e0 = super::moments::maxwellian_energy::<T>();
        st.steps += 1;
        st.max_mass_step = st.max_mass_step.max((c.mass - st.current.mass).abs());
        st.max_momentum_step = st
            .max_momentum_step
            .max((c.momentum - st.current.momentum).abs());
        st.max_energy_drift = st
            .max_energy_drift
            .max((c.energy - st.initial.energy).abs() / e0);
        st.max_reality_defect = st.max_reality_defect.max(if scale > T::zero() {
            defect / scale
        } else {
            T::zero()
        });
        st.max_boundary_ratio = st.max_boundary_ratio.max(boundary);
        st.current = c;
        Ok(m)
    }

    /// Number of aligned steps that reach `t_final` from zero.
    pub fn steps_to(&self, t_final: T) -> Result<usize> {
        let n = t_final / self.grid.dt;
        let r = n.round();
        if !(t_final >= T::zero()) || (n - r).abs() > T::lit(1e-9) * r.max(T::one()) {
            return Err(Error::domain(format!(
                "t_final = {} is not a whole number of steps dt = {}",
                t_final, self.grid.dt
            )));
        }
        Ok(r.to_usize().unwrap_or(0))
    }

    /// Advances `n` steps, calling `observe` after the initial state and each step.
    pub fn run(
        &mut self,
        field: &mut SpectralField<T>,
        n: usize,
        mut observe: impl FnMut(usize, &SpectralField<T>, &HydroMoments<T>) -> Result<()>,
    ) -> Result<()> {
        let m = self.begin(field)?;
        observe(0, field, &m)?;
        for s in 1..=n {
            let m = self.step(field)?;
            observe(s, field, &m)?;
        }
        Ok(())
    }
}
