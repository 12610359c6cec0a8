use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::Real;

/// Relative tolerance of the `dt = d_eta` alignment.
pub const ALIGN_TOL: f64 = 1e-12;

/// Truncated `(k, eta)` lattice.
///
/// Rows carry `k = -k_max..=k_max`; column `j` sits at
/// `eta_j = (j - n_eta/2) d_eta` with `d_eta = 2 eta_max / n_eta`. The time
/// step equals `d_eta` so free transport is an integer shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseGrid<T> {
    pub k_max: usize,
    pub eta_max: T,
    pub n_eta: usize,
    pub dt: T,
}

impl<T: Real> PhaseGrid<T> {
    /// Grid with `dt` set to the lattice spacing.
    pub fn aligned(k_max: usize, eta_max: T, n_eta: usize) -> Result<Self> {
        let g = PhaseGrid {
            k_max,
            eta_max,
            n_eta,
            dt: T::lit(2.0) * eta_max / T::from_usize_lossy(n_eta.max(1)),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_max == 0 {
            return Err(Error::domain("k_max must be positive"));
        }
        if self.n_eta < 8 || !self.n_eta.is_multiple_of(2) {
            return Err(Error::domain(format!(
                "n_eta must be even and at least 8, got {}",
                self.n_eta
            )));
        }
        if !(self.eta_max > T::zero() && self.eta_max.is_finite()) {
            return Err(Error::domain("eta_max must be positive"));
        }
        let d = self.d_eta();
        if !((self.dt - d).abs() <= T::lit(ALIGN_TOL) * d) {
            return Err(Error::domain(format!(
                "dt = {} must equal d_eta = {} (2 eta_max / n_eta)",
                self.dt, d
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn d_eta(&self) -> T {
        T::lit(2.0) * self.eta_max / T::from_usize_lossy(self.n_eta)
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        2 * self.k_max + 1
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_rows() * self.n_eta
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Column of `eta = 0`.
    #[inline]
    pub fn zero_col(&self) -> usize {
        self.n_eta / 2
    }

    #[inline]
    pub fn eta(&self, j: usize) -> T {
        (T::from_usize_lossy(j) - T::from_usize_lossy(self.n_eta / 2)) * self.d_eta()
    }

    pub fn etas(&self) -> Vec<T> {
        (0..self.n_eta).map(|j| self.eta(j)).collect()
    }

    #[inline]
    pub fn row(&self, k: i64) -> usize {
        debug_assert!(k.unsigned_abs() as usize <= self.k_max);
        (k + self.k_max as i64) as usize
    }

    #[inline]
    pub fn k_of(&self, row: usize) -> i64 {
        row as i64 - self.k_max as i64
    }

    pub fn ks(&self) -> impl Iterator<Item = i64> {
        let m = self.k_max as i64;
        -m..=m
    }

    /// Column holding `-eta_j`. Column 0 (`eta = -eta_max`) has no partner on
    /// the lattice and is kept at zero.
    #[inline]
    pub fn mirror(&self, j: usize) -> usize {
        (self.n_eta - j) % self.n_eta
    }
}
