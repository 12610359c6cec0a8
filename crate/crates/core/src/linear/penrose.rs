//! Laplace-side stability scan of the density kernel.
//!
//! With `rho = F - K0 * rho`, the resolvent is `1 / (1 + K0_hat)` where
//! `K0_hat(z) = int_0^inf e^{z t} K0(t) dt`. The scan covers
//! `Re z in [-z_r, 0]`, where this transform converges absolutely, and
//! reports `kappa = min |1 + K0_hat(z)|`.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use super::{kernel_k0, InteractionKernel};
use crate::error::{Error, Result};
use crate::quadrature::simpson_weights;
use crate::real::Real;

/// Kernel magnitude below which the Laplace integral is truncated.
pub const TAIL_TOL: f64 = 1e-14;

/// Rectangle `Re z in [-re_extent, 0]`, `Im z in [-im_extent, im_extent]`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ZGrid<T> {
    pub re_extent: T,
    pub n_re: usize,
    pub im_extent: T,
    pub n_im: usize,
    /// Time step of the Laplace quadrature.
    pub dt: T,
    /// Longest admissible truncation horizon.
    pub t_cap: T,
}

impl<T: Real> Default for ZGrid<T> {
    fn default() -> Self {
        ZGrid {
            re_extent: T::lit(2.0),
            n_re: 401,
            im_extent: T::lit(20.0),
            n_im: 801,
            dt: T::lit(0.005),
            t_cap: T::lit(1e4),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PenroseScan {
    pub k: i64,
    pub nu: f64,
    pub delta: f64,
    pub kappa: f64,
    /// `z` attaining `kappa`.
    pub argmin: (f64, f64),
    /// `max |K0_hat|` on the edges `|Im z| = im_extent`.
    pub edge_magnitude: f64,
    /// `max |K0_hat|` over the scanned rectangle.
    pub interior_magnitude: f64,
    /// `int_0^inf |K0(t)| dt`.
    pub kernel_mass: f64,
    /// Truncation horizon of the Laplace integral.
    pub horizon: f64,
}

/// Samples `K0` on `t_n = n dt` until it falls below [`TAIL_TOL`] past its peak.
fn sample_kernel<T: Real>(
    k: i64,
    nu: T,
    delta: T,
    w: &InteractionKernel<T>,
    dt: T,
    t_cap: T,
) -> Result<Vec<T>> {
    let mut out = vec![T::zero()];
    let mut peak = T::zero();
    let mut n = 1usize;
    loop {
        let t = dt * T::from_usize_lossy(n);
        let v = kernel_k0(t, k, nu, delta, w)?;
        out.push(v);
        peak = peak.max(v.abs());
        if v.abs() < peak && v.abs() < T::lit(TAIL_TOL) {
            break;
        }
        if t > t_cap {
            return Err(Error::Numeric {
                what: format!("kernel tail does not decay for k = {k} by t = {t}"),
                achieved: v.abs().as_f64(),
                requested: TAIL_TOL,
            });
        }
        n += 1;
    }
    if out.len() % 2 == 0 {
        out.push(T::zero());
    }
    Ok(out)
}

/// `min |1 + K0_hat(z, k)|` over the rectangle.
pub fn penrose_scan<T: Real>(
    k: i64,
    nu: T,
    delta: T,
    w: &InteractionKernel<T>,
    grid: &ZGrid<T>,
) -> Result<PenroseScan> {
    if k == 0 {
        return Err(Error::domain("the density kernel is defined for k != 0"));
    }
    if grid.n_re < 2 || grid.n_im < 2 || !(grid.dt > T::zero()) {
        return Err(Error::domain("z grid needs at least 2x2 points and dt > 0"));
    }
    let samples = if w.is_zero() {
        vec![T::zero(); 3]
    } else {
        sample_kernel(k, nu, delta, w, grid.dt, grid.t_cap)?
    };
    let sw = simpson_weights(samples.len(), grid.dt);
    let weighted: Vec<T> = samples.iter().zip(&sw).map(|(&a, &b)| a * b).collect();
    let mass: T = samples
        .iter()
        .zip(&sw)
        .map(|(&a, &b)| a.abs() * b)
        .fold(T::zero(), |s, x| s + x);

    let laplace = |z: Complex<T>| -> Complex<T> {
        let step = (z * grid.dt).exp();
        let mut e = Complex::new(T::one(), T::zero());
        let mut acc = Complex::new(T::zero(), T::zero());
        for &v in &weighted {
            acc = acc + e * v;
            e = e * step;
        }
        acc
    };
    let re_at = |i: usize| -grid.re_extent * T::from_usize_lossy(i) / T::from_usize_lossy(grid.n_re - 1);
    let im_at = |j: usize| {
        -grid.im_extent
            + T::lit(2.0) * grid.im_extent * T::from_usize_lossy(j) / T::from_usize_lossy(grid.n_im - 1)
    };
    let one = Complex::new(T::one(), T::zero());
    // (kappa, re, im, |K0_hat|, on edge)
    let cells: Vec<(T, T, T, T, bool)> = (0..grid.n_re * grid.n_im)
        .into_par_iter()
        .map(|c| {
            let (i, j) = (c / grid.n_im, c % grid.n_im);
            let z = Complex::new(re_at(i), im_at(j));
            let kh = laplace(z);
            ((one + kh).norm(), z.re, z.im, kh.norm(), j == 0 || j == grid.n_im - 1)
        })
        .collect();
    let best = cells
        .iter()
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .expect("grid nonempty");
    let edge = cells
        .iter()
        .filter(|c| c.4)
        .fold(T::zero(), |m, c| m.max(c.3));
    let interior = cells.iter().fold(T::zero(), |m, c| m.max(c.3));
    Ok(PenroseScan {
        k,
        nu: nu.as_f64(),
        delta: delta.as_f64(),
        kappa: best.0.as_f64(),
        argmin: (best.1.as_f64(), best.2.as_f64()),
        edge_magnitude: edge.as_f64(),
        interior_magnitude: interior.as_f64(),
        kernel_mass: mass.as_f64(),
        horizon: (grid.dt * T::from_usize_lossy(samples.len() - 1)).as_f64(),
    })
}
