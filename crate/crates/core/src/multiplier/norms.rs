//! Diagnostic norms on spectral fields.
//!
//! Multiplication by `v` is `i d/d eta` on the Fourier side. It is realized
//! spectrally: a row is expanded as `sum_m c_m e^{-i v_m eta}` on the periodic
//! extension of the `eta` grid, multiplied by `v_m`, and resummed.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::{a_weight, NormSpec};
use crate::error::{Error, Result};
use crate::real::{japanese, pairwise_sum, Real};
use crate::semigroup::bar_eta;
use crate::solver::field::SpectralField;
use crate::solver::grid::PhaseGrid;

/// Largest boundary magnitude, relative to the field maximum, that still
/// allows spectral differentiation in `eta`.
pub const SPECTRAL_BOUNDARY_TOL: f64 = 1e-12;

/// Geometric ladder `K_j = 4^j`.
#[inline]
pub fn ladder<T: Real>(j: usize) -> T {
    T::lit(4f64.powi(j as i32))
}

/// Transforms between an `eta` row and its velocity coefficients.
pub struct VelocityTransform<T: Real> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    /// `v_m` for coefficient index `m` in FFT order.
    pub v: Vec<T>,
    d_eta: T,
}

impl<T: Real> VelocityTransform<T> {
    pub fn new(grid: &PhaseGrid<T>) -> Self {
        let n = grid.n_eta;
        let mut planner = FftPlanner::new();
        let dv = T::TAU() / (T::from_usize_lossy(n) * grid.d_eta());
        let v = (0..n)
            .map(|m| {
                let s = if m < n / 2 { m as i64 } else { m as i64 - n as i64 };
                T::from_i64_lossy(s) * dv
            })
            .collect();
        VelocityTransform {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            v,
            d_eta: grid.d_eta(),
        }
    }

    /// Velocity coefficients `c_m` (up to a sign `(-1)^m` that cancels in
    /// every pointwise operation).
    pub fn coefficients(&self, row: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut buf = row.to_vec();
        self.inverse.process(&mut buf);
        let inv_n = T::one() / T::from_usize_lossy(self.n);
        for z in &mut buf {
            *z = *z * inv_n;
        }
        buf
    }

    pub fn resum(&self, mut coeffs: Vec<Complex<T>>) -> Vec<Complex<T>> {
        self.forward.process(&mut coeffs);
        coeffs
    }

    /// `(i d/d eta)^alpha` applied to a row.
    pub fn moment(&self, row: &[Complex<T>], alpha: usize) -> Vec<Complex<T>> {
        if alpha == 0 {
            return row.to_vec();
        }
        let mut c = self.coefficients(row);
        for (z, &v) in c.iter_mut().zip(&self.v) {
            *z = *z * v.powi(alpha as i32);
        }
        self.resum(c)
    }

    /// `int |<v>^w g|^2 dv` scaled to match `int |g_hat|^2 d eta`.
    pub fn weighted_norm_sq(&self, row: &[Complex<T>], w: T) -> T {
        let c = self.coefficients(row);
        let sq: Vec<T> = c
            .iter()
            .zip(&self.v)
            .map(|(z, &v)| z.norm_sqr() * japanese(T::zero(), v).powf(w + w))
            .collect();
        pairwise_sum(&sq) * self.d_eta * T::from_usize_lossy(self.n)
    }
}

fn check_spectral<T: Real>(field: &SpectralField<T>) -> Result<()> {
    let g = field.grid;
    let max = field.max_abs();
    let n = g.n_eta;
    for k in g.ks() {
        let row = field.row(k);
        let edge = row[0].norm().max(row[1].norm()).max(row[n - 1].norm());
        if edge > T::lit(SPECTRAL_BOUNDARY_TOL) * max {
            return Err(Error::domain(format!(
                "row k = {k} is not small at the eta boundary ({:e} of max); \
                 spectral moments would alias",
                (edge / max).as_f64()
            )));
        }
    }
    Ok(())
}

/// Weight table `w(k, eta_j)` over the lattice, evaluated in parallel.
fn weight_table<T: Real>(
    grid: &PhaseGrid<T>,
    w: impl Fn(i64, T) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let n = grid.n_eta;
    (0..grid.len())
        .into_par_iter()
        .map(|i| w(grid.k_of(i / n), grid.eta(i % n)))
        .collect()
}

fn moment_sum<T: Real>(
    field: &SpectralField<T>,
    m: usize,
    coef: impl Fn(usize) -> T,
    weights: &[T],
) -> Result<T> {
    let g = field.grid;
    if m > 0 {
        check_spectral(field)?;
    }
    let vt = VelocityTransform::new(&g);
    let n = g.n_eta;
    let mut total = T::zero();
    for alpha in 0..=m {
        let rows: Vec<T> = (0..g.n_rows())
            .into_par_iter()
            .map(|r| {
                let row = &field.data[r * n..(r + 1) * n];
                let moved = vt.moment(row, alpha);
                let sq: Vec<T> = moved
                    .iter()
                    .zip(&weights[r * n..(r + 1) * n])
                    .map(|(z, &w)| z.norm_sqr() * w * w)
                    .collect();
                pairwise_sum(&sq)
            })
            .collect();
        total = total + coef(alpha) * pairwise_sum(&rows) * g.d_eta();
    }
    Ok(total)
}

/// `||f||_{F^{s,c}_m}` at time `t`.
pub fn norm_f<T: Real>(field: &SpectralField<T>, spec: &NormSpec<T>, t: T, nu: T) -> Result<T> {
    spec.validate()?;
    let w = weight_table(&field.grid, |k, e| {
        a_weight(spec.s, spec.c, t, T::from_i64_lossy(k), e, nu)
    })?;
    let decay = |a: usize| (-T::lit(2.0) * T::from_usize_lossy(a) * nu * t).exp() / ladder(a);
    Ok(moment_sum(field, spec.m, decay, &w)?.sqrt())
}

/// `||f||_{D^{s,c}_m}` at time `t`; `d_v^t` is multiplication by `i bar_eta`.
pub fn norm_d<T: Real>(field: &SpectralField<T>, spec: &NormSpec<T>, t: T, nu: T) -> Result<T> {
    spec.validate()?;
    let w = weight_table(&field.grid, |k, e| {
        let kk = T::from_i64_lossy(k);
        Ok(a_weight(spec.s, spec.c, t, kk, e, nu)? * bar_eta(t, kk, e, nu)?.abs())
    })?;
    let decay = |a: usize| (-T::lit(2.0) * T::from_usize_lossy(a) * nu * t).exp() / ladder(a);
    Ok(moment_sum(field, spec.m, decay, &w)?.sqrt())
}

/// `(sum_{j <= m} ||<k,eta>^s (v^j h)^||^2)^{1/2}`, an `H^s_m` norm.
pub fn sobolev_norm<T: Real>(field: &SpectralField<T>, s: T, m: usize) -> Result<T> {
    let w = weight_table(&field.grid, |k, e| {
        Ok(japanese(T::from_i64_lossy(k), e).powf(s))
    })?;
    Ok(moment_sum(field, m, |_| T::one(), &w)?.sqrt())
}

/// `(sum_k A_{s,c}(t, k, kt)^2 |q_k|^2)^{1/2}` for a hydrodynamic series
/// indexed by `k = -k_max..=k_max`.
pub fn norm_mcal<T: Real>(q: &[Complex<T>], spec: &NormSpec<T>, t: T, nu: T) -> Result<T> {
    if q.len() % 2 != 1 {
        return Err(Error::domain("moment series must have odd length 2 k_max + 1"));
    }
    let k_max = (q.len() / 2) as i64;
    let terms: Vec<T> = q
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let k = T::from_i64_lossy(i as i64 - k_max);
            let a = a_weight(spec.s, spec.c, t, k, k * t, nu)?;
            Ok(a * a * z.norm_sqr())
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&terms).sqrt())
}

/// `(sum_{a + g <= 3} <t>^{-2 theta g} ||D_x^a D_v^g h||^2_{L^2_{m - a}})^{1/2}`
/// with `L^2_q` weighted by `<v>^q`.
pub fn norm_h<T: Real>(field: &SpectralField<T>, spec: &NormSpec<T>, t: T) -> Result<T> {
    spec.validate()?;
    check_spectral(field)?;
    let g = field.grid;
    let n = g.n_eta;
    let vt = VelocityTransform::new(&g);
    let etas = g.etas();
    let tb = japanese(T::zero(), t);
    let m = T::from_usize_lossy(spec.m);
    let mut total = T::zero();
    for a in 0..=3usize {
        for gam in 0..=(3 - a) {
            let rows: Vec<T> = (0..g.n_rows())
                .into_par_iter()
                .map(|r| {
                    let k = T::from_i64_lossy(g.k_of(r));
                    let row: Vec<Complex<T>> = field.data[r * n..(r + 1) * n]
                        .iter()
                        .zip(&etas)
                        .map(|(z, &e)| *z * (k.powi(a as i32) * e.powi(gam as i32)))
                        .collect();
                    vt.weighted_norm_sq(&row, m - T::from_usize_lossy(a))
                })
                .collect();
            let damp = tb.powf(-T::lit(2.0) * spec.theta * T::from_usize_lossy(gam));
            total = total + damp * pairwise_sum(&rows);
        }
    }
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(k0: i64, grid: PhaseGrid<f64>) -> SpectralField<f64> {
        SpectralField::from_fn(grid, |k, e| {
            if k.abs() == k0 {
                Complex::new((-(e * e) / 2.0).exp(), 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let g = PhaseGrid::aligned(2, 16.0, 128).unwrap();
        let f = SpectralField::zeros(g);
        let spec = NormSpec {
            m: 2,
            ..NormSpec::default()
        };
        assert_eq!(norm_f(&f, &spec, 1.0, 1e-3).unwrap(), 0.0);
        assert_eq!(norm_d(&f, &spec, 1.0, 1e-3).unwrap(), 0.0);
        assert_eq!(norm_h(&f, &spec, 1.0).unwrap(), 0.0);
        assert_eq!(norm_mcal(&[Complex::new(0.0, 0.0); 5], &spec, 1.0, 1e-3).unwrap(), 0.0);
    }

    #[test]
    fn plain_l2_with_unit_weights() {
        let g = PhaseGrid::aligned(2, 16.0, 256).unwrap();
        let f = bump(1, g);
        let n = norm_f(&f, &NormSpec::default(), 0.0, 1e-3).unwrap();
        assert!((n - f.l2_norm()).abs() < 1e-13);
    }

    #[test]
    fn velocity_moment_of_gaussian() {
        // (i d/d eta) e^{-eta^2/2} = -i eta e^{-eta^2/2}
        let g = PhaseGrid::aligned(1, 16.0f64, 256).unwrap();
        let vt = VelocityTransform::new(&g);
        let row: Vec<Complex<f64>> = g
            .etas()
            .iter()
            .map(|&e| Complex::new((-(e * e) / 2.0).exp(), 0.0))
            .collect();
        let m = vt.moment(&row, 1);
        for (j, z) in m.iter().enumerate() {
            let e = g.eta(j);
            let want = Complex::new(0.0, -e * (-(e * e) / 2.0).exp());
            assert!((z - want).norm() < 1e-12);
        }
    }

    #[test]
    fn mcal_single_mode_at_origin() {
        let mut q = vec![Complex::new(0.0, 0.0); 3];
        q[2] = Complex::new(0.0, 0.7);
        let n: f64 = norm_mcal(&q, &NormSpec::default(), 0.0, 1e-3).unwrap();
        assert!((n - 0.7).abs() < 1e-15);
    }

    #[test]
    fn unresolved_boundary_is_rejected() {
        let g = PhaseGrid::aligned(1, 2.0, 16).unwrap();
        let f = bump(1, g);
        let spec = NormSpec {
            m: 1,
            ..NormSpec::default()
        };
        assert!(norm_f(&f, &spec, 0.0, 1e-3).is_err());
    }
}
