//! Initial data and the projection onto the normalized constraint set.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::field::SpectralField;
use super::grid::PhaseGrid;
use super::moments::{compute_moments, conserved_quantities, maxwellian_energy, Closure};
use super::ops::RowInterpolant;
use super::stencil::d1_at;
use crate::error::{Error, Result};
use crate::linear::{mu_hat, InteractionKernel};
use crate::multiplier::norms::sobolev_norm;
use crate::real::{japanese, Real};

/// Relative size allowed on the outermost cells of the initial datum.
pub const INITIAL_BOUNDARY_TOL: f64 = 1e-12;
/// Reality defect allowed in a sampled profile, relative to its maximum.
pub const PROFILE_REALITY_TOL: f64 = 1e-14;

/// Closed-form shapes of `h_hat_in(k, eta)`; `eps` multiplies all of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Zero,
    /// `h_hat(+-k, eta) = exp(-eta^2 / (2 width^2))`.
    Gaussian { k: i64, width: f64 },
    /// `h_hat(+-k, eta) = <eta>^{-p} exp(-eta^2 / (2 cutoff^2))`.
    Algebraic { k: i64, p: f64, cutoff: f64 },
    /// Pump `exp(-eta^2 / 2)` at `+-pump_k` and a seed of relative size `seed`
    /// centred at `eta = eta_star` on `k = -1` (mirrored on `k = 1`).
    Echo {
        pump_k: i64,
        seed: f64,
        eta_star: f64,
        width: f64,
    },
    /// Arbitrary sampled values; must already be real-symmetric.
    Sampled { values: Vec<(f64, f64)> },
}

/// How `eps` fixes the size of the datum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpsScale {
    /// `eps` multiplies the profile.
    Amplitude,
    /// `eps` is the `H^s_m` norm of the sampled datum before projection.
    Sobolev { s: f64, m: usize },
}

impl Profile {
    /// Unscaled value at `(k, eta)`; `None` for sampled profiles.
    pub fn value(&self, k: i64, eta: f64) -> Complex<f64> {
        let r = |x: f64| Complex::new(x, 0.0);
        match *self {
            Profile::Zero | Profile::Sampled { .. } => r(0.0),
            Profile::Gaussian { k: k0, width } => {
                if k.abs() == k0.abs() && k != 0 {
                    r((-(eta * eta) / (2.0 * width * width)).exp())
                } else {
                    r(0.0)
                }
            }
            Profile::Algebraic { k: k0, p, cutoff } => {
                if k.abs() == k0.abs() && k != 0 {
                    r(japanese(eta, 0.0).powf(-p) * (-(eta * eta) / (2.0 * cutoff * cutoff)).exp())
                } else {
                    r(0.0)
                }
            }
            Profile::Echo {
                pump_k,
                seed,
                eta_star,
                width,
            } => {
                let mut v = 0.0;
                if k.abs() == pump_k.abs() {
                    v += (-(eta * eta) / 2.0).exp();
                }
                let d = match k {
                    -1 => eta - eta_star,
                    1 => eta + eta_star,
                    _ => f64::INFINITY,
                };
                if d.is_finite() {
                    v += seed * (-(d * d) / (2.0 * width * width)).exp();
                }
                r(v)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::domain(m.to_string()));
        match *self {
            Profile::Gaussian { k, width } => {
                if k == 0 || !(width > 0.0) {
                    return bad("gaussian profile needs k != 0 and width > 0");
                }
            }
            Profile::Algebraic { k, p, cutoff } => {
                if k == 0 || !(p >= 0.0) || !(cutoff > 0.0) {
                    return bad("algebraic profile needs k != 0, p >= 0, cutoff > 0");
                }
            }
            Profile::Echo {
                pump_k,
                seed,
                eta_star,
                width,
            } => {
                if pump_k.abs() < 2 || !seed.is_finite() || !eta_star.is_finite() || !(width > 0.0) {
                    return bad("echo profile needs |pump_k| >= 2, finite seed and eta_star, width > 0");
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Corrections applied by [`init_state`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InitReport {
    /// Multiplier that turned the profile into the requested `eps`.
    pub eps_factor: f64,
    /// Mass removed, `2 pi h_hat(0, 0)` before projection.
    pub mass_correction: f64,
    /// Momentum removed.
    pub momentum_correction: f64,
    /// Velocity scale `lambda` of the x-averaged distribution.
    pub velocity_scale: f64,
    /// Energy defect before the rescaling.
    pub energy_correction: f64,
    pub boundary_ratio: f64,
}

fn sample<T: Real>(profile: &Profile, grid: PhaseGrid<T>) -> Result<SpectralField<T>> {
    if let Profile::Sampled { values } = profile {
        if values.len() != grid.len() {
            return Err(Error::domain(format!(
                "sampled profile has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        let mut f = SpectralField::zeros(grid);
        for (z, &(re, im)) in f.data.iter_mut().zip(values) {
            *z = Complex::new(T::lit(re), T::lit(im));
        }
        return Ok(f);
    }
    Ok(SpectralField::from_fn(grid, |k, e| {
        let v = profile.value(k, e.as_f64());
        Complex::new(T::lit(v.re), T::lit(v.im))
    }))
}

/// Samples `eps * profile`, then enforces zero mass, zero momentum and the
/// Maxwellian energy, in that order.
pub fn init_state<T: Real>(
    profile: &Profile,
    eps: T,
    scale: EpsScale,
    grid: PhaseGrid<T>,
    kernel: &InteractionKernel<T>,
) -> Result<(SpectralField<T>, InitReport)> {
    grid.validate()?;
    profile.validate()?;
    if !(eps >= T::zero()) || !eps.is_finite() {
        return Err(Error::domain(format!("eps must be finite and nonnegative, got {}", eps)));
    }
    let mut f = sample(profile, grid)?;
    let peak = f.max_abs();
    if f.reality_defect() > T::lit(PROFILE_REALITY_TOL) * peak {
        return Err(Error::domain(
            "profile violates h(-k, -eta) = conj h(k, eta)",
        ));
    }
    f.symmetrize();
    let factor = match scale {
        EpsScale::Amplitude => eps,
        EpsScale::Sobolev { s, m } => {
            let n = sobolev_norm(&f, T::lit(s), m)?;
            if n == T::zero() {
                T::zero()
            } else {
                eps / n
            }
        }
    };
    f.data.iter_mut().for_each(|z| *z = *z * factor);

    let boundary = f.boundary_ratio();
    if boundary > T::lit(INITIAL_BOUNDARY_TOL) {
        return Err(Error::domain(format!(
            "initial datum is {:.3e} of its maximum at |eta| = eta_max; increase eta_max",
            boundary.as_f64()
        )));
    }

    let etas = grid.etas();
    let j0 = grid.zero_col();
    let h = grid.d_eta();

    // mass
    let c = f.at(0, j0).re;
    for (z, &e) in f.row_mut(0).iter_mut().zip(&etas) {
        *z = *z - Complex::new(c * mu_hat(e), T::zero());
    }
    let mass_correction = T::TAU() * c;

    // energy: F_0 hat(eta) -> F_0 hat(eta / lambda) keeps mass and scales the second moment
    let base: Vec<Complex<T>> = f
        .row(0)
        .iter()
        .zip(&etas)
        .map(|(z, &e)| *z + Complex::new(mu_hat(e), T::zero()))
        .collect();
    let target = maxwellian_energy::<T>();
    let energy_of = |f: &SpectralField<T>| -> Result<T> {
        let m = compute_moments(f, kernel, Closure::Linear)?;
        Ok(conserved_quantities(&m, kernel).energy - target)
    };
    let rescale = |f: &mut SpectralField<T>, lambda: T| {
        let interp = RowInterpolant::new(&base);
        let half = T::from_usize_lossy(grid.n_eta / 2);
        let row = f.row_mut(0);
        for (j, z) in row.iter_mut().enumerate() {
            let e = etas[j];
            let v = if lambda == T::one() {
                base[j]
            } else {
                interp.at(e / (lambda * h) + half)
            };
            *z = v - Complex::new(mu_hat(e), T::zero());
        }
    };
    let r0 = energy_of(&f)?;
    let energy_correction = r0;
    let mut lambda = T::one();
    if r0 != T::zero() {
        // kinetic part is pi (1 + M_2); 1 + M_2 scales as lambda^{-2}
        let kin = (r0 + target) - energy_of_field_part(&f, kernel)?;
        let want = target - energy_of_field_part(&f, kernel)?;
        if !(kin > T::zero()) || !(want > T::zero()) {
            return Err(Error::domain("energy normalization needs positive kinetic energy"));
        }
        let mut l1 = (kin / want).sqrt();
        let mut l0 = T::one();
        let mut e0 = r0;
        rescale(&mut f, l1);
        let mut e1 = energy_of(&f)?;
        let tol = T::lit(64.0) * T::epsilon() * target;
        for _ in 0..60 {
            if e1.abs() <= tol || e1 == e0 {
                break;
            }
            let next = l1 - e1 * (l1 - l0) / (e1 - e0);
            l0 = l1;
            e0 = e1;
            l1 = next;
            rescale(&mut f, l1);
            e1 = energy_of(&f)?;
        }
        if e1.abs() > T::lit(1e3) * tol {
            return Err(Error::Numeric {
                what: "energy normalization did not converge".into(),
                achieved: e1.abs().as_f64(),
                requested: tol.as_f64(),
            });
        }
        lambda = l1;
    }

    f.symmetrize();

    // momentum: subtract a multiple of the discrete derivative of mu, -i eta mu_hat
    let row = f.row(0);
    let m1 = (Complex::new(T::zero(), T::one()) * d1_at(row, j0, h)).re;
    let g: Vec<Complex<T>> = etas
        .iter()
        .map(|&e| Complex::new(T::zero(), -e * mu_hat(e)))
        .collect();
    let beta = (Complex::new(T::zero(), T::one()) * d1_at(&g, j0, h)).re;
    let a = m1 / beta;
    for (z, gz) in f.row_mut(0).iter_mut().zip(&g) {
        *z = *z - *gz * a;
    }
    let momentum_correction = T::TAU() * m1;

    Ok((
        f.clone(),
        InitReport {
            eps_factor: factor.as_f64(),
            mass_correction: mass_correction.as_f64(),
            momentum_correction: momentum_correction.as_f64(),
            velocity_scale: lambda.as_f64(),
            energy_correction: energy_correction.as_f64(),
            boundary_ratio: f.boundary_ratio().as_f64(),
        },
    ))
}

fn energy_of_field_part<T: Real>(f: &SpectralField<T>, kernel: &InteractionKernel<T>) -> Result<T> {
    let m = compute_moments(f, kernel, Closure::Linear)?;
    Ok(conserved_quantities(&m, kernel).field)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PhaseGrid<f64> {
        PhaseGrid::aligned(3, 25.6, 512).unwrap()
    }

    #[test]
    fn zero_eps_gives_maxwellian() {
        let w = InteractionKernel::coulomb();
        let p = Profile::Gaussian { k: 1, width: 1.0 };
        let (f, r) = init_state(&p, 0.0, EpsScale::Amplitude, grid(), &w).unwrap();
        assert_eq!(f.max_abs(), 0.0);
        assert_eq!(r.velocity_scale, 1.0);
    }

    #[test]
    fn projections_hold() {
        let w = InteractionKernel::coulomb();
        let p = Profile::Gaussian { k: 1, width: 1.0 };
        let (f, r) = init_state(&p, 1e-2, EpsScale::Amplitude, grid(), &w).unwrap();
        let m = compute_moments(&f, &w, Closure::Linear).unwrap();
        let c = conserved_quantities(&m, &w);
        assert!(c.mass.abs() < 1e-14 && c.momentum.abs() < 1e-14);
        assert!((c.energy - std::f64::consts::PI).abs() < 1e-13);
        assert!(r.velocity_scale > 1.0);
    }

    #[test]
    fn asymmetric_profile_rejected() {
        let g = PhaseGrid::aligned(1, 8.0, 64).unwrap();
        let mut values = vec![(0.0, 0.0); g.len()];
        values[g.row(1) * g.n_eta + g.zero_col() + 1] = (1.0, 0.0);
        let w = InteractionKernel::coulomb();
        let r = init_state(&Profile::Sampled { values }, 1.0, EpsScale::Amplitude, g, &w);
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}
