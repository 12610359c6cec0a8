//! The exact and explicit pieces of one time step.

use num_complex::Complex;
use rayon::prelude::*;

use super::field::SpectralField;
use super::moments::HydroMoments;
use super::stencil::d1_row;
use crate::error::{Error, Result};
use crate::linear::mu_hat;
use crate::real::{pairwise_sum, Real};

/// Shifted-out energy allowed per transport step, relative to the field.
pub const SHIFT_OUT_TOL: f64 = 1e-12;

fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// Free streaming over one step: `h(k, eta) <- h(k, eta + k dt)`.
///
/// With `dt = d_eta` row `k` moves by `k` cells toward negative `eta` for
/// `k > 0`. Cells entering from the boundary are zero.
pub fn transport_step<T: Real>(field: &mut SpectralField<T>) -> Result<()> {
    let g = field.grid;
    let n = g.n_eta;
    let total = field.l2_norm();
    let mut lost = Vec::new();
    for k in g.ks() {
        if k == 0 {
            continue;
        }
        let s = k.unsigned_abs() as usize;
        let row = field.row_mut(k);
        if s >= n {
            lost.extend(row.iter().map(|z| z.norm_sqr()));
            row.fill(czero());
            continue;
        }
        if k > 0 {
            lost.extend(row[..s].iter().map(|z| z.norm_sqr()));
            row.copy_within(s.., 0);
            row[n - s..].fill(czero());
        } else {
            lost.extend(row[n - s..].iter().map(|z| z.norm_sqr()));
            row.copy_within(..n - s, s);
            row[..s].fill(czero());
        }
    }
    field.time = field.time + g.dt;
    let out = (pairwise_sum(&lost) * g.d_eta()).sqrt();
    if out > T::lit(SHIFT_OUT_TOL) * total {
        return Err(Error::Aliasing(format!(
            "transport pushed {:.3e} of the field norm across the eta boundary at t = {}; \
             increase eta_max",
            (out / total).as_f64(),
            field.time
        )));
    }
    Ok(())
}

/// Cubic Hermite interpolant of a row at fractional column `p`, with
/// fourth-order centered slopes. Zero outside the lattice.
pub struct RowInterpolant<'a, T> {
    row: &'a [Complex<T>],
    slope: Vec<Complex<T>>,
}

impl<'a, T: Real> RowInterpolant<'a, T> {
    pub fn new(row: &'a [Complex<T>]) -> Self {
        let mut slope = vec![czero(); row.len()];
        // slopes in units of one cell
        d1_row(row, T::one(), &mut slope);
        RowInterpolant { row, slope }
    }

    pub fn at(&self, p: T) -> Complex<T> {
        let n = self.row.len();
        if !(p >= T::zero()) || p > T::from_usize_lossy(n - 1) {
            return czero();
        }
        let i = p.floor().to_usize().unwrap_or(0).min(n - 2);
        let s = p - T::from_usize_lossy(i);
        let s2 = s * s;
        let s3 = s2 * s;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = -two * s3 + three * s2;
        let h11 = s3 - s2;
        self.row[i] * h00 + self.slope[i] * h10 + self.row[i + 1] * h01 + self.slope[i + 1] * h11
    }
}

/// Exact Ornstein-Uhlenbeck flow over `dt` on every row:
/// `h(k, eta) <- h(k, a eta) exp(-(1 - a^2) eta^2 / 2)`, `a = e^{-nu dt}`.
///
/// The Maxwellian component `h(k, 0) mu_hat` is propagated analytically (it
/// is stationary) and only the remainder is interpolated.
pub fn ou_step<T: Real>(field: &mut SpectralField<T>, nu: T, dt: T) {
    if nu == T::zero() || dt == T::zero() {
        return;
    }
    let g = field.grid;
    let n = g.n_eta;
    let a = (-nu * dt).exp();
    let damp_coef = -(-T::lit(2.0) * nu * dt).exp_m1() * T::lit(0.5);
    let j0 = g.zero_col();
    let etas = g.etas();
    let inv_h = T::one() / g.d_eta();
    let half = T::from_usize_lossy(n / 2);
    field.data.par_chunks_mut(n).for_each(|row| {
        let c = row[j0];
        let rem: Vec<Complex<T>> = row
            .iter()
            .zip(&etas)
            .map(|(z, &e)| *z - c * mu_hat(e))
            .collect();
        let interp = RowInterpolant::new(&rem);
        for (j, z) in row.iter_mut().enumerate() {
            let e = etas[j];
            if j == j0 {
                *z = c;
                continue;
            }
            let p = a * e * inv_h + half;
            *z = interp.at(p) * (-damp_coef * e * e).exp() + c * mu_hat(e);
        }
    });
}

/// Which terms the explicit right-hand side keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Coupling {
    /// Field term on `mu + h`, `C_mu` and `C_h`.
    Full,
    /// Field term on `mu` and `C_mu` only.
    Linear,
    /// No explicit terms.
    None,
}

/// Explicit part of the equation in Fourier variables:
/// `-[E d_v (mu + h)]^ + nu (C_mu + C_h)^`.
///
/// With `a = nu (rho + M_T)`, `b = nu rho`, `c = -E - nu M_1` it reads
/// `-eta^2 (a * h) - eta (b * d_eta h) + i eta (c * h) + (i eta c - eta^2 nu M_T) mu_hat`,
/// where `*` is the convolution in `k` truncated to the band.
pub fn nonlinear_rhs<T: Real>(
    field: &SpectralField<T>,
    moments: &HydroMoments<T>,
    nu: T,
    coupling: Coupling,
    out: &mut SpectralField<T>,
) {
    let g = field.grid;
    let n = g.n_eta;
    let nr = g.n_rows();
    out.data.iter_mut().for_each(|z| *z = czero());
    if coupling == Coupling::None {
        return;
    }
    let etas = g.etas();
    let mus: Vec<T> = etas.iter().map(|&e| mu_hat(e)).collect();
    let i = Complex::new(T::zero(), T::one());
    let a: Vec<Complex<T>> = (0..nr)
        .map(|r| (moments.rho[r] + moments.m_t[r]) * nu)
        .collect();
    let b: Vec<Complex<T>> = (0..nr).map(|r| moments.rho[r] * nu).collect();
    let c: Vec<Complex<T>> = (0..nr)
        .map(|r| -moments.e_field[r] - moments.m1[r] * nu)
        .collect();

    let deriv: Vec<Complex<T>> = if coupling == Coupling::Full {
        let mut d = vec![czero(); field.data.len()];
        d.par_chunks_mut(n)
            .zip(field.data.par_chunks(n))
            .for_each(|(o, row)| d1_row(row, g.d_eta(), o));
        d
    } else {
        Vec::new()
    };

    let km = g.k_max as isize;
    out.data.par_chunks_mut(n).enumerate().for_each(|(r, o)| {
        let k = r as isize - km;
        let mut sa = vec![czero::<T>(); n];
        let mut sb = vec![czero::<T>(); n];
        let mut sc = vec![czero::<T>(); n];
        if coupling == Coupling::Full {
            for lr in 0..nr {
                let l = lr as isize - km;
                let q = k - l;
                if q.abs() > km {
                    continue;
                }
                let qr = (q + km) as usize;
                let (al, bl, cl) = (a[lr], b[lr], c[lr]);
                let src = &field.data[qr * n..(qr + 1) * n];
                let dsrc = &deriv[qr * n..(qr + 1) * n];
                let za = al.norm_sqr() > T::zero();
                let zb = bl.norm_sqr() > T::zero();
                let zc = cl.norm_sqr() > T::zero();
                for j in 0..n {
                    if za {
                        sa[j] = sa[j] + al * src[j];
                    }
                    if zb {
                        sb[j] = sb[j] + bl * dsrc[j];
                    }
                    if zc {
                        sc[j] = sc[j] + cl * src[j];
                    }
                }
            }
        }
        let ck = c[r];
        let mt = moments.m_t[r] * nu;
        for j in 0..n {
            let e = etas[j];
            let mu_part = (i * ck * e - mt * (e * e)) * mus[j];
            o[j] = sa[j] * (-(e * e)) - sb[j] * e + i * sc[j] * e + mu_part;
        }
    });
}

/// Mixed-coordinate view `f_hat(t, k, xi) = h_hat(t, k, bar_eta(t; k, xi))`
/// sampled at the lattice `xi` values by Hermite interpolation.
pub fn mixed_view<T: Real>(field: &SpectralField<T>, nu: T) -> SpectralField<T> {
    let g = field.grid;
    let n = g.n_eta;
    let t = field.time;
    let mut out = SpectralField::zeros(g);
    out.time = t;
    let (grow, shift) = if nu == T::zero() {
        (T::one(), t)
    } else {
        ((nu * t).exp(), t * crate::special::exp_minus_one_over(nu * t))
    };
    let half = T::from_usize_lossy(n / 2);
    for k in g.ks() {
        let interp = RowInterpolant::new(field.row(k));
        let kk = T::from_i64_lossy(k);
        for j in 0..n {
            let xi = g.eta(j);
            let eta = grow * xi - kk * shift;
            *out.at_mut(k, j) = interp.at(eta / g.d_eta() + half);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::grid::PhaseGrid;

    #[test]
    fn transport_moves_delta_by_k_cells() {
        let g = PhaseGrid::aligned(2, 4.0f64, 64).unwrap();
        let mut f = SpectralField::zeros(g);
        let j0 = g.zero_col();
        *f.at_mut(1, j0) = Complex::new(1.0, 0.0);
        *f.at_mut(-1, j0) = Complex::new(1.0, 0.0);
        *f.at_mut(0, j0 + 3) = Complex::new(2.0, 0.0);
        transport_step(&mut f).unwrap();
        assert_eq!(f.at(1, j0 - 1), Complex::new(1.0, 0.0));
        assert_eq!(f.at(-1, j0 + 1), Complex::new(1.0, 0.0));
        assert_eq!(f.at(0, j0 + 3), Complex::new(2.0, 0.0));
    }

    #[test]
    fn transport_rejects_boundary_loss() {
        let g = PhaseGrid::aligned(1, 4.0f64, 64).unwrap();
        let mut f = SpectralField::zeros(g);
        *f.at_mut(1, 0) = Complex::new(1.0, 0.0);
        assert!(matches!(transport_step(&mut f), Err(Error::Aliasing(_))));
    }

    #[test]
    fn ou_keeps_maxwellian_and_mass() {
        let g = PhaseGrid::aligned(1, 20.0f64, 400).unwrap();
        let mut f = SpectralField::from_fn(g, |k, e| {
            if k == 0 {
                Complex::new(0.3 * mu_hat(e), 0.0)
            } else {
                Complex::new(e * (-(e - 1.0) * (e - 1.0)).exp(), 0.2)
            }
        });
        let before = f.clone();
        ou_step(&mut f, 0.1, 0.5);
        for j in 0..g.n_eta {
            assert!((f.at(0, j) - before.at(0, j)).norm() < 1e-15);
        }
        let j0 = g.zero_col();
        for k in g.ks() {
            assert_eq!(f.at(k, j0), before.at(k, j0));
        }
    }

    #[test]
    fn zero_state_has_zero_rhs() {
        use crate::linear::InteractionKernel;
        use crate::solver::moments::{compute_moments, Closure};
        let g = PhaseGrid::aligned(2, 10.0f64, 100).unwrap();
        let f = SpectralField::zeros(g);
        let m = compute_moments(&f, &InteractionKernel::coulomb(), Closure::Nonlinear).unwrap();
        let mut out = SpectralField::zeros(g);
        nonlinear_rhs(&f, &m, 1e-3, Coupling::Full, &mut out);
        assert_eq!(out.max_abs(), 0.0);
    }

    #[test]
    fn mixed_view_trace_is_density() {
        let g = PhaseGrid::aligned(2, 20.0f64, 400).unwrap();
        let mut f = SpectralField::from_fn(g, |k, e| {
            Complex::new((k as f64 + 3.0) * (-(e - 0.5) * (e - 0.5)).exp(), 0.0)
        });
        f.time = 2.0;
        let nu = 1e-2;
        let v = mixed_view(&f, nu);
        // f_hat(t, k, eta_ct) = h_hat(t, k, 0); eta_ct lands on a lattice node for k = 0 only
        assert!((v.at(0, g.zero_col()) - f.at(0, g.zero_col())).norm() < 1e-15);
    }
}
