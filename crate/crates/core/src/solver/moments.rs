use num_complex::Complex;
use serde::Serialize;

use super::field::SpectralField;
use super::stencil::{d1_at, d2_at};
use crate::error::{Error, Result};
use crate::linear::InteractionKernel;
use crate::real::Real;

/// Series terms are dropped once their sup-norm falls below this fraction.
pub const SERIES_TOL: f64 = 1e-14;
pub const SERIES_MAX_TERMS: usize = 200;
/// Lower bound on the reconstructed density and temperature.
pub const POSITIVITY_FLOOR: f64 = 0.5;
/// Oversampling factor of the physical `x` grid used by the guards.
pub const GUARD_OVERSAMPLE: usize = 4;

/// Hydrodynamic moments of one time slice, indexed by `k + k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct HydroMoments<T> {
    pub k_max: usize,
    pub rho: Vec<Complex<T>>,
    pub m1: Vec<Complex<T>>,
    pub m2: Vec<Complex<T>>,
    pub u: Vec<Complex<T>>,
    pub temp: Vec<Complex<T>>,
    /// `M_T = (1 + rho) T = M_2 - rho - M_1 u`.
    pub m_t: Vec<Complex<T>>,
    pub e_field: Vec<Complex<T>>,
}

type Band<T> = Vec<Complex<T>>;

fn zero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// Product of two real-space functions given by their Fourier bands,
/// truncated to the band.
pub fn convolve<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Band<T> {
    let n = a.len();
    let km = (n / 2) as isize;
    let mut out = vec![zero(); n];
    for (i, o) in out.iter_mut().enumerate() {
        let k = i as isize - km;
        let mut s = zero();
        for (p, &ap) in a.iter().enumerate() {
            let l = p as isize - km;
            let q = k - l;
            if q.abs() <= km {
                s = s + ap * b[(q + km) as usize];
            }
        }
        *o = s;
    }
    out
}

fn sup<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().fold(T::zero(), |m, z| m.max(z.norm()))
}

/// Values of a band on `GUARD_OVERSAMPLE (2 k_max + 1)` points of `[0, 2 pi)`.
pub fn physical_values<T: Real>(band: &[Complex<T>]) -> Vec<T> {
    let n = band.len();
    let km = (n / 2) as i64;
    let m = GUARD_OVERSAMPLE * n;
    (0..m)
        .map(|i| {
            let x = T::TAU() * T::from_usize_lossy(i) / T::from_usize_lossy(m);
            let mut s = T::zero();
            for (p, z) in band.iter().enumerate() {
                let k = T::from_i64_lossy(p as i64 - km);
                let (sn, cs) = (k * x).sin_cos();
                s = s + z.re * cs - z.im * sn;
            }
            s
        })
        .collect()
}

/// `sum_j (-rho)^j`, truncated to the band.
pub fn neumann_series<T: Real>(rho: &[Complex<T>]) -> Result<Band<T>> {
    let n = rho.len();
    let km = n / 2;
    let neg: Band<T> = rho.iter().map(|z| -*z).collect();
    let mut term = vec![zero(); n];
    term[km] = Complex::new(T::one(), T::zero());
    let mut sum = term.clone();
    for _ in 0..SERIES_MAX_TERMS {
        term = convolve(&neg, &term);
        for (s, t) in sum.iter_mut().zip(&term) {
            *s = *s + *t;
        }
        if sup(&term) <= T::lit(SERIES_TOL) * sup(&sum) {
            return Ok(sum);
        }
    }
    Err(Error::StateEscape(format!(
        "density series did not converge in {SERIES_MAX_TERMS} terms"
    )))
}

/// Which closure the collision coefficients use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Closure {
    /// Full geometric-series closure.
    Nonlinear,
    /// First order in the perturbation: `u = M_1`, `M_T = T = M_2 - rho`.
    Linear,
}

/// Moments of `h_hat` from its values and `eta`-derivatives at `eta = 0`.
///
/// `rho_hat = h_hat(k, 0)`, `M_1 = i d_eta h_hat(k, 0)`,
/// `M_2 = -d_eta^2 h_hat(k, 0)`, `E_hat = -i k W_hat(k) rho_hat`.
pub fn compute_moments<T: Real>(
    field: &SpectralField<T>,
    kernel: &InteractionKernel<T>,
    closure: Closure,
) -> Result<HydroMoments<T>> {
    let g = field.grid;
    let h = g.d_eta();
    let j0 = g.zero_col();
    let i = Complex::new(T::zero(), T::one());
    let mut rho = Vec::with_capacity(g.n_rows());
    let mut m1 = Vec::with_capacity(g.n_rows());
    let mut m2 = Vec::with_capacity(g.n_rows());
    let mut e_field = Vec::with_capacity(g.n_rows());
    for k in g.ks() {
        let row = field.row(k);
        let r = row[j0];
        rho.push(r);
        m1.push(i * d1_at(row, j0, h));
        m2.push(-d2_at(row, j0, h));
        let kk = T::from_i64_lossy(k);
        e_field.push(-i * r * (kk * kernel.w_hat(k)));
    }
    let (u, temp, m_t) = match closure {
        Closure::Linear => {
            let mt: Band<T> = m2.iter().zip(&rho).map(|(a, b)| *a - *b).collect();
            (m1.clone(), mt.clone(), mt)
        }
        Closure::Nonlinear => {
            let rho_x = physical_values(&rho);
            let rmin = rho_x.iter().fold(T::infinity(), |m, &v| m.min(v));
            let rsup = rho_x.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
            if rsup >= T::lit(0.5) || T::one() + rmin < T::lit(POSITIVITY_FLOOR) {
                return Err(Error::StateEscape(format!(
                    "density perturbation left the small-data regime (sup |rho| = {:.3e}, \
                     min 1 + rho = {:.3e})",
                    rsup.as_f64(),
                    (T::one() + rmin).as_f64()
                )));
            }
            let inv = neumann_series(&rho)?;
            let u = convolve(&m1, &inv);
            let m1u = convolve(&m1, &u);
            let mt: Band<T> = m2
                .iter()
                .zip(&rho)
                .zip(&m1u)
                .map(|((a, b), c)| *a - *b - *c)
                .collect();
            let temp = convolve(&mt, &inv);
            let t_x = physical_values(&temp);
            let tmin = t_x.iter().fold(T::infinity(), |m, &v| m.min(v));
            if T::one() + tmin < T::lit(POSITIVITY_FLOOR) {
                return Err(Error::StateEscape(format!(
                    "temperature floor violated (min 1 + T = {:.3e})",
                    (T::one() + tmin).as_f64()
                )));
            }
            (u, temp, mt)
        }
    };
    Ok(HydroMoments {
        k_max: g.k_max,
        rho,
        m1,
        m2,
        u,
        temp,
        m_t,
        e_field,
    })
}

impl<T: Real> HydroMoments<T> {
    #[inline]
    pub fn idx(&self, k: i64) -> usize {
        (k + self.k_max as i64) as usize
    }

    /// Relative defects of `(1 + rho) u = M_1` and `(1 + rho) T = M_T`.
    pub fn closure_defect(&self) -> (T, T) {
        let one_plus = |a: &[Complex<T>]| -> Band<T> {
            let mut p = convolve(&self.rho, a);
            for (x, y) in p.iter_mut().zip(a) {
                *x = *x + *y;
            }
            p
        };
        let rel = |a: &[Complex<T>], b: &[Complex<T>]| {
            let d = a
                .iter()
                .zip(b)
                .fold(T::zero(), |m, (x, y)| m.max((*x - *y).norm()));
            let s = sup(b);
            if s == T::zero() {
                d
            } else {
                d / s
            }
        };
        (
            rel(&one_plus(&self.u), &self.m1),
            rel(&one_plus(&self.temp), &self.m_t),
        )
    }

    /// `sum_k W_hat(k) |rho_hat(k)|^2`.
    pub fn potential_sum(&self, kernel: &InteractionKernel<T>) -> T {
        let km = self.k_max as i64;
        (-km..=km)
            .map(|k| kernel.w_hat(k) * self.rho[self.idx(k)].norm_sqr())
            .fold(T::zero(), |a, b| a + b)
    }

    /// `sum_k |E_hat(k)|^2`.
    pub fn field_sum(&self) -> T {
        self.e_field.iter().fold(T::zero(), |a, z| a + z.norm_sqr())
    }
}

/// Mass, momentum and energy of `F = mu + h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Conserved<T> {
    /// `int int h dx dv`.
    pub mass: T,
    /// `int int v h dx dv`.
    pub momentum: T,
    /// `1/2 int int F v^2 dx dv`.
    pub kinetic: T,
    /// `1/2 int rho (W * rho) dx`.
    pub field: T,
    pub energy: T,
}

/// Energy of the bare Maxwellian, `(1/2) 2 pi`.
pub fn maxwellian_energy<T: Real>() -> T {
    T::PI()
}

pub fn conserved_quantities<T: Real>(
    moments: &HydroMoments<T>,
    kernel: &InteractionKernel<T>,
) -> Conserved<T> {
    let two_pi = T::TAU();
    let z = moments.idx(0);
    let kinetic = T::PI() * (T::one() + moments.m2[z].re);
    let field = T::PI() * moments.potential_sum(kernel);
    Conserved {
        mass: two_pi * moments.rho[z].re,
        momentum: two_pi * moments.m1[z].re,
        kinetic,
        field,
        energy: kinetic + field,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::grid::PhaseGrid;

    #[test]
    fn maxwellian_has_zero_moments() {
        let g = PhaseGrid::aligned(3, 20.0f64, 400).unwrap();
        let f = SpectralField::zeros(g);
        let m = compute_moments(&f, &InteractionKernel::coulomb(), Closure::Nonlinear).unwrap();
        assert!(m.rho.iter().chain(&m.e_field).all(|z| z.norm() == 0.0));
        let c = conserved_quantities(&m, &InteractionKernel::coulomb());
        assert_eq!(c.energy, std::f64::consts::PI);
    }

    #[test]
    fn single_mode_density_and_field() {
        let eps = 1e-3;
        let g = PhaseGrid::aligned(2, 20.0f64, 400).unwrap();
        let f = SpectralField::from_fn(g, |k, e| {
            if k.abs() == 1 {
                Complex::new(eps * (-(e * e) / 2.0).exp(), 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        });
        let w = InteractionKernel::coulomb();
        let m = compute_moments(&f, &w, Closure::Nonlinear).unwrap();
        assert!((m.rho[m.idx(1)] - Complex::new(eps, 0.0)).norm() < 1e-15);
        assert!((m.e_field[m.idx(1)] - Complex::new(0.0, -eps)).norm() < 1e-15);
        assert!((m.e_field[m.idx(-1)] - Complex::new(0.0, eps)).norm() < 1e-15);
        let (du, dt) = m.closure_defect();
        assert!(du < 1e-10 && dt < 1e-10, "{du} {dt}");
    }

    #[test]
    fn large_density_escapes() {
        let g = PhaseGrid::aligned(1, 20.0f64, 400).unwrap();
        let f = SpectralField::from_fn(g, |k, e| {
            if k.abs() == 1 {
                Complex::new(0.4 * (-(e * e) / 2.0).exp(), 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        });
        let r = compute_moments(&f, &InteractionKernel::coulomb(), Closure::Nonlinear);
        assert!(matches!(r, Err(Error::StateEscape(_))));
    }

    #[test]
    fn convolution_is_band_truncated() {
        let mut a = vec![Complex::new(0.0f64, 0.0); 5];
        a[3] = Complex::new(1.0, 0.0);
        let b = a.clone();
        let c = convolve(&a, &b);
        assert_eq!(c[4], Complex::new(1.0, 0.0));
        let d = convolve(&c, &a);
        assert!(d.iter().all(|z| z.norm() == 0.0));
    }
}
