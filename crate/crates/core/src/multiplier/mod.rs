//! Ghost multiplier `M(t, k, eta)` and the weights built from it.
//!
//! `M` solves `d/dt M = -nu^{1/3} M / (1 + nu^{2/3} bar_eta(t)^2)` with
//! `M(0) = 1`, so `log M` is minus the time integral of that rate.

pub mod norms;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;
use crate::real::{japanese, Real};
use crate::semigroup::log_space;
use crate::special::exp_minus_one_over;

/// Relative tolerance of the multiplier quadrature.
pub const M_TOL: f64 = 1e-10;

/// Arguments of one multiplier evaluation.
#[derive(Debug, Clone, Copy)]
pub struct MultiplierQuery<T> {
    pub t: T,
    pub k: T,
    pub eta: T,
    pub nu: T,
}

impl<T: Real> MultiplierQuery<T> {
    pub fn eval(&self) -> Result<T> {
        m_eval(self.t, self.k, self.eta, self.nu)
    }
}

/// Parameters of the diagnostic norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormSpec<T> {
    pub s: T,
    pub c: T,
    pub m: usize,
    pub delta: T,
    pub delta1: T,
    pub sigma: T,
    pub beta: T,
    pub p: T,
    pub theta: T,
}

impl<T: Real> Default for NormSpec<T> {
    fn default() -> Self {
        NormSpec {
            s: T::zero(),
            c: T::zero(),
            m: 0,
            delta: T::lit(0.05),
            delta1: T::lit(0.025),
            sigma: T::lit(4.0),
            beta: T::lit(2.0),
            p: T::lit(6.0),
            theta: T::lit(1.5),
        }
    }
}

impl<T: Real> NormSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta1 < self.delta) {
            return Err(Error::domain("need delta1 < delta"));
        }
        if !(self.beta < self.sigma) {
            return Err(Error::domain("need beta < sigma"));
        }
        if !(self.theta > T::one() && self.theta < T::lit(2.0)) {
            return Err(Error::domain("theta must lie in (1, 2)"));
        }
        if self.c < T::zero() {
            return Err(Error::domain("decay coefficient c must be nonnegative"));
        }
        Ok(())
    }
}

/// Rate `nu^{1/3} / (1 + nu^{2/3} bar_eta(s)^2)`, equal to `-d/ds log M`.
#[inline]
pub fn m_rate<T: Real>(s: T, k: T, eta: T, nu: T) -> T {
    let c = nu.cbrt();
    let x = nu * s;
    let b = x.exp() * eta - k * s * exp_minus_one_over(x);
    c / (T::one() + c * c * b * b)
}

fn check_query<T: Real>(t: T, nu: T) -> Result<()> {
    if !(nu > T::zero() && nu.is_finite()) {
        return Err(Error::domain(format!("nu must be positive, got {nu}")));
    }
    if !(t >= T::zero() && t.is_finite()) {
        return Err(Error::domain(format!("t must be nonnegative, got {t}")));
    }
    if nu * t > T::max_exp_arg() {
        return Err(Error::Range {
            what: "e^{nu t} overflows".into(),
            arg: (nu * t).as_f64(),
        });
    }
    Ok(())
}

/// `log M(t, k, eta)`.
pub fn m_log<T: Real>(t: T, k: T, eta: T, nu: T) -> Result<T> {
    check_query(t, nu)?;
    let q = adaptive_simpson(|s| m_rate(s, k, eta, nu), T::zero(), t, T::lit(M_TOL))?;
    Ok(-q.value)
}

/// `M(t, k, eta)` in `(0, 1]`.
pub fn m_eval<T: Real>(t: T, k: T, eta: T, nu: T) -> Result<T> {
    Ok(m_log(t, k, eta, nu)?.exp())
}

/// `log M` at each of the increasing times `ts`, integrating piecewise.
pub fn m_log_path<T: Real>(ts: &[T], k: T, eta: T, nu: T) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(ts.len());
    let mut acc = T::zero();
    let mut prev = T::zero();
    for &t in ts {
        check_query(t, nu)?;
        if t < prev {
            return Err(Error::domain("times must be nondecreasing"));
        }
        if t > prev {
            let q = adaptive_simpson(|s| m_rate(s, k, eta, nu), prev, t, T::lit(M_TOL))?;
            acc = acc + q.value;
        }
        out.push(-acc);
        prev = t;
    }
    Ok(out)
}

/// `A_{s,c}(t, k, eta)`: `e^{c nu^{1/3} t} <k,eta>^s M` for `k != 0`,
/// `<eta>^s` for `k = 0`. Brackets are Euclidean, `(1 + k^2 + eta^2)^{1/2}`.
pub fn a_weight<T: Real>(s: T, c: T, t: T, k: T, eta: T, nu: T) -> Result<T> {
    if k == T::zero() {
        return Ok(japanese(T::zero(), eta).powf(s));
    }
    let log = c * nu.cbrt() * t + s * japanese(k, eta).ln() + m_log(t, k, eta, nu)?;
    Ok(log.exp())
}

/// Sample grid for [`check_prop_m`].
#[derive(Debug, Clone)]
pub struct MultiplierGrid<T> {
    pub ks: Vec<T>,
    pub etas: Vec<T>,
    pub nus: Vec<T>,
    /// Number of sample times in `(0, t_hi_factor nu^{-1/3}]`.
    pub n_t: usize,
    pub t_hi_factor: T,
    /// Wavenumbers for the commutator check; may include 0.
    pub commutator_ks: Vec<T>,
    pub commutator_etas: Vec<T>,
}

impl<T: Real> MultiplierGrid<T> {
    /// `k in {1, 2, 4}`, `eta in [-50, 50]`, `nu in {1e-5, 1e-3}`, `t <= 5 nu^{-1/3}`.
    pub fn standard() -> Self {
        MultiplierGrid {
            ks: vec![T::one(), T::lit(2.0), T::lit(4.0)],
            etas: lin_space(T::lit(-50.0), T::lit(50.0), 201),
            nus: vec![T::lit(1e-5), T::lit(1e-3)],
            n_t: 60,
            t_hi_factor: T::lit(5.0),
            commutator_ks: vec![T::zero(), T::one(), T::lit(2.0), T::lit(4.0)],
            commutator_etas: lin_space(T::lit(-50.0), T::lit(50.0), 21),
        }
    }

    pub fn times(&self, nu: T) -> Vec<T> {
        let hi = self.t_hi_factor * nu.powf(T::lit(-1.0 / 3.0));
        let mut ts = vec![T::zero()];
        ts.extend(log_space(hi * T::lit(1e-3), hi, self.n_t.max(2)));
        ts
    }
}

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn lin_space<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![lo];
    }
    let d = (hi - lo) / T::from_usize_lossy(n - 1);
    (0..n).map(|i| lo + d * T::from_usize_lossy(i)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PropMPerNu {
    pub nu: f64,
    pub min_m: f64,
    pub max_deta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropMReport {
    /// Minimum of `M` over the `k != 0` samples.
    pub c_m: f64,
    /// `(nu, k, eta, t)` attaining `c_m`.
    pub c_m_witness: (f64, f64, f64, f64),
    /// Minimum of `(-d_t M / M + nu bar_eta^2) / nu^{1/3}` over `k != 0`.
    pub coercivity_min: f64,
    /// Maximum of the normalized commutator ratio.
    pub commutator_max: f64,
    /// Maximum of `|d_eta M| / nu^{1/3}`.
    pub derivative_max: f64,
    pub per_nu: Vec<PropMPerNu>,
    /// `max |M(t, 0, 0) - e^{-nu^{1/3} t}|` over the sample times.
    pub k0_closed_form_error: f64,
    pub samples: usize,
}

/// Numerical report on the multiplier bounds (a)-(d).
pub fn check_prop_m<T: Real>(grid: &MultiplierGrid<T>) -> Result<PropMReport> {
    use rayon::prelude::*;

    if grid.ks.iter().any(|&k| k == T::zero()) {
        return Err(Error::domain("parts (a) and (b) are certified on k != 0 only"));
    }
    let mut per_nu = Vec::new();
    let mut c_m = (f64::INFINITY, (0.0, 0.0, 0.0, 0.0));
    let mut coercivity = f64::INFINITY;
    let mut commutator = 0.0f64;
    let mut derivative = 0.0f64;
    let mut k0_err = 0.0f64;
    let mut samples = 0usize;

    for &nu in &grid.nus {
        let ts = grid.times(nu);
        let c = nu.cbrt();
        let h = c * T::lit(1e-3);
        let cells: Vec<(T, T)> = grid
            .ks
            .iter()
            .flat_map(|&k| grid.etas.iter().map(move |&e| (k, e)))
            .collect();
        // (log M, log M(eta + h), log M(eta - h)) along the time samples.
        let paths: Vec<Result<(Vec<T>, Vec<T>, Vec<T>)>> = cells
            .par_iter()
            .map(|&(k, e)| {
                Ok((
                    m_log_path(&ts, k, e, nu)?,
                    m_log_path(&ts, k, e + h, nu)?,
                    m_log_path(&ts, k, e - h, nu)?,
                ))
            })
            .collect();
        let mut min_m = f64::INFINITY;
        let mut max_d = 0.0f64;
        for (&(k, e), path) in cells.iter().zip(paths) {
            let (l0, lp, lm) = path?;
            for (i, &t) in ts.iter().enumerate() {
                samples += 1;
                let m = l0[i].exp();
                if i > 0 && l0[i] > l0[i - 1] {
                    return Err(Error::invariant(format!(
                        "M increases in t at k = {k}, eta = {e}, nu = {nu}, t = {t}"
                    )));
                }
                if !(m > T::zero() && m <= T::one()) {
                    return Err(Error::invariant(format!(
                        "M = {m} outside (0, 1] at k = {k}, eta = {e}, nu = {nu}, t = {t}"
                    )));
                }
                if m.as_f64() < c_m.0 {
                    c_m = (m.as_f64(), (nu.as_f64(), k.as_f64(), e.as_f64(), t.as_f64()));
                }
                min_m = min_m.min(m.as_f64());
                let x = nu * t;
                let b = x.exp() * e - k * t * exp_minus_one_over(x);
                let coer = (m_rate(t, k, e, nu) + nu * b * b) / c;
                coercivity = coercivity.min(coer.as_f64());
                let deta = (lp[i].exp() - lm[i].exp()) / (h + h);
                max_d = max_d.max((deta.abs() / c).as_f64());
            }
        }
        derivative = derivative.max(max_d);
        per_nu.push(PropMPerNu {
            nu: nu.as_f64(),
            min_m,
            max_deta: max_d,
        });

        let zero = m_log_path(&ts, T::zero(), T::zero(), nu)?;
        for (&t, &l) in ts.iter().zip(&zero) {
            k0_err = k0_err.max((l.exp() - (-c * t).exp()).abs().as_f64());
        }

        let ccells: Vec<(T, T)> = grid
            .commutator_ks
            .iter()
            .flat_map(|&k| grid.commutator_etas.iter().map(move |&e| (k, e)))
            .collect();
        let cpaths: Vec<Vec<T>> = ccells
            .par_iter()
            .map(|&(k, e)| m_log_path(&ts, k, e, nu))
            .collect::<Result<_>>()?;
        for (a, &(k, e)) in ccells.iter().enumerate() {
            for (b, &(l, xi)) in ccells.iter().enumerate() {
                let den_space = japanese(k - l, e - xi).powi(3);
                let num_scale = c * japanese(T::zero(), e).max(japanese(T::zero(), k));
                for (i, &t) in ts.iter().enumerate() {
                    samples += 1;
                    let diff = (cpaths[b][i] - cpaths[a][i]).exp_m1().abs();
                    let tb = japanese(T::zero(), t);
                    let r = diff * num_scale / (den_space * tb * tb);
                    commutator = commutator.max(r.as_f64());
                }
            }
        }
    }
    let report = PropMReport {
        c_m: c_m.0,
        c_m_witness: c_m.1,
        coercivity_min: coercivity,
        commutator_max: commutator,
        derivative_max: derivative,
        per_nu,
        k0_closed_form_error: k0_err,
        samples,
    };
    let finite = [
        report.c_m,
        report.coercivity_min,
        report.commutator_max,
        report.derivative_max,
    ]
    .iter()
    .all(|v| v.is_finite());
    if !finite {
        return Err(Error::invariant(format!("non-finite multiplier report {report:?}")));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_at_one() {
        assert_eq!(m_eval(0.0, 1.0, 3.0, 1e-3f64).unwrap(), 1.0);
    }

    #[test]
    fn zero_mode_closed_form() {
        let nu = 1e-3f64;
        for &t in &[0.5, 10.0, 80.0] {
            let m = m_eval(t, 0.0, 0.0, nu).unwrap();
            assert!((m - (-nu.cbrt() * t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn path_matches_pointwise() {
        let ts = [0.0, 1.0, 5.0, 20.0, 50.0];
        let p = m_log_path(&ts, 1.0, 3.0, 1e-3f64).unwrap();
        for (i, &t) in ts.iter().enumerate() {
            let l = m_log(t, 1.0, 3.0, 1e-3).unwrap();
            assert!((l - p[i]).abs() < 1e-11 * (1.0 + l.abs()));
        }
    }

    #[test]
    fn weight_at_zero_mode() {
        assert_eq!(a_weight(3.0, 0.1, 5.0, 0.0, 0.0, 1e-3f64).unwrap(), 1.0);
        let w = a_weight(2.0, 0.0, 0.0, 1.0, 1.0, 1e-3f64).unwrap();
        assert!((w - 3.0).abs() < 1e-13);
    }

    #[test]
    fn norm_spec_ordering() {
        let mut s = NormSpec::<f64>::default();
        assert!(s.validate().is_ok());
        s.delta1 = s.delta;
        assert!(s.validate().is_err());
    }

    #[test]
    fn grid_rejects_zero_k() {
        let mut g = MultiplierGrid::<f64>::standard();
        g.ks = vec![0.0];
        assert!(check_prop_m(&g).is_err());
    }
}
