//! Collisional characteristics and the dissipation semigroup of the linear
//! Fokker-Planck flow in Fourier variables.
//!
//! Free transport composed with the Ornstein-Uhlenbeck drift moves a Fourier
//! mode along `eta' = nu eta - k`. Along that curve the Gaussian damping
//! accumulates as `S(t, tau; k, eta) = exp(-nu int_tau^t bar_eta(s)^2 ds)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;
use crate::real::Real;
use crate::special::{dissipation_shape, exp_minus_one_over, one_minus_exp_neg_over};

/// Relative tolerance of the exponent quadrature in [`s_general`].
pub const S_GENERAL_TOL: f64 = 1e-12;

/// Value of the semigroup together with its logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemigroupValue<T> {
    pub value: T,
    pub exponent: T,
}

impl<T: Real> SemigroupValue<T> {
    pub fn from_exponent(exponent: T) -> Self {
        let value = exponent.exp().max(T::min_positive_value()).min(T::one());
        SemigroupValue { value, exponent }
    }

    pub fn one() -> Self {
        SemigroupValue {
            value: T::one(),
            exponent: T::zero(),
        }
    }

    /// `self^p` computed on the exponent.
    pub fn powf(self, p: T) -> Self {
        Self::from_exponent(self.exponent * p)
    }
}

/// Arguments of a characteristic or semigroup evaluation.
#[derive(Debug, Clone, Copy)]
pub struct CharParams<T> {
    pub nu: T,
    pub k: T,
    pub eta: T,
    pub t: T,
    pub tau: T,
}

impl<T: Real> CharParams<T> {
    pub fn validate(&self) -> Result<()> {
        check_nu(self.nu)?;
        if !(self.tau >= T::zero() && self.t >= self.tau) {
            return Err(Error::domain(format!(
                "need t >= tau >= 0, got t = {}, tau = {}",
                self.t, self.tau
            )));
        }
        Ok(())
    }

    pub fn eta_ct(&self) -> Result<T> {
        eta_ct(self.t, self.k, self.nu)
    }

    pub fn bar_eta(&self) -> Result<T> {
        bar_eta(self.tau, self.k, self.eta, self.nu)
    }

    pub fn s_general(&self) -> Result<SemigroupValue<T>> {
        s_general(self.t, self.tau, self.k, self.eta, self.nu)
    }
}

fn check_nu<T: Real>(nu: T) -> Result<()> {
    if nu > T::zero() && nu.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("nu must be positive, got {nu}")))
    }
}

fn check_time<T: Real>(name: &str, t: T) -> Result<()> {
    if t >= T::zero() && t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be nonnegative, got {t}")))
    }
}

/// Critical frequency `k (1 - e^{-nu t}) / nu`.
pub fn eta_ct<T: Real>(t: T, k: T, nu: T) -> Result<T> {
    check_nu(nu)?;
    check_time("t", t)?;
    Ok(k * t * one_minus_exp_neg_over(nu * t))
}

/// Backward characteristic `e^{nu tau} eta - k (e^{nu tau} - 1) / nu`.
pub fn bar_eta<T: Real>(tau: T, k: T, eta: T, nu: T) -> Result<T> {
    check_nu(nu)?;
    check_time("tau", tau)?;
    let x = nu * tau;
    if x > T::max_exp_arg() {
        return Err(Error::Range {
            what: "e^{nu tau} overflows".into(),
            arg: x.as_f64(),
        });
    }
    Ok(x.exp() * eta - k * tau * exp_minus_one_over(x))
}

/// `S(t, tau; k, eta)` by adaptive quadrature of `nu bar_eta(s)^2`.
pub fn s_general<T: Real>(t: T, tau: T, k: T, eta: T, nu: T) -> Result<SemigroupValue<T>> {
    CharParams { nu, k, eta, t, tau }.validate()?;
    if t == tau {
        return Ok(SemigroupValue::one());
    }
    // Anchored at the upper end, `bar_eta(s) = e^{-nu u} bar_eta(t) + k u (1 - e^{-nu u}) / (nu u)`
    // with `u = t - s`, which is smooth in `s` even where the two terms of the
    // direct form cancel. Overflow is checked once, at `t`.
    let bt = bar_eta(t, k, eta, nu)?;
    let integrand = |s: T| {
        let u = t - s;
        let x = nu * u;
        let b = (-x).exp() * bt + k * u * one_minus_exp_neg_over(x);
        nu * b * b
    };
    let q = adaptive_simpson(integrand, tau, t, T::lit(S_GENERAL_TOL))?;
    if !q.value.is_finite() {
        return Err(Error::Range {
            what: "semigroup exponent overflows".into(),
            arg: (nu * t).as_f64(),
        });
    }
    Ok(SemigroupValue::from_exponent(-q.value))
}

/// `S(dt, k) = exp(-k^2 g(nu dt) / nu^2)`, the semigroup on the critical line.
pub fn s_density<T: Real>(dt: T, k: T, nu: T) -> Result<SemigroupValue<T>> {
    check_nu(nu)?;
    check_time("dt", dt)?;
    let x = nu * dt;
    let exponent = -(k * k) / (nu * nu) * dissipation_shape(x);
    Ok(SemigroupValue::from_exponent(exponent))
}

/// Sample grid for the semigroup bound checks.
///
/// Times are log-spaced in `[t_lo_factor, t_hi_factor] * nu^{-1/3}`.
#[derive(Debug, Clone)]
pub struct SemigroupGrid<T> {
    pub ks: Vec<T>,
    pub nus: Vec<T>,
    pub n_t: usize,
    pub t_lo_factor: T,
    pub t_hi_factor: T,
    pub ps: Vec<T>,
    pub deltas: Vec<T>,
}

impl<T: Real> SemigroupGrid<T> {
    /// `k = 1..4`, `nu in {1e-5, 1e-3}`, `t` up to `10 nu^{-1/3}`.
    pub fn standard() -> Self {
        SemigroupGrid {
            ks: (1..=4).map(|k| T::from_usize_lossy(k)).collect(),
            nus: vec![T::lit(1e-5), T::lit(1e-3)],
            n_t: 200,
            t_lo_factor: T::lit(1e-3),
            t_hi_factor: T::lit(10.0),
            ps: vec![T::lit(0.25), T::lit(0.5), T::one()],
            deltas: vec![T::lit(0.01), T::lit(0.05)],
        }
    }

    pub fn times(&self, nu: T) -> Vec<T> {
        let scale = nu.powf(T::lit(-1.0 / 3.0));
        log_space(self.t_lo_factor * scale, self.t_hi_factor * scale, self.n_t)
    }

    fn validate(&self) -> Result<()> {
        if self.ks.is_empty() || self.nus.is_empty() || self.n_t < 2 {
            return Err(Error::domain("sample grid must be nonempty"));
        }
        for &k in &self.ks {
            if k == T::zero() {
                return Err(Error::domain("bounds are stated for k != 0"));
            }
        }
        for &nu in &self.nus {
            check_nu(nu)?;
        }
        if !(self.t_lo_factor > T::zero() && self.t_hi_factor > self.t_lo_factor) {
            return Err(Error::domain("time window must satisfy 0 < lo < hi"));
        }
        Ok(())
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_space<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let d = (b - a) / T::from_usize_lossy(n - 1);
    (0..n)
        .map(|i| (a + d * T::from_usize_lossy(i)).exp())
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PropSReport {
    /// Largest `delta_0` passing the strict decay bound on every sample.
    pub delta0: f64,
    /// Sample `(k, nu, t)` where the bound is tightest.
    pub delta0_witness: (f64, f64, f64),
    /// `max e^{delta nu^{1/3} (t - tau)} S^p(t - tau, k)` over the grid.
    pub growth_constant: f64,
    pub growth_witness: (f64, f64, f64, f64, f64),
    pub samples: usize,
}

/// Ratio `-log S(t, k) / min(nu k^2 t^3, k^2 t / nu)` on one sample.
fn decay_ratio<T: Real>(t: T, k: T, nu: T) -> Result<T> {
    let e = s_density(t, k, nu)?.exponent;
    let k2 = k * k;
    let bound = (nu * k2 * t * t * t).min(k2 * t / nu);
    Ok(-e / bound)
}

/// Certifies the strict decay bound of `S(t, k)` and the growth constant.
///
/// `delta_0` is found by bisection on the predicate "the bound holds at every
/// sample" to three significant digits and rounded down.
pub fn check_prop_s_bounds<T: Real>(grid: &SemigroupGrid<T>) -> Result<PropSReport> {
    grid.validate()?;
    let mut ratios: Vec<(T, T, T, T)> = Vec::new();
    for &nu in &grid.nus {
        let times = grid.times(nu);
        for &k in &grid.ks {
            let mut prev: Option<(T, T)> = None;
            for &t in &times {
                let e = s_density(t, k, nu)?.exponent;
                if let Some((tp, ep)) = prev {
                    if !(e < ep) {
                        return Err(Error::invariant(format!(
                            "S(t,k) not strictly decreasing at k = {k}, nu = {nu}, \
                             t = {tp} -> {t} (exponents {ep} -> {e})"
                        )));
                    }
                }
                prev = Some((t, e));
                ratios.push((decay_ratio(t, k, nu)?, k, nu, t));
            }
        }
    }
    let holds = |d0: T| ratios.iter().all(|&(r, ..)| r > d0);
    let (mut lo, mut hi) = (T::zero(), T::one());
    while holds(hi) {
        lo = hi;
        hi = hi + hi;
        if hi > T::lit(1e6) {
            return Err(Error::domain("decay ratio unbounded on grid"));
        }
    }
    if !holds(T::min_positive_value()) {
        return Err(Error::invariant("no positive delta_0 certifies the decay bound"));
    }
    while (hi - lo) > T::lit(1e-4) * hi {
        let mid = (lo + hi) * T::lit(0.5);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let witness = ratios
        .iter()
        .copied()
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .expect("grid nonempty");

    let mut best = (T::neg_infinity(), T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    let mut samples = ratios.len();
    for &nu in &grid.nus {
        let times = grid.times(nu);
        let rate = nu.cbrt();
        for &k in &grid.ks {
            for (i, &t) in times.iter().enumerate() {
                for &tau in std::iter::once(&T::zero()).chain(times[..=i].iter()) {
                    let e = s_density(t - tau, k, nu)?.exponent;
                    for &p in &grid.ps {
                        for &d in &grid.deltas {
                            let log = d * rate * (t - tau) + p * e;
                            samples += 1;
                            if log > best.0 {
                                best = (log, k, nu, t, tau, p);
                            }
                        }
                    }
                }
            }
        }
    }
    let growth = best.0.exp();
    if !growth.is_finite() {
        return Err(Error::invariant("growth constant is not finite"));
    }
    Ok(PropSReport {
        delta0: round_down_sig(lo.as_f64(), 3),
        delta0_witness: (witness.1.as_f64(), witness.2.as_f64(), witness.3.as_f64()),
        growth_constant: growth.as_f64(),
        growth_witness: (
            best.1.as_f64(),
            best.2.as_f64(),
            best.3.as_f64(),
            best.4.as_f64(),
            best.5.as_f64(),
        ),
        samples,
    })
}

fn round_down_sig(x: f64, digits: i32) -> f64 {
    if x <= 0.0 {
        return x;
    }
    let scale = 10f64.powi(digits - 1 - x.log10().floor() as i32);
    (x * scale).floor() / scale
}

/// First moment weight `S^p(d,k) |k| (e^{-nu d} - 1)^2 / (2 nu^2)`.
pub fn moment_weight_first<T: Real>(d: T, k: T, nu: T, p: T) -> Result<T> {
    let s = s_density(d, k, nu)?.powf(p).value;
    let a = (-nu * d).exp_m1();
    Ok(s * k.abs() * a * a / (T::lit(2.0) * nu * nu))
}

/// Second moment weight `S^p(t - tau, k) k^2 e^{-4 nu t} (e^{nu tau} - e^{nu t})^4 / (8 nu^4)`.
///
/// Only `d = t - tau` enters since `e^{-nu t}(e^{nu tau} - e^{nu t}) = e^{-nu d} - 1`.
pub fn moment_weight_second<T: Real>(d: T, k: T, nu: T, p: T) -> Result<T> {
    let s = s_density(d, k, nu)?.powf(p).value;
    let a = (-nu * d).exp_m1() / nu;
    Ok(s * k * k * a * a * a * a / T::lit(8.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentWeightNu {
    pub nu: f64,
    /// `nu^{2/3} max` of the first weight.
    pub first: f64,
    /// `nu max` of the second weight.
    pub second: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentWeightReport {
    pub per_nu: Vec<MomentWeightNu>,
    pub first_constant: f64,
    pub second_constant: f64,
    /// Ratio of the largest to the smallest normalized maximum across `nu`.
    pub first_spread: f64,
    pub second_spread: f64,
}

/// Maxima of the scaled moment weights over the grid, per `nu`.
pub fn check_moment_weights<T: Real>(grid: &SemigroupGrid<T>) -> Result<MomentWeightReport> {
    grid.validate()?;
    for &p in &grid.ps {
        if !(p > T::zero() && p <= T::one()) {
            return Err(Error::domain(format!("p must lie in (0, 1], got {p}")));
        }
    }
    let mut per_nu = Vec::new();
    for &nu in &grid.nus {
        let (mut m1, mut m2) = (T::zero(), T::zero());
        let times = grid.times(nu);
        for &k in &grid.ks {
            for &p in &grid.ps {
                for &d in &times {
                    m1 = m1.max(moment_weight_first(d, k, nu, p)?);
                    m2 = m2.max(moment_weight_second(d, k, nu, p)?);
                }
            }
        }
        per_nu.push(MomentWeightNu {
            nu: nu.as_f64(),
            first: (nu.powf(T::lit(2.0 / 3.0)) * m1).as_f64(),
            second: (nu * m2).as_f64(),
        });
    }
    let spread = |f: fn(&MomentWeightNu) -> f64| {
        let hi = per_nu.iter().map(f).fold(f64::MIN, f64::max);
        let lo = per_nu.iter().map(f).fold(f64::MAX, f64::min);
        (hi, hi / lo)
    };
    let (c1, s1) = spread(|r| r.first);
    let (c2, s2) = spread(|r| r.second);
    Ok(MomentWeightReport {
        per_nu,
        first_constant: c1,
        second_constant: c2,
        first_spread: s1,
        second_spread: s2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_ct_limits() {
        assert_eq!(eta_ct(0.0, 3.0, 0.1f64).unwrap(), 0.0);
        assert!((eta_ct(1e4, 1.0, 0.5f64).unwrap() - 2.0).abs() < 1e-12);
        assert!((eta_ct(1.0, 2.0, 1e-8f64).unwrap() - 2.0).abs() < 1e-7);
        assert!(eta_ct(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn eta_ct_bounded_and_monotone() {
        let mut prev = 0.0;
        for i in 1..200 {
            let t = i as f64 * 0.5;
            let v = eta_ct(t, 3.0, 0.05).unwrap();
            assert!(v > prev);
            assert!(v <= (3.0 * t).min(3.0 / 0.05) + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn bar_eta_identities() {
        assert_eq!(bar_eta(0.0, 5.0, 1.7, 0.3).unwrap(), 1.7);
        for &(t, k, nu) in &[(3.0, 2.0, 0.1), (40.0, 1.0, 1e-5), (0.2, 7.0, 2.0)] {
            let e = eta_ct(t, k, nu).unwrap();
            let b: f64 = bar_eta(t, k, e, nu).unwrap();
            assert!(b.abs() < 1e-13 * k * (nu * t).exp(), "{b}");
        }
    }

    #[test]
    fn bar_eta_overflow_is_range_error() {
        match bar_eta(1e4, 1.0, 1.0, 1.0f64) {
            Err(Error::Range { arg, .. }) => assert_eq!(arg, 1e4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn s_general_empty_interval() {
        let s = s_general(2.0, 2.0, 1.0, 0.3, 0.1).unwrap();
        assert_eq!(s.value, 1.0);
        assert_eq!(s.exponent, 0.0);
        assert!(s_general(1.0, 2.0, 1.0, 0.3, 0.1).is_err());
    }

    #[test]
    fn s_density_dt_one_tiny_nu() {
        let s = s_density(1.0, 1.0, 1e-6).unwrap();
        let want = (-1e-6f64 / 3.0).exp();
        assert!(((s.value - want) / want).abs() < 1e-9);
    }

    #[test]
    fn s_density_keeps_exponent_when_value_underflows() {
        let s = s_density(1e3, 10.0, 1e-2).unwrap();
        assert!(s.exponent < -1e3);
        assert!(s.value > 0.0);
    }

    #[test]
    fn prop_s_rejects_zero_k() {
        let mut g = SemigroupGrid::<f64>::standard();
        g.ks.push(0.0);
        assert!(check_prop_s_bounds(&g).is_err());
    }

    #[test]
    fn single_precision_semigroup() {
        let s: SemigroupValue<f32> = s_density(10.0, 1.0, 1e-3).unwrap();
        let d: SemigroupValue<f64> = s_density(10.0, 1.0, 1e-3).unwrap();
        assert!((s.value as f64 - d.value).abs() < 1e-5);
    }
}
