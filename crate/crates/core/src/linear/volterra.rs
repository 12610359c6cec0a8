//! Second-kind convolution Volterra equations by product integration.
//!
//! `y(t) = f(t) + int_0^t kappa(t - s) y(s) ds` is discretized with `y`
//! piecewise linear on a uniform grid; the kernel is integrated exactly
//! against each hat function with a five-point Gauss-Legendre rule per cell.

use num_complex::Complex;

use super::{kernel_k0, InteractionKernel};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre5;
use crate::real::Real;

/// Lag weights of the product trapezoidal rule.
#[derive(Debug, Clone)]
pub struct LagWeights<T> {
    /// `int_{(m-1)h}^{mh} kappa(s) (s - (m-1)h)/h ds`, index `m >= 1`.
    pub rising: Vec<T>,
    /// `int_{mh}^{(m+1)h} kappa(s) ((m+1)h - s)/h ds`, index `m >= 0`.
    pub falling: Vec<T>,
}

impl<T: Real> LagWeights<T> {
    pub fn new(kappa: impl Fn(T) -> T, h: T, n: usize) -> Self {
        let mut rising = vec![T::zero(); n + 1];
        let mut falling = vec![T::zero(); n + 1];
        for m in 0..n {
            let a = h * T::from_usize_lossy(m);
            let b = a + h;
            rising[m + 1] = gauss_legendre5(|s| kappa(s) * (s - a) / h, a, b);
            falling[m] = gauss_legendre5(|s| kappa(s) * (b - s) / h, a, b);
        }
        LagWeights { rising, falling }
    }

    /// Weight multiplying `y_j` in the integral up to `t_n`, lag `m = n - j`.
    #[inline]
    fn weight(&self, n: usize, j: usize) -> T {
        let m = n - j;
        let mut w = T::zero();
        if j > 0 {
            w = w + self.falling[m];
        }
        if m > 0 {
            w = w + self.rising[m];
        }
        w
    }
}

/// Solution of a sampled Volterra equation.
#[derive(Debug, Clone)]
pub struct VolterraSolution<T> {
    pub times: Vec<T>,
    pub values: Vec<Complex<T>>,
    pub resolution_warning: Option<String>,
}

/// Solves `y = f + kappa * y` on `t_n = n h`, `n = 0..f.len()`.
pub fn solve_second_kind<T: Real>(
    kappa: impl Fn(T) -> T,
    f: &[Complex<T>],
    h: T,
) -> Result<VolterraSolution<T>> {
    if !(h > T::zero()) || f.is_empty() {
        return Err(Error::domain("Volterra solve needs h > 0 and a nonempty source"));
    }
    let n = f.len() - 1;
    let w = LagWeights::new(&kappa, h, n.max(1));
    let diag = T::one() - w.falling[0];
    if diag.abs() < T::lit(1e-12) {
        return Err(Error::Numeric {
            what: "singular Volterra step".into(),
            achieved: diag.as_f64(),
            requested: 1e-12,
        });
    }
    let mut y: Vec<Complex<T>> = Vec::with_capacity(n + 1);
    y.push(f[0]);
    for (i, &fi) in f.iter().enumerate().take(n + 1).skip(1) {
        let mut acc = fi;
        for (j, &yj) in y.iter().enumerate() {
            acc = acc + yj * w.weight(i, j);
        }
        y.push(acc / diag);
    }

    let samples: Vec<T> = (0..=n).map(|i| kappa(h * T::from_usize_lossy(i))).collect();
    let sup = samples.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let jump = if n >= 1 { (samples[1] - samples[0]).abs() } else { T::zero() };
    let resolution_warning = (sup > T::zero() && jump > T::lit(0.5) * sup).then(|| {
        format!(
            "kernel changes by {:.3} of its maximum over the first step; refine dt",
            (jump / sup).as_f64()
        )
    });
    Ok(VolterraSolution {
        times: (0..=n).map(|i| h * T::from_usize_lossy(i)).collect(),
        values: y,
        resolution_warning,
    })
}

/// `max_n |y_n - f_n - (kappa * y)_n|` under the same discrete quadrature.
pub fn residual<T: Real>(kappa: impl Fn(T) -> T, f: &[Complex<T>], y: &[Complex<T>], h: T) -> T {
    let n = f.len() - 1;
    let w = LagWeights::new(&kappa, h, n.max(1));
    let mut r = T::zero();
    for i in 0..=n {
        let mut acc = f[i];
        for (j, &yj) in y[..=i].iter().enumerate() {
            if i > 0 {
                acc = acc + yj * w.weight(i, j);
            }
        }
        r = r.max((y[i] - acc).norm());
    }
    r
}

/// One density mode of the linearized problem.
#[derive(Debug, Clone)]
pub struct VolterraProblem<T> {
    pub k: i64,
    pub nu: T,
    pub delta: T,
    /// Source `F(t_n, k)` on `t_n = n dt`, `n = 0..=t_final/dt`.
    pub source: Vec<Complex<T>>,
    pub dt: T,
    pub t_final: T,
}

impl<T: Real> VolterraProblem<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) {
            return Err(Error::domain("dt must be positive"));
        }
        let steps = (self.t_final / self.dt).round().to_usize().unwrap_or(0);
        if self.source.len() != steps + 1 {
            return Err(Error::domain(format!(
                "source has {} samples, the grid needs {}",
                self.source.len(),
                steps + 1
            )));
        }
        Ok(())
    }
}

/// Density `rho(t_n, k)` from the premultiplied equation
/// `e^{c t} rho = e^{c t} F - int K0(t - s) e^{c s} rho(s) ds`, `c = delta nu^{1/3}`.
pub fn volterra_solve<T: Real>(
    problem: &VolterraProblem<T>,
    w: &InteractionKernel<T>,
) -> Result<VolterraSolution<T>> {
    problem.validate()?;
    let (k, nu, delta) = (problem.k, problem.nu, problem.delta);
    if k == 0 {
        return Err(Error::domain("the density kernel is defined for k != 0"));
    }
    if w.is_zero() {
        return Ok(VolterraSolution {
            times: (0..problem.source.len())
                .map(|i| problem.dt * T::from_usize_lossy(i))
                .collect(),
            values: problem.source.clone(),
            resolution_warning: None,
        });
    }
    // Validate the kernel once so the closure below cannot fail.
    kernel_k0(problem.t_final, k, nu, delta, w)?;
    let c = delta * nu.cbrt();
    let pre: Vec<Complex<T>> = problem
        .source
        .iter()
        .enumerate()
        .map(|(i, &f)| f * (c * problem.dt * T::from_usize_lossy(i)).exp())
        .collect();
    let kappa = |s: T| -kernel_k0(s, k, nu, delta, w).unwrap_or(T::zero());
    let mut sol = solve_second_kind(kappa, &pre, problem.dt)?;
    for (y, &t) in sol.values.iter_mut().zip(&sol.times) {
        *y = *y * (-c * t).exp();
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_kernel_exact(a: f64, b: f64, t: f64) -> f64 {
        1.0 + a * (((a - b) * t).exp() - 1.0) / (a - b)
    }

    #[test]
    fn exponential_kernel_closed_form() {
        let (a, b, h) = (0.7, 1.3, 1e-3);
        let n = 2000;
        let f = vec![Complex::new(1.0, 0.0); n + 1];
        let sol = solve_second_kind(|s: f64| a * (-b * s).exp(), &f, h).unwrap();
        for (y, &t) in sol.values.iter().zip(&sol.times) {
            let e = exp_kernel_exact(a, b, t);
            assert!((y.re - e).abs() < 1e-6 * e, "t={t} {} {e}", y.re);
        }
    }

    #[test]
    fn zero_kernel_returns_source() {
        let src: Vec<Complex<f64>> = (0..11).map(|i| Complex::new(i as f64, 1.0)).collect();
        let p = VolterraProblem {
            k: 1,
            nu: 1e-3,
            delta: 0.0,
            source: src.clone(),
            dt: 0.1,
            t_final: 1.0,
        };
        let sol = volterra_solve(&p, &InteractionKernel::zero()).unwrap();
        assert_eq!(sol.values, src);
    }

    #[test]
    fn coarse_step_warns() {
        let f = vec![Complex::new(1.0, 0.0); 5];
        let sol = solve_second_kind(|s: f64| (-50.0 * s).exp(), &f, 0.1).unwrap();
        assert!(sol.resolution_warning.is_some());
    }

    #[test]
    fn source_length_checked() {
        let p = VolterraProblem {
            k: 1,
            nu: 1e-3,
            delta: 0.0,
            source: vec![Complex::new(1.0f64, 0.0); 3],
            dt: 0.1,
            t_final: 1.0,
        };
        assert!(volterra_solve(&p, &InteractionKernel::coulomb()).is_err());
    }
}
