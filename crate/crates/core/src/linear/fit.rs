//! Least-squares fits for decay rates and scaling exponents.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Ordinary least-squares line with a 95% interval on the slope.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// Half-width of the 95% confidence interval on the slope.
    pub slope_ci95: f64,
    pub r2: f64,
    pub n: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(Error::domain("linear fit needs at least two paired samples"));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("linear fit needs at least two distinct abscissae"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let flat = syy <= 1e-24 * nf * (1.0 + my * my);
    let r2 = if !flat { 1.0 - sse / syy } else { f64::NAN };
    let (stderr, ci) = if n > 2 {
        let se = (sse / (nf - 2.0) / sxx).sqrt();
        let q = StudentsT::new(0.0, 1.0, nf - 2.0)
            .map(|d| d.inverse_cdf(0.975))
            .unwrap_or(f64::NAN);
        (se, q * se)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr: stderr,
        slope_ci95: ci,
        r2,
        n,
    })
}

/// Least squares `y ~ c + b1 x1 + b2 x2` with 95% intervals on both slopes.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PlaneFit {
    pub slopes: [f64; 2],
    pub intercept: f64,
    pub stderr: [f64; 2],
    pub ci95: [f64; 2],
    pub r2: f64,
    pub n: usize,
}

pub fn plane_fit(x1: &[f64], x2: &[f64], y: &[f64]) -> Result<PlaneFit> {
    let n = y.len();
    if x1.len() != n || x2.len() != n || n < 3 {
        return Err(Error::domain("plane fit needs at least three paired samples"));
    }
    let nf = n as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / nf;
    let (m1, m2, my) = (mean(x1), mean(x2), mean(y));
    let (mut s11, mut s12, mut s22, mut s1y, mut s2y, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let (a, b, c) = (x1[i] - m1, x2[i] - m2, y[i] - my);
        s11 += a * a;
        s12 += a * b;
        s22 += b * b;
        s1y += a * c;
        s2y += b * c;
        syy += c * c;
    }
    let det = s11 * s22 - s12 * s12;
    if !(det > 1e-14 * s11 * s22) {
        return Err(Error::domain("plane fit regressors are collinear"));
    }
    let b1 = (s22 * s1y - s12 * s2y) / det;
    let b2 = (s11 * s2y - s12 * s1y) / det;
    let intercept = my - b1 * m1 - b2 * m2;
    let sse: f64 = (0..n)
        .map(|i| {
            let r = y[i] - intercept - b1 * x1[i] - b2 * x2[i];
            r * r
        })
        .sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { f64::NAN };
    let (stderr, ci95) = if n > 3 {
        let var = sse / (nf - 3.0);
        let se = [(var * s22 / det).sqrt(), (var * s11 / det).sqrt()];
        let q = StudentsT::new(0.0, 1.0, nf - 3.0)
            .map(|d| d.inverse_cdf(0.975))
            .unwrap_or(f64::NAN);
        (se, [q * se[0], q * se[1]])
    } else {
        ([f64::NAN; 2], [f64::NAN; 2])
    };
    Ok(PlaneFit {
        slopes: [b1, b2],
        intercept,
        stderr,
        ci95,
        r2,
        n,
    })
}

/// Exponential fit `y ~ amplitude e^{-rate t}` on a time window.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayFit {
    /// Positive means decay.
    pub rate: f64,
    pub amplitude: f64,
    /// Coefficient of determination; 0 with `degenerate` set when undefined.
    pub r2: f64,
    /// The window held a constant series, so `r2` is undefined.
    pub degenerate: bool,
    pub samples: usize,
}

/// Log-linear least squares of `values` against `times` over `[t0, t1]`.
pub fn fit_decay_rate(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (t0, t1) = window;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t < t0 || t > t1 {
            continue;
        }
        if !(v > 0.0) {
            return Err(Error::domain(format!("nonpositive value {v} at t = {t} in fit window")));
        }
        x.push(t);
        y.push(v.ln());
    }
    let fit = linear_fit(&x, &y)?;
    let degenerate = !fit.r2.is_finite();
    Ok(DecayFit {
        rate: if degenerate { 0.0 } else { -fit.slope },
        amplitude: fit.intercept.exp(),
        r2: if degenerate { 0.0 } else { fit.r2 },
        degenerate,
        samples: x.len(),
    })
}
