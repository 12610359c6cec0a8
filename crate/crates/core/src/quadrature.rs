//! Adaptive Simpson quadrature and fixed Gauss-Legendre rules.

use crate::error::{Error, Result};
use crate::real::Real;

/// Hard cap on accepted Simpson panels.
pub const MAX_PANELS: usize = 1 << 20;

#[derive(Debug, Clone, Copy)]
pub struct Quadrature<T> {
    pub value: T,
    /// Sum of the local Richardson error estimates.
    pub error: T,
    pub panels: usize,
}

/// Integrates `f` over `[a, b]` to relative tolerance `rel_tol`.
///
/// Panels are bisected until the Simpson/half-Simpson difference meets the
/// local share of the budget; accepted panels carry the Richardson correction.
pub fn adaptive_simpson<T, F>(f: F, a: T, b: T, rel_tol: T) -> Result<Quadrature<T>>
where
    T: Real,
    F: Fn(T) -> T,
{
    if a == b {
        return Ok(Quadrature {
            value: T::zero(),
            error: T::zero(),
            panels: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, T::one()) } else { (b, a, -T::one()) };

    // Coarse pass fixes the absolute scale of the budget.
    const SEED: usize = 16;
    let h = (hi - lo) / T::from_usize_lossy(SEED);
    let mut seeds = Vec::with_capacity(SEED);
    let mut scale = T::zero();
    for i in 0..SEED {
        let x0 = lo + h * T::from_usize_lossy(i);
        let x1 = if i + 1 == SEED { hi } else { x0 + h };
        let xm = (x0 + x1) * T::lit(0.5);
        let (f0, fm, f1) = (f(x0), f(xm), f(x1));
        let s = (x1 - x0) / T::lit(6.0) * (f0 + T::lit(4.0) * fm + f1);
        scale = scale + s.abs();
        seeds.push(Panel { x0, x1, f0, fm, f1, whole: s });
    }
    let floor = T::min_positive_value().sqrt();
    let budget = rel_tol * scale.max(floor);

    let mut value = T::zero();
    let mut error = T::zero();
    let mut panels = 0usize;
    let mut stalled = false;
    let width = hi - lo;
    // Depth-first so the summation order is fixed.
    let mut stack: Vec<Panel<T>> = seeds.into_iter().rev().collect();
    while let Some(p) = stack.pop() {
        let ml = (p.x0 + p.xm()) * T::lit(0.5);
        let mr = (p.xm() + p.x1) * T::lit(0.5);
        let fl = f(ml);
        let fr = f(mr);
        let hh = (p.x1 - p.x0) / T::lit(12.0);
        let left = hh * (p.f0 + T::lit(4.0) * fl + p.fm);
        let right = hh * (p.fm + T::lit(4.0) * fr + p.f1);
        let diff = left + right - p.whole;
        let local = budget * (p.x1 - p.x0) / width;
        let tiny = (p.x1 - p.x0) <= width * T::epsilon() * T::lit(16.0);
        let ok = diff.abs() <= T::lit(15.0) * local;
        if ok || tiny {
            stalled |= !ok;
            value = value + left + right + diff / T::lit(15.0);
            error = error + diff.abs() / T::lit(15.0);
            panels += 1;
            if panels > MAX_PANELS {
                break;
            }
        } else {
            let xm = p.xm();
            stack.push(Panel { x0: xm, x1: p.x1, f0: p.fm, fm: fr, f1: p.f1, whole: right });
            stack.push(Panel { x0: p.x0, x1: xm, f0: p.f0, fm: fl, f1: p.fm, whole: left });
        }
    }
    if panels > MAX_PANELS || stalled || !value.is_finite() {
        return Err(Error::Numeric {
            what: "adaptive Simpson did not converge".into(),
            achieved: (error / value.abs().max(floor)).as_f64(),
            requested: rel_tol.as_f64(),
        });
    }
    Ok(Quadrature {
        value: sign * value,
        error,
        panels,
    })
}

#[derive(Clone, Copy)]
struct Panel<T> {
    x0: T,
    x1: T,
    f0: T,
    fm: T,
    f1: T,
    whole: T,
}

impl<T: Real> Panel<T> {
    fn xm(&self) -> T {
        (self.x0 + self.x1) * T::lit(0.5)
    }
}

/// Five-point Gauss-Legendre nodes and weights on `[-1, 1]`.
pub const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
pub const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Five-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre5<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T) -> T {
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    let mut s = T::zero();
    for (x, w) in GL5_NODES.iter().zip(GL5_WEIGHTS.iter()) {
        s = s + T::lit(*w) * f(mid + half * T::lit(*x));
    }
    s * half
}

/// Composite Simpson weights for `n` uniformly spaced samples (n odd).
pub fn simpson_weights<T: Real>(n: usize, h: T) -> Vec<T> {
    assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd sample count >= 3");
    let third = h / T::lit(3.0);
    (0..n)
        .map(|i| {
            if i == 0 || i == n - 1 {
                third
            } else if i % 2 == 1 {
                third * T::lit(4.0)
            } else {
                third * T::lit(2.0)
            }
        })
        .collect()
}
