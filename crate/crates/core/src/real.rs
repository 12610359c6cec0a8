//! Scalar abstraction shared by the numerical core.
//!
//! Everything that is pure math (characteristics, the dissipation semigroup,
//! the ghost multiplier, quadrature, the Volterra solver, the spectral
//! stepper) is written against [`Real`] so it runs in `f32` or `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type usable by the solver.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + rustfft::FftNum
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn from_i64_lossy(n: i64) -> Self {
        Self::from_i64(n).expect("i64 representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Largest argument for which `exp` is finite.
    fn max_exp_arg() -> Self {
        Self::max_value().ln()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Japanese bracket `(1 + a^2 + b^2)^{1/2}`.
#[inline]
pub fn japanese<T: Real>(a: T, b: T) -> T {
    (T::one() + a * a + b * b).sqrt()
}

/// Pairwise (cascade) summation. Result depends only on the input order.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        let mut s = T::zero();
        for &x in xs {
            s = s + x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
    }

    #[test]
    fn japanese_bracket_at_origin_is_one() {
        assert_eq!(japanese(0.0f64, 0.0), 1.0);
        assert!((japanese(1.0f64, 0.0) - 2f64.sqrt()).abs() < 1e-15);
    }
}
