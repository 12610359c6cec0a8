//! Cancellation-free elementary combinations of exponentials.

use crate::real::Real;

/// Below this magnitude the ratio forms switch to their Taylor branch.
pub const SERIES_CUTOFF: f64 = 1e-4;

/// Below this argument [`dissipation_shape`] is summed as a power series.
pub const SHAPE_SERIES_CUTOFF: f64 = 0.5;

/// `(1 - e^{-x}) / x`, equal to 1 at `x = 0`.
pub fn one_minus_exp_neg_over<T: Real>(x: T) -> T {
    if x.abs() < T::lit(SERIES_CUTOFF) {
        // 1 - x/2 + x^2/6 - x^3/24 + x^4/120 - x^5/720
        let c = [
            1.0,
            -1.0 / 2.0,
            1.0 / 6.0,
            -1.0 / 24.0,
            1.0 / 120.0,
            -1.0 / 720.0,
        ];
        horner(&c, x)
    } else {
        -(-x).exp_m1() / x
    }
}

/// `(e^{x} - 1) / x`, equal to 1 at `x = 0`.
pub fn exp_minus_one_over<T: Real>(x: T) -> T {
    if x.abs() < T::lit(SERIES_CUTOFF) {
        let c = [
            1.0,
            1.0 / 2.0,
            1.0 / 6.0,
            1.0 / 24.0,
            1.0 / 120.0,
            1.0 / 720.0,
        ];
        horner(&c, x)
    } else {
        x.exp_m1() / x
    }
}

/// `g(x) = x + 2(e^{-x} - 1) - (e^{-2x} - 1)/2 = x^3/3 - x^4/4 + 7x^5/60 - ...`
///
/// The density semigroup is `exp(-k^2 g(nu dt) / nu^2)`. The closed form
/// loses roughly `3 log10(1/x)` digits, so the series is used up to
/// [`SHAPE_SERIES_CUTOFF`].
pub fn dissipation_shape<T: Real>(x: T) -> T {
    if x.abs() < T::lit(SHAPE_SERIES_CUTOFF) {
        shape_series(x)
    } else {
        shape_closed(x)
    }
}

fn shape_series<T: Real>(x: T) -> T {
    // coefficient of x^n is (-1)^n (2 - 2^{n-1}) / n!, n >= 3
    let mut sum = T::zero();
    let mut pow = x * x * x;
    let mut fact = 6.0f64;
    let mut two_pow = 4.0f64;
    for n in 3..60usize {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let term = pow * T::lit(sign * (2.0 - two_pow) / fact);
        sum = sum + term;
        if term.abs() <= T::epsilon() * sum.abs() * T::lit(1e-2) {
            break;
        }
        pow = pow * x;
        fact *= (n + 1) as f64;
        two_pow *= 2.0;
    }
    sum
}

fn shape_closed<T: Real>(x: T) -> T {
    x + T::lit(2.0) * (-x).exp_m1() - T::lit(0.5) * (-(x + x)).exp_m1()
}

fn horner<T: Real>(coeffs: &[f64], x: T) -> T {
    coeffs
        .iter()
        .rev()
        .fold(T::zero(), |acc, &c| acc * x + T::lit(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios_are_one_at_origin() {
        assert_eq!(one_minus_exp_neg_over(0.0f64), 1.0);
        assert_eq!(exp_minus_one_over(0.0f64), 1.0);
        assert_eq!(dissipation_shape(0.0f64), 0.0);
    }

    #[test]
    fn branches_agree_at_cutoff() {
        let below = 0.999_999 * SERIES_CUTOFF;
        let above = 1.000_001 * SERIES_CUTOFF;
        let a = one_minus_exp_neg_over(below);
        let b = one_minus_exp_neg_over(above);
        assert!((a - b).abs() < 1e-9);
        let a = exp_minus_one_over(below);
        let b = exp_minus_one_over(above);
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn shape_branches_agree_at_cutoff() {
        let a: f64 = shape_series(SHAPE_SERIES_CUTOFF);
        let b: f64 = shape_closed(SHAPE_SERIES_CUTOFF);
        assert!(((a - b) / b).abs() < 1e-14, "{a} {b}");
    }

    #[test]
    fn shape_leading_term() {
        let x = 1e-6f64;
        let g = dissipation_shape(x);
        assert!((g / (x * x * x / 3.0) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn works_in_single_precision() {
        let v: f32 = one_minus_exp_neg_over(0.5f32);
        assert!((v - (1.0 - (-0.5f32).exp()) / 0.5).abs() < 1e-6);
    }
}
