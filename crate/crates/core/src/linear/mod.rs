//! Linearized density dynamics: the memory kernel, the per-mode Volterra
//! equation, the Penrose scan and decay-rate fitting.
//!
//! Sign convention: the linearized density obeys
//! `rho(t) = F(t) - int_0^t K0(t - tau) rho(tau) d tau`, with `K0 >= 0`.

pub mod fit;
pub mod penrose;
pub mod volterra;

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::semigroup::{eta_ct, s_density};

/// `mu_hat(eta) = e^{-eta^2/2}`, so that `mu_hat(0) = int mu dv = 1`.
#[inline]
pub fn mu_hat<T: Real>(eta: T) -> T {
    (-(eta * eta) * T::lit(0.5)).exp()
}

/// Shape of `W_hat(k)` for `k != 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum KernelShape<T> {
    /// `1 / k^2`.
    Coulomb,
    /// `1 / (1 + k^2)`.
    Screened,
    /// `W_hat(|k|)` for `|k| = 1, 2, ...`; zero past the end of the table.
    Table(Vec<T>),
    /// No interaction.
    Zero,
}

/// Interaction potential in Fourier variables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionKernel<T> {
    pub shape: KernelShape<T>,
    pub label: String,
}

impl<T: Real> InteractionKernel<T> {
    pub fn coulomb() -> Self {
        InteractionKernel {
            shape: KernelShape::Coulomb,
            label: "coulomb".into(),
        }
    }

    pub fn screened() -> Self {
        InteractionKernel {
            shape: KernelShape::Screened,
            label: "screened".into(),
        }
    }

    pub fn zero() -> Self {
        InteractionKernel {
            shape: KernelShape::Zero,
            label: "zero".into(),
        }
    }

    pub fn table(values: Vec<T>) -> Result<Self> {
        if values.iter().any(|&w| !(w >= T::zero() && w.is_finite())) {
            return Err(Error::domain("kernel table entries must be finite and nonnegative"));
        }
        Ok(InteractionKernel {
            shape: KernelShape::Table(values),
            label: "custom".into(),
        })
    }

    /// `W_hat(k)`; the `k = 0` value is unused and returned as 0.
    pub fn w_hat(&self, k: i64) -> T {
        if k == 0 {
            return T::zero();
        }
        let a = k.unsigned_abs();
        let kk = T::from_i64_lossy(a as i64);
        match &self.shape {
            KernelShape::Coulomb => T::one() / (kk * kk),
            KernelShape::Screened => T::one() / (T::one() + kk * kk),
            KernelShape::Table(v) => v.get(a as usize - 1).copied().unwrap_or(T::zero()),
            KernelShape::Zero => T::zero(),
        }
    }

    /// `sup_{1 <= |k| <= k_max} |k| W_hat(k)`, the admissibility constant.
    pub fn admissibility_constant(&self, k_max: usize) -> T {
        (1..=k_max as i64)
            .map(|k| T::from_i64_lossy(k) * self.w_hat(k))
            .fold(T::zero(), T::max)
    }

    pub fn is_zero(&self) -> bool {
        match &self.shape {
            KernelShape::Zero => true,
            KernelShape::Table(v) => v.iter().all(|&w| w == T::zero()),
            _ => false,
        }
    }
}

/// `K0(t, k) = e^{delta nu^{1/3} t} S(t, k) W_hat(k) k^2 (1 - e^{-nu t})/nu
/// mu_hat(k (1 - e^{-nu t})/nu)` for `t >= 0`.
pub fn kernel_k0<T: Real>(t: T, k: i64, nu: T, delta: T, w: &InteractionKernel<T>) -> Result<T> {
    if k == 0 {
        return Err(Error::domain("the density kernel is defined for k != 0"));
    }
    let wk = w.w_hat(k);
    if wk == T::zero() || t == T::zero() {
        return Ok(T::zero());
    }
    let kk = T::from_i64_lossy(k);
    let e = eta_ct(t, kk, nu)?;
    let log = delta * nu.cbrt() * t + s_density(t, kk, nu)?.exponent - e * e * T::lit(0.5);
    // k^2 (1 - e^{-nu t})/nu = k * eta_ct
    Ok(log.exp() * wk * kk * e)
}

/// `S(t, k) h_in(k, eta_ct(t, k))`.
pub fn free_streaming_source<T: Real>(
    h_in: &dyn Fn(i64, T) -> Complex<T>,
    t: T,
    k: i64,
    nu: T,
) -> Result<Complex<T>> {
    let kk = T::from_i64_lossy(k);
    let s = s_density(t, kk, nu)?.value;
    Ok(h_in(k, eta_ct(t, kk, nu)?) * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu_hat_values() {
        assert_eq!(mu_hat(0.0f64), 1.0);
        assert!((mu_hat(1.0f64) - (-0.5f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn kernel_vanishes_at_zero_and_rejects_k0() {
        let w = InteractionKernel::<f64>::coulomb();
        assert_eq!(kernel_k0(0.0, 1, 1e-3, 0.0, &w).unwrap(), 0.0);
        assert!(kernel_k0(1.0, 0, 1e-3, 0.0, &w).is_err());
    }

    #[test]
    fn kernel_shapes() {
        let c = InteractionKernel::<f64>::coulomb();
        assert_eq!(c.w_hat(-2), 0.25);
        assert_eq!(c.admissibility_constant(8), 1.0);
        let s = InteractionKernel::<f64>::screened();
        assert_eq!(s.w_hat(1), 0.5);
        let t = InteractionKernel::table(vec![0.3, 0.1]).unwrap();
        assert_eq!(t.w_hat(-2), 0.1);
        assert_eq!(t.w_hat(3), 0.0);
        assert!(InteractionKernel::table(vec![-1.0f64]).is_err());
    }

    #[test]
    fn source_at_origin() {
        let h = |k: i64, e: f64| Complex::new(k as f64 * (-(e * e)).exp(), 0.0);
        let s = free_streaming_source(&h, 0.0, 3, 1e-3).unwrap();
        assert_eq!(s, Complex::new(3.0, 0.0));
    }
}
