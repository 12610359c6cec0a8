mod common;

use num_complex::Complex;
use vpfp::linear::{mu_hat, InteractionKernel};
use vpfp::solver::moments::{compute_moments, Closure};
use vpfp::solver::ops::ou_step;
use vpfp::solver::{PhaseGrid, SpectralField};

fn bump(e: f64) -> Complex<f64> {
    Complex::new(1.0, 0.5) * (-(e - 1.0) * (e - 1.0) / 2.0).exp()
        + Complex::new(0.0, 0.3) * e * (-(e * e) / 3.0).exp()
}

/// Sup error of one OU step against the method-of-lines oracle, relative to
/// the sup of the oracle.
pub fn ou_oracle_error(nu: f64, dt: f64) -> f64 {
    let g = PhaseGrid::aligned(1, 16.0, 1600).unwrap();
    let mut f = SpectralField::from_fn(g, |k, e| if k == 0 { bump(e) } else { Complex::new(0.0, 0.0) });
    // column 0 has no mirror partner and is not part of the state
    f.data[g.row(0) * g.n_eta] = Complex::new(0.0, 0.0);
    ou_step(&mut f, nu, dt);
    let sub = 4;
    let h = g.d_eta() / sub as f64;
    let n_fine = g.n_eta * sub + 1;
    let u0: Vec<_> = (0..n_fine).map(|i| bump(-16.0 + i as f64 * h)).collect();
    let u = common::ou_method_of_lines(&u0, 16.0, h, nu, dt, 1000);
    let scale = u.iter().map(|z| z.norm()).fold(0.0, f64::max);
    (1..g.n_eta)
        .map(|j| (f.at(0, j) - u[j * sub]).norm())
        .fold(0.0, f64::max)
        / scale
}

#[test]
fn ou_step_matches_method_of_lines() {
    let err = ou_oracle_error(0.1, 0.1);
    assert!(err < 1e-8, "relative sup error {err:e}");
}

#[test]
fn ou_step_keeps_maxwellian_and_mass_row() {
    let g = PhaseGrid::aligned(2, 20.0, 400).unwrap();
    let mut m = SpectralField::from_fn(g, |_, e| Complex::new(mu_hat(e), 0.0));
    let before = m.clone();
    ou_step(&mut m, 0.1, 0.1);
    let err = m
        .data
        .iter()
        .zip(&before.data)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-12, "{err:e}");

    let mut f = SpectralField::from_fn(g, |k, e| bump(e + k as f64));
    let before = f.clone();
    ou_step(&mut f, 0.3, 0.1);
    for k in g.ks() {
        assert_eq!(f.at(k, g.zero_col()), before.at(k, g.zero_col()));
    }
}

fn shifted_maxwellian_moments(a: f64, n_eta: usize) -> vpfp::HydroMoments {
    let g = PhaseGrid::aligned(1, 20.0, n_eta).unwrap();
    let f = SpectralField::from_fn(g, |k, e| {
        if k == 0 {
            ((Complex::new(0.0, -a * e)).exp() - 1.0) * mu_hat(e)
        } else {
            Complex::new(0.0, 0.0)
        }
    });
    compute_moments(&f, &InteractionKernel::coulomb(), Closure::Nonlinear).unwrap()
}

#[test]
fn shifted_maxwellian_velocity() {
    let a = 1e-3;
    let h = |v: f64| common::maxwellian(v - a) - common::maxwellian(v);
    let m1 = common::trapezoid(|v| v * h(v), 14.0, 4000);
    let m2 = common::trapezoid(|v| v * v * h(v), 14.0, 4000);
    assert!((m1 - a).abs() < 1e-15);

    let m = shifted_maxwellian_moments(a, 400);
    let i0 = m.idx(0);
    let err = (m.u[i0].re - m1).abs();
    assert!(err < 1e-6, "u = {}", m.u[i0]);
    assert!(m.u[i0].im.abs() < 1e-15);
    assert!((m.m2[i0].re - m2).abs() < 1e-10);
    assert!(m.temp[i0].norm() < 1e-10);

    // fourth-order stencil: halving d_eta cuts the error about 16x
    let fine = shifted_maxwellian_moments(a, 800);
    let ratio = err / (fine.u[i0].re - m1).abs();
    assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
}
