#![allow(dead_code)]

use std::io::Write;

use num_complex::Complex;

/// Prints a criterion line straight to stdout so it survives output capture.
pub fn report(n: usize, name: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {n:>2} {status} {name}: {detail}\n");
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

/// Method-of-lines integration of `d_t u = -nu (eta^2 u + eta d_eta u)` on a
/// uniform grid `eta_i = -l + i h` with sixth-order central differences and
/// classical RK4 in time. Values outside the grid are zero.
pub fn ou_method_of_lines(
    u0: &[Complex<f64>],
    l: f64,
    h: f64,
    nu: f64,
    t: f64,
    steps: usize,
) -> Vec<Complex<f64>> {
    let n = u0.len();
    let eta: Vec<f64> = (0..n).map(|i| -l + i as f64 * h).collect();
    let rhs = |u: &[Complex<f64>]| -> Vec<Complex<f64>> {
        let at = |i: isize| {
            if i < 0 || i >= n as isize {
                Complex::new(0.0, 0.0)
            } else {
                u[i as usize]
            }
        };
        (0..n)
            .map(|i| {
                let i = i as isize;
                let d = ((at(i + 3) - at(i - 3)) / 60.0 - (at(i + 2) - at(i - 2)) * (3.0 / 20.0)
                    + (at(i + 1) - at(i - 1)) * 0.75)
                    / h;
                let e = eta[i as usize];
                -(u[i as usize] * (e * e) + d * e) * nu
            })
            .collect()
    };
    let dt = t / steps as f64;
    let mut u = u0.to_vec();
    let axpy = |a: &[Complex<f64>], b: &[Complex<f64>], s: f64| -> Vec<Complex<f64>> {
        a.iter().zip(b).map(|(x, y)| x + y * s).collect()
    };
    for _ in 0..steps {
        let k1 = rhs(&u);
        let k2 = rhs(&axpy(&u, &k1, dt / 2.0));
        let k3 = rhs(&axpy(&u, &k2, dt / 2.0));
        let k4 = rhs(&axpy(&u, &k3, dt));
        for i in 0..n {
            u[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
        }
    }
    u
}

/// `int f(v) dv` by the trapezoid rule on `[-l, l]`; spectrally accurate for
/// Gaussian-decaying integrands.
pub fn trapezoid(f: impl Fn(f64) -> f64, l: f64, n: usize) -> f64 {
    let h = 2.0 * l / n as f64;
    let inner: f64 = (1..n).map(|i| f(-l + i as f64 * h)).sum();
    h * (inner + 0.5 * (f(-l) + f(l)))
}

pub fn maxwellian(v: f64) -> f64 {
    (-(v * v) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
}
