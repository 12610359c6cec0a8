//! Linear Landau damping with collisions: Volterra equation against the
//! linearized solver, decay-rate and envelope fits.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    trace_rows, Cell, ExperimentSpec, Run, RunDiagnostics, Table, SIGNAL_FLOOR, TRACE_COLUMNS,
    TRANSIENT,
};
use crate::error::{Error, Result};
use crate::linear::fit::{fit_decay_rate, linear_fit, DecayFit, LinearFit};
use crate::linear::free_streaming_source;
use crate::linear::volterra::{volterra_solve, VolterraProblem};
use crate::real::japanese;
use crate::solver::init::Profile;
use crate::solver::moments::conserved_quantities;
use crate::solver::ops::Coupling;

/// Largest tolerated sup-relative gap between the two methods.
pub const CONSISTENCY_TOL: f64 = 0.1;

#[derive(Debug, Clone, Serialize)]
pub struct LandauCell {
    pub k: i64,
    pub nu: f64,
    pub t_final: f64,
    /// `sup |rho_solver - rho_volterra| / sup |rho_volterra|`, Gaussian datum.
    pub discrepancy: f64,
    /// Exponent of `<kt>` fitted to the local maxima of `|rho|`, Gaussian datum.
    pub envelope_exponent: f64,
    pub envelope_fit: LinearFit,
    /// Exponential rate fitted to `|rho|` for the algebraic datum.
    pub decay: DecayFit,
    pub fit_window: (f64, f64),
    /// `rate / nu^{1/3}`.
    pub delta_fit: f64,
    pub volterra_warning: Option<String>,
    pub diagnostics: RunDiagnostics,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub cells: Vec<LandauCell>,
    pub max_discrepancy: f64,
    pub all_delta_positive: bool,
    /// `max delta_fit / min delta_fit - 1` over the `nu` list, per `k`.
    pub delta_spread: f64,
    pub max_envelope_exponent: f64,
}

fn volterra_series(
    h_in: &dyn Fn(i64, f64) -> Complex<f64>,
    k: i64,
    nu: f64,
    dt: f64,
    steps: usize,
    sub: usize,
    kernel: &crate::linear::InteractionKernel<f64>,
) -> Result<(Vec<Complex<f64>>, Option<String>)> {
    let h = dt / sub as f64;
    let n = steps * sub;
    let source: Vec<Complex<f64>> = (0..=n)
        .map(|i| free_streaming_source(h_in, i as f64 * h, k, nu))
        .collect::<Result<_>>()?;
    let sol = volterra_solve(
        &VolterraProblem {
            k,
            nu,
            delta: 0.0,
            source,
            dt: h,
            t_final: n as f64 * h,
        },
        kernel,
    )?;
    let vals = (0..=steps).map(|i| sol.values[i * sub]).collect();
    Ok((vals, sol.resolution_warning))
}

/// Indices of the interior local maxima of `y`.
pub fn local_maxima(y: &[f64]) -> Vec<usize> {
    (1..y.len().saturating_sub(1))
        .filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1])
        .collect()
}

fn run_cell(spec: &ExperimentSpec, run_id: i64, k: i64, nu: f64) -> Result<(LandauCell, Table, Table)> {
    let lp = spec.landau;
    let scale = nu.cbrt();
    let t_final = spec.horizon(lp.horizon_factor / scale);
    let width = match spec.profile {
        Profile::Gaussian { width, .. } => width,
        _ => 1.0,
    };
    let gauss = Profile::Gaussian { k, width };
    let grid = spec.grid(k as usize, nu, t_final, 0.0)?;
    let eps = spec.eps_list[0];
    let mut run = Run::new(spec, &gauss, eps, nu, grid, Coupling::Linear, t_final)?;
    let kernel = run.solver.kernel.clone();
    let factor = run.init.eps_factor;
    let steps = run.steps;
    let mut rho_s = Vec::with_capacity(steps + 1);
    let mut times = Vec::with_capacity(steps + 1);
    let mut trace = Table::new("trace", &TRACE_COLUMNS);
    let stride = spec.stride;
    {
        let Run { solver, field, .. } = &mut run;
        solver.run(field, steps, |i, f, m| {
            rho_s.push(m.rho[m.idx(k)]);
            times.push(f.time);
            if i % stride == 0 {
                let c = conserved_quantities(m, &kernel);
                for r in trace_rows(run_id, nu, eps, f, m, &c, &[k]) {
                    trace.push(r);
                }
            }
            Ok(())
        })?;
    }

    let g_in = |kk: i64, e: f64| gauss.value(kk, e) * factor;
    let (rho_v, warn) = volterra_series(&g_in, k, nu, spec.dt, steps, lp.substeps, &kernel)?;
    let vmax = rho_v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let gap = rho_s
        .iter()
        .zip(&rho_v)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let discrepancy = if vmax > 0.0 { gap / vmax } else { 0.0 };
    if discrepancy > CONSISTENCY_TOL {
        return Err(Error::invariant(format!(
            "linearized solver and Volterra solution differ by {discrepancy:.3e} \
             (sup-relative) at k = {k}, nu = {nu}"
        )));
    }

    // envelope of the Gaussian response
    let mag: Vec<f64> = rho_v.iter().map(|z| z.norm()).collect();
    let floor = 10.0 * SIGNAL_FLOOR * mag[0].max(vmax);
    let kk = k as f64;
    let usable = |i: usize| times[i] >= TRANSIENT && mag[i] > floor;
    let mut idx: Vec<usize> = local_maxima(&mag).into_iter().filter(|&i| usable(i)).collect();
    if idx.len() < 3 {
        idx = (0..mag.len()).filter(|&i| usable(i)).collect();
    }
    let ex: Vec<f64> = idx.iter().map(|&i| japanese(kk * times[i], 0.0).ln()).collect();
    let ey: Vec<f64> = idx.iter().map(|&i| mag[i].ln()).collect();
    let envelope_fit = linear_fit(&ex, &ey)?;

    // exponential factor from the algebraic datum
    let cutoff = lp.cutoff_factor * 3.0 / scale;
    let alg = Profile::Algebraic { k, p: lp.p, cutoff };
    let a_in = |kk: i64, e: f64| alg.value(kk, e);
    let (rho_a, _) = volterra_series(&a_in, k, nu, spec.dt, steps, lp.substeps, &kernel)?;
    let amag: Vec<f64> = rho_a.iter().map(|z| z.norm()).collect();
    let afloor = 10.0 * SIGNAL_FLOOR * amag.iter().cloned().fold(0.0, f64::max);
    let window = spec.fit_window.unwrap_or((1.0 / scale, t_final));
    let (ft, fv): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(&amag)
        .filter(|(&t, &v)| t >= TRANSIENT.max(window.0) && t <= window.1 && v > afloor)
        .map(|(&t, &v)| (t, v))
        .unzip();
    let decay = fit_decay_rate(&ft, &fv, window)?;

    let mut series = Table::new(
        "series",
        &["run", "nu", "k", "t", "rho_solver", "rho_volterra", "rho_algebraic"],
    );
    for i in 0..=steps {
        series.push(vec![
            Cell::I(run_id),
            Cell::F(nu),
            Cell::I(k),
            Cell::F(times[i]),
            Cell::F(rho_s[i].norm()),
            Cell::F(mag[i]),
            Cell::F(amag[i]),
        ]);
    }
    Ok((
        LandauCell {
            k,
            nu,
            t_final,
            discrepancy,
            envelope_exponent: envelope_fit.slope,
            envelope_fit,
            decay,
            fit_window: window,
            delta_fit: decay.rate / scale,
            volterra_warning: warn,
            diagnostics: run.diagnostics(),
        },
        series,
        trace,
    ))
}

pub fn run_landau_linear(spec: &ExperimentSpec) -> Result<(RateReport, Vec<Table>)> {
    let cells: Vec<(i64, f64)> = spec
        .k_list
        .iter()
        .flat_map(|&k| spec.nu_list.iter().map(move |&nu| (k, nu)))
        .collect();
    let results: Vec<(LandauCell, Table, Table)> = cells
        .par_iter()
        .enumerate()
        .map(|(i, &(k, nu))| run_cell(spec, i as i64, k, nu))
        .collect::<Result<_>>()?;
    let mut series = Table::new("series", &[]);
    let mut trace = Table::new("trace", &TRACE_COLUMNS);
    let mut out = Vec::new();
    for (i, (c, s, t)) in results.into_iter().enumerate() {
        if i == 0 {
            series.columns = s.columns.clone();
        }
        series.extend(s);
        trace.extend(t);
        out.push(c);
    }
    let mut delta_spread: f64 = 0.0;
    for &k in &spec.k_list {
        let d: Vec<f64> = out.iter().filter(|c| c.k == k).map(|c| c.delta_fit).collect();
        let hi = d.iter().cloned().fold(f64::MIN, f64::max);
        let lo = d.iter().cloned().fold(f64::MAX, f64::min);
        delta_spread = delta_spread.max(if lo > 0.0 { hi / lo - 1.0 } else { f64::INFINITY });
    }
    let mut cells_t = Table::new(
        "cells",
        &[
            "k", "nu", "discrepancy", "delta_fit", "rate", "rate_r2", "envelope_exponent",
            "envelope_r2",
        ],
    );
    for c in &out {
        cells_t.push(vec![
            Cell::I(c.k),
            Cell::F(c.nu),
            Cell::F(c.discrepancy),
            Cell::F(c.delta_fit),
            Cell::F(c.decay.rate),
            Cell::F(c.decay.r2),
            Cell::F(c.envelope_exponent),
            Cell::F(c.envelope_fit.r2),
        ]);
    }
    let report = RateReport {
        max_discrepancy: out.iter().map(|c| c.discrepancy).fold(0.0, f64::max),
        all_delta_positive: out.iter().all(|c| c.delta_fit > 0.0),
        delta_spread,
        max_envelope_exponent: out
            .iter()
            .map(|c| c.envelope_exponent)
            .fold(f64::MIN, f64::max),
        cells: out,
    };
    Ok((report, vec![cells_t, series, trace]))
}
