//! Plasma echo of the two-mode datum and its suppression by collisions.

use rayon::prelude::*;
use serde::Serialize;

use super::{trace_rows, Cell, ExperimentSpec, Run, RunDiagnostics, Table, TRACE_COLUMNS, TRANSIENT};
use crate::error::{Error, Result};
use crate::solver::init::Profile;
use crate::solver::moments::conserved_quantities;
use crate::solver::ops::Coupling;

#[derive(Debug, Clone, Serialize)]
pub struct EchoRun {
    pub nu: f64,
    pub eps: f64,
    /// Mode where the echo appears, `pump_k - 1`.
    pub echo_k: i64,
    /// `eta_star / echo_k` rounded to the lattice.
    pub predicted_time: f64,
    pub window: (f64, f64),
    pub echo_detected: bool,
    /// Time of the largest `|E(t, echo_k)|` inside the window.
    pub peak_time: f64,
    pub peak_amplitude: f64,
    pub time_error: f64,
    /// Peak over the peak of the smallest `nu`.
    pub relative_to_collisionless: f64,
    pub eta_max: f64,
    pub diagnostics: RunDiagnostics,
}

#[derive(Debug, Clone, Serialize)]
pub struct EchoReport {
    pub runs: Vec<EchoRun>,
    /// Peak amplitudes nonincreasing in `nu`.
    pub monotone: bool,
    pub collisionless_time_error: f64,
}

fn echo_params(p: &Profile) -> Result<(i64, f64)> {
    match *p {
        Profile::Echo { pump_k, eta_star, .. } => Ok((pump_k.abs(), eta_star)),
        _ => Err(Error::domain("the echo experiment needs an echo profile")),
    }
}

fn run_one(spec: &ExperimentSpec, run_id: i64, nu: f64) -> Result<(EchoRun, Table)> {
    let (pump_k, eta_star) = echo_params(&spec.profile)?;
    let echo_k = pump_k - 1;
    if echo_k as usize > spec.k_max || pump_k as usize > spec.k_max {
        return Err(Error::domain("k_max must hold the pump and echo modes"));
    }
    let t_final = spec.horizon(30.0);
    let grid = spec.grid(spec.k_max, nu, t_final, eta_star.abs())?;
    let cells = (eta_star.abs() / grid.d_eta()).round();
    let predicted_time = cells * grid.dt / echo_k as f64;
    let window = spec.fit_window.unwrap_or((
        TRANSIENT.max(0.5 * predicted_time),
        (1.5 * predicted_time).min(t_final),
    ));
    let eps = spec.eps_list[0];
    let mut run = Run::new(spec, &spec.profile, eps, nu, grid, Coupling::Full, t_final)?;
    let kernel = run.solver.kernel.clone();
    let mut series = Vec::new();
    let mut trace = Table::new("trace", &TRACE_COLUMNS);
    let stride = spec.stride;
    let steps = run.steps;
    let ks: Vec<i64> = (1..=spec.k_max as i64).collect();
    {
        let Run { solver, field, .. } = &mut run;
        solver.run(field, steps, |i, f, m| {
            series.push((f.time, m.e_field[m.idx(echo_k)].norm()));
            if i % stride == 0 {
                let c = conserved_quantities(m, &kernel);
                for r in trace_rows(run_id, nu, eps, f, m, &c, &ks) {
                    trace.push(r);
                }
            }
            Ok(())
        })?;
    }
    let inside: Vec<usize> = (0..series.len())
        .filter(|&i| series[i].0 >= window.0 && series[i].0 <= window.1)
        .collect();
    let &best = inside
        .iter()
        .max_by(|&&a, &&b| series[a].1.total_cmp(&series[b].1))
        .ok_or_else(|| Error::domain("echo window holds no samples"))?;
    let detected = best > inside[0]
        && best < *inside.last().unwrap_or(&best)
        && series[best].1 > series[best - 1].1
        && series[best].1 >= series[best + 1].1;
    let (peak_time, peak_amplitude) = series[best];
    Ok((
        EchoRun {
            nu,
            eps,
            echo_k,
            predicted_time,
            window,
            echo_detected: detected,
            peak_time,
            peak_amplitude,
            time_error: (peak_time - predicted_time).abs() / predicted_time,
            relative_to_collisionless: f64::NAN,
            eta_max: grid.eta_max,
            diagnostics: run.diagnostics(),
        },
        trace,
    ))
}

pub fn run_echo(spec: &ExperimentSpec) -> Result<(EchoReport, Vec<Table>)> {
    let mut nus = spec.nu_list.clone();
    nus.sort_by(f64::total_cmp);
    let results: Vec<(EchoRun, Table)> = nus
        .par_iter()
        .enumerate()
        .map(|(i, &nu)| run_one(spec, i as i64, nu))
        .collect::<Result<_>>()?;
    let mut trace = Table::new("trace", &TRACE_COLUMNS);
    let mut runs = Vec::new();
    for (r, t) in results {
        trace.extend(t);
        runs.push(r);
    }
    let base = runs[0].peak_amplitude;
    for r in &mut runs {
        r.relative_to_collisionless = r.peak_amplitude / base;
    }
    let monotone = runs.windows(2).all(|w| w[1].peak_amplitude <= w[0].peak_amplitude);
    let mut table = Table::new(
        "echo",
        &[
            "nu", "echo_detected", "peak_time", "predicted_time", "peak_amplitude",
            "relative_to_collisionless", "max_energy_drift",
        ],
    );
    for r in &runs {
        table.push(vec![
            Cell::F(r.nu),
            Cell::I(r.echo_detected as i64),
            Cell::F(r.peak_time),
            Cell::F(r.predicted_time),
            Cell::F(r.peak_amplitude),
            Cell::F(r.relative_to_collisionless),
            Cell::F(r.diagnostics.max_energy_drift),
        ]);
    }
    let report = EchoReport {
        collisionless_time_error: runs[0].time_error,
        monotone,
        runs,
    };
    Ok((report, vec![table, trace]))
}
