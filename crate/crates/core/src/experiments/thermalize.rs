//! Relaxation of the x-averaged distribution and of the x-dependent modes.

use serde::Serialize;

use super::{Cell, ExperimentSpec, Run, RunDiagnostics, Table, SIGNAL_FLOOR, TRANSIENT};
use crate::error::Result;
use crate::linear::fit::{fit_decay_rate, DecayFit};
use crate::multiplier::norms::sobolev_norm;
use crate::solver::moments::conserved_quantities;
use crate::solver::ops::Coupling;
use crate::solver::SpectralField;

#[derive(Debug, Clone, Serialize)]
pub struct ThermalizationRun {
    pub nu: f64,
    pub eps: f64,
    pub t_final: f64,
    /// Temperature `1 + T_0` at the end of the run.
    pub final_temperature: f64,
    /// Fit of `||F_0 - mu_T||` (L2) over the late window, `mu_T` the
    /// Maxwellian at the final temperature.
    pub averaged: Option<DecayFit>,
    pub averaged_window: (f64, f64),
    pub averaged_rate_over_nu: f64,
    /// Fit of `||F_{k != 0}||` (L2).
    pub spatial: Option<DecayFit>,
    pub spatial_window: (f64, f64),
    pub spatial_rate_over_nu_cbrt: f64,
    pub kinetic_gain: f64,
    pub field_loss: f64,
    /// `|kinetic_gain - field_loss|` relative to the Maxwellian energy.
    pub heating_defect: f64,
    pub max_abs_u0: f64,
    pub max_abs_temp0: f64,
    pub diagnostics: RunDiagnostics,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThermalizationReport {
    pub runs: Vec<ThermalizationRun>,
}

fn fit_above_floor(t: &[f64], y: &[f64], window: (f64, f64)) -> Option<DecayFit> {
    let peak = y.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return None;
    }
    let floor = 10.0 * SIGNAL_FLOOR * peak;
    let (a, b): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(y)
        .filter(|(&s, &v)| s >= window.0 && s <= window.1 && v > floor)
        .map(|(&s, &v)| (s, v))
        .unzip();
    fit_decay_rate(&a, &b, window).ok()
}

fn run_one(spec: &ExperimentSpec, run_id: i64, nu: f64) -> Result<(ThermalizationRun, Table)> {
    let t_final = spec.horizon(150.0);
    let grid = spec.grid(spec.k_max, nu, t_final, 0.0)?;
    let eps = spec.eps_list[0];
    let mut run = Run::new(spec, &spec.profile, eps, nu, grid, Coupling::Full, t_final)?;
    let kernel = run.solver.kernel.clone();
    let e0 = crate::solver::moments::maxwellian_energy::<f64>();
    let mut table = Table::new(
        "thermalize",
        &[
            "run", "nu", "t", "f0_l2", "f0_sobolev", "u0", "temp0", "f_neq", "kinetic", "field",
        ],
    );
    let (mut ts, mut rows0, mut fneq) = (Vec::new(), Vec::new(), Vec::new());
    let (mut max_u, mut max_t) = (0.0f64, 0.0f64);
    let norm = spec.norm;
    let stride = spec.stride;
    let steps = run.steps;
    {
        let Run { solver, field, .. } = &mut run;
        solver.run(field, steps, |i, f, m| {
            let z = m.idx(0);
            max_u = max_u.max(m.u[z].norm());
            max_t = max_t.max(m.temp[z].norm());
            if i % stride != 0 {
                return Ok(());
            }
            let f0 = f.row_norm(0);
            let neq = f
                .grid
                .ks()
                .filter(|&k| k != 0)
                .map(|k| f.row_norm(k).powi(2))
                .sum::<f64>()
                .sqrt();
            let mut only0 = SpectralField::zeros(f.grid);
            only0.row_mut(0).copy_from_slice(f.row(0));
            let sob = sobolev_norm(&only0, norm.beta, norm.m)?;
            let c = conserved_quantities(m, &kernel);
            ts.push(f.time);
            rows0.push(f.row(0).to_vec());
            fneq.push(neq);
            table.push(vec![
                Cell::I(run_id),
                Cell::F(nu),
                Cell::F(f.time),
                Cell::F(f0),
                Cell::F(sob),
                Cell::F(m.u[z].norm()),
                Cell::F(m.temp[z].norm()),
                Cell::F(neq),
                Cell::F(c.kinetic),
                Cell::F(c.field),
            ]);
            Ok(())
        })?;
    }
    let d = run.diagnostics();
    let aw = spec.fit_window.unwrap_or((t_final / 3.0, t_final));
    let sw = (TRANSIENT, t_final);
    let temp_final = 1.0 + run.solver.moments(&run.field)?.temp[grid.k_max].re;
    let etas = grid.etas();
    let target: Vec<f64> = etas
        .iter()
        .map(|&e| (-temp_final * e * e / 2.0).exp() - (-e * e / 2.0).exp())
        .collect();
    let dist: Vec<f64> = rows0
        .iter()
        .map(|r| {
            let sq: Vec<f64> = r.iter().zip(&target).map(|(z, &m)| (z - m).norm_sqr()).collect();
            (crate::real::pairwise_sum(&sq) * grid.d_eta()).sqrt()
        })
        .collect();
    let averaged = fit_above_floor(&ts, &dist, aw);
    let spatial = fit_above_floor(&ts, &fneq, sw);
    Ok((
        ThermalizationRun {
            nu,
            eps,
            t_final,
            final_temperature: temp_final,
            averaged_rate_over_nu: averaged.map_or(f64::NAN, |f| f.rate / nu),
            averaged,
            averaged_window: aw,
            spatial_rate_over_nu_cbrt: spatial.map_or(f64::NAN, |f| f.rate / nu.cbrt()),
            spatial,
            spatial_window: sw,
            kinetic_gain: d.kinetic_change,
            field_loss: -d.field_change,
            heating_defect: (d.kinetic_change + d.field_change).abs() / e0,
            max_abs_u0: max_u,
            max_abs_temp0: max_t,
            diagnostics: d,
        },
        table,
    ))
}

pub fn run_thermalize(spec: &ExperimentSpec) -> Result<(ThermalizationReport, Vec<Table>)> {
    use rayon::prelude::*;
    let results: Vec<(ThermalizationRun, Table)> = spec
        .nu_list
        .par_iter()
        .enumerate()
        .map(|(i, &nu)| run_one(spec, i as i64, nu))
        .collect::<Result<_>>()?;
    let mut table = Table::new("thermalize", &[]);
    let mut runs = Vec::new();
    for (i, (r, t)) in results.into_iter().enumerate() {
        if i == 0 {
            table.columns = t.columns.clone();
        }
        table.extend(t);
        runs.push(r);
    }
    Ok((ThermalizationReport { runs }, vec![table]))
}
