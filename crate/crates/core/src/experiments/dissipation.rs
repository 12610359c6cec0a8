//! Enhanced-dissipation timescale of single free-streaming modes.

use rayon::prelude::*;
use serde::Serialize;

use super::{trace_rows, Cell, ExperimentSpec, Run, RunDiagnostics, Table, TRACE_COLUMNS};
use crate::error::{Error, Result};
use crate::linear::fit::{linear_fit, plane_fit, LinearFit, PlaneFit};
use crate::semigroup::s_density;
use crate::solver::init::Profile;
use crate::solver::moments::conserved_quantities;
use crate::solver::ops::Coupling;

/// Horizon in units of the surrogate half-life.
pub const HORIZON_FACTOR: f64 = 1.6;

#[derive(Debug, Clone, Serialize)]
pub struct DissipationCell {
    pub k: i64,
    pub nu: f64,
    /// First time the row norm falls to half its initial value.
    pub t_half: f64,
    /// Root of `s_density(t, k) = 1/2`.
    pub surrogate_t_half: f64,
    pub ratio_to_surrogate: f64,
    pub eta_max: f64,
    pub diagnostics: RunDiagnostics,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentFit {
    /// The `k` or `nu` held fixed.
    pub at: f64,
    pub fit: LinearFit,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub cells: Vec<DissipationCell>,
    /// `log t_half` against `log nu` for each `k`.
    pub nu_exponents: Vec<ExponentFit>,
    /// `log t_half` against `log k` for each `nu` (needs two or more `k`).
    pub k_exponents: Vec<ExponentFit>,
    /// Joint fit `log t_half ~ a log nu + b log k`.
    pub pooled: Option<PlaneFit>,
    pub surrogate_pooled: Option<PlaneFit>,
    pub max_surrogate_deviation: f64,
}

/// Root of `s_density(t, k, nu) = 1/2`.
pub fn surrogate_t_half(k: f64, nu: f64) -> Result<f64> {
    let target = -std::f64::consts::LN_2;
    let f = |t: f64| -> Result<f64> { Ok(s_density(t, k, nu)?.exponent - target) };
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Horizon(format!("no half-life for k = {k}, nu = {nu}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn run_cell(spec: &ExperimentSpec, run_id: i64, k: i64, nu: f64) -> Result<(DissipationCell, Table)> {
    let sur = surrogate_t_half(k as f64, nu)?;
    let t_final = spec.horizon(HORIZON_FACTOR * sur + 2.0);
    let width = match spec.profile {
        Profile::Gaussian { width, .. } => width,
        _ => 1.0,
    };
    let profile = Profile::Gaussian { k, width };
    let grid = spec.grid(k as usize, nu, t_final, 0.0)?;
    let eps = spec.eps_list[0];
    let mut run = Run::new(spec, &profile, eps, nu, grid, Coupling::None, t_final)?;
    let kernel = run.solver.kernel.clone();
    let mut table = Table::new("trace", &TRACE_COLUMNS);
    let mut norms = Vec::with_capacity(run.steps + 1);
    let mut times = Vec::with_capacity(run.steps + 1);
    let stride = spec.stride;
    let steps = run.steps;
    let Run { solver, field, .. } = &mut run;
    solver.run(field, steps, |i, f, m| {
        norms.push(f.row_norm(k));
        times.push(f.time);
        if i % stride == 0 {
            let c = conserved_quantities(m, &kernel);
            for r in trace_rows(run_id, nu, eps, f, m, &c, &[k]) {
                table.push(r);
            }
        }
        Ok(())
    })?;
    let half = 0.5 * norms[0];
    let i = norms.iter().position(|&n| n < half).ok_or_else(|| {
        Error::Horizon(format!(
            "row norm did not halve before t = {t_final} for k = {k}, nu = {nu}"
        ))
    })?;
    // log-linear interpolation between the bracketing samples
    let (n0, n1) = (norms[i - 1].ln(), norms[i].ln());
    let s = (n0 - half.ln()) / (n0 - n1);
    let t_half = times[i - 1] + s * (times[i] - times[i - 1]);
    Ok((
        DissipationCell {
            k,
            nu,
            t_half,
            surrogate_t_half: sur,
            ratio_to_surrogate: t_half / sur,
            eta_max: grid.eta_max,
            diagnostics: run.diagnostics(),
        },
        table,
    ))
}

pub fn run_dissipation_scan(spec: &ExperimentSpec) -> Result<(ScalingReport, Vec<Table>)> {
    let cells: Vec<(i64, f64)> = spec
        .k_list
        .iter()
        .flat_map(|&k| spec.nu_list.iter().map(move |&nu| (k, nu)))
        .collect();
    let results: Vec<(DissipationCell, Table)> = cells
        .par_iter()
        .enumerate()
        .map(|(i, &(k, nu))| run_cell(spec, i as i64, k, nu))
        .collect::<Result<_>>()?;
    let mut trace = Table::new("trace", &TRACE_COLUMNS);
    let mut cells = Vec::new();
    for (c, t) in results {
        trace.extend(t);
        cells.push(c);
    }
    let report = scaling_report(spec, cells)?;
    let mut summary = Table::new(
        "cells",
        &["k", "nu", "t_half", "surrogate_t_half", "ratio", "eta_max", "max_energy_drift"],
    );
    for c in &report.cells {
        summary.push(vec![
            Cell::I(c.k),
            Cell::F(c.nu),
            Cell::F(c.t_half),
            Cell::F(c.surrogate_t_half),
            Cell::F(c.ratio_to_surrogate),
            Cell::F(c.eta_max),
            Cell::F(c.diagnostics.max_energy_drift),
        ]);
    }
    Ok((report, vec![summary, trace]))
}

fn scaling_report(spec: &ExperimentSpec, cells: Vec<DissipationCell>) -> Result<ScalingReport> {
    let mut nu_exponents = Vec::new();
    if spec.nu_list.len() >= 2 {
        for &k in &spec.k_list {
            let sel: Vec<&DissipationCell> = cells.iter().filter(|c| c.k == k).collect();
            let x: Vec<f64> = sel.iter().map(|c| c.nu.ln()).collect();
            let y: Vec<f64> = sel.iter().map(|c| c.t_half.ln()).collect();
            nu_exponents.push(ExponentFit {
                at: k as f64,
                fit: linear_fit(&x, &y)?,
            });
        }
    }
    let mut k_exponents = Vec::new();
    if spec.k_list.len() >= 2 {
        for &nu in &spec.nu_list {
            let sel: Vec<&DissipationCell> = cells.iter().filter(|c| c.nu == nu).collect();
            let x: Vec<f64> = sel.iter().map(|c| (c.k as f64).ln()).collect();
            let y: Vec<f64> = sel.iter().map(|c| c.t_half.ln()).collect();
            k_exponents.push(ExponentFit {
                at: nu,
                fit: linear_fit(&x, &y)?,
            });
        }
    }
    let x1: Vec<f64> = cells.iter().map(|c| c.nu.ln()).collect();
    let x2: Vec<f64> = cells.iter().map(|c| (c.k as f64).ln()).collect();
    let y: Vec<f64> = cells.iter().map(|c| c.t_half.ln()).collect();
    let ys: Vec<f64> = cells.iter().map(|c| c.surrogate_t_half.ln()).collect();
    let joint = spec.nu_list.len() >= 2 && spec.k_list.len() >= 2;
    let pooled = if joint { Some(plane_fit(&x1, &x2, &y)?) } else { None };
    let surrogate_pooled = if joint { Some(plane_fit(&x1, &x2, &ys)?) } else { None };
    let max_surrogate_deviation = cells
        .iter()
        .map(|c| (c.ratio_to_surrogate - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(ScalingReport {
        cells,
        nu_exponents,
        k_exponents,
        pooled,
        surrogate_pooled,
        max_surrogate_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surrogate_scales_like_nu_cube_root() {
        let a = surrogate_t_half(1.0, 1e-6).unwrap();
        let b = surrogate_t_half(1.0, 1e-3).unwrap();
        let slope = (b.ln() - a.ln()) / (1e-3f64.ln() - 1e-6f64.ln());
        assert!((slope + 1.0 / 3.0).abs() < 0.02, "{slope}");
    }
}
