//! Exploratory scan of the size of data beyond which linear theory fails.

use rayon::prelude::*;
use serde::Serialize;

use super::{Cell, ExperimentSpec, Run, Table};
use crate::error::{Error, Result};
use crate::linear::fit::{linear_fit, LinearFit};
use crate::solver::init::Profile;
use crate::solver::ops::Coupling;

/// Smallest `eps` tried while bracketing.
pub const EPS_MIN: f64 = 1e-8;
/// Bracket contraction factor.
pub const BRACKET_FACTOR: f64 = 4.0;
/// Conjectured exponent of the threshold in `nu`.
pub const CONJECTURED_EXPONENT: f64 = 1.0 / 3.0;
pub const CAVEAT: &str = "the conjectured nu^{1/3} threshold is stated up to logarithmic \
                          corrections, which a desk-scale scan cannot resolve";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Linear,
    Nonlinear,
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub eps: f64,
    pub class: Class,
    /// `sup |rho_full| / sup |rho_linear|` observed before stopping.
    pub ratio: f64,
    /// The closure guard fired.
    pub escaped: bool,
    /// Time the run stopped.
    pub stopped_at: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdCell {
    pub nu: f64,
    pub eta_star: f64,
    pub t_final: f64,
    /// Geometric bracket midpoint to two significant digits.
    pub eps_star: Option<f64>,
    pub bracket: Option<(f64, f64)>,
    /// NONLINEAR was never reached up to `eps_max`.
    pub saturated: bool,
    /// LINEAR was never reached down to the smallest `eps`.
    pub never_linear: bool,
    pub monotone: bool,
    /// Sorted by `eps`.
    pub trace: Vec<Classification>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub cells: Vec<ThresholdCell>,
    /// Slope of `log eps_star` against `log nu`.
    pub fit: Option<LinearFit>,
    pub exponent: Option<f64>,
    pub exponent_ci95: Option<f64>,
    pub residuals: Vec<f64>,
    pub conjectured_exponent: f64,
    pub caveat: String,
    pub all_monotone: bool,
}

fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let e = x.abs().log10().floor() as i32;
    let s = 10f64.powi(digits - 1 - e);
    (x * s).round() / s
}

struct Setup {
    profile: Profile,
    eta_star: f64,
    t_final: f64,
    grid: crate::solver::PhaseGrid<f64>,
    /// `sup |rho|` of the linearized run per unit `eps`.
    linear_sup: f64,
}

fn sup_rho(m: &crate::solver::moments::HydroMoments<f64>) -> f64 {
    let z = m.idx(0);
    m.rho
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != z)
        .map(|(_, r)| r.norm())
        .fold(0.0, f64::max)
}

fn setup(spec: &ExperimentSpec, nu: f64) -> Result<Setup> {
    let tp = spec.threshold;
    let scale = nu.cbrt();
    let eta_star = (tp.eta_factor / scale / spec.dt).round() * spec.dt;
    let profile = match spec.profile {
        Profile::Echo {
            pump_k, seed, width, ..
        } => Profile::Echo {
            pump_k,
            seed,
            eta_star,
            width,
        },
        ref p => p.clone(),
    };
    let t_final = super::round_up(tp.window_factor / scale, spec.dt);
    let grid = spec.grid(spec.k_max, nu, t_final, eta_star)?;
    let mut run = Run::new(spec, &profile, 1.0, nu, grid, Coupling::Linear, t_final)?;
    let mut sup: f64 = 0.0;
    let steps = run.steps;
    run.solver.run(&mut run.field, steps, |_, _, m| {
        sup = sup.max(sup_rho(m));
        Ok(())
    })?;
    if !(sup > 0.0) {
        return Err(Error::domain("the linearized response of the threshold datum vanishes"));
    }
    Ok(Setup {
        profile,
        eta_star,
        t_final,
        grid,
        linear_sup: sup,
    })
}

fn classify(spec: &ExperimentSpec, s: &Setup, nu: f64, eps: f64) -> Result<Classification> {
    let limit = spec.threshold.ratio * eps * s.linear_sup;
    let mut run = match Run::new(spec, &s.profile, eps, nu, s.grid, Coupling::Full, s.t_final) {
        Ok(r) => r,
        Err(Error::StateEscape(_)) => {
            return Ok(Classification {
                eps,
                class: Class::Nonlinear,
                ratio: f64::NAN,
                escaped: true,
                stopped_at: 0.0,
            })
        }
        Err(e) => return Err(e),
    };
    let mut sup: f64 = 0.0;
    let mut t = 0.0;
    let m = run.solver.begin(&run.field);
    let m = match m {
        Ok(m) => m,
        Err(Error::StateEscape(_)) => {
            return Ok(Classification {
                eps,
                class: Class::Nonlinear,
                ratio: f64::NAN,
                escaped: true,
                stopped_at: 0.0,
            })
        }
        Err(e) => return Err(e),
    };
    sup = sup.max(sup_rho(&m));
    let reference = eps * s.linear_sup;
    for _ in 0..run.steps {
        match run.solver.step(&mut run.field) {
            Ok(m) => {
                sup = sup.max(sup_rho(&m));
                t = run.field.time;
                if sup > limit {
                    return Ok(Classification {
                        eps,
                        class: Class::Nonlinear,
                        ratio: sup / reference,
                        escaped: false,
                        stopped_at: t,
                    });
                }
            }
            Err(Error::StateEscape(_)) => {
                return Ok(Classification {
                    eps,
                    class: Class::Nonlinear,
                    ratio: sup / reference,
                    escaped: true,
                    stopped_at: run.field.time,
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Classification {
        eps,
        class: Class::Linear,
        ratio: sup / reference,
        escaped: false,
        stopped_at: t,
    })
}

fn scan_one(spec: &ExperimentSpec, nu: f64) -> Result<ThresholdCell> {
    let tp = spec.threshold;
    let s = setup(spec, nu)?;
    let mut trace = Vec::new();
    let top = classify(spec, &s, nu, tp.eps_max)?;
    let top_class = top.class;
    trace.push(top);
    let mut cell = ThresholdCell {
        nu,
        eta_star: s.eta_star,
        t_final: s.t_final,
        eps_star: None,
        bracket: None,
        saturated: false,
        never_linear: false,
        monotone: true,
        trace: Vec::new(),
    };
    if top_class == Class::Linear {
        cell.saturated = true;
    } else {
        let mut hi = tp.eps_max;
        let mut lo = hi / BRACKET_FACTOR;
        loop {
            let c = classify(spec, &s, nu, lo)?;
            let class = c.class;
            trace.push(c);
            if class == Class::Linear {
                break;
            }
            hi = lo;
            lo /= BRACKET_FACTOR;
            if lo < EPS_MIN {
                cell.never_linear = true;
                break;
            }
        }
        if !cell.never_linear {
            while hi / lo > 1.0 + tp.rel_precision {
                let mid = (lo * hi).sqrt();
                let c = classify(spec, &s, nu, mid)?;
                if c.class == Class::Linear {
                    lo = mid;
                } else {
                    hi = mid;
                }
                trace.push(c);
            }
            cell.bracket = Some((lo, hi));
            cell.eps_star = Some(round_sig((lo * hi).sqrt(), 2));
        }
    }
    trace.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    let first_nl = trace.iter().position(|c| c.class == Class::Nonlinear);
    cell.monotone = match first_nl {
        Some(i) => trace[i..].iter().all(|c| c.class == Class::Nonlinear),
        None => true,
    };
    cell.trace = trace;
    Ok(cell)
}

pub fn run_threshold_scan(spec: &ExperimentSpec) -> Result<(ThresholdReport, Vec<Table>)> {
    let mut nus = spec.nu_list.clone();
    nus.sort_by(f64::total_cmp);
    let cells: Vec<ThresholdCell> = nus
        .par_iter()
        .map(|&nu| scan_one(spec, nu))
        .collect::<Result<_>>()?;
    let pts: Vec<(f64, f64)> = cells
        .iter()
        .filter_map(|c| c.eps_star.map(|e| (c.nu.ln(), e.ln())))
        .collect();
    let (fit, residuals) = if pts.len() >= 2 {
        let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let f = linear_fit(&x, &y)?;
        let r = pts.iter().map(|p| p.1 - f.intercept - f.slope * p.0).collect();
        (Some(f), r)
    } else {
        (None, Vec::new())
    };
    let mut trace_t = Table::new("classifier_trace", &["nu", "eps", "nonlinear", "ratio", "escaped", "stopped_at"]);
    let mut cells_t = Table::new("threshold", &["nu", "eta_star", "t_final", "eps_star", "saturated", "monotone"]);
    for c in &cells {
        cells_t.push(vec![
            Cell::F(c.nu),
            Cell::F(c.eta_star),
            Cell::F(c.t_final),
            Cell::F(c.eps_star.unwrap_or(f64::NAN)),
            Cell::I(c.saturated as i64),
            Cell::I(c.monotone as i64),
        ]);
        for t in &c.trace {
            trace_t.push(vec![
                Cell::F(c.nu),
                Cell::F(t.eps),
                Cell::I((t.class == Class::Nonlinear) as i64),
                Cell::F(t.ratio),
                Cell::I(t.escaped as i64),
                Cell::F(t.stopped_at),
            ]);
        }
    }
    let report = ThresholdReport {
        all_monotone: cells.iter().all(|c| c.monotone),
        exponent: fit.map(|f| f.slope),
        exponent_ci95: fit.map(|f| f.slope_ci95),
        fit,
        residuals,
        conjectured_exponent: CONJECTURED_EXPONENT,
        caveat: CAVEAT.into(),
        cells,
    };
    Ok((report, vec![cells_t, trace_t]))
}
