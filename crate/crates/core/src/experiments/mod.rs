//! Reproducible drivers that turn the solver and the linear theory into
//! measured rates, echo profiles and threshold scalings.

pub mod dissipation;
pub mod echo;
pub mod landau;
pub mod threshold;
pub mod thermalize;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::InteractionKernel;
use crate::multiplier::NormSpec;
use crate::solver::init::{init_state, EpsScale, InitReport, Profile};
use crate::solver::moments::HydroMoments;
use crate::solver::ops::Coupling;
use crate::solver::stepper::{Solver, StepStats};
use crate::solver::{PhaseGrid, SpectralField};

/// Collisional damping exponent after which a row is treated as gone when
/// sizing the `eta` extent.
pub const EXTENT_DAMPING: f64 = 40.0;
/// Extra `eta` room for the width of the initial profiles.
pub const EXTENT_MARGIN: f64 = 12.0;
/// Early-time samples excluded from every fit.
pub const TRANSIENT: f64 = 2.0;
/// Relative signal floor; fits drop samples within 10x of it.
pub const SIGNAL_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Dissipation,
    Landau,
    Echo,
    Threshold,
    Thermalize,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Dissipation,
        ExperimentKind::Landau,
        ExperimentKind::Echo,
        ExperimentKind::Threshold,
        ExperimentKind::Thermalize,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Dissipation => "dissipation",
            ExperimentKind::Landau => "landau",
            ExperimentKind::Echo => "echo",
            ExperimentKind::Threshold => "threshold",
            ExperimentKind::Thermalize => "thermalize",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

/// Interaction choice in serializable form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Coulomb,
    Screened,
    Table { values: Vec<f64> },
}

impl KernelSpec {
    pub fn build(&self) -> Result<InteractionKernel<f64>> {
        Ok(match self {
            KernelSpec::Coulomb => InteractionKernel::coulomb(),
            KernelSpec::Screened => InteractionKernel::screened(),
            KernelSpec::Table { values } => InteractionKernel::table(values.clone())?,
        })
    }
}

/// Threshold bisection controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdParams {
    /// NONLINEAR when the full response exceeds `ratio` times the linear one.
    pub ratio: f64,
    /// Upper end of the bracket.
    pub eps_max: f64,
    /// Relative width at which bisection stops.
    pub rel_precision: f64,
    /// Echo seed position in units of `nu^{-1/3}`.
    pub eta_factor: f64,
    /// Observation window in units of `nu^{-1/3}`.
    pub window_factor: f64,
}

impl Default for ThresholdParams {
    fn default() -> Self {
        ThresholdParams {
            ratio: 2.0,
            eps_max: 0.3,
            rel_precision: 0.01,
            eta_factor: 1.5,
            window_factor: 5.0,
        }
    }
}

/// Algebraic datum used for the decay-rate fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandauParams {
    /// Power `p` in `<eta>^{-p}`.
    pub p: f64,
    /// Gaussian cutoff in units of `3 nu^{-1/3}`.
    pub cutoff_factor: f64,
    /// Time horizon in units of `nu^{-1/3}`.
    pub horizon_factor: f64,
    /// Volterra substeps per solver step.
    pub substeps: usize,
}

impl Default for LandauParams {
    fn default() -> Self {
        LandauParams {
            p: 4.0,
            cutoff_factor: 1.0,
            horizon_factor: 3.0,
            substeps: 4,
        }
    }
}

/// Fully resolved description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub nu_list: Vec<f64>,
    pub eps_list: Vec<f64>,
    pub k_list: Vec<i64>,
    pub k_max: usize,
    pub dt: f64,
    /// Fixed `eta` extent; sized per run from the damping when absent.
    pub eta_max: Option<f64>,
    /// Fixed horizon; chosen per run when absent.
    pub t_final: Option<f64>,
    pub fit_window: Option<(f64, f64)>,
    pub profile: Profile,
    pub eps_scale: EpsScale,
    pub kernel: KernelSpec,
    pub norm: NormSpec<f64>,
    pub threshold: ThresholdParams,
    pub landau: LandauParams,
    /// Samples kept in time-series output (every `stride`-th step).
    pub stride: usize,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
}

impl ExperimentSpec {
    /// Defaults for `kind`.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = ExperimentSpec {
            kind,
            nu_list: vec![1e-3],
            eps_list: vec![1e-3],
            k_list: vec![1],
            k_max: 1,
            dt: 0.1,
            eta_max: None,
            t_final: None,
            fit_window: None,
            profile: Profile::Gaussian { k: 1, width: 1.0 },
            eps_scale: EpsScale::Amplitude,
            kernel: KernelSpec::Coulomb,
            norm: NormSpec::default(),
            threshold: ThresholdParams::default(),
            landau: LandauParams::default(),
            stride: 10,
            workers: 0,
        };
        match kind {
            ExperimentKind::Dissipation => ExperimentSpec {
                nu_list: vec![1e-6, 1e-5, 1e-4, 1e-3],
                k_list: vec![1, 2, 4],
                ..base
            },
            ExperimentKind::Landau => ExperimentSpec {
                nu_list: vec![1e-5, 1e-4, 1e-3],
                eps_list: vec![1e-6],
                ..base
            },
            ExperimentKind::Echo => ExperimentSpec {
                nu_list: vec![1e-9, 1e-6, 1e-5, 1e-4, 1e-3],
                k_max: 4,
                t_final: Some(30.0),
                profile: Profile::Echo {
                    pump_k: 2,
                    seed: 1.0,
                    eta_star: 15.0,
                    width: 1.0,
                },
                stride: 1,
                ..base
            },
            ExperimentKind::Threshold => ExperimentSpec {
                nu_list: vec![1e-4, 1e-3, 1e-2],
                k_max: 3,
                profile: Profile::Echo {
                    pump_k: 2,
                    seed: 30.0,
                    eta_star: 0.0,
                    width: 1.0,
                },
                ..base
            },
            ExperimentKind::Thermalize => ExperimentSpec {
                nu_list: vec![2e-2],
                eps_list: vec![3e-3],
                k_max: 4,
                t_final: Some(150.0),
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::domain(m));
        if self.nu_list.is_empty() || self.eps_list.is_empty() || self.k_list.is_empty() {
            return bad("nu_list, eps_list and k_list must be nonempty".into());
        }
        if let Some(nu) = self.nu_list.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
            return bad(format!("nu must be positive and finite, got {nu}"));
        }
        if let Some(e) = self.eps_list.iter().find(|&&v| !(v >= 0.0 && v.is_finite())) {
            return bad(format!("eps must be nonnegative and finite, got {e}"));
        }
        if self.k_list.iter().any(|&k| k <= 0) {
            return bad("k_list entries must be positive".into());
        }
        if !(self.dt > 0.0) || self.k_max == 0 {
            return bad("dt and k_max must be positive".into());
        }
        if let Some(t) = self.t_final {
            if !(t > 0.0) {
                return bad(format!("t_final must be positive, got {t}"));
            }
            if let Some((a, b)) = self.fit_window {
                if !(0.0 <= a && a < b && b <= t) {
                    return bad(format!("fit window ({a}, {b}) must lie inside [0, {t}]"));
                }
            }
        }
        if let Some((a, b)) = self.fit_window {
            if !(0.0 <= a && a < b) {
                return bad(format!("fit window ({a}, {b}) is empty"));
            }
        }
        if self.stride == 0 {
            return bad("stride must be positive".into());
        }
        self.profile.validate()?;
        self.norm.validate()?;
        self.kernel.build()?;
        Ok(())
    }

    /// Horizon rounded up to whole steps.
    pub fn horizon(&self, default: f64) -> f64 {
        round_up(self.t_final.unwrap_or(default), self.dt)
    }

    /// Grid for a run up to `t_final`, with `extra` room beyond the
    /// transport extent (for data placed away from `eta = 0`).
    pub fn grid(&self, k_max: usize, nu: f64, t_final: f64, extra: f64) -> Result<PhaseGrid<f64>> {
        let eta_max = match self.eta_max {
            Some(e) => e,
            None => auto_eta_max(k_max, nu, t_final, extra, self.dt),
        };
        let n = (2.0 * eta_max / self.dt).round() as usize;
        let g = PhaseGrid {
            k_max,
            eta_max,
            n_eta: n,
            dt: self.dt,
        };
        g.validate()?;
        Ok(g)
    }
}

pub fn round_up(x: f64, step: f64) -> f64 {
    (x / step - 1e-9).ceil() * step
}

/// `eta` extent reached by transport before collisions remove a row:
/// `max_k k min(t_final, (3 D / (nu k^2))^{1/3}) + extra + margin`.
pub fn auto_eta_max(k_max: usize, nu: f64, t_final: f64, extra: f64, dt: f64) -> f64 {
    let reach = (1..=k_max)
        .map(|k| {
            let kk = k as f64;
            kk * t_final.min((3.0 * EXTENT_DAMPING / (nu * kk * kk)).cbrt())
        })
        .fold(0.0, f64::max);
    round_up(reach + extra + EXTENT_MARGIN, dt)
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

/// Column-ordered rows destined for a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: Table) {
        self.rows.extend(other.rows);
    }
}

/// Tables plus a JSON summary.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub summary: serde_json::Value,
}

/// Conservation diagnostics of one solver run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RunDiagnostics {
    pub steps: usize,
    pub max_mass_step: f64,
    pub max_momentum_step: f64,
    pub max_energy_drift: f64,
    pub max_reality_defect: f64,
    pub max_boundary_ratio: f64,
    pub kinetic_change: f64,
    pub field_change: f64,
}

impl RunDiagnostics {
    pub fn from_stats(s: &StepStats<f64>) -> Self {
        RunDiagnostics {
            steps: s.steps,
            max_mass_step: s.max_mass_step,
            max_momentum_step: s.max_momentum_step,
            max_energy_drift: s.max_energy_drift,
            max_reality_defect: s.max_reality_defect,
            max_boundary_ratio: s.max_boundary_ratio,
            kinetic_change: s.current.kinetic - s.initial.kinetic,
            field_change: s.current.field - s.initial.field,
        }
    }
}

pub const TRACE_COLUMNS: [&str; 15] = [
    "run", "nu", "eps", "t", "k", "rho", "m1", "m2", "u", "temp", "mass", "momentum", "energy",
    "row_norm", "e_field",
];

/// Time-series rows for the modes in `ks` at one instant.
pub fn trace_rows(
    run: i64,
    nu: f64,
    eps: f64,
    field: &SpectralField<f64>,
    m: &HydroMoments<f64>,
    c: &crate::solver::moments::Conserved<f64>,
    ks: &[i64],
) -> Vec<Vec<Cell>> {
    ks.iter()
        .filter(|&&k| k.unsigned_abs() as usize <= m.k_max)
        .map(|&k| {
            let i = m.idx(k);
            vec![
                Cell::I(run),
                Cell::F(nu),
                Cell::F(eps),
                Cell::F(field.time),
                Cell::I(k),
                Cell::F(m.rho[i].norm()),
                Cell::F(m.m1[i].norm()),
                Cell::F(m.m2[i].norm()),
                Cell::F(m.u[i].norm()),
                Cell::F(m.temp[i].norm()),
                Cell::F(c.mass),
                Cell::F(c.momentum),
                Cell::F(c.energy),
                Cell::F(field.row_norm(k)),
                Cell::F(m.e_field[i].norm()),
            ]
        })
        .collect()
}

/// Prepared solver run.
pub struct Run {
    pub solver: Solver<f64>,
    pub field: SpectralField<f64>,
    pub init: InitReport,
    pub steps: usize,
}

impl Run {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        spec: &ExperimentSpec,
        profile: &Profile,
        eps: f64,
        nu: f64,
        grid: PhaseGrid<f64>,
        coupling: Coupling,
        t_final: f64,
    ) -> Result<Self> {
        let kernel = spec.kernel.build()?;
        let (field, init) = init_state(profile, eps, spec.eps_scale, grid, &kernel)?;
        let solver = Solver::new(grid, nu, kernel, coupling)?;
        let steps = solver.steps_to(t_final)?;
        Ok(Run {
            solver,
            field,
            init,
            steps,
        })
    }

    pub fn diagnostics(&self) -> RunDiagnostics {
        self.solver
            .stats
            .as_ref()
            .map(RunDiagnostics::from_stats)
            .expect("run started")
    }
}

/// Runs `f` on a pool of `workers` threads (0 = default pool).
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::domain(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Dispatches on `spec.kind`.
pub fn run(spec: &ExperimentSpec) -> Result<Outcome> {
    spec.validate()?;
    with_workers(spec.workers, || match spec.kind {
        ExperimentKind::Dissipation => dissipation::run_dissipation_scan(spec).map(|(r, t)| outcome(&r, t)),
        ExperimentKind::Landau => landau::run_landau_linear(spec).map(|(r, t)| outcome(&r, t)),
        ExperimentKind::Echo => echo::run_echo(spec).map(|(r, t)| outcome(&r, t)),
        ExperimentKind::Threshold => threshold::run_threshold_scan(spec).map(|(r, t)| outcome(&r, t)),
        ExperimentKind::Thermalize => thermalize::run_thermalize(spec).map(|(r, t)| outcome(&r, t)),
    })?
}

fn outcome<R: Serialize>(report: &R, tables: Vec<Table>) -> Outcome {
    Outcome {
        tables,
        summary: serde_json::to_value(report).unwrap_or(serde_json::Value::Null),
    }
}

/// `|z|` of a complex series.
pub fn magnitudes(z: &[Complex<f64>]) -> Vec<f64> {
    z.iter().map(|v| v.norm()).collect()
}

/// Replaces non-finite floats by `null`-safe values for JSON.
pub fn finite_or_nan(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}
