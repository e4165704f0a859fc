//! Fitting `C` in `tol_disc = C (h² + dt)` against the exact heat flow of the
//! configured initial data.

use std::sync::Arc;

use heatlab_core::harnack::{log_u, quantity_h};
use heatlab_core::heatflow::{solve, SolverStats};
use heatlab_core::initial::{ClosedForm, TrigSeries};
use heatlab_core::{FlowState, Manifold, Trajectory};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{LabError, Result};

/// Calibrated constants never go below this, so exact data still gets a usable
/// tolerance.
pub const MIN_CONSTANT: f64 = 1e-3;

/// Accepted band for the coarse/fine error ratio.
pub const REFINEMENT_BAND: (f64, f64) = (3.5, 4.5);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    pub h: f64,
    pub dt: f64,
    /// `max |H_discrete − H_exact|` over all compared snapshots and nodes.
    pub max_error: f64,
    /// `max_error / (h² + dt)`.
    pub constant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    /// `max(coarse, fine, MIN_CONSTANT)`.
    pub constant: f64,
    pub floored: bool,
    pub coarse: Level,
    /// Doubled resolution, `dt / 4`, compared at the coarse snapshot times.
    pub fine: Level,
    /// `coarse.max_error / fine.max_error`; absent when the fine error is zero.
    pub error_ratio: Option<f64>,
    pub fine_solver: SolverTotals,
}

/// Serializable copy of the solver's iteration counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SolverTotals {
    pub steps: usize,
    pub cg_iterations: usize,
    pub max_cg_iterations: usize,
}

impl SolverTotals {
    pub fn add(&mut self, s: SolverStats) {
        self.steps += s.steps;
        self.cg_iterations += s.cg_iterations;
        self.max_cg_iterations = self.max_cg_iterations.max(s.max_cg_iterations);
    }
}

impl From<SolverStats> for SolverTotals {
    fn from(s: SolverStats) -> Self {
        let mut t = SolverTotals::default();
        t.add(s);
        t
    }
}

impl Calibration {
    /// Both levels below the floor count as exact and are exempt from the ratio check.
    pub fn refinement_ok(&self) -> bool {
        let exact = self.coarse.constant <= MIN_CONSTANT && self.fine.constant <= MIN_CONSTANT;
        exact || self.error_ratio.is_some_and(|r| r >= REFINEMENT_BAND.0 && r <= REFINEMENT_BAND.1)
    }
}

fn series(cfg: &RunConfig, m: &Manifold) -> Result<TrigSeries> {
    match cfg.initial_data.to_core().closed_form(m, cfg.t0)? {
        ClosedForm::Trig(s) => Ok(s),
        ClosedForm::Harmonic(_) => Err(LabError::Config("calibration needs a torus manifold".into())),
    }
}

fn state_error(series: &TrigSeries, m: &Arc<Manifold>, state: &FlowState) -> Result<f64> {
    let discrete = quantity_h(&log_u(state)?, state.time());
    let exact = series.exact_quantity_h(m, state.time())?;
    Ok(discrete.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

fn level(h: f64, dt: f64, max_error: f64) -> Level {
    Level { h, dt, max_error, constant: max_error / (h * h + dt) }
}

/// Calibrates against a fresh coarse solve on the config's own grid.
pub fn calibrate_tolerance(cfg: &RunConfig) -> Result<Calibration> {
    if !cfg.manifold.is_torus() {
        return Err(LabError::Config("calibrate needs a torus manifold".into()));
    }
    let m = cfg.manifold.build()?;
    let f0 = cfg.initial_data.to_core().sample(&m, cfg.t0)?;
    let traj = solve(&m, &f0, cfg.t0, cfg.t_end, cfg.dt, cfg.direction.into())?;
    calibrate_with(cfg, &traj)
}

/// Calibrates reusing `coarse`, which must be the config's own trajectory.
pub fn calibrate_with(cfg: &RunConfig, coarse: &Trajectory) -> Result<Calibration> {
    let fine_spec = cfg
        .manifold
        .refined(2)
        .ok_or_else(|| LabError::Config("calibrate needs a torus manifold".into()))?;
    let m = Arc::clone(coarse.manifold());
    let s = series(cfg, &m)?;
    let mut coarse_err: f64 = 0.0;
    for state in coarse.states() {
        coarse_err = coarse_err.max(state_error(&s, &m, state)?);
    }

    let fine_m = fine_spec.build()?;
    let fine_s = series(cfg, &fine_m)?;
    let fine_dt = cfg.dt / 4.0;
    let f0 = ClosedForm::Trig(fine_s.clone()).sample(&fine_m, cfg.t0)?;
    let mut state = FlowState::new(f0, cfg.t0, cfg.direction.into())?;
    let mut fine_err = state_error(&fine_s, &fine_m, &state)?;
    let mut stats = SolverTotals::default();
    for k in 1..coarse.len() {
        let t_next = coarse.states()[k].time();
        let chunk = solve(&fine_m, state.f(), state.time(), t_next, fine_dt, cfg.direction.into())?;
        stats.add(chunk.stats());
        let last = chunk.states().last().expect("solve returns at least two states");
        state = FlowState::new(last.f().clone(), t_next, cfg.direction.into())?;
        fine_err = fine_err.max(state_error(&fine_s, &fine_m, &state)?);
    }

    let coarse = level(m.mesh_size(), cfg.dt, coarse_err);
    let fine = level(fine_m.mesh_size(), fine_dt, fine_err);
    let fitted = coarse.constant.max(fine.constant);
    Ok(Calibration {
        constant: fitted.max(MIN_CONSTANT),
        floored: fitted < MIN_CONSTANT,
        coarse,
        fine,
        error_ratio: (fine_err > 0.0).then(|| coarse_err / fine_err),
        fine_solver: stats,
    })
}
