//! Crank–Nicolson integration of `∂f/∂t = Δf`.
//!
//! Backward heat flows `∂f/∂t = −Δf` are integrated as forward flows in
//! `τ = t_ref − t`, where they read `∂f/∂τ = Δf`; every state of a backward
//! trajectory therefore carries `τ` as its time and the same operator is used.

mod cg;

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::geometry::{Manifold, ScalarField};
use crate::math::round;
use crate::{Error, Result};
use cg::ImplicitOperator;

/// Relative residual target for the implicit solves.
pub const CG_RELATIVE_TOLERANCE: f64 = 1e-14;
const CG_MAX_ITERATIONS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Heat equation in `t`.
    Forward,
    /// Backward heat equation, integrated in `τ`.
    Backward,
}

/// A strictly positive solution snapshot at time `t` (forward) or `τ` (backward).
#[derive(Debug, Clone)]
pub struct FlowState {
    f: ScalarField,
    time: f64,
    direction: Direction,
}

impl FlowState {
    pub fn new(f: ScalarField, time: f64, direction: Direction) -> Result<Self> {
        if !(time > 0.0 && time.is_finite()) {
            return Err(Error::InvalidTimeGrid("state time must be positive"));
        }
        let (min, node) = f.min_with_node();
        if !(min > 0.0) {
            return Err(Error::NonPositive { node, value: min });
        }
        Ok(FlowState { f, time, direction })
    }

    pub fn f(&self) -> &ScalarField {
        &self.f
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn manifold(&self) -> &Arc<Manifold> {
        self.f.manifold()
    }
}

/// Counters accumulated while integrating a trajectory.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolverStats {
    pub steps: usize,
    pub cg_iterations: usize,
    pub max_cg_iterations: usize,
}

/// Snapshots stored at every step, sharing one manifold and direction.
#[derive(Debug, Clone)]
pub struct Trajectory {
    states: Vec<FlowState>,
    manifold: Arc<Manifold>,
    step_size: f64,
    direction: Direction,
    stats: SolverStats,
}

impl Trajectory {
    pub fn states(&self) -> &[FlowState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn manifold(&self) -> &Arc<Manifold> {
        &self.manifold
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(FlowState::time)
    }

    /// Index of the snapshot at time `t` (to within a millionth of a step).
    pub fn index_of_time(&self, t: f64) -> Result<usize> {
        let t0 = self.states[0].time;
        let k = round((t - t0) / self.step_size);
        if k < 0.0 || k as usize >= self.states.len() {
            return Err(Error::TimeNotOnGrid(t));
        }
        let idx = k as usize;
        if (self.states[idx].time - t).abs() > 1e-6 * self.step_size {
            return Err(Error::TimeNotOnGrid(t));
        }
        Ok(idx)
    }
}

/// Reusable Crank–Nicolson stepper for one manifold and step size.
struct Stepper<'a> {
    op: ImplicitOperator<'a>,
}

impl<'a> Stepper<'a> {
    fn new(m: &'a Manifold, dt: f64) -> Self {
        Stepper { op: ImplicitOperator::new(m.quadrature_weights(), m.couplings(), dt) }
    }

    fn advance(&self, f: &[f64]) -> Result<(Vec<f64>, usize)> {
        let rhs = self.op.explicit_half(f);
        let mut x = f.to_vec();
        let iterations = self.op.solve(&rhs, &mut x, CG_RELATIVE_TOLERANCE, CG_MAX_ITERATIONS)?;
        Ok((x, iterations))
    }
}

fn checked_state(f: ScalarField, time: f64, direction: Direction) -> Result<FlowState> {
    let (value, node) = f.min_with_node();
    if !(value > 0.0) {
        return Err(Error::PositivityLoss { node, value, time });
    }
    Ok(FlowState { f, time, direction })
}

/// One Crank–Nicolson step `(I − dt/2 L) f_new = (I + dt/2 L) f_old`.
pub fn step(state: &FlowState, dt: f64) -> Result<FlowState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidTimeGrid("dt must be positive"));
    }
    let m = state.manifold();
    let (next, _) = Stepper::new(m, dt).advance(state.f.values())?;
    checked_state(state.f.with_values(next), state.time + dt, state.direction)
}

/// Integrates from `t0` to `t_end` with fixed step `dt`, storing every state.
///
/// For [`Direction::Backward`], `t0` and `t_end` are values of `τ`.
pub fn solve(
    m: &Arc<Manifold>,
    f0: &ScalarField,
    t0: f64,
    t_end: f64,
    dt: f64,
    direction: Direction,
) -> Result<Trajectory> {
    if f0.len() != m.node_count() {
        return Err(Error::FieldLength { expected: m.node_count(), found: f0.len() });
    }
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::InvalidTimeGrid("t0 must be positive"));
    }
    if !(t_end > t0) {
        return Err(Error::InvalidTimeGrid("t_end must exceed t0"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidTimeGrid("dt must be positive"));
    }
    let span = t_end - t0;
    let steps = round(span / dt);
    if steps < 1.0 || (steps * dt - span).abs() > 1e-9 * span.max(dt) {
        return Err(Error::InvalidTimeGrid("dt must divide t_end - t0"));
    }
    let steps = steps as usize;

    let initial = FlowState::new(ScalarField::new(m, f0.values().to_vec())?, t0, direction)?;
    let stepper = Stepper::new(m, dt);
    let mut states = Vec::with_capacity(steps + 1);
    let mut stats = SolverStats::default();
    states.push(initial);
    for k in 1..=steps {
        let (next, iterations) = stepper.advance(states[k - 1].f.values())?;
        stats.steps += 1;
        stats.cg_iterations += iterations;
        stats.max_cg_iterations = stats.max_cg_iterations.max(iterations);
        let time = t0 + k as f64 * dt;
        states.push(checked_state(ScalarField::new(m, next)?, time, direction)?);
    }
    Ok(Trajectory { states, manifold: Arc::clone(m), step_size: dt, direction, stats })
}

/// `τ(t) = t_ref − t`, so that `∂τ/∂t = −1`.
pub fn tau_of_t(t: f64, t_ref: f64) -> f64 {
    t_ref - t
}
