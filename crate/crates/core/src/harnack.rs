//! Log-transforms of a positive solution and the pointwise differential Harnack
//! quantities built from them.
//!
//! With `f = e^{-u}` and `f = (4πt)^{-n/2} e^{-v}`:
//!
//! * `H = 2Δu − |∇u|² − 2n/t` and `P = 2Δv − |∇v|² − 2n/t` (identical fields,
//!   since `v − u` is spatially constant),
//! * the Li–Yau quantity `2Δv − n/t`,
//! * the general family `αΔw − β|∇w|² − b w/t − c n/t` whose time evolution is
//!   given in closed form by [`evolution_rhs`].

use crate::geometry::{grad_dot, grad_norm_sq, hessian_penalty, laplacian, ricci_quadratic, ScalarField};
use crate::heatflow::{FlowState, Trajectory};
use crate::math::{ln, PI};
use crate::{Error, Result};

/// Which log-transform the general quantity is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// `w = u = −ln f`.
    U,
    /// `w = v = −ln f − (n/2) ln(4πt)`; its evolution carries the extra `b n / 2t²`.
    V,
}

/// Constants `(α, β, b, c, λ)` of the general Harnack quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarnackParams {
    pub alpha: f64,
    pub beta: f64,
    pub b: f64,
    pub c: f64,
    pub lambda: f64,
    pub variant: Variant,
}

impl HarnackParams {
    pub fn new(alpha: f64, beta: f64, b: f64, c: f64, lambda: f64, variant: Variant) -> Result<Self> {
        if alpha == 0.0 {
            return Err(Error::ZeroAlpha);
        }
        Ok(HarnackParams { alpha, beta, b, c, lambda, variant })
    }

    /// `(2, 1, 0, 2, 2)`: reproduces `H` (on `u`) or `P` (on `v`).
    pub const fn cao_hamilton(variant: Variant) -> Self {
        HarnackParams { alpha: 2.0, beta: 1.0, b: 0.0, c: 2.0, lambda: 2.0, variant }
    }

    /// `(2, 0, 0, 1, 1)` on `v`: the Li–Yau quantity.
    pub const fn li_yau() -> Self {
        HarnackParams { alpha: 2.0, beta: 0.0, b: 0.0, c: 1.0, lambda: 1.0, variant: Variant::V }
    }

    /// `(2, 1, −1, 1, 1)` on `v`: Ni's quantity `2Δv − |∇v|² + v/t − n/t`.
    pub const fn ni() -> Self {
        HarnackParams { alpha: 2.0, beta: 1.0, b: -1.0, c: 1.0, lambda: 1.0, variant: Variant::V }
    }

    /// `2(α − β)λ / α`, the coefficient of `H/t` in the evolution equation.
    pub fn damping(&self) -> f64 {
        2.0 * (self.alpha - self.beta) * self.lambda / self.alpha
    }
}

fn checked_log(state: &FlowState) -> Result<ScalarField> {
    let (min, node) = state.f().min_with_node();
    if !(min > 0.0) {
        return Err(Error::NonPositive { node, value: min });
    }
    Ok(state.f().map(|f| -ln(f)))
}

/// `u = −ln f`.
pub fn log_u(state: &FlowState) -> Result<ScalarField> {
    checked_log(state)
}

/// `v = −ln f − (n/2) ln(4π t)`, with `t` the state's time.
pub fn log_v(state: &FlowState) -> Result<ScalarField> {
    let shift = v_shift(state.manifold().dimension(), state.time());
    Ok(checked_log(state)?.map(|u| u - shift))
}

/// `(n/2) ln(4πt)`, the constant separating `u` from `v`.
pub fn v_shift(n: usize, t: f64) -> f64 {
    0.5 * n as f64 * ln(4.0 * PI * t)
}

/// Log-transform matching `variant`.
pub fn log_transform(state: &FlowState, variant: Variant) -> Result<ScalarField> {
    match variant {
        Variant::U => log_u(state),
        Variant::V => log_v(state),
    }
}

/// `H = 2Δu − |∇u|² − 2n/t`.
pub fn quantity_h(u: &ScalarField, t: f64) -> ScalarField {
    let n = u.manifold().dimension() as f64;
    let lap = laplacian(u);
    let g2 = grad_norm_sq(u);
    lap.zip_with(&g2, |l, g| 2.0 * l - g - 2.0 * n / t)
}

/// `P = 2Δv − |∇v|² − 2n/t`; same formula as [`quantity_h`] applied to `v`.
pub fn quantity_p(v: &ScalarField, t: f64) -> ScalarField {
    quantity_h(v, t)
}

/// Li–Yau quantity `2Δv − n/t`.
pub fn quantity_liyau(v: &ScalarField, t: f64) -> ScalarField {
    let n = v.manifold().dimension() as f64;
    laplacian(v).map(|l| 2.0 * l - n / t)
}

/// `αΔw − β|∇w|² − b w/t − c n/t`.
pub fn quantity_general(w: &ScalarField, t: f64, p: &HarnackParams) -> ScalarField {
    let n = w.manifold().dimension() as f64;
    let lap = laplacian(w);
    let g2 = grad_norm_sq(w);
    let values = lap
        .values()
        .iter()
        .zip(g2.values())
        .zip(w.values())
        .map(|((&l, &g), &wv)| p.alpha * l - p.beta * g - p.b * wv / t - p.c * n / t)
        .collect();
    w.with_values(values)
}

/// Right-hand side of the evolution equation of [`quantity_general`]:
///
/// ```text
/// ΔH − 2∇H·∇w − 2(α−β)|∇∇w − λg/2t|² − 2(α−β)Ric(∇w,∇w) − (2(α−β)λ/α) H/t
///    − (b + 2(α−β)βλ/α)|∇w|²/t + (1 − 2(α−β)λ/α)(b w + c n)/t² + (α−β)nλ²/2t²
///    [+ b n/2t² for the v-variant]
/// ```
///
/// Torus only, since it needs the discrete Hessian.
pub fn evolution_rhs(w: &ScalarField, t: f64, p: &HarnackParams) -> Result<ScalarField> {
    if w.manifold().torus().is_none() {
        return Err(Error::UnsupportedBackend("evolution_rhs"));
    }
    let n = w.manifold().dimension() as f64;
    let h = quantity_general(w, t, p);
    let lap_h = laplacian(&h);
    let cross = grad_dot(&h, w)?;
    let penalty = hessian_penalty(w, p.lambda, t)?;
    let ricci = ricci_quadratic(w);
    let g2 = grad_norm_sq(w);

    let gap = p.alpha - p.beta;
    let k = p.damping();
    let grad_coeff = p.b + 2.0 * gap * p.beta * p.lambda / p.alpha;
    let mut constant = (1.0 - k) * p.c * n / (t * t) + gap * n * p.lambda * p.lambda / (2.0 * t * t);
    if p.variant == Variant::V {
        constant += p.b * n / (2.0 * t * t);
    }
    let values = (0..w.len())
        .map(|i| {
            lap_h.values()[i] - 2.0 * cross.values()[i]
                - 2.0 * gap * penalty.values()[i]
                - 2.0 * gap * ricci.values()[i]
                - k * h.values()[i] / t
                - grad_coeff * g2.values()[i] / t
                + (1.0 - k) * p.b * w.values()[i] / (t * t)
                + constant
        })
        .collect();
    Ok(w.with_values(values))
}

/// Max-norm of `(H(t+dt) − H(t−dt)) / 2dt − evolution_rhs(t)` at snapshot `index`.
pub fn evolution_residual(traj: &Trajectory, p: &HarnackParams, index: usize) -> Result<f64> {
    if traj.manifold().torus().is_none() {
        return Err(Error::UnsupportedBackend("evolution_residual"));
    }
    if index == 0 || index + 1 >= traj.len() {
        return Err(Error::IndexOutOfRange { index, len: traj.len() });
    }
    let states = traj.states();
    let quantity_at = |k: usize| -> Result<ScalarField> {
        let w = log_transform(&states[k], p.variant)?;
        Ok(quantity_general(&w, states[k].time(), p))
    };
    let before = quantity_at(index - 1)?;
    let after = quantity_at(index + 1)?;
    let dt2 = states[index + 1].time() - states[index - 1].time();
    let w = log_transform(&states[index], p.variant)?;
    let rhs = evolution_rhs(&w, states[index].time(), p)?;
    let mut worst: f64 = 0.0;
    for i in 0..rhs.len() {
        let lhs = (after.values()[i] - before.values()[i]) / dt2;
        worst = worst.max((lhs - rhs.values()[i]).abs());
    }
    Ok(worst)
}

/// Outcome of a pointwise sign check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignReport {
    pub max_value: f64,
    /// Lowest node index attaining the maximum.
    pub argmax_node: usize,
    pub pass: bool,
}

/// Passes iff `max q <= tol`.
pub fn assert_nonpositive(q: &ScalarField, tol: f64) -> SignReport {
    let (max_value, argmax_node) = q.max_with_node();
    SignReport { max_value, argmax_node, pass: max_value <= tol }
}
