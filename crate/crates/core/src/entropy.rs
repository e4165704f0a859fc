//! Entropy functionals
//!
//! ```text
//! F = ∫ (t²|∇u|² − 2nt) e^{-u} dV          = ∫ t² H e^{-u} dV
//! W = ∫ (t²|∇v|² − 2nt) e^{-v}/(4πt)^{n/2} dV = ∫ t² P e^{-v}/(4πt)^{n/2} dV
//! ```
//!
//! Each is computed in both forms; the two agree up to the discrete
//! integration-by-parts error. Both weights equal `f` itself, so `f` is used
//! directly (no `exp` of large `v` at small `t`).
//!
//! Their time derivatives have the closed forms
//! `dF/dt = −2t² ∫ e^{-u} (|∇∇u − g/t|² + Ric(∇u,∇u) + |∇u|²/t) dV` and the
//! same with `v` for `W`, evaluated here on the torus.

use alloc::vec::Vec;

use crate::geometry::{grad_norm_sq, hessian_penalty, integrate, ricci_quadratic, ScalarField};
use crate::harnack::{log_u, log_v, quantity_h, quantity_p};
use crate::heatflow::{FlowState, Trajectory};
use crate::{Error, Result};

/// `λ` in the completed square of both dissipation integrals.
pub const DISSIPATION_LAMBDA: f64 = 2.0;

/// The two integral forms of one entropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyForms {
    /// `∫ (t²|∇w|² − 2nt) f dV`.
    pub direct: f64,
    /// `∫ t² Q f dV` with `Q` the matching Harnack quantity.
    pub via_quantity: f64,
}

/// Entropy diagnostics for one snapshot. `time` is the state's native clock
/// (`τ` for backward flows) and all derivatives are taken in it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyReport {
    pub time: f64,
    pub f_direct: f64,
    pub f_via_h: f64,
    pub w_direct: f64,
    pub w_via_p: f64,
    /// Closed-form `dF/dt` (torus only).
    pub df_formula: Option<f64>,
    pub dw_formula: Option<f64>,
    pub df_fd: Option<f64>,
    pub dw_fd: Option<f64>,
    /// `true` when the finite differences are centered; end points use
    /// one-sided differences and are not gated.
    pub fd_centered: bool,
}

fn forms(state: &FlowState, w: &ScalarField, quantity: &ScalarField) -> EntropyForms {
    let t = state.time();
    let n = state.manifold().dimension() as f64;
    let g2 = grad_norm_sq(w);
    let f = state.f();
    let direct = integrate(&g2.zip_with(f, |g, fv| (t * t * g - 2.0 * n * t) * fv));
    let via_quantity = integrate(&quantity.zip_with(f, |q, fv| t * t * q * fv));
    EntropyForms { direct, via_quantity }
}

/// `F` in its direct and `∫ t² H e^{-u}` forms.
pub fn entropy_f(state: &FlowState) -> Result<EntropyForms> {
    let u = log_u(state)?;
    let h = quantity_h(&u, state.time());
    Ok(forms(state, &u, &h))
}

/// `W` in its direct and `∫ t² P e^{-v}/(4πt)^{n/2}` forms.
pub fn entropy_w(state: &FlowState) -> Result<EntropyForms> {
    let v = log_v(state)?;
    #[cfg(debug_assertions)]
    debug_assert!(w_weight_matches_f(state, &v));
    let p = quantity_p(&v, state.time());
    Ok(forms(state, &v, &p))
}

#[cfg(debug_assertions)]
fn w_weight_matches_f(state: &FlowState, v: &ScalarField) -> bool {
    use crate::math::{exp, powf, PI};
    let t = state.time();
    let n = state.manifold().dimension() as f64;
    let scale = powf(4.0 * PI * t, 0.5 * n);
    v.values()
        .iter()
        .zip(state.f().values())
        .all(|(&vv, &f)| ((exp(-vv) / scale) - f).abs() <= 1e-9 * f)
}

fn dissipation(state: &FlowState, w: &ScalarField) -> Result<f64> {
    let t = state.time();
    let penalty = hessian_penalty(w, DISSIPATION_LAMBDA, t)?;
    let ricci = ricci_quadratic(w);
    let g2 = grad_norm_sq(w);
    let f = state.f().values();
    let integrand = (0..w.len())
        .map(|i| f[i] * (penalty.values()[i] + ricci.values()[i] + g2.values()[i] / t))
        .collect();
    Ok(-2.0 * t * t * integrate(&w.with_values(integrand)))
}

/// Closed-form `dF/dt` (torus only).
pub fn dissipation_f(state: &FlowState) -> Result<f64> {
    if state.manifold().torus().is_none() {
        return Err(Error::UnsupportedBackend("dissipation_f"));
    }
    dissipation(state, &log_u(state)?)
}

/// Closed-form `dW/dt` (torus only).
pub fn dissipation_w(state: &FlowState) -> Result<f64> {
    if state.manifold().torus().is_none() {
        return Err(Error::UnsupportedBackend("dissipation_w"));
    }
    dissipation(state, &log_v(state)?)
}

/// One report per snapshot with finite-difference derivatives (centered in the
/// interior) and, on the torus, the closed-form dissipation.
pub fn entropy_series(traj: &Trajectory) -> Result<Vec<EntropyReport>> {
    if traj.len() < 3 {
        return Err(Error::TooShort { len: traj.len(), min: 3 });
    }
    let on_torus = traj.manifold().torus().is_some();
    let mut reports = Vec::with_capacity(traj.len());
    for state in traj.states() {
        let f = entropy_f(state)?;
        let w = entropy_w(state)?;
        let (df_formula, dw_formula) = if on_torus {
            (Some(dissipation_f(state)?), Some(dissipation_w(state)?))
        } else {
            (None, None)
        };
        reports.push(EntropyReport {
            time: state.time(),
            f_direct: f.direct,
            f_via_h: f.via_quantity,
            w_direct: w.direct,
            w_via_p: w.via_quantity,
            df_formula,
            dw_formula,
            df_fd: None,
            dw_fd: None,
            fd_centered: false,
        });
    }
    let last = reports.len() - 1;
    for k in 0..=last {
        let (lo, hi) = match k {
            0 => (0, 1),
            k if k == last => (last - 1, last),
            k => (k - 1, k + 1),
        };
        let span = reports[hi].time - reports[lo].time;
        let df = (reports[hi].f_direct - reports[lo].f_direct) / span;
        let dw = (reports[hi].w_direct - reports[lo].w_direct) / span;
        let r = &mut reports[k];
        r.df_fd = Some(df);
        r.dw_fd = Some(dw);
        r.fd_centered = k != 0 && k != last;
    }
    Ok(reports)
}
