//! Jacobi-preconditioned conjugate gradient for the Crank–Nicolson system
//! `(M − dt/2 K) x = b`, which is symmetric positive definite.

use alloc::vec::Vec;

use crate::geometry::Couplings;
use crate::math::sqrt;
use crate::{Error, Result};

pub(crate) struct ImplicitOperator<'a> {
    weights: &'a [f64],
    couplings: &'a Couplings,
    half_dt: f64,
    inv_diag: Vec<f64>,
}

impl<'a> ImplicitOperator<'a> {
    pub(crate) fn new(weights: &'a [f64], couplings: &'a Couplings, dt: f64) -> Self {
        let half_dt = 0.5 * dt;
        let inv_diag = weights
            .iter()
            .zip(couplings.row_sums())
            .map(|(&w, &s)| 1.0 / (w + half_dt * s))
            .collect();
        ImplicitOperator { weights, couplings, half_dt, inv_diag }
    }

    /// `out = (M + sign * dt/2 K) x`.
    fn apply_signed(&self, x: &[f64], sign: f64, out: &mut [f64]) {
        self.couplings.apply(x, out);
        for ((o, &xi), &w) in out.iter_mut().zip(x).zip(self.weights) {
            *o = w * xi + sign * self.half_dt * *o;
        }
    }

    /// Right-hand side `(M + dt/2 K) f`.
    pub(crate) fn explicit_half(&self, f: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; f.len()];
        self.apply_signed(f, 1.0, &mut out);
        out
    }

    /// Solves `(M − dt/2 K) x = b` in place, starting from the contents of `x`.
    /// Returns the iteration count.
    pub(crate) fn solve(&self, b: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> Result<usize> {
        let n = b.len();
        let b_norm = sqrt(dot(b, b));
        if b_norm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return Ok(0);
        }
        let mut r = alloc::vec![0.0; n];
        self.apply_signed(x, -1.0, &mut r);
        for (ri, &bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let mut z: Vec<f64> = r.iter().zip(&self.inv_diag).map(|(a, d)| a * d).collect();
        let mut p = z.clone();
        let mut ap = alloc::vec![0.0; n];
        let mut rz = dot(&r, &z);
        let mut res = sqrt(dot(&r, &r)) / b_norm;
        let mut iter = 0;
        while res > rel_tol {
            if iter == max_iter {
                return Err(Error::SolverStalled { iterations: iter, relative_residual: res });
            }
            self.apply_signed(&p, -1.0, &mut ap);
            let alpha = rz / dot(&p, &ap);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            for i in 0..n {
                z[i] = r[i] * self.inv_diag[i];
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
            res = sqrt(dot(&r, &r)) / b_norm;
            iter += 1;
        }
        Ok(iter)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
