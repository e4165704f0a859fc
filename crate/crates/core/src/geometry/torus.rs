//! Uniform periodic grids on flat tori `T^n = R^n / (L_1 Z x ... x L_n Z)`.

use alloc::vec::Vec;

use super::sparse::Couplings;
use crate::{Error, Result};

pub(crate) const MIN_RESOLUTION: usize = 8;

/// Periodic uniform grid. Node `i` sits at `(i_0 h_0, ..., i_{n-1} h_{n-1})`, with
/// axis 0 varying fastest in the flat node index.
#[derive(Debug, Clone)]
pub struct TorusGrid {
    sides: Vec<f64>,
    resolution: Vec<usize>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
}

impl TorusGrid {
    pub(crate) fn new(n: usize, sides: &[f64], resolution: &[usize]) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::DimensionOutOfRange(n));
        }
        for len in [sides.len(), resolution.len()] {
            if len != n {
                return Err(Error::ShapeMismatch { expected: n, found: len });
            }
        }
        for (axis, &length) in sides.iter().enumerate() {
            if !(length.is_finite() && length > 0.0) {
                return Err(Error::InvalidSideLength { axis, length });
            }
        }
        for (axis, &r) in resolution.iter().enumerate() {
            if r < MIN_RESOLUTION || r % 2 != 0 {
                return Err(Error::InvalidResolution { axis, resolution: r });
            }
        }
        let spacing = sides.iter().zip(resolution).map(|(&l, &r)| l / r as f64).collect();
        let mut strides = Vec::with_capacity(n);
        let mut s = 1;
        for &r in resolution {
            strides.push(s);
            s *= r;
        }
        Ok(TorusGrid {
            sides: sides.to_vec(),
            resolution: resolution.to_vec(),
            spacing,
            strides,
        })
    }

    pub fn dimension(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[f64] {
        &self.sides
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn node_count(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn multi_index(&self, node: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        let mut rest = node;
        for (axis, &r) in self.resolution.iter().enumerate() {
            idx[axis] = rest % r;
            rest /= r;
        }
        idx
    }

    pub fn node_at(&self, idx: [usize; 3]) -> usize {
        (0..self.dimension()).map(|a| (idx[a] % self.resolution[a]) * self.strides[a]).sum()
    }

    /// Coordinates in `[0, L_a)` per axis, zero-padded to three components.
    pub fn coordinates(&self, node: usize) -> [f64; 3] {
        let idx = self.multi_index(node);
        let mut x = [0.0; 3];
        for a in 0..self.dimension() {
            x[a] = idx[a] as f64 * self.spacing[a];
        }
        x
    }

    /// Neighbour `node + offset * e_axis` with periodic wrap.
    #[inline]
    pub fn shift(&self, node: usize, axis: usize, offset: isize) -> usize {
        let r = self.resolution[axis];
        let i = (node / self.strides[axis]) % r;
        let j = (i as isize + offset).rem_euclid(r as isize) as usize;
        node + j * self.strides[axis] - i * self.strides[axis]
    }

    /// Shortest periodic displacement from node `a` to node `b`.
    pub fn displacement(&self, a: usize, b: usize) -> [f64; 3] {
        let xa = self.coordinates(a);
        let xb = self.coordinates(b);
        let mut d = [0.0; 3];
        for axis in 0..self.dimension() {
            let l = self.sides[axis];
            let mut delta = (xb[axis] - xa[axis]) % l;
            if delta > 0.5 * l {
                delta -= l;
            } else if delta < -0.5 * l {
                delta += l;
            }
            d[axis] = delta;
        }
        d
    }

    pub(crate) fn couplings(&self) -> Couplings {
        let n = self.node_count();
        let w = self.cell_volume();
        let mut triplets = Vec::with_capacity(n * self.dimension());
        for node in 0..n {
            for axis in 0..self.dimension() {
                let k = w / (self.spacing[axis] * self.spacing[axis]);
                triplets.push((node, self.shift(node, axis, 1), k));
            }
        }
        Couplings::from_symmetric_triplets(n, &triplets)
    }

    /// Central-difference gradient at every node.
    pub(crate) fn gradient(&self, values: &[f64]) -> Vec<[f64; 3]> {
        let dim = self.dimension();
        (0..values.len())
            .map(|node| {
                let mut g = [0.0; 3];
                for (axis, slot) in g.iter_mut().enumerate().take(dim) {
                    let fwd = values[self.shift(node, axis, 1)];
                    let bwd = values[self.shift(node, axis, -1)];
                    *slot = (fwd - bwd) / (2.0 * self.spacing[axis]);
                }
                g
            })
            .collect()
    }

    /// Discrete Hessian at `node`: standard second differences on the diagonal,
    /// four-point mixed central differences off it.
    pub(crate) fn hessian_at(&self, values: &[f64], node: usize) -> [[f64; 3]; 3] {
        let dim = self.dimension();
        let mut hess = [[0.0; 3]; 3];
        let centre = values[node];
        for a in 0..dim {
            let h = self.spacing[a];
            let fwd = values[self.shift(node, a, 1)];
            let bwd = values[self.shift(node, a, -1)];
            hess[a][a] = (fwd - 2.0 * centre + bwd) / (h * h);
            for b in (a + 1)..dim {
                let pa = self.shift(node, a, 1);
                let ma = self.shift(node, a, -1);
                let pp = values[self.shift(pa, b, 1)];
                let pm = values[self.shift(pa, b, -1)];
                let mp = values[self.shift(ma, b, 1)];
                let mm = values[self.shift(ma, b, -1)];
                let mixed = (pp - pm - mp + mm) / (4.0 * h * self.spacing[b]);
                hess[a][b] = mixed;
                hess[b][a] = mixed;
            }
        }
        hess
    }
}
