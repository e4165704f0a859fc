//! Icosphere meshes of the round unit sphere with cotangent-weight operators.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::sparse::Couplings;
use crate::math::{cos, sin, sqrt, PI};
use crate::{Error, Result};

pub(crate) const MIN_SUBDIVISION: u32 = 2;

type Vec3 = [f64; 3];

#[inline]
fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
fn norm(a: Vec3) -> f64 {
    sqrt(dot(a, a))
}

fn normalize(a: Vec3) -> Vec3 {
    let l = norm(a);
    [a[0] / l, a[1] / l, a[2] / l]
}

/// Triangulated unit sphere obtained by repeated 1-to-4 subdivision of an
/// icosahedron, projecting new vertices radially onto the sphere.
///
/// The base icosahedron has vertices at both poles, so node 0 is the north pole
/// `(0, 0, 1)` and node 1 the south pole at every subdivision level.
#[derive(Debug, Clone)]
pub struct SphereMesh {
    subdivision: u32,
    positions: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    areas: Vec<f64>,
    /// Gradients of the three hat functions on each triangle.
    hat_gradients: Vec<[Vec3; 3]>,
    max_edge: f64,
}

impl SphereMesh {
    pub(crate) fn new(subdivision: u32) -> Result<Self> {
        if subdivision < MIN_SUBDIVISION {
            return Err(Error::InvalidSubdivision(subdivision));
        }
        let (mut positions, mut triangles) = icosahedron();
        for _ in 0..subdivision {
            let mut midpoints: BTreeMap<(usize, usize), usize> = BTreeMap::new();
            let mut next = Vec::with_capacity(triangles.len() * 4);
            for &[a, b, c] in &triangles {
                let ab = midpoint(&mut positions, &mut midpoints, a, b);
                let bc = midpoint(&mut positions, &mut midpoints, b, c);
                let ca = midpoint(&mut positions, &mut midpoints, c, a);
                next.push([a, ab, ca]);
                next.push([b, bc, ab]);
                next.push([c, ca, bc]);
                next.push([ab, bc, ca]);
            }
            triangles = next;
        }

        let mut areas = Vec::with_capacity(triangles.len());
        let mut hat_gradients = Vec::with_capacity(triangles.len());
        let mut max_edge: f64 = 0.0;
        for &[i0, i1, i2] in &triangles {
            let p = [positions[i0], positions[i1], positions[i2]];
            let n2 = cross(sub(p[1], p[0]), sub(p[2], p[0]));
            let twice_area = norm(n2);
            let unit_normal = [n2[0] / twice_area, n2[1] / twice_area, n2[2] / twice_area];
            let mut grads = [[0.0; 3]; 3];
            for (k, g) in grads.iter_mut().enumerate() {
                let e = sub(p[(k + 2) % 3], p[(k + 1) % 3]);
                let c = cross(unit_normal, e);
                *g = [c[0] / twice_area, c[1] / twice_area, c[2] / twice_area];
                max_edge = max_edge.max(norm(e));
            }
            areas.push(0.5 * twice_area);
            hat_gradients.push(grads);
        }

        Ok(SphereMesh { subdivision, positions, triangles, areas, hat_gradients, max_edge })
    }

    pub fn subdivision(&self) -> u32 {
        self.subdivision
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle_areas(&self) -> &[f64] {
        &self.areas
    }

    /// Longest chord edge of the mesh.
    pub fn max_edge(&self) -> f64 {
        self.max_edge
    }

    /// Barycentric lumped vertex areas `sum_T |T|/3`.
    pub(crate) fn barycentric_areas(&self) -> Vec<f64> {
        let mut w = alloc::vec![0.0; self.positions.len()];
        for (tri, &area) in self.triangles.iter().zip(&self.areas) {
            for &v in tri {
                w[v] += area / 3.0;
            }
        }
        w
    }

    /// Circumcentric (Voronoi) lumped vertex areas. Every icosphere triangle is
    /// acute, so these partition each triangle and sum to the mesh area.
    pub(crate) fn voronoi_areas(&self) -> Vec<f64> {
        let mut w = alloc::vec![0.0; self.positions.len()];
        for &tri in &self.triangles {
            for k in 0..3 {
                let (i, j) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let a = sub(self.positions[i], self.positions[tri[k]]);
                let b = sub(self.positions[j], self.positions[tri[k]]);
                let cot = dot(a, b) / norm(cross(a, b));
                let e = sub(self.positions[j], self.positions[i]);
                let share = dot(e, e) * cot / 8.0;
                w[i] += share;
                w[j] += share;
            }
        }
        w
    }

    pub(crate) fn couplings(&self) -> Couplings {
        let mut triplets = Vec::with_capacity(self.triangles.len() * 3);
        for &tri in &self.triangles {
            for k in 0..3 {
                // angle at vertex k, opposite edge (i, j)
                let (i, j) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let a = sub(self.positions[i], self.positions[tri[k]]);
                let b = sub(self.positions[j], self.positions[tri[k]]);
                let cot = dot(a, b) / norm(cross(a, b));
                triplets.push((i, j, 0.5 * cot));
            }
        }
        Couplings::from_symmetric_triplets(self.positions.len(), &triplets)
    }

    /// `sum_T (|T|/3) |grad f|_T^2` accumulated per vertex (not yet divided by the
    /// barycentric area).
    pub(crate) fn accumulate_grad_norm_sq(&self, values: &[f64]) -> Vec<f64> {
        let mut acc = alloc::vec![0.0; self.positions.len()];
        for ((tri, grads), &area) in self.triangles.iter().zip(&self.hat_gradients).zip(&self.areas) {
            let mut g = [0.0; 3];
            for k in 1..3 {
                let df = values[tri[k]] - values[tri[0]];
                for c in 0..3 {
                    g[c] += df * grads[k][c];
                }
            }
            let contribution = dot(g, g) * area / 3.0;
            for &v in tri {
                acc[v] += contribution;
            }
        }
        acc
    }
}

fn midpoint(
    positions: &mut Vec<Vec3>,
    cache: &mut BTreeMap<(usize, usize), usize>,
    a: usize,
    b: usize,
) -> usize {
    let key = if a < b { (a, b) } else { (b, a) };
    *cache.entry(key).or_insert_with(|| {
        let (pa, pb) = (positions[a], positions[b]);
        positions.push(normalize([pa[0] + pb[0], pa[1] + pb[1], pa[2] + pb[2]]));
        positions.len() - 1
    })
}

/// Icosahedron with vertices at the poles and two staggered rings at `z = ±1/sqrt(5)`.
fn icosahedron() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let z = 1.0 / sqrt(5.0);
    let r = 2.0 / sqrt(5.0);
    let mut positions = alloc::vec![[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]];
    for k in 0..5 {
        let phi = 2.0 * PI * k as f64 / 5.0;
        positions.push([r * cos(phi), r * sin(phi), z]);
    }
    for k in 0..5 {
        let phi = 2.0 * PI * k as f64 / 5.0 + PI / 5.0;
        positions.push([r * cos(phi), r * sin(phi), -z]);
    }
    let upper = |k: usize| 2 + k % 5;
    let lower = |k: usize| 7 + k % 5;
    let mut triangles = Vec::with_capacity(20);
    for k in 0..5 {
        triangles.push([0, upper(k), upper(k + 1)]);
        triangles.push([upper(k), lower(k), upper(k + 1)]);
        triangles.push([upper(k + 1), lower(k), lower(k + 1)]);
        triangles.push([1, lower(k + 1), lower(k)]);
    }
    (positions, triangles)
}
