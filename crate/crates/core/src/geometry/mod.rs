//! Discrete closed manifolds and the differential operators used by every
//! other module: Laplacian, squared gradient norm, the completed-square Hessian
//! penalty, the Ricci quadratic form, quadrature and geodesic distance.
//!
//! The Laplacian follows the analyst's sign convention (`Δ = g^{ij} ∂_i ∂_j`,
//! nonpositive spectrum). Both backends assemble it as `M^{-1} K`, where `M` is
//! the diagonal of quadrature weights and `K` a symmetric coupling matrix, which
//! makes it self-adjoint under the quadrature inner product.

mod sparse;
pub mod sphere;
pub mod torus;

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

pub(crate) use sparse::Couplings;
pub use sphere::SphereMesh;
pub use torus::TorusGrid;

use crate::math::{atan2, sqrt};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ManifoldKind {
    FlatTorus,
    RoundSphere,
}

/// Declared Ricci quadratic form of the metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RicciForm {
    /// `Ric(X, X) = 0` (flat torus).
    Zero,
    /// `Ric(X, X) = |X|^2` (unit round sphere).
    UnitSphereMetric,
}

#[derive(Clone)]
enum Backend {
    Torus(TorusGrid),
    Sphere(SphereMesh),
}

/// A discretized closed Riemannian manifold with nonnegative Ricci curvature.
#[derive(Clone)]
pub struct Manifold {
    backend: Backend,
    weights: Vec<f64>,
    couplings: Couplings,
    ricci: RicciForm,
}

impl fmt::Debug for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("Manifold");
        s.field("kind", &self.kind()).field("dimension", &self.dimension());
        match &self.backend {
            Backend::Torus(g) => {
                s.field("sides", &g.sides()).field("resolution", &g.resolution());
            }
            Backend::Sphere(m) => {
                s.field("subdivision", &m.subdivision());
            }
        }
        s.field("node_count", &self.node_count()).finish()
    }
}

/// Uniform periodic grid on `T^n` with the given side lengths and per-axis node
/// counts (each even and at least 8).
pub fn build_torus(n: usize, side_lengths: &[f64], resolution: &[usize]) -> Result<Arc<Manifold>> {
    let grid = TorusGrid::new(n, side_lengths, resolution)?;
    let weights = alloc::vec![grid.cell_volume(); grid.node_count()];
    let couplings = grid.couplings();
    Ok(Arc::new(Manifold { backend: Backend::Torus(grid), weights, couplings, ricci: RicciForm::Zero }))
}

/// Icosphere mesh of the unit sphere with circumcentric lumped vertex areas.
pub fn build_sphere(subdivision: u32) -> Result<Arc<Manifold>> {
    let mesh = SphereMesh::new(subdivision)?;
    let weights = mesh.voronoi_areas();
    let couplings = mesh.couplings();
    Ok(Arc::new(Manifold {
        backend: Backend::Sphere(mesh),
        weights,
        couplings,
        ricci: RicciForm::UnitSphereMetric,
    }))
}

impl Manifold {
    pub fn kind(&self) -> ManifoldKind {
        match self.backend {
            Backend::Torus(_) => ManifoldKind::FlatTorus,
            Backend::Sphere(_) => ManifoldKind::RoundSphere,
        }
    }

    pub fn dimension(&self) -> usize {
        match &self.backend {
            Backend::Torus(g) => g.dimension(),
            Backend::Sphere(_) => 2,
        }
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    /// Quadrature weight of each node (cell volume or lumped vertex area).
    pub fn quadrature_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn ricci_form(&self) -> RicciForm {
        self.ricci
    }

    pub fn torus(&self) -> Option<&TorusGrid> {
        match &self.backend {
            Backend::Torus(g) => Some(g),
            Backend::Sphere(_) => None,
        }
    }

    pub fn sphere(&self) -> Option<&SphereMesh> {
        match &self.backend {
            Backend::Sphere(m) => Some(m),
            Backend::Torus(_) => None,
        }
    }

    pub fn torus_side_lengths(&self) -> Option<&[f64]> {
        self.torus().map(TorusGrid::sides)
    }

    pub fn torus_resolution(&self) -> Option<&[usize]> {
        self.torus().map(TorusGrid::resolution)
    }

    pub fn sphere_subdivision(&self) -> Option<u32> {
        self.sphere().map(SphereMesh::subdivision)
    }

    /// Mesh size `h`: the largest grid spacing on the torus, the longest edge on
    /// the sphere.
    pub fn mesh_size(&self) -> f64 {
        match &self.backend {
            Backend::Torus(g) => g.spacing().iter().copied().fold(0.0, f64::max),
            Backend::Sphere(m) => m.max_edge(),
        }
    }

    /// Embedding coordinates of a node: torus coordinates in `[0, L)` padded with
    /// zeros, or the unit vector on the sphere.
    pub fn node_position(&self, node: usize) -> [f64; 3] {
        match &self.backend {
            Backend::Torus(g) => g.coordinates(node),
            Backend::Sphere(m) => m.positions()[node],
        }
    }

    pub(crate) fn couplings(&self) -> &Couplings {
        &self.couplings
    }

    pub(crate) fn check_node(&self, node: usize) -> Result<()> {
        if node < self.node_count() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange { node, node_count: self.node_count() })
        }
    }
}

/// One real value per node of a manifold.
#[derive(Clone)]
pub struct ScalarField {
    values: Vec<f64>,
    manifold: Arc<Manifold>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("manifold", &self.manifold)
            .field("len", &self.values.len())
            .finish()
    }
}

impl ScalarField {
    pub fn new(manifold: &Arc<Manifold>, values: Vec<f64>) -> Result<Self> {
        if values.len() != manifold.node_count() {
            return Err(Error::FieldLength { expected: manifold.node_count(), found: values.len() });
        }
        Ok(ScalarField { values, manifold: Arc::clone(manifold) })
    }

    pub fn constant(manifold: &Arc<Manifold>, value: f64) -> Self {
        ScalarField { values: alloc::vec![value; manifold.node_count()], manifold: Arc::clone(manifold) }
    }

    /// Samples `f(node, position)` at every node.
    pub fn from_fn(manifold: &Arc<Manifold>, mut f: impl FnMut(usize, [f64; 3]) -> f64) -> Self {
        let values = (0..manifold.node_count()).map(|i| f(i, manifold.node_position(i))).collect();
        ScalarField { values, manifold: Arc::clone(manifold) }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn manifold(&self) -> &Arc<Manifold> {
        &self.manifold
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination with a field on the same manifold.
    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        debug_assert_eq!(self.values.len(), other.values.len());
        self.with_values(self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> ScalarField {
        debug_assert_eq!(values.len(), self.values.len());
        ScalarField { values, manifold: Arc::clone(&self.manifold) }
    }

    /// Largest value and the lowest node index attaining it.
    pub fn max_with_node(&self) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, &v) in self.values.iter().enumerate() {
            if v > best.0 {
                best = (v, i);
            }
        }
        best
    }

    /// Smallest value and the lowest node index attaining it.
    pub fn min_with_node(&self) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for (i, &v) in self.values.iter().enumerate() {
            if v < best.0 {
                best = (v, i);
            }
        }
        best
    }

    pub fn max(&self) -> f64 {
        self.max_with_node().0
    }

    pub fn min(&self) -> f64 {
        self.min_with_node().0
    }

    /// `max |v|` over nodes.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Discrete Laplace–Beltrami operator.
pub fn laplacian(field: &ScalarField) -> ScalarField {
    let m = field.manifold();
    let mut out = alloc::vec![0.0; field.len()];
    m.couplings().apply(field.values(), &mut out);
    for (o, &w) in out.iter_mut().zip(m.quadrature_weights()) {
        *o /= w;
    }
    field.with_values(out)
}

/// Pointwise `|∇f|^2`.
pub fn grad_norm_sq(field: &ScalarField) -> ScalarField {
    let m = field.manifold();
    match &m.backend {
        Backend::Torus(g) => {
            field.with_values(g.gradient(field.values()).iter().map(|v| v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).collect())
        }
        Backend::Sphere(mesh) => {
            let mut acc = mesh.accumulate_grad_norm_sq(field.values());
            for (a, w) in acc.iter_mut().zip(mesh.barycentric_areas()) {
                *a /= w;
            }
            field.with_values(acc)
        }
    }
}

/// Pointwise `∇a · ∇b` from central differences (torus only).
pub fn grad_dot(a: &ScalarField, b: &ScalarField) -> Result<ScalarField> {
    let grid = a.manifold().torus().ok_or(Error::UnsupportedBackend("grad_dot"))?;
    let ga = grid.gradient(a.values());
    let gb = grid.gradient(b.values());
    Ok(a.with_values(ga.iter().zip(&gb).map(|(x, y)| x[0] * y[0] + x[1] * y[1] + x[2] * y[2]).collect()))
}

/// Pointwise `|∇∇f − (λ / 2t) g|^2` (squared Frobenius norm), torus only.
pub fn hessian_penalty(field: &ScalarField, lambda: f64, t: f64) -> Result<ScalarField> {
    let grid = field.manifold().torus().ok_or(Error::UnsupportedBackend("hessian_penalty"))?;
    if !(t > 0.0) {
        return Err(Error::InvalidParameter("hessian_penalty needs t > 0"));
    }
    let shift = lambda / (2.0 * t);
    let dim = grid.dimension();
    let values = (0..field.len())
        .map(|node| {
            let hess = grid.hessian_at(field.values(), node);
            let mut sum = 0.0;
            for a in 0..dim {
                for b in 0..dim {
                    let entry = if a == b { hess[a][b] - shift } else { hess[a][b] };
                    sum += entry * entry;
                }
            }
            sum
        })
        .collect();
    Ok(field.with_values(values))
}

/// Pointwise `Ric(∇f, ∇f)` for the manifold's declared Ricci form.
pub fn ricci_quadratic(field: &ScalarField) -> ScalarField {
    match field.manifold().ricci_form() {
        RicciForm::Zero => field.with_values(alloc::vec![0.0; field.len()]),
        RicciForm::UnitSphereMetric => grad_norm_sq(field),
    }
}

/// Quadrature `∫ f dV`, summed in node order.
pub fn integrate(field: &ScalarField) -> f64 {
    field.values().iter().zip(field.manifold().quadrature_weights()).map(|(v, w)| v * w).sum()
}

/// Geodesic distance between two nodes: shortest periodic displacement on the
/// torus, great-circle distance on the sphere.
pub fn geodesic_distance(m: &Manifold, x1: usize, x2: usize) -> Result<f64> {
    m.check_node(x1)?;
    m.check_node(x2)?;
    Ok(match &m.backend {
        Backend::Torus(g) => {
            let d = g.displacement(x1, x2);
            sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
        }
        Backend::Sphere(mesh) => {
            let (p, q) = (mesh.positions()[x1], mesh.positions()[x2]);
            let cross = [p[1] * q[2] - p[2] * q[1], p[2] * q[0] - p[0] * q[2], p[0] * q[1] - p[1] * q[0]];
            let sin = sqrt(cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]);
            atan2(sin, p[0] * q[0] + p[1] * q[1] + p[2] * q[2])
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use std::vec;

    fn unit_square(res: usize) -> Arc<Manifold> {
        build_torus(2, &[1.0, 1.0], &[res, res]).unwrap()
    }

    #[test]
    fn torus_weights_are_cell_volumes() {
        let m = unit_square(64);
        assert_eq!(m.node_count(), 4096);
        assert!(m.quadrature_weights().iter().all(|&w| w == 1.0 / 4096.0));
        assert_eq!(m.total_volume(), 1.0);
        assert_eq!(m.ricci_form(), RicciForm::Zero);

        let m = build_torus(1, &[2.0 * PI], &[128]).unwrap();
        assert_eq!(m.node_count(), 128);
        assert!(m.quadrature_weights().iter().all(|&w| (w - 2.0 * PI / 128.0).abs() < 1e-15));
    }

    #[test]
    fn torus_rejects_bad_shapes() {
        assert_eq!(build_torus(4, &[1.0; 4], &[8; 4]).unwrap_err(), Error::DimensionOutOfRange(4));
        assert_eq!(build_torus(0, &[], &[]).unwrap_err(), Error::DimensionOutOfRange(0));
        assert!(matches!(build_torus(2, &[1.0], &[8, 8]), Err(Error::ShapeMismatch { .. })));
        assert!(matches!(build_torus(1, &[1.0], &[9]), Err(Error::InvalidResolution { axis: 0, resolution: 9 })));
        assert!(matches!(build_torus(2, &[1.0, 1.0], &[8, 6]), Err(Error::InvalidResolution { axis: 1, .. })));
        assert!(matches!(build_torus(1, &[-1.0], &[8]), Err(Error::InvalidSideLength { .. })));
        assert!(matches!(build_torus(1, &[f64::NAN], &[8]), Err(Error::InvalidSideLength { .. })));
    }

    #[test]
    fn sphere_area_and_errors() {
        let m = build_sphere(4).unwrap();
        assert_eq!(m.dimension(), 2);
        assert_eq!(m.ricci_form(), RicciForm::UnitSphereMetric);
        assert!(((m.total_volume() - 4.0 * PI) / (4.0 * PI)).abs() < 0.01);
        assert!(m.quadrature_weights().iter().all(|&w| w > 0.0));
        let mesh_area: f64 = m.sphere().unwrap().triangle_areas().iter().sum();
        assert!((m.total_volume() - mesh_area).abs() < 1e-12);

        let errors: Vec<f64> = (3..=5).map(|s| (4.0 * PI - build_sphere(s).unwrap().total_volume()).abs()).collect();
        assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");

        assert_eq!(build_sphere(1).unwrap_err(), Error::InvalidSubdivision(1));
    }

    #[test]
    fn laplacian_kills_constants_exactly() {
        for m in [unit_square(16), build_sphere(3).unwrap()] {
            let lap = laplacian(&ScalarField::constant(&m, 3.7));
            assert!(lap.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn laplacian_of_cosine_mode() {
        let m = unit_square(64);
        let h = 1.0 / 64.0;
        let f = ScalarField::from_fn(&m, |_, x| (2.0 * PI * x[0]).cos());
        let lap = laplacian(&f);
        let bound = 1.01 * (2.0 * PI).powi(4) * h * h / 12.0;
        for (l, v) in lap.values().iter().zip(f.values()) {
            assert!((l + 4.0 * PI * PI * v).abs() <= bound);
        }
    }

    #[test]
    fn sphere_laplacian_of_z() {
        let m = build_sphere(4).unwrap();
        let z = ScalarField::from_fn(&m, |_, p| p[2]);
        let lap = laplacian(&z);
        let err = lap.zip_with(&z, |l, v| l + 2.0 * v);
        assert!(err.max_abs() < 1e-2, "{}", err.max_abs());
        let l2 = (integrate(&err.map(|e| e * e)) / m.total_volume()).sqrt();
        assert!(l2 < 3e-3, "{l2}");
    }

    #[test]
    fn grad_norm_of_sine_mode() {
        let m = unit_square(64);
        let h = 1.0 / 64.0;
        let f = ScalarField::from_fn(&m, |_, x| (2.0 * PI * x[0]).sin());
        let g2 = grad_norm_sq(&f);
        let damp = (2.0 * PI * h).sin() / (2.0 * PI * h);
        for node in 0..m.node_count() {
            let c = (2.0 * PI * m.node_position(node)[0]).cos();
            let exact = 4.0 * PI * PI * c * c;
            assert!((g2.values()[node] - exact * damp * damp).abs() < 1e-9);
            assert!((g2.values()[node] - exact).abs() <= 4.0 * PI * PI * (1.0 - damp * damp) + 1e-9);
        }
        for m in [unit_square(8), build_sphere(2).unwrap()] {
            assert!(grad_norm_sq(&ScalarField::constant(&m, 2.0)).values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn hessian_penalty_of_constants() {
        let m = unit_square(16);
        let c = ScalarField::constant(&m, 5.0);
        let p = hessian_penalty(&c, 2.0, 1.0).unwrap();
        assert!(p.values().iter().all(|&v| v == 2.0));
        let p = hessian_penalty(&c, 0.0, 1.0).unwrap();
        assert!(p.values().iter().all(|&v| v == 0.0));
        assert!(hessian_penalty(&c, 1.0, 0.0).is_err());

        let s = build_sphere(2).unwrap();
        assert_eq!(
            hessian_penalty(&ScalarField::constant(&s, 1.0), 2.0, 1.0).unwrap_err(),
            Error::UnsupportedBackend("hessian_penalty")
        );
    }

    #[test]
    fn ricci_form_per_backend() {
        let t = unit_square(16);
        let f = ScalarField::from_fn(&t, |_, x| (2.0 * PI * x[0]).sin() + x[1]);
        assert!(ricci_quadratic(&f).values().iter().all(|&v| v == 0.0));

        let s = build_sphere(3).unwrap();
        let z = ScalarField::from_fn(&s, |_, p| p[2]);
        assert_eq!(ricci_quadratic(&z).values(), grad_norm_sq(&z).values());
        assert!(ricci_quadratic(&ScalarField::constant(&s, 1.0)).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn integrate_examples() {
        assert_eq!(integrate(&ScalarField::constant(&unit_square(64), 1.0)), 1.0);
        let s = build_sphere(4).unwrap();
        assert!((integrate(&ScalarField::constant(&s, 1.0)) - 4.0 * PI).abs() < 0.01 * 4.0 * PI);
        let m = unit_square(64);
        let f = ScalarField::from_fn(&m, |_, x| (2.0 * PI * x[0]).cos());
        assert!(integrate(&f).abs() < 1e-15);
    }

    #[test]
    fn geodesic_examples() {
        let m = unit_square(10);
        let g = m.torus().unwrap();
        let origin = g.node_at([0, 0, 0]);
        assert_eq!(geodesic_distance(&m, origin, g.node_at([5, 0, 0])).unwrap(), 0.5);
        assert!((geodesic_distance(&m, origin, g.node_at([9, 0, 0])).unwrap() - 0.1).abs() < 1e-15);
        assert!((geodesic_distance(&m, g.node_at([1, 9, 0]), g.node_at([9, 1, 0])).unwrap() - 0.2 * 2f64.sqrt()).abs() < 1e-15);
        assert!(geodesic_distance(&m, 0, 100).is_err());

        let s = build_sphere(2).unwrap();
        assert!((geodesic_distance(&s, 0, 1).unwrap() - PI).abs() < 1e-15);
        assert_eq!(geodesic_distance(&s, 7, 7).unwrap(), 0.0);
    }

    #[test]
    fn field_length_is_checked() {
        let m = unit_square(8);
        assert_eq!(ScalarField::new(&m, vec![0.0; 3]).unwrap_err(), Error::FieldLength { expected: 64, found: 3 });
    }

    #[test]
    fn argmax_ties_resolve_to_lowest_node() {
        let m = unit_square(8);
        let mut values = vec![0.0; 64];
        values[10] = 1.0;
        values[40] = 1.0;
        let f = ScalarField::new(&m, values).unwrap();
        assert_eq!(f.max_with_node(), (1.0, 10));
        assert_eq!(f.min_with_node(), (0.0, 0));
    }
}
