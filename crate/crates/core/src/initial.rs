//! Initial data with closed-form heat evolution.
//!
//! Every admissible initial datum is a finite eigenfunction expansion over a
//! positive floor, so its exact heat flow is known: torus Fourier modes decay as
//! `exp(-|κ|² t)`, sphere harmonics of degree `l` as `exp(-l(l+1) t)`. The
//! closed forms serve as oracles for the solver and for tolerance calibration.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Manifold, ManifoldKind, ScalarField};
use crate::math::{cos, exp, ln, sin, PI};
use crate::{Error, Result};

/// One Fourier mode `a cos(κ·x + φ)` with `κ_i = 2π k_i / L_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigMode {
    pub wavevector: Vec<i32>,
    pub amplitude: f64,
    pub phase: f64,
}

/// Exact heat flow of a trigonometric polynomial on a flat torus:
/// `f(x, t) = offset + Σ a e^{-|κ|²(t - origin)} cos(κ·x + φ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries {
    pub offset: f64,
    pub modes: Vec<TrigMode>,
    /// Time at which the listed amplitudes hold.
    pub origin: f64,
}

/// Exact values and derivatives of a closed-form field at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: [f64; 3],
    pub laplacian: f64,
}

impl TrigSeries {
    fn wavenumbers(&self, mode: &TrigMode, sides: &[f64]) -> [f64; 3] {
        let mut kappa = [0.0; 3];
        for (a, &l) in sides.iter().enumerate() {
            kappa[a] = 2.0 * PI * f64::from(mode.wavevector[a]) / l;
        }
        kappa
    }

    /// Value, gradient and Laplacian at `x` and time `t`.
    pub fn jet(&self, sides: &[f64], x: [f64; 3], t: f64) -> Jet {
        let mut jet = Jet { value: self.offset, gradient: [0.0; 3], laplacian: 0.0 };
        for mode in &self.modes {
            let kappa = self.wavenumbers(mode, sides);
            let k2 = kappa.iter().map(|k| k * k).sum::<f64>();
            let amp = mode.amplitude * exp(-k2 * (t - self.origin));
            let arg = kappa[0] * x[0] + kappa[1] * x[1] + kappa[2] * x[2] + mode.phase;
            let (s, c) = (sin(arg), cos(arg));
            jet.value += amp * c;
            for a in 0..3 {
                jet.gradient[a] -= amp * s * kappa[a];
            }
            jet.laplacian -= amp * k2 * c;
        }
        jet
    }

    /// `H = 2Δu − |∇u|² − 2n/t` of the exact solution, with `u = −ln f`.
    pub fn exact_quantity_h(&self, m: &Arc<Manifold>, t: f64) -> Result<ScalarField> {
        let sides = m.torus_side_lengths().ok_or(Error::UnsupportedBackend("exact_quantity_h"))?;
        let n = m.dimension() as f64;
        Ok(ScalarField::from_fn(m, |_, x| {
            let j = self.jet(sides, x, t);
            let g2 = j.gradient.iter().map(|g| g * g).sum::<f64>() / (j.value * j.value);
            let lap_u = -j.laplacian / j.value + g2;
            2.0 * lap_u - g2 - 2.0 * n / t
        }))
    }
}

/// Real (unnormalized) spherical harmonics of degree 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Harmonic {
    X,
    Y,
    Z,
    Xy,
    Yz,
    Zx,
    XxMinusYy,
    ThreeZzMinusOne,
}

impl Harmonic {
    pub const ALL: [Harmonic; 8] = [
        Harmonic::X,
        Harmonic::Y,
        Harmonic::Z,
        Harmonic::Xy,
        Harmonic::Yz,
        Harmonic::Zx,
        Harmonic::XxMinusYy,
        Harmonic::ThreeZzMinusOne,
    ];

    pub fn degree(self) -> u32 {
        match self {
            Harmonic::X | Harmonic::Y | Harmonic::Z => 1,
            _ => 2,
        }
    }

    /// `l(l+1)`, minus the Laplace–Beltrami eigenvalue.
    pub fn eigenvalue(self) -> f64 {
        let l = f64::from(self.degree());
        l * (l + 1.0)
    }

    /// `sup |Y|` over the unit sphere.
    pub fn sup_norm(self) -> f64 {
        match self {
            Harmonic::Xy | Harmonic::Yz | Harmonic::Zx => 0.5,
            Harmonic::ThreeZzMinusOne => 2.0,
            _ => 1.0,
        }
    }

    pub fn eval(self, p: [f64; 3]) -> f64 {
        let [x, y, z] = p;
        match self {
            Harmonic::X => x,
            Harmonic::Y => y,
            Harmonic::Z => z,
            Harmonic::Xy => x * y,
            Harmonic::Yz => y * z,
            Harmonic::Zx => z * x,
            Harmonic::XxMinusYy => x * x - y * y,
            Harmonic::ThreeZzMinusOne => 3.0 * z * z - 1.0,
        }
    }
}

/// Exact heat flow of a harmonic polynomial on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSeries {
    pub offset: f64,
    pub terms: Vec<(Harmonic, f64)>,
    pub origin: f64,
}

impl HarmonicSeries {
    pub fn value(&self, p: [f64; 3], t: f64) -> f64 {
        self.terms
            .iter()
            .fold(self.offset, |acc, &(y, c)| acc + c * exp(-y.eigenvalue() * (t - self.origin)) * y.eval(p))
    }
}

/// A closed-form solution of the heat equation on a supported manifold.
#[derive(Debug, Clone, PartialEq)]
pub enum ClosedForm {
    Trig(TrigSeries),
    Harmonic(HarmonicSeries),
}

impl ClosedForm {
    /// Samples the exact solution at time `t` on the nodes of `m`.
    pub fn sample(&self, m: &Arc<Manifold>, t: f64) -> Result<ScalarField> {
        match (self, m.kind()) {
            (ClosedForm::Trig(series), ManifoldKind::FlatTorus) => {
                let sides = m.torus_side_lengths().unwrap_or(&[]);
                if series.modes.iter().any(|md| md.wavevector.len() != sides.len()) {
                    return Err(Error::UnsupportedInitialData("wavevector length differs from torus dimension"));
                }
                Ok(ScalarField::from_fn(m, |_, x| series.jet(sides, x, t).value))
            }
            (ClosedForm::Harmonic(series), ManifoldKind::RoundSphere) => {
                Ok(ScalarField::from_fn(m, |_, p| series.value(p, t)))
            }
            _ => Err(Error::UnsupportedInitialData("closed form does not match the manifold")),
        }
    }
}

/// Initial data specifications; each guarantees `min f >= floor > 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// `f ≡ c`.
    Constant(f64),
    /// `floor + Σ|a| + Σ a cos(κ·x + φ)` posed at `t0` (torus only).
    TrigPolynomial { floor: f64, modes: Vec<TrigMode> },
    /// Seeded random eigenfunction expansion `floor + amplitude (1 + s)` with
    /// `sup |s| <= 1`, posed at `t = 0` and evolved exactly to `t0`. Torus modes
    /// have `max |k_i| <= mode_cutoff`; sphere harmonics have degree `<= mode_cutoff`
    /// (at most 2).
    SeededRandomSmooth { seed: u64, mode_cutoff: u32, amplitude: f64, floor: f64 },
}

impl InitialData {
    /// Resolves to an exact solution of the heat equation on `m`.
    pub fn closed_form(&self, m: &Manifold, t0: f64) -> Result<ClosedForm> {
        let sphere = m.kind() == ManifoldKind::RoundSphere;
        match self {
            InitialData::Constant(c) => {
                if !(*c > 0.0) {
                    return Err(Error::InvalidParameter("constant initial data must be positive"));
                }
                Ok(if sphere {
                    ClosedForm::Harmonic(HarmonicSeries { offset: *c, terms: Vec::new(), origin: t0 })
                } else {
                    ClosedForm::Trig(TrigSeries { offset: *c, modes: Vec::new(), origin: t0 })
                })
            }
            InitialData::TrigPolynomial { floor, modes } => {
                if sphere {
                    return Err(Error::UnsupportedInitialData("trigonometric polynomials need a torus"));
                }
                if !(*floor > 0.0) {
                    return Err(Error::InvalidParameter("floor must be positive"));
                }
                if modes.iter().any(|md| md.wavevector.len() != m.dimension()) {
                    return Err(Error::UnsupportedInitialData("wavevector length differs from torus dimension"));
                }
                let offset = floor + modes.iter().map(|md| md.amplitude.abs()).sum::<f64>();
                Ok(ClosedForm::Trig(TrigSeries { offset, modes: modes.clone(), origin: t0 }))
            }
            InitialData::SeededRandomSmooth { seed, mode_cutoff, amplitude, floor } => {
                if !(*floor > 0.0) || !(*amplitude >= 0.0) {
                    return Err(Error::InvalidParameter("random data needs floor > 0 and amplitude >= 0"));
                }
                if *mode_cutoff == 0 {
                    return Err(Error::InvalidParameter("mode cutoff must be at least 1"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let offset = floor + amplitude;
                if sphere {
                    if *mode_cutoff > 2 {
                        return Err(Error::UnsupportedInitialData("sphere harmonics are limited to degree 2"));
                    }
                    let mut terms: Vec<(Harmonic, f64)> = Harmonic::ALL
                        .iter()
                        .filter(|y| y.degree() <= *mode_cutoff)
                        .map(|&y| (y, rng.gen_range(-1.0..1.0)))
                        .collect();
                    let norm: f64 = terms.iter().map(|(y, c)| c.abs() * y.sup_norm()).sum();
                    for (_, c) in terms.iter_mut() {
                        *c *= amplitude / norm;
                    }
                    Ok(ClosedForm::Harmonic(HarmonicSeries { offset, terms, origin: 0.0 }))
                } else {
                    let mut modes: Vec<TrigMode> = half_lattice(m.dimension(), *mode_cutoff as i32)
                        .into_iter()
                        .map(|k| TrigMode {
                            wavevector: k,
                            amplitude: rng.gen_range(-1.0..1.0),
                            phase: rng.gen_range(0.0..2.0 * PI),
                        })
                        .collect();
                    let norm: f64 = modes.iter().map(|md| md.amplitude.abs()).sum();
                    for md in modes.iter_mut() {
                        md.amplitude *= amplitude / norm;
                    }
                    Ok(ClosedForm::Trig(TrigSeries { offset, modes, origin: 0.0 }))
                }
            }
        }
    }

    /// Samples the data at `t0` on the nodes of `m`.
    pub fn sample(&self, m: &Arc<Manifold>, t0: f64) -> Result<ScalarField> {
        self.closed_form(m, t0)?.sample(m, t0)
    }
}

/// Nonzero integer vectors with `max |k_i| <= cutoff`, one representative of each
/// `±k` pair (first nonzero component positive), in lexicographic order.
fn half_lattice(dim: usize, cutoff: i32) -> Vec<Vec<i32>> {
    let side = (2 * cutoff + 1) as usize;
    let total = side.pow(dim as u32);
    let mut out = Vec::new();
    for flat in 0..total {
        let mut rest = flat;
        let mut k = Vec::with_capacity(dim);
        for _ in 0..dim {
            k.push((rest % side) as i32 - cutoff);
            rest /= side;
        }
        k.reverse();
        if let Some(&first) = k.iter().find(|&&c| c != 0) {
            if first > 0 {
                out.push(k);
            }
        }
    }
    out
}

/// `ln f` for the torus heat kernel started from a point mass at `centre` at
/// time 0, evaluated at time `t` with the nearest `3^n` periodic images
/// (log-sum-exp, so far-field values do not underflow).
pub fn gaussian_log_density(m: &Arc<Manifold>, centre: usize, t: f64) -> Result<ScalarField> {
    let grid = m.torus().ok_or(Error::UnsupportedBackend("gaussian_log_density"))?;
    m.check_node(centre)?;
    let n = grid.dimension();
    let sides = grid.sides().to_vec();
    let norm = -0.5 * n as f64 * ln(4.0 * PI * t);
    Ok(ScalarField::from_fn(m, |node, _| {
        let d = grid.displacement(centre, node);
        let mut exponents = Vec::with_capacity(27);
        for image in 0..3usize.pow(n as u32) {
            let mut rest = image;
            let mut r2 = 0.0;
            for a in 0..n {
                let shift = (rest % 3) as f64 - 1.0;
                rest /= 3;
                let x = d[a] + shift * sides[a];
                r2 += x * x;
            }
            exponents.push(-r2 / (4.0 * t));
        }
        let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = exponents.iter().map(|e| exp(e - top)).sum();
        norm + top + ln(sum)
    }))
}

/// `ln(1 + ε)` where `ε` is the ratio of the periodic-image contributions to the
/// plane Gaussian, maximized over nodes within `radius` of `centre`.
pub fn gaussian_image_log_excess(m: &Arc<Manifold>, centre: usize, t: f64, radius: f64) -> Result<f64> {
    let grid = m.torus().ok_or(Error::UnsupportedBackend("gaussian_image_log_excess"))?;
    let n = grid.dimension();
    let log_density = gaussian_log_density(m, centre, t)?;
    let norm = -0.5 * n as f64 * ln(4.0 * PI * t);
    let mut worst: f64 = 0.0;
    for node in 0..m.node_count() {
        let d = grid.displacement(centre, node);
        let r2: f64 = d.iter().map(|x| x * x).sum();
        if r2 <= radius * radius {
            let plane = norm - r2 / (4.0 * t);
            worst = worst.max(log_density.values()[node] - plane);
        }
    }
    Ok(worst)
}
