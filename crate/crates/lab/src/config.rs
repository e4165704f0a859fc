//! Experiment configuration files.
//!
//! A config is one TOML document; see the crate README for the full grammar.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use heatlab_core::geometry::{build_sphere, build_torus};
use heatlab_core::initial::{InitialData, TrigMode};
use heatlab_core::paramspace::ScanGrid;
use heatlab_core::{Direction, Manifold};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ManifoldSpec {
    Torus { n: usize, sides: Vec<f64>, resolution: Vec<usize> },
    Sphere { subdivision: u32 },
}

impl ManifoldSpec {
    pub fn build(&self) -> Result<Arc<Manifold>> {
        let built = match self {
            ManifoldSpec::Torus { n, sides, resolution } => build_torus(*n, sides, resolution),
            ManifoldSpec::Sphere { subdivision } => build_sphere(*subdivision),
        };
        built.map_err(|e| LabError::Config(format!("manifold: {e}")))
    }

    pub fn is_torus(&self) -> bool {
        matches!(self, ManifoldSpec::Torus { .. })
    }

    /// The same torus with every axis resolution multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Option<ManifoldSpec> {
        match self {
            ManifoldSpec::Torus { n, sides, resolution } => Some(ManifoldSpec::Torus {
                n: *n,
                sides: sides.clone(),
                resolution: resolution.iter().map(|r| r * factor).collect(),
            }),
            ManifoldSpec::Sphere { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub wavevector: Vec<i32>,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Constant { value: f64 },
    TrigPolynomial { floor: f64, modes: Vec<ModeSpec> },
    SeededRandomSmooth { seed: u64, mode_cutoff: u32, amplitude: f64, floor: f64 },
}

impl InitialSpec {
    pub fn to_core(&self) -> InitialData {
        match self {
            InitialSpec::Constant { value } => InitialData::Constant(*value),
            InitialSpec::TrigPolynomial { floor, modes } => InitialData::TrigPolynomial {
                floor: *floor,
                modes: modes
                    .iter()
                    .map(|m| TrigMode { wavevector: m.wavevector.clone(), amplitude: m.amplitude, phase: m.phase })
                    .collect(),
            },
            InitialSpec::SeededRandomSmooth { seed, mode_cutoff, amplitude, floor } => {
                InitialData::SeededRandomSmooth {
                    seed: *seed,
                    mode_cutoff: *mode_cutoff,
                    amplitude: *amplitude,
                    floor: *floor,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowDirection {
    Forward,
    Backward,
}

impl From<FlowDirection> for Direction {
    fn from(d: FlowDirection) -> Self {
        match d {
            FlowDirection::Forward => Direction::Forward,
            FlowDirection::Backward => Direction::Backward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    HarnackSigns,
    EvolutionResidual,
    Entropy,
    Pathwise,
    Paramscan,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::HarnackSigns => "harnack_signs",
            Suite::EvolutionResidual => "evolution_residual",
            Suite::Entropy => "entropy",
            Suite::Pathwise => "pathwise",
            Suite::Paramscan => "paramscan",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// `C` in `tol_disc = C (h² + dt)`. Required on the sphere; tori calibrate it.
    #[serde(default)]
    pub tol_disc_constant: Option<f64>,
    /// Constant `q` of the consistency gates between two discretizations of one
    /// quantity: Stokes gaps `<= q h²`, dissipation mismatch `<= q (h² + dt²)`.
    pub quadrature_tol: f64,
    #[serde(default = "default_pair_count")]
    pub pair_count: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_pair_count() -> usize {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub step: f64,
    #[serde(default = "default_alpha")]
    pub alpha: (f64, f64),
    #[serde(default = "default_beta")]
    pub beta: (f64, f64),
    #[serde(default = "default_b")]
    pub b: (f64, f64),
}

fn default_alpha() -> (f64, f64) {
    ScanGrid::standard(1.0).alpha
}

fn default_beta() -> (f64, f64) {
    ScanGrid::standard(1.0).beta
}

fn default_b() -> (f64, f64) {
    ScanGrid::standard(1.0).b
}

impl Default for ScanSpec {
    fn default() -> Self {
        let g = ScanGrid::standard(0.05);
        ScanSpec { step: g.step, alpha: g.alpha, beta: g.beta, b: g.b }
    }
}

impl ScanSpec {
    pub fn grid(&self) -> ScanGrid {
        ScanGrid { alpha: self.alpha, beta: self.beta, b: self.b, step: self.step }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub direction: FlowDirection,
    pub suites: BTreeSet<Suite>,
    pub output_dir: PathBuf,
    /// Also write every state to `snapshots.csv`.
    #[serde(default)]
    pub snapshots: bool,
    pub manifold: ManifoldSpec,
    pub initial_data: InitialSpec,
    pub tolerances: Tolerances,
    #[serde(default)]
    pub paramscan: Option<ScanSpec>,
}

impl RunConfig {
    /// Parses and validates a TOML document.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| LabError::ReadConfig { path: path.to_path_buf(), source })?;
        Self::parse(&text).map_err(|e| match e {
            LabError::Config(msg) => LabError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LabError::Config(msg));
        for (name, value) in [("t0", self.t0), ("t_end", self.t_end), ("dt", self.dt)] {
            if !(value > 0.0 && value.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {value}"));
            }
        }
        if !(self.t_end > self.t0) {
            return bad(format!("t_end ({}) must exceed t0 ({})", self.t_end, self.t0));
        }
        let span = self.t_end - self.t0;
        let steps = (span / self.dt).round();
        if steps < 2.0 || (steps * self.dt - span).abs() > 1e-9 * span {
            return bad(format!("dt ({}) must divide t_end - t0 ({span}) into at least 2 steps", self.dt));
        }
        if self.suites.is_empty() {
            return bad("suites must name at least one suite".into());
        }
        if !self.manifold.is_torus() {
            if self.suites.contains(&Suite::EvolutionResidual) {
                return bad("suites: evolution_residual needs a torus manifold".into());
            }
            match self.tolerances.tol_disc_constant {
                Some(c) if c > 0.0 && c.is_finite() => {}
                _ => return bad("tolerances.tol_disc_constant: a positive value is required on the sphere".into()),
            }
        } else if let Some(c) = self.tolerances.tol_disc_constant {
            return bad(format!("tolerances.tol_disc_constant ({c}) is calibrated on tori and must be omitted"));
        }
        if self.direction == FlowDirection::Backward && self.suites.contains(&Suite::Pathwise) {
            return bad("suites: pathwise needs a forward run".into());
        }
        if !(self.tolerances.quadrature_tol > 0.0 && self.tolerances.quadrature_tol.is_finite()) {
            return bad("tolerances.quadrature_tol must be positive".into());
        }
        if self.suites.contains(&Suite::Pathwise) && self.tolerances.pair_count == 0 {
            return bad("tolerances.pair_count must be positive".into());
        }
        if let Some(scan) = &self.paramscan {
            scan.grid().point_count().map_err(|e| LabError::Config(format!("paramscan: {e}")))?;
        }
        let m = self.manifold.build()?;
        let data = self.initial_data.to_core();
        data.closed_form(&m, self.t0).map_err(|e| LabError::Config(format!("initial_data: {e}")))?;
        Ok(())
    }

    /// The scan grid, defaulting to the standard ranges at step 0.05.
    pub fn scan_spec(&self) -> ScanSpec {
        self.paramscan.unwrap_or_default()
    }

    /// Replaces the pair-sampling seed and, for random data, the data seed.
    pub fn override_seed(&mut self, seed: u64) {
        self.tolerances.seed = seed;
        if let InitialSpec::SeededRandomSmooth { seed: s, .. } = &mut self.initial_data {
            *s = seed;
        }
    }

    pub fn has(&self, suite: Suite) -> bool {
        self.suites.contains(&suite)
    }
}
