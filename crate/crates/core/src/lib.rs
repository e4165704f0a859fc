//! Positive heat flows on discretized closed manifolds with nonnegative Ricci
//! curvature, together with the pointwise Harnack quantities, the entropy
//! functionals `F` and `W`, and the integrated Harnack bound built from them.
//!
//! Two manifold families are supported: flat tori `T^n` (`n <= 3`) on uniform
//! periodic grids and the round unit sphere `S^2` on icosphere meshes. Everything
//! in this crate is a pure function of its inputs and only needs `alloc`; file
//! formats, configuration and the command-line driver live in the `heatlab`
//! companion crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

mod error;
mod math;

pub mod entropy;
pub mod geometry;
pub mod harnack;
pub mod heatflow;
pub mod initial;
pub mod paramspace;
pub mod pathwise;

pub use error::{Error, Result};
pub use geometry::{Manifold, ManifoldKind, RicciForm, ScalarField};
pub use heatflow::{Direction, FlowState, Trajectory};
