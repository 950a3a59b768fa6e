//! Sobolev `H2(ds)` gradient flow for the modified elastic energy
//! `int k^2 ds + lambda^2 L` of closed curves in `R^n`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curve;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod flow;
pub mod kernel;
pub mod reparam;
pub mod spectral;
pub mod weaksolve;

pub use curve::{
    fixture_family, geometry, make_curve, ClosedCurve, CurveGeometry, Fixture, Shape, VectorField,
};
pub use energy::{energy, EnergyParams};
pub use error::{Error, Result};
pub use flow::{h2_gradient, run_flow, Backend, FlowConfig, Integrator, Terminal, Trajectory};
