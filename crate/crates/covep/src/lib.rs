//! Covariant Euler-Poincare reduction on trivialized principal bundles
//! P = M x G with matrix structure groups.
//!
//! The crate discretizes the base manifold on a uniform lattice and builds
//! the reduced calculus on top of it: right logarithmic derivatives of
//! group-valued fields, curvature, covariant derivatives on the (co)adjoint
//! bundle, the covariant divergence, the Euler-Poincare residual and its
//! independent energy-gradient oracle, plus desk-scale solvers (rigid body
//! RK4, Riemannian gradient descent for harmonic maps) and a batch CLI.

pub mod cli;
pub mod config;
pub mod error;
pub mod fields;
pub mod fourier;
pub mod grid;
pub mod io;
pub mod lie;
pub mod reduction;
pub mod solvers;

pub use error::{Error, Result};
pub use grid::{Boundary, MetricFamily, MetricGrid};
pub use lie::{pairing, GroupElement, GroupModel, GroupName};
