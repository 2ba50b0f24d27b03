//! Finite-element realization of existence results for double phase
//! problems with nonlinear boundary conditions.
//!
//! The crate computes first Robin and Steklov eigenpairs of the discrete
//! `p`-Laplacian, evaluates the explicit parameter conditions under which
//! solutions exist, and produces those solutions: constant-sign minimizers
//! of truncated energies and a Picard–Galerkin iteration for problems with
//! convection. Every checkable inequality is returned as a certificate.
//!
//! Start with the runnable programs in `examples/`.

// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod convection;
pub mod descent;
pub mod eigen;
pub mod error;
pub mod fem;
pub mod io;
pub mod mesh;
pub mod musielak;
pub mod operators;
pub mod quadrature;
pub mod runner;
pub mod suite;
pub mod tolerances;
pub mod variational;

pub use error::{Error, Result};
pub use fem::FemFunction;
pub use mesh::Mesh;
pub use musielak::{ExponentConfig, WeightField};
pub use quadrature::QuadratureRule;
