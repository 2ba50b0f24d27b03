//! Numerical tolerances shared by solvers, certificates and the acceptance suite.

/// Triangle rule order used for non-polynomial powers of `u`.
pub const STANDARD_QUADRATURE_ORDER: usize = 8;

/// Higher-order rule used as an independent re-integration check.
pub const REFERENCE_QUADRATURE_ORDER: usize = 10;

/// Relative bracket width at which the Luxemburg bisection stops.
pub const NORM_BISECTION_REL_WIDTH: f64 = 1e-12;

/// Doublings allowed while bracketing the Luxemburg level set.
pub const NORM_MAX_DOUBLINGS: usize = 200;

/// Slack for the norm–modular inequalities.
pub const MODULAR_CLAUSE_SLACK: f64 = 1e-9;

/// `ρ̂(u/‖u‖₀) = 1` accuracy.
pub const UNIT_MODULAR_TOL: f64 = 1e-10;

/// Gradient (weak residual, max-norm) tolerance for energy minimization.
pub const GRADIENT_TOL: f64 = 1e-8;

/// Nodal sign and bound slack for constant-sign certificates.
pub const SIGN_TOL: f64 = 1e-8;

/// Weak residual accepted as "solved" at desk scale.
pub const RESIDUAL_TOL: f64 = 1e-6;

/// Projected-gradient tolerance for the Rayleigh quotient descent.
pub const EIGEN_TOL: f64 = 1e-10;

/// Relative agreement with the dense linear oracle at `p = 2`.
pub const EIGEN_ORACLE_REL_TOL: f64 = 1e-6;

/// Slack for the discrete Rayleigh inequalities.
pub const RAYLEIGH_SLACK: f64 = 1e-8;

/// Monotonicity slack for `<A(u) - A(v), u - v>`.
pub const MONOTONICITY_SLACK: f64 = 1e-12;

/// Picard step norm at which the outer iteration stops.
pub const PICARD_STEP_TOL: f64 = 1e-8;

/// Relative agreement between analytic and central-difference derivatives.
pub const FD_REL_TOL: f64 = 1e-5;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-6;
