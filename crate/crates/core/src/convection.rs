//! Picard–Galerkin iteration for the problem with convection.
//!
//! Each outer step freezes `f(u^k, ∇u^k)` and `g(u^k)` into a load vector and
//! minimizes the strictly convex energy
//!
//! ```text
//! ∫ 1/p|∇u|^p + μ/q|∇u|^q + 1/p|u|^p + μ/q|u|^q + ζ/p ∫_∂Ω |u|^p - L(u^k)·u
//! ```
//!
//! whose minimizer is the next iterate. Fixed points are the discrete weak
//! solutions of `𝒜(u) = 0`.

use serde::{Deserialize, Serialize};

use crate::descent::{minimize, DescentOptions};
use crate::error::{Error, Result};
use crate::fem::{evaluate_energy, FemFunction};
use crate::mesh::Mesh;
use crate::musielak::{luxemburg_norm, ExponentConfig, NormKind, WeightField};
use crate::operators::{
    a_priori_bound, frozen_load, max_abs, script_a_residual, CaseUsed, ConditionReport,
    DoublePhaseEnergy, NonlinearitySpec,
};
use crate::quadrature::QuadratureRule;
use crate::tolerances::PICARD_STEP_TOL;

#[derive(Debug, Clone)]
pub struct PicardOptions {
    pub max_outer: usize,
    /// Stop once `‖u^{k+1} - u^k‖₀ < step_tol`.
    pub step_tol: f64,
    /// Initial damping factor in `(0, 1]`.
    pub damping: f64,
    /// Halvings of the damping allowed before reporting divergence.
    pub max_halvings: usize,
    /// Consecutive growing steps that count as divergence.
    pub divergence_window: usize,
    pub inner: DescentOptions,
    /// Run even when neither condition holds; the result is then not certified.
    pub allow_uncertified: bool,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            max_outer: 200,
            step_tol: PICARD_STEP_TOL,
            damping: 1.0,
            max_halvings: 6,
            divergence_window: 5,
            inner: DescentOptions {
                gradient_tol: 1e-10,
                ..DescentOptions::default()
            },
            allow_uncertified: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardState {
    pub outer_index: usize,
    /// `‖u^{k+1} - u^k‖₀`.
    pub step_norm: f64,
    /// Max-norm gradient of the inner energy at the inner minimizer.
    pub inner_residual: f64,
    pub iterate_norm: f64,
    pub damping: f64,
    pub condition_used: Option<CaseUsed>,
}

impl PicardState {
    pub const CSV_HEADER: &'static str = "outer_index,step_norm,inner_residual,iterate_norm,damping";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.12e},{:.12e},{:.12e},{}",
            self.outer_index, self.step_norm, self.inner_residual, self.iterate_norm, self.damping
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvectionSolution {
    pub solution: FemFunction,
    pub trace: Vec<PicardState>,
    /// `max_i |⟨𝒜(û), φ_i⟩|`.
    pub residual: f64,
    pub norm0: f64,
    pub converged: bool,
    /// Both a passing condition and convergence.
    pub certified: bool,
    pub condition_used: Option<CaseUsed>,
    pub a_priori_bound: Option<f64>,
}

/// `θ u_new + (1 - θ) u_old`.
pub fn damped_update(u_old: &FemFunction, u_new: &FemFunction, damping: f64) -> Result<FemFunction> {
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::InvalidArgument(format!("damping {damping} must lie in (0, 1]")));
    }
    if u_old.len() != u_new.len() {
        return Err(Error::InvalidArgument("iterates have different lengths".into()));
    }
    Ok(u_old.scaled(1.0 - damping).axpy(damping, u_new))
}

/// Inner energy at `u` for a frozen load, with its gradient when requested.
#[allow(clippy::too_many_arguments)]
pub fn inner_energy(
    mesh: &Mesh,
    rule: &QuadratureRule,
    cfg: &ExponentConfig,
    mu: &WeightField,
    zeta: f64,
    load: &[f64],
    u: &[f64],
    grad: Option<&mut [f64]>,
) -> Result<f64> {
    let e = DoublePhaseEnergy {
        p: cfg.p,
        q: cfg.q,
        value_p: 1.0,
        boundary_p: zeta,
    };
    let lin: f64 = load.iter().zip(u).map(|(a, b)| a * b).sum();
    match grad {
        Some(g) => {
            let v = evaluate_energy(mesh, rule, Some(mu.values()), u, &e, Some(&mut *g))?;
            g.iter_mut().zip(load).for_each(|(gi, li)| *gi -= li);
            Ok(v - lin)
        }
        None => Ok(evaluate_energy(mesh, rule, Some(mu.values()), u, &e, None)? - lin),
    }
}

/// `(E(u) + E(v))/2 - E((u+v)/2)`, nonnegative for a convex inner energy.
#[allow(clippy::too_many_arguments)]
pub fn inner_midpoint_gap(
    mesh: &Mesh,
    rule: &QuadratureRule,
    cfg: &ExponentConfig,
    mu: &WeightField,
    zeta: f64,
    load: &[f64],
    u: &FemFunction,
    v: &FemFunction,
) -> Result<f64> {
    let m = u.scaled(0.5).axpy(0.5, v);
    let eu = inner_energy(mesh, rule, cfg, mu, zeta, load, u.coeffs(), None)?;
    let ev = inner_energy(mesh, rule, cfg, mu, zeta, load, v.coeffs(), None)?;
    let em = inner_energy(mesh, rule, cfg, mu, zeta, load, m.coeffs(), None)?;
    Ok(0.5 * (eu + ev) - em)
}

/// Runs the Picard iteration from `u⁰ = 0`.
///
/// `report` must come from [`crate::operators::check_conditions`] with the
/// growth constants of `spec`. Without a passing condition the call fails
/// unless `allow_uncertified` is set.
#[allow(clippy::too_many_arguments)]
pub fn solve_convection(
    mesh: &Mesh,
    rule: &QuadratureRule,
    cfg: &ExponentConfig,
    mu: &WeightField,
    spec: &NonlinearitySpec,
    zeta: f64,
    report: &ConditionReport,
    opts: &PicardOptions,
) -> Result<ConvectionSolution> {
    let growth = spec
        .growth
        .ok_or_else(|| Error::Hypothesis("convection runs need declared growth constants".into()))?;
    if !(zeta >= 0.0 && zeta.is_finite()) {
        return Err(Error::InvalidArgument(format!("ζ = {zeta} must be nonnegative")));
    }
    let case = report.coercivity_slack();
    if case.is_none() && !opts.allow_uncertified {
        return Err(Error::GateFailed(report.violations().join("; ")));
    }
    let condition_used = case.map(|c| c.0);
    let bound = case.map(|(_, slack)| a_priori_bound(mesh, cfg, &growth, slack));

    let n = mesh.num_vertices();
    let mut u = FemFunction::zeros(n);
    let mut damping = opts.damping;
    let mut halvings = 0;
    let mut growing = 0;
    let mut trace: Vec<PicardState> = Vec::new();
    let mut converged = false;

    for k in 0..opts.max_outer {
        let load = frozen_load(mesh, rule, &u, mu, spec)?;
        let mut obj =
            |x: &[f64], g: &mut [f64]| inner_energy(mesh, rule, cfg, mu, zeta, &load, x, Some(g));
        let out = minimize(&mut obj, u.coeffs().to_vec(), &opts.inner)?;
        let u_new = damped_update(&u, &FemFunction::new(out.x)?, damping)?;
        let step_norm = luxemburg_norm(mesh, rule, &u_new.sub(&u), cfg, mu, NormKind::Full)?;
        let iterate_norm = luxemburg_norm(mesh, rule, &u_new, cfg, mu, NormKind::Full)?;
        if !step_norm.is_finite() {
            return Err(Error::Diverged { outer: k, step_norm });
        }
        if let Some(b) = bound {
            if iterate_norm > b {
                return Err(Error::APrioriBound { norm: iterate_norm, bound: b });
            }
        }
        if let Some(prev) = trace.last() {
            if step_norm > prev.step_norm {
                growing += 1;
            } else {
                growing = 0;
            }
        }
        trace.push(PicardState {
            outer_index: k,
            step_norm,
            inner_residual: out.gradient_norm,
            iterate_norm,
            damping,
            condition_used,
        });
        u = u_new;
        if step_norm < opts.step_tol {
            converged = true;
            break;
        }
        if growing >= opts.divergence_window {
            if halvings >= opts.max_halvings {
                return Err(Error::Diverged { outer: k, step_norm });
            }
            halvings += 1;
            damping *= 0.5;
            growing = 0;
        }
    }

    let residual = max_abs(&script_a_residual(mesh, rule, &u, cfg, mu, spec, zeta)?);
    let norm0 = luxemburg_norm(mesh, rule, &u, cfg, mu, NormKind::Full)?;
    Ok(ConvectionSolution {
        solution: u,
        trace,
        residual,
        norm0,
        converged,
        certified: converged && condition_used.is_some(),
        condition_used,
        a_priori_bound: bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{check_conditions, ConditionInputs, GradientTerm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (Mesh, QuadratureRule, ExponentConfig, WeightField) {
        let m = Mesh::unit_square(6).unwrap();
        let mu = WeightField::from_fn(&m, |x| x[0]).unwrap();
        (m, QuadratureRule::standard(), ExponentConfig::planar(1.6, 1.9).unwrap(), mu)
    }

    fn passing_report(spec: &NonlinearitySpec, zeta: f64) -> ConditionReport {
        let g = spec.growth.unwrap();
        check_conditions(&ConditionInputs {
            b1: g.b1,
            b2: g.b2,
            b3: g.b3,
            beta: 1.0,
            zeta,
            lambda_robin: 2.0,
            lambda_steklov: 0.25,
            theta: 1.0,
            boundary_norm_term: 1.0,
        })
        .unwrap()
    }

    #[test]
    fn damped_update_examples() {
        let a = FemFunction::zeros(3);
        let b = FemFunction::new(vec![1.0, -2.0, 4.0]).unwrap();
        assert_eq!(damped_update(&a, &b, 1.0).unwrap(), b);
        assert_eq!(damped_update(&a, &b, 0.5).unwrap(), b.scaled(0.5));
        assert!(damped_update(&a, &b, 0.0).is_err());
        assert!(damped_update(&a, &b, 1.5).is_err());
    }

    #[test]
    fn constant_source_converges_in_one_step() {
        let (m, rule, cfg, mu) = setup();
        let mut spec = NonlinearitySpec { interior_constant: 0.3, ..Default::default() };
        spec.growth = Some(spec.derive_growth(&cfg, 1.6, 1.5).unwrap());
        let report = passing_report(&spec, 1.0);
        let out = solve_convection(&m, &rule, &cfg, &mu, &spec, 1.0, &report, &PicardOptions::default())
            .unwrap();
        assert!(out.converged && out.certified);
        // The second step only confirms the fixed point.
        assert_eq!(out.trace.len(), 2);
        assert!(out.residual <= 1e-6, "{}", out.residual);
        assert!(out.norm0 > 1e-3);
    }

    #[test]
    fn gate_rejects_failing_conditions() {
        let (m, rule, cfg, mu) = setup();
        let mut spec = NonlinearitySpec {
            interior_constant: 0.1,
            gradient: vec![GradientTerm { coefficient: 5.0, exponent: 0.6 }],
            ..Default::default()
        };
        spec.growth = Some(spec.derive_growth(&cfg, 1.6, 1.5).unwrap());
        let report = passing_report(&spec, 0.2);
        assert!(!report.any());
        let err = solve_convection(&m, &rule, &cfg, &mu, &spec, 0.2, &report, &PicardOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::GateFailed(ref s) if s.contains("(A)")), "{err}");
    }

    #[test]
    fn inner_energy_is_midpoint_convex() {
        let (m, rule, cfg, mu) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let load: Vec<f64> = (0..m.num_vertices()).map(|_| rng.gen_range(-0.1..0.1)).collect();
        for _ in 0..20 {
            let u = FemFunction::new((0..m.num_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .unwrap();
            let v = FemFunction::new((0..m.num_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .unwrap();
            let gap = inner_midpoint_gap(&m, &rule, &cfg, &mu, 0.5, &load, &u, &v).unwrap();
            assert!(gap >= -1e-12, "{gap}");
        }
    }
}
