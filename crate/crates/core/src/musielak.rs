//! Modulars and Luxemburg norms for the integrand `H(x, t) = t^p + μ(x) t^q`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{evaluate_energy, BoundaryPoint, FemFunction, InteriorPoint, LocalEnergy};
use crate::mesh::Mesh;
use crate::quadrature::QuadratureRule;
use crate::tolerances::{
    MODULAR_CLAUSE_SLACK, NORM_BISECTION_REL_WIDTH, NORM_MAX_DOUBLINGS, UNIT_MODULAR_TOL,
};

/// Exponents `1 < p < q` in spatial dimension `dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentConfig {
    pub p: f64,
    pub q: f64,
    pub dim: usize,
    /// Enforce `q < dim`.
    pub strict: bool,
}

impl ExponentConfig {
    pub fn new(p: f64, q: f64, dim: usize, strict: bool) -> Result<Self> {
        if !(p > 1.0 && q > p && p.is_finite() && q.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "exponents must satisfy 1 < p < q, got p = {p}, q = {q}"
            )));
        }
        if dim < 2 {
            return Err(Error::InvalidArgument("dimension must exceed 1".into()));
        }
        if strict && q >= dim as f64 {
            return Err(Error::InvalidArgument(format!(
                "q = {q} must be below the dimension {dim} (disable strict mode to override)"
            )));
        }
        if p >= dim as f64 {
            return Err(Error::InvalidArgument(format!(
                "p = {p} must be below the dimension {dim} for the critical exponents"
            )));
        }
        Ok(Self { p, q, dim, strict })
    }

    /// Planar configuration with strict mode on.
    pub fn planar(p: f64, q: f64) -> Result<Self> {
        Self::new(p, q, 2, true)
    }

    /// Critical Sobolev exponent `Np/(N-p)`.
    pub fn p_star(&self) -> f64 {
        let n = self.dim as f64;
        n * self.p / (n - self.p)
    }

    /// Critical trace exponent `(N-1)p/(N-p)`.
    pub fn p_lower_star(&self) -> f64 {
        let n = self.dim as f64;
        (n - 1.0) * self.p / (n - self.p)
    }
}

/// Nodal samples of the weight `μ ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightField(Vec<f64>);

impl WeightField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "weight must be finite and nonnegative, vertex {i} has {}",
                values[i]
            )));
        }
        Ok(Self(values))
    }

    pub fn constant(mesh: &Mesh, m: f64) -> Result<Self> {
        Self::new(vec![m; mesh.num_vertices()])
    }

    pub fn from_fn(mesh: &Mesh, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        Self::new(mesh.vertices().iter().map(|&x| f(x)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// The four summands of `ρ̂_H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModularReport {
    pub gradient_p_term: f64,
    pub gradient_q_term: f64,
    pub value_p_term: f64,
    pub value_q_term: f64,
    pub total: f64,
}

impl ModularReport {
    /// CSV row `grad_p,grad_q,val_p,val_q,total,norm0`.
    pub fn csv_row(&self, norm0: f64) -> String {
        format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            self.gradient_p_term,
            self.gradient_q_term,
            self.value_p_term,
            self.value_q_term,
            self.total,
            norm0
        )
    }

    pub const CSV_HEADER: &'static str = "grad_p,grad_q,val_p,val_q,total,norm0";
}

/// Which modular a Luxemburg norm is taken with respect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    /// `ρ_H(u) = ∫ |u|^p + μ|u|^q`, giving `‖u‖_H`.
    Plain,
    /// `ρ̂_H`, giving the equivalent norm `‖u‖₀`.
    Full,
}

struct PowerTerms<'a> {
    cfg: &'a ExponentConfig,
    with_gradient: bool,
    which: Term,
}

#[derive(Clone, Copy)]
enum Term {
    All,
    GradP,
    GradQ,
    ValP,
    ValQ,
}

impl LocalEnergy for PowerTerms<'_> {
    fn gradient_density(&self, mu: f64, t: f64) -> (f64, f64) {
        if !self.with_gradient {
            return (0.0, 0.0);
        }
        let (p, q) = (self.cfg.p, self.cfg.q);
        let a = if matches!(self.which, Term::All | Term::GradP) { t.powf(p) } else { 0.0 };
        let b = if matches!(self.which, Term::All | Term::GradQ) { mu * t.powf(q) } else { 0.0 };
        (a + b, 0.0)
    }

    fn value_density(&self, pt: &InteriorPoint) -> (f64, f64) {
        let (p, q) = (self.cfg.p, self.cfg.q);
        let s = pt.value.abs();
        let a = if matches!(self.which, Term::All | Term::ValP) { s.powf(p) } else { 0.0 };
        let b = if matches!(self.which, Term::All | Term::ValQ) {
            pt.weight * s.powf(q)
        } else {
            0.0
        };
        (a + b, 0.0)
    }

    fn boundary_density(&self, _pt: &BoundaryPoint) -> (f64, f64) {
        (0.0, 0.0)
    }
}

fn integrate_term(
    mesh: &Mesh,
    rule: &QuadratureRule,
    u: &FemFunction,
    cfg: &ExponentConfig,
    mu: &WeightField,
    with_gradient: bool,
    which: Term,
) -> Result<f64> {
    let e = PowerTerms {
        cfg,
        with_gradient,
        which,
    };
    evaluate_energy(mesh, rule, Some(mu.values()), u.coeffs(), &e, None)
}

/// `ρ_H(u) = ∫_Ω |u|^p + μ|u|^q dx`.
pub fn modular_plain(
    mesh: &Mesh,
    rule: &QuadratureRule,
    u: &FemFunction,
    cfg: &ExponentConfig,
    mu: &WeightField,
) -> Result<f64> {
    integrate_term(mesh, rule, u, cfg, mu, false, Term::All)
}

/// The four-term `ρ̂_H(u)`.
pub fn modular_full(
    mesh: &Mesh,
    rule: &QuadratureRule,
    u: &FemFunction,
    cfg: &ExponentConfig,
    mu: &WeightField,
) -> Result<ModularReport> {
    let gp = integrate_term(mesh, rule, u, cfg, mu, true, Term::GradP)?;
    let gq = integrate_term(mesh, rule, u, cfg, mu, true, Term::GradQ)?;
    let vp = integrate_term(mesh, rule, u, cfg, mu, false, Term::ValP)?;
    let vq = integrate_term(mesh, rule, u, cfg, mu, false, Term::ValQ)?;
    Ok(ModularReport {
        gradient_p_term: gp,
        gradient_q_term: gq,
        value_p_term: vp,
        value_q_term: vq,
        total: gp + gq + vp + vq,
    })
}

/// A modular split into its `p`- and `q`-homogeneous parts, so that
/// `ρ(u/τ) = P τ^{-p} + Q τ^{-q}`.
#[derive(Debug, Clone, Copy)]
pub struct ModularParts {
    pub p_part: f64,
    pub q_part: f64,
    pub p: f64,
    pub q: f64,
}

impl ModularParts {
    pub fn at_scale(&self, tau: f64) -> f64 {
        self.p_part * tau.powf(-self.p) + self.q_part * tau.powf(-self.q)
    }
}

pub fn modular_parts(
    mesh: &Mesh,
    rule: &QuadratureRule,
    u: &FemFunction,
    cfg: &ExponentConfig,
    mu: &WeightField,
    which: NormKind,
) -> Result<ModularParts> {
    let (p_part, q_part) = match which {
        NormKind::Plain => (
            integrate_term(mesh, rule, u, cfg, mu, false, Term::ValP)?,
            integrate_term(mesh, rule, u, cfg, mu, false, Term::ValQ)?,
        ),
        NormKind::Full => {
            let r = modular_full(mesh, rule, u, cfg, mu)?;
            (
                r.gradient_p_term + r.value_p_term,
                r.gradient_q_term + r.value_q_term,
            )
        }
    };
    Ok(ModularParts {
        p_part,
        q_part,
        p: cfg.p,
        q: cfg.q,
    })
}

/// Unique `τ > 0` with `ρ(u/τ) = 1`, or 0 for `u = 0`.
pub fn luxemburg_norm(
    mesh: &Mesh,
    rule: &QuadratureRule,
    u: &FemFunction,
    cfg: &ExponentConfig,
    mu: &WeightField,
    which: NormKind,
) -> Result<f64> {
    let parts = modular_parts(mesh, rule, u, cfg, mu, which)?;
    norm_from_parts(&parts)
}

/// Bisection on the strictly decreasing map `τ ↦ ρ(u/τ)`.
pub fn norm_from_parts(parts: &ModularParts) -> Result<f64> {
    if parts.p_part == 0.0 && parts.q_part == 0.0 {
        return Ok(0.0);
    }
    let f = |tau: f64| parts.at_scale(tau) - 1.0;
    let (mut lo, mut hi) = (1.0, 1.0);
    let mut doublings = 0;
    while f(hi) > 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > NORM_MAX_DOUBLINGS || !hi.is_finite() {
            return Err(Error::NormBracket {
                doublings: NORM_MAX_DOUBLINGS,
            });
        }
    }
    while f(lo) < 0.0 {
        lo *= 0.5;
        doublings += 1;
        if doublings > NORM_MAX_DOUBLINGS || lo == 0.0 {
            return Err(Error::NormBracket {
                doublings: NORM_MAX_DOUBLINGS,
            });
        }
    }
    while hi - lo > NORM_BISECTION_REL_WIDTH * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Outcome of checking the norm–modular relations on one function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormModularCheck {
    pub norm: f64,
    pub modular: f64,
    /// `ρ̂(u/‖u‖₀) = 1`.
    pub unit_level: bool,
    /// `‖u‖₀` vs 1 has the same sign as `ρ̂(u)` vs 1.
    pub trichotomy: bool,
    /// `‖u‖₀ < 1 ⇒ ‖u‖₀^q ≤ ρ̂ ≤ ‖u‖₀^p` (vacuous otherwise).
    pub small_norm_bounds: bool,
    /// `‖u‖₀ > 1 ⇒ ‖u‖₀^p ≤ ρ̂ ≤ ‖u‖₀^q` (vacuous otherwise).
    pub large_norm_bounds: bool,
}

impl NormModularCheck {
    pub fn all_hold(&self) -> bool {
        self.unit_level && self.trichotomy && self.small_norm_bounds && self.large_norm_bounds
    }

    pub fn failed_clauses(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.unit_level {
            out.push("(i) unit level");
        }
        if !self.trichotomy {
            out.push("(ii) trichotomy");
        }
        if !self.small_norm_bounds {
            out.push("(iii) small-norm bounds");
        }
        if !self.large_norm_bounds {
            out.push("(iv) large-norm bounds");
        }
        out
    }
}

fn le_slack(a: f64, b: f64) -> bool {
    a <= b + MODULAR_CLAUSE_SLACK * b.abs().max(1.0)
}

pub fn check_modular_norm_relations(
    mesh: &Mesh,
    rule: &QuadratureRule,
    u: &FemFunction,
    cfg: &ExponentConfig,
    mu: &WeightField,
) -> Result<NormModularCheck> {
    if u.is_zero() {
        return Err(Error::InvalidArgument(
            "norm-modular relations need a nonzero function".into(),
        ));
    }
    let parts = modular_parts(mesh, rule, u, cfg, mu, NormKind::Full)?;
    let norm = norm_from_parts(&parts)?;
    let modular = parts.at_scale(1.0);
    let rescaled = modular_full(mesh, rule, &u.scaled(1.0 / norm), cfg, mu)?.total;
    let unit_level = (rescaled - 1.0).abs() <= UNIT_MODULAR_TOL;
    let near = |x: f64| (x - 1.0).abs() <= MODULAR_CLAUSE_SLACK;
    let trichotomy = if near(norm) || near(modular) {
        near(norm) == near(modular) || (norm - 1.0).signum() == (modular - 1.0).signum()
    } else {
        (norm < 1.0) == (modular < 1.0)
    };
    let (p, q) = (cfg.p, cfg.q);
    let small_norm_bounds =
        norm >= 1.0 || (le_slack(norm.powf(q), modular) && le_slack(modular, norm.powf(p)));
    let large_norm_bounds =
        norm <= 1.0 || (le_slack(norm.powf(p), modular) && le_slack(modular, norm.powf(q)));
    Ok(NormModularCheck {
        norm,
        modular,
        unit_level,
        trichotomy,
        small_norm_bounds,
        large_norm_bounds,
    })
}

/// Trends of norm and modular along `c·u` for shrinking and growing `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTrend {
    /// Both decrease towards 0 as `c → 0`.
    pub vanishing: bool,
    /// Both increase without bound as `c → ∞`.
    pub blowing_up: bool,
}

pub fn check_scaling_trends(
    mesh: &Mesh,
    rule: &QuadratureRule,
    u: &FemFunction,
    cfg: &ExponentConfig,
    mu: &WeightField,
    scales: usize,
) -> Result<ScalingTrend> {
    let sample = |c: f64| -> Result<(f64, f64)> {
        let parts = modular_parts(mesh, rule, &u.scaled(c), cfg, mu, NormKind::Full)?;
        Ok((norm_from_parts(&parts)?, parts.at_scale(1.0)))
    };
    let down: Vec<(f64, f64)> = (0..scales)
        .map(|k| sample(10f64.powi(-(k as i32))))
        .collect::<Result<_>>()?;
    let up: Vec<(f64, f64)> = (0..scales)
        .map(|k| sample(10f64.powi(k as i32)))
        .collect::<Result<_>>()?;
    let vanishing = down.windows(2).all(|w| w[1].0 < w[0].0 && w[1].1 < w[0].1)
        && down.last().is_some_and(|l| l.1 < down[0].1 * 1e-3);
    let blowing_up = up.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1)
        && up.last().is_some_and(|l| l.1 > up[0].1 * 1e3);
    Ok(ScalingTrend {
        vanishing,
        blowing_up,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize) -> (Mesh, QuadratureRule, ExponentConfig) {
        (
            Mesh::unit_square(n).unwrap(),
            QuadratureRule::standard(),
            ExponentConfig::planar(1.4, 1.8).unwrap(),
        )
    }

    fn random_fn(mesh: &Mesh, rng: &mut ChaCha8Rng, amp: f64) -> FemFunction {
        FemFunction::new((0..mesh.num_vertices()).map(|_| rng.gen_range(-amp..amp)).collect())
            .unwrap()
    }

    #[test]
    fn exponent_validation() {
        assert!(ExponentConfig::planar(1.4, 1.8).is_ok());
        assert!(ExponentConfig::planar(1.8, 1.4).is_err());
        assert!(ExponentConfig::planar(1.0, 1.8).is_err());
        assert!(ExponentConfig::planar(1.4, 2.5).is_err());
        assert!(ExponentConfig::new(1.4, 2.5, 2, false).is_ok());
        let c = ExponentConfig::planar(1.4, 1.8).unwrap();
        assert!((c.p_star() - 2.8 / 0.6).abs() < 1e-14);
        assert!((c.p_lower_star() - 1.4 / 0.6).abs() < 1e-14);
    }

    #[test]
    fn negative_weight_rejected() {
        assert!(WeightField::new(vec![0.0, -1e-3]).is_err());
    }

    #[test]
    fn plain_modular_examples() {
        let (m, rule, cfg) = setup(4);
        let zero_mu = WeightField::constant(&m, 0.0).unwrap();
        let zero = FemFunction::zeros(m.num_vertices());
        assert_eq!(modular_plain(&m, &rule, &zero, &cfg, &zero_mu).unwrap(), 0.0);
        let c = 0.7;
        let u = FemFunction::constant(m.num_vertices(), c);
        let v = modular_plain(&m, &rule, &u, &cfg, &zero_mu).unwrap();
        assert!((v - c.powf(cfg.p)).abs() < 1e-13);
        let mu = WeightField::constant(&m, 2.5).unwrap();
        let one = FemFunction::constant(m.num_vertices(), 1.0);
        let v = modular_plain(&m, &rule, &one, &cfg, &mu).unwrap();
        assert!((v - 3.5).abs() < 1e-13);
    }

    #[test]
    fn full_modular_of_linear_function() {
        let (m, rule, cfg) = setup(8);
        let mu = WeightField::constant(&m, 0.0).unwrap();
        let u = FemFunction::interpolate(&m, |x| x[0]);
        let r = modular_full(&m, &rule, &u, &cfg, &mu).unwrap();
        assert!((r.gradient_p_term - 1.0).abs() < 1e-13);
        assert_eq!(r.gradient_q_term, 0.0);
        // x^p is integrated exactly per element up to quadrature error of the
        // singular derivative at x = 0.
        assert!((r.value_p_term - 1.0 / (cfg.p + 1.0)).abs() < 1e-6);
        let zero = FemFunction::zeros(m.num_vertices());
        let z = modular_full(&m, &rule, &zero, &cfg, &mu).unwrap();
        assert_eq!(z.total, 0.0);
    }

    #[test]
    fn full_modular_matches_higher_order_reintegration() {
        let (m, rule, cfg) = setup(8);
        let reference = QuadratureRule::new(crate::tolerances::REFERENCE_QUADRATURE_ORDER).unwrap();
        let mu = WeightField::from_fn(&m, |x| x[0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // Sign-definite random functions: |u|^p is analytic on every triangle.
        // Zero crossings inside a triangle put a kink in the integrand that
        // no fixed Gauss rule resolves to this accuracy.
        for k in 0..10 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let u = FemFunction::new(
                (0..m.num_vertices()).map(|_| sign * rng.gen_range(0.05..2.0)).collect(),
            )
            .unwrap();
            let a = modular_full(&m, &rule, &u, &cfg, &mu).unwrap().total;
            // independent route: closed-form gradient terms + generic integrator
            let b = crate::fem::integrate_interior_weighted(&m, &reference, &u, Some(mu.values()), |pt| {
                let g = pt.gradient[0].hypot(pt.gradient[1]);
                let s = pt.value.abs();
                g.powf(cfg.p) + pt.weight * g.powf(cfg.q) + s.powf(cfg.p) + pt.weight * s.powf(cfg.q)
            })
            .unwrap();
            assert!(((a - b) / b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn luxemburg_examples() {
        let (m, rule, cfg) = setup(4);
        let zero_mu = WeightField::constant(&m, 0.0).unwrap();
        let zero = FemFunction::zeros(m.num_vertices());
        assert_eq!(
            luxemburg_norm(&m, &rule, &zero, &cfg, &zero_mu, NormKind::Full).unwrap(),
            0.0
        );
        let one = FemFunction::constant(m.num_vertices(), 1.0);
        let n = luxemburg_norm(&m, &rule, &one, &cfg, &zero_mu, NormKind::Plain).unwrap();
        assert!((n - 1.0).abs() < 1e-11);
    }

    #[test]
    fn unit_level_and_homogeneity() {
        let (m, rule, cfg) = setup(8);
        let mu = WeightField::from_fn(&m, |x| x[0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in [NormKind::Plain, NormKind::Full] {
            for _ in 0..10 {
                let u = random_fn(&m, &mut rng, 3.0);
                let n = luxemburg_norm(&m, &rule, &u, &cfg, &mu, kind).unwrap();
                let scaled = u.scaled(1.0 / n);
                let rho = match kind {
                    NormKind::Plain => modular_plain(&m, &rule, &scaled, &cfg, &mu).unwrap(),
                    NormKind::Full => modular_full(&m, &rule, &scaled, &cfg, &mu).unwrap().total,
                };
                assert!((rho - 1.0).abs() < 1e-10);
                let c: f64 = rng.gen_range(-5.0..5.0);
                let nc = luxemburg_norm(&m, &rule, &u.scaled(c), &cfg, &mu, kind).unwrap();
                assert!((nc - c.abs() * n).abs() <= 1e-10 * c.abs() * n);
            }
        }
    }

    #[test]
    fn norm_modular_clauses_at_prescribed_norms() {
        let (m, rule, cfg) = setup(8);
        let mu = WeightField::from_fn(&m, |x| x[0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_fn(&m, &mut rng, 1.0);
        let n = luxemburg_norm(&m, &rule, &u, &cfg, &mu, NormKind::Full).unwrap();
        for target in [0.5, 2.0] {
            let v = u.scaled(target / n);
            let c = check_modular_norm_relations(&m, &rule, &v, &cfg, &mu).unwrap();
            assert!((c.norm - target).abs() < 1e-10);
            assert!(c.all_hold(), "{:?}", c.failed_clauses());
            if target < 1.0 {
                assert!(c.modular < 1.0);
            } else {
                assert!(c.modular > 1.0);
            }
        }
    }

    #[test]
    fn scaling_trends_hold() {
        let (m, rule, cfg) = setup(8);
        let mu = WeightField::from_fn(&m, |x| x[0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_fn(&m, &mut rng, 1.0);
        let t = check_scaling_trends(&m, &rule, &u, &cfg, &mu, 5).unwrap();
        assert!(t.vanishing && t.blowing_up);
    }

    #[test]
    fn modular_monotone_in_weight() {
        let (m, rule, cfg) = setup(6);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let lo = WeightField::from_fn(&m, |x| 0.5 * x[0]).unwrap();
        let hi = WeightField::from_fn(&m, |x| 0.5 * x[0] + x[1]).unwrap();
        for _ in 0..10 {
            let u = random_fn(&m, &mut rng, 2.0);
            let a = modular_full(&m, &rule, &u, &cfg, &lo).unwrap().total;
            let b = modular_full(&m, &rule, &u, &cfg, &hi).unwrap().total;
            assert!(a <= b);
            let na = luxemburg_norm(&m, &rule, &u, &cfg, &lo, NormKind::Full).unwrap();
            let nb = luxemburg_norm(&m, &rule, &u, &cfg, &hi, NormKind::Full).unwrap();
            assert!(na <= nb * (1.0 + 1e-12));
        }
    }

    #[test]
    fn zero_function_rejected_by_relation_check() {
        let (m, rule, cfg) = setup(2);
        let mu = WeightField::constant(&m, 1.0).unwrap();
        let z = FemFunction::zeros(m.num_vertices());
        assert!(check_modular_norm_relations(&m, &rule, &z, &cfg, &mu).is_err());
    }
}
