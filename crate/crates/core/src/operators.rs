//! Weak-form operators: the double phase operator `A`, the Nemytskij terms of
//! the reaction and boundary nonlinearities, and the parameter conditions of
//! the existence result with convection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{assemble_weak_form, evaluate_energy, signed_power, BoundaryPoint, FemFunction, InteriorPoint, LocalEnergy};
use crate::mesh::Mesh;
use crate::musielak::{luxemburg_norm, modular_full, ExponentConfig, NormKind, WeightField};
use crate::quadrature::QuadratureRule;

/// `a |s|^{r-2} s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub coefficient: f64,
    pub exponent: f64,
}

/// `b |ξ|^γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientTerm {
    pub coefficient: f64,
    pub exponent: f64,
}

/// Growth constants of the form
///
/// ```text
/// |f(s, ξ)| ≤ a1 |ξ|^{p(r1-1)/r1} + a2 |s|^{r1-1} + α1
/// |g(s)|    ≤ a3 |s|^{r2-1} + α2
/// f(s, ξ) s ≤ b1 |ξ|^p + b2 |s|^p + ω1
/// g(s) s    ≤ b3 |s|^p + ω2
/// ```
///
/// with `ω1, ω2` taken as nonnegative constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthBounds {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub r1: f64,
    pub r2: f64,
}

/// `f(s, ξ) = Σ a|s|^{r-2}s + Σ b|ξ|^γ + c` and `g(s) = Σ a|s|^{r-2}s + c₂`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    pub interior: Vec<PowerTerm>,
    pub gradient: Vec<GradientTerm>,
    pub interior_constant: f64,
    pub boundary: Vec<PowerTerm>,
    pub boundary_constant: f64,
    pub growth: Option<GrowthBounds>,
}

/// Share of `b2` (or `b3`) spent on a constant term when deriving the sign
/// condition by Young's inequality.
pub const YOUNG_SHARE: f64 = 0.01;

fn power_sum(terms: &[PowerTerm], s: f64) -> f64 {
    terms.iter().map(|t| t.coefficient * signed_power(s, t.exponent)).sum()
}

fn power_primitive(terms: &[PowerTerm], s: f64) -> f64 {
    terms
        .iter()
        .map(|t| t.coefficient / t.exponent * s.abs().powf(t.exponent))
        .sum()
}

fn top_coefficient(terms: &[PowerTerm]) -> Option<(f64, f64)> {
    let r = terms
        .iter()
        .filter(|t| t.coefficient != 0.0)
        .map(|t| t.exponent)
        .fold(f64::NEG_INFINITY, f64::max);
    if !r.is_finite() {
        return None;
    }
    let a = terms.iter().filter(|t| t.exponent == r).map(|t| t.coefficient).sum();
    Some((a, r))
}

fn young_constant(c: f64, p: f64, eta: f64) -> f64 {
    // |c||s| ≤ η|s|^p + (p-1)/p |c|^{p/(p-1)} (ηp)^{-1/(p-1)}
    (p - 1.0) / p * c.abs().powf(p / (p - 1.0)) * (eta * p).powf(-1.0 / (p - 1.0))
}

/// `(b, ω)` with `Σ a|s|^r + c s ≤ b|s|^p + ω`, or an error naming the term
/// that makes the left side grow faster than `|s|^p`.
fn derive_value_sign_bound(terms: &[PowerTerm], c: f64, p: f64, what: &str) -> Result<(f64, f64)> {
    let (mut b, mut w) = (0.0, 0.0);
    for t in terms {
        if t.coefficient <= 0.0 {
            continue;
        }
        if t.exponent > p {
            return Err(Error::Hypothesis(format!(
                "{what}: term {}|s|^{}s grows faster than |s|^p, no sign bound exists",
                t.coefficient,
                t.exponent - 2.0
            )));
        }
        b += t.coefficient;
        if t.exponent < p {
            w += t.coefficient;
        }
    }
    if c != 0.0 {
        let eta = YOUNG_SHARE * c.abs().max(f64::MIN_POSITIVE);
        b += eta;
        w += young_constant(c, p, eta);
    }
    Ok((b, w))
}

impl NonlinearitySpec {
    pub fn f(&self, s: f64, xi: [f64; 2]) -> f64 {
        let t = xi[0].hypot(xi[1]);
        let g: f64 = self
            .gradient
            .iter()
            .map(|term| term.coefficient * t.powf(term.exponent))
            .sum();
        power_sum(&self.interior, s) + g + self.interior_constant
    }

    pub fn g(&self, s: f64) -> f64 {
        power_sum(&self.boundary, s) + self.boundary_constant
    }

    /// `F(s) = ∫₀ˢ f(t, 0) dt`; gradient terms have no primitive in `s` and
    /// are excluded.
    pub fn primitive_f(&self, s: f64) -> f64 {
        power_primitive(&self.interior, s) + self.interior_constant * s
    }

    pub fn primitive_g(&self, s: f64) -> f64 {
        power_primitive(&self.boundary, s) + self.boundary_constant * s
    }

    pub fn has_gradient_dependence(&self) -> bool {
        self.gradient.iter().any(|t| t.coefficient != 0.0)
    }

    /// Odd in `s` (pure power sums without constants or gradient terms).
    pub fn is_odd(&self) -> bool {
        !self.has_gradient_dependence() && self.interior_constant == 0.0 && self.boundary_constant == 0.0
    }

    /// Finite coefficients, exponents above 1, positive gradient exponents.
    pub fn validate_terms(&self) -> Result<()> {
        for (i, t) in self.interior.iter().chain(&self.boundary).enumerate() {
            if !(t.exponent > 1.0 && t.exponent.is_finite() && t.coefficient.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "power term {i}: exponent must exceed 1 and values be finite, got a = {}, r = {}",
                    t.coefficient, t.exponent
                )));
            }
        }
        for (i, t) in self.gradient.iter().enumerate() {
            if !(t.exponent > 0.0 && t.exponent.is_finite() && t.coefficient.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "gradient term {i}: exponent must be positive, got b = {}, γ = {}",
                    t.coefficient, t.exponent
                )));
            }
        }
        if !(self.interior_constant.is_finite() && self.boundary_constant.is_finite()) {
            return Err(Error::InvalidArgument("constant terms must be finite".into()));
        }
        Ok(())
    }

    /// Growth constants obtained from the term list: the smallest `a`'s for
    /// the chosen `r1, r2`, and sign-condition constants from Young's
    /// inequality.
    pub fn derive_growth(&self, cfg: &ExponentConfig, r1: f64, r2: f64) -> Result<GrowthBounds> {
        self.validate_terms()?;
        let p = cfg.p;
        let gamma_max = p * (r1 - 1.0) / r1;
        let mut alpha1 = self.interior_constant.abs();
        let mut a2 = 0.0;
        for t in &self.interior {
            a2 += t.coefficient.abs();
            if t.exponent < r1 {
                alpha1 += t.coefficient.abs();
            }
        }
        let mut a1 = 0.0;
        for t in &self.gradient {
            a1 += t.coefficient.abs();
            if t.exponent < gamma_max {
                alpha1 += t.coefficient.abs();
            }
        }
        let mut alpha2 = self.boundary_constant.abs();
        let mut a3 = 0.0;
        for t in &self.boundary {
            a3 += t.coefficient.abs();
            if t.exponent < r2 {
                alpha2 += t.coefficient.abs();
            }
        }

        let (mut b2, mut omega1) =
            derive_value_sign_bound(&self.interior, self.interior_constant, p, "f")?;
        let mut b1 = 0.0;
        for t in &self.gradient {
            let b = t.coefficient.abs();
            if b == 0.0 {
                continue;
            }
            if t.exponent > p - 1.0 {
                return Err(Error::Hypothesis(format!(
                    "f: gradient exponent {} exceeds p - 1 = {}, no sign bound of the form b1|ξ|^p + b2|s|^p + ω1",
                    t.exponent,
                    p - 1.0
                )));
            }
            // b|ξ|^γ|s| ≤ b γ/p |ξ|^p + b (p-γ)/p |s|^{p/(p-γ)}
            let k = p / (p - t.exponent);
            b1 += b * t.exponent / p;
            let share = b * (p - t.exponent) / p;
            b2 += share;
            if k < p {
                omega1 += share;
            }
        }
        let (b3, omega2) = derive_value_sign_bound(&self.boundary, self.boundary_constant, p, "g")?;
        let growth = GrowthBounds {
            a1,
            a2,
            a3,
            alpha1,
            alpha2,
            b1,
            b2,
            b3,
            omega1,
            omega2,
            r1,
            r2,
        };
        let checked = NonlinearitySpec {
            growth: Some(growth),
            ..self.clone()
        };
        checked.validate_growth(cfg)?;
        Ok(growth)
    }

    /// Checks that the declared growth constants dominate the term list.
    ///
    /// The growth bounds are checked symbolically. The sign condition is
    /// checked symbolically for its exponents and by sampling a logarithmic
    /// grid for its constants.
    pub fn validate_growth(&self, cfg: &ExponentConfig) -> Result<()> {
        self.validate_terms()?;
        let g = self
            .growth
            .ok_or_else(|| Error::Hypothesis("no growth constants declared".into()))?;
        let fields = [
            ("a1", g.a1),
            ("a2", g.a2),
            ("a3", g.a3),
            ("alpha1", g.alpha1),
            ("alpha2", g.alpha2),
            ("b1", g.b1),
            ("b2", g.b2),
            ("b3", g.b3),
            ("omega1", g.omega1),
            ("omega2", g.omega2),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Hypothesis(format!("{name} = {v} must be finite and nonnegative")));
            }
        }
        let p = cfg.p;
        if !(g.r1 > 1.0 && g.r1 < cfg.p_star()) {
            return Err(Error::Hypothesis(format!(
                "r1 = {} must lie in (1, p*) = (1, {})",
                g.r1,
                cfg.p_star()
            )));
        }
        if !(g.r2 > 1.0 && g.r2 < cfg.p_lower_star()) {
            return Err(Error::Hypothesis(format!(
                "r2 = {} must lie in (1, p_*) = (1, {})",
                g.r2,
                cfg.p_lower_star()
            )));
        }
        let tol = |bound: f64| 1e-12 * (1.0 + bound);

        // Growth of f.
        let gamma_max = p * (g.r1 - 1.0) / g.r1;
        let mut lower = self.interior_constant.abs();
        let mut top = 0.0;
        for t in &self.interior {
            if t.exponent > g.r1 {
                return Err(Error::Hypothesis(format!(
                    "f: exponent {} - 1 exceeds the declared r1 - 1 = {}",
                    t.exponent,
                    g.r1 - 1.0
                )));
            }
            top += t.coefficient.abs();
            if t.exponent < g.r1 {
                lower += t.coefficient.abs();
            }
        }
        if top > g.a2 + tol(g.a2) {
            return Err(Error::Hypothesis(format!("f: a2 = {} is below Σ|a_i| = {top}", g.a2)));
        }
        let mut gtop = 0.0;
        for t in &self.gradient {
            if t.exponent > gamma_max + 1e-12 {
                return Err(Error::Hypothesis(format!(
                    "f: gradient exponent {} exceeds p(r1-1)/r1 = {gamma_max}",
                    t.exponent
                )));
            }
            gtop += t.coefficient.abs();
            if t.exponent < gamma_max - 1e-12 {
                lower += t.coefficient.abs();
            }
        }
        if gtop > g.a1 + tol(g.a1) {
            return Err(Error::Hypothesis(format!("f: a1 = {} is below Σ|b_j| = {gtop}", g.a1)));
        }
        if lower > g.alpha1 + tol(g.alpha1) {
            return Err(Error::Hypothesis(format!(
                "f: alpha1 = {} is below the lower-order total {lower}",
                g.alpha1
            )));
        }

        // Growth of g.
        let mut lower = self.boundary_constant.abs();
        let mut top = 0.0;
        for t in &self.boundary {
            if t.exponent > g.r2 {
                return Err(Error::Hypothesis(format!(
                    "g: exponent {} - 1 exceeds the declared r2 - 1 = {}",
                    t.exponent,
                    g.r2 - 1.0
                )));
            }
            top += t.coefficient.abs();
            if t.exponent < g.r2 {
                lower += t.coefficient.abs();
            }
        }
        if top > g.a3 + tol(g.a3) {
            return Err(Error::Hypothesis(format!("g: a3 = {} is below Σ|a_i| = {top}", g.a3)));
        }
        if lower > g.alpha2 + tol(g.alpha2) {
            return Err(Error::Hypothesis(format!(
                "g: alpha2 = {} is below the lower-order total {lower}",
                g.alpha2
            )));
        }

        // Sign condition: exponents first, then sampled constants.
        for t in self.interior.iter().chain(&self.boundary) {
            if t.coefficient > 0.0 && t.exponent > p {
                return Err(Error::Hypothesis(format!(
                    "sign condition: {}|s|^{} grows faster than |s|^p",
                    t.coefficient, t.exponent
                )));
            }
        }
        for t in &self.gradient {
            if t.coefficient != 0.0 && t.exponent > p - 1.0 + 1e-12 {
                return Err(Error::Hypothesis(format!(
                    "sign condition: gradient exponent {} exceeds p - 1",
                    t.exponent
                )));
            }
        }
        let mut grid = vec![0.0];
        for k in 0..=240 {
            let v = 10f64.powf(-6.0 + 12.0 * k as f64 / 240.0);
            grid.push(v);
            grid.push(-v);
        }
        for &s in &grid {
            for &t in grid.iter().filter(|t| **t >= 0.0) {
                let lhs = self.f(s, [t, 0.0]) * s;
                let rhs = g.b1 * t.powf(p) + g.b2 * s.abs().powf(p) + g.omega1;
                if lhs > rhs + 1e-9 * (1.0 + rhs.abs()) {
                    return Err(Error::Hypothesis(format!(
                        "sign condition for f violated at s = {s:.3e}, |ξ| = {t:.3e}: {lhs:.6e} > {rhs:.6e}"
                    )));
                }
            }
            let lhs = self.g(s) * s;
            let rhs = g.b3 * s.abs().powf(p) + g.omega2;
            if lhs > rhs + 1e-9 * (1.0 + rhs.abs()) {
                return Err(Error::Hypothesis(format!(
                    "sign condition for g violated at s = {s:.3e}: {lhs:.6e} > {rhs:.6e}"
                )));
            }
        }
        Ok(())
    }

    pub fn hypotheses(&self, cfg: &ExponentConfig) -> HypothesisFlags {
        let (p, q) = (cfg.p, cfg.q);
        let superlinear = |terms: &[PowerTerm]| match top_coefficient(terms) {
            Some((a, r)) => r > q && a > 0.0,
            None => false,
        };
        let vanishes_faster = |terms: &[PowerTerm], c: f64, order: f64| {
            c == 0.0 && terms.iter().all(|t| t.coefficient == 0.0 || t.exponent > order)
        };
        let no_gradient = !self.has_gradient_dependence();
        HypothesisFlags {
            nonzero_source: self.interior_constant != 0.0,
            f_superlinear: superlinear(&self.interior),
            g_superlinear: superlinear(&self.boundary),
            f_small_vs_q: no_gradient && vanishes_faster(&self.interior, self.interior_constant, q),
            f_small_vs_p: no_gradient && vanishes_faster(&self.interior, self.interior_constant, p),
            g_small_vs_p: vanishes_faster(&self.boundary, self.boundary_constant, p),
            gradient_free: no_gradient,
        }
    }
}

/// Symbolic checks of the hypotheses used by the three existence results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisFlags {
    /// `f(0, 0) ≠ 0`.
    pub nonzero_source: bool,
    /// `f(s)/(|s|^{q-2}s) → +∞` as `|s| → ∞`.
    pub f_superlinear: bool,
    pub g_superlinear: bool,
    /// `f(s)/(|s|^{q-2}s) → 0` as `s → 0`.
    pub f_small_vs_q: bool,
    /// `f(s)/(|s|^{p-2}s) → 0` as `s → 0`.
    pub f_small_vs_p: bool,
    /// `g(s)/(|s|^{p-2}s) → 0` as `s → 0`.
    pub g_small_vs_p: bool,
    pub gradient_free: bool,
}

impl HypothesisFlags {
    /// Hypotheses of the Steklov-type multiplicity result.
    pub fn steklov_case(&self) -> bool {
        self.gradient_free
            && self.f_superlinear
            && self.g_superlinear
            && self.f_small_vs_q
            && self.g_small_vs_p
    }

    /// Hypotheses of the Robin-type multiplicity result.
    pub fn robin_case(&self) -> bool {
        self.gradient_free && self.f_superlinear && self.f_small_vs_p
    }
}

/// `∫ 1/p|∇u|^p + μ/q|∇u|^q + 1/p|u|^p + μ/q|u|^q`, whose derivative is `A`.
pub(crate) struct DoublePhaseEnergy {
    pub p: f64,
    pub q: f64,
    /// Coefficient of `1/p|u|^p`.
    pub value_p: f64,
    /// Coefficient of `1/p ∫_∂Ω |u|^p`.
    pub boundary_p: f64,
}

impl LocalEnergy for DoublePhaseEnergy {
    fn gradient_density(&self, mu: f64, t: f64) -> (f64, f64) {
        let (p, q) = (self.p, self.q);
        (
            t.powf(p) / p + mu * t.powf(q) / q,
            t.powf(p - 1.0) + mu * t.powf(q - 1.0),
        )
    }

    fn value_density(&self, pt: &InteriorPoint) -> (f64, f64) {
        let (p, q) = (self.p, self.q);
        let s = pt.value;
        let a = s.abs();
        (
            self.value_p * a.powf(p) / p + pt.weight * a.powf(q) / q,
            self.value_p * signed_power(s, p) + pt.weight * signed_power(s, q),
        )
    }

    fn boundary_density(&self, pt: &BoundaryPoint) -> (f64, f64) {
        if self.boundary_p == 0.0 {
            return (0.0, 0.0);
        }
        let s = pt.value;
        (
            self.boundary_p * s.abs().powf(self.p) / self.p,
            self.boundary_p * signed_power(s, self.p),
        )
    }
}

/// `r_i = ⟨A(u), φ_i⟩` for every nodal basis function.
pub fn a_residual(
    mesh: &Mesh,
    rule: &QuadratureRule,
    u: &FemFunction,
    cfg: &ExponentConfig,
    mu: &WeightField,
) -> Result<Vec<f64>> {
    let e = DoublePhaseEnergy {
        p: cfg.p,
        q: cfg.q,
        value_p: 1.0,
        boundary_p: 0.0,
    };
    let mut r = vec![0.0; u.len()];
    evaluate_energy(mesh, rule, Some(mu.values()), u.coeffs(), &e, Some(&mut r))?;
    Ok(r)
}

/// `⟨A(u), φ⟩`.
pub fn apply_a(
    mesh: &Mesh,
    rule: &QuadratureRule,
    u: &FemFunction,
    phi: &FemFunction,
    cfg: &ExponentConfig,
    mu: &WeightField,
) -> Result<f64> {
    Ok(pair(&a_residual(mesh, rule, u, cfg, mu)?, phi))
}

fn pair(r: &[f64], phi: &FemFunction) -> f64 {
    r.iter().zip(phi.coeffs()).map(|(a, b)| a * b).sum()
}

/// `r_i = ⟨A(u) - N_f(u) - N_g(u) + N_ζ(u), φ_i⟩`, the weak residual of the
/// problem with convection.
pub fn script_a_residual(
    mesh: &Mesh,
    rule: &QuadratureRule,
    u: &FemFunction,
    cfg: &ExponentConfig,
    mu: &WeightField,
    spec: &NonlinearitySpec,
    zeta: f64,
) -> Result<Vec<f64>> {
    let (p, q) = (cfg.p, cfg.q);
    assemble_weak_form(
        mesh,
        rule,
        Some(mu.values()),
        u.coeffs(),
        |_, m, g| {
            let t = g[0].hypot(g[1]);
            if t == 0.0 {
                return [0.0, 0.0];
            }
            let c = t.powf(p - 2.0) + m * t.powf(q - 2.0);
            [c * g[0], c * g[1]]
        },
        |pt| {
            signed_power(pt.value, p) + pt.weight * signed_power(pt.value, q)
                - spec.f(pt.value, pt.gradient)
        },
        |pt| zeta * signed_power(pt.value, p) - spec.g(pt.value),
    )
}

/// `⟨𝒜(u), φ⟩`.
#[allow(clippy::too_many_arguments)]
pub fn apply_script_a(
    mesh: &Mesh,
    rule: &QuadratureRule,
    u: &FemFunction,
    phi: &FemFunction,
    cfg: &ExponentConfig,
    mu: &WeightField,
    spec: &NonlinearitySpec,
    zeta: f64,
) -> Result<f64> {
    Ok(pair(&script_a_residual(mesh, rule, u, cfg, mu, spec, zeta)?, phi))
}

/// Load vector `L_i = ∫ f(w, ∇w) φ_i + ∫_∂Ω g(w) φ_i` with the state frozen at `w`.
pub fn frozen_load(
    mesh: &Mesh,
    rule: &QuadratureRule,
    w: &FemFunction,
    mu: &WeightField,
    spec: &NonlinearitySpec,
) -> Result<Vec<f64>> {
    assemble_weak_form(
        mesh,
        rule,
        Some(mu.values()),
        w.coeffs(),
        |_, _, _| [0.0, 0.0],
        |pt| spec.f(pt.value, pt.gradient),
        |pt| spec.g(pt.value),
    )
}

pub fn max_abs(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// One inequality with its slack; `holds` is `slack > 0` unless stated otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub value: f64,
    pub holds: bool,
}

impl Slack {
    fn positive(value: f64) -> Self {
        Self { value, holds: value > 0.0 }
    }

    fn nonnegative(value: f64) -> Self {
        Self { value, holds: value >= 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub lambda_robin: f64,
    pub lambda_steklov: f64,
    /// `1 - b1 - b2/λ^R`.
    pub cond_a_first: Slack,
    /// `ζ - b2 β/λ^R - b3`.
    pub cond_a_second: Slack,
    pub cond_a: bool,
    /// `1 - max(b1, b2) - b3/λ^S`.
    pub cond_b_first: Slack,
    /// `ζ ≥ 0`.
    pub cond_b_second: Slack,
    pub cond_b: bool,
    /// `(β + ζ)‖u^R‖^p_{p,∂Ω} - λ^R - ϑ`.
    pub boundary_norm_condition: Slack,
}

impl ConditionReport {
    pub fn any(&self) -> bool {
        self.cond_a || self.cond_b
    }

    /// Names of the violated inequalities.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let items = [
            ("(A) 1 - b1 - b2/λR > 0", self.cond_a_first),
            ("(A) ζ - b2β/λR - b3 > 0", self.cond_a_second),
            ("(B) 1 - max(b1,b2) - b3/λS > 0", self.cond_b_first),
            ("(B) ζ ≥ 0", self.cond_b_second),
        ];
        for (name, s) in items {
            if !s.holds {
                v.push(format!("{name} fails with slack {:.6e}", s.value));
            }
        }
        v
    }

    /// Coefficient of `‖u‖₀^p` in the coercivity estimate for the first
    /// condition that holds.
    pub fn coercivity_slack(&self) -> Option<(CaseUsed, f64)> {
        if self.cond_a {
            Some((CaseUsed::A, self.cond_a_first.value))
        } else if self.cond_b {
            Some((CaseUsed::B, self.cond_b_first.value))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseUsed {
    A,
    B,
}

#[derive(Debug, Clone, Copy)]
pub struct ConditionInputs {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub beta: f64,
    pub zeta: f64,
    pub lambda_robin: f64,
    pub lambda_steklov: f64,
    pub theta: f64,
    /// `‖u^R‖^p_{p,∂Ω}` of the `L^p`-normalized Robin eigenfunction.
    pub boundary_norm_term: f64,
}

pub fn check_conditions(c: &ConditionInputs) -> Result<ConditionReport> {
    if !(c.lambda_robin > 0.0 && c.lambda_steklov > 0.0) {
        return Err(Error::InvalidArgument("eigenvalues must be positive".into()));
    }
    let a1 = Slack::positive(1.0 - c.b1 - c.b2 / c.lambda_robin);
    let a2 = Slack::positive(c.zeta - c.b2 * c.beta / c.lambda_robin - c.b3);
    let b1 = Slack::positive(1.0 - c.b1.max(c.b2) - c.b3 / c.lambda_steklov);
    let b2 = Slack::nonnegative(c.zeta);
    Ok(ConditionReport {
        lambda_robin: c.lambda_robin,
        lambda_steklov: c.lambda_steklov,
        cond_a_first: a1,
        cond_a_second: a2,
        cond_a: a1.holds && a2.holds,
        cond_b_first: b1,
        cond_b_second: b2,
        cond_b: b1.holds && b2.holds,
        boundary_norm_condition: Slack::positive(
            (c.beta + c.zeta) * c.boundary_norm_term - c.lambda_robin - c.theta,
        ),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoercivityCheck {
    pub norm0: f64,
    /// `⟨𝒜(u), u⟩`.
    pub pairing: f64,
    /// `slack ‖u‖₀^p - ‖ω1‖₁ - ‖ω2‖_{1,∂Ω}`.
    pub lower_bound: f64,
    pub holds: bool,
}

/// Evaluates both sides of the coercivity estimate at `u`.
#[allow(clippy::too_many_arguments)]
pub fn coercivity_check(
    mesh: &Mesh,
    rule: &QuadratureRule,
    u: &FemFunction,
    cfg: &ExponentConfig,
    mu: &WeightField,
    spec: &NonlinearitySpec,
    zeta: f64,
    slack: f64,
) -> Result<CoercivityCheck> {
    let growth = spec
        .growth
        .ok_or_else(|| Error::Hypothesis("no growth constants declared".into()))?;
    let pairing = apply_script_a(mesh, rule, u, u, cfg, mu, spec, zeta)?;
    let norm0 = luxemburg_norm(mesh, rule, u, cfg, mu, NormKind::Full)?;
    let lower_bound =
        slack * norm0.powf(cfg.p) - growth.omega1 * mesh.area() - growth.omega2 * mesh.perimeter();
    // The eigenvalues enter through computed Rayleigh values, which sit at
    // most a solver tolerance above the discrete minimum.
    let tol = 1e-8 * (pairing.abs() + lower_bound.abs() + 1.0);
    Ok(CoercivityCheck {
        norm0,
        pairing,
        lower_bound,
        holds: pairing >= lower_bound - tol,
    })
}

/// `max(1, ((‖ω1‖₁ + ‖ω2‖_{1,∂Ω}) / slack)^{1/p})`: every zero of `𝒜` lies in
/// this `‖·‖₀`-ball when the coercivity slack is positive.
pub fn a_priori_bound(mesh: &Mesh, cfg: &ExponentConfig, growth: &GrowthBounds, slack: f64) -> f64 {
    let w = growth.omega1 * mesh.area() + growth.omega2 * mesh.perimeter();
    (w / slack).powf(1.0 / cfg.p).max(1.0)
}

/// `ρ̂_H(u)` and `⟨A(u), u⟩` side by side.
pub fn pairing_vs_modular(
    mesh: &Mesh,
    rule: &QuadratureRule,
    u: &FemFunction,
    cfg: &ExponentConfig,
    mu: &WeightField,
) -> Result<(f64, f64)> {
    let a = apply_a(mesh, rule, u, u, cfg, mu)?;
    let m = modular_full(mesh, rule, u, cfg, mu)?.total;
    Ok((a, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (Mesh, QuadratureRule, ExponentConfig, WeightField) {
        let m = Mesh::unit_square(6).unwrap();
        let mu = WeightField::from_fn(&m, |x| x[0]).unwrap();
        (m, QuadratureRule::standard(), ExponentConfig::planar(1.5, 1.8).unwrap(), mu)
    }

    fn random_fn(mesh: &Mesh, rng: &mut ChaCha8Rng) -> FemFunction {
        FemFunction::new((0..mesh.num_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap()
    }

    fn pure(r: f64) -> Vec<PowerTerm> {
        vec![PowerTerm { coefficient: 1.0, exponent: r }]
    }

    #[test]
    fn pure_power_values_and_primitives() {
        let spec = NonlinearitySpec { interior: pure(3.0), ..Default::default() };
        assert_eq!(spec.f(1.0, [0.0, 0.0]), 1.0);
        assert!((spec.primitive_f(1.0) - 1.0 / 3.0).abs() < 1e-15);
        for s in [0.3, 1.7, 5.0] {
            assert_eq!(spec.f(-s, [0.0, 0.0]), -spec.f(s, [0.0, 0.0]));
        }
    }

    #[test]
    fn superlinear_flag_follows_exponent() {
        let cfg = ExponentConfig::planar(1.4, 1.8).unwrap();
        let s = NonlinearitySpec { interior: pure(2.5), ..Default::default() };
        assert!(s.hypotheses(&cfg).f_superlinear);
        let s = NonlinearitySpec { interior: pure(1.8), ..Default::default() };
        assert!(!s.hypotheses(&cfg).f_superlinear);
        let s = NonlinearitySpec { interior: pure(1.6), ..Default::default() };
        assert!(!s.hypotheses(&cfg).f_superlinear);
    }

    #[test]
    fn a_of_zero_vanishes_and_pairing_matches_modular() {
        let (m, rule, cfg, mu) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = FemFunction::zeros(m.num_vertices());
        let phi = random_fn(&m, &mut rng);
        assert_eq!(apply_a(&m, &rule, &z, &phi, &cfg, &mu).unwrap(), 0.0);
        for _ in 0..10 {
            let u = random_fn(&m, &mut rng);
            let (a, r) = pairing_vs_modular(&m, &rule, &u, &cfg, &mu).unwrap();
            assert!(((a - r) / r).abs() < 1e-13, "{a} vs {r}");
        }
    }

    #[test]
    fn script_a_reduces_to_a() {
        let (m, rule, cfg, mu) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u = random_fn(&m, &mut rng);
        let phi = random_fn(&m, &mut rng);
        let spec = NonlinearitySpec::default();
        let a = apply_a(&m, &rule, &u, &phi, &cfg, &mu).unwrap();
        let b = apply_script_a(&m, &rule, &u, &phi, &cfg, &mu, &spec, 0.0).unwrap();
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn condition_examples() {
        let base = ConditionInputs {
            b1: 0.0,
            b2: 0.0,
            b3: 0.0,
            beta: 1.0,
            zeta: 1.0,
            lambda_robin: 2.0,
            lambda_steklov: 0.2,
            theta: 1.0,
            boundary_norm_term: 1.0,
        };
        let r = check_conditions(&base).unwrap();
        assert!(r.cond_a && r.cond_b);
        let r = check_conditions(&ConditionInputs { b1: 1.0, ..base }).unwrap();
        assert!(!r.cond_a);
        assert!(!r.violations().is_empty());
    }

    #[test]
    fn growth_gate_rejects_undeclared_terms() {
        let cfg = ExponentConfig::planar(1.6, 1.9).unwrap();
        let spec = NonlinearitySpec {
            interior_constant: 0.1,
            gradient: vec![GradientTerm { coefficient: 0.05, exponent: 0.6 }],
            ..Default::default()
        };
        let g = spec.derive_growth(&cfg, 1.6, 1.5).unwrap();
        assert!((g.b1 - 0.05 * 0.6 / 1.6).abs() < 1e-15);
        // Too-large gradient exponent for the declared r1.
        let bad = NonlinearitySpec {
            gradient: vec![GradientTerm { coefficient: 0.05, exponent: 1.0 }],
            growth: Some(g),
            ..spec.clone()
        };
        assert!(bad.validate_growth(&cfg).is_err());
        // Declared a1 too small.
        let bad = NonlinearitySpec {
            growth: Some(GrowthBounds { a1: 0.01, ..g }),
            ..spec.clone()
        };
        assert!(bad.validate_growth(&cfg).is_err());
        // Declared b2 too small for the sign condition.
        let bad = NonlinearitySpec {
            growth: Some(GrowthBounds { b2: 0.0, omega1: 0.0, ..g }),
            ..spec
        };
        assert!(bad.validate_growth(&cfg).is_err());
    }

    #[test]
    fn critical_exponent_gate() {
        let cfg = ExponentConfig::planar(1.4, 1.8).unwrap();
        let spec = NonlinearitySpec {
            boundary: vec![PowerTerm { coefficient: -1.0, exponent: 2.5 }],
            ..Default::default()
        };
        // p_* = 1.4/0.6 ≈ 2.33 < 2.5.
        assert!(spec.derive_growth(&cfg, 1.5, 2.5).is_err());
    }
}
