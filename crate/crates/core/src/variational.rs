//! Constant-sign solutions by minimizing truncated energies.
//!
//! Steklov kind: the reaction is `-f(s)` in the interior and
//! `ζ|s|^{p-2}s - g(s)` on the boundary. Robin kind: `ζ|s|^{p-2}s - f(s)` in
//! the interior and `-β|s|^{p-2}s` on the boundary. The plus truncation keeps
//! the reaction on `[0, ū]`, vanishes for `s < 0` and freezes at `ū`; the
//! minus truncation mirrors it on `[-ū, 0]`. Minimizers of the truncated
//! energy stay inside the interval and then solve the untruncated problem.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::descent::{minimize, DescentOptions};
use crate::error::{Error, Result};
use crate::fem::{
    assemble_weak_form, evaluate_energy, integrate_boundary, integrate_interior_weighted,
    signed_power, BoundaryPoint, FemFunction, InteriorPoint, LocalEnergy,
};
use crate::mesh::Mesh;
use crate::musielak::{modular_full, ExponentConfig, WeightField};
use crate::operators::{max_abs, NonlinearitySpec, PowerTerm};
use crate::quadrature::QuadratureRule;
use crate::tolerances::SIGN_TOL;

/// Inflation of the truncation threshold.
pub const UPPER_SAFETY_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationKind {
    Steklov,
    Robin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignKind {
    Plus,
    Minus,
}

impl SignKind {
    pub fn sign(self) -> f64 {
        match self {
            SignKind::Plus => 1.0,
            SignKind::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationSet {
    pub kind: TruncationKind,
    pub sign: SignKind,
    /// `ū`; the lower bound is `v̲ = -ū`.
    pub upper: f64,
    pub zeta: f64,
    pub beta: f64,
    pub theta: f64,
    pub p: f64,
    pub q: f64,
}

impl TruncationSet {
    pub fn new(
        kind: TruncationKind,
        sign: SignKind,
        upper: f64,
        zeta: f64,
        beta: f64,
        theta: f64,
        cfg: &ExponentConfig,
    ) -> Result<Self> {
        if !(upper > 1.0 && upper.is_finite()) {
            return Err(Error::InvalidArgument(format!("ū = {upper} must exceed 1")));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidArgument(format!("ϑ = {theta} must be positive")));
        }
        if !(zeta > 0.0 && zeta.is_finite()) {
            return Err(Error::InvalidArgument(format!("ζ = {zeta} must be positive")));
        }
        if kind == TruncationKind::Robin && !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("β = {beta} must be positive")));
        }
        Ok(Self { kind, sign, upper, zeta, beta, theta, p: cfg.p, q: cfg.q })
    }

    pub fn lower(&self) -> f64 {
        -self.upper
    }

    pub fn with_sign(&self, sign: SignKind) -> Self {
        Self { sign, ..*self }
    }

    /// Untruncated interior reaction `h(s)` and its primitive.
    pub fn interior_reaction(&self, spec: &NonlinearitySpec, s: f64) -> (f64, f64) {
        let z = xi_zero();
        match self.kind {
            TruncationKind::Steklov => (-spec.f(s, z), -spec.primitive_f(s)),
            TruncationKind::Robin => (
                self.zeta * signed_power(s, self.p) - spec.f(s, z),
                self.zeta * s.abs().powf(self.p) / self.p - spec.primitive_f(s),
            ),
        }
    }

    /// Untruncated boundary reaction and its primitive.
    pub fn boundary_reaction(&self, spec: &NonlinearitySpec, s: f64) -> (f64, f64) {
        let sp = signed_power(s, self.p);
        let ap = s.abs().powf(self.p) / self.p;
        match self.kind {
            TruncationKind::Steklov => (
                self.zeta * sp - spec.g(s),
                self.zeta * ap - spec.primitive_g(s),
            ),
            TruncationKind::Robin => (-self.beta * sp, -self.beta * ap),
        }
    }

    fn truncate(&self, s: f64, h: impl Fn(f64) -> (f64, f64)) -> (f64, f64) {
        match self.sign {
            SignKind::Plus => {
                if s < 0.0 {
                    (0.0, 0.0)
                } else if s <= self.upper {
                    h(s)
                } else {
                    let (v, prim) = h(self.upper);
                    (v, prim + v * (s - self.upper))
                }
            }
            SignKind::Minus => {
                if s > 0.0 {
                    (0.0, 0.0)
                } else if s >= self.lower() {
                    h(s)
                } else {
                    let (v, prim) = h(self.lower());
                    (v, prim + v * (s - self.lower()))
                }
            }
        }
    }

    /// Truncated `(interior, boundary)` reactions at `s`.
    pub fn eval(&self, spec: &NonlinearitySpec, s: f64) -> (f64, f64) {
        (
            self.truncate(s, |t| self.interior_reaction(spec, t)).0,
            self.truncate(s, |t| self.boundary_reaction(spec, t)).0,
        )
    }

    /// Primitives `∫₀ˢ` of the truncated reactions. Beyond the cut-off they
    /// continue linearly with the frozen slope.
    pub fn primitives(&self, spec: &NonlinearitySpec, s: f64) -> (f64, f64) {
        (
            self.truncate(s, |t| self.interior_reaction(spec, t)).1,
            self.truncate(s, |t| self.boundary_reaction(spec, t)).1,
        )
    }
}

fn xi_zero() -> [f64; 2] {
    [0.0, 0.0]
}

/// Smallest `M ≥ 0` with `Σ a_i s^{r_i} ≥ c s^q` for every `s ≥ M`.
fn superlinear_threshold(terms: &[PowerTerm], c: f64, q: f64) -> Result<f64> {
    let active: Vec<PowerTerm> = terms.iter().copied().filter(|t| t.coefficient != 0.0).collect();
    let top = active
        .iter()
        .map(|t| t.exponent)
        .fold(f64::NEG_INFINITY, f64::max);
    let a_top: f64 = active.iter().filter(|t| t.exponent == top).map(|t| t.coefficient).sum();
    if !(top > q && a_top > 0.0) {
        return Err(Error::Hypothesis(format!(
            "nonlinearity is not superlinear with respect to |s|^q (top exponent {top}, coefficient {a_top})"
        )));
    }
    if active.len() == 1 {
        return Ok((c / a_top).powf(1.0 / (top - q)));
    }
    // φ(s) = Σ a_i s^{r_i - q} - c; beyond `far` the top term dominates.
    let phi = |s: f64| -> f64 {
        active.iter().map(|t| t.coefficient * s.powf(t.exponent - q)).sum::<f64>() - c
    };
    let others: f64 = active
        .iter()
        .filter(|t| t.exponent != top)
        .map(|t| t.coefficient.abs())
        .sum::<f64>()
        + c;
    let second = active
        .iter()
        .filter(|t| t.exponent != top)
        .map(|t| t.exponent - q)
        .fold(0.0, f64::max);
    let far = (others / a_top).powf(1.0 / (top - q - second)).max(1.0) * 2.0;
    let n = 4000;
    let (lo_exp, hi_exp) = (-12.0, far.log10());
    let grid = |k: usize| 10f64.powf(lo_exp + (hi_exp - lo_exp) * k as f64 / n as f64);
    let mut last_bad = None;
    for k in (0..=n).rev() {
        if phi(grid(k)) < 0.0 {
            last_bad = Some(k);
            break;
        }
    }
    let Some(k) = last_bad else {
        return Ok(0.0);
    };
    if k == n {
        return Err(Error::Hypothesis("truncation threshold search failed to bracket".into()));
    }
    let (mut a, mut b) = (grid(k), grid(k + 1));
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if phi(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
        if b - a <= 1e-15 * b {
            break;
        }
    }
    Ok(b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationBound {
    /// Threshold for `f(s)s ≥ c|s|^q`, with `c = 1` (Steklov) or `c = ζ` (Robin).
    pub m_interior: f64,
    /// Threshold for `g(s)s ≥ ζ|s|^q` (Steklov only).
    pub m_boundary: Option<f64>,
    /// `max(m_interior, m_boundary)`.
    pub m: f64,
    /// `1.5 · max(m, 1)`.
    pub upper: f64,
    pub corollary: CorollaryCheck,
}

/// Sign of the frozen reactions at the cut-offs: they must push minimizers
/// back into `[v̲, ū]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorollaryCheck {
    /// Interior reaction at `ū` (must be `≤ 0`).
    pub interior_at_upper: f64,
    /// Boundary reaction at `ū` (must be `≤ 0`).
    pub boundary_at_upper: f64,
    /// Interior reaction at `v̲` (must be `≥ 0`).
    pub interior_at_lower: f64,
    /// Boundary reaction at `v̲` (must be `≥ 0`).
    pub boundary_at_lower: f64,
    /// `f(ū)ū - c ū^q` (and the `g` analogue for Steklov), minimum of both.
    pub superlinear_margin: f64,
    pub holds: bool,
}

/// Constructive cut-off `ū` for the truncations.
pub fn compute_truncation_bound(
    spec: &NonlinearitySpec,
    cfg: &ExponentConfig,
    kind: TruncationKind,
    zeta: f64,
    beta: f64,
) -> Result<TruncationBound> {
    spec.validate_terms()?;
    let flags = spec.hypotheses(cfg);
    let q = cfg.q;
    let (m_interior, m_boundary) = match kind {
        TruncationKind::Steklov => {
            if !(flags.f_superlinear && flags.g_superlinear) {
                return Err(Error::Hypothesis(
                    "f and g must both be superlinear with respect to |s|^q".into(),
                ));
            }
            (
                superlinear_threshold(&spec.interior, 1.0, q)?,
                Some(superlinear_threshold(&spec.boundary, zeta, q)?),
            )
        }
        TruncationKind::Robin => {
            if !flags.f_superlinear {
                return Err(Error::Hypothesis(
                    "f must be superlinear with respect to |s|^q".into(),
                ));
            }
            (superlinear_threshold(&spec.interior, zeta, q)?, None)
        }
    };
    let m = m_interior.max(m_boundary.unwrap_or(0.0));
    let upper = UPPER_SAFETY_FACTOR * m.max(1.0);
    let t = TruncationSet {
        kind,
        sign: SignKind::Plus,
        upper,
        zeta,
        beta,
        theta: 1.0,
        p: cfg.p,
        q,
    };
    let (iu, bu) = (t.interior_reaction(spec, upper).0, t.boundary_reaction(spec, upper).0);
    let (il, bl) = (
        t.interior_reaction(spec, -upper).0,
        t.boundary_reaction(spec, -upper).0,
    );
    let c_int = if kind == TruncationKind::Steklov { 1.0 } else { zeta };
    let mut margin = spec.f(upper, xi_zero()) * upper - c_int * upper.powf(q);
    if kind == TruncationKind::Steklov {
        margin = margin.min(spec.g(upper) * upper - zeta * upper.powf(q));
    }
    let holds = iu <= 0.0 && bu <= 0.0 && il >= 0.0 && bl >= 0.0 && margin >= 0.0;
    Ok(TruncationBound {
        m_interior,
        m_boundary,
        m,
        upper,
        corollary: CorollaryCheck {
            interior_at_upper: iu,
            boundary_at_upper: bu,
            interior_at_lower: il,
            boundary_at_lower: bl,
            superlinear_margin: margin,
            holds,
        },
    })
}

struct TruncatedEnergy<'a> {
    t: &'a TruncationSet,
    spec: &'a NonlinearitySpec,
}

impl LocalEnergy for TruncatedEnergy<'_> {
    fn gradient_density(&self, mu: f64, s: f64) -> (f64, f64) {
        let (p, q) = (self.t.p, self.t.q);
        (
            s.powf(p) / p + mu * s.powf(q) / q,
            s.powf(p - 1.0) + mu * s.powf(q - 1.0),
        )
    }

    fn value_density(&self, pt: &InteriorPoint) -> (f64, f64) {
        let (p, q, th) = (self.t.p, self.t.q, self.t.theta);
        let s = pt.value;
        let a = s.abs();
        let (h, prim) = self.t.truncate(s, |v| self.t.interior_reaction(self.spec, v));
        (
            th * a.powf(p) / p + pt.weight * a.powf(q) / q - prim,
            th * signed_power(s, p) + pt.weight * signed_power(s, q) - h,
        )
    }

    fn boundary_density(&self, pt: &BoundaryPoint) -> (f64, f64) {
        let (h, prim) = self.t.truncate(pt.value, |v| self.t.boundary_reaction(self.spec, v));
        (-prim, -h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `1/p ∫|∇u|^p`.
    pub grad_p: f64,
    /// `1/q ∫μ|∇u|^q`.
    pub grad_q: f64,
    /// `ϑ/p ∫|u|^p`.
    pub val_p: f64,
    /// `1/q ∫μ|u|^q`.
    pub val_q: f64,
    pub interior_primitive: f64,
    pub boundary_primitive: f64,
    pub total: f64,
}

/// `Γ±` (Steklov kind) or `Π±` (Robin kind) term by term.
pub fn energy(
    mesh: &Mesh,
    rule: &QuadratureRule,
    u: &FemFunction,
    t: &TruncationSet,
    spec: &NonlinearitySpec,
    cfg: &ExponentConfig,
    mu: &WeightField,
) -> Result<EnergyBreakdown> {
    let (p, q) = (cfg.p, cfg.q);
    let m = modular_full(mesh, rule, u, cfg, mu)?;
    let interior_primitive =
        integrate_interior_weighted(mesh, rule, u, None, |pt| t.primitives(spec, pt.value).0)?;
    let boundary_primitive = integrate_boundary(mesh, rule, u, |pt| t.primitives(spec, pt.value).1)?;
    let grad_p = m.gradient_p_term / p;
    let grad_q = m.gradient_q_term / q;
    let val_p = t.theta * m.value_p_term / p;
    let val_q = m.value_q_term / q;
    Ok(EnergyBreakdown {
        grad_p,
        grad_q,
        val_p,
        val_q,
        interior_primitive,
        boundary_primitive,
        total: grad_p + grad_q + val_p + val_q - interior_primitive - boundary_primitive,
    })
}

/// Energy value and its gradient with respect to the nodal coefficients.
pub fn energy_with_gradient(
    mesh: &Mesh,
    rule: &QuadratureRule,
    u: &[f64],
    t: &TruncationSet,
    spec: &NonlinearitySpec,
    mu: &WeightField,
    grad: Option<&mut [f64]>,
) -> Result<f64> {
    let e = TruncatedEnergy { t, spec };
    evaluate_energy(mesh, rule, Some(mu.values()), u, &e, grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallTSearch {
    pub k: u32,
    pub t: f64,
    pub energy: f64,
}

/// First `t = 2^{-k}`, `k ≤ max_k`, with negative energy at `t·e` (`-t·e` for
/// the minus kind).
#[allow(clippy::too_many_arguments)]
pub fn small_t_search(
    mesh: &Mesh,
    rule: &QuadratureRule,
    t: &TruncationSet,
    spec: &NonlinearitySpec,
    mu: &WeightField,
    eigenfunction: &FemFunction,
    max_k: u32,
) -> Result<SmallTSearch> {
    let mut best = f64::INFINITY;
    for k in 0..=max_k {
        let s = 0.5f64.powi(k as i32);
        let u = eigenfunction.scaled(s * t.sign.sign());
        let e = energy_with_gradient(mesh, rule, u.coeffs(), t, spec, mu, None)?;
        if e < 0.0 {
            return Ok(SmallTSearch { k, t: s, energy: e });
        }
        best = best.min(e);
    }
    Err(Error::FailedNontriviality { best_energy: best })
}

#[derive(Debug, Clone)]
pub struct MinimizeOptions {
    pub descent: DescentOptions,
    pub seed: u64,
    /// Return [`Error::FailedNontriviality`] when no start reaches negative energy.
    pub require_nontrivial: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            descent: DescentOptions::default(),
            seed: 0,
            require_nontrivial: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub label: String,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Minimization {
    pub solution: FemFunction,
    pub breakdown: EnergyBreakdown,
    /// Max-norm of the energy gradient at the solution.
    pub residual: f64,
    pub converged: bool,
    /// Energy below zero, the value at `u = 0`.
    pub nontrivial: bool,
    pub chosen: String,
    pub starts: Vec<StartRecord>,
}

/// Multistart descent on the truncated energy.
///
/// Starts: a small constant, the scaled first eigenfunction (when given) and
/// a seeded random function in `[0, ū]`; all mirrored for the minus kind.
/// The lowest energy wins, ties broken by the smaller residual.
#[allow(clippy::too_many_arguments)]
pub fn minimize_energy(
    mesh: &Mesh,
    rule: &QuadratureRule,
    t: &TruncationSet,
    spec: &NonlinearitySpec,
    cfg: &ExponentConfig,
    mu: &WeightField,
    eigenfunction: Option<&FemFunction>,
    opts: &MinimizeOptions,
) -> Result<Minimization> {
    let n = mesh.num_vertices();
    let sign = t.sign.sign();
    let mut starts: Vec<(String, Vec<f64>)> = vec![(
        "small_constant".into(),
        vec![sign * 1e-2 * t.upper; n],
    )];
    if let Some(e) = eigenfunction {
        let scale = match small_t_search(mesh, rule, t, spec, mu, e, 26) {
            Ok(s) => s.t,
            Err(_) => 0.5 * t.upper / e.max_abs().max(f64::MIN_POSITIVE),
        };
        starts.push(("eigenfunction".into(), e.scaled(sign * scale).into_coeffs()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    starts.push((
        "random".into(),
        (0..n).map(|_| sign * rng.gen_range(0.0..t.upper)).collect(),
    ));

    let mut records = Vec::new();
    let mut best: Option<(usize, Vec<f64>, f64, f64, bool)> = None;
    for (i, (label, x0)) in starts.into_iter().enumerate() {
        let mut obj = |x: &[f64], g: &mut [f64]| energy_with_gradient(mesh, rule, x, t, spec, mu, Some(g));
        let out = minimize(&mut obj, x0, &opts.descent)?;
        records.push(StartRecord {
            label,
            energy: out.value,
            residual: out.gradient_norm,
            iterations: out.iterations,
            converged: out.converged,
        });
        let better = match &best {
            None => true,
            Some((_, _, e, r, _)) => {
                out.value < *e || (out.value == *e && out.gradient_norm < *r)
            }
        };
        if better {
            best = Some((i, out.x, out.value, out.gradient_norm, out.converged));
        }
    }
    let (i, x, value, residual, converged) = best.expect("at least one start");
    if opts.require_nontrivial && !(value < 0.0) {
        return Err(Error::FailedNontriviality { best_energy: value });
    }
    let solution = FemFunction::new(x)?;
    let breakdown = energy(mesh, rule, &solution, t, spec, cfg, mu)?;
    Ok(Minimization {
        solution,
        breakdown,
        residual,
        converged,
        nontrivial: value < 0.0,
        chosen: records[i].label.clone(),
        starts: records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantSignReport {
    pub min_nodal: f64,
    pub max_nodal: f64,
    pub lower_bound_holds: bool,
    pub upper_bound_holds: bool,
    /// `ρ̂_H` of the wrong-sign part.
    pub wrong_sign_modular: f64,
    pub sign_pure: bool,
    /// Max-norm weak residual of the untruncated problem.
    pub untruncated_residual: f64,
}

impl ConstantSignReport {
    pub fn bounds_hold(&self) -> bool {
        self.lower_bound_holds && self.upper_bound_holds && self.sign_pure
    }
}

/// Nodal bounds, sign purity and the untruncated weak residual.
pub fn verify_constant_sign(
    mesh: &Mesh,
    rule: &QuadratureRule,
    u: &FemFunction,
    t: &TruncationSet,
    spec: &NonlinearitySpec,
    cfg: &ExponentConfig,
    mu: &WeightField,
) -> Result<ConstantSignReport> {
    let (min, max) = (u.min(), u.max());
    let (lo, hi) = match t.sign {
        SignKind::Plus => (0.0, t.upper),
        SignKind::Minus => (t.lower(), 0.0),
    };
    let wrong = match t.sign {
        SignKind::Plus => u.neg_part(),
        SignKind::Minus => u.pos_part(),
    };
    let wrong_sign_modular = modular_full(mesh, rule, &wrong, cfg, mu)?.total;
    let (p, q, th) = (cfg.p, cfg.q, t.theta);
    let r = assemble_weak_form(
        mesh,
        rule,
        Some(mu.values()),
        u.coeffs(),
        |_, m, g| {
            let n = g[0].hypot(g[1]);
            if n == 0.0 {
                return [0.0, 0.0];
            }
            let c = n.powf(p - 2.0) + m * n.powf(q - 2.0);
            [c * g[0], c * g[1]]
        },
        |pt| {
            th * signed_power(pt.value, p) + pt.weight * signed_power(pt.value, q)
                - t.interior_reaction(spec, pt.value).0
        },
        |pt| -t.boundary_reaction(spec, pt.value).0,
    )?;
    Ok(ConstantSignReport {
        min_nodal: min,
        max_nodal: max,
        lower_bound_holds: min >= lo - SIGN_TOL,
        upper_bound_holds: max <= hi + SIGN_TOL,
        wrong_sign_modular,
        sign_pure: wrong.max_abs() <= SIGN_TOL && wrong_sign_modular <= SIGN_TOL,
        untruncated_residual: max_abs(&r),
    })
}
