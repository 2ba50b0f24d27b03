//! The acceptance suite: nine criteria, each returning a pass/fail line.
//!
//! Shared by `dpsolve suite` and the integration tests.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convection::{inner_energy, solve_convection, PicardOptions};
use crate::eigen::{
    dense_oracle, rayleigh_parts, robin_first_eigenpair, steklov_first_eigenpair, EigenOptions,
    EigenProblem, EigenResult,
};
use crate::error::Result;
use crate::fem::{integrate_boundary, FemFunction};
use crate::mesh::Mesh;
use crate::musielak::{check_modular_norm_relations, luxemburg_norm, modular_full, ExponentConfig, NormKind, WeightField};
use crate::operators::{
    apply_a, check_conditions, coercivity_check, frozen_load, CaseUsed, ConditionInputs,
    ConditionReport, GradientTerm, NonlinearitySpec, PowerTerm,
};
use crate::quadrature::QuadratureRule;
use crate::tolerances::{
    EIGEN_ORACLE_REL_TOL, FD_REL_TOL, FD_STEP, MONOTONICITY_SLACK, RAYLEIGH_SLACK, RESIDUAL_TOL,
    SIGN_TOL,
};
use crate::variational::{
    compute_truncation_bound, energy_with_gradient, minimize_energy, small_t_search,
    verify_constant_sign, MinimizeOptions, SignKind, TruncationKind, TruncationSet,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {} [{}] {} ({:.1} s): {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.seconds,
            self.detail
        )
    }
}

pub const TITLES: [&str; 9] = [
    "modular-norm relations",
    "eigenvalue oracle at p = 2",
    "Rayleigh inequalities",
    "operator pairing and monotonicity",
    "Steklov-type constant-sign solutions",
    "Robin-type constant-sign solutions",
    "convection existence and gate",
    "gradient checks",
    "coercivity certificates",
];

/// Runtime budget per criterion in seconds.
const BUDGETS: [f64; 9] = [10.0, 30.0, 120.0, 120.0, 60.0, 120.0, 120.0, 120.0, 120.0];

pub fn run_criterion(id: u8) -> CriterionOutcome {
    let start = Instant::now();
    let result = match id {
        1 => criterion_1(),
        2 => criterion_2(),
        3 => criterion_3(),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(),
        7 => criterion_7(),
        8 => criterion_8(),
        9 => criterion_9(),
        _ => Ok((false, format!("unknown criterion {id}"))),
    };
    let seconds = start.elapsed().as_secs_f64();
    let idx = (id.clamp(1, 9) - 1) as usize;
    let (mut passed, mut detail) = match result {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    if seconds > BUDGETS[idx] {
        passed = false;
        detail.push_str(&format!("; runtime {seconds:.1} s exceeds {} s", BUDGETS[idx]));
    }
    CriterionOutcome {
        id,
        title: TITLES[idx].to_string(),
        passed,
        detail,
        seconds,
    }
}

pub fn run_suite() -> Vec<CriterionOutcome> {
    (1..=9).map(run_criterion).collect()
}

fn random_function(rng: &mut ChaCha8Rng, n: usize) -> FemFunction {
    FemFunction::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("finite")
}

fn x1_weight(mesh: &Mesh) -> WeightField {
    WeightField::from_fn(mesh, |x| x[0]).expect("nonnegative")
}

fn pure(r: f64) -> Vec<PowerTerm> {
    vec![PowerTerm { coefficient: 1.0, exponent: r }]
}

fn criterion_1() -> Result<(bool, String)> {
    let mesh = Mesh::unit_square(8)?;
    let rule = QuadratureRule::standard();
    let cfg = ExponentConfig::planar(1.5, 1.8)?;
    let mu = x1_weight(&mesh);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = Vec::new();
    let (mut below, mut above) = (0, 0);
    for i in 0..200 {
        let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
        let u = random_function(&mut rng, mesh.num_vertices()).scaled(scale);
        let c = check_modular_norm_relations(&mesh, &rule, &u, &cfg, &mu)?;
        if c.norm < 1.0 {
            below += 1;
        } else {
            above += 1;
        }
        if !c.all_hold() {
            failures.push(format!("#{i}: {:?}", c.failed_clauses()));
        }
    }
    Ok((
        failures.is_empty(),
        format!(
            "200 functions ({below} with norm < 1, {above} with norm ≥ 1), {} failures {}",
            failures.len(),
            failures.join(", ")
        ),
    ))
}

fn criterion_2() -> Result<(bool, String)> {
    let mesh = Mesh::unit_square(16)?;
    let rule = QuadratureRule::standard();
    let opts = EigenOptions::default();
    let mut ok = true;
    let mut parts = Vec::new();
    let cases = [
        ("Robin β=1", EigenProblem::Robin { beta: 1.0 }),
        ("Robin β=100", EigenProblem::Robin { beta: 100.0 }),
        ("Steklov", EigenProblem::Steklov),
    ];
    for (name, problem) in cases {
        let e = crate::eigen::first_eigenpair(&mesh, &rule, 2.0, problem, &opts)?;
        let oracle = dense_oracle(&mesh, problem)?;
        let rel = (e.lambda - oracle).abs() / oracle;
        // Positivity is required at interior vertices. With consistent mass
        // and large β·h the exact discrete eigenvector dips below zero at
        // corners, which the dense oracle reproduces.
        let interior = e.min_interior_nodal(&mesh);
        let pass = rel <= EIGEN_ORACLE_REL_TOL && interior > 0.0;
        ok &= pass;
        parts.push(format!(
            "{name}: λ = {:.10} oracle {:.10} rel {rel:.2e} min interior nodal {interior:.3e} (all vertices {:.3e})",
            e.lambda,
            oracle,
            e.min_nodal()
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn criterion_3() -> Result<(bool, String)> {
    let mesh = Mesh::unit_square(8)?;
    let rule = QuadratureRule::standard();
    let (p, beta) = (1.5, 1.0);
    let opts = EigenOptions::default();
    let er = robin_first_eigenpair(&mesh, &rule, p, beta, &opts)?;
    let es = steklov_first_eigenpair(&mesh, &rule, p, &opts)?;
    let (lr, ls) = (er.lambda, es.lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_r, mut worst_s) = (f64::INFINITY, f64::INFINITY);
    for i in 0..100 {
        let noise = random_function(&mut rng, mesh.num_vertices());
        // Half generic, half small perturbations of the eigenfunctions where
        // the inequality is nearly tight.
        let (ur, us) = if i % 2 == 0 {
            (noise.clone(), noise)
        } else {
            let eps = 10f64.powf(rng.gen_range(-4.0..-1.0));
            (er.eigenfunction.axpy(eps, &noise), es.eigenfunction.axpy(eps, &noise))
        };
        // ∫|∇u|^p + β∫_∂|u|^p - λ^R ∫|u|^p ≥ 0, normalized by ∫|u|^p.
        let (num, den) = rayleigh_parts(&mesh, &rule, &ur, p, EigenProblem::Robin { beta })?;
        worst_r = worst_r.min((num - lr * den) / den);
        let (num, den) = rayleigh_parts(&mesh, &rule, &us, p, EigenProblem::Steklov)?;
        worst_s = worst_s.min((num - ls * den) / den);
    }
    Ok((
        worst_r >= -RAYLEIGH_SLACK && worst_s >= -RAYLEIGH_SLACK,
        format!("λR = {lr:.8}, λS = {ls:.8}; smallest normalized slack Robin {worst_r:.3e}, Steklov {worst_s:.3e}"),
    ))
}

fn criterion_4() -> Result<(bool, String)> {
    let mesh = Mesh::unit_square(8)?;
    let rule = QuadratureRule::standard();
    let cfg = ExponentConfig::planar(1.5, 1.8)?;
    let mu = x1_weight(&mesh);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = mesh.num_vertices();
    let mut worst_rel: f64 = 0.0;
    for _ in 0..100 {
        let u = random_function(&mut rng, n).scaled(10f64.powf(rng.gen_range(-1.0..1.0)));
        let a = apply_a(&mesh, &rule, &u, &u, &cfg, &mu)?;
        let m = modular_full(&mesh, &rule, &u, &cfg, &mu)?.total;
        worst_rel = worst_rel.max((a - m).abs() / m);
    }
    let mut worst_mono = f64::INFINITY;
    for i in 0..100 {
        let u = random_function(&mut rng, n);
        let mut v = random_function(&mut rng, n);
        if i % 2 == 1 {
            v = u.axpy(1e-4, &v);
        }
        let d = u.sub(&v);
        let m = apply_a(&mesh, &rule, &u, &d, &cfg, &mu)? - apply_a(&mesh, &rule, &v, &d, &cfg, &mu)?;
        worst_mono = worst_mono.min(m);
    }
    Ok((
        worst_rel <= 1e-12 && worst_mono >= -MONOTONICITY_SLACK,
        format!("max |⟨A(u),u⟩ - ρ̂(u)|/ρ̂(u) = {worst_rel:.2e}; min monotonicity pairing {worst_mono:.3e}"),
    ))
}

/// Standard Steklov-type scenario: `p = 1.4, q = 1.8, μ = x₁, ϑ = 1,
/// f = |s|s, g = |s|^{0.2}s, ζ = λS + 0.5` on `n = 16`.
pub struct SteklovScenario {
    pub mesh: Mesh,
    pub rule: QuadratureRule,
    pub cfg: ExponentConfig,
    pub mu: WeightField,
    pub spec: NonlinearitySpec,
    pub eigen: EigenResult,
    pub zeta: f64,
}

impl SteklovScenario {
    pub fn standard(n: usize) -> Result<Self> {
        let mesh = Mesh::unit_square(n)?;
        let rule = QuadratureRule::standard();
        let cfg = ExponentConfig::planar(1.4, 1.8)?;
        let mu = x1_weight(&mesh);
        let spec = NonlinearitySpec {
            interior: pure(3.0),
            boundary: pure(2.2),
            ..Default::default()
        };
        let eigen = steklov_first_eigenpair(&mesh, &rule, cfg.p, &EigenOptions::default())?;
        let zeta = eigen.lambda + 0.5;
        Ok(Self { mesh, rule, cfg, mu, spec, eigen, zeta })
    }

    pub fn truncation(&self, sign: SignKind) -> Result<TruncationSet> {
        let b = compute_truncation_bound(&self.spec, &self.cfg, TruncationKind::Steklov, self.zeta, 1.0)?;
        TruncationSet::new(TruncationKind::Steklov, sign, b.upper, self.zeta, 1.0, 1.0, &self.cfg)
    }
}

/// Standard Robin-type scenario: same exponents and weight, `f = |s|s`,
/// `β = 1, ϑ = 1, ζ = λR + ϑ + 0.5`.
pub struct RobinScenario {
    pub mesh: Mesh,
    pub rule: QuadratureRule,
    pub cfg: ExponentConfig,
    pub mu: WeightField,
    pub spec: NonlinearitySpec,
    pub eigen: EigenResult,
    pub zeta: f64,
    pub beta: f64,
    pub theta: f64,
}

impl RobinScenario {
    pub fn standard(n: usize) -> Result<Self> {
        let mesh = Mesh::unit_square(n)?;
        let rule = QuadratureRule::standard();
        let cfg = ExponentConfig::planar(1.4, 1.8)?;
        let mu = x1_weight(&mesh);
        let spec = NonlinearitySpec { interior: pure(3.0), ..Default::default() };
        let (beta, theta) = (1.0, 1.0);
        let eigen = robin_first_eigenpair(&mesh, &rule, cfg.p, beta, &EigenOptions::default())?;
        let zeta = eigen.lambda + theta + 0.5;
        Ok(Self { mesh, rule, cfg, mu, spec, eigen, zeta, beta, theta })
    }

    pub fn truncation(&self, sign: SignKind) -> Result<TruncationSet> {
        let b = compute_truncation_bound(&self.spec, &self.cfg, TruncationKind::Robin, self.zeta, self.beta)?;
        TruncationSet::new(TruncationKind::Robin, sign, b.upper, self.zeta, self.beta, self.theta, &self.cfg)
    }
}

fn constant_sign_pair(
    mesh: &Mesh,
    rule: &QuadratureRule,
    cfg: &ExponentConfig,
    mu: &WeightField,
    spec: &NonlinearitySpec,
    eigen: &EigenResult,
    plus: TruncationSet,
) -> Result<(bool, Vec<String>, FemFunction, FemFunction)> {
    let mut ok = true;
    let mut parts = Vec::new();
    let mut sols = Vec::new();
    for sign in [SignKind::Plus, SignKind::Minus] {
        let t = plus.with_sign(sign);
        let m = minimize_energy(mesh, rule, &t, spec, cfg, mu, Some(&eigen.eigenfunction), &MinimizeOptions::default())?;
        let r = verify_constant_sign(mesh, rule, &m.solution, &t, spec, cfg, mu)?;
        let pass = r.bounds_hold() && m.breakdown.total < 0.0 && r.untruncated_residual <= RESIDUAL_TOL;
        ok &= pass;
        parts.push(format!(
            "{sign:?}: nodal [{:.4}, {:.4}] in [{:.3}, {:.3}], energy {:.6e}, residual {:.2e}",
            r.min_nodal,
            r.max_nodal,
            if sign == SignKind::Plus { -SIGN_TOL } else { t.lower() },
            if sign == SignKind::Plus { t.upper } else { SIGN_TOL },
            m.breakdown.total,
            r.untruncated_residual
        ));
        sols.push(m.solution);
    }
    let v = sols.pop().expect("two solutions");
    let u = sols.pop().expect("two solutions");
    Ok((ok, parts, u, v))
}

fn criterion_5() -> Result<(bool, String)> {
    let s = SteklovScenario::standard(16)?;
    let flags = s.spec.hypotheses(&s.cfg);
    let plus = s.truncation(SignKind::Plus)?;
    let bound = compute_truncation_bound(&s.spec, &s.cfg, TruncationKind::Steklov, s.zeta, 1.0)?;
    let (mut ok, mut parts, u, v) =
        constant_sign_pair(&s.mesh, &s.rule, &s.cfg, &s.mu, &s.spec, &s.eigen, plus)?;
    ok &= flags.steklov_case() && bound.corollary.holds;
    let sym = u.axpy(1.0, &v).max_abs();
    if s.spec.is_odd() {
        ok &= sym <= 1e-6;
    }
    parts.insert(
        0,
        format!(
            "λS = {:.8}, ζ = {:.8}, ū = {}, hypotheses {}",
            s.eigen.lambda,
            s.zeta,
            plus.upper,
            flags.steklov_case()
        ),
    );
    parts.push(format!("max |u0 + v0| = {sym:.2e}"));
    Ok((ok, parts.join("; ")))
}

fn criterion_6() -> Result<(bool, String)> {
    let s = RobinScenario::standard(16)?;
    let flags = s.spec.hypotheses(&s.cfg);
    let plus = s.truncation(SignKind::Plus)?;
    let small = small_t_search(&s.mesh, &s.rule, &plus, &s.spec, &s.mu, &s.eigen.eigenfunction, 26)?;
    let (mut ok, mut parts, _, _) =
        constant_sign_pair(&s.mesh, &s.rule, &s.cfg, &s.mu, &s.spec, &s.eigen, plus)?;
    ok &= flags.robin_case() && small.k <= 26;
    parts.insert(
        0,
        format!(
            "λR = {:.8}, ζ = {:.8}, ū = {:.6}, hypotheses {}, small-t k = {} (Π⁺ = {:.3e})",
            s.eigen.lambda,
            s.zeta,
            plus.upper,
            flags.robin_case(),
            small.k,
            small.energy
        ),
    );
    Ok((ok, parts.join("; ")))
}

/// Convection scenario: `p = 1.6, q = 1.9, μ = x₁, β = 1`,
/// `f = 0.1 + b|ξ|^{0.6}`, `g = 0`, growth derived with `r1 = p`.
pub struct ConvectionScenario {
    pub mesh: Mesh,
    pub rule: QuadratureRule,
    pub cfg: ExponentConfig,
    pub mu: WeightField,
    pub beta: f64,
    pub robin: EigenResult,
    pub steklov: EigenResult,
}

impl ConvectionScenario {
    pub fn standard(n: usize) -> Result<Self> {
        let mesh = Mesh::unit_square(n)?;
        let rule = QuadratureRule::standard();
        let cfg = ExponentConfig::planar(1.6, 1.9)?;
        let mu = x1_weight(&mesh);
        let beta = 1.0;
        let opts = EigenOptions::default();
        let robin = robin_first_eigenpair(&mesh, &rule, cfg.p, beta, &opts)?;
        let steklov = steklov_first_eigenpair(&mesh, &rule, cfg.p, &opts)?;
        Ok(Self { mesh, rule, cfg, mu, beta, robin, steklov })
    }

    pub fn spec(&self, gradient_coefficient: f64) -> Result<NonlinearitySpec> {
        let mut spec = NonlinearitySpec {
            interior_constant: 0.1,
            gradient: vec![GradientTerm {
                coefficient: gradient_coefficient,
                exponent: self.cfg.p - 1.0,
            }],
            ..Default::default()
        };
        spec.growth = Some(spec.derive_growth(&self.cfg, self.cfg.p, 1.5)?);
        Ok(spec)
    }

    pub fn conditions(&self, spec: &NonlinearitySpec, zeta: f64) -> Result<ConditionReport> {
        let g = spec.growth.expect("derived growth");
        let p = self.cfg.p;
        let boundary_norm_term =
            integrate_boundary(&self.mesh, &self.rule, &self.robin.eigenfunction, |pt| pt.value.abs().powf(p))?;
        check_conditions(&ConditionInputs {
            b1: g.b1,
            b2: g.b2,
            b3: g.b3,
            beta: self.beta,
            zeta,
            lambda_robin: self.robin.lambda,
            lambda_steklov: self.steklov.lambda,
            theta: 1.0,
            boundary_norm_term,
        })
    }
}

fn criterion_7() -> Result<(bool, String)> {
    let s = ConvectionScenario::standard(16)?;
    let zeta = 0.2;
    let spec = s.spec(0.05)?;
    let report = s.conditions(&spec, zeta)?;
    let out = solve_convection(&s.mesh, &s.rule, &s.cfg, &s.mu, &spec, zeta, &report, &PicardOptions::default())?;
    let last = out.trace.last().map(|t| t.step_norm).unwrap_or(f64::NAN);
    let mut ok = report.cond_a
        && out.converged
        && last < 1e-8
        && out.residual <= RESIDUAL_TOL
        && out.norm0 > 1e-3;
    let mut detail = format!(
        "(A) slacks {:.6}, {:.6}; {} outer steps, last step {last:.2e}, residual {:.2e}, ‖û‖₀ = {:.6e}",
        report.cond_a_first.value,
        report.cond_a_second.value,
        out.trace.len(),
        out.residual,
        out.norm0
    );
    let bad = s.spec(5.0)?;
    let bad_report = s.conditions(&bad, zeta)?;
    let rejected = matches!(
        solve_convection(&s.mesh, &s.rule, &s.cfg, &s.mu, &bad, zeta, &bad_report, &PicardOptions::default()),
        Err(crate::Error::GateFailed(_))
    );
    ok &= !bad_report.cond_a && !bad_report.cond_b && rejected;
    detail.push_str(&format!(
        "; rejected set: (A) {:.3}, (B) {:.3}, gate {}",
        bad_report.cond_a_first.value,
        bad_report.cond_b_first.value,
        if rejected { "rejected" } else { "NOT rejected" }
    ));
    Ok((ok, detail))
}

/// Worst relative mismatch between the analytic directional derivative and
/// a central difference over `points` random points.
fn fd_worst<F>(n: usize, amplitude: f64, points: usize, seed: u64, mut f: F) -> Result<f64>
where
    F: FnMut(&[f64], Option<&mut [f64]>) -> Result<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut g = vec![0.0; n];
    for _ in 0..points {
        let x: Vec<f64> = (0..n).map(|_| amplitude * rng.gen_range(-1.0..1.0)).collect();
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        f(&x, Some(&mut g))?;
        let analytic: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let shift = |c: f64| -> Vec<f64> { x.iter().zip(&d).map(|(a, b)| a + c * b).collect() };
        let fd = (f(&shift(FD_STEP), None)? - f(&shift(-FD_STEP), None)?) / (2.0 * FD_STEP);
        worst = worst.max((fd - analytic).abs() / analytic.abs().max(1e-12));
    }
    Ok(worst)
}

fn criterion_8() -> Result<(bool, String)> {
    let n = 6;
    let st = SteklovScenario::standard(n)?;
    let ro = RobinScenario::standard(n)?;
    let nv = st.mesh.num_vertices();
    let mut parts = Vec::new();
    let mut worst_all: f64 = 0.0;
    for (name, sc_mesh, rule, mu, spec, t) in [
        ("Γ+", &st.mesh, &st.rule, &st.mu, &st.spec, st.truncation(SignKind::Plus)?),
        ("Γ-", &st.mesh, &st.rule, &st.mu, &st.spec, st.truncation(SignKind::Minus)?),
        ("Π+", &ro.mesh, &ro.rule, &ro.mu, &ro.spec, ro.truncation(SignKind::Plus)?),
        ("Π-", &ro.mesh, &ro.rule, &ro.mu, &ro.spec, ro.truncation(SignKind::Minus)?),
    ] {
        let w = fd_worst(nv, 1.2 * t.upper, 20, 8, |x, g| {
            energy_with_gradient(sc_mesh, rule, x, &t, spec, mu, g)
        })?;
        worst_all = worst_all.max(w);
        parts.push(format!("{name} {w:.2e}"));
    }
    let cs = ConvectionScenario::standard(n)?;
    let spec = cs.spec(0.05)?;
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let frozen = random_function(&mut rng, nv);
    let load = frozen_load(&cs.mesh, &cs.rule, &frozen, &cs.mu, &spec)?;
    let w = fd_worst(nv, 1.0, 20, 9, |x, g| {
        inner_energy(&cs.mesh, &cs.rule, &cs.cfg, &cs.mu, 0.2, &load, x, g)
    })?;
    worst_all = worst_all.max(w);
    parts.push(format!("inner convection {w:.2e}"));
    Ok((
        worst_all <= FD_REL_TOL,
        format!("worst relative mismatch over 20 points: {}", parts.join(", ")),
    ))
}

fn coercivity_batch(
    s: &ConvectionScenario,
    spec: &NonlinearitySpec,
    zeta: f64,
    slack: f64,
    seed: u64,
) -> Result<(usize, usize, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut held = 0;
    let mut worst_margin = f64::INFINITY;
    let mut positive = 0;
    for _ in 0..50 {
        let u = random_function(&mut rng, s.mesh.num_vertices());
        let norm = luxemburg_norm(&s.mesh, &s.rule, &u, &s.cfg, &s.mu, NormKind::Full)?;
        // Log-uniform norms so that the lower bound is positive for most samples.
        let target = 10f64.powf(rng.gen_range(0.05..3.0));
        let u = u.scaled(target / norm);
        let c = coercivity_check(&s.mesh, &s.rule, &u, &s.cfg, &s.mu, spec, zeta, slack)?;
        if c.holds && c.norm0 > 1.0 {
            held += 1;
        }
        if c.lower_bound > 0.0 {
            positive += 1;
        }
        worst_margin = worst_margin.min((c.pairing - c.lower_bound) / c.lower_bound.abs().max(1.0));
    }
    Ok((held, positive, worst_margin))
}

fn criterion_9() -> Result<(bool, String)> {
    let s = ConvectionScenario::standard(8)?;
    let spec = s.spec(0.05)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (zeta, expected, seed) in [(0.2, CaseUsed::A, 91), (0.0, CaseUsed::B, 92)] {
        let report = s.conditions(&spec, zeta)?;
        let Some((case, slack)) = report.coercivity_slack() else {
            ok = false;
            parts.push(format!("ζ = {zeta}: no condition holds"));
            continue;
        };
        let (held, positive, margin) = coercivity_batch(&s, &spec, zeta, slack, seed)?;
        let pass = case == expected && held == 50;
        ok &= pass;
        parts.push(format!(
            "ζ = {zeta}: case {case:?} slack {slack:.6}, {held}/50 hold ({positive} with positive bound), smallest relative margin {margin:.3e}"
        ));
    }
    Ok((ok, parts.join("; ")))
}
