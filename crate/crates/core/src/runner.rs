//! Scenario pipelines, run manifests and their re-verification.
//!
//! Output layout of one run:
//!
//! ```text
//! <out>/<name>-<unix seconds>/
//!     manifest.json
//!     fields/*.vtk
//!     tables/*.csv
//! ```
//!
//! Files are first written under `<dir>.partial` and the directory is renamed
//! once complete; [`load_manifest`] refuses `.partial` paths.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ScenarioConfig, Theorem, ZetaSpec};
use crate::convection::{solve_convection, PicardOptions, PicardState};
use crate::descent::DescentOptions;
use crate::eigen::{
    dense_oracle, first_eigenpair, rayleigh_parts, EigenOptions, EigenProblem, EigenResult,
    Normalization,
};
use crate::error::{Error, Result};
use crate::fem::{integrate_boundary, FemFunction};
use crate::io::{read_vtk, vtk_string};
use crate::mesh::Mesh;
use crate::musielak::{
    check_modular_norm_relations, check_scaling_trends, luxemburg_norm, modular_full,
    ExponentConfig, ModularReport, NormKind, WeightField,
};
use crate::operators::{
    check_conditions, coercivity_check, max_abs, script_a_residual, ConditionInputs,
    ConditionReport, GrowthBounds, HypothesisFlags, NonlinearitySpec,
};
use crate::quadrature::QuadratureRule;
use crate::tolerances::{EIGEN_ORACLE_REL_TOL, SIGN_TOL, UNIT_MODULAR_TOL};
use crate::variational::{
    compute_truncation_bound, energy, minimize_energy, small_t_search, verify_constant_sign,
    EnergyBreakdown, MinimizeOptions, SignKind, SmallTSearch, StartRecord, TruncationBound,
    TruncationKind, TruncationSet,
};

/// Largest dyadic exponent tried by the small-`t` search.
pub const SMALL_T_MAX_K: u32 = 26;
/// Lower bound on `‖û‖₀` accepted as nontrivial.
pub const NONTRIVIAL_NORM: f64 = 1e-3;
/// Symmetry tolerance between `u0` and `-v0` for odd nonlinearities.
pub const SYMMETRY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "≤",
            Relation::Gt => ">",
            Relation::Ge => "≥",
        }
    }
}

/// One checked inequality `value <relation> threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    /// Distance to the threshold, positive when the inequality holds.
    pub slack: f64,
    pub passed: bool,
    /// Counts towards the run's exit status.
    pub gated: bool,
}

impl Certificate {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, threshold: f64, gated: bool) -> Self {
        let (slack, passed) = match relation {
            Relation::Lt => (threshold - value, value < threshold),
            Relation::Le => (threshold - value, value <= threshold),
            Relation::Gt => (value - threshold, value > threshold),
            Relation::Ge => (value - threshold, value >= threshold),
        };
        Self {
            name: name.into(),
            value,
            relation,
            threshold,
            slack,
            passed: passed && value.is_finite(),
            gated,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {}: {:.6e} {} {:.6e} (slack {:+.3e}){}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.relation.symbol(),
            self.threshold,
            self.slack,
            if self.gated { "" } else { " [info]" }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenRecord {
    pub kind: String,
    pub p: f64,
    pub beta: Option<f64>,
    pub lambda: f64,
    pub normalization: Normalization,
    pub iterations: usize,
    pub residual: f64,
    pub min_nodal: f64,
    pub min_interior_nodal: f64,
    /// Dense `p = 2` oracle and relative deviation.
    pub oracle: Option<f64>,
    pub oracle_rel: Option<f64>,
    pub field: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub label: String,
    pub field: String,
    pub sign: Option<SignKind>,
    pub truncation: Option<TruncationSet>,
    pub energy: Option<EnergyBreakdown>,
    pub residual: f64,
    pub norm0: f64,
    pub min_nodal: f64,
    pub max_nodal: f64,
    pub chosen_start: Option<String>,
    pub starts: Vec<StartRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub theorem: Theorem,
    pub config: ScenarioConfig,
    pub code_version: String,
    pub eigen: Vec<EigenRecord>,
    pub zeta: Option<f64>,
    pub hypotheses: Option<HypothesisFlags>,
    pub growth: Option<GrowthBounds>,
    pub truncation_bound: Option<TruncationBound>,
    pub small_t: Option<SmallTSearch>,
    pub conditions: Option<ConditionReport>,
    pub gate_failure: Option<String>,
    pub solutions: Vec<SolutionRecord>,
    pub picard_trace: Vec<PicardState>,
    pub certificates: Vec<Certificate>,
    /// Paths relative to the run directory.
    pub outputs: Vec<String>,
    pub passed: bool,
    pub wall_time_s: f64,
}

impl RunManifest {
    fn new(config: &ScenarioConfig) -> Self {
        Self {
            name: config.name.clone(),
            theorem: config.theorem,
            config: config.clone(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            eigen: Vec::new(),
            zeta: None,
            hypotheses: None,
            growth: None,
            truncation_bound: None,
            small_t: None,
            conditions: None,
            gate_failure: None,
            solutions: Vec::new(),
            picard_trace: Vec::new(),
            certificates: Vec::new(),
            outputs: Vec::new(),
            passed: false,
            wall_time_s: 0.0,
        }
    }

    fn certify(&mut self, c: Certificate) {
        self.certificates.push(c);
    }

    fn finish(&mut self) {
        self.passed = self.gate_failure.is_none()
            && self.certificates.iter().filter(|c| c.gated).all(|c| c.passed);
    }
}

/// A file produced by a run, relative to the run directory.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub path: String,
    pub contents: String,
}

struct Context {
    mesh: Mesh,
    rule: QuadratureRule,
    mu: WeightField,
}

impl Context {
    fn new(config: &ScenarioConfig) -> Result<Self> {
        let mesh = Mesh::unit_square(config.n)?;
        let mu = config.mu.build(&mesh)?;
        Ok(Self { mesh, rule: QuadratureRule::standard(), mu })
    }
}

fn field_file(ctx: &Context, name: &str, u: &FemFunction, files: &mut Vec<OutputFile>) -> Result<String> {
    let path = format!("fields/{name}.vtk");
    files.push(OutputFile { path: path.clone(), contents: vtk_string(&ctx.mesh, name, u)? });
    Ok(path)
}

fn table_file(path: &str, header: &str, rows: Vec<String>, files: &mut Vec<OutputFile>) {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    files.push(OutputFile { path: format!("tables/{path}"), contents: s });
}

fn eigen_options(config: &ScenarioConfig) -> EigenOptions {
    EigenOptions { tol: config.tolerances.eigen, ..EigenOptions::default() }
}

fn boundary_p_norm(ctx: &Context, u: &FemFunction, p: f64) -> Result<f64> {
    integrate_boundary(&ctx.mesh, &ctx.rule, u, |pt| pt.value.abs().powf(p))
}

fn eigen_stage(
    ctx: &Context,
    config: &ScenarioConfig,
    problem: EigenProblem,
    m: &mut RunManifest,
    files: &mut Vec<OutputFile>,
) -> Result<EigenResult> {
    let e = first_eigenpair(&ctx.mesh, &ctx.rule, config.p, problem, &eigen_options(config))
        .map_err(|err| err.in_stage("eigen"))?;
    let (kind, beta) = match problem {
        EigenProblem::Robin { beta } => ("robin", Some(beta)),
        EigenProblem::Steklov => ("steklov", None),
    };
    let (oracle, oracle_rel) = if config.p == 2.0 {
        let o = dense_oracle(&ctx.mesh, problem).map_err(|err| err.in_stage("oracle"))?;
        (Some(o), Some((e.lambda - o).abs() / o))
    } else {
        (None, None)
    };
    let (_, den) = rayleigh_parts(&ctx.mesh, &ctx.rule, &e.eigenfunction, config.p, problem)?;
    m.certify(Certificate::new(
        format!("{kind}: normalization |den - 1|"),
        (den - 1.0).abs(),
        Relation::Le,
        UNIT_MODULAR_TOL,
        true,
    ));
    let interior = e.min_interior_nodal(&ctx.mesh);
    m.certify(Certificate::new(format!("{kind}: min interior nodal value"), interior, Relation::Gt, 0.0, true));
    m.certify(Certificate::new(format!("{kind}: min nodal value, all vertices"), e.min_nodal(), Relation::Gt, 0.0, false));
    if let Some(rel) = oracle_rel {
        m.certify(Certificate::new(
            format!("{kind}: relative deviation from dense oracle"),
            rel,
            Relation::Le,
            EIGEN_ORACLE_REL_TOL,
            true,
        ));
    }
    let field = field_file(ctx, &format!("{kind}_eigenfunction"), &e.eigenfunction, files)?;
    m.eigen.push(EigenRecord {
        kind: kind.into(),
        p: config.p,
        beta,
        lambda: e.lambda,
        normalization: e.normalization,
        iterations: e.iterations,
        residual: e.residual,
        min_nodal: e.min_nodal(),
        min_interior_nodal: interior,
        oracle,
        oracle_rel,
        field,
    });
    Ok(e)
}

fn run_eigen_only(ctx: &Context, config: &ScenarioConfig, m: &mut RunManifest, files: &mut Vec<OutputFile>) -> Result<()> {
    eigen_stage(ctx, config, EigenProblem::Robin { beta: config.beta }, m, files)?;
    eigen_stage(ctx, config, EigenProblem::Steklov, m, files)?;
    let rows = m
        .eigen
        .iter()
        .map(|e| {
            format!(
                "{},{:.17e},{},{},{},{:.6e}",
                e.kind,
                e.lambda,
                e.oracle.map(|o| format!("{o:.17e}")).unwrap_or_default(),
                e.oracle_rel.map(|o| format!("{o:.6e}")).unwrap_or_default(),
                e.iterations,
                e.residual
            )
        })
        .collect();
    table_file("eigen.csv", "kind,lambda,oracle,oracle_rel,iterations,residual", rows, files);
    Ok(())
}

fn space_check_functions(config: &ScenarioConfig, n: usize) -> Vec<FemFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    (0..config.samples)
        .map(|_| {
            let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
            FemFunction::new((0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()).expect("finite")
        })
        .collect()
}

/// `(all clauses hold count, trend count, rows)`.
fn space_checks(ctx: &Context, config: &ScenarioConfig, cfg: &ExponentConfig) -> Result<(usize, usize, Vec<String>)> {
    let funcs = space_check_functions(config, ctx.mesh.num_vertices());
    let mut held = 0;
    let mut trends = 0;
    let mut rows = Vec::new();
    for (i, u) in funcs.iter().enumerate() {
        if u.is_zero() {
            continue;
        }
        let c = check_modular_norm_relations(&ctx.mesh, &ctx.rule, u, cfg, &ctx.mu)?;
        if c.all_hold() {
            held += 1;
        }
        let r: ModularReport = modular_full(&ctx.mesh, &ctx.rule, u, cfg, &ctx.mu)?;
        rows.push(format!("{i},{},{}", r.csv_row(c.norm), c.all_hold()));
        if i < 10 {
            let t = check_scaling_trends(&ctx.mesh, &ctx.rule, u, cfg, &ctx.mu, 6)?;
            if t.vanishing && t.blowing_up {
                trends += 1;
            }
        }
    }
    Ok((held, trends, rows))
}

fn run_space_checks(ctx: &Context, config: &ScenarioConfig, m: &mut RunManifest, files: &mut Vec<OutputFile>) -> Result<()> {
    let cfg = config.exponents()?;
    let (held, trends, rows) = space_checks(ctx, config, &cfg).map_err(|e| e.in_stage("space_checks"))?;
    let total = rows.len();
    m.certify(Certificate::new("clauses (i)-(iv) hold on every sample", held as f64, Relation::Ge, total as f64, true));
    let tried = total.min(10);
    m.certify(Certificate::new("scaling trends (v)-(vi)", trends as f64, Relation::Ge, tried as f64, true));
    table_file(
        "modular.csv",
        &format!("sample,{},all_hold", ModularReport::CSV_HEADER),
        rows,
        files,
    );
    Ok(())
}

fn resolve_zeta(config: &ScenarioConfig, base: f64) -> f64 {
    match config.zeta.expect("validated") {
        ZetaSpec::Value(z) => z,
        ZetaSpec::Margin(margin) => base + margin,
    }
}

fn run_constant_sign(
    ctx: &Context,
    config: &ScenarioConfig,
    kind: TruncationKind,
    m: &mut RunManifest,
    files: &mut Vec<OutputFile>,
) -> Result<()> {
    let cfg = config.exponents()?;
    let spec = config.nonlinearity().map_err(|e| e.in_stage("growth"))?;
    let flags = spec.hypotheses(&cfg);
    m.hypotheses = Some(flags);
    let hyp_ok = match kind {
        TruncationKind::Steklov => flags.steklov_case(),
        TruncationKind::Robin => flags.robin_case(),
    };
    if !hyp_ok {
        return Err(Error::Hypothesis(format!("hypothesis flags do not cover this theorem: {flags:?}")).in_stage("hypotheses"));
    }

    let (problem, base, gate_name) = match kind {
        TruncationKind::Steklov => (EigenProblem::Steklov, 0.0, "ζ - λS"),
        TruncationKind::Robin => (EigenProblem::Robin { beta: config.beta }, config.theta, "ζ - λR - ϑ"),
    };
    let eigen = eigen_stage(ctx, config, problem, m, files)?;
    let threshold = eigen.lambda + base;
    let zeta = resolve_zeta(config, threshold);
    m.zeta = Some(zeta);
    let gate = Certificate::new(gate_name, zeta - threshold, Relation::Gt, 0.0, true);
    let gate_ok = gate.passed;
    m.certify(gate);
    if !gate_ok {
        m.gate_failure = Some(format!("{gate_name} = {:.6e} is not positive", zeta - threshold));
        return Ok(());
    }

    let bound = compute_truncation_bound(&spec, &cfg, kind, zeta, config.beta).map_err(|e| e.in_stage("truncation"))?;
    m.certify(Certificate::new(
        "cut-off reactions push back into [v̲, ū] (superlinear margin)",
        bound.corollary.superlinear_margin,
        Relation::Ge,
        0.0,
        true,
    ));
    let plus = TruncationSet::new(kind, SignKind::Plus, bound.upper, zeta, config.beta, config.theta, &cfg)?;
    m.truncation_bound = Some(bound);

    let small = small_t_search(&ctx.mesh, &ctx.rule, &plus, &spec, &ctx.mu, &eigen.eigenfunction, SMALL_T_MAX_K);
    match small {
        Ok(s) => {
            m.certify(Certificate::new("small-t search: energy at 2^-k eigenfunction", s.energy, Relation::Lt, 0.0, true));
            m.small_t = Some(s);
        }
        Err(Error::FailedNontriviality { best_energy }) => {
            m.certify(Certificate::new("small-t search: energy at 2^-k eigenfunction", best_energy, Relation::Lt, 0.0, true));
        }
        Err(e) => return Err(e.in_stage("small_t")),
    }

    let opts = MinimizeOptions {
        descent: DescentOptions { gradient_tol: config.tolerances.gradient, ..DescentOptions::default() },
        seed: config.seed,
        require_nontrivial: false,
    };
    let energy_name = match kind {
        TruncationKind::Steklov => "Γ",
        TruncationKind::Robin => "Π",
    };
    let mut sols = Vec::new();
    let mut start_rows = Vec::new();
    for (sign, label) in [(SignKind::Plus, "u0"), (SignKind::Minus, "v0")] {
        let t = plus.with_sign(sign);
        let res = minimize_energy(&ctx.mesh, &ctx.rule, &t, &spec, &cfg, &ctx.mu, Some(&eigen.eigenfunction), &opts)
            .map_err(|e| e.in_stage("minimize"))?;
        let rep = verify_constant_sign(&ctx.mesh, &ctx.rule, &res.solution, &t, &spec, &cfg, &ctx.mu)?;
        let sym = if sign == SignKind::Plus { "+" } else { "-" };
        m.certify(Certificate::new(format!("{label}: energy {energy_name}{sym}"), res.breakdown.total, Relation::Lt, 0.0, true));
        match sign {
            SignKind::Plus => {
                m.certify(Certificate::new(format!("{label}: min nodal value"), rep.min_nodal, Relation::Ge, -SIGN_TOL, true));
                m.certify(Certificate::new(format!("{label}: max nodal value - ū"), rep.max_nodal - t.upper, Relation::Le, SIGN_TOL, true));
            }
            SignKind::Minus => {
                m.certify(Certificate::new(format!("{label}: max nodal value"), rep.max_nodal, Relation::Le, SIGN_TOL, true));
                m.certify(Certificate::new(format!("{label}: v̲ - min nodal value"), t.lower() - rep.min_nodal, Relation::Le, SIGN_TOL, true));
            }
        }
        m.certify(Certificate::new(format!("{label}: wrong-sign modular"), rep.wrong_sign_modular, Relation::Le, SIGN_TOL, true));
        m.certify(Certificate::new(
            format!("{label}: untruncated weak residual"),
            rep.untruncated_residual,
            Relation::Le,
            config.tolerances.residual,
            true,
        ));
        for s in &res.starts {
            start_rows.push(format!(
                "{label},{},{:.17e},{:.6e},{},{}",
                s.label, s.energy, s.residual, s.iterations, s.converged
            ));
        }
        let field = field_file(ctx, label, &res.solution, files)?;
        let norm0 = luxemburg_norm(&ctx.mesh, &ctx.rule, &res.solution, &cfg, &ctx.mu, NormKind::Full)?;
        m.solutions.push(SolutionRecord {
            label: label.into(),
            field,
            sign: Some(sign),
            truncation: Some(t),
            energy: Some(res.breakdown),
            residual: rep.untruncated_residual,
            norm0,
            min_nodal: rep.min_nodal,
            max_nodal: rep.max_nodal,
            chosen_start: Some(res.chosen.clone()),
            starts: res.starts.clone(),
        });
        sols.push(res.solution);
    }
    if spec.is_odd() {
        let d = sols[0].axpy(1.0, &sols[1]).max_abs();
        m.certify(Certificate::new("symmetry max |u0 + v0|", d, Relation::Le, SYMMETRY_TOL, true));
    }
    table_file("starts.csv", "solution,start,energy,residual,iterations,converged", start_rows, files);
    let energy_rows = m
        .solutions
        .iter()
        .filter_map(|s| {
            s.energy.map(|e| {
                format!(
                    "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                    s.label, e.grad_p, e.grad_q, e.val_p, e.val_q, e.interior_primitive, e.boundary_primitive, e.total
                )
            })
        })
        .collect();
    table_file(
        "energy.csv",
        "solution,grad_p,grad_q,val_p,val_q,interior_primitive,boundary_primitive,total",
        energy_rows,
        files,
    );
    Ok(())
}

fn convection_conditions(
    ctx: &Context,
    config: &ScenarioConfig,
    spec: &NonlinearitySpec,
    zeta: f64,
    robin: &EigenResult,
    lambda_steklov: f64,
) -> Result<ConditionReport> {
    let g = spec.growth.ok_or_else(|| Error::Hypothesis("no growth constants".into()))?;
    check_conditions(&ConditionInputs {
        b1: g.b1,
        b2: g.b2,
        b3: g.b3,
        beta: config.beta,
        zeta,
        lambda_robin: robin.lambda,
        lambda_steklov,
        theta: config.theta,
        boundary_norm_term: boundary_p_norm(ctx, &robin.eigenfunction, config.p)?,
    })
}

fn condition_certificates(m: &mut RunManifest, r: &ConditionReport) {
    m.certify(Certificate::new("(A) 1 - b1 - b2/λR", r.cond_a_first.value, Relation::Gt, 0.0, false));
    m.certify(Certificate::new("(A) ζ - b2β/λR - b3", r.cond_a_second.value, Relation::Gt, 0.0, false));
    m.certify(Certificate::new("(B) 1 - max(b1, b2) - b3/λS", r.cond_b_first.value, Relation::Gt, 0.0, false));
    m.certify(Certificate::new("(B) ζ", r.cond_b_second.value, Relation::Ge, 0.0, false));
    m.certify(Certificate::new("(β + ζ)‖uR‖^p_∂ - λR - ϑ", r.boundary_norm_condition.value, Relation::Gt, 0.0, false));
    m.certify(Certificate::new("(A) or (B) holds", if r.any() { 1.0 } else { 0.0 }, Relation::Ge, 1.0, true));
}

fn run_convection(ctx: &Context, config: &ScenarioConfig, m: &mut RunManifest, files: &mut Vec<OutputFile>) -> Result<()> {
    let cfg = config.exponents()?;
    let spec = config.nonlinearity().map_err(|e| e.in_stage("growth"))?;
    m.growth = spec.growth;
    m.hypotheses = Some(spec.hypotheses(&cfg));
    let robin = eigen_stage(ctx, config, EigenProblem::Robin { beta: config.beta }, m, files)?;
    let steklov = eigen_stage(ctx, config, EigenProblem::Steklov, m, files)?;
    let zeta = resolve_zeta(config, 0.0);
    m.zeta = Some(zeta);
    let report = convection_conditions(ctx, config, &spec, zeta, &robin, steklov.lambda)
        .map_err(|e| e.in_stage("conditions"))?;
    condition_certificates(m, &report);
    m.conditions = Some(report.clone());
    if !report.any() && !config.allow_uncertified {
        m.gate_failure = Some(report.violations().join("; "));
        return Ok(());
    }
    let opts = PicardOptions {
        step_tol: config.tolerances.picard_step,
        damping: config.damping,
        inner: DescentOptions { gradient_tol: config.tolerances.inner_gradient, ..DescentOptions::default() },
        allow_uncertified: config.allow_uncertified,
        ..PicardOptions::default()
    };
    let out = solve_convection(&ctx.mesh, &ctx.rule, &cfg, &ctx.mu, &spec, zeta, &report, &opts)
        .map_err(|e| e.in_stage("picard"))?;
    let last = out.trace.last().map_or(f64::INFINITY, |s| s.step_norm);
    m.certify(Certificate::new("Picard final step norm", last, Relation::Lt, config.tolerances.picard_step, true));
    m.certify(Certificate::new("weak residual max |⟨𝒜(û), φ_i⟩|", out.residual, Relation::Le, config.tolerances.residual, true));
    m.certify(Certificate::new("nontriviality ‖û‖₀", out.norm0, Relation::Gt, NONTRIVIAL_NORM, true));
    if let (Some(b), Some((_, slack))) = (out.a_priori_bound, report.coercivity_slack()) {
        m.certify(Certificate::new("a priori bound ‖û‖₀ - R", out.norm0 - b, Relation::Le, 0.0, true));
        let c = coercivity_check(&ctx.mesh, &ctx.rule, &out.solution, &cfg, &ctx.mu, &spec, zeta, slack)?;
        m.certify(Certificate::new("coercivity at û: ⟨𝒜û, û⟩ - lower bound", c.pairing - c.lower_bound, Relation::Ge, 0.0, false));
    }
    let field = field_file(ctx, "u_hat", &out.solution, files)?;
    m.solutions.push(SolutionRecord {
        label: "u_hat".into(),
        field,
        sign: None,
        truncation: None,
        energy: None,
        residual: out.residual,
        norm0: out.norm0,
        min_nodal: out.solution.min(),
        max_nodal: out.solution.max(),
        chosen_start: None,
        starts: Vec::new(),
    });
    table_file(
        "picard_trace.csv",
        PicardState::CSV_HEADER,
        out.trace.iter().map(PicardState::csv_row).collect(),
        files,
    );
    m.picard_trace = out.trace;
    Ok(())
}

/// Runs a scenario in memory. The manifest's `outputs` lists the returned
/// files; `wall_time_s` is the only nondeterministic field.
pub fn execute(config: &ScenarioConfig) -> Result<(RunManifest, Vec<OutputFile>)> {
    config.validate()?;
    let start = Instant::now();
    let ctx = Context::new(config)?;
    let mut m = RunManifest::new(config);
    let mut files = Vec::new();
    match config.theorem {
        Theorem::EigenOnly => run_eigen_only(&ctx, config, &mut m, &mut files)?,
        Theorem::SpaceChecks => run_space_checks(&ctx, config, &mut m, &mut files)?,
        Theorem::T41 => run_constant_sign(&ctx, config, TruncationKind::Steklov, &mut m, &mut files)?,
        Theorem::T43 => run_constant_sign(&ctx, config, TruncationKind::Robin, &mut m, &mut files)?,
        Theorem::T31 => run_convection(&ctx, config, &mut m, &mut files)?,
    }
    files.push(OutputFile { path: "config.txt".into(), contents: config.to_text() });
    m.outputs = files.iter().map(|f| f.path.clone()).collect();
    m.finish();
    m.wall_time_s = start.elapsed().as_secs_f64();
    Ok((m, files))
}

fn unique_dir(root: &Path, name: &str) -> PathBuf {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut k = 0;
    loop {
        let base = if k == 0 { format!("{name}-{secs}") } else { format!("{name}-{secs}-{k}") };
        let dir = root.join(&base);
        let partial = root.join(format!("{base}.partial"));
        if !dir.exists() && !partial.exists() {
            return dir;
        }
        k += 1;
    }
}

/// Writes the run into a fresh directory under `root` and returns its path.
pub fn write_run(root: &Path, manifest: &RunManifest, files: &[OutputFile]) -> Result<PathBuf> {
    std::fs::create_dir_all(root)?;
    let dir = unique_dir(root, &manifest.name);
    let partial = PathBuf::from(format!("{}.partial", dir.display()));
    std::fs::create_dir_all(partial.join("fields"))?;
    std::fs::create_dir_all(partial.join("tables"))?;
    for f in files {
        std::fs::write(partial.join(&f.path), &f.contents)?;
    }
    std::fs::write(partial.join("manifest.json"), serde_json::to_string_pretty(manifest)?)?;
    std::fs::rename(&partial, &dir)?;
    Ok(dir)
}

/// `run <config>`: execute and write atomically.
pub fn run(config_path: &Path, out_root: &Path) -> Result<(RunManifest, PathBuf)> {
    let config = ScenarioConfig::read(config_path)?;
    let (manifest, files) = execute(&config)?;
    let dir = write_run(out_root, &manifest, &files)?;
    Ok((manifest, dir))
}

/// Accepts a run directory or its `manifest.json`; partial runs are refused.
pub fn load_manifest(path: &Path) -> Result<(RunManifest, PathBuf)> {
    let file = if path.is_dir() { path.join("manifest.json") } else { path.to_path_buf() };
    let dir = file.parent().map(Path::to_path_buf).unwrap_or_default();
    if dir.extension().is_some_and(|e| e == "partial") {
        return Err(Error::InvalidArgument(format!("{} is an incomplete run", dir.display())));
    }
    let text = std::fs::read_to_string(&file)?;
    Ok((serde_json::from_str(&text)?, dir))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub certificates: Vec<Certificate>,
    pub passed: bool,
}

fn load_field(dir: &Path, rel: &str, mesh: &Mesh) -> Result<FemFunction> {
    let (m, u) = read_vtk(&dir.join(rel))?;
    if m.vertices() != mesh.vertices() || m.triangles() != mesh.triangles() {
        return Err(Error::InvalidMesh(format!("{rel}: stored mesh differs from the configured mesh")));
    }
    Ok(u)
}

/// `verify <manifest>`: recomputes the certificates from the stored fields.
pub fn verify(path: &Path) -> Result<VerifyReport> {
    let (m, dir) = load_manifest(path)?;
    let config = &m.config;
    config.validate()?;
    let ctx = Context::new(config)?;
    let mut certs = Vec::new();
    if m.gate_failure.is_some() {
        certs.push(Certificate::new("run passed its gate", 0.0, Relation::Ge, 1.0, true));
    }

    let mut lambdas = Vec::new();
    for e in &m.eigen {
        let u = load_field(&dir, &e.field, &ctx.mesh)?;
        let problem = match e.beta {
            Some(beta) => EigenProblem::Robin { beta },
            None => EigenProblem::Steklov,
        };
        let (num, den) = rayleigh_parts(&ctx.mesh, &ctx.rule, &u, e.p, problem)?;
        let lambda = num / den;
        certs.push(Certificate::new(
            format!("{}: stored λ vs Rayleigh quotient of stored field (relative)", e.kind),
            (lambda - e.lambda).abs() / e.lambda,
            Relation::Le,
            1e-12,
            true,
        ));
        let mask = ctx.mesh.boundary_vertex_mask();
        let interior = u
            .coeffs()
            .iter()
            .zip(&mask)
            .filter(|(_, b)| !**b)
            .map(|(v, _)| *v)
            .fold(f64::INFINITY, f64::min);
        certs.push(Certificate::new(format!("{}: min interior nodal value", e.kind), interior, Relation::Gt, 0.0, true));
        if let Some(o) = e.oracle {
            certs.push(Certificate::new(
                format!("{}: deviation from dense oracle", e.kind),
                (lambda - o).abs() / o,
                Relation::Le,
                EIGEN_ORACLE_REL_TOL,
                true,
            ));
        }
        lambdas.push((e.kind.clone(), u, lambda));
    }

    match config.theorem {
        Theorem::EigenOnly => {}
        Theorem::SpaceChecks => {
            let cfg = config.exponents()?;
            let (held, _, rows) = space_checks(&ctx, config, &cfg)?;
            certs.push(Certificate::new("clauses (i)-(iv) on regenerated samples", held as f64, Relation::Ge, rows.len() as f64, true));
        }
        Theorem::T41 | Theorem::T43 => {
            let cfg = config.exponents()?;
            let spec = config.nonlinearity()?;
            let mut sols = Vec::new();
            for s in &m.solutions {
                let t = s.truncation.ok_or_else(|| Error::InvalidArgument("solution lacks its truncation".into()))?;
                let u = load_field(&dir, &s.field, &ctx.mesh)?;
                let rep = verify_constant_sign(&ctx.mesh, &ctx.rule, &u, &t, &spec, &cfg, &ctx.mu)?;
                let e = energy(&ctx.mesh, &ctx.rule, &u, &t, &spec, &cfg, &ctx.mu)?;
                certs.push(Certificate::new(format!("{}: energy", s.label), e.total, Relation::Lt, 0.0, true));
                certs.push(Certificate::new(
                    format!("{}: nodal bounds and sign purity", s.label),
                    if rep.bounds_hold() { 1.0 } else { 0.0 },
                    Relation::Ge,
                    1.0,
                    true,
                ));
                certs.push(Certificate::new(
                    format!("{}: untruncated weak residual", s.label),
                    rep.untruncated_residual,
                    Relation::Le,
                    config.tolerances.residual,
                    true,
                ));
                sols.push(u);
            }
            if spec.is_odd() && sols.len() == 2 {
                certs.push(Certificate::new(
                    "symmetry max |u0 + v0|",
                    sols[0].axpy(1.0, &sols[1]).max_abs(),
                    Relation::Le,
                    SYMMETRY_TOL,
                    true,
                ));
            }
        }
        Theorem::T31 => {
            let cfg = config.exponents()?;
            let spec = config.nonlinearity()?;
            let zeta = m.zeta.ok_or_else(|| Error::InvalidArgument("manifest lacks ζ".into()))?;
            let robin = lambdas.iter().find(|l| l.0 == "robin");
            let steklov = lambdas.iter().find(|l| l.0 == "steklov");
            if let (Some(r), Some(s)) = (robin, steklov) {
                let er = EigenResult {
                    lambda: r.2,
                    eigenfunction: r.1.clone(),
                    normalization: Normalization::Robin,
                    iterations: 0,
                    residual: 0.0,
                };
                let report = convection_conditions(&ctx, config, &spec, zeta, &er, s.2)?;
                certs.push(Certificate::new("(A) or (B) from stored eigenfunctions", if report.any() { 1.0 } else { 0.0 }, Relation::Ge, 1.0, true));
            }
            for s in &m.solutions {
                let u = load_field(&dir, &s.field, &ctx.mesh)?;
                let r = max_abs(&script_a_residual(&ctx.mesh, &ctx.rule, &u, &cfg, &ctx.mu, &spec, zeta)?);
                certs.push(Certificate::new("weak residual max |⟨𝒜(û), φ_i⟩|", r, Relation::Le, config.tolerances.residual, true));
                let n0 = luxemburg_norm(&ctx.mesh, &ctx.rule, &u, &cfg, &ctx.mu, NormKind::Full)?;
                certs.push(Certificate::new("nontriviality ‖û‖₀", n0, Relation::Gt, NONTRIVIAL_NORM, true));
            }
        }
    }
    let passed = certs.iter().filter(|c| c.gated).all(|c| c.passed);
    Ok(VerifyReport { certificates: certs, passed })
}

/// One-page text summary of a manifest.
pub fn emit_report(m: &RunManifest) -> String {
    let mut s = String::new();
    let mut line = |t: String| {
        s.push_str(&t);
        s.push('\n');
    };
    line(format!("run {} ({}), version {}", m.name, m.theorem.as_str(), m.code_version));
    line(format!(
        "mesh n = {}, p = {}, q = {}, μ = {:?}",
        m.config.n,
        m.config.p,
        m.config.q.map_or("-".into(), |q| q.to_string()),
        m.config.mu
    ));
    for e in &m.eigen {
        let norm = match e.normalization {
            Normalization::Robin => "normalized by ‖u‖_p = 1",
            Normalization::Steklov => "normalized by ‖u‖_{p,∂Ω} = 1",
        };
        let oracle = match (e.oracle, e.oracle_rel) {
            (Some(o), Some(r)) => format!(", dense oracle {o:.10} (relative deviation {r:.2e})"),
            _ => String::new(),
        };
        let beta = e.beta.map_or(String::new(), |b| format!(" β = {b}"));
        line(format!("λ {}{beta} = {:.10}, {norm}{oracle}", e.kind, e.lambda));
    }
    if let Some(z) = m.zeta {
        line(format!("ζ = {z:.10}"));
    }
    if let Some(b) = &m.truncation_bound {
        line(format!("truncation: M = {:.6}, ū = {:.6}", b.m, b.upper));
    }
    if let Some(t) = &m.small_t {
        line(format!("small-t search: k = {}, t = {:.3e}, energy {:.6e}", t.k, t.t, t.energy));
    }
    if let Some(f) = &m.gate_failure {
        line(format!("GATE FAILED: {f}"));
    }
    for sol in &m.solutions {
        line(format!(
            "solution {}: nodal range [{:.6}, {:.6}], ‖·‖₀ = {:.6e}, residual {:.3e}{}",
            sol.label,
            sol.min_nodal,
            sol.max_nodal,
            sol.norm0,
            sol.residual,
            sol.energy.map_or(String::new(), |e| format!(", energy {:.6e}", e.total))
        ));
    }
    if !m.picard_trace.is_empty() {
        line(format!("Picard: {} outer steps", m.picard_trace.len()));
    }
    line("checks:".into());
    for c in &m.certificates {
        line(format!("  {}", c.line()));
    }
    line(format!("overall: {}", if m.passed { "PASS" } else { "FAIL" }));
    s
}
