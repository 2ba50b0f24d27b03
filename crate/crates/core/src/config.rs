//! Scenario files: flat `key = value` lines, `#` starts a comment.
//!
//! ```text
//! theorem = T41
//! n = 16
//! p = 1.4
//! q = 1.8
//! mu = linear_x1
//! f.power = 1.0 @ 3.0
//! g.power = 1.0 @ 2.2
//! zeta_margin = 0.5
//! ```
//!
//! Repeatable keys: `f.power`, `f.grad`, `g.power`. Every other key may
//! appear once.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::musielak::{ExponentConfig, WeightField};
use crate::operators::{GradientTerm, GrowthBounds, NonlinearitySpec, PowerTerm};
use crate::tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    T31,
    T41,
    T43,
    EigenOnly,
    SpaceChecks,
}

impl Theorem {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "T31" => Theorem::T31,
            "T41" => Theorem::T41,
            "T43" => Theorem::T43,
            "eigen_only" => Theorem::EigenOnly,
            "space_checks" => Theorem::SpaceChecks,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Theorem::T31 => "T31",
            Theorem::T41 => "T41",
            Theorem::T43 => "T43",
            Theorem::EigenOnly => "eigen_only",
            Theorem::SpaceChecks => "space_checks",
        }
    }
}

/// The weight `μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSpec {
    Constant(f64),
    /// `μ(x) = x₁`.
    LinearX1,
    /// `μ(x) = m·max(0, 2x₁ - 1)`, vanishing on the left half.
    VanishingHalfPlane(f64),
}

impl WeightSpec {
    fn parse(s: &str) -> Option<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim().parse::<f64>().ok()?)),
            None => (s, None),
        };
        match (name, arg) {
            ("constant", Some(m)) => Some(WeightSpec::Constant(m)),
            ("linear_x1", None) => Some(WeightSpec::LinearX1),
            ("vanishing_half_plane", Some(m)) => Some(WeightSpec::VanishingHalfPlane(m)),
            ("vanishing_half_plane", None) => Some(WeightSpec::VanishingHalfPlane(1.0)),
            _ => None,
        }
    }

    fn to_text(self) -> String {
        match self {
            WeightSpec::Constant(m) => format!("constant:{m:?}"),
            WeightSpec::LinearX1 => "linear_x1".into(),
            WeightSpec::VanishingHalfPlane(m) => format!("vanishing_half_plane:{m:?}"),
        }
    }

    pub fn build(self, mesh: &Mesh) -> Result<WeightField> {
        match self {
            WeightSpec::Constant(m) => WeightField::constant(mesh, m),
            WeightSpec::LinearX1 => WeightField::from_fn(mesh, |x| x[0]),
            WeightSpec::VanishingHalfPlane(m) => {
                WeightField::from_fn(mesh, |x| m * (2.0 * x[0] - 1.0).max(0.0))
            }
        }
    }
}

/// How `ζ` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZetaSpec {
    Value(f64),
    /// `ζ = λ^S + margin` (T41) or `ζ = λ^R + ϑ + margin` (T43).
    Margin(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthSpec {
    Derive { r1: f64, r2: f64 },
    Declared(GrowthBounds),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub gradient: f64,
    pub eigen: f64,
    pub residual: f64,
    pub picard_step: f64,
    pub inner_gradient: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gradient: tolerances::GRADIENT_TOL,
            eigen: tolerances::EIGEN_TOL,
            residual: tolerances::RESIDUAL_TOL,
            picard_step: tolerances::PICARD_STEP_TOL,
            inner_gradient: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub theorem: Theorem,
    pub n: usize,
    pub p: f64,
    /// Unused by `eigen_only`.
    pub q: Option<f64>,
    pub strict_mode: bool,
    pub mu: WeightSpec,
    /// Nonlinearities without growth metadata.
    pub spec: NonlinearitySpec,
    pub growth: Option<GrowthSpec>,
    pub zeta: Option<ZetaSpec>,
    pub beta: f64,
    pub theta: f64,
    pub allow_theta_above_one: bool,
    pub allow_uncertified: bool,
    pub damping: f64,
    /// Random functions drawn by `space_checks`.
    pub samples: usize,
    pub tolerances: Tolerances,
    pub seed: u64,
}

const KNOWN_KEYS: &[&str] = &[
    "name",
    "theorem",
    "n",
    "p",
    "q",
    "strict_mode",
    "mu",
    "f.power",
    "f.grad",
    "f.const",
    "g.power",
    "g.const",
    "growth",
    "growth.r1",
    "growth.r2",
    "growth.a1",
    "growth.a2",
    "growth.a3",
    "growth.alpha1",
    "growth.alpha2",
    "growth.b1",
    "growth.b2",
    "growth.b3",
    "growth.omega1",
    "growth.omega2",
    "zeta",
    "zeta_margin",
    "beta",
    "theta",
    "allow_theta_above_one",
    "allow_uncertified",
    "damping",
    "samples",
    "tol.gradient",
    "tol.eigen",
    "tol.residual",
    "tol.picard_step",
    "tol.inner_gradient",
    "seed",
];

const REPEATABLE: &[&str] = &["f.power", "f.grad", "g.power"];

struct Entries {
    values: BTreeMap<String, Vec<(usize, String)>>,
}

impl Entries {
    fn one(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|v| v[0].1.as_str())
    }

    fn all(&self, key: &str) -> Vec<&str> {
        self.values
            .get(key)
            .map(|v| v.iter().map(|(_, s)| s.as_str()).collect())
            .unwrap_or_default()
    }

    fn number<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.one(key) {
            None => Ok(None),
            Some(s) => s
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::config(key, format!("cannot parse `{s}` as a number"))),
        }
    }

    fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.number(key)?
            .ok_or_else(|| Error::config(key, "missing required key"))
    }

    fn flag(&self, key: &str, default: bool) -> Result<bool> {
        match self.one(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(s) => Err(Error::config(key, format!("expected true or false, got `{s}`"))),
        }
    }
}

fn parse_pair(key: &str, s: &str) -> Result<(f64, f64)> {
    let (a, b) = s
        .split_once('@')
        .ok_or_else(|| Error::config(key, format!("expected `coefficient @ exponent`, got `{s}`")))?;
    let parse = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| Error::config(key, format!("cannot parse `{}` as a number", t.trim())))
    };
    Ok((parse(a)?, parse(b)?))
}

fn finite(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(key, format!("{v} is not finite")))
    }
}

impl ScenarioConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let default_name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into());
        Self::parse_with_path(&text, &default_name, path)
    }

    pub fn parse(text: &str, default_name: &str) -> Result<Self> {
        Self::parse_with_path(text, default_name, Path::new("<text>"))
    }

    fn parse_with_path(text: &str, default_name: &str, path: &Path) -> Result<Self> {
        let mut values: BTreeMap<String, Vec<(usize, String)>> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `key = value`, got `{line}`")))?;
            let (k, v) = (k.trim(), v.trim());
            if !KNOWN_KEYS.contains(&k) {
                return Err(parse_err(format!("unknown key `{k}`")));
            }
            let slot = values.entry(k.to_string()).or_default();
            if !slot.is_empty() && !REPEATABLE.contains(&k) {
                return Err(parse_err(format!("duplicate key `{k}`")));
            }
            slot.push((i + 1, v.to_string()));
        }
        let e = Entries { values };

        let theorem_text = e
            .one("theorem")
            .ok_or_else(|| Error::config("theorem", "missing required key"))?;
        let theorem = Theorem::parse(theorem_text).ok_or_else(|| {
            Error::config(
                "theorem",
                format!("expected T31, T41, T43, eigen_only or space_checks, got `{theorem_text}`"),
            )
        })?;

        let mut spec = NonlinearitySpec::default();
        for s in e.all("f.power") {
            let (a, r) = parse_pair("f.power", s)?;
            spec.interior.push(PowerTerm { coefficient: a, exponent: r });
        }
        for s in e.all("f.grad") {
            let (b, g) = parse_pair("f.grad", s)?;
            spec.gradient.push(GradientTerm { coefficient: b, exponent: g });
        }
        for s in e.all("g.power") {
            let (a, r) = parse_pair("g.power", s)?;
            spec.boundary.push(PowerTerm { coefficient: a, exponent: r });
        }
        spec.interior_constant = e.number("f.const")?.unwrap_or(0.0);
        spec.boundary_constant = e.number("g.const")?.unwrap_or(0.0);

        let declared_keys = [
            "a1", "a2", "a3", "alpha1", "alpha2", "b1", "b2", "b3", "omega1", "omega2",
        ];
        let any_declared = declared_keys
            .iter()
            .any(|k| e.one(&format!("growth.{k}")).is_some());
        let growth = match (e.one("growth"), any_declared) {
            (None, false) => None,
            (Some("derive"), false) => Some(GrowthSpec::Derive {
                r1: e.required("growth.r1")?,
                r2: e.required("growth.r2")?,
            }),
            (Some("declared") | None, true) => {
                let get = |k: &str| e.required::<f64>(&format!("growth.{k}"));
                Some(GrowthSpec::Declared(GrowthBounds {
                    a1: get("a1")?,
                    a2: get("a2")?,
                    a3: get("a3")?,
                    alpha1: get("alpha1")?,
                    alpha2: get("alpha2")?,
                    b1: get("b1")?,
                    b2: get("b2")?,
                    b3: get("b3")?,
                    omega1: get("omega1")?,
                    omega2: get("omega2")?,
                    r1: get("r1")?,
                    r2: get("r2")?,
                }))
            }
            (Some("derive"), true) => {
                return Err(Error::config(
                    "growth",
                    "`derive` cannot be combined with declared growth constants",
                ))
            }
            (Some(other), _) => {
                return Err(Error::config(
                    "growth",
                    format!("expected `derive` or `declared`, got `{other}`"),
                ))
            }
        };

        let zeta = match (e.number::<f64>("zeta")?, e.number::<f64>("zeta_margin")?) {
            (Some(_), Some(_)) => {
                return Err(Error::config("zeta", "give either `zeta` or `zeta_margin`, not both"))
            }
            (Some(z), None) => Some(ZetaSpec::Value(z)),
            (None, Some(m)) => Some(ZetaSpec::Margin(m)),
            (None, None) => None,
        };

        let mu = match e.one("mu") {
            None => WeightSpec::LinearX1,
            Some(s) => WeightSpec::parse(s).ok_or_else(|| {
                Error::config(
                    "mu",
                    format!("expected constant:m, linear_x1 or vanishing_half_plane[:m], got `{s}`"),
                )
            })?,
        };

        let defaults = Tolerances::default();
        let cfg = ScenarioConfig {
            name: e.one("name").unwrap_or(default_name).to_string(),
            theorem,
            n: e.required("n")?,
            p: e.required("p")?,
            q: e.number("q")?,
            strict_mode: e.flag("strict_mode", true)?,
            mu,
            spec,
            growth,
            zeta,
            beta: e.number("beta")?.unwrap_or(1.0),
            theta: e.number("theta")?.unwrap_or(1.0),
            allow_theta_above_one: e.flag("allow_theta_above_one", false)?,
            allow_uncertified: e.flag("allow_uncertified", false)?,
            damping: e.number("damping")?.unwrap_or(1.0),
            samples: e.number("samples")?.unwrap_or(200),
            tolerances: Tolerances {
                gradient: e.number("tol.gradient")?.unwrap_or(defaults.gradient),
                eigen: e.number("tol.eigen")?.unwrap_or(defaults.eigen),
                residual: e.number("tol.residual")?.unwrap_or(defaults.residual),
                picard_step: e.number("tol.picard_step")?.unwrap_or(defaults.picard_step),
                inner_gradient: e.number("tol.inner_gradient")?.unwrap_or(defaults.inner_gradient),
            },
            seed: e.number("seed")?.unwrap_or(0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Cross-field validation.
    pub fn validate(&self) -> Result<()> {
        if !(2..=256).contains(&self.n) {
            return Err(Error::config("n", format!("{} must lie in [2, 256]", self.n)));
        }
        finite("p", self.p)?;
        if !(self.p > 1.0) {
            return Err(Error::config("p", format!("{} must exceed 1", self.p)));
        }
        for (k, v) in [("beta", self.beta), ("theta", self.theta), ("damping", self.damping)] {
            finite(k, v)?;
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::config("damping", format!("{} must lie in (0, 1]", self.damping)));
        }
        let t = &self.tolerances;
        for (k, v) in [
            ("tol.gradient", t.gradient),
            ("tol.eigen", t.eigen),
            ("tol.residual", t.residual),
            ("tol.picard_step", t.picard_step),
            ("tol.inner_gradient", t.inner_gradient),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(k, format!("{v} must be positive")));
            }
        }
        match self.mu {
            WeightSpec::Constant(m) | WeightSpec::VanishingHalfPlane(m) if !(m >= 0.0 && m.is_finite()) => {
                return Err(Error::config("mu", format!("weight scale {m} must be nonnegative")));
            }
            _ => {}
        }
        if self.theorem != Theorem::EigenOnly {
            self.exponents()?;
        }
        self.spec
            .validate_terms()
            .map_err(|err| Error::config("f/g", err.to_string()))?;

        match self.theorem {
            Theorem::EigenOnly => {
                if !(self.beta > 0.0) {
                    return Err(Error::config("beta", "must be positive"));
                }
            }
            Theorem::SpaceChecks => {
                if self.samples == 0 {
                    return Err(Error::config("samples", "must be positive"));
                }
            }
            Theorem::T41 | Theorem::T43 => {
                if self.theorem == Theorem::T41 && self.theta > 1.0 && !self.allow_theta_above_one {
                    return Err(Error::config(
                        "theta",
                        format!(
                            "{} exceeds 1; the Steklov-type result needs ϑ ∈ (0, 1] (set allow_theta_above_one = true to override)",
                            self.theta
                        ),
                    ));
                }
                if !(self.theta > 0.0) {
                    return Err(Error::config("theta", "must be positive"));
                }
                if self.theorem == Theorem::T43 && !(self.beta > 0.0) {
                    return Err(Error::config("beta", "must be positive"));
                }
                match self.zeta {
                    None => {
                        return Err(Error::config("zeta_margin", "T41/T43 need `zeta` or `zeta_margin`"))
                    }
                    Some(ZetaSpec::Margin(m)) if !(m > 0.0 && m.is_finite()) => {
                        return Err(Error::config("zeta_margin", format!("{m} must be positive")))
                    }
                    _ => {}
                }
            }
            Theorem::T31 => {
                if self.growth.is_none() {
                    return Err(Error::config("growth", "T31 needs growth metadata (`growth = derive` or declared constants)"));
                }
                match self.zeta {
                    Some(ZetaSpec::Value(z)) => {
                        finite("zeta", z)?;
                    }
                    Some(ZetaSpec::Margin(_)) => {
                        return Err(Error::config("zeta_margin", "T31 takes an explicit `zeta`"))
                    }
                    None => return Err(Error::config("zeta", "missing required key")),
                }
                if !(self.beta > 0.0) {
                    return Err(Error::config("beta", "must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn exponents(&self) -> Result<ExponentConfig> {
        let q = self.q.ok_or_else(|| Error::config("q", "missing required key"))?;
        ExponentConfig::new(self.p, q, 2, self.strict_mode).map_err(|err| Error::config("q", err.to_string()))
    }

    /// Nonlinearity with growth constants attached (derived or declared).
    pub fn nonlinearity(&self) -> Result<NonlinearitySpec> {
        let mut spec = self.spec.clone();
        match self.growth {
            None => {}
            Some(GrowthSpec::Derive { r1, r2 }) => {
                spec.growth = Some(spec.derive_growth(&self.exponents()?, r1, r2)?);
            }
            Some(GrowthSpec::Declared(g)) => {
                spec.growth = Some(g);
                spec.validate_growth(&self.exponents()?)?;
            }
        }
        Ok(spec)
    }

    /// Serializes back to the file format; `parse(to_text())` returns `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("name", self.name.clone());
        kv("theorem", self.theorem.as_str().into());
        kv("n", self.n.to_string());
        kv("p", format!("{:?}", self.p));
        if let Some(q) = self.q {
            kv("q", format!("{q:?}"));
        }
        kv("strict_mode", self.strict_mode.to_string());
        kv("mu", self.mu.to_text());
        for t in &self.spec.interior {
            kv("f.power", format!("{:?} @ {:?}", t.coefficient, t.exponent));
        }
        for t in &self.spec.gradient {
            kv("f.grad", format!("{:?} @ {:?}", t.coefficient, t.exponent));
        }
        if self.spec.interior_constant != 0.0 {
            kv("f.const", format!("{:?}", self.spec.interior_constant));
        }
        for t in &self.spec.boundary {
            kv("g.power", format!("{:?} @ {:?}", t.coefficient, t.exponent));
        }
        if self.spec.boundary_constant != 0.0 {
            kv("g.const", format!("{:?}", self.spec.boundary_constant));
        }
        match self.growth {
            None => {}
            Some(GrowthSpec::Derive { r1, r2 }) => {
                kv("growth", "derive".into());
                kv("growth.r1", format!("{r1:?}"));
                kv("growth.r2", format!("{r2:?}"));
            }
            Some(GrowthSpec::Declared(g)) => {
                kv("growth", "declared".into());
                for (k, v) in [
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
                    ("r1", g.r1),
                    ("r2", g.r2),
                ] {
                    kv(&format!("growth.{k}"), format!("{v:?}"));
                }
            }
        }
        match self.zeta {
            None => {}
            Some(ZetaSpec::Value(z)) => kv("zeta", format!("{z:?}")),
            Some(ZetaSpec::Margin(m)) => kv("zeta_margin", format!("{m:?}")),
        }
        kv("beta", format!("{:?}", self.beta));
        kv("theta", format!("{:?}", self.theta));
        kv("allow_theta_above_one", self.allow_theta_above_one.to_string());
        kv("allow_uncertified", self.allow_uncertified.to_string());
        kv("damping", format!("{:?}", self.damping));
        kv("samples", self.samples.to_string());
        let t = &self.tolerances;
        kv("tol.gradient", format!("{:?}", t.gradient));
        kv("tol.eigen", format!("{:?}", t.eigen));
        kv("tol.residual", format!("{:?}", t.residual));
        kv("tol.picard_step", format!("{:?}", t.picard_step));
        kv("tol.inner_gradient", format!("{:?}", t.inner_gradient));
        kv("seed", self.seed.to_string());
        s
    }
}
