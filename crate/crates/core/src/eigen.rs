//! First Robin and Steklov eigenpairs of the discrete `p`-Laplacian.
//!
//! Robin: minimize `(∫|∇u|^p + β∫_∂Ω|u|^p) / ∫|u|^p`.
//! Steklov: minimize `(∫|∇u|^p + ∫|u|^p) / ∫_∂Ω|u|^p`.
//!
//! Both quotients are scale invariant, so the descent renormalizes after
//! every step. At `p = 2` the quotients are generalized Rayleigh quotients of
//! the P1 stiffness, mass and boundary mass matrices and [`dense_oracle`]
//! solves them directly.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::descent::{minimize, DescentOptions, Objective};
use crate::error::{Error, Result};
use crate::fem::{evaluate_energy, signed_power, BoundaryPoint, FemFunction, InteriorPoint, LocalEnergy};
use crate::mesh::Mesh;
use crate::quadrature::QuadratureRule;
use crate::tolerances::EIGEN_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `‖u‖_p = 1`.
    Robin,
    /// `‖u‖_{p,∂Ω} = 1`.
    Steklov,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenResult {
    pub lambda: f64,
    pub eigenfunction: FemFunction,
    pub normalization: Normalization,
    pub iterations: usize,
    /// Max-norm of the gradient of the quotient at the normalized minimizer.
    pub residual: f64,
}

impl EigenResult {
    pub fn min_nodal(&self) -> f64 {
        self.eigenfunction.min()
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.min_nodal() > 0.0
    }

    /// Minimum over vertices off the boundary.
    pub fn min_interior_nodal(&self, mesh: &Mesh) -> f64 {
        let mask = mesh.boundary_vertex_mask();
        self.eigenfunction
            .coeffs()
            .iter()
            .zip(&mask)
            .filter(|(_, b)| !**b)
            .map(|(v, _)| *v)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Which eigenproblem, with its boundary parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EigenProblem {
    Robin { beta: f64 },
    Steklov,
}

/// `c_∇ |∇u|^p + c_Ω |u|^p` in the interior and `c_∂ |u|^p` on the boundary.
struct PowerDensity {
    p: f64,
    grad: f64,
    value: f64,
    boundary: f64,
}

impl LocalEnergy for PowerDensity {
    fn gradient_density(&self, _mu: f64, t: f64) -> (f64, f64) {
        if self.grad == 0.0 {
            return (0.0, 0.0);
        }
        (self.grad * t.powf(self.p), self.grad * self.p * t.powf(self.p - 1.0))
    }

    fn value_density(&self, pt: &InteriorPoint) -> (f64, f64) {
        if self.value == 0.0 {
            return (0.0, 0.0);
        }
        let s = pt.value;
        (
            self.value * s.abs().powf(self.p),
            self.value * self.p * signed_power(s, self.p),
        )
    }

    fn boundary_density(&self, pt: &BoundaryPoint) -> (f64, f64) {
        if self.boundary == 0.0 {
            return (0.0, 0.0);
        }
        let s = pt.value;
        (
            self.boundary * s.abs().powf(self.p),
            self.boundary * self.p * signed_power(s, self.p),
        )
    }
}

impl EigenProblem {
    fn parts(&self, p: f64) -> (PowerDensity, PowerDensity) {
        match *self {
            EigenProblem::Robin { beta } => (
                PowerDensity { p, grad: 1.0, value: 0.0, boundary: beta },
                PowerDensity { p, grad: 0.0, value: 1.0, boundary: 0.0 },
            ),
            EigenProblem::Steklov => (
                PowerDensity { p, grad: 1.0, value: 1.0, boundary: 0.0 },
                PowerDensity { p, grad: 0.0, value: 0.0, boundary: 1.0 },
            ),
        }
    }

    fn normalization(&self) -> Normalization {
        match self {
            EigenProblem::Robin { .. } => Normalization::Robin,
            EigenProblem::Steklov => Normalization::Steklov,
        }
    }

    fn validate(&self, mesh: &Mesh, p: f64) -> Result<()> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("p = {p} must exceed 1")));
        }
        if mesh.boundary_edges().is_empty() {
            return Err(Error::InvalidMesh("mesh has no boundary edges".into()));
        }
        if let EigenProblem::Robin { beta } = *self {
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Error::InvalidArgument(format!("β = {beta} must be positive")));
            }
        }
        Ok(())
    }
}

struct Quotient<'a> {
    mesh: &'a Mesh,
    rule: &'a QuadratureRule,
    p: f64,
    num: PowerDensity,
    den: PowerDensity,
    gn: Vec<f64>,
    gd: Vec<f64>,
}

impl<'a> Quotient<'a> {
    fn new(mesh: &'a Mesh, rule: &'a QuadratureRule, p: f64, problem: EigenProblem) -> Self {
        let (num, den) = problem.parts(p);
        let n = mesh.num_vertices();
        Self { mesh, rule, p, num, den, gn: vec![0.0; n], gd: vec![0.0; n] }
    }

    fn numerator_denominator(&self, u: &[f64]) -> Result<(f64, f64)> {
        let n = evaluate_energy(self.mesh, self.rule, None, u, &self.num, None)?;
        let d = evaluate_energy(self.mesh, self.rule, None, u, &self.den, None)?;
        Ok((n, d))
    }

    fn value(&self, u: &[f64]) -> Result<f64> {
        let (n, d) = self.numerator_denominator(u)?;
        if d <= 0.0 {
            return Err(Error::ZeroDenominator);
        }
        Ok(n / d)
    }
}

impl Objective for Quotient<'_> {
    fn evaluate(&mut self, u: &[f64], grad: &mut [f64]) -> Result<f64> {
        let n = evaluate_energy(self.mesh, self.rule, None, u, &self.num, Some(&mut self.gn))?;
        let d = evaluate_energy(self.mesh, self.rule, None, u, &self.den, Some(&mut self.gd))?;
        if d <= 0.0 {
            // Outside the domain of the quotient; the line search backs off.
            grad.iter_mut().for_each(|g| *g = 0.0);
            return Ok(f64::INFINITY);
        }
        let r = n / d;
        for i in 0..grad.len() {
            grad[i] = (self.gn[i] - r * self.gd[i]) / d;
        }
        Ok(r)
    }

    fn retract(&mut self, u: &mut [f64]) -> f64 {
        match evaluate_energy(self.mesh, self.rule, None, u, &self.den, None) {
            Ok(d) if d > 0.0 && d.is_finite() => {
                let c = d.powf(-1.0 / self.p);
                u.iter_mut().for_each(|v| *v *= c);
                c
            }
            _ => 1.0,
        }
    }
}

/// Robin quotient `(∫|∇u|^p + β∫_∂Ω|u|^p) / ∫|u|^p`.
pub fn rayleigh_robin(
    mesh: &Mesh,
    rule: &QuadratureRule,
    u: &FemFunction,
    p: f64,
    beta: f64,
) -> Result<f64> {
    Quotient::new(mesh, rule, p, EigenProblem::Robin { beta }).value(u.coeffs())
}

/// Steklov quotient `(∫|∇u|^p + ∫|u|^p) / ∫_∂Ω|u|^p`.
pub fn rayleigh_steklov(mesh: &Mesh, rule: &QuadratureRule, u: &FemFunction, p: f64) -> Result<f64> {
    Quotient::new(mesh, rule, p, EigenProblem::Steklov).value(u.coeffs())
}

/// Numerator and denominator of the quotient separately.
pub fn rayleigh_parts(
    mesh: &Mesh,
    rule: &QuadratureRule,
    u: &FemFunction,
    p: f64,
    problem: EigenProblem,
) -> Result<(f64, f64)> {
    Quotient::new(mesh, rule, p, problem).numerator_denominator(u.coeffs())
}

#[derive(Debug, Clone)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: EIGEN_TOL, max_iterations: 50_000 }
    }
}

/// Minimizes the quotient from `u ≡ 1`, fixes the sign so the mean is
/// positive and returns the normalized minimizer.
pub fn first_eigenpair(
    mesh: &Mesh,
    rule: &QuadratureRule,
    p: f64,
    problem: EigenProblem,
    opts: &EigenOptions,
) -> Result<EigenResult> {
    problem.validate(mesh, p)?;
    let mut quotient = Quotient::new(mesh, rule, p, problem);
    let mut u0 = vec![1.0; mesh.num_vertices()];
    quotient.retract(&mut u0);
    let dopts = DescentOptions {
        max_iterations: opts.max_iterations,
        gradient_tol: opts.tol,
        ..Default::default()
    };
    let out = minimize(&mut quotient, u0, &dopts)?;
    let mut u = out.x;
    quotient.retract(&mut u);
    let mean = u.iter().sum::<f64>() / u.len() as f64;
    if mean < 0.0 {
        u.iter_mut().for_each(|v| *v = -*v);
    }
    let mut grad = vec![0.0; u.len()];
    let lambda = quotient.evaluate(&u, &mut grad)?;
    let residual = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let eigenfunction = FemFunction::new(u)?;
    if !out.converged && residual > opts.tol {
        return Err(Error::EigenNotConverged {
            iterations: out.iterations,
            residual,
            best: Box::new(eigenfunction),
            lambda,
        });
    }
    Ok(EigenResult {
        lambda,
        eigenfunction,
        normalization: problem.normalization(),
        iterations: out.iterations,
        residual,
    })
}

pub fn robin_first_eigenpair(
    mesh: &Mesh,
    rule: &QuadratureRule,
    p: f64,
    beta: f64,
    opts: &EigenOptions,
) -> Result<EigenResult> {
    first_eigenpair(mesh, rule, p, EigenProblem::Robin { beta }, opts)
}

pub fn steklov_first_eigenpair(
    mesh: &Mesh,
    rule: &QuadratureRule,
    p: f64,
    opts: &EigenOptions,
) -> Result<EigenResult> {
    first_eigenpair(mesh, rule, p, EigenProblem::Steklov, opts)
}

/// Dense P1 matrices at `p = 2`: stiffness `K`, consistent mass `M` and
/// boundary mass `B`.
pub struct LinearMatrices {
    pub stiffness: DMatrix<f64>,
    pub mass: DMatrix<f64>,
    pub boundary_mass: DMatrix<f64>,
}

impl LinearMatrices {
    pub fn assemble(mesh: &Mesh) -> Self {
        let n = mesh.num_vertices();
        let mut k = DMatrix::zeros(n, n);
        let mut m = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, n);
        for (tri, geo) in mesh.triangles().iter().zip(mesh.geometry()) {
            for i in 0..3 {
                for j in 0..3 {
                    let gi = geo.basis_gradients[i];
                    let gj = geo.basis_gradients[j];
                    k[(tri[i], tri[j])] += geo.area * (gi[0] * gj[0] + gi[1] * gj[1]);
                    let factor = if i == j { 2.0 } else { 1.0 };
                    m[(tri[i], tri[j])] += geo.area / 12.0 * factor;
                }
            }
        }
        for e in mesh.boundary_edges() {
            let [i, j] = e.vertices;
            b[(i, i)] += e.length / 3.0;
            b[(j, j)] += e.length / 3.0;
            b[(i, j)] += e.length / 6.0;
            b[(j, i)] += e.length / 6.0;
        }
        Self { stiffness: k, mass: m, boundary_mass: b }
    }
}

/// Eigenvalues of `A x = λ S x` with `S` symmetric positive definite, ascending.
pub fn generalized_eigenvalues(a: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<Vec<f64>> {
    let chol = s
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("right-hand matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("singular Cholesky factor".into()))?;
    let c = &linv * a * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut vals: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    vals.sort_by(|x, y| x.total_cmp(y));
    Ok(vals)
}

/// Smallest eigenvalue at `p = 2` computed from the dense matrices.
pub fn dense_oracle(mesh: &Mesh, problem: EigenProblem) -> Result<f64> {
    let mats = LinearMatrices::assemble(mesh);
    match problem {
        EigenProblem::Robin { beta } => {
            let a = &mats.stiffness + &mats.boundary_mass * beta;
            Ok(generalized_eigenvalues(&a, &mats.mass)?[0])
        }
        EigenProblem::Steklov => {
            // B is only semidefinite, so solve B x = ν (K + M) x and invert
            // the largest ν.
            let s = &mats.stiffness + &mats.mass;
            let nu = generalized_eigenvalues(&mats.boundary_mass, &s)?;
            Ok(1.0 / nu[nu.len() - 1])
        }
    }
}

/// Smallest Dirichlet eigenvalue of `K u = λ M u` on the interior nodes.
pub fn dense_dirichlet_oracle(mesh: &Mesh) -> Result<f64> {
    let mats = LinearMatrices::assemble(mesh);
    let mask = mesh.boundary_vertex_mask();
    let interior: Vec<usize> = (0..mesh.num_vertices()).filter(|&i| !mask[i]).collect();
    if interior.is_empty() {
        return Err(Error::InvalidMesh("mesh has no interior vertices".into()));
    }
    let k = mats.stiffness.select_rows(&interior).select_columns(&interior);
    let m = mats.mass.select_rows(&interior).select_columns(&interior);
    Ok(generalized_eigenvalues(&k, &m)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize) -> (Mesh, QuadratureRule) {
        (Mesh::unit_square(n).unwrap(), QuadratureRule::standard())
    }

    fn random_fn(mesh: &Mesh, rng: &mut ChaCha8Rng) -> FemFunction {
        FemFunction::new((0..mesh.num_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap()
    }

    #[test]
    fn constant_function_quotients() {
        let (m, rule) = setup(4);
        let one = FemFunction::constant(m.num_vertices(), 1.0);
        for p in [1.3, 2.0, 1.7] {
            let r = rayleigh_robin(&m, &rule, &one, p, 2.5).unwrap();
            assert!((r - 10.0).abs() < 1e-12);
            let s = rayleigh_steklov(&m, &rule, &one, p).unwrap();
            assert!((s - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_denominator_rejected() {
        let (m, rule) = setup(2);
        let z = FemFunction::zeros(m.num_vertices());
        assert!(matches!(
            rayleigh_robin(&m, &rule, &z, 1.5, 1.0),
            Err(Error::ZeroDenominator)
        ));
        // Interior bump: zero trace.
        let mut bump = FemFunction::zeros(m.num_vertices());
        bump[4] = 1.0;
        assert!(matches!(
            rayleigh_steklov(&m, &rule, &bump, 1.5),
            Err(Error::ZeroDenominator)
        ));
    }

    #[test]
    fn quotients_scale_invariant() {
        let (m, rule) = setup(6);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let u = random_fn(&m, &mut rng);
            let c = rng.gen_range(0.1..10.0) * if rng.gen_bool(0.5) { -1.0 } else { 1.0 };
            let a = rayleigh_robin(&m, &rule, &u, 1.6, 3.0).unwrap();
            let b = rayleigh_robin(&m, &rule, &u.scaled(c), 1.6, 3.0).unwrap();
            assert!(((a - b) / a).abs() < 1e-13);
            let a = rayleigh_steklov(&m, &rule, &u, 1.6).unwrap();
            let b = rayleigh_steklov(&m, &rule, &u.scaled(c), 1.6).unwrap();
            assert!(((a - b) / a).abs() < 1e-13);
        }
    }

    #[test]
    fn linear_case_matches_dense_oracle() {
        let (m, rule) = setup(8);
        let opts = EigenOptions::default();
        for problem in [EigenProblem::Robin { beta: 1.0 }, EigenProblem::Steklov] {
            let r = first_eigenpair(&m, &rule, 2.0, problem, &opts).unwrap();
            let o = dense_oracle(&m, problem).unwrap();
            assert!(((r.lambda - o) / o).abs() < 1e-8, "{problem:?}: {} vs {o}", r.lambda);
            assert!(r.is_strictly_positive());
        }
    }

    #[test]
    fn normalization_holds() {
        let (m, rule) = setup(6);
        let opts = EigenOptions::default();
        let r = robin_first_eigenpair(&m, &rule, 1.5, 1.0, &opts).unwrap();
        let (_, d) = rayleigh_parts(&m, &rule, &r.eigenfunction, 1.5, EigenProblem::Robin { beta: 1.0 })
            .unwrap();
        assert!((d - 1.0).abs() < 1e-10);
        let s = steklov_first_eigenpair(&m, &rule, 1.5, &opts).unwrap();
        let (_, d) = rayleigh_parts(&m, &rule, &s.eigenfunction, 1.5, EigenProblem::Steklov).unwrap();
        assert!((d - 1.0).abs() < 1e-10);
        let back = rayleigh_steklov(&m, &rule, &s.eigenfunction, 1.5).unwrap();
        assert!((back - s.lambda).abs() < 1e-10);
        assert!(s.is_strictly_positive() && r.is_strictly_positive());
    }

    #[test]
    fn invalid_parameters_rejected() {
        let (m, rule) = setup(2);
        let opts = EigenOptions::default();
        assert!(robin_first_eigenpair(&m, &rule, 1.5, 0.0, &opts).is_err());
        assert!(steklov_first_eigenpair(&m, &rule, 1.0, &opts).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (m, rule) = setup(4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_fn(&m, &mut rng);
        let mut q = Quotient::new(&m, &rule, 1.7, EigenProblem::Robin { beta: 2.0 });
        let mut g = vec![0.0; u.len()];
        q.evaluate(u.coeffs(), &mut g).unwrap();
        let dir = random_fn(&m, &mut rng);
        let h = 1e-6;
        let plus = q.value(u.axpy(h, &dir).coeffs()).unwrap();
        let minus = q.value(u.axpy(-h, &dir).coeffs()).unwrap();
        let fd = (plus - minus) / (2.0 * h);
        let an: f64 = g.iter().zip(dir.coeffs()).map(|(a, b)| a * b).sum();
        assert!(((fd - an) / an).abs() < 1e-5, "{fd} vs {an}");
    }

    #[test]
    fn dirichlet_oracle_bounds_robin() {
        let m = Mesh::unit_square(6).unwrap();
        let d = dense_dirichlet_oracle(&m).unwrap();
        let mut last = 0.0;
        for beta in [1.0, 1e2, 1e4] {
            let r = dense_oracle(&m, EigenProblem::Robin { beta }).unwrap();
            assert!(r > last && r < d);
            last = r;
        }
        assert!((d - last) / d < 0.01);
    }
}
