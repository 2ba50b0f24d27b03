//! P1 finite-element functions and the element loops shared by every
//! modular, operator and energy evaluation.
//!
//! On each triangle the gradient of a P1 function is constant, so integrands
//! depending only on `∇u` (and on a P1 weight) are integrated exactly; value
//! integrands use the supplied [`QuadratureRule`].

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::QuadratureRule;

/// Nodal coefficient vector of a P1 function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FemFunction(Vec<f64>);

impl FemFunction {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite coefficient at vertex {i}"
            )));
        }
        Ok(Self(coeffs))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self(vec![c; n])
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: &Mesh, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self(mesh.vertices().iter().map(|&x| f(x)).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    /// `u⁺ = max(u, 0)` nodally.
    pub fn pos_part(&self) -> Self {
        Self(self.0.iter().map(|&c| c.max(0.0)).collect())
    }

    /// `u⁻ = max(-u, 0)` nodally.
    pub fn neg_part(&self) -> Self {
        Self(self.0.iter().map(|&c| (-c).max(0.0)).collect())
    }

    pub fn abs(&self) -> Self {
        Self(self.0.iter().map(|c| c.abs()).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|&v| c * v).collect())
    }

    /// `self + c * other`
    pub fn axpy(&self, c: f64, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + c * b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-1.0, other)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }
}

impl Index<usize> for FemFunction {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for FemFunction {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Data available to an interior integrand at one quadrature point.
#[derive(Debug, Clone, Copy)]
pub struct InteriorPoint {
    pub x: [f64; 2],
    pub value: f64,
    pub gradient: [f64; 2],
    /// Interpolated auxiliary nodal weight (zero when none is supplied).
    pub weight: f64,
    pub triangle: usize,
}

/// Data available to a boundary integrand at one quadrature point.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryPoint {
    pub x: [f64; 2],
    pub value: f64,
    pub edge: usize,
}

pub fn gradient_on(mesh: &Mesh, u: &[f64], t: usize) -> [f64; 2] {
    let tri = mesh.triangles()[t];
    let g = &mesh.geometry()[t].basis_gradients;
    let mut out = [0.0; 2];
    for k in 0..3 {
        out[0] += u[tri[k]] * g[k][0];
        out[1] += u[tri[k]] * g[k][1];
    }
    out
}

/// `∫_Ω h(x, u, ∇u) dx`.
pub fn integrate_interior(
    mesh: &Mesh,
    rule: &QuadratureRule,
    u: &FemFunction,
    h: impl FnMut(&InteriorPoint) -> f64,
) -> Result<f64> {
    integrate_interior_weighted(mesh, rule, u, None, h)
}

/// As [`integrate_interior`], with a nodal weight interpolated into
/// [`InteriorPoint::weight`].
pub fn integrate_interior_weighted(
    mesh: &Mesh,
    rule: &QuadratureRule,
    u: &FemFunction,
    weight: Option<&[f64]>,
    mut h: impl FnMut(&InteriorPoint) -> f64,
) -> Result<f64> {
    let u = u.coeffs();
    let verts = mesh.vertices();
    let mut total = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.geometry()[t].area;
        let gradient = gradient_on(mesh, u, t);
        let mut local = 0.0;
        for (b, w) in rule.triangle_points().iter().zip(rule.triangle_weights()) {
            let pt = interior_point(verts, tri, u, weight, b, gradient, t);
            let v = h(&pt);
            if !v.is_finite() {
                return Err(Error::NonFiniteInterior { triangle: t });
            }
            local += w * v;
        }
        // reference weights sum to 1/2
        total += 2.0 * area * local;
    }
    Ok(total)
}

/// `∫_∂Ω h(x, u) dσ`.
pub fn integrate_boundary(
    mesh: &Mesh,
    rule: &QuadratureRule,
    u: &FemFunction,
    mut h: impl FnMut(&BoundaryPoint) -> f64,
) -> Result<f64> {
    let u = u.coeffs();
    let verts = mesh.vertices();
    let mut total = 0.0;
    for (e, edge) in mesh.boundary_edges().iter().enumerate() {
        let [a, b] = edge.vertices;
        let mut local = 0.0;
        for (&s, w) in rule.edge_points().iter().zip(rule.edge_weights()) {
            let pt = BoundaryPoint {
                x: lerp(verts[a], verts[b], s),
                value: (1.0 - s) * u[a] + s * u[b],
                edge: e,
            };
            let v = h(&pt);
            if !v.is_finite() {
                return Err(Error::NonFiniteBoundary { edge: e });
            }
            local += w * v;
        }
        total += edge.length * local;
    }
    Ok(total)
}

fn lerp(a: [f64; 2], b: [f64; 2], s: f64) -> [f64; 2] {
    [(1.0 - s) * a[0] + s * b[0], (1.0 - s) * a[1] + s * b[1]]
}

#[inline]
fn interior_point(
    verts: &[[f64; 2]],
    tri: &[usize; 3],
    u: &[f64],
    weight: Option<&[f64]>,
    b: &[f64; 3],
    gradient: [f64; 2],
    triangle: usize,
) -> InteriorPoint {
    let mut x = [0.0; 2];
    let mut value = 0.0;
    let mut wv = 0.0;
    for k in 0..3 {
        let v = tri[k];
        x[0] += b[k] * verts[v][0];
        x[1] += b[k] * verts[v][1];
        value += b[k] * u[v];
        if let Some(w) = weight {
            wv += b[k] * w[v];
        }
    }
    InteriorPoint {
        x,
        value,
        gradient,
        weight: wv,
        triangle,
    }
}

/// Mean of a nodal weight over triangle `t`, i.e. `(1/|T|) ∫_T w`.
pub(crate) fn triangle_mean(mesh: &Mesh, weight: Option<&[f64]>, t: usize) -> f64 {
    match weight {
        Some(w) => {
            let tri = mesh.triangles()[t];
            (w[tri[0]] + w[tri[1]] + w[tri[2]]) / 3.0
        }
        None => 0.0,
    }
}

/// Pointwise densities of a functional of the form
/// `∫_Ω Φ_∇(w̄, |∇u|) + Φ_Ω(x, u) dx + ∫_∂Ω Φ_∂(x, u) dσ`.
///
/// Each density returns its value and its derivative in the scalar argument.
pub trait LocalEnergy {
    fn gradient_density(&self, mean_weight: f64, t: f64) -> (f64, f64);
    fn value_density(&self, pt: &InteriorPoint) -> (f64, f64);
    fn boundary_density(&self, pt: &BoundaryPoint) -> (f64, f64);
}

/// Evaluates a [`LocalEnergy`] and, when `grad` is given, its derivative with
/// respect to the nodal coefficients (which is the weak residual against the
/// nodal basis).
pub fn evaluate_energy<E: LocalEnergy + ?Sized>(
    mesh: &Mesh,
    rule: &QuadratureRule,
    weight: Option<&[f64]>,
    u: &[f64],
    energy: &E,
    mut grad: Option<&mut [f64]>,
) -> Result<f64> {
    if let Some(g) = grad.as_deref_mut() {
        g.iter_mut().for_each(|v| *v = 0.0);
    }
    let verts = mesh.vertices();
    let mut total = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let geo = &mesh.geometry()[t];
        let gradient = gradient_on(mesh, u, t);
        let norm = gradient[0].hypot(gradient[1]);
        let (phi, dphi) = energy.gradient_density(triangle_mean(mesh, weight, t), norm);
        let mut local = geo.area * phi;
        let mut contrib = [0.0; 3];
        if norm > 0.0 {
            let c = geo.area * dphi / norm;
            for k in 0..3 {
                let bg = geo.basis_gradients[k];
                contrib[k] += c * (gradient[0] * bg[0] + gradient[1] * bg[1]);
            }
        }
        let mut qsum = 0.0;
        for (b, w) in rule.triangle_points().iter().zip(rule.triangle_weights()) {
            let pt = interior_point(verts, tri, u, weight, b, gradient, t);
            let (v, dv) = energy.value_density(&pt);
            qsum += w * v;
            let s = 2.0 * geo.area * w * dv;
            for k in 0..3 {
                contrib[k] += s * b[k];
            }
        }
        local += 2.0 * geo.area * qsum;
        if !local.is_finite() || contrib.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteInterior { triangle: t });
        }
        total += local;
        if let Some(g) = grad.as_deref_mut() {
            for k in 0..3 {
                g[tri[k]] += contrib[k];
            }
        }
    }
    for (e, edge) in mesh.boundary_edges().iter().enumerate() {
        let [a, b] = edge.vertices;
        let mut local = 0.0;
        let mut contrib = [0.0; 2];
        for (&s, w) in rule.edge_points().iter().zip(rule.edge_weights()) {
            let pt = BoundaryPoint {
                x: lerp(verts[a], verts[b], s),
                value: (1.0 - s) * u[a] + s * u[b],
                edge: e,
            };
            let (v, dv) = energy.boundary_density(&pt);
            local += w * v;
            contrib[0] += w * dv * (1.0 - s);
            contrib[1] += w * dv * s;
        }
        let local = edge.length * local;
        if !local.is_finite() || contrib.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteBoundary { edge: e });
        }
        total += local;
        if let Some(g) = grad.as_deref_mut() {
            g[a] += edge.length * contrib[0];
            g[b] += edge.length * contrib[1];
        }
    }
    Ok(total)
}

/// Assembles `r_i = ∫_Ω flux·∇φ_i + source φ_i dx + ∫_∂Ω bflux φ_i dσ` for a
/// weak form that need not derive from an energy.
///
/// `flux` receives the triangle index, the triangle mean of the weight and
/// the constant gradient; `source` and `bflux` are sampled at quadrature points.
pub fn assemble_weak_form(
    mesh: &Mesh,
    rule: &QuadratureRule,
    weight: Option<&[f64]>,
    u: &[f64],
    mut flux: impl FnMut(usize, f64, [f64; 2]) -> [f64; 2],
    mut source: impl FnMut(&InteriorPoint) -> f64,
    mut bflux: impl FnMut(&BoundaryPoint) -> f64,
) -> Result<Vec<f64>> {
    let verts = mesh.vertices();
    let mut r = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let geo = &mesh.geometry()[t];
        let gradient = gradient_on(mesh, u, t);
        let fl = flux(t, triangle_mean(mesh, weight, t), gradient);
        let mut contrib = [0.0; 3];
        for k in 0..3 {
            let bg = geo.basis_gradients[k];
            contrib[k] = geo.area * (fl[0] * bg[0] + fl[1] * bg[1]);
        }
        for (b, w) in rule.triangle_points().iter().zip(rule.triangle_weights()) {
            let pt = interior_point(verts, tri, u, weight, b, gradient, t);
            let s = 2.0 * geo.area * w * source(&pt);
            for k in 0..3 {
                contrib[k] += s * b[k];
            }
        }
        if contrib.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteInterior { triangle: t });
        }
        for k in 0..3 {
            r[tri[k]] += contrib[k];
        }
    }
    for (e, edge) in mesh.boundary_edges().iter().enumerate() {
        let [a, b] = edge.vertices;
        let mut contrib = [0.0; 2];
        for (&s, w) in rule.edge_points().iter().zip(rule.edge_weights()) {
            let pt = BoundaryPoint {
                x: lerp(verts[a], verts[b], s),
                value: (1.0 - s) * u[a] + s * u[b],
                edge: e,
            };
            let v = w * bflux(&pt);
            contrib[0] += v * (1.0 - s);
            contrib[1] += v * s;
        }
        if contrib.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteBoundary { edge: e });
        }
        r[a] += edge.length * contrib[0];
        r[b] += edge.length * contrib[1];
    }
    Ok(r)
}

/// `|t|^{r-2} t`, extended by 0 at `t = 0`.
#[inline]
pub fn signed_power(t: f64, r: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.abs().powf(r - 1.0).copysign(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(n: usize) -> (Mesh, QuadratureRule) {
        (Mesh::unit_square(n).unwrap(), QuadratureRule::standard())
    }

    #[test]
    fn interior_constant_integrand_gives_area() {
        let (m, rule) = setup(4);
        let u = FemFunction::zeros(m.num_vertices());
        let v = integrate_interior(&m, &rule, &u, |_| 1.0).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn interior_gradient_of_linear_function() {
        let (m, rule) = setup(4);
        let u = FemFunction::interpolate(&m, |x| x[0]);
        let v = integrate_interior(&m, &rule, &u, |pt| {
            pt.gradient[0].powi(2) + pt.gradient[1].powi(2)
        })
        .unwrap();
        assert!((v - 1.0).abs() < 1e-13);
    }

    #[test]
    fn interior_power_of_constant() {
        let (m, rule) = setup(4);
        let (c, p) = (1.7, 1.4);
        let u = FemFunction::constant(m.num_vertices(), c);
        let v = integrate_interior(&m, &rule, &u, |pt| pt.value.abs().powf(p)).unwrap();
        assert!((v - c.powf(p)).abs() < 1e-13);
    }

    #[test]
    fn boundary_examples() {
        let (m, rule) = setup(4);
        let zero = FemFunction::zeros(m.num_vertices());
        assert!((integrate_boundary(&m, &rule, &zero, |_| 1.0).unwrap() - 4.0).abs() < 1e-14);
        let (c, p) = (0.3, 1.6);
        let u = FemFunction::constant(m.num_vertices(), c);
        let v = integrate_boundary(&m, &rule, &u, |pt| pt.value.abs().powf(p)).unwrap();
        assert!((v - 4.0 * c.powf(p)).abs() < 1e-13);
        let x1 = FemFunction::interpolate(&m, |x| x[0]);
        let v = integrate_boundary(&m, &rule, &x1, |pt| pt.value).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn non_finite_integrand_names_triangle() {
        let (m, rule) = setup(2);
        let u = FemFunction::interpolate(&m, |x| x[0] - 0.9);
        let err = integrate_interior(&m, &rule, &u, |pt| {
            if pt.triangle == 5 {
                f64::NAN
            } else {
                1.0
            }
        })
        .unwrap_err();
        assert!(matches!(err, Error::NonFiniteInterior { triangle: 5 }));
        let err = integrate_boundary(&m, &rule, &u, |pt| {
            if pt.edge == 3 {
                f64::INFINITY
            } else {
                1.0
            }
        })
        .unwrap_err();
        assert!(matches!(err, Error::NonFiniteBoundary { edge: 3 }));
    }

    #[test]
    fn pos_neg_parts() {
        let u = FemFunction::new(vec![1.0, -2.0, 0.0]).unwrap();
        assert_eq!(u.pos_part().coeffs(), &[1.0, 0.0, 0.0]);
        assert_eq!(u.neg_part().coeffs(), &[0.0, 2.0, 0.0]);
        let nonneg = FemFunction::new(vec![0.5, 0.0, 3.0]).unwrap();
        assert!(nonneg.neg_part().is_zero());
    }

    #[test]
    fn non_finite_coefficients_rejected() {
        assert!(FemFunction::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn weighted_triangle_integral_is_exact_for_linear_weight() {
        let (m, rule) = setup(3);
        let w: Vec<f64> = m.vertices().iter().map(|x| x[0]).collect();
        let u = FemFunction::zeros(m.num_vertices());
        let v = integrate_interior_weighted(&m, &rule, &u, Some(&w), |pt| pt.weight).unwrap();
        assert!((v - 0.5).abs() < 1e-14);
    }

    #[test]
    fn refinement_converges() {
        // ∫ sin(πx)sin(πy) of the P1 interpolant → 4/π², error O(h²)
        let exact = 4.0 / std::f64::consts::PI.powi(2);
        let mut errs = Vec::new();
        for n in [4, 8, 16, 32] {
            let (m, rule) = setup(n);
            let u = FemFunction::interpolate(&m, |x| {
                (std::f64::consts::PI * x[0]).sin() * (std::f64::consts::PI * x[1]).sin()
            });
            let v = integrate_interior(&m, &rule, &u, |pt| pt.value).unwrap();
            errs.push((v - exact).abs());
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.0, "observed order {order}");
        }
    }
}
