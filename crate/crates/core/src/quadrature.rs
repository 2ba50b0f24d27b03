//! Quadrature on the reference triangle and the reference edge.
//!
//! Triangle rules are collapsed (Duffy) products of Gauss–Legendre rules:
//! with `m` points per direction the mapped rule is exact for total degree
//! `2m - 2`, all weights are positive and all points are interior.

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Chebyshev-type initial guess for the i-th root of P_m on [-1, 1].
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 0.5 * w;
        nodes[m - 1 - i] = 0.5 * (1.0 + x);
        weights[m - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial `P_m` at `x`.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    order: usize,
    /// Barycentric coordinates on the reference triangle.
    tri_points: Vec<[f64; 3]>,
    /// Weights summing to 1/2, the reference triangle area.
    tri_weights: Vec<f64>,
    /// Edge parameters in `[0, 1]`.
    edge_points: Vec<f64>,
    /// Weights summing to 1.
    edge_weights: Vec<f64>,
}

impl QuadratureRule {
    /// Smallest collapsed Gauss rule exact for polynomials of total degree `order`.
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("quadrature order must be >= 1".into()));
        }
        // The Duffy Jacobian adds one degree in the collapsed direction.
        let m = (order + 2).div_ceil(2);
        let (g, w) = gauss_legendre_unit(m);
        let mut tri_points = Vec::with_capacity(m * m);
        let mut tri_weights = Vec::with_capacity(m * m);
        for (&a, &wa) in g.iter().zip(&w) {
            for (&b, &wb) in g.iter().zip(&w) {
                let x = a;
                let y = b * (1.0 - a);
                tri_points.push([1.0 - x - y, x, y]);
                tri_weights.push(wa * wb * (1.0 - a));
            }
        }
        let me = (order + 2) / 2;
        let (edge_points, edge_weights) = gauss_legendre_unit(me.max(1));
        Ok(Self {
            order,
            tri_points,
            tri_weights,
            edge_points,
            edge_weights,
        })
    }

    /// The default rule for non-polynomial powers.
    pub fn standard() -> Self {
        Self::new(crate::tolerances::STANDARD_QUADRATURE_ORDER).expect("order >= 1")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn triangle_points(&self) -> &[[f64; 3]] {
        &self.tri_points
    }

    pub fn triangle_weights(&self) -> &[f64] {
        &self.tri_weights
    }

    pub fn edge_points(&self) -> &[f64] {
        &self.edge_points
    }

    pub fn edge_weights(&self) -> &[f64] {
        &self.edge_weights
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn weights_positive_and_sum_to_reference_measure() {
        for order in 1..=12 {
            let rule = QuadratureRule::new(order).unwrap();
            assert!(rule.triangle_weights().iter().all(|&w| w > 0.0));
            assert!(rule.edge_weights().iter().all(|&w| w > 0.0));
            let s: f64 = rule.triangle_weights().iter().sum();
            assert!((s - 0.5).abs() < 1e-14, "order {order}: {s}");
            let e: f64 = rule.edge_weights().iter().sum();
            assert!((e - 1.0).abs() < 1e-14);
            for b in rule.triangle_points() {
                assert!(b.iter().all(|&c| c > 0.0 && c < 1.0));
            }
        }
    }

    #[test]
    fn triangle_monomials_exact_up_to_order() {
        for order in [2, 4, 8, 10] {
            let rule = QuadratureRule::new(order).unwrap();
            for a in 0..=order as u32 {
                for b in 0..=(order as u32 - a) {
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    let approx: f64 = rule
                        .triangle_points()
                        .iter()
                        .zip(rule.triangle_weights())
                        .map(|(p, w)| w * p[1].powi(a as i32) * p[2].powi(b as i32))
                        .sum();
                    assert!(
                        (approx - exact).abs() < 1e-15,
                        "order {order} x^{a} y^{b}: {approx} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn edge_monomials_exact_up_to_order() {
        for order in [1, 2, 5, 8, 10] {
            let rule = QuadratureRule::new(order).unwrap();
            for k in 0..=order as i32 {
                let approx: f64 = rule
                    .edge_points()
                    .iter()
                    .zip(rule.edge_weights())
                    .map(|(t, w)| w * t.powi(k))
                    .sum();
                assert!((approx - 1.0 / (k as f64 + 1.0)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_order_rejected() {
        assert!(QuadratureRule::new(0).is_err());
    }
}
