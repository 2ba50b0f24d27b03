//! Limited-memory quasi-Newton descent with backtracking line search.
//!
//! Directions come from the L-BFGS two-loop recursion and fall back to
//! steepest descent whenever the curvature pairs stop producing a descent
//! direction. Steps are accepted by the Armijo rule or, once function
//! differences reach rounding level, by the approximate Wolfe test of Hager
//! and Zhang, which only looks at directional derivatives.

use std::collections::VecDeque;

use crate::error::Result;

#[derive(Debug, Clone)]
pub struct DescentOptions {
    pub max_iterations: usize,
    /// Stop once `max_i |∂f/∂x_i| ≤ gradient_tol`.
    pub gradient_tol: f64,
    /// Number of stored curvature pairs; 0 gives plain steepest descent.
    pub memory: usize,
    pub armijo_c1: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            gradient_tol: crate::tolerances::GRADIENT_TOL,
            memory: 12,
            armijo_c1: 1e-4,
            backtrack_factor: 0.5,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DescentOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Max-norm of the final gradient.
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Objective returning `f(x)` and writing `∇f(x)` into the second argument.
pub trait Objective {
    fn evaluate(&mut self, x: &[f64], grad: &mut [f64]) -> Result<f64>;

    /// Called after every accepted step. Returns the factor `c` by which `x`
    /// was rescaled; only meaningful for objectives invariant under scaling,
    /// whose gradient then scales by `1/c`.
    fn retract(&mut self, _x: &mut [f64]) -> f64 {
        1.0
    }
}

impl<F> Objective for F
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
{
    fn evaluate(&mut self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        self(x, grad)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

fn two_loop(g: &[f64], pairs: &VecDeque<Pair>) -> Vec<f64> {
    let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut alpha = vec![0.0; pairs.len()];
    for (i, pr) in pairs.iter().enumerate().rev() {
        alpha[i] = pr.rho * dot(&pr.s, &d);
        d.iter_mut().zip(&pr.y).for_each(|(di, yi)| *di -= alpha[i] * yi);
    }
    if let Some(last) = pairs.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        d.iter_mut().for_each(|v| *v *= gamma);
    }
    for (i, pr) in pairs.iter().enumerate() {
        let beta = pr.rho * dot(&pr.y, &d);
        d.iter_mut().zip(&pr.s).for_each(|(di, si)| *di += (alpha[i] - beta) * si);
    }
    d
}

pub fn minimize<O: Objective + ?Sized>(
    obj: &mut O,
    x0: Vec<f64>,
    opts: &DescentOptions,
) -> Result<DescentOutcome> {
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut f = obj.evaluate(&x, &mut g)?;
    let mut pairs: VecDeque<Pair> = VecDeque::new();
    let mut xt = vec![0.0; n];
    let mut gt = vec![0.0; n];
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        let gnorm = inf_norm(&g);
        if gnorm <= opts.gradient_tol {
            return Ok(DescentOutcome {
                x,
                value: f,
                gradient: g,
                gradient_norm: gnorm,
                iterations,
                converged: true,
            });
        }
        iterations += 1;

        let mut d = two_loop(&g, &pairs);
        let mut slope = dot(&g, &d);
        let mut alpha = 1.0;
        if pairs.is_empty() || !(slope < 0.0) {
            pairs.clear();
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
            alpha = 1.0 / slope.abs().sqrt();
        }

        let mut accepted = false;
        let mut ft_accepted = f;
        for _ in 0..opts.max_backtracks {
            for i in 0..n {
                xt[i] = x[i] + alpha * d[i];
            }
            let ft = obj.evaluate(&xt, &mut gt)?;
            if ft.is_finite() {
                let armijo = ft <= f + opts.armijo_c1 * alpha * slope;
                let dslope = dot(&gt, &d);
                let noise = 1e-10 * (f.abs() + 1.0);
                let approx_wolfe =
                    ft <= f + noise && 0.9 * slope <= dslope && dslope <= -0.8 * slope;
                if armijo || approx_wolfe {
                    accepted = true;
                    ft_accepted = ft;
                    break;
                }
            }
            alpha *= opts.backtrack_factor;
        }

        if !accepted {
            if pairs.is_empty() {
                // No progress possible along the steepest direction.
                break;
            }
            pairs.clear();
            continue;
        }

        let mut s: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
        let mut y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        std::mem::swap(&mut x, &mut xt);
        std::mem::swap(&mut g, &mut gt);
        let c = obj.retract(&mut x);
        if c != 1.0 {
            // Keep the curvature pairs in the coordinates of the rescaled
            // iterate: s scales with x and y with the gradient.
            s.iter_mut().for_each(|v| *v *= c);
            y.iter_mut().for_each(|v| *v /= c);
            for pr in pairs.iter_mut() {
                pr.s.iter_mut().for_each(|v| *v *= c);
                pr.y.iter_mut().for_each(|v| *v /= c);
            }
            f = obj.evaluate(&x, &mut g)?;
        } else {
            f = ft_accepted;
        }

        if opts.memory > 0 {
            let sy = dot(&s, &y);
            if sy > 1e-16 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
                pairs.push_back(Pair { s, y, rho: 1.0 / sy });
                if pairs.len() > opts.memory {
                    pairs.pop_front();
                }
            }
        }
    }

    let gnorm = inf_norm(&g);
    Ok(DescentOutcome {
        x,
        value: f,
        gradient: g,
        gradient_norm: gnorm,
        iterations,
        converged: gnorm <= opts.gradient_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> Result<f64> {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        Ok((1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2))
    }

    #[test]
    fn rosenbrock_minimum() {
        let opts = DescentOptions {
            gradient_tol: 1e-10,
            ..Default::default()
        };
        let out = minimize(&mut rosenbrock, vec![-1.2, 1.0], &opts).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-8 && (out.x[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn steepest_descent_on_quadratic() {
        let mut quad = |x: &[f64], g: &mut [f64]| -> Result<f64> {
            g[0] = 2.0 * x[0];
            g[1] = 6.0 * x[1];
            Ok(x[0] * x[0] + 3.0 * x[1] * x[1])
        };
        let opts = DescentOptions {
            memory: 0,
            gradient_tol: 1e-9,
            ..Default::default()
        };
        let out = minimize(&mut quad, vec![3.0, -2.0], &opts).unwrap();
        assert!(out.converged);
        assert!(out.value < 1e-17);
    }

    struct ScaleFree;

    impl Objective for ScaleFree {
        // Rayleigh quotient of diag(1, 4) with renormalization to |x| = 1.
        fn evaluate(&mut self, x: &[f64], g: &mut [f64]) -> Result<f64> {
            let n = x[0] * x[0] + 4.0 * x[1] * x[1];
            let d = x[0] * x[0] + x[1] * x[1];
            let r = n / d;
            g[0] = (2.0 * x[0] - r * 2.0 * x[0]) / d;
            g[1] = (8.0 * x[1] - r * 2.0 * x[1]) / d;
            Ok(r)
        }

        fn retract(&mut self, x: &mut [f64]) -> f64 {
            let c = 1.0 / x[0].hypot(x[1]);
            x.iter_mut().for_each(|v| *v *= c);
            c
        }
    }

    #[test]
    fn retraction_keeps_normalization() {
        let opts = DescentOptions {
            gradient_tol: 1e-12,
            ..Default::default()
        };
        let out = minimize(&mut ScaleFree, vec![0.3, 2.0], &opts).unwrap();
        assert!(out.converged);
        assert!((out.value - 1.0).abs() < 1e-14);
        assert!((out.x[0].hypot(out.x[1]) - 1.0).abs() < 1e-14);
    }
}
