use double_phase::convection::{damped_update, inner_midpoint_gap, solve_convection, PicardOptions};
use double_phase::eigen::{rayleigh_robin, rayleigh_steklov, robin_first_eigenpair, EigenOptions};
use double_phase::fem::integrate_interior;
use double_phase::musielak::{luxemburg_norm, modular_full, modular_plain, NormKind};
use double_phase::operators::{
    apply_a, check_conditions, frozen_load, ConditionInputs, GrowthBounds, NonlinearitySpec, PowerTerm,
};
use double_phase::variational::{energy_with_gradient, SignKind, TruncationKind, TruncationSet};
use double_phase::{Error, ExponentConfig, FemFunction, Mesh, QuadratureRule, WeightField};
use proptest::prelude::*;

fn mesh6() -> Mesh {
    Mesh::unit_square(6).unwrap()
}

fn nodal(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, n)
}

fn nonzero(v: &[f64]) -> bool {
    v.iter().any(|x| x.abs() > 1e-3)
}

fn cfg() -> ExponentConfig {
    ExponentConfig::planar(1.5, 1.8).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lattice_identities(v in nodal(49)) {
        let u = FemFunction::new(v).unwrap();
        let (pos, neg) = (u.pos_part(), u.neg_part());
        prop_assert_eq!(pos.sub(&neg), u.clone());
        prop_assert_eq!(pos.axpy(1.0, &neg), u.abs());
    }

    #[test]
    fn quadrature_exact_on_monomials(i in 0u32..=8, j in 0u32..=8) {
        prop_assume!(i + j <= 8);
        let rule = QuadratureRule::standard();
        // Reference triangle (0,0), (1,0), (0,1): ∫ x^i y^j = i! j! / (i + j + 2)!.
        let approx: f64 = rule
            .triangle_points()
            .iter()
            .zip(rule.triangle_weights())
            .map(|(b, w)| w * b[1].powi(i as i32) * b[2].powi(j as i32))
            .sum();
        let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
        let exact = fact(i) * fact(j) / fact(i + j + 2);
        prop_assert!((approx - exact).abs() <= 1e-14, "{} vs {}", approx, exact);
    }

    #[test]
    fn unit_modular_both_variants(v in nodal(49)) {
        prop_assume!(nonzero(&v));
        let m = mesh6();
        let rule = QuadratureRule::standard();
        let mu = WeightField::from_fn(&m, |x| x[0]).unwrap();
        let u = FemFunction::new(v).unwrap();
        let c = cfg();
        let n0 = luxemburg_norm(&m, &rule, &u, &c, &mu, NormKind::Full).unwrap();
        let r0 = modular_full(&m, &rule, &u.scaled(1.0 / n0), &c, &mu).unwrap().total;
        prop_assert!((r0 - 1.0).abs() <= 1e-10);
        let nh = luxemburg_norm(&m, &rule, &u, &c, &mu, NormKind::Plain).unwrap();
        let rh = modular_plain(&m, &rule, &u.scaled(1.0 / nh), &c, &mu).unwrap();
        prop_assert!((rh - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn norm_is_homogeneous(v in nodal(49), c in prop_oneof![-50.0f64..-0.02, 0.02f64..50.0]) {
        prop_assume!(nonzero(&v));
        let m = mesh6();
        let rule = QuadratureRule::standard();
        let mu = WeightField::from_fn(&m, |x| x[0]).unwrap();
        let u = FemFunction::new(v).unwrap();
        let a = luxemburg_norm(&m, &rule, &u.scaled(c), &cfg(), &mu, NormKind::Full).unwrap();
        let b = c.abs() * luxemburg_norm(&m, &rule, &u, &cfg(), &mu, NormKind::Full).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * b, "{} vs {}", a, b);
    }

    #[test]
    fn modular_and_norm_monotone_in_weight(v in nodal(49), bump in 0.0f64..3.0) {
        prop_assume!(nonzero(&v));
        let m = mesh6();
        let rule = QuadratureRule::standard();
        let mu1 = WeightField::from_fn(&m, |x| x[0]).unwrap();
        let mu2 = WeightField::from_fn(&m, |x| x[0] + bump * x[1]).unwrap();
        let u = FemFunction::new(v).unwrap();
        let c = cfg();
        let r1 = modular_full(&m, &rule, &u, &c, &mu1).unwrap().total;
        let r2 = modular_full(&m, &rule, &u, &c, &mu2).unwrap().total;
        prop_assert!(r1 <= r2 * (1.0 + 1e-14));
        let n1 = luxemburg_norm(&m, &rule, &u, &c, &mu1, NormKind::Full).unwrap();
        let n2 = luxemburg_norm(&m, &rule, &u, &c, &mu2, NormKind::Full).unwrap();
        prop_assert!(n1 <= n2 * (1.0 + 1e-11));
    }

    #[test]
    fn rayleigh_quotients_scale_invariant(v in nodal(49), c in 0.01f64..100.0) {
        prop_assume!(nonzero(&v));
        let m = mesh6();
        let rule = QuadratureRule::standard();
        let u = FemFunction::new(v).unwrap();
        let a = rayleigh_robin(&m, &rule, &u, 1.5, 2.0).unwrap();
        let b = rayleigh_robin(&m, &rule, &u.scaled(c), 1.5, 2.0).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
        let a = rayleigh_steklov(&m, &rule, &u, 1.5).unwrap();
        let b = rayleigh_steklov(&m, &rule, &u.scaled(-c), 1.5).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn operator_strictly_monotone(u in nodal(49), v in nodal(49)) {
        let m = mesh6();
        let rule = QuadratureRule::standard();
        let mu = WeightField::from_fn(&m, |x| x[0]).unwrap();
        let (u, v) = (FemFunction::new(u).unwrap(), FemFunction::new(v).unwrap());
        let d = u.sub(&v);
        let s = apply_a(&m, &rule, &u, &d, &cfg(), &mu).unwrap() - apply_a(&m, &rule, &v, &d, &cfg(), &mu).unwrap();
        prop_assert!(s >= -1e-12);
        if d.max_abs() > 1e-6 {
            prop_assert!(s > 0.0);
        }
    }

    #[test]
    fn growth_gate_rejects_understated_constants(a in 0.1f64..5.0, r in 2.0f64..3.0, shrink in 0.05f64..0.95) {
        let c = cfg();
        let spec = NonlinearitySpec {
            // Negative sign keeps the sign condition satisfiable for r > p.
            interior: vec![PowerTerm { coefficient: -a, exponent: r }],
            ..Default::default()
        };
        let g = spec.derive_growth(&c, 3.0, 2.0).unwrap();
        let ok = NonlinearitySpec { growth: Some(g), ..spec.clone() };
        prop_assert!(ok.validate_growth(&c).is_ok());
        let bad = NonlinearitySpec { growth: Some(GrowthBounds { a2: shrink * a, ..g }), ..spec };
        prop_assert!(bad.validate_growth(&c).is_err());
    }

    #[test]
    fn truncation_continuous_at_branch_points(
        a in 0.1f64..3.0, r in 1.85f64..4.0, b in 0.1f64..3.0, r2 in 1.6f64..2.3,
        upper in 1.1f64..5.0, robin in any::<bool>(), plus in any::<bool>(),
    ) {
        let c = ExponentConfig::planar(1.4, 1.8).unwrap();
        let spec = NonlinearitySpec {
            interior: vec![PowerTerm { coefficient: a, exponent: r }],
            boundary: vec![PowerTerm { coefficient: b, exponent: r2 }],
            ..Default::default()
        };
        let kind = if robin { TruncationKind::Robin } else { TruncationKind::Steklov };
        let sign = if plus { SignKind::Plus } else { SignKind::Minus };
        let t = TruncationSet::new(kind, sign, upper, 0.7, 1.0, 1.0, &c).unwrap();
        for s0 in [0.0, upper, -upper] {
            // |s|^{p-2}s is only Hölder at 0, so probe the limit from very close.
            let e = if s0 == 0.0 { 1e-200 } else { 4.0 * f64::EPSILON * s0.abs() };
            let (l, rr) = (t.eval(&spec, s0 - e), t.eval(&spec, s0 + e));
            let scale = 1.0 + l.0.abs() + l.1.abs();
            prop_assert!((l.0 - rr.0).abs() <= 1e-12 * scale && (l.1 - rr.1).abs() <= 1e-12 * scale,
                "jump at {}: {:?} vs {:?}", s0, l, rr);
            let (pl, pr) = (t.primitives(&spec, s0 - e), t.primitives(&spec, s0 + e));
            prop_assert!((pl.0 - pr.0).abs() <= 1e-12 * scale && (pl.1 - pr.1).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn truncated_energy_coercive_along_rays(v in nodal(49), plus in any::<bool>()) {
        prop_assume!(nonzero(&v));
        let m = mesh6();
        let rule = QuadratureRule::standard();
        let c = ExponentConfig::planar(1.4, 1.8).unwrap();
        let mu = WeightField::from_fn(&m, |x| x[0]).unwrap();
        let spec = NonlinearitySpec {
            interior: vec![PowerTerm { coefficient: 1.0, exponent: 3.0 }],
            boundary: vec![PowerTerm { coefficient: 1.0, exponent: 2.2 }],
            ..Default::default()
        };
        let sign = if plus { SignKind::Plus } else { SignKind::Minus };
        let t = TruncationSet::new(TruncationKind::Steklov, sign, 1.5, 0.75, 1.0, 1.0, &c).unwrap();
        let u = FemFunction::new(v).unwrap();
        let mut last = f64::NEG_INFINITY;
        let mut values = Vec::new();
        for s in [1.0, 2.0, 4.0, 8.0, 16.0, 64.0, 256.0] {
            let e = energy_with_gradient(&m, &rule, u.scaled(s).coeffs(), &t, &spec, &mu, None).unwrap();
            values.push(e);
            last = e;
        }
        // Growth at least like t^p eventually: the last ratio beats the linear tail.
        let n = values.len();
        prop_assert!(last > 0.0 && values[n - 1] > values[n - 2], "{:?}", values);
    }

    #[test]
    fn inner_energy_midpoint_convex(u in nodal(49), v in nodal(49), w in nodal(49)) {
        let m = mesh6();
        let rule = QuadratureRule::standard();
        let c = ExponentConfig::planar(1.6, 1.9).unwrap();
        let mu = WeightField::from_fn(&m, |x| x[0]).unwrap();
        let spec = NonlinearitySpec {
            interior_constant: 0.1,
            gradient: vec![double_phase::operators::GradientTerm { coefficient: 0.05, exponent: 0.6 }],
            ..Default::default()
        };
        let load = frozen_load(&m, &rule, &FemFunction::new(w).unwrap(), &mu, &spec).unwrap();
        let gap = inner_midpoint_gap(&m, &rule, &c, &mu, 0.2, &load,
            &FemFunction::new(u).unwrap(), &FemFunction::new(v).unwrap()).unwrap();
        prop_assert!(gap >= -1e-12, "{}", gap);
    }

    #[test]
    fn damping_preserves_nodal_bounds(u in prop::collection::vec(0.0f64..1.5, 20),
                                      v in prop::collection::vec(0.0f64..1.5, 20),
                                      theta in 0.01f64..=1.0) {
        let d = damped_update(&FemFunction::new(u).unwrap(), &FemFunction::new(v).unwrap(), theta).unwrap();
        prop_assert!(d.min() >= 0.0 && d.max() <= 1.5);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gate_never_certifies_failing_conditions(b1 in 0.6f64..2.0, b2 in 0.5f64..3.0, zeta in -1.0f64..-0.01) {
        // Both (A) and (B) fail: b1 too large for (A) and (B) and ζ < 0.
        let report = check_conditions(&ConditionInputs {
            b1, b2, b3: 0.0, beta: 1.0, zeta,
            lambda_robin: 1.0, lambda_steklov: 0.25, theta: 1.0, boundary_norm_term: 1.0,
        }).unwrap();
        prop_assume!(!report.any());
        let m = Mesh::unit_square(4).unwrap();
        let rule = QuadratureRule::standard();
        let c = ExponentConfig::planar(1.6, 1.9).unwrap();
        let mu = WeightField::from_fn(&m, |x| x[0]).unwrap();
        let mut spec = NonlinearitySpec { interior_constant: 0.1, ..Default::default() };
        spec.growth = Some(spec.derive_growth(&c, 1.6, 1.5).unwrap());
        let strict = solve_convection(&m, &rule, &c, &mu, &spec, 0.0, &report, &PicardOptions::default());
        prop_assert!(matches!(strict, Err(Error::GateFailed(_))));
        let loose = PicardOptions { allow_uncertified: true, ..PicardOptions::default() };
        let out = solve_convection(&m, &rule, &c, &mu, &spec, 0.0, &report, &loose).unwrap();
        prop_assert!(!out.certified);
    }
}

#[test]
fn interior_integral_converges_under_refinement() {
    let rule = QuadratureRule::standard();
    let exact = (2.0 / std::f64::consts::PI).powi(2);
    let mut errs = Vec::new();
    for n in [4, 8, 16, 32] {
        let m = Mesh::unit_square(n).unwrap();
        let u = FemFunction::interpolate(&m, |x| {
            (std::f64::consts::PI * x[0]).sin() * (std::f64::consts::PI * x[1]).sin()
        });
        let v = integrate_interior(&m, &rule, &u, |pt| pt.value).unwrap();
        errs.push((v - exact).abs());
    }
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.0, "observed order {order}, errors {errs:?}");
    }
}

#[test]
fn robin_eigenvalue_nondecreasing_in_beta() {
    let m = Mesh::unit_square(8).unwrap();
    let rule = QuadratureRule::standard();
    let opts = EigenOptions::default();
    let l: Vec<f64> = [0.5, 1.0, 4.0]
        .iter()
        .map(|&b| robin_first_eigenpair(&m, &rule, 1.5, b, &opts).unwrap().lambda)
        .collect();
    assert!(l[0] <= l[1] && l[1] <= l[2], "{l:?}");
}
