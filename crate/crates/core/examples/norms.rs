//! Modulars and Luxemburg norms of a few P1 functions in the double phase
//! space, and the norm-modular relations checked on each.
//!
//! ```text
//! cargo run --example norms
//! ```
use double_phase::musielak::{
    check_modular_norm_relations, check_scaling_trends, luxemburg_norm, modular_full, NormKind,
};
use double_phase::{ExponentConfig, FemFunction, Mesh, QuadratureRule, WeightField};

fn main() -> double_phase::Result<()> {
    let mesh = Mesh::unit_square(16)?;
    let rule = QuadratureRule::standard();
    let cfg = ExponentConfig::planar(1.5, 1.9)?;
    // μ vanishes on the left half of the square.
    let mu = WeightField::from_fn(&mesh, |x| (2.0 * x[0] - 1.0).max(0.0))?;

    let bump = FemFunction::interpolate(&mesh, |x| 16.0 * x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]));
    println!("scale      ‖u‖        ‖u‖₀       ρ̂(u)       clauses");
    for scale in [0.01, 0.3, 1.0, 3.0, 100.0] {
        let u = bump.scaled(scale);
        let plain = luxemburg_norm(&mesh, &rule, &u, &cfg, &mu, NormKind::Plain)?;
        let full = luxemburg_norm(&mesh, &rule, &u, &cfg, &mu, NormKind::Full)?;
        let rho = modular_full(&mesh, &rule, &u, &cfg, &mu)?.total;
        let check = check_modular_norm_relations(&mesh, &rule, &u, &cfg, &mu)?;
        println!(
            "{scale:<10} {plain:<10.4e} {full:<10.4e} {rho:<10.4e} {}",
            if check.all_hold() { "hold".to_string() } else { check.failed_clauses().join(",") }
        );
    }

    let trend = check_scaling_trends(&mesh, &rule, &bump, &cfg, &mu, 8)?;
    println!("ρ̂(t u) → 0 as t → 0: {}, ρ̂(t u) → ∞ as t → ∞: {}", trend.vanishing, trend.blowing_up);
    Ok(())
}
