//! Constant-sign solutions of the Robin-type problem, with the dyadic
//! search for a negative-energy multiple of the first eigenfunction.
//!
//! ```text
//! cargo run --example robin_type
//! ```
use double_phase::suite::RobinScenario;
use double_phase::variational::{
    minimize_energy, small_t_search, verify_constant_sign, MinimizeOptions, SignKind,
};

fn main() -> double_phase::Result<()> {
    let s = RobinScenario::standard(12)?;
    println!("λR = {:.8}, ϑ = {}, ζ = {:.8}", s.eigen.lambda, s.theta, s.zeta);
    let plus = s.truncation(SignKind::Plus)?;
    let small = small_t_search(&s.mesh, &s.rule, &plus, &s.spec, &s.mu, &s.eigen.eigenfunction, 26)?;
    println!("Π+(2^-{} uR) = {:.4e}", small.k, small.energy);

    for sign in [SignKind::Plus, SignKind::Minus] {
        let t = plus.with_sign(sign);
        let m = minimize_energy(
            &s.mesh,
            &s.rule,
            &t,
            &s.spec,
            &s.cfg,
            &s.mu,
            Some(&s.eigen.eigenfunction),
            &MinimizeOptions::default(),
        )?;
        let r = verify_constant_sign(&s.mesh, &s.rule, &m.solution, &t, &s.spec, &s.cfg, &s.mu)?;
        println!(
            "{sign:?}: energy {:.6e}, nodal range [{:.5}, {:.5}], residual {:.2e}",
            m.breakdown.total, r.min_nodal, r.max_nodal, r.untruncated_residual
        );
    }
    Ok(())
}
