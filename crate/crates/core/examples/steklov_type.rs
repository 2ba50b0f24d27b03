//! Constant-sign solutions of the Steklov-type problem with f = |s|s and
//! g = |s|^0.2 s, obtained as minimizers of the truncated energies Γ±.
//!
//! ```text
//! cargo run --example steklov_type
//! ```
use double_phase::suite::SteklovScenario;
use double_phase::variational::{minimize_energy, verify_constant_sign, MinimizeOptions, SignKind};

fn main() -> double_phase::Result<()> {
    let s = SteklovScenario::standard(12)?;
    println!("λS = {:.8}, ζ = {:.8}", s.eigen.lambda, s.zeta);
    for sign in [SignKind::Plus, SignKind::Minus] {
        let t = s.truncation(sign)?;
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
            "{sign:?}: energy {:.6e} from the {} start, nodal range [{:.5}, {:.5}], bounds {}, residual {:.2e}",
            m.breakdown.total,
            m.chosen,
            r.min_nodal,
            r.max_nodal,
            r.bounds_hold(),
            r.untruncated_residual
        );
    }
    Ok(())
}
