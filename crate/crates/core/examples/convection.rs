//! Problem with convection: f = 0.1 + b|∇u|^{p-1}. The explicit conditions
//! are evaluated first; the Picard iteration only runs when one holds.
//!
//! ```text
//! cargo run --example convection -- 0.05
//! ```
use double_phase::convection::{solve_convection, PicardOptions};
use double_phase::suite::ConvectionScenario;

fn main() -> double_phase::Result<()> {
    let b: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.05);
    let zeta = 0.2;
    let s = ConvectionScenario::standard(10)?;
    let spec = s.spec(b)?;
    let report = s.conditions(&spec, zeta)?;
    println!("λR = {:.6}, λS = {:.6}, (A) {}, (B) {}", s.robin.lambda, s.steklov.lambda, report.cond_a, report.cond_b);

    match solve_convection(&s.mesh, &s.rule, &s.cfg, &s.mu, &spec, zeta, &report, &PicardOptions::default()) {
        Ok(sol) => {
            for st in &sol.trace {
                println!("  step {:>2}: ‖u_k+1 - u_k‖₀ = {:.3e}", st.outer_index, st.step_norm);
            }
            println!("‖û‖₀ = {:.6e}, residual {:.2e}, certified {}", sol.norm0, sol.residual, sol.certified);
        }
        Err(e) => println!("not solved: {e}"),
    }
    Ok(())
}
