//! First Robin and Steklov eigenpairs of the discrete p-Laplacian.
//!
//! At `p = 2` the quotient minimizer is compared with a dense generalized
//! eigenvalue solve on the same mesh.
//!
//! ```text
//! cargo run --example eigen -- 1.5
//! ```
use double_phase::eigen::{dense_oracle, first_eigenpair, EigenOptions, EigenProblem};
use double_phase::{Mesh, QuadratureRule};

fn main() -> double_phase::Result<()> {
    let p: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1.5);
    let mesh = Mesh::unit_square(16)?;
    let rule = QuadratureRule::standard();
    let opts = EigenOptions::default();

    for problem in [
        EigenProblem::Robin { beta: 1.0 },
        EigenProblem::Robin { beta: 100.0 },
        EigenProblem::Steklov,
    ] {
        for q in [2.0, p] {
            let e = first_eigenpair(&mesh, &rule, q, problem, &opts)?;
            let oracle = if q == 2.0 {
                format!(", dense {:.10}", dense_oracle(&mesh, problem)?)
            } else {
                String::new()
            };
            println!(
                "{problem:?} p = {q}: λ = {:.10}{oracle}, min interior nodal {:.3e}, {} iterations",
                e.lambda,
                e.min_interior_nodal(&mesh),
                e.iterations
            );
        }
    }
    Ok(())
}
