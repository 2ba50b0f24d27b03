//! The double phase operator A: the pairing identity ⟨A(u), u⟩ = ρ̂(u) and
//! strict monotonicity on random pairs.
//!
//! ```text
//! cargo run --example operators
//! ```
use double_phase::operators::{a_residual, pairing_vs_modular};
use double_phase::{ExponentConfig, FemFunction, Mesh, QuadratureRule, WeightField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> double_phase::Result<()> {
    let mesh = Mesh::unit_square(10)?;
    let rule = QuadratureRule::standard();
    let cfg = ExponentConfig::planar(1.5, 1.9)?;
    let mu = WeightField::from_fn(&mesh, |x| x[0])?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = mesh.num_vertices();
    let mut random = |scale: f64| {
        FemFunction::new((0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()).expect("finite")
    };

    for scale in [0.1, 1.0, 10.0] {
        let u = random(scale);
        let (pairing, modular) = pairing_vs_modular(&mesh, &rule, &u, &cfg, &mu)?;
        println!("scale {scale:>5}: ⟨A(u),u⟩ = {pairing:.12e}, ρ̂(u) = {modular:.12e}");
    }

    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let (u, v) = (random(1.0), random(1.0));
        let ru = a_residual(&mesh, &rule, &u, &cfg, &mu)?;
        let rv = a_residual(&mesh, &rule, &v, &cfg, &mu)?;
        let d = u.sub(&v);
        let pairing: f64 = ru.iter().zip(&rv).zip(d.coeffs()).map(|((a, b), c)| (a - b) * c).sum();
        worst = worst.min(pairing);
    }
    println!("min ⟨A(u) - A(v), u - v⟩ over 50 pairs: {worst:.4e}");
    Ok(())
}
