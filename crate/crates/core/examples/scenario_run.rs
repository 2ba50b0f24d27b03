//! Runs a scenario file in memory and prints its report. Without an
//! argument a small Robin-type scenario is used.
//!
//! ```text
//! cargo run --example scenario_run -- scenarios/t43.cfg
//! ```
use double_phase::config::ScenarioConfig;
use double_phase::runner::{emit_report, execute};

const DEFAULT: &str = "
theorem = T43
n = 8
p = 1.4
q = 1.8
mu = linear_x1
f.power = 1.0 @ 3.0
zeta_margin = 0.5
";

fn main() -> double_phase::Result<()> {
    let config = match std::env::args().nth(1) {
        Some(path) => ScenarioConfig::read(path.as_ref())?,
        None => ScenarioConfig::parse(DEFAULT, "example")?,
    };
    let (manifest, files) = execute(&config)?;
    print!("{}", emit_report(&manifest));
    for f in files {
        println!("would write {} ({} bytes)", f.path, f.contents.len());
    }
    Ok(())
}
