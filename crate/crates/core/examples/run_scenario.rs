//! The full scenario pipeline from a TOML file or built-in name.
//!
//! `cargo run --release --example run_scenario [scenario] [output_dir]`

use cyl_tifft::scenario::{run, RunOptions, Scenario};

fn main() -> cyl_tifft::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "perfect_cylinder_smoke".into());
    let output_dir = args
        .next()
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("cyl-tifft-run"));
    let scenario = Scenario::load(&name)?;
    println!("{} (digest {})", scenario.name, &scenario.digest[..12]);
    let report = run(&scenario, &RunOptions { output_dir: output_dir.clone(), strict: false })?;
    for c in &report.comparisons {
        println!("{:<40} relative L2 {:.3e}", c.name, c.relative_l2);
    }
    for (stage, t) in &report.timings_s {
        println!("{stage:<40} {t:.3} s");
    }
    println!("{} artifacts in {}", report.artifacts.len(), output_dir.display());
    Ok(())
}
