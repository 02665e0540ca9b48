//! Runtime of the TI-FFT and direct modal paths against grid size.
//!
//! `cargo run --release --example scaling_bench`

use cyl_tifft::scenario::{bench, nlogn_exponent, Scenario};

fn main() -> cyl_tifft::Result<()> {
    let scenario = Scenario::builtin("paper_iv_downscaled").expect("built-in scenario");
    let rows = bench(&scenario, &[1 << 10, 1 << 12, 1 << 14], 30.0, 3)?;
    println!("{:>8} {:>12} {:>12} {:>16} {:>8}", "N", "t_TI [s]", "t_DI [s]", "t_TI/(N log2 N)", "ratio");
    for r in &rows {
        let n = r.n as f64;
        println!(
            "{:>8} {:>12.4e} {:>12} {:>16.3e} {:>8}",
            r.n,
            r.t_ti,
            r.t_di.map_or("censored".into(), |t| format!("{t:.4e}")),
            r.t_ti / (n * n.log2()),
            r.ratio().map_or("-".into(), |x| format!("{x:.1}"))
        );
    }
    println!("t_TI ~ (N log2 N)^{:.3}", nlogn_exponent(&rows));
    Ok(())
}
