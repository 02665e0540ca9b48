//! Modal coefficients by direct summation and by TI-FFT at increasing
//! Taylor order.
//!
//! `cargo run --release --example modal_coefficients`

use std::time::Instant;

use cyl_tifft::scenario::Scenario;

fn main() -> cyl_tifft::Result<()> {
    let scenario = Scenario::builtin("paper_iv_downscaled").expect("built-in scenario");
    let medium = scenario.medium;
    let prepared = scenario.prepare()?;
    println!(
        "{} nodes, m_max {}, {} propagating axial bins, {} shells",
        prepared.surface.grid.len(),
        prepared.modal.m_max,
        prepared.modal.valid_bins().count(),
        prepared.partition.n_shells()
    );

    let t = Instant::now();
    let direct = prepared.direct(&medium)?;
    println!("direct: {:.3} s", t.elapsed().as_secs_f64());

    for order in 0..=4 {
        let t = Instant::now();
        let fast = prepared.tifft(&medium, order)?;
        let elapsed = t.elapsed().as_secs_f64();
        println!(
            "TI-FFT order {order}: {elapsed:.4} s, relative error {:.3e}",
            fast.relative_error(&direct, &medium)
        );
        for w in &fast.warnings {
            println!("  warning: {}", w.message);
        }
    }
    Ok(())
}
