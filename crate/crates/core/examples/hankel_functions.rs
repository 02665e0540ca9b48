//! Hankel functions, their derivatives and the tabulated form used by the
//! field evaluators.
//!
//! `cargo run --example hankel_functions`

use std::f64::consts::PI;

use cyl_tifft::specfun::{hankel, hankel_derivative, hankel_table, HankelKind};

fn main() -> cyl_tifft::Result<()> {
    println!("{:>4} {:>8} {:>24} {:>24}", "m", "x", "H2_m(x)", "H2_m'(x)");
    for &x in &[0.5, 5.0, 50.0] {
        for m in [0i64, 1, 5, -5] {
            let h = hankel(HankelKind::Second, m, x)?;
            let d = hankel_derivative(HankelKind::Second, m, 1, x)?;
            println!("{m:>4} {x:>8} {:>11.4e} {:>+11.4e}i {:>11.4e} {:>+11.4e}i", h.re, h.im, d.re, d.im);
        }
    }

    let x = 20.0;
    let h0 = hankel(HankelKind::First, 0, x)?;
    let h1 = hankel(HankelKind::First, 1, x)?;
    let wronskian = h0.re * h1.im - h1.re * h0.im;
    println!("\nJ_0 Y_1 - J_1 Y_0 at x = {x}: {wronskian:.15e} (expected {:.15e})", -2.0 / (PI * x));

    // Orders far above the argument overflow Y and are flagged.
    let table = hankel_table(HankelKind::Second, 400, 2, 1.0)?;
    println!(
        "table at x = {}: {} of {} entries flagged as overflow",
        table.argument(),
        table.flagged_count(),
        3 * 801
    );
    Ok(())
}
