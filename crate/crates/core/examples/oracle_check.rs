//! Modal near field against the direct radiation integral at a few points.
//!
//! `cargo run --release --example oracle_check`

use std::f64::consts::PI;

use cyl_tifft::field::relative_l2;
use cyl_tifft::nearfield::field_at_points;
use cyl_tifft::oracle::{radiate, OracleConfig};
use cyl_tifft::scenario::Scenario;

fn main() -> cyl_tifft::Result<()> {
    let scenario = Scenario::builtin("perfect_cylinder_smoke").expect("built-in scenario");
    let medium = scenario.medium;
    let lambda = medium.wavelength();
    let prepared = scenario.prepare()?;
    let spectrum = prepared.tifft(&medium, scenario.taylor_order)?;

    let points: Vec<[f64; 3]> = (0..12)
        .map(|n| {
            let phi = PI / 4.0 + PI / 2.0 * n as f64 / 11.0;
            [6.0 * lambda * phi.cos(), 6.0 * lambda * phi.sin(), (n as f64 - 5.5) * 0.2 * lambda]
        })
        .collect();
    let modal = field_at_points(&spectrum, &points, &medium)?;
    let oracle = radiate(
        &prepared.currents,
        &prepared.surface,
        &medium,
        &points,
        &OracleConfig::for_surface(&prepared.surface),
    )?;
    for (i, p) in points.iter().enumerate() {
        println!(
            "({:6.2}, {:6.2}, {:6.2}) lambda  |Ex| modal {:.4e}  oracle {:.4e}",
            p[0] / lambda,
            p[1] / lambda,
            p[2] / lambda,
            modal.e[i][0].norm(),
            oracle.e[i][0].norm()
        );
    }
    let err = relative_l2(modal.e.iter().flatten().copied(), oracle.e.iter().flatten().copied());
    println!("relative L2 error of E: {err:.3e}");
    Ok(())
}
