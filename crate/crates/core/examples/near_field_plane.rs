//! Scattered near field on an exterior plane, written as CSV.
//!
//! `cargo run --release --example near_field_plane [output.csv]`

use cyl_tifft::nearfield::{field_on_plane, write_plane_csv, PlaneSpec};
use cyl_tifft::scenario::Scenario;

fn main() -> cyl_tifft::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().join("near_field_plane.csv").display().to_string());
    let scenario = Scenario::builtin("paper_iv_downscaled").expect("built-in scenario");
    let medium = scenario.medium;
    let lambda = medium.wavelength();
    let prepared = scenario.prepare()?;
    let spectrum = prepared.tifft(&medium, scenario.taylor_order)?;

    let plane = PlaneSpec {
        y: 25.0 * lambda,
        x_min: -16.0 * lambda,
        x_max: 16.0 * lambda,
        n_x: 128,
    };
    let field = field_on_plane(&spectrum, &plane, &medium)?;
    let (idx, peak) = field
        .e
        .iter()
        .enumerate()
        .map(|(i, e)| (i, e[0].norm()))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    let p = field.points[idx];
    println!(
        "{} points, peak |Ex| = {peak:.4} V/m at x = {:.2} lambda, z = {:.2} lambda",
        field.len(),
        p[0] / lambda,
        p[2] / lambda
    );
    write_plane_csv(&field, &path)?;
    println!("wrote {path}");
    Ok(())
}
