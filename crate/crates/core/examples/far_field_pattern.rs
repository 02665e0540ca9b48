//! Far-field pattern cuts of the scattered field.
//!
//! `cargo run --release --example far_field_pattern [output.csv]`

use std::f64::consts::PI;

use cyl_tifft::farfield::far_field;
use cyl_tifft::scenario::Scenario;

fn main() -> cyl_tifft::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().join("far_field_pattern.csv").display().to_string());
    let scenario = Scenario::builtin("paper_iv_downscaled").expect("built-in scenario");
    let medium = scenario.medium;
    let lambda = medium.wavelength();
    let spectrum = scenario.prepare()?.tifft(&medium, scenario.taylor_order)?;

    // Azimuthal cut in the equatorial plane; the specular direction is phi = 90 deg.
    let directions: Vec<(f64, f64)> = (0..=36).map(|i| (0.5 * PI, PI * i as f64 / 36.0)).collect();
    let ff = far_field(&spectrum, &directions, 1e3 * lambda, &medium)?;
    let mag: Vec<f64> = ff.e_theta.iter().zip(&ff.e_phi).map(|(t, p)| t.norm_sqr() + p.norm_sqr()).collect();
    let peak = mag.iter().copied().fold(0.0, f64::max);
    println!("{:>8} {:>10}", "phi deg", "dB");
    for ((_, phi), m) in directions.iter().zip(&mag) {
        println!("{:>8.1} {:>10.2}", phi.to_degrees(), 10.0 * (m / peak).max(1e-12).log10());
    }
    ff.write_csv(&path)?;
    println!("wrote {path}");
    Ok(())
}
