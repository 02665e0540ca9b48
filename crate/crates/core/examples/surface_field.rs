//! Field on a reference cylinder and on a nearby perturbed surface via the
//! radial Taylor series.
//!
//! `cargo run --release --example surface_field`

use cyl_tifft::field::relative_l2;
use cyl_tifft::geometry::{partition_slices, SurfaceOptions, SurfaceShape};
use cyl_tifft::nearfield::{field_on_cylinder, field_on_surface};
use cyl_tifft::scenario::Scenario;

fn main() -> cyl_tifft::Result<()> {
    let scenario = Scenario::builtin("perfect_cylinder_smoke").expect("built-in scenario");
    let medium = scenario.medium;
    let lambda = medium.wavelength();
    let prepared = scenario.prepare()?;
    let spectrum = prepared.tifft(&medium, scenario.taylor_order)?;
    let grid = scenario.grid;

    // Evaluation surface between two cylinders, one shell thick.
    let rho_ref = 5.0 * lambda;
    let eval = SurfaceShape::TiltedCosine { radius: rho_ref + 0.05 * lambda, amplitude: 0.05 * lambda }
        .build(grid, SurfaceOptions::default())?;
    let partition = partition_slices(&eval, 0.2 * lambda)?;

    let on_cylinder = field_on_cylinder(&spectrum, rho_ref, &medium, grid)?;
    println!("peak |E| on rho = 5 lambda: {:.4e} V/m", on_cylinder.max_e());

    let reference = field_on_surface(&spectrum, &eval, &partition, 12, &medium)?;
    for n_max in 0..=6 {
        let approx = field_on_surface(&spectrum, &eval, &partition, n_max, &medium)?;
        let err = relative_l2(approx.e.iter().flatten().copied(), reference.e.iter().flatten().copied());
        println!("Taylor order {n_max}: relative error {err:.3e}");
    }
    Ok(())
}
