//! A perturbed cylinder sampled on the grid and split into radial shells.
//!
//! `cargo run --example surface_partition`

use cyl_tifft::excitation::MediumParams;
use cyl_tifft::geometry::{partition_slices, CylGrid, SurfaceOptions, SurfaceShape};

fn main() -> cyl_tifft::Result<()> {
    let medium = MediumParams::free_space(110e9)?;
    let lambda = medium.wavelength();
    let grid = CylGrid::new(128, 128, 32.0 * lambda)?;
    let shape = SurfaceShape::CosinePerturbed {
        radius: 20.0 * lambda,
        amplitude: 0.1 * lambda,
        period_x: 20.0 * lambda,
        period_z: 20.0 * lambda,
    };
    let surface = shape.build(grid, SurfaceOptions::default())?;
    println!(
        "rho in [{:.4}, {:.4}] lambda, reference {:.4} lambda, deviation {:.2e}",
        surface.rho_min() / lambda,
        surface.rho_max() / lambda,
        surface.rho_ref / lambda,
        surface.relative_deviation()
    );
    let area: f64 = (0..grid.len()).map(|i| surface.area(i)).sum();
    println!("sampled area {:.2} lambda^2", area / (lambda * lambda));

    for divisor in [10.0, 20.0, 40.0] {
        let partition = partition_slices(&surface, lambda / divisor)?;
        let centres: Vec<String> = partition.reference_radius.iter().map(|r| format!("{:.4}", r / lambda)).collect();
        println!(
            "slices lambda/{divisor}: {} shells, nodes {:?}, centres [{}] lambda",
            partition.n_shells(),
            partition.counts(),
            centres.join(", ")
        );
    }
    Ok(())
}
