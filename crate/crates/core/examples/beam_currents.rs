//! Gaussian-beam illumination and the physical-optics currents it induces.
//!
//! `cargo run --example beam_currents`

use cyl_tifft::excitation::{gaussian_beam_field, is_lit, po_currents, surface_points, GaussianBeamParams, MediumParams};
use cyl_tifft::geometry::{CylGrid, SurfaceOptions, SurfaceShape};

fn main() -> cyl_tifft::Result<()> {
    let medium = MediumParams::free_space(110e9)?;
    let lambda = medium.wavelength();
    let grid = CylGrid::new(128, 128, 32.0 * lambda)?;
    let surface = SurfaceShape::Cylinder { radius: 20.0 * lambda }.build(grid, SurfaceOptions::default())?;
    let beam = GaussianBeamParams {
        waist_x: 4.0 * lambda,
        waist_y: 4.0 * lambda,
        waist_center: [0.0, 25.0 * lambda, 0.0],
        polarization: [1.0, 0.0, 0.0],
        propagation_axis: [0.0, -1.0, 0.0],
        amplitude: 1.0,
    };
    let (zr_x, zr_y) = beam.rayleigh_ranges(&medium);
    println!("Rayleigh ranges {:.1} / {:.1} lambda", zr_x / lambda, zr_y / lambda);

    let incident = gaussian_beam_field(&beam, &medium, &surface_points(&surface))?;
    let currents = po_currents(&incident, &surface, beam.propagation_axis)?;
    let lit = (0..grid.len()).filter(|&i| is_lit(&surface, i, beam.propagation_axis)).count();
    println!("{lit} of {} nodes lit", grid.len());

    let peak = |c: usize| currents.j.iter().map(|j| j[c].norm()).fold(0.0, f64::max);
    println!(
        "peak |J| components (rho, phi, z): {:.3e}, {:.3e}, {:.3e} A/m",
        peak(0),
        peak(1),
        peak(2)
    );
    let top = grid.index(grid.n_phi / 4, grid.n_z / 2);
    println!(
        "at phi = {:.3} rad, z = 0: |E_inc| = {:.4}, |J_phi| * eta / 2 = {:.4}",
        grid.phi_of(top),
        incident.e[top][0].norm(),
        currents.j[top][1].norm() * medium.eta / 2.0
    );
    Ok(())
}
