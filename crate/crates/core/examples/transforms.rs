//! Forward and inverse cylindrical Fourier transforms on a sampled grid.
//!
//! `cargo run --example transforms`

use std::f64::consts::PI;

use cyl_tifft::geometry::CylGrid;
use cyl_tifft::spectral::{forward_transform, inverse_transform};
use num_complex::Complex64;

fn main() -> cyl_tifft::Result<()> {
    let grid = CylGrid::new(32, 64, 2.0)?;
    // A pure mode m = 4, h = 2 pi * 3 / L plus a constant.
    let h0 = 2.0 * PI * 3.0 / grid.length_z;
    let samples: Vec<Complex64> = (0..grid.len())
        .map(|i| Complex64::from_polar(1.0, -4.0 * grid.phi_of(i) - h0 * grid.z_of(i)) + 0.5)
        .collect();

    let spectrum = forward_transform(&samples, grid, 16);
    let peak = 2.0 * PI * grid.length_z;
    println!("F(4, q=3) / (2 pi L) = {:.6}", spectrum.get(4, 3) / peak);
    println!("F(0, q=0) / (2 pi L) = {:.6}", spectrum.get(0, 0) / peak);
    let residual = spectrum.norm_sqr_excluding(&[(4, 3), (0, 0)]).sqrt() / peak;
    println!("remaining energy: {residual:.2e}");

    let back = inverse_transform(&spectrum, grid);
    let err = back
        .iter()
        .zip(&samples)
        .map(|(a, b)| (a / (2.0 * PI) - b).norm())
        .fold(0.0, f64::max);
    println!("inverse(forward(s)) / 2 pi - s: max {err:.2e}");
    Ok(())
}

trait Energy {
    fn norm_sqr_excluding(&self, skip: &[(i64, usize)]) -> f64;
}

impl Energy for cyl_tifft::spectral::ModalArray {
    fn norm_sqr_excluding(&self, skip: &[(i64, usize)]) -> f64 {
        self.m_values()
            .flat_map(|m| (0..self.n_z).map(move |q| (m, q)))
            .filter(|key| !skip.contains(key))
            .map(|(m, q)| self.get(m, q).norm_sqr())
            .sum()
    }
}
