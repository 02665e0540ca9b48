//! Cylindrical computational grids, quasi-cylindrical surfaces and their
//! partition into thin radial shells.

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{from_cylindrical_coords, Vec3};

/// Uniform `n_phi x n_z` grid over `phi in [0, 2pi)` and
/// `z in [-length_z/2, length_z/2)`. Node `(i, j)` is stored at
/// `i * n_z + j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylGrid {
    pub n_phi: usize,
    pub n_z: usize,
    pub length_z: f64,
}

impl CylGrid {
    pub fn new(n_phi: usize, n_z: usize, length_z: f64) -> Result<Self> {
        for (name, n) in [("n_phi", n_phi), ("n_z", n_z)] {
            if n < 2 || !n.is_power_of_two() {
                return Err(Error::Grid(format!("{name} = {n} is not a power of two >= 2")));
            }
        }
        if !(length_z.is_finite() && length_z > 0.0) {
            return Err(Error::Grid(format!("length_z = {length_z} must be positive")));
        }
        Ok(Self {
            n_phi,
            n_z,
            length_z,
        })
    }

    pub fn len(&self) -> usize {
        self.n_phi * self.n_z
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn d_phi(&self) -> f64 {
        TAU / self.n_phi as f64
    }

    pub fn d_z(&self) -> f64 {
        self.length_z / self.n_z as f64
    }

    pub fn phi(&self, i: usize) -> f64 {
        i as f64 * self.d_phi()
    }

    pub fn z(&self, j: usize) -> f64 {
        -0.5 * self.length_z + j as f64 * self.d_z()
    }

    pub fn index(&self, i_phi: usize, i_z: usize) -> usize {
        i_phi * self.n_z + i_z
    }

    /// `(i_phi, i_z)` of a flat node index.
    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.n_z, index % self.n_z)
    }

    pub fn phi_of(&self, index: usize) -> f64 {
        self.phi(index / self.n_z)
    }

    pub fn z_of(&self, index: usize) -> f64 {
        self.z(index % self.n_z)
    }
}

/// Acceptance bounds for [`build_surface`].
#[derive(Debug, Clone, Copy)]
pub struct SurfaceOptions {
    /// Largest accepted `|rho - rho_ref| / rho_ref`.
    pub max_relative_deviation: f64,
    /// Reference radius; the midpoint of the sampled radial range if unset.
    pub reference_radius: Option<f64>,
}

impl Default for SurfaceOptions {
    fn default() -> Self {
        Self {
            max_relative_deviation: 0.1,
            reference_radius: None,
        }
    }
}

/// A surface `rho(phi, z)` sampled on a [`CylGrid`].
///
/// Normals are stored as cylindrical components `(n_rho, n_phi, n_z)` and
/// point away from the axis. `jacobian = rho / (n . rho_hat)`, so that
/// `dS = jacobian * dphi * dz`.
#[derive(Debug, Clone)]
pub struct QuasiCylSurface {
    pub grid: CylGrid,
    pub rho: Vec<f64>,
    pub rho_ref: f64,
    pub normal: Vec<Vec3>,
    pub jacobian: Vec<f64>,
}

impl QuasiCylSurface {
    pub fn rho_min(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn rho_max(&self) -> f64 {
        self.rho.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cartesian position of a node.
    pub fn position(&self, index: usize) -> Vec3 {
        let (i, j) = self.grid.split(index);
        from_cylindrical_coords(self.rho[index], self.grid.phi(i), self.grid.z(j))
    }

    /// Surface element `dS` of a node.
    pub fn area(&self, index: usize) -> f64 {
        self.jacobian[index] * self.grid.d_phi() * self.grid.d_z()
    }

    /// Largest `|rho - rho_ref| / rho_ref` over the nodes.
    pub fn relative_deviation(&self) -> f64 {
        self.rho
            .iter()
            .map(|r| (r - self.rho_ref).abs() / self.rho_ref)
            .fold(0.0, f64::max)
    }
}

/// Samples `radius_fn(phi, z)` on the grid and derives normals and Jacobians.
pub fn build_surface(
    grid: CylGrid,
    radius_fn: impl Fn(f64, f64) -> f64,
    options: SurfaceOptions,
) -> Result<QuasiCylSurface> {
    let mut rho = Vec::with_capacity(grid.len());
    for i in 0..grid.n_phi {
        for j in 0..grid.n_z {
            rho.push(radius_fn(grid.phi(i), grid.z(j)));
        }
    }
    surface_from_samples(grid, rho, options)
}

/// Builds a surface from radii already sampled at the grid nodes.
pub fn surface_from_samples(
    grid: CylGrid,
    rho: Vec<f64>,
    options: SurfaceOptions,
) -> Result<QuasiCylSurface> {
    if rho.len() != grid.len() {
        return Err(Error::Surface(format!(
            "{} radii for a grid of {} nodes",
            rho.len(),
            grid.len()
        )));
    }
    if let Some((index, r)) = rho.iter().enumerate().find(|(_, r)| !(r.is_finite() && **r > 0.0)) {
        return Err(Error::Surface(format!("radius {r} at node {index} is not positive")));
    }
    let lo = rho.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rho_ref = options.reference_radius.unwrap_or(0.5 * (lo + hi));
    let deviation = (hi - rho_ref).abs().max((rho_ref - lo).abs()) / rho_ref;
    if deviation >= options.max_relative_deviation {
        return Err(Error::Surface(format!(
            "relative radial deviation {deviation:.3e} exceeds the quasi-cylindrical bound {}",
            options.max_relative_deviation
        )));
    }

    let (n_phi, n_z) = (grid.n_phi, grid.n_z);
    let (d_phi, d_z) = (grid.d_phi(), grid.d_z());
    let at = |i: usize, j: usize| rho[grid.index(i, j)];
    let mut normal = Vec::with_capacity(grid.len());
    let mut jacobian = Vec::with_capacity(grid.len());
    for i in 0..n_phi {
        let ip = (i + 1) % n_phi;
        let im = (i + n_phi - 1) % n_phi;
        for j in 0..n_z {
            let r = at(i, j);
            let dr_dphi = (at(ip, j) - at(im, j)) / (2.0 * d_phi);
            let dr_dz = if n_z < 3 {
                0.0
            } else if j == 0 {
                (-3.0 * at(i, 0) + 4.0 * at(i, 1) - at(i, 2)) / (2.0 * d_z)
            } else if j == n_z - 1 {
                (3.0 * at(i, j) - 4.0 * at(i, j - 1) + at(i, j - 2)) / (2.0 * d_z)
            } else {
                (at(i, j + 1) - at(i, j - 1)) / (2.0 * d_z)
            };
            let raw = [1.0, -dr_dphi / r, -dr_dz];
            let len = (raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2]).sqrt();
            let n = [raw[0] / len, raw[1] / len, raw[2] / len];
            if !(n[0] > 0.0 && len.is_finite()) {
                return Err(Error::Surface(format!(
                    "normal at node {} is tangent to the radial direction",
                    grid.index(i, j)
                )));
            }
            normal.push(n);
            jacobian.push(r / n[0]);
        }
    }
    Ok(QuasiCylSurface {
        grid,
        rho,
        rho_ref,
        normal,
        jacobian,
    })
}

/// Reads radii from a CSV file with header `phi_index,z_index,rho_meters`.
pub fn read_surface_csv(
    path: impl AsRef<Path>,
    grid: CylGrid,
    options: SurfaceOptions,
) -> Result<QuasiCylSurface> {
    #[derive(Deserialize)]
    struct Row {
        phi_index: usize,
        z_index: usize,
        rho_meters: f64,
    }
    let mut reader = csv::Reader::from_path(path)?;
    let mut rho = vec![f64::NAN; grid.len()];
    for row in reader.deserialize() {
        let row: Row = row?;
        if row.phi_index >= grid.n_phi || row.z_index >= grid.n_z {
            return Err(Error::Surface(format!(
                "node ({}, {}) is outside the {}x{} grid",
                row.phi_index, row.z_index, grid.n_phi, grid.n_z
            )));
        }
        let slot = &mut rho[grid.index(row.phi_index, row.z_index)];
        if !slot.is_nan() {
            return Err(Error::Surface(format!(
                "node ({}, {}) listed twice",
                row.phi_index, row.z_index
            )));
        }
        *slot = row.rho_meters;
    }
    if let Some(missing) = rho.iter().position(|r| r.is_nan()) {
        let (i, j) = grid.split(missing);
        return Err(Error::Surface(format!("node ({i}, {j}) missing from CSV")));
    }
    surface_from_samples(grid, rho, options)
}

/// Built-in parametric surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceShape {
    /// `rho = radius`.
    Cylinder { radius: f64 },
    /// `rho = radius + amplitude * cos(phi)`.
    TiltedCosine { radius: f64, amplitude: f64 },
    /// The circle `x^2 + (y - p)^2 = radius^2` displaced along `y` by
    /// `p(x, z) = amplitude cos(2 pi x / period_x) cos(2 pi z / period_z)`.
    /// On the `y > 0` half this is `y = sqrt(radius^2 - x^2) + p(x, z)`.
    CosinePerturbed {
        radius: f64,
        amplitude: f64,
        period_x: f64,
        period_z: f64,
    },
}

impl SurfaceShape {
    pub fn radius_at(&self, phi: f64, z: f64) -> f64 {
        match *self {
            SurfaceShape::Cylinder { radius } => radius,
            SurfaceShape::TiltedCosine { radius, amplitude } => radius + amplitude * phi.cos(),
            SurfaceShape::CosinePerturbed {
                radius,
                amplitude,
                period_x,
                period_z,
            } => {
                let (s, c) = phi.sin_cos();
                let z_factor = amplitude * (TAU * z / period_z).cos();
                let mut rho = radius;
                for _ in 0..100 {
                    let p = z_factor * (TAU * rho * c / period_x).cos();
                    let next = s * p + (radius * radius - p * p * c * c).sqrt();
                    let done = (next - rho).abs() <= 1e-15 * radius;
                    rho = next;
                    if done {
                        break;
                    }
                }
                rho
            }
        }
    }

    pub fn build(&self, grid: CylGrid, options: SurfaceOptions) -> Result<QuasiCylSurface> {
        build_surface(grid, |phi, z| self.radius_at(phi, z), options)
    }
}

/// Nodes grouped into shells between adjacent reference cylinders.
#[derive(Debug, Clone)]
pub struct SlicePartition {
    /// Shell boundaries, ascending; shell `s` spans `boundaries[s]..boundaries[s + 1]`.
    pub boundaries: Vec<f64>,
    /// Shell index of every node.
    pub assignment: Vec<usize>,
    /// Taylor expansion center of every shell (its mid-radius).
    pub reference_radius: Vec<f64>,
    pub thickness: f64,
}

impl SlicePartition {
    pub fn n_shells(&self) -> usize {
        self.reference_radius.len()
    }

    /// Node indices belonging to a shell.
    pub fn nodes(&self, shell: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, &s)| s == shell)
            .map(|(i, _)| i)
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_shells()];
        for &s in &self.assignment {
            counts[s] += 1;
        }
        counts
    }
}

/// Uniform shells of `slice_thickness` centred on the surface's radial span.
pub fn partition_slices(surface: &QuasiCylSurface, slice_thickness: f64) -> Result<SlicePartition> {
    if !(slice_thickness.is_finite() && slice_thickness > 0.0) {
        return Err(Error::Surface(format!(
            "slice thickness {slice_thickness} must be positive"
        )));
    }
    let (lo, hi) = (surface.rho_min(), surface.rho_max());
    let span = hi - lo;
    // The small slack keeps an exact multiple of the thickness from rounding up.
    let count = ((span / slice_thickness) * (1.0 - 1e-9)).ceil().max(1.0) as usize;
    let start = 0.5 * (lo + hi) - 0.5 * count as f64 * slice_thickness;
    let boundaries: Vec<f64> = (0..=count)
        .map(|s| start + s as f64 * slice_thickness)
        .collect();
    let reference_radius = (0..count)
        .map(|s| start + (s as f64 + 0.5) * slice_thickness)
        .collect();
    let assignment = surface
        .rho
        .iter()
        .map(|&r| {
            let s = ((r - start) / slice_thickness).floor();
            (s.max(0.0) as usize).min(count - 1)
        })
        .collect();
    Ok(SlicePartition {
        boundaries,
        assignment,
        reference_radius,
        thickness: slice_thickness,
    })
}
