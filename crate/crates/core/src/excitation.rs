//! Medium constants, the incident fundamental Gaussian beam and
//! physical-optics currents on the PEC surface.
//!
//! Time dependence is `exp(+i omega t)`, so a wave travelling along `+s`
//! carries the phase `exp(-i k s)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldGrid, Frame};
use crate::geometry::QuasiCylSurface;
use crate::vector::{cart_to_cyl, cross, dot, norm, rcross, real_cyl_to_cart, CVec3, Vec3, CZERO3};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const MU_0: f64 = 4.0e-7 * PI;

/// Homogeneous, lossless medium at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    pub frequency: f64,
    pub omega: f64,
    pub k: f64,
    pub epsilon: f64,
    pub mu: f64,
    pub eta: f64,
    pub v: f64,
}

impl MediumParams {
    pub fn new(frequency: f64, epsilon: f64, mu: f64) -> Result<Self> {
        if !(frequency > 0.0 && epsilon > 0.0 && mu > 0.0) {
            return Err(Error::Domain(format!(
                "medium needs positive frequency, epsilon, mu (got {frequency}, {epsilon}, {mu})"
            )));
        }
        let omega = 2.0 * PI * frequency;
        let v = 1.0 / (mu * epsilon).sqrt();
        Ok(Self {
            frequency,
            omega,
            k: omega / v,
            epsilon,
            mu,
            eta: (mu / epsilon).sqrt(),
            v,
        })
    }

    pub fn free_space(frequency: f64) -> Result<Self> {
        Self::new(frequency, 1.0 / (MU_0 * SPEED_OF_LIGHT * SPEED_OF_LIGHT), MU_0)
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * PI / self.k
    }
}

/// Paraxial fundamental-mode Gaussian beam, possibly astigmatic.
///
/// `waist_x` is the 1/e field radius along `polarization`, `waist_y` along
/// `propagation_axis x polarization`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBeamParams {
    pub waist_x: f64,
    pub waist_y: f64,
    pub waist_center: Vec3,
    pub polarization: Vec3,
    pub propagation_axis: Vec3,
    pub amplitude: f64,
}

impl GaussianBeamParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.waist_x > 0.0 && self.waist_y > 0.0) {
            return Err(Error::Beam("waists must be positive".into()));
        }
        for (name, v) in [
            ("polarization", self.polarization),
            ("propagation_axis", self.propagation_axis),
        ] {
            if (norm(v) - 1.0).abs() > 1e-9 {
                return Err(Error::Beam(format!("{name} is not a unit vector")));
            }
        }
        if dot(self.polarization, self.propagation_axis).abs() > 1e-9 {
            return Err(Error::Beam(
                "polarization is not perpendicular to the propagation axis".into(),
            ));
        }
        Ok(())
    }

    /// Rayleigh distances `(z_R,x, z_R,y)`.
    pub fn rayleigh_ranges(&self, medium: &MediumParams) -> (f64, f64) {
        (
            0.5 * medium.k * self.waist_x * self.waist_x,
            0.5 * medium.k * self.waist_y * self.waist_y,
        )
    }

    /// Complex scalar amplitude at a point.
    pub fn scalar_field(&self, medium: &MediumParams, p: Vec3) -> Complex64 {
        let d = [
            p[0] - self.waist_center[0],
            p[1] - self.waist_center[1],
            p[2] - self.waist_center[2],
        ];
        let second = cross(self.propagation_axis, self.polarization);
        let along = dot(d, self.propagation_axis);
        let (u, w) = (dot(d, self.polarization), dot(d, second));
        let (zr_x, zr_y) = self.rayleigh_ranges(medium);
        let i = Complex64::i();
        let qx = Complex64::new(along, zr_x);
        let qy = Complex64::new(along, zr_y);
        let k = medium.k;
        let envelope = (i * zr_x / qx).sqrt() * (i * zr_y / qy).sqrt();
        let exponent = -i * k * (u * u / (2.0 * qx) + w * w / (2.0 * qy)) - i * k * along;
        self.amplitude * envelope * exponent.exp()
    }
}

/// Incident `E` and `H = (k_hat x E) / eta` at Cartesian points.
pub fn gaussian_beam_field(
    params: &GaussianBeamParams,
    medium: &MediumParams,
    points: &[Vec3],
) -> Result<FieldGrid> {
    params.validate()?;
    let h_dir = cross(params.propagation_axis, params.polarization);
    let mut grid = FieldGrid::zeros(Frame::Cartesian, points.to_vec());
    for (idx, p) in points.iter().enumerate() {
        let u = params.scalar_field(medium, *p);
        let hu = u / medium.eta;
        grid.e[idx] = params.polarization.map(|c| u * c);
        grid.h[idx] = h_dir.map(|c| hu * c);
    }
    Ok(grid)
}

/// Electric and magnetic surface currents at the surface nodes, in
/// cylindrical components. `m` stays zero for PEC scatterers.
#[derive(Debug, Clone)]
pub struct SurfaceCurrents {
    pub j: Vec<CVec3>,
    pub m: Vec<CVec3>,
}

impl SurfaceCurrents {
    pub fn zeros(n: usize) -> Self {
        Self {
            j: vec![CZERO3; n],
            m: vec![CZERO3; n],
        }
    }

    pub fn electric(j: Vec<CVec3>) -> Self {
        let n = j.len();
        Self { j, m: vec![CZERO3; n] }
    }

    pub fn len(&self) -> usize {
        self.j.len()
    }

    pub fn is_empty(&self) -> bool {
        self.j.is_empty()
    }

    pub fn has_magnetic(&self) -> bool {
        self.m.iter().flatten().any(|c| c.norm_sqr() > 0.0)
    }

    pub fn is_zero_at(&self, index: usize) -> bool {
        self.j[index]
            .iter()
            .chain(&self.m[index])
            .all(|c| c.norm_sqr() == 0.0)
    }
}

/// Node positions of a surface, for evaluating the incident field.
pub fn surface_points(surface: &QuasiCylSurface) -> Vec<Vec3> {
    (0..surface.grid.len()).map(|i| surface.position(i)).collect()
}

/// Whether a node is illuminated by a beam travelling along `beam_axis`.
pub fn is_lit(surface: &QuasiCylSurface, index: usize, beam_axis: Vec3) -> bool {
    let n = real_cyl_to_cart(surface.normal[index], surface.grid.phi_of(index));
    dot(n, beam_axis) < 0.0
}

/// Physical-optics currents `J = 2 n x H_inc` on lit nodes, zero in shadow.
pub fn po_currents(
    incident: &FieldGrid,
    surface: &QuasiCylSurface,
    beam_axis: Vec3,
) -> Result<SurfaceCurrents> {
    if incident.len() != surface.grid.len() {
        return Err(Error::Mismatch(format!(
            "incident field has {} points, surface has {} nodes",
            incident.len(),
            surface.grid.len()
        )));
    }
    let incident = incident.to_cartesian();
    let mut currents = SurfaceCurrents::zeros(surface.grid.len());
    for idx in 0..surface.grid.len() {
        if !is_lit(surface, idx, beam_axis) {
            continue;
        }
        let phi = surface.grid.phi_of(idx);
        let h_cyl = cart_to_cyl(incident.h[idx], phi);
        let j = rcross(surface.normal[idx], h_cyl);
        currents.j[idx] = j.map(|c| c * 2.0);
    }
    Ok(currents)
}
