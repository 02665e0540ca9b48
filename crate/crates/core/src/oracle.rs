//! Direct free-space radiation integral over the surface nodes.
//!
//! Midpoint quadrature with the full dyadic Green's function evaluated in
//! closed form per node pair; `O(N_obs * N_src)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::excitation::{MediumParams, SurfaceCurrents};
use crate::farfield::{direction_frame, FarFieldGrid};
use crate::field::{FieldGrid, Frame};
use crate::geometry::QuasiCylSurface;
use crate::vector::{cadd, cross, cscale, cyl_to_cart, dot, norm, rcross, rdot, scale, sub, CVec3, Vec3, CZERO3};

/// Quadrature settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Smallest accepted distance between an observation point and any node.
    pub min_distance: f64,
}

impl OracleConfig {
    /// Twice the largest node spacing of the surface.
    pub fn for_surface(surface: &QuasiCylSurface) -> Self {
        let g = surface.grid;
        let spacing = (surface.rho_max() * g.d_phi()).max(g.d_z());
        Self {
            min_distance: 2.0 * spacing,
        }
    }
}

/// Current element: Cartesian `J dS` and `M dS` at one position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSource {
    pub position: Vec3,
    pub j: CVec3,
    pub m: CVec3,
}

/// Current elements of every node with nonzero current.
pub fn sources_from_surface(currents: &SurfaceCurrents, surface: &QuasiCylSurface) -> Result<Vec<PointSource>> {
    if currents.len() != surface.grid.len() {
        return Err(Error::Mismatch(format!(
            "{} current samples for {} surface nodes",
            currents.len(),
            surface.grid.len()
        )));
    }
    Ok((0..surface.grid.len())
        .filter(|&i| !currents.is_zero_at(i))
        .map(|i| {
            let phi = surface.grid.phi_of(i);
            let ds = Complex64::new(surface.area(i), 0.0);
            PointSource {
                position: surface.position(i),
                j: cscale(cyl_to_cart(currents.j[i], phi), ds),
                m: cscale(cyl_to_cart(currents.m[i], phi), ds),
            }
        })
        .collect())
}

/// Field of one element at `r`: `(E, H)`.
fn element_field(src: &PointSource, r: Vec3, medium: &MediumParams) -> (CVec3, CVec3) {
    let d = sub(r, src.position);
    let dist = norm(d);
    let u = scale(d, 1.0 / dist);
    let k = medium.k;
    let kr = k * dist;
    let i = Complex64::i();
    let g = Complex64::from_polar(1.0 / (4.0 * PI * dist), -kr);
    let transverse = Complex64::new(1.0 - 1.0 / (kr * kr), -1.0 / kr);
    let longitudinal = Complex64::new(1.0 - 3.0 / (kr * kr), -3.0 / kr);
    let curl = -(i * k + 1.0 / dist) * g;
    // Dyadic G applied to a current, without the -i omega mu / eps factor.
    let dyadic = |c: CVec3| {
        let along = rdot(u, c);
        [0, 1, 2].map(|n| g * (transverse * c[n] - longitudinal * u[n] * along))
    };
    let mut e = CZERO3;
    let mut h = CZERO3;
    if src.j.iter().any(|c| c.norm_sqr() > 0.0) {
        e = cscale(dyadic(src.j), -i * medium.omega * medium.mu);
        h = cscale(rcross(u, src.j), curl);
    }
    if src.m.iter().any(|c| c.norm_sqr() > 0.0) {
        e = cadd(e, cscale(rcross(u, src.m), -curl));
        h = cadd(h, cscale(dyadic(src.m), -i * medium.omega * medium.epsilon));
    }
    (e, h)
}

/// Near-zone field of explicit current elements, Cartesian components.
pub fn radiate_sources(sources: &[PointSource], medium: &MediumParams, points: &[Vec3], config: &OracleConfig) -> Result<FieldGrid> {
    for (index, p) in points.iter().enumerate() {
        let distance = sources
            .iter()
            .map(|s| norm(sub(*p, s.position)))
            .fold(f64::INFINITY, f64::min);
        if distance < config.min_distance {
            return Err(Error::TooClose {
                index,
                distance,
                min_distance: config.min_distance,
            });
        }
    }
    Ok(sum_fields(sources, medium, points))
}

fn sum_fields(sources: &[PointSource], medium: &MediumParams, points: &[Vec3]) -> FieldGrid {
    let values: Vec<(CVec3, CVec3)> = points
        .par_iter()
        .map(|&r| {
            sources.iter().fold((CZERO3, CZERO3), |(e, h), s| {
                let (de, dh) = element_field(s, r, medium);
                (cadd(e, de), cadd(h, dh))
            })
        })
        .collect();
    let mut out = FieldGrid::zeros(Frame::Cartesian, points.to_vec());
    for (n, (e, h)) in values.into_iter().enumerate() {
        out.e[n] = e;
        out.h[n] = h;
    }
    out
}

/// Radiation integral of the surface currents at `points`, Cartesian
/// components.
pub fn radiate(
    currents: &SurfaceCurrents,
    surface: &QuasiCylSurface,
    medium: &MediumParams,
    points: &[Vec3],
    config: &OracleConfig,
) -> Result<FieldGrid> {
    let sources = sources_from_surface(currents, surface)?;
    for (index, p) in points.iter().enumerate() {
        let distance = (0..surface.grid.len())
            .map(|i| norm(sub(*p, surface.position(i))))
            .fold(f64::INFINITY, f64::min);
        if distance < config.min_distance {
            return Err(Error::TooClose {
                index,
                distance,
                min_distance: config.min_distance,
            });
        }
    }
    Ok(sum_fields(&sources, medium, points))
}

/// Far-zone radiation integral: `exp(-ikR)/R` times the source's angular
/// spectrum, with exact phase `k r_hat . r'` per element.
pub fn radiate_far_zone(
    sources: &[PointSource],
    directions: &[(f64, f64)],
    distance: f64,
    medium: &MediumParams,
) -> Result<FarFieldGrid> {
    let i = Complex64::i();
    let k = medium.k;
    let values: Vec<Result<[Complex64; 4]>> = directions
        .par_iter()
        .map(|&(theta, phi)| {
            let (r_hat, theta_hat, phi_hat) = direction_frame(theta, phi)?;
            let mut nj = CZERO3;
            let mut nm = CZERO3;
            for s in sources {
                let phase = Complex64::from_polar(1.0, k * dot(r_hat, s.position));
                nj = cadd(nj, cscale(s.j, phase));
                nm = cadd(nm, cscale(s.m, phase));
            }
            let g = Complex64::from_polar(1.0 / (4.0 * PI * distance), -k * distance);
            // E = -i omega mu G (N - r (r.N)) + i k G (r x L).
            let e_of = |t: Vec3| {
                -i * medium.omega * medium.mu * g * rdot(t, nj) + i * k * g * rdot(t, rcross(r_hat, nm))
            };
            let e_theta = e_of(theta_hat);
            let e_phi = e_of(phi_hat);
            // H = r x E / eta.
            let h_theta = -e_phi / medium.eta;
            let h_phi = e_theta / medium.eta;
            debug_assert!((dot(cross(r_hat, theta_hat), phi_hat) - 1.0).abs() < 1e-12);
            Ok([e_theta, e_phi, h_theta, h_phi])
        })
        .collect();
    let mut out = FarFieldGrid::zeros(directions.to_vec(), distance);
    for (n, v) in values.into_iter().enumerate() {
        let [et, ep, ht, hp] = v?;
        out.e_theta[n] = et;
        out.e_phi[n] = ep;
        out.h_theta[n] = ht;
        out.h_phi[n] = hp;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn medium() -> MediumParams {
        MediumParams::free_space(1e9).unwrap()
    }

    fn dipole() -> PointSource {
        PointSource {
            position: [0.0; 3],
            j: [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            m: CZERO3,
        }
    }

    #[test]
    fn hertzian_dipole_spherical_form() {
        let md = medium();
        let (k, eta) = (md.k, md.eta);
        let i = Complex64::i();
        let cfg = OracleConfig { min_distance: 1e-6 };
        for &(r, theta) in &[(0.37, PI / 2.0), (1.9, 0.6), (0.05, 2.2)] {
            let p = [r * theta.sin(), 0.0, r * theta.cos()];
            let f = radiate_sources(&[dipole()], &md, &[p], &cfg).unwrap();
            let phase = Complex64::from_polar(1.0, -k * r);
            let ikr = i * k * r;
            let e_r = eta * theta.cos() / (2.0 * PI * r * r) * (1.0 + 1.0 / ikr) * phase;
            let e_t = i * eta * k * theta.sin() / (4.0 * PI * r) * (1.0 + 1.0 / ikr - 1.0 / (k * r).powi(2)) * phase;
            let h_p = i * k * theta.sin() / (4.0 * PI * r) * (1.0 + 1.0 / ikr) * phase;
            // Spherical to Cartesian in the xz-plane.
            let ex = e_r * theta.sin() + e_t * theta.cos();
            let ez = e_r * theta.cos() - e_t * theta.sin();
            let scale = e_r.norm() + e_t.norm();
            assert!((f.e[0][0] - ex).norm() < 1e-10 * scale);
            assert!(f.e[0][1].norm() < 1e-10 * scale);
            assert!((f.e[0][2] - ez).norm() < 1e-10 * scale);
            assert!((f.h[0][1] - h_p).norm() < 1e-10 * h_p.norm());
        }
    }

    #[test]
    fn magnetic_element_is_dual_of_electric() {
        let md = medium();
        let cfg = OracleConfig { min_distance: 1e-6 };
        let p = [0.3, -0.2, 0.5];
        let ej = radiate_sources(&[dipole()], &md, &[p], &cfg).unwrap();
        let mut mag = dipole();
        mag.m = mag.j;
        mag.j = CZERO3;
        let em = radiate_sources(&[mag], &md, &[p], &cfg).unwrap();
        // Duality with numerically equal currents: E_M = -H_J, H_M = E_J / eta^2.
        let eta2 = md.eta * md.eta;
        for c in 0..3 {
            assert!((em.e[0][c] + ej.h[0][c]).norm() < 1e-12 * ej.max_e() / md.eta);
            assert!((em.h[0][c] - ej.e[0][c] / eta2).norm() < 1e-12 * ej.max_e() / eta2);
        }
    }

    #[test]
    fn zero_and_antisymmetric_sources() {
        let md = medium();
        let cfg = OracleConfig { min_distance: 1e-3 };
        let pts = [[0.4, 0.1, 0.2], [0.4, -0.1, 0.2]];
        let zero = PointSource { j: CZERO3, ..dipole() };
        assert_eq!(radiate_sources(&[zero], &md, &pts, &cfg).unwrap().max_e(), 0.0);
        // Opposite z-currents mirrored in y: field odd under y -> -y.
        let up = PointSource { position: [0.0, 0.05, 0.0], ..dipole() };
        let down = PointSource {
            position: [0.0, -0.05, 0.0],
            j: cscale(dipole().j, Complex64::new(-1.0, 0.0)),
            m: CZERO3,
        };
        let f = radiate_sources(&[up, down], &md, &pts, &cfg).unwrap();
        let scale = f.max_e();
        // E_x, E_z odd; E_y even in magnitude with flipped sign pattern.
        assert!((f.e[0][0] + f.e[1][0]).norm() < 1e-12 * scale);
        assert!((f.e[0][1] - f.e[1][1]).norm() < 1e-12 * scale);
        assert!((f.e[0][2] + f.e[1][2]).norm() < 1e-12 * scale);
    }

    #[test]
    fn superposition() {
        let md = medium();
        let cfg = OracleConfig { min_distance: 1e-3 };
        let a = PointSource { position: [0.01, 0.0, 0.02], ..dipole() };
        let b = PointSource {
            position: [-0.03, 0.01, 0.0],
            j: [Complex64::new(0.2, 1.0), Complex64::new(0.0, -0.5), Complex64::new(0.1, 0.0)],
            m: [Complex64::new(3.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(-1.0, 2.0)],
        };
        let pts = [[0.5, 0.5, 0.5], [-1.0, 0.3, 2.0]];
        let fa = radiate_sources(&[a], &md, &pts, &cfg).unwrap();
        let fb = radiate_sources(&[b], &md, &pts, &cfg).unwrap();
        let fab = radiate_sources(&[a, b], &md, &pts, &cfg).unwrap();
        for n in 0..2 {
            for c in 0..3 {
                let sum = fa.e[n][c] + fb.e[n][c];
                assert!((fab.e[n][c] - sum).norm() <= 1e-12 * sum.norm().max(fab.max_e()));
            }
        }
    }

    #[test]
    fn rejects_close_points() {
        let md = medium();
        let cfg = OracleConfig { min_distance: 0.1 };
        assert!(matches!(
            radiate_sources(&[dipole()], &md, &[[0.05, 0.0, 0.0]], &cfg),
            Err(Error::TooClose { .. })
        ));
    }

    #[test]
    fn far_zone_matches_near_zone_at_large_distance() {
        let md = medium();
        let lambda = md.wavelength();
        let sources = [
            PointSource { position: [0.3 * lambda, 0.0, 0.1 * lambda], ..dipole() },
            PointSource {
                position: [0.0, -0.4 * lambda, 0.0],
                j: [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.3), Complex64::new(0.0, 0.0)],
                m: [Complex64::new(0.0, 0.0), Complex64::new(100.0, 0.0), Complex64::new(0.0, 0.0)],
            },
        ];
        let dirs = [(1.0, 0.3), (2.0, 4.0)];
        let r = 1e5 * lambda;
        let ff = radiate_far_zone(&sources, &dirs, r, &md).unwrap();
        let cfg = OracleConfig { min_distance: 1.0 };
        for (n, &(t, p)) in dirs.iter().enumerate() {
            let (r_hat, th, ph) = direction_frame(t, p).unwrap();
            let f = radiate_sources(&sources, &md, &[scale(r_hat, r)], &cfg).unwrap();
            let et = rdot(th, f.e[0]);
            let ep = rdot(ph, f.e[0]);
            let s = et.norm() + ep.norm();
            assert!((et - ff.e_theta[n]).norm() < 1e-4 * s);
            assert!((ep - ff.e_phi[n]).norm() < 1e-4 * s);
        }
    }
}
