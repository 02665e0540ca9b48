//! Closed-form far field of the modal expansion.
//!
//! In the direction `(theta, phi)` only the axial wavenumber `h = k cos(theta)`
//! survives the stationary-phase limit:
//!
//! ```text
//! E = C sum_m i^m exp(-i m phi) [phi_hat a_m(h) + theta_hat i b_m(h)]
//! C = -2 k sin(theta) exp(-i k R) / R
//! ```
//!
//! and `H = r_hat x E / eta`. Off-grid `a_m(h)`, `b_m(h)` come from
//! band-limited interpolation over the periodic axial window.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::excitation::MediumParams;
use crate::field::relative_l2;
use crate::spectral::ModalSpectrum;
use crate::vector::Vec3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Transverse far-field components at a list of directions.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldGrid {
    /// `(theta, phi)` in radians.
    pub directions: Vec<(f64, f64)>,
    /// Reference distance in meters.
    pub distance: f64,
    pub e_theta: Vec<Complex64>,
    pub e_phi: Vec<Complex64>,
    pub h_theta: Vec<Complex64>,
    pub h_phi: Vec<Complex64>,
}

impl FarFieldGrid {
    pub fn zeros(directions: Vec<(f64, f64)>, distance: f64) -> Self {
        let n = directions.len();
        Self {
            directions,
            distance,
            e_theta: vec![ZERO; n],
            e_phi: vec![ZERO; n],
            h_theta: vec![ZERO; n],
            h_phi: vec![ZERO; n],
        }
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Stacked `(E_theta, E_phi)` samples.
    pub fn e_samples(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.e_theta.iter().chain(&self.e_phi).copied()
    }

    /// Relative L2 distance of the stacked `E` components.
    pub fn relative_error(&self, reference: &FarFieldGrid) -> f64 {
        relative_l2(self.e_samples(), reference.e_samples())
    }

    /// Writes `theta_deg,phi_deg,re_Etheta,im_Etheta,re_Ephi,im_Ephi` rows.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "theta_deg,phi_deg,re_Etheta,im_Etheta,re_Ephi,im_Ephi")?;
        for (n, &(t, p)) in self.directions.iter().enumerate() {
            let (et, ep) = (self.e_theta[n], self.e_phi[n]);
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e}",
                t.to_degrees(),
                p.to_degrees(),
                et.re,
                et.im,
                ep.re,
                ep.im
            )?;
        }
        Ok(())
    }
}

/// Unit vectors `(r_hat, theta_hat, phi_hat)` of a direction.
pub fn direction_frame(theta: f64, phi: f64) -> Result<(Vec3, Vec3, Vec3)> {
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::Direction(theta));
    }
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Ok(([st * cp, st * sp, ct], [ct * cp, ct * sp, -st], [-sp, cp, 0.0]))
}

/// `n_theta x n_phi` directions on an open polar grid: `theta` spans
/// `(theta_min, theta_max)` at cell centres, `phi` spans `[phi_min, phi_max]`.
pub fn direction_grid(theta_range: (f64, f64), n_theta: usize, phi_range: (f64, f64), n_phi: usize) -> Vec<(f64, f64)> {
    let step_t = (theta_range.1 - theta_range.0) / n_theta as f64;
    let phis: Vec<f64> = if n_phi == 1 {
        vec![phi_range.0]
    } else {
        let step = (phi_range.1 - phi_range.0) / (n_phi - 1) as f64;
        (0..n_phi).map(|j| phi_range.0 + j as f64 * step).collect()
    };
    (0..n_theta)
        .flat_map(|i| {
            let t = theta_range.0 + (i as f64 + 0.5) * step_t;
            phis.iter().map(move |&p| (t, p))
        })
        .collect()
}

/// Weights `D_q(h)` that interpolate an axial spectrum to an off-grid `h`.
fn dirichlet_weights(spectrum: &ModalSpectrum, h: f64) -> Vec<Complex64> {
    let cyl = spectrum.grid.cyl;
    let n = cyl.n_z;
    spectrum
        .grid
        .h
        .iter()
        .map(|&hq| {
            let mut acc = ZERO;
            for l in 0..n {
                acc += Complex64::from_polar(1.0, (h - hq) * cyl.z(l));
            }
            acc / n as f64
        })
        .collect()
}

/// Far field of the spectrum at distance `distance` in each direction.
pub fn far_field(
    spectrum: &ModalSpectrum,
    directions: &[(f64, f64)],
    distance: f64,
    medium: &MediumParams,
) -> Result<FarFieldGrid> {
    if spectrum.grid.valid_bins().all(|(q, _)| spectrum.grid.taper[q] == 0.0) {
        return Err(Error::EmptySpectrum);
    }
    for &(theta, _) in directions {
        direction_frame(theta, 0.0)?;
    }
    let i = Complex64::i();
    let k = medium.k;
    let values: Vec<[Complex64; 4]> = directions
        .par_iter()
        .map(|&(theta, phi)| {
            let weights = dirichlet_weights(spectrum, k * theta.cos());
            let mut sum_a = ZERO;
            let mut sum_b = ZERO;
            for m in spectrum.a.m_values() {
                let mut a = ZERO;
                let mut b = ZERO;
                for (q, w) in weights.iter().enumerate() {
                    a += spectrum.a.get(m, q) * w;
                    b += spectrum.b.get(m, q) * w;
                }
                let phase = i.powi(m.rem_euclid(4) as i32) * Complex64::from_polar(1.0, -(m as f64) * phi);
                sum_a += phase * a;
                sum_b += phase * b;
            }
            let c = Complex64::from_polar(-2.0 * k * theta.sin() / distance, -k * distance);
            let e_phi = c * sum_a;
            let e_theta = c * i * sum_b;
            [e_theta, e_phi, -e_phi / medium.eta, e_theta / medium.eta]
        })
        .collect();
    let mut out = FarFieldGrid::zeros(directions.to_vec(), distance);
    for (n, [et, ep, ht, hp]) in values.into_iter().enumerate() {
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
    use crate::geometry::CylGrid;
    use crate::spectral::ModalGrid;

    fn setup() -> (MediumParams, ModalGrid) {
        let medium = MediumParams::free_space(3e9).unwrap();
        let grid = CylGrid::new(32, 32, 8.0 * medium.wavelength()).unwrap();
        let modal = ModalGrid::new(grid, medium.k, 15).unwrap();
        (medium, modal)
    }

    #[test]
    fn zero_spectrum_and_pole_rejection() {
        let (medium, modal) = setup();
        let s = ModalSpectrum::zeros(modal, &medium, 0.1);
        let f = far_field(&s, &[(1.0, 0.5)], 10.0, &medium).unwrap();
        assert_eq!(f.e_theta[0], ZERO);
        assert_eq!(f.e_phi[0], ZERO);
        assert!(matches!(far_field(&s, &[(0.0, 0.0)], 10.0, &medium), Err(Error::Direction(_))));
        assert!(matches!(far_field(&s, &[(PI, 0.0)], 10.0, &medium), Err(Error::Direction(_))));
    }

    #[test]
    fn single_te_mode_on_grid() {
        let (medium, modal) = setup();
        let (m0, q0) = (3i64, 2usize);
        let mut a = modal.zeros();
        let v = Complex64::new(0.4, 0.9);
        a.set(m0, q0, v);
        let s = ModalSpectrum::from_amplitudes(modal.clone(), a, modal.zeros(), &medium, 0.1);
        let theta0 = (modal.h[q0] / medium.k).acos();
        let r = 50.0;
        let dirs: Vec<(f64, f64)> = (0..7).map(|j| (theta0, 0.9 * j as f64)).collect();
        let f = far_field(&s, &dirs, r, &medium).unwrap();
        let i = Complex64::i();
        for (n, &(_, phi)) in dirs.iter().enumerate() {
            let expected = -2.0 * medium.k * theta0.sin() / r
                * Complex64::from_polar(1.0, -medium.k * r)
                * i.powi(m0 as i32)
                * Complex64::from_polar(1.0, -(m0 as f64) * phi)
                * v;
            assert!((f.e_phi[n] - expected).norm() < 1e-12 * expected.norm());
            assert!(f.e_theta[n].norm() < 1e-12 * expected.norm());
        }
    }

    #[test]
    fn impedance_and_distance_scaling() {
        let (medium, modal) = setup();
        let mut a = modal.zeros();
        let mut b = modal.zeros();
        for (q, _) in modal.valid_bins() {
            for m in -5i64..=5 {
                a.set(m, q, Complex64::new(m as f64, q as f64 * 0.1));
                b.set(m, q, Complex64::new(0.3, -(m as f64)) * 100.0);
            }
        }
        let s = ModalSpectrum::from_amplitudes(modal, a, b, &medium, 0.1);
        let dirs = direction_grid((0.2, 2.9), 6, (0.0, 5.0), 5);
        let r = 13.7;
        let f1 = far_field(&s, &dirs, r, &medium).unwrap();
        let f2 = far_field(&s, &dirs, 2.0 * r, &medium).unwrap();
        let shift = Complex64::from_polar(0.5, -medium.k * r);
        for n in 0..dirs.len() {
            let e = f1.e_theta[n].norm().hypot(f1.e_phi[n].norm());
            let h = f1.h_theta[n].norm().hypot(f1.h_phi[n].norm());
            assert!((e / h / medium.eta - 1.0).abs() < 1e-10);
            assert!((f2.e_theta[n] - f1.e_theta[n] * shift).norm() < 1e-12 * e);
            assert!((f2.e_phi[n] - f1.e_phi[n] * shift).norm() < 1e-12 * e);
        }
    }

    #[test]
    fn interpolation_is_exact_on_grid_and_band_limited_between() {
        let (medium, modal) = setup();
        // Spectrum of an axial source window: a(h) = sum_l s_l exp(i h z_l).
        let cyl = modal.cyl;
        let src: Vec<Complex64> = (0..cyl.n_z).map(|l| Complex64::new((l as f64).sin(), 0.2)).collect();
        let spec_at = |h: f64| -> Complex64 {
            src.iter().enumerate().map(|(l, s)| s * Complex64::from_polar(1.0, h * cyl.z(l))).sum()
        };
        let mut a = modal.zeros();
        for q in 0..cyl.n_z {
            a.set(0, q, spec_at(modal.h[q]));
        }
        let s = ModalSpectrum::from_amplitudes(modal.clone(), a, modal.zeros(), &medium, 0.1);
        for &h in &[0.123 * medium.k, -0.77 * medium.k, modal.h[4]] {
            let w = dirichlet_weights(&s, h);
            let interp: Complex64 = (0..cyl.n_z).map(|q| s.a.get(0, q) * w[q]).sum();
            assert!((interp - spec_at(h)).norm() < 1e-10 * spec_at(h).norm().max(1.0));
        }
    }
}
