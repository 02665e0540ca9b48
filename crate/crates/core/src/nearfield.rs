//! Exterior near field from the modal spectrum.
//!
//! Each mode `(m, h)` contributes `a M + b N` to `E` and `(i/eta)(a N + b M)`
//! to `H`, with
//!
//! ```text
//! M = rho (m/(i rho)) H_m(L rho) - phi L H_m'(L rho)
//! N = rho (h L/(i k)) H_m'(L rho) - phi (m h/(k rho)) H_m(L rho) + z (L^2/k) H_m(L rho)
//! ```
//!
//! times `exp(-i m phi) exp(-i h z)`, `H_m = H_m^(2)`. Radial derivatives of
//! any order differentiate both the Hankel factors and the explicit `1/rho`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::excitation::MediumParams;
use crate::field::{FieldGrid, Frame, Warning};
use crate::geometry::{CylGrid, QuasiCylSurface, SlicePartition};
use crate::specfun::{hankel_table, HankelKind, HankelTable};
use crate::spectral::{ModalArray, ModalSpectrum, Transformer};
use crate::vector::{cyl_to_cart, from_cylindrical_coords, to_cylindrical_coords, CVec3, Vec3, CZERO3};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative slack when comparing evaluation radii with the source radius.
const RADIUS_SLACK: f64 = 1e-12;

/// Taylor truncation warning threshold for off-cylinder evaluation.
pub const FIELD_TRUNCATION_WARNING: f64 = 1e-3;

/// Cylindrical components of the `n`-th radial derivative of the `M` and `N`
/// mode functions for one `(m, h)`, without the `exp(-i m phi - i h z)` factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeWeights {
    pub m: CVec3,
    pub n: CVec3,
}

/// `d^n/drho^n` of the mode functions at the table's argument `L rho`.
///
/// The table must hold derivative levels up to `order + 1`. Returns `None`
/// when a needed Hankel value overflowed.
pub fn mode_weights(
    table: &HankelTable,
    m: i64,
    h: f64,
    lambda: f64,
    k: f64,
    rho: f64,
    order: usize,
) -> Option<ModeWeights> {
    let i = Complex64::i();
    let mf = m as f64;
    let hd = |j: usize| table.derivative(m, j);
    // d^n H(L rho) and d^n H'(L rho).
    let h_n = hd(order)? * lambda.powi(order as i32);
    let dh_n = hd(order + 1)? * lambda.powi(order as i32);
    // d^n [H(L rho) / rho] by the product rule.
    let mut h_over_rho = ZERO;
    let mut binom = 1.0;
    let mut fact = (1..=order).product::<usize>() as f64;
    for j in 0..=order {
        let rest = order - j;
        let sign = if rest.is_multiple_of(2) { 1.0 } else { -1.0 };
        h_over_rho += hd(j)? * (binom * lambda.powi(j as i32) * sign * fact / rho.powi(rest as i32 + 1));
        binom = binom * (order - j) as f64 / (j + 1) as f64;
        if rest > 0 {
            fact /= rest as f64;
        }
    }
    Some(ModeWeights {
        m: [h_over_rho * (mf / i), -dh_n * lambda, ZERO],
        n: [
            dh_n * (h * lambda / k) / i,
            -h_over_rho * (mf * h / k),
            h_n * (lambda * lambda / k),
        ],
    })
}

fn check_exterior(spectrum: &ModalSpectrum, index: usize, rho: f64) -> Result<()> {
    if rho < spectrum.source_rho_max * (1.0 - RADIUS_SLACK) {
        return Err(Error::InteriorPoint {
            index,
            rho,
            rho_max: spectrum.source_rho_max,
        });
    }
    Ok(())
}

fn check_grid(spectrum: &ModalSpectrum, grid: CylGrid) -> Result<()> {
    let own = spectrum.grid.cyl;
    if grid.n_z != own.n_z || (grid.length_z - own.length_z).abs() > 1e-12 * own.length_z {
        return Err(Error::Mismatch(
            "evaluation grid must share the spectrum's axial sampling".into(),
        ));
    }
    Ok(())
}

/// Per-bin weights `[order][m + m_max][component]`.
type TaylorColumn = Vec<Vec<[Complex64; 6]>>;

/// E and H spectra for derivative orders `0..=n_max` at radius `rho`,
/// indexed `[order][component]` with components `E_rho, E_phi, E_z, H_rho, H_phi, H_z`.
fn weighted_spectra(
    spectrum: &ModalSpectrum,
    rho: f64,
    n_max: usize,
    medium: &MediumParams,
) -> (Vec<[ModalArray; 6]>, usize) {
    let grid = &spectrum.grid;
    let m_max = grid.m_max;
    let k = medium.k;
    let h_scale = Complex64::i() / medium.eta;
    let bins: Vec<(usize, f64)> = grid.valid_bins().collect();
    let columns: Vec<(usize, TaylorColumn, usize)> = bins
        .par_iter()
        .map(|&(q, lam)| {
            let mut col = vec![vec![[ZERO; 6]; 2 * m_max + 1]; n_max + 1];
            let mut flagged = 0;
            let active = spectrum
                .a
                .m_values()
                .any(|m| spectrum.a.get(m, q) != ZERO || spectrum.b.get(m, q) != ZERO);
            if !active {
                return (q, col, flagged);
            }
            let table = match hankel_table(HankelKind::Second, m_max, n_max + 1, lam * rho) {
                Ok(t) => t,
                Err(_) => return (q, col, 2 * m_max + 1),
            };
            for (mi, m) in spectrum.a.m_values().enumerate() {
                let (a, b) = (spectrum.a.get(m, q), spectrum.b.get(m, q));
                if a == ZERO && b == ZERO {
                    continue;
                }
                for (order, slot) in col.iter_mut().enumerate() {
                    match mode_weights(&table, m, grid.h[q], lam, k, rho, order) {
                        Some(w) => {
                            for c in 0..3 {
                                slot[mi][c] = a * w.m[c] + b * w.n[c];
                                slot[mi][c + 3] = h_scale * (a * w.n[c] + b * w.m[c]);
                            }
                        }
                        None => {
                            if order == 0 {
                                flagged += 1;
                            }
                            slot[mi] = [ZERO; 6];
                        }
                    }
                }
            }
            (q, col, flagged)
        })
        .collect();

    let mut out: Vec<[ModalArray; 6]> = (0..=n_max)
        .map(|_| std::array::from_fn(|_| grid.zeros()))
        .collect();
    let mut flagged_total = 0;
    for (q, col, flagged) in columns {
        flagged_total += flagged;
        for (order, slot) in col.iter().enumerate() {
            for (mi, values) in slot.iter().enumerate() {
                let m = mi as i64 - m_max as i64;
                for (c, v) in values.iter().enumerate() {
                    out[order][c].set(m, q, *v);
                }
            }
        }
    }
    (out, flagged_total)
}

fn cylinder_points(grid: CylGrid, rho: f64) -> Vec<Vec3> {
    (0..grid.len())
        .map(|i| from_cylindrical_coords(rho, grid.phi_of(i), grid.z_of(i)))
        .collect()
}

fn overflow_warning(flagged: usize, rho: f64) -> Warning {
    Warning::new(
        "nearfield",
        format!("{flagged} modes dropped at rho = {rho:e} m: Hankel overflow"),
    )
}

/// Taylor coefficients `d^n E/drho^n`, `d^n H/drho^n` on the cylinder `rho`,
/// for `n = 0..=n_max`, without the exterior check.
fn taylor_coefficients_unchecked(
    spectrum: &ModalSpectrum,
    rho: f64,
    n_max: usize,
    medium: &MediumParams,
    grid: CylGrid,
) -> Vec<FieldGrid> {
    let (spectra, flagged) = weighted_spectra(spectrum, rho, n_max, medium);
    let transformer = Transformer::new(grid);
    let points = cylinder_points(grid, rho);
    spectra
        .iter()
        .map(|components| {
            // The inverse transform carries dh/(2 pi); the field sum carries dh.
            let fields: Vec<Vec<Complex64>> = components
                .iter()
                .map(|c| transformer.inverse(c).into_iter().map(|v| v * (2.0 * PI)).collect())
                .collect();
            let mut out = FieldGrid::zeros(Frame::Cylindrical, points.clone());
            for (idx, (e, h)) in out.e.iter_mut().zip(out.h.iter_mut()).enumerate() {
                for c in 0..3 {
                    e[c] = fields[c][idx];
                    h[c] = fields[c + 3][idx];
                }
            }
            if flagged > 0 {
                out.warnings.push(overflow_warning(flagged, rho));
            }
            out
        })
        .collect()
}

/// Field on the cylinder `rho_eval` at the nodes of `grid`, in cylindrical
/// components.
pub fn field_on_cylinder(
    spectrum: &ModalSpectrum,
    rho_eval: f64,
    medium: &MediumParams,
    grid: CylGrid,
) -> Result<FieldGrid> {
    Ok(field_taylor_coefficients(spectrum, rho_eval, 0, medium, grid)?.remove(0))
}

/// Radial derivatives of orders `0..=n_max` of the field on the cylinder
/// `rho_ref`; entry 0 equals [`field_on_cylinder`].
pub fn field_taylor_coefficients(
    spectrum: &ModalSpectrum,
    rho_ref: f64,
    n_max: usize,
    medium: &MediumParams,
    grid: CylGrid,
) -> Result<Vec<FieldGrid>> {
    if !(rho_ref > 0.0 && rho_ref.is_finite()) {
        return Err(Error::Domain(format!("evaluation radius {rho_ref}")));
    }
    check_exterior(spectrum, 0, rho_ref)?;
    check_grid(spectrum, grid)?;
    Ok(taylor_coefficients_unchecked(spectrum, rho_ref, n_max, medium, grid))
}

/// Field at the nodes of `eval_surface` via per-shell Taylor series of the
/// field about each shell's reference radius.
pub fn field_on_surface(
    spectrum: &ModalSpectrum,
    eval_surface: &QuasiCylSurface,
    partition: &SlicePartition,
    n_max: usize,
    medium: &MediumParams,
) -> Result<FieldGrid> {
    let grid = eval_surface.grid;
    check_grid(spectrum, grid)?;
    if partition.assignment.len() != grid.len() {
        return Err(Error::Mismatch("partition built for a different surface".into()));
    }
    for (idx, &rho) in eval_surface.rho.iter().enumerate() {
        check_exterior(spectrum, idx, rho)?;
    }
    let points: Vec<Vec3> = (0..grid.len()).map(|i| eval_surface.position(i)).collect();
    let mut out = FieldGrid::zeros(Frame::Cylindrical, points);
    let mut worst_tail: f64 = 0.0;
    for shell in 0..partition.n_shells() {
        let nodes: Vec<usize> = partition.nodes(shell).collect();
        if nodes.is_empty() {
            continue;
        }
        let rho_ref = partition.reference_radius[shell];
        let coeffs = taylor_coefficients_unchecked(spectrum, rho_ref, n_max, medium, grid);
        if let Some(w) = coeffs[0].warnings.first() {
            out.warnings.push(w.clone());
        }
        for &idx in &nodes {
            let delta = eval_surface.rho[idx] - rho_ref;
            let mut e = CZERO3;
            let mut h = CZERO3;
            let mut last = 0.0;
            let mut factor = 1.0;
            for (n, c) in coeffs.iter().enumerate() {
                if n > 0 {
                    factor *= delta / n as f64;
                }
                for comp in 0..3 {
                    e[comp] += c.e[idx][comp] * factor;
                    h[comp] += c.h[idx][comp] * factor;
                }
                if n == n_max && n > 0 {
                    last = c.e[idx].iter().map(|v| (v * factor).norm_sqr()).sum::<f64>().sqrt();
                }
            }
            let total = e.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if total > 0.0 {
                worst_tail = worst_tail.max(last / total);
            }
            out.e[idx] = e;
            out.h[idx] = h;
        }
    }
    if worst_tail > FIELD_TRUNCATION_WARNING {
        out.warnings.push(Warning::new(
            "nearfield",
            format!("last Taylor term reaches {worst_tail:.2e} of the partial sum"),
        ));
    }
    Ok(out)
}

/// Raster on a plane of constant `y`: `n_x` points over `[x_min, x_max]`
/// times the spectrum's axial nodes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PlaneSpec {
    pub y: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
}

impl PlaneSpec {
    pub fn xs(&self) -> Vec<f64> {
        if self.n_x == 1 {
            return vec![0.5 * (self.x_min + self.x_max)];
        }
        let step = (self.x_max - self.x_min) / (self.n_x - 1) as f64;
        (0..self.n_x).map(|i| self.x_min + i as f64 * step).collect()
    }
}

/// Modal sum at a single radius and azimuth for each axial bin, giving the
/// six cylindrical components per bin.
fn column_spectrum(
    spectrum: &ModalSpectrum,
    rho: f64,
    phi: f64,
    medium: &MediumParams,
) -> (Vec<[Complex64; 6]>, usize) {
    let grid = &spectrum.grid;
    let m_max = grid.m_max;
    let h_scale = Complex64::i() / medium.eta;
    let mut out = vec![[ZERO; 6]; grid.n_z()];
    let mut flagged = 0;
    for (q, lam) in grid.valid_bins() {
        let table = match hankel_table(HankelKind::Second, m_max, 1, lam * rho) {
            Ok(t) => t,
            Err(_) => {
                flagged += 2 * m_max + 1;
                continue;
            }
        };
        let step = Complex64::from_polar(1.0, -phi);
        let mut phase = Complex64::from_polar(1.0, m_max as f64 * phi);
        for m in spectrum.a.m_values() {
            let (a, b) = (spectrum.a.get(m, q), spectrum.b.get(m, q));
            if a != ZERO || b != ZERO {
                match mode_weights(&table, m, grid.h[q], lam, medium.k, rho, 0) {
                    Some(w) => {
                        for c in 0..3 {
                            out[q][c] += (a * w.m[c] + b * w.n[c]) * phase;
                            out[q][c + 3] += h_scale * (a * w.n[c] + b * w.m[c]) * phase;
                        }
                    }
                    None => flagged += 1,
                }
            }
            phase *= step;
        }
    }
    (out, flagged)
}

/// Field on a `y = const` plane, Cartesian components. The axial raster is
/// the spectrum's own `z` grid; each `x` column is an exact modal sum
/// followed by one axial FFT.
pub fn field_on_plane(
    spectrum: &ModalSpectrum,
    plane: &PlaneSpec,
    medium: &MediumParams,
) -> Result<FieldGrid> {
    if plane.n_x == 0 || plane.x_max.partial_cmp(&plane.x_min).is_none_or(|o| o.is_lt()) {
        return Err(Error::Grid(format!("plane x-range [{}, {}] with {} points", plane.x_min, plane.x_max, plane.n_x)));
    }
    let cyl = spectrum.grid.cyl;
    let n_z = cyl.n_z;
    let xs = plane.xs();
    for (i, &x) in xs.iter().enumerate() {
        check_exterior(spectrum, i * n_z, x.hypot(plane.y))?;
    }
    let fft = FftPlanner::new().plan_fft_forward(n_z);
    let d_h = spectrum.grid.d_h();
    let columns: Vec<(Vec<CVec3>, Vec<CVec3>, usize)> = xs
        .par_iter()
        .map(|&x| {
            let [rho, phi, _] = to_cylindrical_coords([x, plane.y, 0.0]);
            let (spec, flagged) = column_spectrum(spectrum, rho, phi, medium);
            let mut comps: Vec<Vec<Complex64>> = (0..6)
                .map(|c| {
                    (0..n_z)
                        .map(|q| if q % 2 == 0 { spec[q][c] } else { -spec[q][c] })
                        .collect()
                })
                .collect();
            for c in comps.iter_mut() {
                fft.process(c);
            }
            let e = (0..n_z)
                .map(|l| cyl_to_cart([comps[0][l] * d_h, comps[1][l] * d_h, comps[2][l] * d_h], phi))
                .collect();
            let h = (0..n_z)
                .map(|l| cyl_to_cart([comps[3][l] * d_h, comps[4][l] * d_h, comps[5][l] * d_h], phi))
                .collect();
            (e, h, flagged)
        })
        .collect();
    let points = xs
        .iter()
        .flat_map(|&x| (0..n_z).map(move |l| [x, plane.y, cyl.z(l)]))
        .collect();
    let mut out = FieldGrid::zeros(Frame::Cartesian, points);
    let mut flagged = 0;
    for (i, (e, h, f)) in columns.into_iter().enumerate() {
        out.e[i * n_z..(i + 1) * n_z].copy_from_slice(&e);
        out.h[i * n_z..(i + 1) * n_z].copy_from_slice(&h);
        flagged += f;
    }
    if flagged > 0 {
        out.warnings.push(Warning::new("nearfield", format!("{flagged} mode evaluations dropped on the plane: Hankel overflow")));
    }
    Ok(out)
}

/// Field at arbitrary exterior points by direct modal summation, Cartesian
/// components.
pub fn field_at_points(
    spectrum: &ModalSpectrum,
    points: &[Vec3],
    medium: &MediumParams,
) -> Result<FieldGrid> {
    for (i, p) in points.iter().enumerate() {
        check_exterior(spectrum, i, p[0].hypot(p[1]))?;
    }
    let grid = &spectrum.grid;
    let d_h = grid.d_h();
    let values: Vec<(CVec3, CVec3, usize)> = points
        .par_iter()
        .map(|&p| {
            let [rho, phi, z] = to_cylindrical_coords(p);
            let (spec, flagged) = column_spectrum(spectrum, rho, phi, medium);
            let mut acc = [ZERO; 6];
            for (q, s) in spec.iter().enumerate() {
                let phase = Complex64::from_polar(d_h, -grid.h[q] * z);
                for c in 0..6 {
                    acc[c] += s[c] * phase;
                }
            }
            (
                cyl_to_cart([acc[0], acc[1], acc[2]], phi),
                cyl_to_cart([acc[3], acc[4], acc[5]], phi),
                flagged,
            )
        })
        .collect();
    let mut out = FieldGrid::zeros(Frame::Cartesian, points.to_vec());
    let mut flagged = 0;
    for (i, (e, h, f)) in values.into_iter().enumerate() {
        out.e[i] = e;
        out.h[i] = h;
        flagged += f;
    }
    if flagged > 0 {
        out.warnings.push(Warning::new("nearfield", format!("{flagged} mode evaluations dropped: Hankel overflow")));
    }
    Ok(out)
}

/// Writes `x,z,re_Ex,im_Ex,re_Ey,im_Ey,re_Ez,im_Ez` rows for a plane map.
pub fn write_plane_csv(field: &FieldGrid, path: impl AsRef<Path>) -> Result<()> {
    let cart = field.to_cartesian();
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "x,z,re_Ex,im_Ex,re_Ey,im_Ey,re_Ez,im_Ez")?;
    for (p, e) in cart.points.iter().zip(&cart.e) {
        writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            p[0], p[2], e[0].re, e[0].im, e[1].re, e[1].im, e[2].re, e[2].im
        )?;
    }
    Ok(())
}
