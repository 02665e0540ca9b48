//! Cylindrical Fourier transforms and the modal expansion coefficients of
//! the radiated field.
//!
//! Conventions:
//!
//! * forward: `F(m, h) = sum s(phi, z) exp(+i m phi) exp(+i h z) dphi dz`
//! * inverse: `s(phi, z) = 1/(2 pi) sum_m sum_h F(m, h) exp(-i m phi) exp(-i h z) dh`
//!
//! so that `inverse(forward(s)) = 2 pi s`.
//!
//! Outside the source region the field is a superposition of TE and TM
//! cylindrical harmonics with amplitudes `a`, `b`. For arbitrary surface
//! currents these follow from five Bessel-weighted moments of each current
//! kind, using `J_m(Lambda rho')` for the source radius:
//!
//! ```text
//! Z_c = sum c W J_m(L rho') e,     c in {J_z, J_phi/rho', J_rho/rho'}
//! P_c = sum c W L J_m'(L rho') e,  c in {J_rho, J_phi}
//! Q = L^2 Z_z + i h P_rho - h m Z_phi
//! R = P_phi - i m Z_rho
//! a = eta k R_J / (8 pi L^2) + i Q_M / (8 pi L^2)
//! b = -v mu Q_J / (8 pi L^2) - i k R_M / (8 pi L^2)
//! ```
//!
//! with `e = exp(i m phi') exp(i h z')` and `W = rho'/(n . rho_hat')` the
//! surface Jacobian. The equivalent axial potentials are
//! `f_z = -2 pi eps a` and `g_z = 2 pi i b / v`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::excitation::{MediumParams, SurfaceCurrents};
use crate::field::Warning;
use crate::geometry::{CylGrid, QuasiCylSurface, SlicePartition};
use crate::specfun::{binomial_derivative, bessel_j_sequence};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative distance below the light line at which `h` is treated as evanescent.
pub const LIGHT_LINE_GUARD: f64 = 1e-9;
/// Fraction of `|h| < k` covered by the raised-cosine taper.
pub const TAPER_FRACTION: f64 = 0.02;
/// Azimuthal guard modes above `k rho_max`.
pub const GUARD_MODES: usize = 10;
/// Threshold for the Taylor truncation warning.
pub const TRUNCATION_WARNING: f64 = 1e-3;

/// Complex values on `m in [-m_max, m_max]` times the `n_z` axial
/// wavenumbers (FFT order), stored at `(m + m_max) * n_z + q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalArray {
    pub m_max: usize,
    pub n_z: usize,
    pub data: Vec<Complex64>,
}

impl ModalArray {
    pub fn zeros(m_max: usize, n_z: usize) -> Self {
        Self {
            m_max,
            n_z,
            data: vec![ZERO; (2 * m_max + 1) * n_z],
        }
    }

    pub fn index(&self, m: i64, q: usize) -> usize {
        debug_assert!(m.unsigned_abs() as usize <= self.m_max && q < self.n_z);
        (m + self.m_max as i64) as usize * self.n_z + q
    }

    pub fn get(&self, m: i64, q: usize) -> Complex64 {
        self.data[self.index(m, q)]
    }

    pub fn set(&mut self, m: i64, q: usize, v: Complex64) {
        let i = self.index(m, q);
        self.data[i] = v;
    }

    pub fn m_values(&self) -> impl Iterator<Item = i64> {
        -(self.m_max as i64)..=self.m_max as i64
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Signed index of FFT bin `q` out of `n`.
pub fn signed_bin(q: usize, n: usize) -> i64 {
    if q < n / 2 {
        q as i64
    } else {
        q as i64 - n as i64
    }
}

fn parity(q: usize) -> f64 {
    if q.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Cached FFT plans for one grid.
pub struct Transformer {
    grid: CylGrid,
    phi_inv: Arc<dyn Fft<f64>>,
    phi_fwd: Arc<dyn Fft<f64>>,
    z_inv: Arc<dyn Fft<f64>>,
    z_fwd: Arc<dyn Fft<f64>>,
}

impl Transformer {
    pub fn new(grid: CylGrid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            phi_inv: planner.plan_fft_inverse(grid.n_phi),
            phi_fwd: planner.plan_fft_forward(grid.n_phi),
            z_inv: planner.plan_fft_inverse(grid.n_z),
            z_fwd: planner.plan_fft_forward(grid.n_z),
        }
    }

    pub fn grid(&self) -> CylGrid {
        self.grid
    }

    /// Forward transform, keeping `|m| <= m_max`. With `m_max = n_phi/2` the
    /// Nyquist bin is split evenly between `m = +-n_phi/2`.
    pub fn forward(&self, samples: &[Complex64], m_max: usize) -> ModalArray {
        let CylGrid { n_phi, n_z, .. } = self.grid;
        assert_eq!(samples.len(), n_phi * n_z);
        assert!(m_max <= n_phi / 2);
        let mut buf = samples.to_vec();
        self.z_inv.process(&mut buf);
        let mut cols = transpose(&buf, n_phi, n_z);
        self.phi_inv.process(&mut cols);
        let scale = self.grid.d_phi() * self.grid.d_z();
        let mut out = ModalArray::zeros(m_max, n_z);
        for m in out.m_values().collect::<Vec<_>>() {
            let mm = m.rem_euclid(n_phi as i64) as usize;
            let nyquist = n_phi % 2 == 0 && m.unsigned_abs() as usize == n_phi / 2;
            let weight = if nyquist { 0.5 * scale } else { scale };
            for q in 0..n_z {
                out.set(m, q, cols[q * n_phi + mm] * (weight * parity(q)));
            }
        }
        out
    }

    /// Inverse transform onto the grid nodes.
    pub fn inverse(&self, spectrum: &ModalArray) -> Vec<Complex64> {
        let CylGrid {
            n_phi,
            n_z,
            length_z,
        } = self.grid;
        assert_eq!(spectrum.n_z, n_z);
        let mut cols = vec![ZERO; n_phi * n_z];
        for m in spectrum.m_values() {
            let mm = m.rem_euclid(n_phi as i64) as usize;
            for q in 0..n_z {
                cols[q * n_phi + mm] += spectrum.get(m, q) * parity(q);
            }
        }
        self.phi_fwd.process(&mut cols);
        let mut buf = transpose(&cols, n_z, n_phi);
        self.z_fwd.process(&mut buf);
        let d_h = 2.0 * PI / length_z;
        let scale = d_h / (2.0 * PI);
        for v in buf.iter_mut() {
            *v *= scale;
        }
        buf
    }
}

fn transpose(data: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; data.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

/// One-shot forward transform; see [`Transformer::forward`].
pub fn forward_transform(samples: &[Complex64], grid: CylGrid, m_max: usize) -> ModalArray {
    Transformer::new(grid).forward(samples, m_max)
}

/// One-shot inverse transform; see [`Transformer::inverse`].
pub fn inverse_transform(spectrum: &ModalArray, grid: CylGrid) -> Vec<Complex64> {
    Transformer::new(grid).inverse(spectrum)
}

/// Azimuthal orders, axial wavenumbers and transverse wavenumbers of the
/// truncated modal expansion.
#[derive(Debug, Clone)]
pub struct ModalGrid {
    pub cyl: CylGrid,
    pub m_max: usize,
    pub k: f64,
    /// Axial wavenumber of every FFT bin.
    pub h: Vec<f64>,
    /// `sqrt(k^2 - h^2)` on propagating bins, `None` on evanescent ones.
    pub lambda: Vec<Option<f64>>,
    /// Raised-cosine weight approaching the light line.
    pub taper: Vec<f64>,
}

impl ModalGrid {
    pub fn new(cyl: CylGrid, k: f64, m_max: usize) -> Result<Self> {
        if m_max > cyl.n_phi / 2 {
            return Err(Error::Grid(format!(
                "m_max = {m_max} exceeds n_phi/2 = {}",
                cyl.n_phi / 2
            )));
        }
        let d_h = 2.0 * PI / cyl.length_z;
        let h: Vec<f64> = (0..cyl.n_z)
            .map(|q| signed_bin(q, cyl.n_z) as f64 * d_h)
            .collect();
        let lambda = h
            .iter()
            .map(|&h| (h.abs() < k * (1.0 - LIGHT_LINE_GUARD)).then(|| (k * k - h * h).sqrt()))
            .collect();
        let taper = h
            .iter()
            .map(|&h| {
                let t = h.abs() / k;
                let start = 1.0 - TAPER_FRACTION;
                if t <= start {
                    1.0
                } else if t >= 1.0 {
                    0.0
                } else {
                    0.5 * (1.0 + (PI * (t - start) / TAPER_FRACTION).cos())
                }
            })
            .collect();
        Ok(Self {
            cyl,
            m_max,
            k,
            h,
            lambda,
            taper,
        })
    }

    /// `m_max = ceil(k rho_max) + guard`, capped at `n_phi/2 - 1`.
    pub fn for_surface(surface: &QuasiCylSurface, medium: &MediumParams) -> Result<Self> {
        let wanted = (medium.k * surface.rho_max()).ceil() as usize + GUARD_MODES;
        let cap = surface.grid.n_phi / 2 - 1;
        Self::new(surface.grid, medium.k, wanted.min(cap))
    }

    pub fn d_h(&self) -> f64 {
        2.0 * PI / self.cyl.length_z
    }

    pub fn n_z(&self) -> usize {
        self.cyl.n_z
    }

    pub fn valid_bins(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.lambda
            .iter()
            .enumerate()
            .filter_map(|(q, l)| l.map(|l| (q, l)))
    }

    pub fn zeros(&self) -> ModalArray {
        ModalArray::zeros(self.m_max, self.cyl.n_z)
    }
}

/// Modal coefficients of the exterior field.
#[derive(Debug, Clone)]
pub struct ModalSpectrum {
    pub grid: ModalGrid,
    /// Axial electric vector-potential coefficient `f_{m,z}^h`.
    pub f_z: ModalArray,
    /// Axial magnetic vector-potential coefficient `g_{m,z}^h`.
    pub g_z: ModalArray,
    /// TE amplitude `a = -f_z / (2 pi eps)`.
    pub a: ModalArray,
    /// TM amplitude `b = -i v g_z / (2 pi)`.
    pub b: ModalArray,
    /// Largest source radius; fields are valid for `rho >= source_rho_max`.
    pub source_rho_max: f64,
    pub warnings: Vec<Warning>,
}

impl ModalSpectrum {
    /// Builds a spectrum from TE/TM amplitudes, deriving `f_z`, `g_z`.
    pub fn from_amplitudes(
        grid: ModalGrid,
        a: ModalArray,
        b: ModalArray,
        medium: &MediumParams,
        source_rho_max: f64,
    ) -> Self {
        let f_scale = -2.0 * PI * medium.epsilon;
        let g_scale = Complex64::new(0.0, 2.0 * PI / medium.v);
        let f_z = ModalArray {
            data: a.data.iter().map(|v| v * f_scale).collect(),
            ..a.clone()
        };
        let g_z = ModalArray {
            data: b.data.iter().map(|v| v * g_scale).collect(),
            ..b.clone()
        };
        Self {
            grid,
            f_z,
            g_z,
            a,
            b,
            source_rho_max,
            warnings: Vec::new(),
        }
    }

    pub fn zeros(grid: ModalGrid, medium: &MediumParams, source_rho_max: f64) -> Self {
        let (a, b) = (grid.zeros(), grid.zeros());
        Self::from_amplitudes(grid, a, b, medium, source_rho_max)
    }

    /// Relative L2 distance of the stacked `(f_z, g_z)` pair; `f_z` is scaled
    /// by `eta` so both potentials carry the same units.
    pub fn relative_error(&self, reference: &ModalSpectrum, medium: &MediumParams) -> f64 {
        let s = medium.eta;
        let mut num = 0.0;
        let mut den = 0.0;
        for (x, y) in self.f_z.data.iter().zip(&reference.f_z.data) {
            num += ((x - y) * s).norm_sqr();
            den += (y * s).norm_sqr();
        }
        for (x, y) in self.g_z.data.iter().zip(&reference.g_z.data) {
            num += (x - y).norm_sqr();
            den += y.norm_sqr();
        }
        if den == 0.0 {
            if num == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (num / den).sqrt()
        }
    }

    /// Writes `m,h,re_f,im_f,re_g,im_g` rows, ascending in `m` then `h`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "m,h,re_f,im_f,re_g,im_g")?;
        let n_z = self.grid.n_z();
        let mut order: Vec<usize> = (0..n_z).collect();
        order.sort_by_key(|&q| signed_bin(q, n_z));
        for m in self.f_z.m_values() {
            for &q in &order {
                let f = self.f_z.get(m, q);
                let g = self.g_z.get(m, q);
                writeln!(
                    out,
                    "{m},{:e},{:e},{:e},{:e},{:e}",
                    self.grid.h[q], f.re, f.im, g.re, g.im
                )?;
            }
        }
        Ok(())
    }
}

/// Index into the per-kind moment arrays.
#[derive(Debug, Clone, Copy)]
enum Moment {
    Zz = 0,
    Zphi = 1,
    Zrho = 2,
    Prho = 3,
    Pphi = 4,
}

const MOMENTS: [Moment; 5] = [Moment::Zz, Moment::Zphi, Moment::Zrho, Moment::Prho, Moment::Pphi];

impl Moment {
    fn uses_derivative(self) -> bool {
        matches!(self, Moment::Prho | Moment::Pphi)
    }

    /// Per-node weight from cylindrical current components `c`, the
    /// Jacobian and the source radius.
    fn weight(self, c: &[Complex64; 3], jacobian: f64, rho: f64) -> Complex64 {
        match self {
            Moment::Zz => c[2] * jacobian,
            Moment::Zphi => c[1] * (jacobian / rho),
            Moment::Zrho => c[0] * (jacobian / rho),
            Moment::Prho => c[0] * jacobian,
            Moment::Pphi => c[1] * jacobian,
        }
    }
}

/// Accumulated moments `[electric, magnetic][moment]`.
struct Moments {
    arrays: [[ModalArray; 5]; 2],
}

impl Moments {
    fn new(grid: &ModalGrid) -> Self {
        let one = || std::array::from_fn(|_| grid.zeros());
        Self {
            arrays: [one(), one()],
        }
    }

    /// Combines the moments into TE/TM amplitudes.
    fn finish(
        &self,
        grid: ModalGrid,
        medium: &MediumParams,
        source_rho_max: f64,
    ) -> ModalSpectrum {
        let i = Complex64::i();
        let mut a = grid.zeros();
        let mut b = grid.zeros();
        let [e, mg] = &self.arrays;
        for (q, lam) in grid.valid_bins() {
            let h = grid.h[q];
            let taper = grid.taper[q];
            if taper == 0.0 {
                continue;
            }
            let lam2 = lam * lam;
            for m in a.m_values().collect::<Vec<_>>() {
                let mf = m as f64;
                let idx = a.index(m, q);
                let q_of = |arr: &[ModalArray; 5]| {
                    arr[0].data[idx] * lam2 + i * h * arr[3].data[idx] - arr[1].data[idx] * (h * mf)
                };
                let r_of = |arr: &[ModalArray; 5]| arr[4].data[idx] - i * mf * arr[2].data[idx];
                let (q_j, r_j) = (q_of(e), r_of(e));
                let (q_m, r_m) = (q_of(mg), r_of(mg));
                let denom = 8.0 * PI * lam2;
                let te = (r_j * (medium.eta * medium.k) + i * q_m) / denom;
                let tm = (-q_j * (medium.v * medium.mu) - i * medium.k * r_m) / denom;
                a.data[idx] = te * taper;
                b.data[idx] = tm * taper;
            }
        }
        ModalSpectrum::from_amplitudes(grid, a, b, medium, source_rho_max)
    }
}

fn check_inputs(currents: &SurfaceCurrents, surface: &QuasiCylSurface, grid: &ModalGrid) -> Result<()> {
    if currents.len() != surface.grid.len() {
        return Err(Error::Mismatch(format!(
            "{} current samples for {} surface nodes",
            currents.len(),
            surface.grid.len()
        )));
    }
    if grid.cyl != surface.grid {
        return Err(Error::Mismatch("modal grid built for a different surface grid".into()));
    }
    Ok(())
}

/// Brute-force quadrature of the modal coefficients: every node against
/// every mode, `O(N^2)`, with the exact Bessel kernel at each source radius.
pub fn modal_coefficients_direct(
    currents: &SurfaceCurrents,
    surface: &QuasiCylSurface,
    medium: &MediumParams,
    grid: &ModalGrid,
) -> Result<ModalSpectrum> {
    check_inputs(currents, surface, grid)?;
    let cyl = surface.grid;
    let area = cyl.d_phi() * cyl.d_z();
    let m_max = grid.m_max;
    let n_m = 2 * m_max + 1;
    let kinds: Vec<usize> = if currents.has_magnetic() { vec![0, 1] } else { vec![0] };
    let active: Vec<usize> = (0..cyl.len()).filter(|&i| !currents.is_zero_at(i)).collect();

    // weights[node][kind][moment]
    let weights: Vec<[[Complex64; 5]; 2]> = active
        .iter()
        .map(|&idx| {
            let jac = surface.jacobian[idx] * area;
            let rho = surface.rho[idx];
            let per = |c: &[Complex64; 3]| MOMENTS.map(|mo| mo.weight(c, jac, rho));
            [per(&currents.j[idx]), per(&currents.m[idx])]
        })
        .collect();

    let bins: Vec<(usize, f64)> = grid.valid_bins().collect();
    let columns: Vec<(usize, Vec<[[Complex64; 5]; 2]>)> = bins
        .par_iter()
        .map(|&(q, lam)| {
            let h = grid.h[q];
            let mut col = vec![[[ZERO; 5]; 2]; n_m];
            for (w, &idx) in weights.iter().zip(&active) {
                let rho = surface.rho[idx];
                let jseq = bessel_j_sequence(m_max + 1, lam * rho)
                    .expect("positive Bessel argument");
                let j_at = |m: i64| {
                    let v = jseq[m.unsigned_abs() as usize];
                    if m < 0 && m % 2 != 0 {
                        -v
                    } else {
                        v
                    }
                };
                let phi = cyl.phi_of(idx);
                let z = cyl.z_of(idx);
                let step = Complex64::from_polar(1.0, phi);
                let mut phase = Complex64::from_polar(1.0, h * z - m_max as f64 * phi);
                for (slot, m) in col.iter_mut().zip(-(m_max as i64)..=m_max as i64) {
                    let jm = j_at(m);
                    let djm = 0.5 * lam * (j_at(m - 1) - j_at(m + 1));
                    for &kind in &kinds {
                        for mo in MOMENTS {
                            let kernel = if mo.uses_derivative() { djm } else { jm };
                            slot[kind][mo as usize] += w[kind][mo as usize] * (phase * kernel);
                        }
                    }
                    phase *= step;
                }
            }
            (q, col)
        })
        .collect();

    let mut moments = Moments::new(grid);
    for (q, col) in columns {
        for (mi, slot) in col.iter().enumerate() {
            let m = mi as i64 - m_max as i64;
            for (arrays, values) in moments.arrays.iter_mut().zip(slot) {
                for mo in MOMENTS {
                    arrays[mo as usize].set(m, q, values[mo as usize]);
                }
            }
        }
    }
    Ok(moments.finish(grid.clone(), medium, surface.rho_max()))
}

/// Per-shell table of `Lambda^n J_m^(n)(Lambda rho_ref) / n!`, indexed
/// `[q][n][m + m_max]` for `n in 0..=n_max`.
fn shell_kernels(grid: &ModalGrid, rho_ref: f64, n_max: usize) -> Vec<Vec<Vec<f64>>> {
    let m_max = grid.m_max;
    grid.lambda
        .iter()
        .map(|lam| match lam {
            None => Vec::new(),
            Some(lam) => {
                let jseq = bessel_j_sequence(m_max + n_max + 1, lam * rho_ref)
                    .expect("positive Bessel argument");
                let j_at = |m: i64| {
                    let v = jseq[m.unsigned_abs() as usize];
                    if m < 0 && m % 2 != 0 {
                        -v
                    } else {
                        v
                    }
                };
                let mut factorial = 1.0;
                let mut lam_pow = 1.0;
                (0..=n_max)
                    .map(|n| {
                        if n > 0 {
                            factorial *= n as f64;
                            lam_pow *= lam;
                        }
                        (-(m_max as i64)..=m_max as i64)
                            .map(|m| lam_pow * binomial_derivative(n, m, j_at) / factorial)
                            .collect()
                    })
                    .collect()
            }
        })
        .collect()
}

/// TI-FFT evaluation of the modal coefficients.
///
/// Within each shell the source kernel `J_m(Lambda rho')` is expanded in a
/// Taylor series about the shell's reference radius, so that each order is a
/// single 2-D FFT of `weight * (rho' - rho_ref)^n` over the shell's nodes,
/// multiplied by an analytic `(m, h)` factor. Cost is
/// `O(shells * orders * N log N)`.
pub fn modal_coefficients_tifft(
    currents: &SurfaceCurrents,
    surface: &QuasiCylSurface,
    partition: &SlicePartition,
    medium: &MediumParams,
    grid: &ModalGrid,
    taylor_order: usize,
) -> Result<ModalSpectrum> {
    check_inputs(currents, surface, grid)?;
    if partition.assignment.len() != surface.grid.len() {
        return Err(Error::Mismatch("partition built for a different surface".into()));
    }
    let cyl = surface.grid;
    let transformer = Transformer::new(cyl);
    let kinds: Vec<usize> = if currents.has_magnetic() { vec![0, 1] } else { vec![0] };
    let mut moments = Moments::new(grid);
    // Contribution of the highest order, for the truncation estimate.
    let mut last_order = Moments::new(grid);
    let mut samples = vec![ZERO; cyl.len()];

    for shell in 0..partition.n_shells() {
        let nodes: Vec<usize> = partition
            .nodes(shell)
            .filter(|&i| !currents.is_zero_at(i))
            .collect();
        if nodes.is_empty() {
            continue;
        }
        let rho_ref = partition.reference_radius[shell];
        let kernels = shell_kernels(grid, rho_ref, taylor_order + 1);
        for n in 0..=taylor_order {
            let powers: Vec<f64> = nodes
                .iter()
                .map(|&i| (surface.rho[i] - rho_ref).powi(n as i32))
                .collect();
            if n > 0 && powers.iter().all(|&p| p == 0.0) {
                continue;
            }
            for &kind in &kinds {
                let source = if kind == 0 { &currents.j } else { &currents.m };
                for mo in MOMENTS {
                    samples.iter_mut().for_each(|s| *s = ZERO);
                    let mut any = false;
                    for (&i, &p) in nodes.iter().zip(&powers) {
                        let w = mo.weight(&source[i], surface.jacobian[i], surface.rho[i]) * p;
                        any |= w.norm_sqr() > 0.0;
                        samples[i] = w;
                    }
                    if !any {
                        continue;
                    }
                    let spectrum = transformer.forward(&samples, grid.m_max);
                    let level = if mo.uses_derivative() { n + 1 } else { n };
                    let target = &mut moments.arrays[kind][mo as usize];
                    let tail = &mut last_order.arrays[kind][mo as usize];
                    for (q, _) in grid.valid_bins() {
                        let factors = &kernels[q][level];
                        // P-type moments carry Lambda^(n+1)/n!, the table holds
                        // Lambda^(n+1)/(n+1)!.
                        let fix = if mo.uses_derivative() { (n + 1) as f64 } else { 1.0 };
                        for (mi, m) in spectrum.m_values().enumerate() {
                            let idx = spectrum.index(m, q);
                            let v = spectrum.data[idx] * (factors[mi] * fix);
                            target.data[idx] += v;
                            if n == taylor_order {
                                tail.data[idx] += v;
                            }
                        }
                    }
                }
            }
        }
    }

    let mut result = moments.finish(grid.clone(), medium, surface.rho_max());
    let estimate = if taylor_order == 0 {
        let max_delta = partition
            .assignment
            .iter()
            .enumerate()
            .map(|(i, &s)| (surface.rho[i] - partition.reference_radius[s]).abs())
            .fold(0.0, f64::max);
        medium.k * max_delta
    } else {
        let tail = last_order.finish(grid.clone(), medium, surface.rho_max());
        let total = result.a.norm().hypot(result.b.norm() / medium.eta);
        if total == 0.0 {
            0.0
        } else {
            tail.a.norm().hypot(tail.b.norm() / medium.eta) / total
        }
    };
    if estimate > TRUNCATION_WARNING {
        result.warnings.push(Warning::new(
            "spectral",
            format!("Taylor truncation estimate {estimate:.2e} exceeds {TRUNCATION_WARNING:e}"),
        ));
    }
    Ok(result)
}
