//! Sampled electromagnetic fields.

use num_complex::Complex64;

use crate::vector::{cart_to_cyl, cnorm, cyl_to_cart, to_cylindrical_coords, CVec3, Vec3};

/// Basis in which the field components are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Cartesian,
    /// `(rho, phi, z)` components, rotated by each point's azimuth.
    Cylindrical,
}

/// Non-fatal solver diagnostics carried alongside results.
#[derive(Debug, Clone, PartialEq)]
pub struct Warning {
    pub source: &'static str,
    pub message: String,
}

impl Warning {
    pub fn new(source: &'static str, message: impl Into<String>) -> Self {
        let message = message.into();
        log::warn!("{source}: {message}");
        Self { source, message }
    }
}

/// Complex `E` and `H` at a list of points. Positions are always Cartesian.
#[derive(Debug, Clone)]
pub struct FieldGrid {
    pub frame: Frame,
    pub points: Vec<Vec3>,
    pub e: Vec<CVec3>,
    pub h: Vec<CVec3>,
    pub warnings: Vec<Warning>,
}

impl FieldGrid {
    pub fn zeros(frame: Frame, points: Vec<Vec3>) -> Self {
        let n = points.len();
        Self {
            frame,
            points,
            e: vec![[Complex64::new(0.0, 0.0); 3]; n],
            h: vec![[Complex64::new(0.0, 0.0); 3]; n],
            warnings: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn rotated(&self, frame: Frame, rotate: fn(CVec3, f64) -> CVec3) -> Self {
        if self.frame == frame {
            return self.clone();
        }
        let phis: Vec<f64> = self.points.iter().map(|p| to_cylindrical_coords(*p)[1]).collect();
        Self {
            frame,
            points: self.points.clone(),
            e: self.e.iter().zip(&phis).map(|(v, &phi)| rotate(*v, phi)).collect(),
            h: self.h.iter().zip(&phis).map(|(v, &phi)| rotate(*v, phi)).collect(),
            warnings: self.warnings.clone(),
        }
    }

    pub fn to_cartesian(&self) -> Self {
        self.rotated(Frame::Cartesian, cyl_to_cart)
    }

    pub fn to_cylindrical(&self) -> Self {
        self.rotated(Frame::Cylindrical, cart_to_cyl)
    }

    pub fn max_e(&self) -> f64 {
        self.e.iter().map(|v| cnorm(*v)).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.e
            .iter()
            .chain(&self.h)
            .flatten()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// `||a - b|| / ||b||` over complex samples.
pub fn relative_l2(a: impl IntoIterator<Item = Complex64>, b: impl IntoIterator<Item = Complex64>) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.into_iter().zip(b) {
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

/// One Cartesian/cylindrical component of `E` across all points.
pub fn e_component(grid: &FieldGrid, component: usize) -> impl Iterator<Item = Complex64> + '_ {
    grid.e.iter().map(move |v| v[component])
}
