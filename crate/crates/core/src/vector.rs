//! Small fixed-size vector helpers and cylindrical/Cartesian frame rotations.

use num_complex::Complex64;

pub type Vec3 = [f64; 3];
pub type CVec3 = [Complex64; 3];

pub const CZERO3: CVec3 = [Complex64::new(0.0, 0.0); 3];

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn normalize(a: Vec3) -> Vec3 {
    scale(a, 1.0 / norm(a))
}

/// Real vector crossed into a complex vector: `a x b`.
pub fn rcross(a: Vec3, b: CVec3) -> CVec3 {
    [
        b[2] * a[1] - b[1] * a[2],
        b[0] * a[2] - b[2] * a[0],
        b[1] * a[0] - b[0] * a[1],
    ]
}

pub fn rdot(a: Vec3, b: CVec3) -> Complex64 {
    b[0] * a[0] + b[1] * a[1] + b[2] * a[2]
}

pub fn cnorm(a: CVec3) -> f64 {
    (a[0].norm_sqr() + a[1].norm_sqr() + a[2].norm_sqr()).sqrt()
}

pub fn cadd(a: CVec3, b: CVec3) -> CVec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn cscale(a: CVec3, s: Complex64) -> CVec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// `(rho, phi, z)` of a Cartesian point.
pub fn to_cylindrical_coords(p: Vec3) -> Vec3 {
    let phi = p[1].atan2(p[0]).rem_euclid(std::f64::consts::TAU);
    [p[0].hypot(p[1]), phi, p[2]]
}

pub fn from_cylindrical_coords(rho: f64, phi: f64, z: f64) -> Vec3 {
    [rho * phi.cos(), rho * phi.sin(), z]
}

/// Rotates cylindrical components `(rho, phi, z)` at azimuth `phi` to Cartesian.
pub fn cyl_to_cart(v: CVec3, phi: f64) -> CVec3 {
    let (s, c) = phi.sin_cos();
    [v[0] * c - v[1] * s, v[0] * s + v[1] * c, v[2]]
}

pub fn cart_to_cyl(v: CVec3, phi: f64) -> CVec3 {
    let (s, c) = phi.sin_cos();
    [v[0] * c + v[1] * s, -v[0] * s + v[1] * c, v[2]]
}

pub fn real_cyl_to_cart(v: Vec3, phi: f64) -> Vec3 {
    let (s, c) = phi.sin_cos();
    [v[0] * c - v[1] * s, v[0] * s + v[1] * c, v[2]]
}
