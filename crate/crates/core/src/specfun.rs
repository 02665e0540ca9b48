//! Bessel and Hankel functions of integer order for real positive arguments.
//!
//! `J_m` comes from Miller's backward recurrence normalized by
//! `J_0 + 2 sum J_2k = 1`. `Y_0` and `Y_1` are seeded from Neumann series
//! over the computed `J` values (small arguments) or from the Hankel
//! asymptotic expansion (large arguments), and higher orders follow by the
//! forward recurrence, which is stable for `Y`. Derivatives of any order are
//! exact binomial combinations of neighbouring orders.

use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Magnitude beyond which `Y_m` is treated as overflowed.
pub const OVERFLOW_LIMIT: f64 = 1e250;

/// Arguments at or above this use the asymptotic seeds for `Y_0`, `Y_1`.
const ASYMPTOTIC_THRESHOLD: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HankelKind {
    /// `H^(1) = J + iY`
    First,
    /// `H^(2) = J - iY`
    Second,
}

impl HankelKind {
    fn combine(self, j: f64, y: f64) -> Complex64 {
        match self {
            HankelKind::First => Complex64::new(j, y),
            HankelKind::Second => Complex64::new(j, -y),
        }
    }
}

fn check_argument(x: f64) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain(format!(
            "Bessel argument must be finite and positive, got {x}"
        )));
    }
    Ok(())
}

fn miller_start(n_max: usize, x: f64) -> usize {
    let from_x = x + 15.0 * x.max(1.0).cbrt() + 30.0;
    let n = n_max as f64;
    let from_order = n + 30.0 + (40.0 * n).sqrt();
    let start = from_x.max(from_order).ceil() as usize;
    start + (start % 2)
}

/// `J_0(x) .. J_{n_max}(x)`. Orders below a large argument use the forward
/// recurrence from asymptotic `J_0`, `J_1`; otherwise normalized backward
/// recurrence.
pub fn bessel_j_sequence(n_max: usize, x: f64) -> Result<Vec<f64>> {
    check_argument(x)?;
    if x >= ASYMPTOTIC_THRESHOLD && (n_max as f64) < x {
        return Ok(forward_j_sequence(n_max, x));
    }
    miller_j_sequence(n_max, x)
}

fn forward_j_sequence(n_max: usize, x: f64) -> Vec<f64> {
    let mut values = Vec::with_capacity(n_max + 2);
    values.push(asymptotic_jy(0, x).0);
    values.push(asymptotic_jy(1, x).0);
    for n in 1..n_max {
        values.push(2.0 * n as f64 / x * values[n] - values[n - 1]);
    }
    values.truncate(n_max + 1);
    values
}

fn miller_j_sequence(n_max: usize, x: f64) -> Result<Vec<f64>> {
    let start = miller_start(n_max, x);
    let mut values = vec![0.0; start + 2];
    let mut next = 0.0; // J_{n+1}
    let mut current = 1e-300; // J_n
    values[start] = current;
    for n in (1..=start).rev() {
        let prev = 2.0 * n as f64 / x * current - next;
        values[n - 1] = prev;
        next = current;
        current = prev;
        if current.abs() > OVERFLOW_LIMIT {
            let scale = 1.0 / OVERFLOW_LIMIT;
            for v in values[n - 1..].iter_mut() {
                *v *= scale;
            }
            next *= scale;
            current *= scale;
        }
    }
    let mut norm = values[0];
    for k in (2..=start).step_by(2) {
        norm += 2.0 * values[k];
    }
    values.truncate(n_max + 1);
    for v in values.iter_mut() {
        *v /= norm;
    }
    Ok(values)
}

/// Large-argument expansion of `(J_nu, Y_nu)` for `nu` in {0, 1}.
fn asymptotic_jy(nu: u32, x: f64) -> (f64, f64) {
    let mu = 4.0 * (nu * nu) as f64;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if term.abs() > last || term.abs() < 1e-18 {
            break;
        }
        last = term.abs();
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
    }
    let (s, c) = x.sin_cos();
    // chi = x - (nu/2 + 1/4) pi, reduced exactly from sin x and cos x.
    let (cos_chi, sin_chi) = if nu == 0 {
        ((c + s) * FRAC_1_SQRT_2, (s - c) * FRAC_1_SQRT_2)
    } else {
        ((s - c) * FRAC_1_SQRT_2, -(s + c) * FRAC_1_SQRT_2)
    };
    let amp = (2.0 / (PI * x)).sqrt();
    (
        amp * (p * cos_chi - q * sin_chi),
        amp * (p * sin_chi + q * cos_chi),
    )
}

/// `Y_0`, `Y_1` from the Neumann series over an accurate `J` sequence.
fn neumann_y01(j: &[f64], x: f64) -> (f64, f64) {
    let log_term = (x / 2.0).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut k = 1;
    while 2 * k + 1 < j.len() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s0 += sign * j[2 * k] / k as f64;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
        k += 1;
    }
    let y0 = 2.0 / PI * log_term * j[0] - 4.0 / PI * s0;
    let y1 = 2.0 / PI * (log_term * j[1] - j[0] / x) + 2.0 / PI * s1;
    (y0, y1)
}

/// `J_0..J_{n_max}` and `Y_0..Y_{n_max}` at one argument.
///
/// `Y` entries past the overflow limit are stored as infinity.
#[derive(Debug, Clone)]
pub struct BesselPair {
    pub x: f64,
    pub j: Vec<f64>,
    pub y: Vec<f64>,
}

impl BesselPair {
    pub fn new(n_max: usize, x: f64) -> Result<Self> {
        check_argument(x)?;
        let (j, y0, y1) = if x >= ASYMPTOTIC_THRESHOLD {
            let j = bessel_j_sequence(n_max.max(1), x)?;
            let (_, y0) = asymptotic_jy(0, x);
            let (_, y1) = asymptotic_jy(1, x);
            (j, y0, y1)
        } else {
            // Neumann series need J well past the point where it decays.
            let needed = n_max.max((x + 20.0 * x.max(1.0).cbrt() + 40.0) as usize);
            let j = bessel_j_sequence(needed, x)?;
            let (y0, y1) = neumann_y01(&j, x);
            (j, y0, y1)
        };
        let mut y = Vec::with_capacity(n_max + 1);
        y.push(y0);
        if n_max >= 1 {
            y.push(y1);
        }
        let mut overflowed = false;
        for m in 1..n_max {
            if overflowed {
                y.push(f64::INFINITY);
                continue;
            }
            let next = 2.0 * m as f64 / x * y[m] - y[m - 1];
            if next.abs() > OVERFLOW_LIMIT || !next.is_finite() {
                overflowed = true;
                y.push(f64::INFINITY);
            } else {
                y.push(next);
            }
        }
        let mut j = j;
        j.truncate(n_max + 1);
        Ok(Self { x, j, y })
    }

    fn signed(values: &[f64], m: i64) -> f64 {
        let v = values[m.unsigned_abs() as usize];
        if m < 0 && m % 2 != 0 {
            -v
        } else {
            v
        }
    }

    pub fn j(&self, m: i64) -> f64 {
        Self::signed(&self.j, m)
    }

    pub fn y(&self, m: i64) -> f64 {
        Self::signed(&self.y, m)
    }

    pub fn max_order(&self) -> usize {
        self.j.len() - 1
    }

    /// `d^n J_m / dx^n`; needs `|m| + n <= max_order`.
    pub fn j_derivative(&self, m: i64, n: usize) -> f64 {
        binomial_derivative(n, m, |k| self.j(k))
    }

    /// `d^n Y_m / dx^n`; infinite when any contributing order overflowed.
    pub fn y_derivative(&self, m: i64, n: usize) -> f64 {
        binomial_derivative(n, m, |k| self.y(k))
    }

    pub fn hankel(&self, kind: HankelKind, m: i64) -> Option<Complex64> {
        let y = self.y(m);
        y.is_finite().then(|| kind.combine(self.j(m), y))
    }

    pub fn hankel_derivative(&self, kind: HankelKind, m: i64, n: usize) -> Option<Complex64> {
        let y = self.y_derivative(m, n);
        y.is_finite()
            .then(|| kind.combine(self.j_derivative(m, n), y))
    }
}

/// n-th derivative from `Z^(n)_m = 2^-n sum_k (-1)^k C(n,k) Z_{m-n+2k}`.
pub(crate) fn binomial_derivative(n: usize, m: i64, z: impl Fn(i64) -> f64) -> f64 {
    if n == 0 {
        return z(m);
    }
    let mut acc = 0.0;
    let mut binom = 1.0;
    for k in 0..=n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let v = z(m - n as i64 + 2 * k as i64);
        if !v.is_finite() {
            return f64::INFINITY;
        }
        acc += sign * binom * v;
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    acc / 2f64.powi(n as i32)
}

/// Hankel function `H_m^(kind)(x)` of integer order.
pub fn hankel(kind: HankelKind, m: i64, x: f64) -> Result<Complex64> {
    hankel_derivative(kind, m, 0, x)
}

/// n-th derivative of `H_m^(kind)` with respect to its argument.
pub fn hankel_derivative(kind: HankelKind, m: i64, n: usize, x: f64) -> Result<Complex64> {
    let order = m.unsigned_abs() as usize + n;
    let pair = BesselPair::new(order, x)?;
    pair.hankel_derivative(kind, m, n).ok_or(Error::Overflow {
        order: m,
        argument: x,
    })
}

/// Hankel values and derivatives for orders `-m_max..=m_max`, derivative
/// levels `0..=n_max`, at one argument.
#[derive(Debug, Clone)]
pub struct HankelTable {
    pub kind: HankelKind,
    pub m_max: usize,
    pub n_max: usize,
    pairs: BesselPair,
    /// `[n][m + m_max]`, `None` where `Y` overflowed.
    derivatives: Vec<Vec<Option<Complex64>>>,
}

impl HankelTable {
    pub fn argument(&self) -> f64 {
        self.pairs.x
    }

    pub fn value(&self, m: i64) -> Option<Complex64> {
        self.derivative(m, 0)
    }

    pub fn derivative(&self, m: i64, n: usize) -> Option<Complex64> {
        assert!(m.unsigned_abs() as usize <= self.m_max && n <= self.n_max);
        self.derivatives[n][(m + self.m_max as i64) as usize]
    }

    pub fn is_flagged(&self, m: i64, n: usize) -> bool {
        self.derivative(m, n).is_none()
    }

    pub fn flagged_count(&self) -> usize {
        self.derivatives
            .iter()
            .flatten()
            .filter(|v| v.is_none())
            .count()
    }

    pub fn bessel(&self) -> &BesselPair {
        &self.pairs
    }
}

/// Batch evaluation at a fixed argument, reused across a whole modal grid.
pub fn hankel_table(kind: HankelKind, m_max: usize, n_max: usize, x: f64) -> Result<HankelTable> {
    let pairs = BesselPair::new(m_max + n_max, x)?;
    let derivatives = (0..=n_max)
        .map(|n| {
            (-(m_max as i64)..=m_max as i64)
                .map(|m| pairs.hankel_derivative(kind, m, n))
                .collect()
        })
        .collect();
    Ok(HankelTable {
        kind,
        m_max,
        n_max,
        pairs,
        derivatives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    /// Ascending series for J_0 and Y_0, independent of the recurrences.
    fn series_j0_y0(x: f64) -> (f64, f64) {
        let q = x * x / 4.0;
        let mut term = 1.0;
        let mut harmonic = 0.0;
        let mut j0 = 1.0;
        let mut tail = 0.0;
        for k in 1..60 {
            term *= -q / (k * k) as f64;
            harmonic += 1.0 / k as f64;
            j0 += term;
            tail -= harmonic * term;
        }
        let y0 = 2.0 / PI * ((x / 2.0).ln() + EULER_GAMMA) * j0 + 2.0 / PI * tail;
        (j0, y0)
    }

    #[test]
    fn power_series_agreement_at_one() {
        let (j0, y0) = series_j0_y0(1.0);
        let h = hankel(HankelKind::First, 0, 1.0).unwrap();
        assert!((h.re - j0).abs() < 1e-10);
        assert!((h.im - y0).abs() < 1e-10);
        // Tabulated values.
        assert!((j0 - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((y0 - 0.088_256_964_215_676_96).abs() < 1e-14);
    }

    #[test]
    fn wronskian_order_zero() {
        for &x in &[1.0, 10.0, 100.0] {
            let p = BesselPair::new(1, x).unwrap();
            let w = p.j(0) * p.y(1) - p.j(1) * p.y(0);
            let expected = -2.0 / (PI * x);
            assert!(((w - expected) / expected).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn wronskian_stable_regime() {
        for &x in &[0.5, 5.0, 50.0, 500.0] {
            for &m in &[0i64, 1, 10, 100] {
                if (m as f64) > x + 1.0 {
                    continue;
                }
                let p = BesselPair::new(m as usize + 1, x).unwrap();
                let w = p.j(m) * p.y(m + 1) - p.j(m + 1) * p.y(m);
                let expected = -2.0 / (PI * x);
                assert!(((w - expected) / expected).abs() < 1e-9, "x={x} m={m}");
            }
        }
    }

    #[test]
    fn forward_and_backward_j_recurrences_agree() {
        for &x in &[25.0, 40.0, 126.3, 500.0] {
            let n_max = (x as usize).saturating_sub(1);
            let fwd = forward_j_sequence(n_max, x);
            let bwd = miller_j_sequence(n_max, x).unwrap();
            let scale = bwd.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (n, (f, b)) in fwd.iter().zip(&bwd).enumerate() {
                assert!((f - b).abs() < 1e-12 * scale, "x={x} n={n}: {f} vs {b}");
            }
        }
    }

    #[test]
    fn asymptotic_and_series_seeds_agree_at_threshold() {
        let x = ASYMPTOTIC_THRESHOLD;
        let j = bessel_j_sequence(120, x).unwrap();
        let (y0_series, y1_series) = neumann_y01(&j, x);
        let (j0, y0) = asymptotic_jy(0, x);
        let (j1, y1) = asymptotic_jy(1, x);
        assert!((y0 - y0_series).abs() < 1e-13);
        assert!((y1 - y1_series).abs() < 1e-13);
        assert!((j0 - j[0]).abs() < 1e-13);
        assert!((j1 - j[1]).abs() < 1e-13);
    }

    #[test]
    fn negative_order_symmetry() {
        let x = 4.3;
        let a = hankel(HankelKind::First, -3, x).unwrap();
        let b = hankel(HankelKind::First, 3, x).unwrap();
        assert!(rel(a, -b) < 1e-15);
        let a = hankel(HankelKind::First, -4, x).unwrap();
        let b = hankel(HankelKind::First, 4, x).unwrap();
        assert!(rel(a, b) < 1e-15);
    }

    #[test]
    fn second_kind_is_conjugate() {
        let a = hankel(HankelKind::Second, 5, 12.0).unwrap();
        let b = hankel(HankelKind::First, 5, 12.0).unwrap();
        assert_eq!(a, b.conj());
    }

    #[test]
    fn first_derivative_of_order_zero() {
        for &x in &[0.3, 2.0, 40.0] {
            let d = hankel_derivative(HankelKind::First, 0, 1, x).unwrap();
            let h1 = hankel(HankelKind::First, 1, x).unwrap();
            assert!(rel(d, -h1) < 1e-14);
        }
    }

    #[test]
    fn third_derivative_matches_finite_differences() {
        let (m, x) = (2, 7.5);
        let f = |t: f64| hankel(HankelKind::First, m, t).unwrap();
        // Central stencil for the third derivative, Richardson-extrapolated to O(step^4).
        let stencil = |step: f64| {
            (f(x + 2.0 * step) - 2.0 * f(x + step) + 2.0 * f(x - step) - f(x - 2.0 * step))
                / (2.0 * step.powi(3))
        };
        let fd = (stencil(0.01) * 4.0 - stencil(0.02)) / 3.0;
        let exact = hankel_derivative(HankelKind::First, m, 3, x).unwrap();
        assert!(rel(fd, exact) < 1e-6, "{fd} vs {exact}");
    }

    #[test]
    fn domain_and_overflow_errors() {
        assert!(matches!(hankel(HankelKind::First, 0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(hankel(HankelKind::First, 0, -1.0), Err(Error::Domain(_))));
        assert!(matches!(
            hankel(HankelKind::First, 2000, 1e-3),
            Err(Error::Overflow { .. })
        ));
    }

    #[test]
    fn extreme_range_values() {
        // J_0(1e4), Y_0(1e4) reference values.
        let h = hankel(HankelKind::First, 0, 1e4).unwrap();
        assert!((h.re - (-0.007_096_160_353_388_801)).abs() < 1e-13);
        assert!((h.im - 0.003_647_805_558_986_606).abs() < 1e-13);
        // Small argument: Y_1(1e-3) ~ -2/(pi x).
        let h = hankel(HankelKind::First, 1, 1e-3).unwrap();
        assert!((h.im / (-636.6221672311394) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn table_matches_pointwise_and_recurrence() {
        let x = 50.0;
        let table = hankel_table(HankelKind::First, 80, 2, x).unwrap();
        assert!(rel(table.value(0).unwrap(), hankel(HankelKind::First, 0, x).unwrap()) < 1e-13);
        let mut worst: f64 = 0.0;
        for m in -79i64..=79 {
            let lhs = table.value(m - 1).unwrap() + table.value(m + 1).unwrap();
            let rhs = table.value(m).unwrap() * (2.0 * m as f64 / x);
            worst = worst.max((lhs - rhs).norm() / table.value(m).unwrap().norm());
        }
        assert!(worst < 1e-9, "recurrence residual {worst}");
        for m in 1..=80i64 {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let direct = hankel(HankelKind::First, -m, x).unwrap();
            assert!(rel(table.value(m).unwrap() * sign, direct) < 1e-13);
        }
    }

    #[test]
    fn table_flags_overflow() {
        let table = hankel_table(HankelKind::Second, 300, 0, 0.5).unwrap();
        assert!(table.value(10).is_some());
        assert!(table.is_flagged(300, 0));
        assert!(table.flagged_count() > 0);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn wronskian_below_turning_point(x in 0.1f64..300.0, frac in 0.0f64..1.0) {
                let m = (frac * x) as i64;
                let h = hankel(HankelKind::First, m, x).unwrap();
                let h1 = hankel(HankelKind::First, m + 1, x).unwrap();
                let w = h.re * h1.im - h1.re * h.im;
                prop_assert!((w * PI * x / -2.0 - 1.0).abs() < 1e-9);
            }

            #[test]
            fn conjugacy_and_negative_orders(x in 0.1f64..300.0, m in 0i64..40) {
                let Ok(h1) = hankel(HankelKind::First, m, x) else { return Ok(()) };
                let h2 = hankel(HankelKind::Second, m, x).unwrap();
                prop_assert_eq!(h2, h1.conj());
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                prop_assert_eq!(hankel(HankelKind::Second, -m, x).unwrap(), h2 * sign);
            }
        }
    }
}
