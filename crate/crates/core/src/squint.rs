//! Beam-squint analytics for phase-shifter and switch-based arrays.
//!
//! All quantities are expressed in the normalized angle `theta_bar = sin(theta)`
//! and the relative frequency `xi_k = f_k / f_c = 1 + c_k b`, where
//! `c_k = k/K - (K+1)/(2K)` and `b = B / f_c`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HbfError, Result};
use crate::quadrature::GaussLegendre;

const GL_ORDER: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquintParams {
    pub n: usize,
    pub frac_bw: f64,
    pub spacing: f64,
    pub k: usize,
}

impl SquintParams {
    pub fn new(n: usize, frac_bw: f64, spacing: f64, k: usize) -> Result<Self> {
        let p = Self { n, frac_bw, spacing, k };
        p.validate()?;
        Ok(p)
    }

    pub fn from_frequencies(n: usize, carrier_hz: f64, bandwidth_hz: f64, spacing: f64, k: usize) -> Result<Self> {
        if !(carrier_hz > 0.0) {
            return Err(HbfError::InvalidArgument(format!("carrier must be positive, got {carrier_hz}")));
        }
        Self::new(n, bandwidth_hz / carrier_hz, spacing, k)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 {
            return Err(HbfError::InvalidArgument("n and k must be at least 1".into()));
        }
        if !(self.frac_bw >= 0.0 && self.frac_bw < 2.0) {
            return Err(HbfError::InvalidArgument(format!("fractional bandwidth {} outside [0, 2)", self.frac_bw)));
        }
        if !(self.spacing > 0.0) {
            return Err(HbfError::InvalidArgument(format!("spacing must be positive, got {}", self.spacing)));
        }
        Ok(())
    }

    /// `c_k` for `k = 1..=K`.
    pub fn offsets(&self) -> impl Iterator<Item = f64> + '_ {
        let kf = self.k as f64;
        (1..=self.k).map(move |k| k as f64 / kf - (kf + 1.0) / (2.0 * kf))
    }

    /// `xi_k = 1 + c_k b` for `k = 1..=K`.
    pub fn relative_frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        self.offsets().map(move |c| 1.0 + c * self.frac_bw)
    }
}

/// Binary switch configuration of one array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchVector {
    entries: Vec<u8>,
}

impl SwitchVector {
    pub fn new(entries: Vec<u8>) -> Result<Self> {
        if entries.is_empty() {
            return Err(HbfError::InvalidArgument("switch vector is empty".into()));
        }
        if let Some(bad) = entries.iter().find(|&&e| e > 1) {
            return Err(HbfError::InvalidArgument(format!("switch entries must be 0 or 1, found {bad}")));
        }
        Ok(Self { entries })
    }

    pub fn all_ones(n: usize) -> Self {
        Self { entries: vec![1; n.max(1)] }
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn active(&self) -> usize {
        self.entries.iter().filter(|&&e| e == 1).count()
    }

    fn require_active(&self) -> Result<()> {
        if self.active() == 0 {
            Err(HbfError::InvalidArgument("switch vector has no active element".into()))
        } else {
            Ok(())
        }
    }

    /// `|sum_n w_n z^(n-1)|` by Horner's rule.
    fn magnitude_at(&self, z: Complex64) -> f64 {
        self.entries
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &w| acc * z + f64::from(w))
            .norm()
    }
}

/// `sin(N x) / (N sin x)`, continuous through its removable singularities.
fn dirichlet_ratio(n: usize, x: f64) -> f64 {
    let nf = n as f64;
    if x.abs() < 1e-9 {
        let nx = nf * x;
        return (1.0 - nx * nx / 6.0) / (1.0 - x * x / 6.0);
    }
    let s = x.sin();
    if s.abs() < 1e-12 {
        // x is a nonzero multiple of pi: the ratio tends to +-1.
        return 1.0;
    }
    (nf * x).sin() / (nf * s)
}

/// Normalized gain of a PS array steered at the arrival direction, observed
/// at relative frequency `xi`.
pub fn ps_gain(theta_bar: f64, xi: f64, p: &SquintParams) -> f64 {
    let x = PI * p.spacing * (1.0 - xi) * theta_bar;
    dirichlet_ratio(p.n, x).abs()
}

/// Normalized gain `(1/N) |sum_n w_n exp(-j 2 pi (n-1) spacing xi theta_bar)|`.
pub fn sw_gain(w: &SwitchVector, theta_bar: f64, xi: f64, spacing: f64) -> Result<f64> {
    w.require_active()?;
    let z = Complex64::from_polar(1.0, -2.0 * PI * spacing * xi * theta_bar);
    Ok(w.magnitude_at(z) / w.len() as f64)
}

/// Beam squint ratio from its definition. The angular integral of
/// `|theta_bar|` over [-1, 1] equals 1, so only the subcarrier sum remains.
pub fn bsr_exact(p: &SquintParams) -> f64 {
    let sum: f64 = p.offsets().map(f64::abs).sum();
    p.n as f64 * p.spacing * p.frac_bw / (2.0 * p.k as f64) * sum
}

/// Large-K closed form `N b spacing / 8`.
pub fn bsr_closed(n: usize, frac_bw: f64, spacing: f64) -> f64 {
    n as f64 * frac_bw * spacing / 8.0
}

/// Expected PS-array gain over angles and subcarriers by quadrature.
pub fn eag_ps_exact(p: &SquintParams) -> f64 {
    let gl = GaussLegendre::new(GL_ORDER);
    let total: f64 = p
        .relative_frequencies()
        .map(|xi| {
            let a = p.spacing * (1.0 - xi).abs();
            // Kinks of |sin(N pi a t)| sit at t = m / (N a).
            let breaks: Vec<f64> = if a * p.n as f64 > 0.0 {
                let step = 1.0 / (p.n as f64 * a);
                (1..).map(|m| m as f64 * step).take_while(|&t| t < 1.0).collect()
            } else {
                Vec::new()
            };
            // g is even in theta_bar.
            gl.integrate_piecewise(0.0, 1.0, &breaks, 2, |t| ps_gain(t, xi, p))
        })
        .sum();
    total / p.k as f64
}

/// `rho = N spacing b / 2`.
pub fn squint_rho(n: usize, frac_bw: f64, spacing: f64) -> f64 {
    n as f64 * spacing * frac_bw / 2.0
}

/// `(1/rho) * integral_0^rho |sinc(x)| dx` with the normalized sinc.
pub fn mean_abs_sinc(rho: f64) -> f64 {
    if rho <= 0.0 {
        return 1.0;
    }
    let gl = GaussLegendre::new(GL_ORDER);
    let breaks: Vec<f64> = (1..).map(|m| m as f64).take_while(|&x| x < rho).collect();
    gl.integrate_piecewise(0.0, rho, &breaks, 2, |x| crate::channel::sinc(x).abs()) / rho
}

/// Closed approximation `(2/3) mean_abs_sinc(rho) + 1/3` of the PS expected gain.
pub fn eag_ps_approx(n: usize, frac_bw: f64, spacing: f64) -> f64 {
    let rho = squint_rho(n, frac_bw, spacing);
    if rho <= 0.0 {
        return 1.0;
    }
    2.0 / 3.0 * mean_abs_sinc(rho) + 1.0 / 3.0
}

/// Expected switch-array gain `(1/2) integral ||Omega(theta_bar) w||_1` by quadrature.
pub fn eag_sw_exact(w: &SwitchVector, p: &SquintParams) -> Result<f64> {
    w.require_active()?;
    if w.len() != p.n {
        return Err(HbfError::InvalidArgument(format!(
            "switch vector length {} does not match n = {}",
            w.len(),
            p.n
        )));
    }
    let gl = GaussLegendre::new(16);
    let n = w.len() as f64;
    let total: f64 = p
        .relative_frequencies()
        .map(|xi| {
            // The trigonometric polynomial has at most ~N spacing xi oscillations on [0, 1].
            let panels = 16 * (n * p.spacing * xi).ceil() as usize + 32;
            let omega = -2.0 * PI * p.spacing * xi;
            // Even in theta_bar because the weights are real.
            gl.integrate_piecewise(0.0, 1.0, &[], panels, |t| w.magnitude_at(Complex64::from_polar(1.0, omega * t)))
                / n
        })
        .sum();
    Ok(total / p.k as f64)
}

/// `||w||_1 / (3N)`.
pub fn eag_sw_approx(w: &SwitchVector) -> Result<f64> {
    w.require_active()?;
    Ok(w.active() as f64 / (3.0 * w.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, b: f64, k: usize) -> SquintParams {
        SquintParams::new(n, b, 0.5, k).unwrap()
    }

    #[test]
    fn ps_gain_examples() {
        let p = params(4, 0.1, 8);
        assert_eq!(ps_gain(0.7, 1.0, &p), 1.0);
        assert_eq!(ps_gain(0.0, 1.05, &p), 1.0);
        // (1 - xi) theta_bar = 0.25 -> |sin(pi/2) / (4 sin(pi/8))|
        let v = ps_gain(1.0, 0.75, &p);
        let expect = 1.0 / (4.0 * (PI / 8.0).sin());
        assert!((v - expect).abs() < 1e-14);
        assert!((v - 0.6533).abs() < 1e-4);
    }

    #[test]
    fn ps_gain_symmetric_and_continuous() {
        let p = params(64, 0.1, 8);
        for &t in &[0.1, 0.4, 0.9] {
            assert_eq!(ps_gain(t, 1.03, &p), ps_gain(-t, 1.03, &p));
        }
        // argument 1e-12 on both sides of the branch point
        let xi = 1.0 - 1e-12 / (PI * 0.5);
        let near = ps_gain(1.0, xi, &p);
        let direct = ((64.0 * 1e-12f64).sin() / (64.0 * (1e-12f64).sin())).abs();
        assert!((near - direct).abs() < 1e-6);
        assert!((near - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sw_gain_examples() {
        let ones = SwitchVector::all_ones(8);
        assert!((sw_gain(&ones, 0.0, 1.2, 0.5).unwrap() - 1.0).abs() < 1e-15);
        let single = SwitchVector::new(vec![0, 0, 1, 0]).unwrap();
        assert!((sw_gain(&single, 0.37, 0.9, 0.5).unwrap() - 0.25).abs() < 1e-15);
        let pair = SwitchVector::all_ones(2);
        assert!(sw_gain(&pair, 1.0, 1.0, 0.5).unwrap() < 1e-15);
        let zero = SwitchVector::new(vec![0, 0]).unwrap();
        assert!(sw_gain(&zero, 0.0, 1.0, 0.5).is_err());
        assert!(SwitchVector::new(vec![0, 2]).is_err());
    }

    #[test]
    fn bsr_examples() {
        assert_eq!(bsr_exact(&params(112, 1.0 / 14.0, 1)), 0.0);
        // K = 2: c = -1/4, 1/4 -> (N spacing b / 4) * (1/2)
        let p2 = params(112, 1.0 / 14.0, 2);
        let expect = 112.0 * 0.5 * (1.0 / 14.0) / 4.0 * 0.5;
        assert!((bsr_exact(&p2) - expect).abs() < 1e-14);
        let p128 = params(112, 1.0 / 14.0, 128);
        assert!((bsr_exact(&p128) - 0.5).abs() / 0.5 < 0.02);
        assert!((bsr_closed(112, 1.0 / 14.0, 0.5) - 0.5).abs() < 1e-15);
        assert!((bsr_closed(224, 1.0 / 14.0, 0.5) - 1.0).abs() < 1e-15);
        assert_eq!(bsr_closed(0, 1.0 / 14.0, 0.5), 0.0);
    }

    #[test]
    fn bsr_closed_is_linear() {
        let base = bsr_closed(50, 0.07, 0.4);
        assert!((bsr_closed(100, 0.07, 0.4) - 2.0 * base).abs() < 1e-15);
        assert!((bsr_closed(50, 0.14, 0.4) - 2.0 * base).abs() < 1e-15);
        assert!((bsr_closed(50, 0.07, 0.8) - 2.0 * base).abs() < 1e-15);
    }

    #[test]
    fn eag_ps_limits() {
        assert!((eag_ps_exact(&params(64, 0.0, 16)) - 1.0).abs() < 1e-12);
        assert_eq!(eag_ps_approx(64, 0.0, 0.5), 1.0);
        let v = eag_ps_exact(&params(256, 1.0 / 7.0, 32));
        assert!(v > 0.0 && v < 1.0);
    }

    #[test]
    fn eag_ps_exact_matches_brute_force() {
        // Midpoint rule with a very fine grid as an independent oracle.
        let p = params(96, 1.0 / 14.0, 6);
        let m = 200_000;
        let brute: f64 = p
            .relative_frequencies()
            .map(|xi| (0..m).map(|i| ps_gain((i as f64 + 0.5) / m as f64, xi, &p)).sum::<f64>() / m as f64)
            .sum::<f64>()
            / p.k as f64;
        assert!((eag_ps_exact(&p) - brute).abs() < 1e-6);
    }

    #[test]
    fn mean_abs_sinc_reference_values() {
        // Si(pi) / pi
        assert!((mean_abs_sinc(1.0) - 0.589_489_872_236_2).abs() < 1e-9);
        assert!(mean_abs_sinc(1e-6) > 0.999_999);
    }

    #[test]
    fn eag_sw_examples() {
        let one = SwitchVector::all_ones(1);
        let p1 = params(1, 0.1, 4);
        assert!((eag_sw_exact(&one, &p1).unwrap() - 1.0).abs() < 1e-12);
        let ones = SwitchVector::all_ones(12);
        assert!((eag_sw_approx(&ones).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let half = SwitchVector::new([1u8, 0].repeat(6)).unwrap();
        assert!((eag_sw_approx(&half).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        let mut e = vec![0u8; 12];
        e[4] = 1;
        let single = SwitchVector::new(e).unwrap();
        assert!((eag_sw_approx(&single).unwrap() - 1.0 / 36.0).abs() < 1e-15);
        // A single active element has unit-modulus sum, so the exact value is 1/N.
        assert!((eag_sw_exact(&single, &params(12, 0.1, 4)).unwrap() - 1.0 / 12.0).abs() < 1e-12);
        let zero = SwitchVector::new(vec![0; 12]).unwrap();
        assert!(eag_sw_exact(&zero, &params(12, 0.1, 4)).is_err());
        assert!(eag_sw_approx(&zero).is_err());
        assert!(eag_sw_exact(&ones, &params(10, 0.1, 4)).is_err());
    }

    #[test]
    fn eag_sw_exact_quadrature_converged() {
        let w = SwitchVector::new(vec![1, 0, 1, 1, 0, 1, 1, 1, 0, 1, 0, 1, 1, 1, 1, 0]).unwrap();
        let p = params(16, 0.1, 5);
        let m = 400_000;
        let brute: f64 = p
            .relative_frequencies()
            .map(|xi| {
                (0..m)
                    .map(|i| sw_gain(&w, (i as f64 + 0.5) / m as f64, xi, p.spacing).unwrap())
                    .sum::<f64>()
                    / m as f64
            })
            .sum::<f64>()
            / p.k as f64;
        assert!((eag_sw_exact(&w, &p).unwrap() - brute).abs() < 1e-6);
    }
}
