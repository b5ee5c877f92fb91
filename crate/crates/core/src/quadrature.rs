//! Composite Gauss–Legendre rules over the rectangular receiving surface.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::ApertureSpec;

/// Default panel width as a fraction of the wavelength.
pub const DEFAULT_STEP_FRACTION: f64 = 0.25;
/// Default number of Gauss–Legendre nodes per panel.
pub const DEFAULT_ORDER: usize = 3;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `P_n(x)` and its derivative by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Composite rule on `[0, length]` with panels no wider than `step`.
fn composite(length: f64, step: f64, order: usize) -> (Vec<f64>, Vec<f64>) {
    let panels = ((length / step) - 1e-9).ceil().max(1.0) as usize;
    let h = length / panels as f64;
    let (x, w) = gauss_legendre(order);
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for k in 0..panels {
        let mid = (k as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + 0.5 * h * xi);
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

/// Tensor-product rule over `[0, D_y] × [0, D_z]` carrying the surface
/// normalization `1 / (λ sqrt(D_y D_z))`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub step_y: f64,
    pub step_z: f64,
    pub order: usize,
    pub ys: Vec<f64>,
    pub wy: Vec<f64>,
    pub zs: Vec<f64>,
    pub wz: Vec<f64>,
    pub normalization: f64,
}

impl QuadratureGrid {
    /// Grid with panel width `step_fraction · λ` on both axes and `order`
    /// nodes per panel. `order = 1` is the midpoint rule.
    pub fn new(aperture: &ApertureSpec, step_fraction: f64, order: usize) -> Result<Self> {
        if !(step_fraction > 0.0) || !step_fraction.is_finite() {
            return Err(Error::config(
                "quadrature_step",
                format!("step must be a positive fraction of the wavelength, got {step_fraction}"),
            ));
        }
        if order == 0 || order > 16 {
            return Err(Error::config(
                "quadrature_order",
                format!("order must be in 1..=16, got {order}"),
            ));
        }
        let step = step_fraction * aperture.wavelength;
        let (ys, wy) = composite(aperture.d_y, step, order);
        let (zs, wz) = composite(aperture.d_z, step, order);
        Ok(Self {
            step_y: step,
            step_z: step,
            order,
            ys,
            wy,
            zs,
            wz,
            normalization: 1.0 / (aperture.wavelength * (aperture.d_y * aperture.d_z).sqrt()),
        })
    }

    pub fn default_for(aperture: &ApertureSpec) -> Self {
        Self::new(aperture, DEFAULT_STEP_FRACTION, DEFAULT_ORDER).expect("default rule is valid")
    }

    /// Same rule with half the panel width.
    pub fn refined(&self, aperture: &ApertureSpec) -> Self {
        Self::new(aperture, self.step_y / (2.0 * aperture.wavelength), self.order).expect("refinement of a valid rule")
    }

    pub fn n_points(&self) -> usize {
        self.ys.len() * self.zs.len()
    }

    /// `normalization · ∬ f(y, z) dy dz`.
    pub fn integrate<F>(&self, mut f: F) -> Complex64
    where
        F: FnMut(f64, f64) -> Complex64,
    {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&y, &wy) in self.ys.iter().zip(&self.wy) {
            let mut row = Complex64::new(0.0, 0.0);
            for (&z, &wz) in self.zs.iter().zip(&self.wz) {
                row += f(y, z) * wz;
            }
            acc += row * wy;
        }
        acc * self.normalization
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_known_rules() {
        let (x, w) = gauss_legendre(1);
        assert_eq!(x, vec![0.0]);
        assert!((w[0] - 2.0).abs() < 1e-15);
        let (x, w) = gauss_legendre(3);
        let r = (0.6f64).sqrt();
        assert!((x[0] + r).abs() < 1e-15 && (x[2] - r).abs() < 1e-15 && x[1] == 0.0);
        assert!((w[0] - 5.0 / 9.0).abs() < 1e-15 && (w[1] - 8.0 / 9.0).abs() < 1e-15);
        for n in 1..=12 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            // exact for degree 2n-1
            let deg = 2 * n - 2;
            let exact = 2.0 / (deg as f64 + 1.0);
            let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
            assert!((got - exact).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn constant_integrand_gives_sqrt_ae() {
        let ap = ApertureSpec::mm_wave(0.025, 0.2);
        let q = QuadratureGrid::default_for(&ap);
        let c = Complex64::new(0.3, -0.7);
        let s = q.integrate(|_, _| c);
        let expected = c * ap.aperture_norm.sqrt();
        assert!((s - expected).norm() < 1e-12 * expected.norm());
    }

    #[test]
    fn oscillatory_integrand() {
        let ap = ApertureSpec::mm_wave(0.025, 0.1);
        let q = QuadratureGrid::default_for(&ap);
        let k = 2.0 * PI / ap.wavelength * 0.73;
        // ∫_0^Dz e^{jkz} dz = (e^{jkDz} - 1) / (jk)
        let j = Complex64::new(0.0, 1.0);
        let exact_z = ((j * k * ap.d_z).exp() - 1.0) / (j * k);
        let expected = exact_z * ap.d_y * q.normalization;
        let got = q.integrate(|_, z| (j * k * z).exp());
        let rel = (got - expected).norm() / expected.norm();
        assert!(rel < 1e-4, "{rel}");
    }

    #[test]
    fn refinement_halves_step() {
        let ap = ApertureSpec::mm_wave(0.025, 0.1);
        let q = QuadratureGrid::default_for(&ap);
        let r = q.refined(&ap);
        assert!((r.step_y - q.step_y / 2.0).abs() < 1e-15);
        assert_eq!(r.zs.len(), 2 * q.zs.len());
        assert!(QuadratureGrid::new(&ap, 0.0, 3).is_err());
        assert!(QuadratureGrid::new(&ap, 0.25, 0).is_err());
    }
}
