//! Baseband field on the receiving surface, link budget and noise.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{extra_distance_exact, Architecture, SourcePosition, SurfacePoint};

/// Free-space link budget with unit receive-element gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Radiated power (W).
    pub eirp: f64,
    /// Total complex noise variance `σ²` (W).
    pub noise_power: f64,
    pub f0: f64,
    /// Propagation speed (m/s).
    pub c: f64,
}

impl LinkBudget {
    pub fn new(eirp: f64, noise_power: f64, f0: f64, c: f64) -> Result<Self> {
        if !(eirp > 0.0) || !eirp.is_finite() {
            return Err(Error::domain(format!("EIRP must be positive, got {eirp} W")));
        }
        if !(noise_power >= 0.0) || !noise_power.is_finite() {
            return Err(Error::domain(format!(
                "noise power must be non-negative, got {noise_power} W"
            )));
        }
        if !(f0 > 0.0) || !(c > 0.0) {
            return Err(Error::domain(
                "carrier frequency and propagation speed must be positive",
            ));
        }
        Ok(Self {
            eirp,
            noise_power,
            f0,
            c,
        })
    }

    /// Builds a budget from an EIRP in dBm and a noise power in dBW.
    /// `noise_dbw = -inf` gives a noiseless channel.
    pub fn from_db(eirp_dbm: f64, noise_dbw: f64, f0: f64, c: f64) -> Result<Self> {
        Self::new(dbm_to_watt(eirp_dbm), dbw_to_watt(noise_dbw), f0, c)
    }

    pub fn wavelength(&self) -> f64 {
        self.c / self.f0
    }

    /// Same budget with another noise power.
    pub fn with_noise(self, noise_power: f64) -> Self {
        Self { noise_power, ..self }
    }

    /// Friis amplitude `A_pl = sqrt(EIRP) λ / (4π d)`.
    pub fn amplitude(&self, d: f64) -> Result<f64> {
        if !(d > 0.0) {
            return Err(Error::domain(format!("link distance must be positive, got {d}")));
        }
        Ok(self.amplitude_unchecked(d))
    }

    #[inline]
    pub(crate) fn amplitude_unchecked(&self, d: f64) -> f64 {
        self.eirp.sqrt() * self.wavelength() / (4.0 * PI * d)
    }

    /// Common complex factor `x0 = A_pl e^{-jχ}` of a source.
    pub fn x0(&self, p: &SourcePosition) -> Complex64 {
        Complex64::from_polar(self.amplitude_unchecked(p.d), -p.chi)
    }

    /// Field `x0 e^{-j 2π a / λ}` impinging on a surface point.
    pub fn surface_field(&self, p: &SourcePosition, s: &SurfacePoint) -> Complex64 {
        let a = extra_distance_exact(p, s);
        self.x0(p) * Complex64::from_polar(1.0, -TAU * a / self.wavelength())
    }
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn dbw_to_watt(dbw: f64) -> f64 {
    10f64.powf(dbw / 10.0)
}

pub fn watt_to_dbw(w: f64) -> f64 {
    10.0 * w.log10()
}

/// SplitMix64 finaliser.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a global seed and a path of
/// tags (experiment, cell, trial, ...). The result depends only on its
/// arguments, never on scheduling.
pub fn stream_seed(global: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix64(global), |h, &t| mix64(h ^ mix64(t)))
}

pub fn stream_rng(global: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(global, tags))
}

/// One draw of `CN(0, σ²)`: real and imaginary parts each have variance `σ²/2`.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, sigma2: f64) -> Complex64 {
    let scale = (sigma2 / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

/// Uniform phase offset in `[0, 2π)`.
pub fn random_phase<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>() * TAU
}

/// Adds i.i.d. `CN(0, σ²)` noise drawn from `rng`, one draw per entry in order.
pub fn add_noise_with<R: Rng + ?Sized>(s: &[Complex64], sigma2: f64, rng: &mut R) -> Vec<Complex64> {
    if sigma2 == 0.0 {
        return s.to_vec();
    }
    s.iter().map(|&v| v + complex_normal(rng, sigma2)).collect()
}

/// Adds i.i.d. `CN(0, σ²)` noise from a stream seeded by `seed`.
pub fn add_noise(s: &[Complex64], sigma2: f64, seed: u64) -> Result<Vec<Complex64>> {
    if !(sigma2 >= 0.0) {
        return Err(Error::domain(format!("noise power must be non-negative, got {sigma2}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(add_noise_with(s, sigma2, &mut rng))
}

/// Received vector of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub r: Vec<Complex64>,
    pub truth: SourcePosition,
    pub arch: Architecture,
    pub seed: u64,
}

impl Snapshot {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lb() -> LinkBudget {
        LinkBudget::from_db(23.0, -106.0, 60e9, 3e8).unwrap()
    }

    #[test]
    fn friis_amplitude() {
        let lb = lb();
        let a10 = lb.amplitude(10.0).unwrap();
        let oracle = (0.199_526_231_5f64).sqrt() * 0.005 / (4.0 * PI * 10.0);
        assert!((a10 - oracle).abs() < 1e-12);
        assert!((a10 - 1.777e-5).abs() < 1e-8);
        assert!((watt_to_dbw(a10 * a10) + 95.0).abs() < 0.05);
        let a20 = lb.amplitude(20.0).unwrap();
        assert!((a20 - a10 / 2.0).abs() < 1e-18);
        assert!(lb.amplitude(0.0).is_err());
        assert!(lb.amplitude(-1.0).is_err());
        let snr = a10 * a10 / lb.noise_power;
        assert!(snr.is_finite() && snr > 0.0);
    }

    #[test]
    fn surface_field_phase() {
        let lb = lb();
        let p = SourcePosition::new(10.0, 0.0, 0.0).unwrap();
        let origin = SurfacePoint::new(0.0, 0.0);
        assert_eq!(lb.surface_field(&p, &origin), lb.x0(&p));
        let h = lb.surface_field(&p, &SurfacePoint::new(0.0, 0.1));
        let expected = -TAU * 10.0 * (1.0001f64.sqrt() - 1.0) / 0.005;
        assert!((h.arg() - expected).abs() < 1e-9);
        assert!((expected + 0.62830).abs() < 1e-4);

        let q = SourcePosition::new(10.0, 0.3, 1.0).unwrap();
        let qpi = q.with_chi(1.0 + PI);
        let s = SurfacePoint::new(0.01, 0.07);
        let (a, b) = (lb.surface_field(&q, &s), lb.surface_field(&qpi, &s));
        assert!((a + b).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn noise_contract() {
        let s = vec![Complex64::new(1.0, -2.0); 8];
        assert_eq!(add_noise(&s, 0.0, 3).unwrap(), s);
        assert_eq!(add_noise(&s, 0.5, 3).unwrap(), add_noise(&s, 0.5, 3).unwrap());
        assert_ne!(add_noise(&s, 0.5, 3).unwrap(), add_noise(&s, 0.5, 4).unwrap());
        assert!(add_noise(&s, -1.0, 3).is_err());

        let zeros = vec![Complex64::new(0.0, 0.0); 100_000];
        let w = add_noise(&zeros, 2.5e-11, 11).unwrap();
        let var = w.iter().map(|v| v.norm_sqr()).sum::<f64>() / w.len() as f64;
        assert!((var / 2.5e-11 - 1.0).abs() < 0.02);
        let var_re = w.iter().map(|v| v.re * v.re).sum::<f64>() / w.len() as f64;
        assert!((var_re / 1.25e-11 - 1.0).abs() < 0.03);
    }

    #[test]
    fn stream_seeds_differ_by_tag() {
        assert_eq!(stream_seed(1, &[2, 3]), stream_seed(1, &[2, 3]));
        assert_ne!(stream_seed(1, &[2, 3]), stream_seed(1, &[3, 2]));
        assert_ne!(stream_seed(1, &[2]), stream_seed(2, &[2]));
    }
}
