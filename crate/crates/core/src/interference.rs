//! Signal-to-interference ratio after combining matched to the useful source.
//!
//! All sources radiate with the same amplitude, so the ratio isolates the
//! spatial discrimination of each front-end from the path loss.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::channel::{random_phase, stream_rng, LinkBudget};
use crate::error::{Error, Result};
use crate::frontend::Frontend;
use crate::geometry::{AntennaAux, ApertureSpec, Architecture, ArrayLayout, PathKernel, SourcePosition};

/// Coverage threshold `ξ* = 10 dB`.
pub const DEFAULT_THRESHOLD_DB: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceScenario {
    pub useful: SourcePosition,
    pub interferers: Vec<SourcePosition>,
    /// Forces every interferer onto the useful source's phase.
    pub worst_case_phase: bool,
}

impl InterferenceScenario {
    pub fn new(useful: SourcePosition, interferers: Vec<SourcePosition>, worst_case_phase: bool) -> Result<Self> {
        if interferers.is_empty() {
            return Err(Error::domain("an interference scenario needs at least one interferer"));
        }
        Ok(Self {
            useful,
            interferers,
            worst_case_phase,
        })
    }

    /// One interferer in phase with the useful source.
    pub fn single_worst_case(useful: SourcePosition, interferer: SourcePosition) -> Self {
        Self {
            useful,
            interferers: vec![interferer],
            worst_case_phase: true,
        }
    }

    fn interferer_phase(&self, i: &SourcePosition) -> SourcePosition {
        if self.worst_case_phase {
            i.with_chi(self.useful.chi)
        } else {
            *i
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirResult {
    pub sir_linear: f64,
    /// `10 log10(sir_linear)`.
    pub sir_db: f64,
    pub eta_u: Complex64,
    pub eta_int: Complex64,
}

impl SirResult {
    pub fn from_ratio(sir_linear: f64, eta_u: Complex64, eta_int: Complex64) -> Self {
        Self {
            sir_linear,
            sir_db: 10.0 * sir_linear.log10(),
            eta_u,
            eta_int,
        }
    }

    fn from_etas(eta_u: Complex64, eta_int: Complex64) -> Self {
        let ratio = if eta_int.norm() == 0.0 {
            f64::INFINITY
        } else {
            eta_u.norm() / eta_int.norm()
        };
        Self::from_ratio(ratio, eta_u, eta_int)
    }

    pub fn covered(&self, threshold_db: f64) -> bool {
        self.sir_db > threshold_db
    }
}

/// Combiner matched to one useful source. Evaluates the unit-amplitude
/// combiner output `η` of any other source.
pub struct MatchedCombiner<'a> {
    fe: &'a Frontend,
    useful: SourcePosition,
    /// Conjugate matched weights on the quadrature nodes (R-lens) or antennas.
    weights: Vec<Complex64>,
    eta_u: Complex64,
}

impl<'a> MatchedCombiner<'a> {
    pub fn new(fe: &'a Frontend, useful: SourcePosition) -> Self {
        let k = fe.aperture.wavenumber();
        let weights: Vec<Complex64> = match fe.arch {
            Architecture::RLens => {
                // κ e^{-jΨ0} = P1 with χ_t = χ_u, times weights and normalization
                let q = &fe.quad;
                let path = PathKernel::new(&useful);
                let mut w = Vec::with_capacity(q.n_points());
                for (&y, &wy) in q.ys.iter().zip(&q.wy) {
                    for (&z, &wz) in q.zs.iter().zip(&q.wz) {
                        w.push(Complex64::from_polar(
                            q.normalization * wy * wz,
                            k * path.extra(y, z) + useful.chi,
                        ));
                    }
                }
                w
            }
            Architecture::NrLens | Architecture::NoLens => {
                unit_response(fe, &useful).iter().map(|v| v.conj()).collect()
            }
        };
        let mut c = Self {
            fe,
            useful,
            weights,
            eta_u: Complex64::new(0.0, 0.0),
        };
        c.eta_u = c.eta(&useful);
        c
    }

    pub fn useful(&self) -> &SourcePosition {
        &self.useful
    }

    pub fn eta_u(&self) -> Complex64 {
        self.eta_u
    }

    /// Combiner output for a unit-amplitude source at `p` with phase `p.chi`.
    pub fn eta(&self, p: &SourcePosition) -> Complex64 {
        match self.fe.arch {
            Architecture::RLens => {
                let k = self.fe.aperture.wavenumber();
                let q = &self.fe.quad;
                let path = PathKernel::new(p);
                let nz = q.zs.len();
                let mut acc = Complex64::new(0.0, 0.0);
                for (iy, &y) in q.ys.iter().enumerate() {
                    let row = &self.weights[iy * nz..(iy + 1) * nz];
                    for (&z, w) in q.zs.iter().zip(row) {
                        acc += w * Complex64::from_polar(1.0, -k * path.extra(y, z));
                    }
                }
                acc * Complex64::from_polar(1.0, -p.chi)
            }
            Architecture::NrLens | Architecture::NoLens => unit_response(self.fe, p)
                .iter()
                .zip(&self.weights)
                .map(|(s, w)| s * w)
                .sum(),
        }
    }

    pub fn sir(&self, interferers: &[SourcePosition]) -> SirResult {
        let eta_int: Complex64 = interferers.iter().map(|p| self.eta(p)).sum();
        SirResult::from_etas(self.eta_u, eta_int)
    }
}

/// Antenna vector with the path-loss amplitude removed.
fn unit_response(fe: &Frontend, p: &SourcePosition) -> Vec<Complex64> {
    let lb = unit_budget(fe);
    let scale = 1.0 / lb.amplitude_unchecked(p.d);
    fe.response(&lb, p)
        .expect("array front-end")
        .into_iter()
        .map(|v| v * scale)
        .collect()
}

fn unit_budget(fe: &Frontend) -> LinkBudget {
    let c = fe.aperture.wavelength * fe.aperture.f0;
    LinkBudget::new(1.0, 0.0, fe.aperture.f0, c).expect("valid unit budget")
}

/// SIR of the useful source against the sum of all interferers.
pub fn sir_exact(scn: &InterferenceScenario, fe: &Frontend) -> SirResult {
    let comb = MatchedCombiner::new(fe, scn.useful);
    let ints: Vec<SourcePosition> = scn.interferers.iter().map(|i| scn.interferer_phase(i)).collect();
    comb.sir(&ints)
}

/// Curvature mismatch `γ = (1/(2d)) (1/(1 + Δd/d) - 1)`.
pub fn gamma(d: f64, delta_d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::domain(format!("useful distance must be positive, got {d}")));
    }
    if !(d + delta_d > 0.0) {
        return Err(Error::domain(format!(
            "interferer distance d + Δd = {} must be positive",
            d + delta_d
        )));
    }
    Ok((1.0 / (1.0 + delta_d / d) - 1.0) / (2.0 * d))
}

/// `sin(πx) / (πx)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Boresight R-lens SIR with the aperture replaced by a quarter disc of equal
/// area: `1 / |sinc(D_ρ² γ / λ)|`, `D_ρ² = 4 A_f / π`.
pub fn sir_rlens_sinc(d: f64, delta_d: f64, ap: &ApertureSpec) -> Result<SirResult> {
    let g = gamma(d, delta_d)?;
    let d_rho2 = 4.0 * ap.area_phys / PI;
    let s = sinc(d_rho2 * g / ap.wavelength);
    let ratio = if s == 0.0 { f64::INFINITY } else { 1.0 / s.abs() };
    Ok(SirResult::from_ratio(
        ratio,
        Complex64::new(1.0, 0.0),
        Complex64::new(s, 0.0),
    ))
}

/// Envelope `|2 A_f / (λ d) · Δd / (d + Δd)|` of the R-lens SIR.
pub fn rlens_envelope_bound(d: f64, delta_d: f64, ap: &ApertureSpec) -> Result<f64> {
    gamma(d, delta_d)?;
    Ok((2.0 * ap.area_phys / (ap.wavelength * d) * delta_d / (d + delta_d)).abs())
}

/// Boresight bare-array SIR under the second-order phase model:
/// `N_A / |Σ_n exp(-j 2π γ d_n0² / λ)|`.
pub fn sir_nolens_fresnel(d: f64, delta_d: f64, layout: &ArrayLayout, wavelength: f64) -> Result<SirResult> {
    let g = gamma(d, delta_d)?;
    let k = TAU / wavelength;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut n = 0usize;
    for aux in &layout.aux {
        let AntennaAux::PlanarGrid { d_n0, .. } = aux else {
            return Err(Error::domain("fresnel SIR needs a planar-grid layout"));
        };
        sum += Complex64::from_polar(1.0, -k * g * d_n0 * d_n0);
        n += 1;
    }
    Ok(SirResult::from_etas(Complex64::new(n as f64, 0.0), sum))
}

/// Rectangular room, coordinates in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Room {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Room {
    pub fn square(side: f64) -> Self {
        Self {
            x_min: 0.0,
            x_max: side,
            y_min: 0.0,
            y_max: side,
        }
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    pub fn centre(&self) -> (f64, f64) {
        ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)
    }

    /// Grid points `min + i·step` covering the room, row-major in `y` then `x`.
    pub fn grid(&self, step: f64) -> Vec<(f64, f64)> {
        let nx = ((self.x_max - self.x_min) / step + 1e-9).floor() as usize + 1;
        let ny = ((self.y_max - self.y_min) / step + 1e-9).floor() as usize + 1;
        let mut cells = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                cells.push((self.x_min + ix as f64 * step, self.y_min + iy as f64 * step));
            }
        }
        cells
    }
}

/// Receiver location in the room and the direction of its boresight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverPose {
    pub x: f64,
    pub y: f64,
    /// Boresight direction measured from the room `x` axis (rad).
    pub boresight: f64,
}

impl ReceiverPose {
    /// Receiver at `(x, y)` looking at `target`.
    pub fn facing(x: f64, y: f64, target: (f64, f64)) -> Self {
        Self {
            x,
            y,
            boresight: (target.1 - y).atan2(target.0 - x),
        }
    }

    /// Receiver-centric position of a room point, or `None` for points at
    /// the receiver or outside its front half-space.
    pub fn to_source(&self, x: f64, y: f64, chi: f64) -> Option<SourcePosition> {
        let (dx, dy) = (x - self.x, y - self.y);
        let d = dx.hypot(dy);
        if d < 1e-9 {
            return None;
        }
        let theta = (dy.atan2(dx) - self.boresight + PI).rem_euclid(TAU) - PI;
        if theta.abs() >= FRAC_PI_2 {
            return None;
        }
        SourcePosition::new(d, theta, chi).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntensityMode {
    /// Mean interferer count per realization.
    PerRealization,
    /// Mean interferer count per square metre of room.
    PerSquareMetre,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PppModel {
    pub intensity: f64,
    pub mode: IntensityMode,
    pub room: Room,
    pub threshold_db: f64,
    /// Interferers closer than this to the receiver are redrawn.
    pub min_distance: f64,
}

impl PppModel {
    pub fn mean_count(&self) -> f64 {
        match self.mode {
            IntensityMode::PerRealization => self.intensity,
            IntensityMode::PerSquareMetre => self.intensity * self.room.area(),
        }
    }

    /// One realization of interferers visible from the receiver.
    pub fn sample<R: Rng + ?Sized>(&self, pose: &ReceiverPose, rng: &mut R) -> Vec<SourcePosition> {
        let mean = self.mean_count();
        let count = if mean > 0.0 {
            Poisson::new(mean).expect("positive mean").sample(rng) as usize
        } else {
            0
        };
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let x = self.room.x_min + rng.random::<f64>() * (self.room.x_max - self.room.x_min);
            let y = self.room.y_min + rng.random::<f64>() * (self.room.y_max - self.room.y_min);
            let chi = random_phase(rng);
            if let Some(p) = pose.to_source(x, y, chi) {
                if p.d >= self.min_distance {
                    out.push(p);
                }
            }
        }
        out
    }
}

/// Fraction of realizations with SIR above the threshold for a useful source
/// at each cell. Cells at the receiver or behind it are `NaN`.
pub fn ppp_coverage(
    cells: &[(f64, f64)],
    pose: &ReceiverPose,
    model: &PppModel,
    fe: &Frontend,
    n_mc: usize,
    seed: u64,
) -> Vec<f64> {
    cells
        .par_iter()
        .enumerate()
        .map(|(ci, &(x, y))| {
            let Some(useful) = pose.to_source(x, y, 0.0) else {
                return f64::NAN;
            };
            if useful.d < model.min_distance || n_mc == 0 {
                return f64::NAN;
            }
            let comb = MatchedCombiner::new(fe, useful);
            let mut covered = 0usize;
            for trial in 0..n_mc {
                let mut rng = stream_rng(seed, &[PPP_TAG, ci as u64, trial as u64]);
                let chi_u = random_phase(&mut rng);
                let ints = model.sample(pose, &mut rng);
                // rotating every source by -χ_u leaves |η| unchanged
                let ints: Vec<SourcePosition> = ints.iter().map(|p| p.with_chi(p.chi - chi_u)).collect();
                if comb.sir(&ints).covered(model.threshold_db) {
                    covered += 1;
                }
            }
            covered as f64 / n_mc as f64
        })
        .collect()
}

const PPP_TAG: u64 = 0x5050_5000;
