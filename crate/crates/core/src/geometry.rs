//! Receiver-centric geometry.
//!
//! The receiving surface lies in the `yz`-plane with its reference corner at
//! the origin and boresight along `+x`. A source is described by its distance
//! `d` from the reference corner and by the incidence angles `(theta, phi)`:
//! `theta` is measured from boresight and `phi` rotates the incidence plane
//! around boresight starting from the `xz`-plane, so that `phi = 0` keeps the
//! source in the `xz`-plane:
//!
//! ```text
//! p = d * (cos(theta), sin(theta) sin(phi), sin(theta) cos(phi))
//! ```

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default propagation speed. With this value the 60 GHz wavelength is 5 mm.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

pub type Vec3 = [f64; 3];

/// `floor` that tolerates ratios such as `0.2 / 0.005` landing one ulp below
/// an integer.
pub(crate) fn floor_tol(x: f64) -> f64 {
    (x + 1e-9).floor()
}

pub(crate) fn wrap_phase(chi: f64) -> f64 {
    let w = chi.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Receiver architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Architecture {
    /// Reconfigurable lens focusing on a single antenna.
    #[serde(rename = "r-lens")]
    RLens,
    /// Fixed lens with antennas on its focal arc.
    #[serde(rename = "nr-lens")]
    NrLens,
    /// Bare half-wavelength planar array.
    #[serde(rename = "no-lens")]
    NoLens,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [Architecture::RLens, Architecture::NrLens, Architecture::NoLens];

    pub fn label(self) -> &'static str {
        match self {
            Architecture::RLens => "r-lens",
            Architecture::NrLens => "nr-lens",
            Architecture::NoLens => "no-lens",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "r-lens" | "rlens" => Ok(Architecture::RLens),
            "nr-lens" | "nrlens" => Ok(Architecture::NrLens),
            "no-lens" | "nolens" => Ok(Architecture::NoLens),
            other => Err(Error::config(
                "architectures",
                format!("unknown architecture `{other}` (expected r-lens, nr-lens or no-lens)"),
            )),
        }
    }
}

/// Transmitter location in receiver-centric polar form plus its carrier
/// phase offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourcePosition {
    /// Distance from the surface reference point (m).
    pub d: f64,
    /// Angle from boresight (rad).
    pub theta: f64,
    /// Rotation of the incidence plane around boresight (rad).
    pub phi: f64,
    /// Carrier phase offset in `[0, 2π)`.
    pub chi: f64,
}

impl SourcePosition {
    /// Source in the `xz`-plane (`phi = 0`).
    pub fn new(d: f64, theta: f64, chi: f64) -> Result<Self> {
        Self::with_phi(d, theta, 0.0, chi)
    }

    pub fn with_phi(d: f64, theta: f64, phi: f64, chi: f64) -> Result<Self> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::domain(format!("source distance must be positive, got {d}")));
        }
        if !theta.is_finite() || !phi.is_finite() || !chi.is_finite() {
            return Err(Error::domain("source angles must be finite"));
        }
        Ok(Self {
            d,
            theta,
            phi,
            chi: wrap_phase(chi),
        })
    }

    /// Same location with another phase offset.
    pub fn with_chi(self, chi: f64) -> Self {
        Self {
            chi: wrap_phase(chi),
            ..self
        }
    }

    pub fn to_cartesian(&self) -> Vec3 {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [self.d * ct, self.d * st * sp, self.d * st * cp]
    }

    /// Inverse of [`to_cartesian`](Self::to_cartesian). Points with `y = 0`
    /// map back to `phi = 0` with a signed `theta`.
    pub fn from_cartesian(p: Vec3, chi: f64) -> Result<Self> {
        let [x, y, z] = p;
        let d = (x * x + y * y + z * z).sqrt();
        if y == 0.0 {
            Self::new(d, z.atan2(x), chi)
        } else {
            let theta = (y * y + z * z).sqrt().atan2(x);
            Self::with_phi(d, theta, y.atan2(z), chi)
        }
    }
}

/// Physical aperture of the lens or array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApertureSpec {
    pub d_y: f64,
    pub d_z: f64,
    pub wavelength: f64,
    pub f0: f64,
    /// `A_f = d_y * d_z` (m²).
    pub area_phys: f64,
    /// `A_e = A_f / λ²`.
    pub aperture_norm: f64,
}

impl ApertureSpec {
    pub fn new(d_y: f64, d_z: f64, f0: f64, c: f64) -> Result<Self> {
        for (name, v) in [("d_y", d_y), ("d_z", d_z), ("f0", f0), ("c", c)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(format!("aperture {name} must be positive, got {v}")));
            }
        }
        let wavelength = c / f0;
        let area_phys = d_y * d_z;
        Ok(Self {
            d_y,
            d_z,
            wavelength,
            f0,
            area_phys,
            aperture_norm: area_phys / (wavelength * wavelength),
        })
    }

    /// Aperture at 60 GHz with the default propagation speed.
    pub fn mm_wave(d_y: f64, d_z: f64) -> Self {
        Self::new(d_y, d_z, 60e9, SPEED_OF_LIGHT).expect("positive dimensions")
    }

    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength
    }

    /// `A_e` rounded for labels and file names.
    pub fn ae_label(&self) -> String {
        let r = self.aperture_norm.round();
        if (self.aperture_norm - r).abs() < 1e-6 * r.max(1.0) {
            format!("{}", r as i64)
        } else {
            format!("{:.2}", self.aperture_norm)
        }
    }
}

/// A point `(0, y, z)` of the receiving surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub y: f64,
    pub z: f64,
    /// Distance from the reference corner.
    pub d_0yz: f64,
    /// Azimuth of the point seen from the reference corner, measured from
    /// the `z` axis towards `y`.
    pub phi_0yz: f64,
}

impl SurfacePoint {
    pub fn new(y: f64, z: f64) -> Self {
        Self {
            y,
            z,
            d_0yz: y.hypot(z),
            phi_0yz: y.atan2(z),
        }
    }

    /// `g = sin(theta) cos(phi_0yz - phi)`, the direction cosine between the
    /// incidence direction and the point.
    pub fn g(&self, p: &SourcePosition) -> f64 {
        p.theta.sin() * (self.phi_0yz - p.phi).cos()
    }
}

/// Fraunhofer distance `2 D² / λ`.
pub fn fraunhofer_distance(diameter: f64, wavelength: f64) -> Result<f64> {
    if !(diameter > 0.0) || !(wavelength > 0.0) {
        return Err(Error::domain(format!(
            "fraunhofer distance needs positive diameter and wavelength, got D={diameter}, λ={wavelength}"
        )));
    }
    Ok(2.0 * diameter * diameter / wavelength)
}

/// Extra distance travelled by the wave to reach the surface point at
/// `(y, z)` compared to the reference corner. Evaluated in the cancellation-free
/// form `d u / (sqrt(1 + u) + 1)`.
#[inline]
pub(crate) fn extra_distance_yz(p: &SourcePosition, y: f64, z: f64) -> f64 {
    PathKernel::new(p).extra(y, z)
}

/// [`extra_distance_yz`] with the source-dependent factors hoisted out of
/// surface loops.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PathKernel {
    d: f64,
    inv_d2: f64,
    cy: f64,
    cz: f64,
}

impl PathKernel {
    pub(crate) fn new(p: &SourcePosition) -> Self {
        let st = p.theta.sin();
        let (sp, cp) = if p.phi == 0.0 { (0.0, 1.0) } else { p.phi.sin_cos() };
        Self {
            d: p.d,
            inv_d2: 1.0 / (p.d * p.d),
            cy: 2.0 * p.d * st * sp,
            cz: 2.0 * p.d * st * cp,
        }
    }

    #[inline(always)]
    pub(crate) fn extra(&self, y: f64, z: f64) -> f64 {
        let u = (y * y + z * z - self.cy * y - self.cz * z) * self.inv_d2;
        self.d * u / ((1.0 + u).sqrt() + 1.0)
    }
}

/// Exact extra distance `a = -d + d sqrt(1 + d0²/d² - 2 (d0/d) g)`.
pub fn extra_distance_exact(p: &SourcePosition, s: &SurfacePoint) -> f64 {
    let d = p.d;
    let r = s.d_0yz / d;
    let u = r * r - 2.0 * r * s.g(p);
    d * u / ((1.0 + u).sqrt() + 1.0)
}

/// Second-order (Fresnel) expansion `a ≈ -d0 g + d0² (1 - g²) / (2 d)`.
pub fn extra_distance_fresnel(p: &SourcePosition, s: &SurfacePoint) -> f64 {
    let g = s.g(p);
    -s.d_0yz * g + s.d_0yz * s.d_0yz * (1.0 - g * g) / (2.0 * p.d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutKind {
    SingleAntenna,
    FocalArc,
    PlanarGrid,
}

/// Per-antenna metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AntennaAux {
    Single,
    /// Focal-arc angle `theta_n`.
    FocalArc {
        theta_n: f64,
    },
    /// Grid indices with the offset distance and angle of the element from
    /// the reference corner.
    PlanarGrid {
        n_y: usize,
        n_z: usize,
        d_n0: f64,
        phi_n0: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayLayout {
    pub kind: LayoutKind,
    pub positions: Vec<Vec3>,
    pub aux: Vec<AntennaAux>,
    /// `(N_y, N_z)` for planar grids.
    pub grid_dims: Option<(usize, usize)>,
}

impl ArrayLayout {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Focal-arc angles, empty for other layouts.
    pub fn focal_angles(&self) -> Vec<f64> {
        self.aux
            .iter()
            .filter_map(|a| match a {
                AntennaAux::FocalArc { theta_n } => Some(*theta_n),
                _ => None,
            })
            .collect()
    }

    /// Surface points of a planar grid, in antenna order.
    pub fn surface_points(&self) -> Vec<SurfacePoint> {
        self.positions.iter().map(|p| SurfacePoint::new(p[1], p[2])).collect()
    }
}

/// Antenna count of each architecture as a function of the aperture:
/// 1 for the R-lens, `1 + ⌊2 D_z/λ⌋` for the NR-lens and `⌊4 A_e⌋` for the
/// bare array.
pub fn nominal_antenna_count(arch: Architecture, aperture: &ApertureSpec) -> usize {
    match arch {
        Architecture::RLens => 1,
        Architecture::NrLens => 1 + floor_tol(2.0 * aperture.d_z / aperture.wavelength) as usize,
        Architecture::NoLens => floor_tol(4.0 * aperture.aperture_norm) as usize,
    }
}

/// Builds the antenna layout of an architecture. The NR-lens places
/// `1 + 2⌊D_z/λ⌋` antennas at `sin θ_n = n λ / D_z`.
pub fn build_layout(arch: Architecture, aperture: &ApertureSpec, focal_len: f64) -> Result<ArrayLayout> {
    match arch {
        Architecture::RLens => {
            check_focal(focal_len)?;
            Ok(ArrayLayout {
                kind: LayoutKind::SingleAntenna,
                positions: vec![[-focal_len, aperture.d_y / 2.0, aperture.d_z / 2.0]],
                aux: vec![AntennaAux::Single],
                grid_dims: None,
            })
        }
        Architecture::NrLens => {
            let half = floor_tol(aperture.d_z / aperture.wavelength) as usize;
            focal_arc_layout(aperture, focal_len, 2 * half + 1)
        }
        Architecture::NoLens => Ok(planar_grid_layout(aperture)),
    }
}

fn check_focal(focal_len: f64) -> Result<()> {
    if !(focal_len > 0.0) || !focal_len.is_finite() {
        return Err(Error::domain(format!("focal length must be positive, got {focal_len}")));
    }
    Ok(())
}

/// Focal-arc layout with an explicit antenna count. Antenna `k` sits at
/// `sin θ = (k - (count-1)/2) λ / D_z`, so even counts use half-integer
/// offsets.
pub fn focal_arc_layout(aperture: &ApertureSpec, focal_len: f64, count: usize) -> Result<ArrayLayout> {
    check_focal(focal_len)?;
    if count == 0 {
        return Err(Error::domain("focal arc needs at least one antenna"));
    }
    let dz_norm = aperture.d_z / aperture.wavelength;
    let centre = (count as f64 - 1.0) / 2.0;
    let mut positions = Vec::with_capacity(count);
    let mut aux = Vec::with_capacity(count);
    for k in 0..count {
        let s = (k as f64 - centre) / dz_norm;
        if s.abs() > 1.0 + 1e-12 {
            return Err(Error::domain(format!(
                "{count} focal-arc antennas do not fit a {:.3} m lens: |sin θ| = {s:.3} > 1",
                aperture.d_z
            )));
        }
        let theta_n = s.clamp(-1.0, 1.0).asin();
        positions.push([
            -focal_len * theta_n.cos(),
            aperture.d_y / 2.0,
            aperture.d_z / 2.0 + focal_len * theta_n.sin(),
        ]);
        aux.push(AntennaAux::FocalArc { theta_n });
    }
    Ok(ArrayLayout {
        kind: LayoutKind::FocalArc,
        positions,
        aux,
        grid_dims: None,
    })
}

/// Half-wavelength grid tiling the aperture, row-major in `(n_y, n_z)`.
pub fn planar_grid_layout(aperture: &ApertureSpec) -> ArrayLayout {
    let n_y = (floor_tol(2.0 * aperture.d_y / aperture.wavelength) as usize).max(1);
    let n_z = (floor_tol(2.0 * aperture.d_z / aperture.wavelength) as usize).max(1);
    let spacing = aperture.wavelength / 2.0;
    let count = n_y * n_z;
    let mut positions = Vec::with_capacity(count);
    let mut aux = Vec::with_capacity(count);
    for n in 0..count {
        let (iy, iz) = (n / n_z, n % n_z);
        let (y, z) = (iy as f64 * spacing, iz as f64 * spacing);
        positions.push([0.0, y, z]);
        aux.push(AntennaAux::PlanarGrid {
            n_y: iy,
            n_z: iz,
            d_n0: y.hypot(z),
            phi_n0: y.atan2(z),
        });
    }
    ArrayLayout {
        kind: LayoutKind::PlanarGrid,
        positions,
        aux,
        grid_dims: Some((n_y, n_z)),
    }
}

/// Degrees to radians, kept here so configuration code reads naturally.
pub fn deg(x: f64) -> f64 {
    x * PI / 180.0
}
