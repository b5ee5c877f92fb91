//! Receiver front-ends: map a source position to the noiseless signal seen
//! at the antennas.
//!
//! The lens architectures integrate the surface field against a phase
//! profile using a [`QuadratureGrid`]; the bare array samples the field at
//! its element positions.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;

use crate::channel::LinkBudget;
use crate::error::{Error, Result};
use crate::geometry::{
    build_layout, extra_distance_fresnel, extra_distance_yz, ApertureSpec, Architecture, ArrayLayout, LayoutKind,
    PathKernel, SourcePosition, SurfacePoint, Vec3,
};
use crate::quadrature::QuadratureGrid;

/// Phase profile of the reconfigurable lens, focused on a test position
/// `p_t` with test offset `χ_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RLensProfile {
    pub test_position: SourcePosition,
    pub test_offset: f64,
    pub focal_point: Vec3,
    pub focal_len: f64,
    pub wavelength: f64,
}

impl RLensProfile {
    pub fn new(aperture: &ApertureSpec, focal_len: f64, test_position: SourcePosition, test_offset: f64) -> Self {
        Self {
            test_position,
            test_offset,
            focal_point: [-focal_len, aperture.d_y / 2.0, aperture.d_z / 2.0],
            focal_len,
            wavelength: aperture.wavelength,
        }
    }

    /// Flattening term `P1 = exp(j (2π a(s, p_t) / λ + χ_t))`.
    pub fn p1(&self, y: f64, z: f64) -> Complex64 {
        let a = extra_distance_yz(&self.test_position, y, z);
        Complex64::from_polar(1.0, TAU * a / self.wavelength + self.test_offset)
    }

    /// Focusing phase `Ψ0 = (2π/λ) sqrt(F² + d_cyz²)` towards the focal point.
    pub fn psi0(&self, y: f64, z: f64) -> f64 {
        let dy = y - self.focal_point[1];
        let dz = z - self.focal_point[2];
        TAU / self.wavelength * (self.focal_len * self.focal_len + dy * dy + dz * dz).sqrt()
    }

    /// `P2 = e^{jΨ0}`.
    pub fn p2(&self, y: f64, z: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.psi0(y, z))
    }

    /// Full profile `κ = P1 P2`.
    pub fn kappa(&self, y: f64, z: f64) -> Complex64 {
        self.p1(y, z) * self.p2(y, z)
    }
}

/// A receiver architecture with its layout and surface rule.
#[derive(Debug, Clone)]
pub struct Frontend {
    pub arch: Architecture,
    pub aperture: ApertureSpec,
    pub layout: ArrayLayout,
    pub quad: QuadratureGrid,
    pub focal_len: f64,
    /// NR-lens only: `w_q exp(+j k z̃_q sin θ_n)`, row-major in `(n, q)`.
    steering: Vec<Complex64>,
}

impl Frontend {
    pub fn new(arch: Architecture, aperture: ApertureSpec, focal_len: f64, quad: QuadratureGrid) -> Result<Self> {
        let layout = build_layout(arch, &aperture, focal_len)?;
        Self::with_layout(arch, aperture, layout, focal_len, quad)
    }

    /// Front-end with an explicit layout, e.g. an overridden focal-arc count.
    pub fn with_layout(
        arch: Architecture,
        aperture: ApertureSpec,
        layout: ArrayLayout,
        focal_len: f64,
        quad: QuadratureGrid,
    ) -> Result<Self> {
        let expected = match arch {
            Architecture::RLens => LayoutKind::SingleAntenna,
            Architecture::NrLens => LayoutKind::FocalArc,
            Architecture::NoLens => LayoutKind::PlanarGrid,
        };
        if layout.kind != expected {
            return Err(Error::domain(format!(
                "{arch} needs a {expected:?} layout, got {:?}",
                layout.kind
            )));
        }
        let steering = if arch == Architecture::NrLens {
            let k = aperture.wavenumber();
            let mut table = Vec::with_capacity(layout.len() * quad.zs.len());
            for theta_n in layout.focal_angles() {
                let st = theta_n.sin();
                for (&z, &w) in quad.zs.iter().zip(&quad.wz) {
                    table.push(Complex64::from_polar(w, k * (aperture.d_z / 2.0 - z) * st));
                }
            }
            table
        } else {
            Vec::new()
        };
        Ok(Self {
            arch,
            aperture,
            layout,
            quad,
            focal_len,
            steering,
        })
    }

    /// Front-end with the default rule and focal length `F_p = D_z`.
    pub fn standard(arch: Architecture, aperture: ApertureSpec) -> Result<Self> {
        let quad = QuadratureGrid::default_for(&aperture);
        Self::new(arch, aperture, aperture.d_z, quad)
    }

    pub fn n_antennas(&self) -> usize {
        self.layout.len()
    }

    pub fn profile(&self, test_position: SourcePosition, test_offset: f64) -> RLensProfile {
        RLensProfile::new(&self.aperture, self.focal_len, test_position, test_offset)
    }

    /// Noiseless antenna vector for a source (NR-lens and no-lens). The
    /// R-lens output depends on the lens state, see [`rlens_output`].
    pub fn response(&self, lb: &LinkBudget, p: &SourcePosition) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n_antennas()];
        self.response_into(lb, p, &mut out)?;
        Ok(out)
    }

    pub fn response_into(&self, lb: &LinkBudget, p: &SourcePosition, out: &mut [Complex64]) -> Result<()> {
        if out.len() != self.n_antennas() {
            return Err(Error::domain(format!(
                "output buffer has {} entries, layout has {}",
                out.len(),
                self.n_antennas()
            )));
        }
        match self.arch {
            Architecture::RLens => Err(Error::domain(
                "the r-lens output depends on the lens profile; use rlens_output",
            )),
            Architecture::NrLens => {
                self.nrlens_into(lb, p, out);
                Ok(())
            }
            Architecture::NoLens => {
                let x0 = lb.x0(p);
                let k = self.aperture.wavenumber();
                let path = PathKernel::new(p);
                for (o, pos) in out.iter_mut().zip(&self.layout.positions) {
                    *o = x0 * Complex64::from_polar(1.0, -k * path.extra(pos[1], pos[2]));
                }
                Ok(())
            }
        }
    }

    fn nrlens_into(&self, lb: &LinkBudget, p: &SourcePosition, out: &mut [Complex64]) {
        let k = self.aperture.wavenumber();
        let q = &self.quad;
        let path = PathKernel::new(p);
        let column: Vec<Complex64> =
            q.zs.iter()
                .map(|&z| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (&y, &w) in q.ys.iter().zip(&q.wy) {
                        acc += Complex64::from_polar(w, -k * path.extra(y, z));
                    }
                    acc
                })
                .collect();
        let scale = lb.x0(p) * q.normalization;
        let nq = column.len();
        for (n, o) in out.iter_mut().enumerate() {
            let row = &self.steering[n * nq..(n + 1) * nq];
            let mut acc = Complex64::new(0.0, 0.0);
            for (s, f) in row.iter().zip(&column) {
                acc += s * f;
            }
            *o = scale * acc;
        }
    }

    /// Bare-array vector with the second-order phase at each element.
    pub fn nolens_fresnel(&self, lb: &LinkBudget, p: &SourcePosition) -> Result<Vec<Complex64>> {
        if self.arch != Architecture::NoLens {
            return Err(Error::domain("fresnel element model applies to the no-lens array only"));
        }
        let x0 = lb.x0(p);
        let k = self.aperture.wavenumber();
        Ok(self
            .layout
            .surface_points()
            .iter()
            .map(|s| x0 * Complex64::from_polar(1.0, -k * extra_distance_fresnel(p, s)))
            .collect())
    }

    /// Reconfigurable-lens output `s0` for a source seen through `profile`.
    pub fn rlens_output(&self, lb: &LinkBudget, p_true: &SourcePosition, profile: &RLensProfile) -> Complex64 {
        rlens_output(p_true, profile, lb, &self.quad)
    }

    /// Truth-side table of the R-lens integrand, reusable across profiles.
    pub fn rlens_truth(&self, lb: &LinkBudget, p_true: &SourcePosition) -> RLensTruth {
        let k = self.aperture.wavenumber();
        let q = &self.quad;
        let x0 = lb.x0(p_true) * q.normalization;
        let path = PathKernel::new(p_true);
        let mut table = Vec::with_capacity(q.n_points());
        for (&y, &wy) in q.ys.iter().zip(&q.wy) {
            for (&z, &wz) in q.zs.iter().zip(&q.wz) {
                table.push(x0 * Complex64::from_polar(wy * wz, -k * path.extra(y, z)));
            }
        }
        RLensTruth { table }
    }

    /// R-lens output for many profiles against one truth table.
    pub fn rlens_output_cached(&self, truth: &RLensTruth, profile: &RLensProfile) -> Complex64 {
        let k = self.aperture.wavenumber();
        let q = &self.quad;
        let path = PathKernel::new(&profile.test_position);
        let mut acc = Complex64::new(0.0, 0.0);
        let nz = q.zs.len();
        for (iy, &y) in q.ys.iter().enumerate() {
            let row = &truth.table[iy * nz..(iy + 1) * nz];
            for (&z, h) in q.zs.iter().zip(row) {
                acc += h * Complex64::from_polar(1.0, k * path.extra(y, z));
            }
        }
        acc * Complex64::from_polar(1.0, profile.test_offset)
    }
}

/// Weighted truth field `norm w_y w_z x0 e^{-j k a}` on the quadrature nodes.
#[derive(Debug, Clone)]
pub struct RLensTruth {
    table: Vec<Complex64>,
}

/// `s0 = norm ∬ κ h e^{-jΨ0} dy dz`. Since `P2 e^{-jΨ0} = 1` identically the
/// focusing terms are dropped from the integrand.
pub fn rlens_output(p_true: &SourcePosition, profile: &RLensProfile, lb: &LinkBudget, q: &QuadratureGrid) -> Complex64 {
    let k = TAU / profile.wavelength;
    let x0 = lb.x0(p_true);
    let (test, truth) = (PathKernel::new(&profile.test_position), PathKernel::new(p_true));
    let s = q.integrate(|y, z| {
        let dphi = k * (test.extra(y, z) - truth.extra(y, z));
        Complex64::from_polar(1.0, dphi)
    });
    x0 * s * Complex64::from_polar(1.0, profile.test_offset)
}

/// `s0` evaluated term by term as `κ h e^{-jΨ0}`, without the cancellation
/// used by [`rlens_output`].
pub fn rlens_output_direct(
    p_true: &SourcePosition,
    profile: &RLensProfile,
    lb: &LinkBudget,
    q: &QuadratureGrid,
) -> Complex64 {
    q.integrate(|y, z| {
        let h = lb.surface_field(p_true, &SurfacePoint::new(y, z));
        profile.kappa(y, z) * h * Complex64::from_polar(1.0, -profile.psi0(y, z))
    })
}

/// Focal-arc lens response, one entry per antenna.
pub fn nrlens_output(p_true: &SourcePosition, fe: &Frontend, lb: &LinkBudget) -> Result<Vec<Complex64>> {
    if fe.arch != Architecture::NrLens {
        return Err(Error::domain(format!(
            "nrlens_output called on a {} front-end",
            fe.arch
        )));
    }
    fe.response(lb, p_true)
}

/// Bare-array response with exact element phases.
pub fn nolens_output(p_true: &SourcePosition, fe: &Frontend, lb: &LinkBudget) -> Result<Vec<Complex64>> {
    if fe.arch != Architecture::NoLens {
        return Err(Error::domain(format!(
            "nolens_output called on a {} front-end",
            fe.arch
        )));
    }
    fe.response(lb, p_true)
}

/// Writes `antenna_index,magnitude,phase_rad` rows.
pub fn write_response_csv<W: Write>(out: W, s: &[Complex64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["antenna_index", "magnitude", "phase_rad"])?;
    for (n, v) in s.iter().enumerate() {
        w.write_record([n.to_string(), format!("{:e}", v.norm()), format!("{}", v.arg())])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{deg, focal_arc_layout};

    fn lb() -> LinkBudget {
        LinkBudget::from_db(23.0, -106.0, 60e9, 3e8).unwrap()
    }

    #[test]
    fn rlens_matched_gain() {
        let lb = lb();
        for (dz, ae) in [(0.10, 100.0f64), (0.20, 200.0)] {
            let ap = ApertureSpec::mm_wave(0.025, dz);
            let fe = Frontend::standard(Architecture::RLens, ap).unwrap();
            let p = SourcePosition::new(10.0, deg(12.0), 2.1).unwrap();
            let prof = fe.profile(p, p.chi);
            let s0 = fe.rlens_output(&lb, &p, &prof);
            let ratio = s0.norm() / (ae.sqrt() * lb.amplitude(10.0).unwrap());
            assert!((ratio - 1.0).abs() < 5e-3, "A_e={ae}: {ratio}");
        }
    }

    #[test]
    fn rlens_direct_and_cached_agree() {
        let lb = lb();
        let ap = ApertureSpec::mm_wave(0.025, 0.1);
        let fe = Frontend::standard(Architecture::RLens, ap).unwrap();
        let p = SourcePosition::new(4.0, 0.2, 0.5).unwrap();
        let prof = fe.profile(SourcePosition::new(5.0, 0.21, 0.0).unwrap(), 1.1);
        let fused = fe.rlens_output(&lb, &p, &prof);
        let direct = rlens_output_direct(&p, &prof, &lb, &fe.quad);
        let cached = fe.rlens_output_cached(&fe.rlens_truth(&lb, &p), &prof);
        assert!((fused - direct).norm() < 1e-9 * fused.norm());
        assert!((fused - cached).norm() < 1e-12 * fused.norm());
        for &(y, z) in &[(0.0, 0.0), (0.01, 0.03)] {
            assert!((prof.kappa(y, z).norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rlens_degenerate_constant() {
        let ap = ApertureSpec::mm_wave(0.025, 0.15);
        let q = QuadratureGrid::default_for(&ap);
        let c = Complex64::new(2.0, 1.0);
        let s = q.integrate(|_, _| c);
        assert!((s - c * ap.aperture_norm.sqrt()).norm() < 1e-12);
    }

    #[test]
    fn nolens_element_phases() {
        let lb = lb();
        let ap = ApertureSpec::mm_wave(0.025, 0.1);
        let fe = Frontend::standard(Architecture::NoLens, ap).unwrap();
        let p = SourcePosition::new(10.0, 0.0, 0.7).unwrap();
        let s = nolens_output(&p, &fe, &lb).unwrap();
        assert_eq!(s[0], lb.x0(&p));
        let a = lb.amplitude(10.0).unwrap();
        assert!(s.iter().all(|v| (v.norm() - a).abs() < 1e-15));
        // antenna n_y=0, n_z=40 is outside a 40-row grid; use the A_e=200 array
        let fe200 = Frontend::standard(Architecture::NoLens, ApertureSpec::mm_wave(0.025, 0.2)).unwrap();
        let p0 = p.with_chi(0.0);
        let s200 = nolens_output(&p0, &fe200, &lb).unwrap();
        assert_eq!(fe200.layout.positions[40], [0.0, 0.0, 0.1]);
        let rel = (s200[40] / s200[0]).arg();
        assert!((rel + 0.62830).abs() < 1e-4);
    }

    #[test]
    fn nrlens_far_field_concentrates_on_boresight() {
        let lb = lb();
        let ap = ApertureSpec::mm_wave(0.025, 0.1);
        let fe = Frontend::standard(Architecture::NrLens, ap).unwrap();
        let d_f = crate::geometry::fraunhofer_distance(0.1, ap.wavelength).unwrap();
        let s = nrlens_output(&SourcePosition::new(10.0 * d_f, 0.0, 0.0).unwrap(), &fe, &lb).unwrap();
        let total: f64 = s.iter().map(|v| v.norm_sqr()).sum();
        let mid = s.len() / 2;
        assert!(s[mid].norm_sqr() / total >= 0.8);
        for n in 1..=mid {
            let (a, b) = (s[mid - n].norm(), s[mid + n].norm());
            assert!((a - b).abs() <= 1e-2 * s[mid].norm(), "{n}: {a} {b} {}", s[mid].norm());
        }
    }

    #[test]
    fn nrlens_energy_bound() {
        let lb = lb();
        let ap = ApertureSpec::mm_wave(0.025, 0.1);
        let fe = Frontend::standard(Architecture::NrLens, ap).unwrap();
        let p = SourcePosition::new(3.0, 0.3, 0.0).unwrap();
        let s = fe.response(&lb, &p).unwrap();
        let a = lb.amplitude(3.0).unwrap();
        let e: f64 = s.iter().map(|v| v.norm_sqr()).sum::<f64>() / (a * a);
        assert!(e <= ap.aperture_norm * s.len() as f64);
    }

    #[test]
    fn global_phase_equivariance() {
        let lb = lb();
        let ap = ApertureSpec::mm_wave(0.025, 0.1);
        let p = SourcePosition::new(6.0, -0.2, 0.0).unwrap();
        let alpha = 0.9;
        for arch in [Architecture::NrLens, Architecture::NoLens] {
            let fe = Frontend::standard(arch, ap).unwrap();
            let s = fe.response(&lb, &p).unwrap();
            let t = fe.response(&lb, &p.with_chi(-alpha)).unwrap();
            for (a, b) in s.iter().zip(&t) {
                assert!((a * Complex64::from_polar(1.0, alpha) - b).norm() < 1e-12 * a.norm().max(1e-30));
            }
        }
    }

    #[test]
    fn layout_override_and_mismatch() {
        let ap = ApertureSpec::mm_wave(0.025, 0.1);
        let q = QuadratureGrid::default_for(&ap);
        let arc = focal_arc_layout(&ap, 0.1, 40).unwrap();
        let fe = Frontend::with_layout(Architecture::NrLens, ap, arc.clone(), 0.1, q.clone()).unwrap();
        assert_eq!(fe.n_antennas(), 40);
        assert!(Frontend::with_layout(Architecture::NoLens, ap, arc, 0.1, q).is_err());
        let r = Frontend::standard(Architecture::RLens, ap).unwrap();
        assert!(r.response(&lb(), &SourcePosition::new(1.0, 0.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn response_csv_schema() {
        let mut buf = Vec::new();
        write_response_csv(&mut buf, &[Complex64::new(0.0, 1.0), Complex64::new(-2.0, 0.0)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("antenna_index,magnitude,phase_rad"));
        assert_eq!(text.lines().count(), 3);
    }
}
