//! Experiment configuration.
//!
//! Flat TOML keys carry their unit in the name (`eirp_dbm`, `f0_ghz`, ...).
//! Unknown keys are rejected and every missing key takes the default below.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::LinkBudget;
use crate::error::{Error, Result};
use crate::estimation::{ChiMode, SearchGrid};
use crate::geometry::{deg, ApertureSpec, Architecture};
use crate::interference::{IntensityMode, PppModel, ReceiverPose, Room};
use crate::quadrature::QuadratureGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub f0_ghz: f64,
    pub c_m_per_s: f64,
    pub eirp_dbm: f64,
    pub noise_dbw: f64,
    /// `false` runs noiseless trials.
    pub noise_enabled: bool,
    /// `[D_y, D_z]` pairs in metres.
    pub apertures_m: Vec<[f64; 2]>,
    /// Focal length; `0` selects `F_p = D_z`.
    pub focal_len_m: f64,
    /// Focal-arc antenna count; `0` keeps the symmetric placement.
    pub nr_lens_antennas: usize,
    pub architectures: Vec<Architecture>,
    /// `analytic`, `exhaustive` or `normalized`.
    pub chi_mode: String,
    pub n_chi: usize,
    /// Also run the differential estimator on the no-lens snapshots.
    pub differential: bool,
    /// `fresh` draws new noise for every lens state, `shared` reuses one draw.
    pub rlens_noise: String,
    pub quadrature_step_lambda: f64,
    pub quadrature_order: usize,

    pub grid_d_min_m: f64,
    pub grid_d_max_m: f64,
    pub grid_d_step_m: f64,
    pub grid_theta_min_deg: f64,
    pub grid_theta_max_deg: f64,
    pub grid_theta_step_deg: f64,

    pub sweep_distances_m: Vec<f64>,
    pub sweep_theta_deg: f64,

    pub room_x_m: f64,
    pub room_y_m: f64,
    pub room_step_m: f64,
    pub rx_x_m: f64,
    pub rx_y_m: f64,
    pub rx_boresight_deg: f64,
    pub map_step_m: f64,
    pub map_window_d_m: f64,
    pub map_window_theta_deg: f64,

    pub useful_x_m: f64,
    pub useful_y_m: f64,
    pub worst_case_phase: bool,
    pub sir_sweep_d_m: f64,
    pub sir_sweep_delta_min_m: f64,
    pub sir_sweep_delta_max_m: f64,
    pub sir_sweep_delta_step_m: f64,
    pub threshold_db: f64,
    pub ppp_intensity: f64,
    /// `per-realization` or `per-m2`.
    pub ppp_intensity_mode: String,
    pub ppp_min_distance_m: f64,
    pub ppp_n_mc: usize,

    pub dump_d_m: f64,
    pub dump_theta_deg: f64,

    pub fraunhofer_f0_ghz: Vec<f64>,
    pub fraunhofer_diameters_m: Vec<f64>,

    pub n_mc: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            f0_ghz: 60.0,
            c_m_per_s: 3.0e8,
            eirp_dbm: 23.0,
            noise_dbw: -106.0,
            noise_enabled: true,
            apertures_m: vec![[0.025, 0.10], [0.025, 0.15], [0.025, 0.20]],
            focal_len_m: 0.0,
            nr_lens_antennas: 0,
            architectures: Architecture::ALL.to_vec(),
            chi_mode: "analytic".into(),
            n_chi: 64,
            differential: true,
            rlens_noise: "fresh".into(),
            quadrature_step_lambda: 0.25,
            quadrature_order: 3,
            grid_d_min_m: 1.0,
            grid_d_max_m: 50.0,
            grid_d_step_m: 0.25,
            grid_theta_min_deg: -60.0,
            grid_theta_max_deg: 60.0,
            grid_theta_step_deg: 0.5,
            sweep_distances_m: vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            sweep_theta_deg: 0.0,
            room_x_m: 40.0,
            room_y_m: 40.0,
            room_step_m: 1.0,
            rx_x_m: 0.0,
            rx_y_m: 0.0,
            rx_boresight_deg: 45.0,
            map_step_m: 5.0,
            map_window_d_m: 2.0,
            map_window_theta_deg: 5.0,
            useful_x_m: 15.0,
            useful_y_m: 15.0,
            worst_case_phase: true,
            sir_sweep_d_m: 20.0,
            sir_sweep_delta_min_m: -19.0,
            sir_sweep_delta_max_m: 20.0,
            sir_sweep_delta_step_m: 0.5,
            threshold_db: 10.0,
            ppp_intensity: 5.0,
            ppp_intensity_mode: "per-realization".into(),
            ppp_min_distance_m: 0.5,
            ppp_n_mc: 100,
            dump_d_m: 10.0,
            dump_theta_deg: 0.0,
            fraunhofer_f0_ghz: vec![5.0, 10.0, 28.0, 60.0, 100.0, 300.0],
            fraunhofer_diameters_m: vec![0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.75, 1.0],
            n_mc: 100,
            seed: 1,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be positive, got {v}")))
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be finite, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let field = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.contains("unknown field"))
                .unwrap_or("<document>")
                .to_string();
            Error::config(field, e.to_string().trim().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Canonical text: every key, in declaration order.
    pub fn to_canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        positive("f0_ghz", self.f0_ghz)?;
        positive("c_m_per_s", self.c_m_per_s)?;
        finite("eirp_dbm", self.eirp_dbm)?;
        finite("noise_dbw", self.noise_dbw)?;
        if self.apertures_m.is_empty() {
            return Err(Error::config("apertures_m", "at least one aperture is required"));
        }
        for [dy, dz] in &self.apertures_m {
            positive("apertures_m", *dy)?;
            positive("apertures_m", *dz)?;
        }
        if !(self.focal_len_m >= 0.0) || !self.focal_len_m.is_finite() {
            return Err(Error::config("focal_len_m", "must be zero (default) or positive"));
        }
        if self.architectures.is_empty() {
            return Err(Error::config("architectures", "at least one architecture is required"));
        }
        self.chi_mode()?;
        if self.n_chi == 0 {
            return Err(Error::config("n_chi", "must be at least 1"));
        }
        self.rlens_shared_noise()?;
        positive("quadrature_step_lambda", self.quadrature_step_lambda)?;
        if self.quadrature_order == 0 || self.quadrature_order > 16 {
            return Err(Error::config("quadrature_order", "must be in 1..=16"));
        }
        positive("grid_d_min_m", self.grid_d_min_m)?;
        positive("grid_d_step_m", self.grid_d_step_m)?;
        positive("grid_theta_step_deg", self.grid_theta_step_deg)?;
        if self.grid_d_max_m < self.grid_d_min_m {
            return Err(Error::config("grid_d_max_m", "must not be below grid_d_min_m"));
        }
        if self.grid_theta_max_deg < self.grid_theta_min_deg {
            return Err(Error::config(
                "grid_theta_max_deg",
                "must not be below grid_theta_min_deg",
            ));
        }
        if self.grid_theta_min_deg <= -90.0 || self.grid_theta_max_deg >= 90.0 {
            return Err(Error::config(
                "grid_theta_min_deg",
                "angles must lie strictly within ±90°",
            ));
        }
        for &d in &self.sweep_distances_m {
            positive("sweep_distances_m", d)?;
        }
        finite("sweep_theta_deg", self.sweep_theta_deg)?;
        positive("room_x_m", self.room_x_m)?;
        positive("room_y_m", self.room_y_m)?;
        positive("room_step_m", self.room_step_m)?;
        positive("map_step_m", self.map_step_m)?;
        positive("map_window_d_m", self.map_window_d_m)?;
        positive("map_window_theta_deg", self.map_window_theta_deg)?;
        for (f, v) in [
            ("rx_x_m", self.rx_x_m),
            ("rx_y_m", self.rx_y_m),
            ("rx_boresight_deg", self.rx_boresight_deg),
            ("useful_x_m", self.useful_x_m),
            ("useful_y_m", self.useful_y_m),
            ("threshold_db", self.threshold_db),
            ("sir_sweep_delta_min_m", self.sir_sweep_delta_min_m),
            ("sir_sweep_delta_max_m", self.sir_sweep_delta_max_m),
            ("dump_theta_deg", self.dump_theta_deg),
        ] {
            finite(f, v)?;
        }
        positive("sir_sweep_d_m", self.sir_sweep_d_m)?;
        positive("sir_sweep_delta_step_m", self.sir_sweep_delta_step_m)?;
        if self.sir_sweep_d_m + self.sir_sweep_delta_min_m <= 0.0 {
            return Err(Error::config(
                "sir_sweep_delta_min_m",
                "interferer would sit at or behind the receiver (d + Δd <= 0)",
            ));
        }
        if self.sir_sweep_delta_max_m < self.sir_sweep_delta_min_m {
            return Err(Error::config(
                "sir_sweep_delta_max_m",
                "must not be below sir_sweep_delta_min_m",
            ));
        }
        if !(self.ppp_intensity >= 0.0) || !self.ppp_intensity.is_finite() {
            return Err(Error::config("ppp_intensity", "must be non-negative"));
        }
        self.intensity_mode()?;
        if !(self.ppp_min_distance_m >= 0.0) {
            return Err(Error::config("ppp_min_distance_m", "must be non-negative"));
        }
        positive("dump_d_m", self.dump_d_m)?;
        for &f in &self.fraunhofer_f0_ghz {
            positive("fraunhofer_f0_ghz", f)?;
        }
        for &d in &self.fraunhofer_diameters_m {
            positive("fraunhofer_diameters_m", d)?;
        }
        if self.n_mc == 0 {
            return Err(Error::config("n_mc", "must be at least 1"));
        }
        Ok(())
    }

    pub fn f0_hz(&self) -> f64 {
        self.f0_ghz * 1e9
    }

    pub fn wavelength(&self) -> f64 {
        self.c_m_per_s / self.f0_hz()
    }

    pub fn link_budget(&self) -> Result<LinkBudget> {
        let noise = if self.noise_enabled {
            self.noise_dbw
        } else {
            f64::NEG_INFINITY
        };
        LinkBudget::from_db(self.eirp_dbm, noise, self.f0_hz(), self.c_m_per_s)
    }

    pub fn apertures(&self) -> Result<Vec<ApertureSpec>> {
        self.apertures_m
            .iter()
            .map(|&[dy, dz]| ApertureSpec::new(dy, dz, self.f0_hz(), self.c_m_per_s))
            .collect()
    }

    pub fn focal_len(&self, ap: &ApertureSpec) -> f64 {
        if self.focal_len_m > 0.0 {
            self.focal_len_m
        } else {
            ap.d_z
        }
    }

    pub fn quadrature(&self, ap: &ApertureSpec) -> Result<QuadratureGrid> {
        QuadratureGrid::new(ap, self.quadrature_step_lambda, self.quadrature_order)
    }

    pub fn chi_mode(&self) -> Result<ChiMode> {
        match self.chi_mode.as_str() {
            "analytic" => Ok(ChiMode::Analytic),
            "exhaustive" => Ok(ChiMode::Exhaustive(self.n_chi)),
            "normalized" => Ok(ChiMode::Normalized),
            other => Err(Error::config(
                "chi_mode",
                format!("unknown mode `{other}` (expected analytic, exhaustive or normalized)"),
            )),
        }
    }

    pub fn rlens_shared_noise(&self) -> Result<bool> {
        match self.rlens_noise.as_str() {
            "fresh" => Ok(false),
            "shared" => Ok(true),
            other => Err(Error::config(
                "rlens_noise",
                format!("unknown mode `{other}` (expected fresh or shared)"),
            )),
        }
    }

    pub fn intensity_mode(&self) -> Result<IntensityMode> {
        match self.ppp_intensity_mode.as_str() {
            "per-realization" => Ok(IntensityMode::PerRealization),
            "per-m2" => Ok(IntensityMode::PerSquareMetre),
            other => Err(Error::config(
                "ppp_intensity_mode",
                format!("unknown mode `{other}` (expected per-realization or per-m2)"),
            )),
        }
    }

    pub fn search_grid(&self) -> Result<SearchGrid> {
        SearchGrid::uniform(
            (self.grid_d_min_m, self.grid_d_max_m, self.grid_d_step_m),
            (
                deg(self.grid_theta_min_deg),
                deg(self.grid_theta_max_deg),
                deg(self.grid_theta_step_deg),
            ),
        )
    }

    pub fn room(&self) -> Room {
        Room {
            x_min: 0.0,
            x_max: self.room_x_m,
            y_min: 0.0,
            y_max: self.room_y_m,
        }
    }

    pub fn receiver(&self) -> ReceiverPose {
        ReceiverPose {
            x: self.rx_x_m,
            y: self.rx_y_m,
            boresight: deg(self.rx_boresight_deg),
        }
    }

    pub fn ppp_model(&self) -> Result<PppModel> {
        Ok(PppModel {
            intensity: self.ppp_intensity,
            mode: self.intensity_mode()?,
            room: self.room(),
            threshold_db: self.threshold_db,
            min_distance: self.ppp_min_distance_m,
        })
    }
}
