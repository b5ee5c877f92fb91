//! CSV emission. Every file starts with a header row naming its columns.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::frontend::Frontend;
use crate::geometry::{focal_arc_layout, ApertureSpec, Architecture};
use crate::harness::config::ScenarioConfig;
use crate::harness::rmse::RmseTable;
use crate::harness::FraunhoferRow;

/// Value attached to a room point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

/// `<exp>_<arch>_ae<value>`.
pub fn file_stem(exp: &str, arch: &str, ap: &ApertureSpec) -> String {
    format!("{exp}_{arch}_ae{}", ap.ae_label())
}

/// Front-end for an architecture under the configured focal length,
/// focal-arc count and quadrature.
pub fn frontend(cfg: &ScenarioConfig, arch: Architecture, ap: ApertureSpec) -> Result<Frontend> {
    let focal = cfg.focal_len(&ap);
    let quad = cfg.quadrature(&ap)?;
    if arch == Architecture::NrLens && cfg.nr_lens_antennas > 0 {
        let layout = focal_arc_layout(&ap, focal, cfg.nr_lens_antennas)
            .map_err(|e| Error::config("nr_lens_antennas", e.to_string()))?;
        return Frontend::with_layout(arch, ap, layout, focal, quad);
    }
    Frontend::new(arch, ap, focal, quad)
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<()> {
    w.flush().map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_fraunhofer(path: &Path, rows: &[FraunhoferRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["f0_hz", "diameter_m", "d_f_m"])?;
    for r in rows {
        w.write_record([r.f0_hz.to_string(), r.diameter_m.to_string(), r.d_f_m.to_string()])?;
    }
    finish(w, path)
}

pub fn write_grid(path: &Path, cells: &[GridCell]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["x_m", "y_m", "value"])?;
    for c in cells {
        w.write_record([c.x.to_string(), c.y.to_string(), c.value.to_string()])?;
    }
    finish(w, path)
}

pub fn write_sir_sweep(path: &Path, arch: Architecture, ap: &ApertureSpec, rows: &[(f64, f64)]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["delta_d_m", "arch", "a_e", "sir_db"])?;
    for (dd, sir) in rows {
        w.write_record([dd.to_string(), arch.label().to_string(), ap.ae_label(), sir.to_string()])?;
    }
    finish(w, path)
}

/// Writes the RMSE records and the per-trial error logs, one pair of files
/// per `(architecture, aperture)`.
pub fn write_rmse_sweep(dir: &Path, exp: &str, cfg: &ScenarioConfig, table: &RmseTable) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for ap in cfg.apertures()? {
        for &arch in &cfg.architectures {
            let stem = file_stem(exp, arch.label(), &ap);
            let same = |a: Architecture, ae: f64| a == arch && (ae - ap.aperture_norm).abs() < 1e-9;

            let path = dir.join(format!("{stem}.csv"));
            let mut w = writer(&path)?;
            w.write_record(["d_m", "theta_rad", "arch", "estimator", "a_e", "rmse_m", "n_mc", "seed"])?;
            for r in table.records.iter().filter(|r| same(r.arch, r.ae)) {
                w.write_record([
                    r.d.to_string(),
                    r.theta.to_string(),
                    r.arch.label().to_string(),
                    r.estimator.label().to_string(),
                    ap.ae_label(),
                    r.rmse.to_string(),
                    r.n_mc.to_string(),
                    r.seed.to_string(),
                ])?;
            }
            finish(w, &path)?;
            written.push(path);

            let path = dir.join(format!("{stem}_trials.csv"));
            let mut w = writer(&path)?;
            w.write_record([
                "d_m",
                "theta_rad",
                "arch",
                "estimator",
                "a_e",
                "trial",
                "d_hat_m",
                "theta_hat_rad",
                "error_m",
            ])?;
            for t in table.trials.iter().filter(|t| same(t.arch, t.ae)) {
                w.write_record([
                    t.d.to_string(),
                    t.theta.to_string(),
                    t.arch.label().to_string(),
                    t.estimator.label().to_string(),
                    ap.ae_label(),
                    t.trial.to_string(),
                    t.d_hat.to_string(),
                    t.theta_hat.to_string(),
                    t.error.to_string(),
                ])?;
            }
            finish(w, &path)?;
            written.push(path);
        }
    }
    Ok(written)
}
