//! Interference experiments: single-interferer maps and distance sweeps,
//! closed-form comparisons and PPP coverage maps.

use rayon::prelude::*;

use crate::channel::{random_phase, stream_rng};
use crate::error::Result;
use crate::estimation::linspace_step;
use crate::frontend::Frontend;
use crate::geometry::{ApertureSpec, Architecture, SourcePosition};
use crate::harness::config::ScenarioConfig;
use crate::harness::output::{frontend, GridCell};
use crate::interference::{ppp_coverage, sir_nolens_fresnel, sir_rlens_sinc, MatchedCombiner};

const SIR_MAP_TAG: u64 = 0x5349_524d;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SirExperiment {
    Sweep,
    Map,
    CoveragePpp,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SirData {
    Grid(Vec<GridCell>),
    /// `(Δd, sir_db)` rows.
    Sweep(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SirOutput {
    pub experiment: &'static str,
    pub arch: Architecture,
    pub aperture: ApertureSpec,
    pub data: SirData,
}

/// SIR in dB with the useful source at the configured room point and one
/// interferer at each room cell. Cells the receiver cannot see are `NaN`.
pub fn sir_map(cfg: &ScenarioConfig, fe: &Frontend) -> Result<Vec<GridCell>> {
    let pose = cfg.receiver();
    let useful = pose
        .to_source(cfg.useful_x_m, cfg.useful_y_m, 0.0)
        .ok_or_else(|| crate::error::Error::config("useful_x_m", "useful source is not in front of the receiver"))?;
    let comb = MatchedCombiner::new(fe, useful);
    let cells = cfg.room().grid(cfg.room_step_m);
    Ok(cells
        .par_iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            let chi = if cfg.worst_case_phase {
                useful.chi
            } else {
                random_phase(&mut stream_rng(cfg.seed, &[SIR_MAP_TAG, i as u64]))
            };
            let value = match pose.to_source(x, y, chi) {
                Some(p) => comb.sir(&[p]).sir_db,
                None => f64::NAN,
            };
            GridCell { x, y, value }
        })
        .collect())
}

fn sweep_offsets(cfg: &ScenarioConfig) -> Result<Vec<f64>> {
    linspace_step(
        "sir_sweep_delta_step_m",
        cfg.sir_sweep_delta_min_m,
        cfg.sir_sweep_delta_max_m,
        cfg.sir_sweep_delta_step_m,
    )
}

/// Exact SIR at boresight with the interferer `Δd` behind (or in front of)
/// the useful source, both in phase.
pub fn sir_sweep(cfg: &ScenarioConfig, fe: &Frontend) -> Result<Vec<(f64, f64)>> {
    let d = cfg.sir_sweep_d_m;
    let useful = SourcePosition::new(d, 0.0, 0.0)?;
    let comb = MatchedCombiner::new(fe, useful);
    sweep_offsets(cfg)?
        .into_par_iter()
        .map(|dd| Ok((dd, comb.sir(&[SourcePosition::new(d + dd, 0.0, 0.0)?]).sir_db)))
        .collect()
}

/// Closed-form counterpart of [`sir_sweep`] where one exists (R-lens and
/// no-lens).
pub fn closed_form_sweep(cfg: &ScenarioConfig, fe: &Frontend) -> Result<Option<Vec<(f64, f64)>>> {
    let d = cfg.sir_sweep_d_m;
    let offsets = sweep_offsets(cfg)?;
    let rows = match fe.arch {
        Architecture::RLens => offsets
            .iter()
            .map(|&dd| Ok((dd, sir_rlens_sinc(d, dd, &fe.aperture)?.sir_db)))
            .collect::<Result<Vec<_>>>()?,
        Architecture::NoLens => offsets
            .iter()
            .map(|&dd| {
                Ok((
                    dd,
                    sir_nolens_fresnel(d, dd, &fe.layout, fe.aperture.wavelength)?.sir_db,
                ))
            })
            .collect::<Result<Vec<_>>>()?,
        Architecture::NrLens => return Ok(None),
    };
    Ok(Some(rows))
}

/// Coverage rate with PPP interferers for a useful source at each room cell.
pub fn coverage_map(cfg: &ScenarioConfig, fe: &Frontend) -> Result<Vec<GridCell>> {
    let cells = cfg.room().grid(cfg.room_step_m);
    let cov = ppp_coverage(&cells, &cfg.receiver(), &cfg.ppp_model()?, fe, cfg.ppp_n_mc, cfg.seed);
    Ok(cells
        .iter()
        .zip(cov)
        .map(|(&(x, y), value)| GridCell { x, y, value })
        .collect())
}

pub fn run_sir_experiments(cfg: &ScenarioConfig, which: SirExperiment) -> Result<Vec<SirOutput>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for ap in cfg.apertures()? {
        for &arch in &cfg.architectures {
            let fe = frontend(cfg, arch, ap)?;
            match which {
                SirExperiment::Map => out.push(SirOutput {
                    experiment: "sir-map",
                    arch,
                    aperture: ap,
                    data: SirData::Grid(sir_map(cfg, &fe)?),
                }),
                SirExperiment::CoveragePpp => out.push(SirOutput {
                    experiment: "coverage-ppp",
                    arch,
                    aperture: ap,
                    data: SirData::Grid(coverage_map(cfg, &fe)?),
                }),
                SirExperiment::Sweep => {
                    out.push(SirOutput {
                        experiment: "sir-sweep",
                        arch,
                        aperture: ap,
                        data: SirData::Sweep(sir_sweep(cfg, &fe)?),
                    });
                    if let Some(rows) = closed_form_sweep(cfg, &fe)? {
                        out.push(SirOutput {
                            experiment: "sir-closed-form",
                            arch,
                            aperture: ap,
                            data: SirData::Sweep(rows),
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}
