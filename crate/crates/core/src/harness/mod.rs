//! Experiment orchestration: configuration, Monte Carlo execution and CSV
//! output.
//!
//! Randomness is derived from `(seed, experiment, case, trial)` through
//! [`stream_rng`](crate::channel::stream_rng), and every parallel stage
//! collects its results in input order, so output files depend only on the
//! configuration and never on the number of workers.

pub mod config;
pub mod output;
pub mod rmse;
pub mod sir;

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::geometry::{fraunhofer_distance, Architecture};

pub use config::ScenarioConfig;
pub use rmse::{run_rmse_map, run_rmse_sweep, EstimatorKind, RmseRecord, RmseTable, TrialError};
pub use sir::{run_sir_experiments, SirExperiment};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "WAVEFRONT_THREADS";

/// Worker count from [`THREADS_ENV`], defaulting to the available cores.
pub fn worker_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::config(
                THREADS_ENV,
                format!("expected a positive integer, got `{v}`"),
            )),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn run_in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Experiments reachable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Fraunhofer,
    RmseSweep,
    RmseMap,
    SirSweep,
    SirMap,
    CoveragePpp,
    DumpResponse,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fraunhofer => "fraunhofer",
            Experiment::RmseSweep => "rmse-sweep",
            Experiment::RmseMap => "rmse-map",
            Experiment::SirSweep => "sir-sweep",
            Experiment::SirMap => "sir-map",
            Experiment::CoveragePpp => "coverage-ppp",
            Experiment::DumpResponse => "dump-response",
        }
    }
}

/// One row of the Fraunhofer table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FraunhoferRow {
    pub f0_hz: f64,
    pub diameter_m: f64,
    pub d_f_m: f64,
}

pub fn fraunhofer_table(cfg: &ScenarioConfig) -> Result<Vec<FraunhoferRow>> {
    let mut rows = Vec::new();
    for &f in &cfg.fraunhofer_f0_ghz {
        let f0_hz = f * 1e9;
        for &diameter_m in &cfg.fraunhofer_diameters_m {
            rows.push(FraunhoferRow {
                f0_hz,
                diameter_m,
                d_f_m: fraunhofer_distance(diameter_m, cfg.c_m_per_s / f0_hz)?,
            });
        }
    }
    Ok(rows)
}

/// Runs an experiment and writes its CSV files into `cfg.output_dir`.
/// Returns the written paths in creation order.
pub fn run_experiment(cfg: &ScenarioConfig, exp: Experiment) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|source| Error::Write {
        path: dir.clone(),
        source,
    })?;
    let threads = worker_count()?;
    run_in_pool(threads, || run_inner(cfg, exp))?
}

fn run_inner(cfg: &ScenarioConfig, exp: Experiment) -> Result<Vec<PathBuf>> {
    let dir = &cfg.output_dir;
    let mut written = Vec::new();
    match exp {
        Experiment::Fraunhofer => {
            let path = dir.join("fraunhofer.csv");
            output::write_fraunhofer(&path, &fraunhofer_table(cfg)?)?;
            written.push(path);
        }
        Experiment::RmseSweep => {
            let table = run_rmse_sweep(cfg)?;
            written.extend(output::write_rmse_sweep(dir, exp.name(), cfg, &table)?);
        }
        Experiment::RmseMap => {
            for map in run_rmse_map(cfg)? {
                let path = dir.join(format!(
                    "{}.csv",
                    output::file_stem(exp.name(), &map.label, &map.aperture)
                ));
                output::write_grid(&path, &map.cells)?;
                written.push(path);
            }
        }
        Experiment::SirSweep | Experiment::SirMap | Experiment::CoveragePpp => {
            let which = match exp {
                Experiment::SirSweep => SirExperiment::Sweep,
                Experiment::SirMap => SirExperiment::Map,
                _ => SirExperiment::CoveragePpp,
            };
            for out in run_sir_experiments(cfg, which)? {
                let path = dir.join(format!(
                    "{}.csv",
                    output::file_stem(out.experiment, out.arch.label(), &out.aperture)
                ));
                match &out.data {
                    sir::SirData::Grid(cells) => output::write_grid(&path, cells)?,
                    sir::SirData::Sweep(rows) => output::write_sir_sweep(&path, out.arch, &out.aperture, rows)?,
                }
                written.push(path);
            }
        }
        Experiment::DumpResponse => {
            written.extend(dump_responses(cfg)?);
        }
    }
    Ok(written)
}

fn dump_responses(cfg: &ScenarioConfig) -> Result<Vec<PathBuf>> {
    use crate::frontend::{write_response_csv, Frontend};
    use crate::geometry::{deg, SourcePosition};

    let lb = cfg.link_budget()?;
    let p = SourcePosition::new(cfg.dump_d_m, deg(cfg.dump_theta_deg), 0.0)?;
    let mut written = Vec::new();
    for ap in cfg.apertures()? {
        for &arch in &cfg.architectures {
            let fe = output::frontend(cfg, arch, ap)?;
            let s = match arch {
                Architecture::RLens => vec![fe.rlens_output(&lb, &p, &fe.profile(p, p.chi))],
                _ => Frontend::response(&fe, &lb, &p)?,
            };
            let path = cfg
                .output_dir
                .join(format!("{}.csv", output::file_stem("dump-response", arch.label(), &ap)));
            let file = std::fs::File::create(&path).map_err(|source| Error::Write {
                path: path.clone(),
                source,
            })?;
            write_response_csv(std::io::BufWriter::new(file), &s)?;
            written.push(path);
        }
    }
    Ok(written)
}
