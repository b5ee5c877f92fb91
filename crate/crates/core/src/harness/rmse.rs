//! Localization error statistics over Monte Carlo trials.

use num_complex::Complex64;

use crate::channel::{add_noise_with, complex_normal, random_phase, stream_rng, LinkBudget};
use crate::error::Result;
use crate::estimation::{
    differential_products, rlens_response_map, rlens_scan, search_batch, ArrayTemplates, ChiMode,
    DifferentialTemplates, SearchGrid, TemplateBank,
};
use crate::frontend::Frontend;
use crate::geometry::{deg, ApertureSpec, Architecture, SourcePosition};
use crate::harness::config::ScenarioConfig;
use crate::harness::output::{frontend, GridCell};

const SWEEP_TAG: u64 = 0x5357_4545;
const MAP_TAG: u64 = 0x4d41_5050;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    /// Maximum likelihood over position and offset.
    Ml,
    /// Reconfigurable-lens energy scan.
    EnergyScan,
    /// Adjacent-element products on the bare array.
    Differential,
}

impl EstimatorKind {
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Ml => "ml",
            EstimatorKind::EnergyScan => "energy-scan",
            EstimatorKind::Differential => "differential",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmseRecord {
    pub d: f64,
    pub theta: f64,
    pub arch: Architecture,
    pub estimator: EstimatorKind,
    pub ae: f64,
    pub rmse: f64,
    pub n_mc: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialError {
    pub d: f64,
    pub theta: f64,
    pub arch: Architecture,
    pub estimator: EstimatorKind,
    pub ae: f64,
    pub trial: usize,
    pub d_hat: f64,
    pub theta_hat: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RmseTable {
    pub records: Vec<RmseRecord>,
    pub trials: Vec<TrialError>,
}

impl RmseTable {
    pub fn find(&self, arch: Architecture, estimator: EstimatorKind, ae: f64, d: f64) -> Option<&RmseRecord> {
        self.records
            .iter()
            .find(|r| r.arch == arch && r.estimator == estimator && (r.ae - ae).abs() < 1e-6 && (r.d - d).abs() < 1e-9)
    }
}

/// Euclidean distance between two positions.
pub fn position_error(a: &SourcePosition, b: &SourcePosition) -> f64 {
    let (p, q) = (a.to_cartesian(), b.to_cartesian());
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
}

/// `sqrt(mean(e²))`.
pub fn rmse(errors: &[f64]) -> f64 {
    if errors.is_empty() {
        return f64::NAN;
    }
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

/// Estimates of one truth, grouped by estimator, in trial order.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthOutcome {
    pub truth: SourcePosition,
    pub estimates: Vec<(EstimatorKind, Vec<SourcePosition>)>,
}

impl TruthOutcome {
    pub fn errors(&self, kind: EstimatorKind) -> Option<Vec<f64>> {
        self.estimates
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, est)| est.iter().map(|p| position_error(p, &self.truth)).collect())
    }
}

/// Monte Carlo driver for one architecture and aperture.
pub struct ArchRunner {
    pub fe: Frontend,
    pub lb: LinkBudget,
    pub mode: ChiMode,
    pub differential: bool,
    pub shared_noise: bool,
}

impl ArchRunner {
    pub fn new(fe: Frontend, lb: LinkBudget, mode: ChiMode, differential: bool, shared_noise: bool) -> Self {
        Self {
            fe,
            lb,
            mode,
            differential,
            shared_noise,
        }
    }

    pub fn from_config(cfg: &ScenarioConfig, arch: Architecture, ap: ApertureSpec) -> Result<Self> {
        Ok(Self::new(
            frontend(cfg, arch, ap)?,
            cfg.link_budget()?,
            cfg.chi_mode()?,
            cfg.differential,
            cfg.rlens_shared_noise()?,
        ))
    }

    pub fn arch(&self) -> Architecture {
        self.fe.arch
    }

    /// Runs `n_mc` trials for every truth. Trial `t` of truth `i` draws its
    /// phase offset and noise from the stream `tags ++ [i, t]`.
    pub fn run(
        &self,
        grid: &SearchGrid,
        truths: &[SourcePosition],
        n_mc: usize,
        seed: u64,
        tags: &[u64],
    ) -> Result<Vec<TruthOutcome>> {
        match self.fe.arch {
            Architecture::RLens => truths
                .iter()
                .enumerate()
                .map(|(i, t)| self.run_rlens(grid, t, n_mc, seed, &with_tags(tags, &[i as u64])))
                .collect(),
            _ => self.run_arrays(grid, truths, n_mc, seed, tags),
        }
    }

    fn run_arrays(
        &self,
        grid: &SearchGrid,
        truths: &[SourcePosition],
        n_mc: usize,
        seed: u64,
        tags: &[u64],
    ) -> Result<Vec<TruthOutcome>> {
        let model = ArrayTemplates::new(&self.fe, self.lb)?;
        let bank = TemplateBank::build(&model, grid.clone());
        let diff_model = if self.differential && self.fe.arch == Architecture::NoLens {
            Some(DifferentialTemplates::new(&self.fe, self.lb)?)
        } else {
            None
        };
        let diff_bank = diff_model.as_ref().map(|m| TemplateBank::build(m, grid.clone()));
        let sigma2 = self.lb.noise_power;
        let mut out = Vec::with_capacity(truths.len());
        for (i, truth) in truths.iter().enumerate() {
            let snaps: Vec<Vec<Complex64>> = (0..n_mc)
                .map(|t| {
                    let mut rng = stream_rng(seed, &with_tags(tags, &[i as u64, t as u64]));
                    let chi = random_phase(&mut rng);
                    let s = self.fe.response(&self.lb, &truth.with_chi(chi))?;
                    Ok(add_noise_with(&s, sigma2, &mut rng))
                })
                .collect::<Result<_>>()?;
            let refs: Vec<&[Complex64]> = snaps.iter().map(|s| s.as_slice()).collect();
            let mut estimates = vec![(
                EstimatorKind::Ml,
                search_batch(&bank, &refs, self.mode)?
                    .into_iter()
                    .map(|e| e.p_hat)
                    .collect(),
            )];
            if let Some(db) = &diff_bank {
                let rd: Vec<Vec<Complex64>> = snaps.iter().map(|s| differential_products(s)).collect();
                let refs: Vec<&[Complex64]> = rd.iter().map(|s| s.as_slice()).collect();
                estimates.push((
                    EstimatorKind::Differential,
                    search_batch(db, &refs, ChiMode::Coherent)?
                        .into_iter()
                        .map(|e| e.p_hat)
                        .collect(),
                ));
            }
            out.push(TruthOutcome {
                truth: truth.with_chi(0.0),
                estimates,
            });
        }
        Ok(out)
    }

    fn run_rlens(
        &self,
        grid: &SearchGrid,
        truth: &SourcePosition,
        n_mc: usize,
        seed: u64,
        tags: &[u64],
    ) -> Result<TruthOutcome> {
        let truth = truth.with_chi(0.0);
        let map = rlens_response_map(&self.fe, &self.lb, &truth, grid);
        let sigma2 = self.lb.noise_power;
        let mut est = Vec::with_capacity(n_mc);
        for t in 0..n_mc {
            let mut rng = stream_rng(seed, &with_tags(tags, &[t as u64]));
            let rot = Complex64::from_polar(1.0, -random_phase(&mut rng));
            let noise: Vec<Complex64> = if sigma2 == 0.0 {
                Vec::new()
            } else if self.shared_noise {
                vec![complex_normal(&mut rng, sigma2)]
            } else {
                (0..grid.len()).map(|_| complex_normal(&mut rng, sigma2)).collect()
            };
            let e = rlens_scan(grid, |i, _| {
                let w = match noise.len() {
                    0 => Complex64::new(0.0, 0.0),
                    1 => noise[0],
                    _ => noise[i],
                };
                map[i] * rot + w
            })?;
            est.push(e.p_hat.with_chi(0.0));
        }
        Ok(TruthOutcome {
            truth,
            estimates: vec![(EstimatorKind::EnergyScan, est)],
        })
    }
}

fn with_tags(prefix: &[u64], extra: &[u64]) -> Vec<u64> {
    prefix.iter().chain(extra).copied().collect()
}

fn arch_tag(arch: Architecture) -> u64 {
    match arch {
        Architecture::RLens => 1,
        Architecture::NrLens => 2,
        Architecture::NoLens => 3,
    }
}

/// RMSE against distance at a fixed angle for every architecture and
/// aperture. Seeds depend on the architecture, distance and trial but not on
/// the aperture, so apertures are compared on paired draws.
pub fn run_rmse_sweep(cfg: &ScenarioConfig) -> Result<RmseTable> {
    cfg.validate()?;
    let grid = cfg.search_grid()?;
    let theta = deg(cfg.sweep_theta_deg);
    let truths: Vec<SourcePosition> = cfg
        .sweep_distances_m
        .iter()
        .map(|&d| SourcePosition::new(d, theta, 0.0))
        .collect::<Result<_>>()?;
    let mut table = RmseTable::default();
    for ap in cfg.apertures()? {
        for &arch in &cfg.architectures {
            let runner = ArchRunner::from_config(cfg, arch, ap)?;
            let outcomes = runner.run(&grid, &truths, cfg.n_mc, cfg.seed, &[SWEEP_TAG, arch_tag(arch)])?;
            for o in outcomes {
                for (kind, est) in &o.estimates {
                    let errors: Vec<f64> = est.iter().map(|p| position_error(p, &o.truth)).collect();
                    for (trial, (p, e)) in est.iter().zip(&errors).enumerate() {
                        table.trials.push(TrialError {
                            d: o.truth.d,
                            theta: o.truth.theta,
                            arch,
                            estimator: *kind,
                            ae: ap.aperture_norm,
                            trial,
                            d_hat: p.d,
                            theta_hat: p.theta,
                            error: *e,
                        });
                    }
                    table.records.push(RmseRecord {
                        d: o.truth.d,
                        theta: o.truth.theta,
                        arch,
                        estimator: *kind,
                        ae: ap.aperture_norm,
                        rmse: rmse(&errors),
                        n_mc: cfg.n_mc,
                        seed: cfg.seed,
                    });
                }
            }
        }
    }
    Ok(table)
}

/// RMSE map of one estimator on one aperture.
#[derive(Debug, Clone, PartialEq)]
pub struct RmseMap {
    pub arch: Architecture,
    pub estimator: EstimatorKind,
    /// File label: the architecture, suffixed for the differential estimator.
    pub label: String,
    pub aperture: ApertureSpec,
    pub cells: Vec<GridCell>,
}

/// RMSE for a source placed at every map cell. The search is restricted to
/// the configured grid axes within a window around each cell; cells at the
/// receiver, behind it or outside the grid axes are `NaN`.
pub fn run_rmse_map(cfg: &ScenarioConfig) -> Result<Vec<RmseMap>> {
    cfg.validate()?;
    let axes = cfg.search_grid()?;
    let pose = cfg.receiver();
    let points = cfg.room().grid(cfg.map_step_m);
    let mut maps = Vec::new();
    for ap in cfg.apertures()? {
        for &arch in &cfg.architectures {
            let runner = ArchRunner::from_config(cfg, arch, ap)?;
            let mut per_kind: Vec<(EstimatorKind, Vec<GridCell>)> = Vec::new();
            for (ci, &(x, y)) in points.iter().enumerate() {
                let truth = pose.to_source(x, y, 0.0);
                let window = truth.and_then(|t| {
                    axes.window(t.d, t.theta, cfg.map_window_d_m, deg(cfg.map_window_theta_deg))
                        .ok()
                });
                let results: Vec<(EstimatorKind, f64)> = match (truth, window) {
                    (Some(t), Some(g)) => {
                        let o = runner
                            .run(&g, &[t], cfg.n_mc, cfg.seed, &[MAP_TAG, arch_tag(arch), ci as u64])?
                            .remove(0);
                        o.estimates
                            .iter()
                            .map(|(k, _)| (*k, rmse(&o.errors(*k).unwrap_or_default())))
                            .collect()
                    }
                    _ => expected_kinds(&runner).into_iter().map(|k| (k, f64::NAN)).collect(),
                };
                for (kind, value) in results {
                    let slot = match per_kind.iter().position(|(k, _)| *k == kind) {
                        Some(i) => i,
                        None => {
                            per_kind.push((kind, Vec::new()));
                            per_kind.len() - 1
                        }
                    };
                    per_kind[slot].1.push(GridCell { x, y, value });
                }
            }
            for (kind, cells) in per_kind {
                let label = match kind {
                    EstimatorKind::Differential => format!("{}-differential", arch.label()),
                    _ => arch.label().to_string(),
                };
                maps.push(RmseMap {
                    arch,
                    estimator: kind,
                    label,
                    aperture: ap,
                    cells,
                });
            }
        }
    }
    Ok(maps)
}

fn expected_kinds(runner: &ArchRunner) -> Vec<EstimatorKind> {
    match runner.arch() {
        Architecture::RLens => vec![EstimatorKind::EnergyScan],
        Architecture::NrLens => vec![EstimatorKind::Ml],
        Architecture::NoLens if runner.differential => vec![EstimatorKind::Ml, EstimatorKind::Differential],
        Architecture::NoLens => vec![EstimatorKind::Ml],
    }
}
