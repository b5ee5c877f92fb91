//! Grid-search position estimators.
//!
//! * [`ml_estimate`]: maximum likelihood over position with the unknown
//!   common phase eliminated analytically or searched exhaustively.
//! * [`rlens_scan`]: energy scan over the reconfigurable-lens states.
//! * [`differential_estimate`]: phase-free search on products of adjacent
//!   array elements.
//!
//! Every search breaks ties in favour of the first cell in distance-major
//! order, so results do not depend on how cells are scheduled.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{LinkBudget, Snapshot};
use crate::error::{Error, Result};
use crate::frontend::Frontend;
use crate::geometry::{deg, extra_distance_fresnel, wrap_phase, Architecture, SourcePosition, SurfacePoint};

const CELL_CHUNK: usize = 64;

/// Candidate positions: the Cartesian product of a distance axis and an
/// angle axis, flattened distance-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrid {
    pub distances: Vec<f64>,
    pub thetas: Vec<f64>,
}

impl SearchGrid {
    pub fn new(distances: Vec<f64>, thetas: Vec<f64>) -> Result<Self> {
        check_axis("grid.distances", &distances)?;
        check_axis("grid.thetas", &thetas)?;
        if distances[0] <= 0.0 {
            return Err(Error::config("grid.distances", "distances must be positive"));
        }
        Ok(Self { distances, thetas })
    }

    /// Evenly spaced axes, both ends included. Angles in radians.
    pub fn uniform(d: (f64, f64, f64), theta: (f64, f64, f64)) -> Result<Self> {
        Self::new(
            linspace_step("grid.distances", d.0, d.1, d.2)?,
            linspace_step("grid.thetas", theta.0, theta.1, theta.2)?,
        )
    }

    /// 1–50 m in 0.25 m steps, ±60° in 0.5° steps.
    pub fn default_grid() -> Self {
        Self::uniform((1.0, 50.0, 0.25), (deg(-60.0), deg(60.0), deg(0.5))).expect("valid default grid")
    }

    pub fn len(&self) -> usize {
        self.distances.len() * self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell(&self, index: usize) -> (f64, f64) {
        let nt = self.thetas.len();
        (self.distances[index / nt], self.thetas[index % nt])
    }

    /// Test position of a cell with zero phase offset.
    pub fn position(&self, index: usize) -> SourcePosition {
        let (d, theta) = self.cell(index);
        SourcePosition {
            d,
            theta,
            phi: 0.0,
            chi: 0.0,
        }
    }

    /// Index of the cell matching `(d, theta)` to within `1e-9`.
    pub fn index_of(&self, d: f64, theta: f64) -> Option<usize> {
        let id = self.distances.iter().position(|&x| (x - d).abs() < 1e-9)?;
        let it = self.thetas.iter().position(|&x| (x - theta).abs() < 1e-9)?;
        Some(id * self.thetas.len() + it)
    }

    /// Sub-grid of the axis values within the given half-widths of a centre.
    pub fn window(&self, d: f64, theta: f64, half_d: f64, half_theta: f64) -> Result<Self> {
        let ds = self
            .distances
            .iter()
            .copied()
            .filter(|x| (x - d).abs() <= half_d + 1e-12)
            .collect();
        let ts = self
            .thetas
            .iter()
            .copied()
            .filter(|x| (x - theta).abs() <= half_theta + 1e-12)
            .collect();
        Self::new(ds, ts)
    }
}

fn check_axis(field: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::config(field, "axis is empty"));
    }
    if axis.iter().any(|x| !x.is_finite()) {
        return Err(Error::config(field, "axis values must be finite"));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config(field, "axis must be strictly increasing"));
    }
    Ok(())
}

pub(crate) fn linspace_step(field: &str, lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !lo.is_finite() || !hi.is_finite() || hi < lo {
        return Err(Error::config(
            field,
            format!("need min <= max and step > 0, got [{lo}, {hi}] step {step}"),
        ));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| lo + i as f64 * step).collect())
}

/// How the common phase offset is handled by [`ml_estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChiMode {
    /// `max_χ Re{C e^{jχ}} = |C|`.
    Analytic,
    /// Search over `n` evenly spaced offsets.
    Exhaustive(usize),
    /// `|C| / sqrt(E)`: correlation coefficient, ignores the energy term.
    Normalized,
    /// `Re{C} - E/2`: no offset at all (differential templates).
    Coherent,
}

/// Outcome of a grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    /// Winning position; its `chi` is the estimated offset (0 when unused).
    pub p_hat: SourcePosition,
    pub cell: usize,
    pub score: f64,
    /// Per-cell objective, distance-major, when requested.
    pub scores: Option<Vec<f64>>,
}

/// Signal model evaluated at test positions.
pub trait TemplateModel: Sync {
    fn arch(&self) -> Architecture;
    fn n_outputs(&self) -> usize;
    /// Noiseless vector for `p` with zero phase offset.
    fn template_into(&self, p: &SourcePosition, out: &mut [Complex64]);
}

/// Exact antenna response of a front-end, including the path-loss amplitude.
pub struct ArrayTemplates<'a> {
    pub frontend: &'a Frontend,
    pub lb: LinkBudget,
}

impl<'a> ArrayTemplates<'a> {
    pub fn new(frontend: &'a Frontend, lb: LinkBudget) -> Result<Self> {
        if frontend.arch == Architecture::RLens {
            return Err(Error::config(
                "estimator",
                "ML templates need nr-lens or no-lens; the r-lens uses the energy scan",
            ));
        }
        Ok(Self { frontend, lb })
    }
}

impl TemplateModel for ArrayTemplates<'_> {
    fn arch(&self) -> Architecture {
        self.frontend.arch
    }

    fn n_outputs(&self) -> usize {
        self.frontend.n_antennas()
    }

    fn template_into(&self, p: &SourcePosition, out: &mut [Complex64]) {
        self.frontend
            .response_into(&self.lb, &p.with_chi(0.0), out)
            .expect("template buffer sized from the layout");
    }
}

/// Differential templates `h_n h*_{n-1}` of the bare array under the
/// second-order phase model.
pub struct DifferentialTemplates<'a> {
    pub frontend: &'a Frontend,
    pub lb: LinkBudget,
    points: Vec<SurfacePoint>,
}

impl<'a> DifferentialTemplates<'a> {
    pub fn new(frontend: &'a Frontend, lb: LinkBudget) -> Result<Self> {
        if frontend.arch != Architecture::NoLens {
            return Err(Error::config(
                "estimator",
                "the differential estimator needs the no-lens array",
            ));
        }
        if frontend.n_antennas() < 2 {
            return Err(Error::config(
                "estimator",
                "the differential estimator needs at least two antennas",
            ));
        }
        Ok(Self {
            frontend,
            lb,
            points: frontend.layout.surface_points(),
        })
    }
}

impl TemplateModel for DifferentialTemplates<'_> {
    fn arch(&self) -> Architecture {
        Architecture::NoLens
    }

    fn n_outputs(&self) -> usize {
        self.points.len() - 1
    }

    fn template_into(&self, p: &SourcePosition, out: &mut [Complex64]) {
        let k = self.frontend.aperture.wavenumber();
        let a = self.lb.amplitude_unchecked(p.d);
        let p = p.with_chi(0.0);
        let mut prev = extra_distance_fresnel(&p, &self.points[0]);
        for (o, s) in out.iter_mut().zip(&self.points[1..]) {
            let cur = extra_distance_fresnel(&p, s);
            *o = Complex64::from_polar(a * a, -k * (cur - prev));
            prev = cur;
        }
    }
}

/// `r_n r*_{n-1}` over the flat antenna index, row boundaries included.
pub fn differential_products(r: &[Complex64]) -> Vec<Complex64> {
    r.windows(2).map(|w| w[1] * w[0].conj()).collect()
}

/// Templates and energies over a search grid. Templates are kept in memory
/// when they fit the budget and recomputed per cell otherwise.
pub struct TemplateBank<'m> {
    pub grid: SearchGrid,
    model: &'m dyn TemplateModel,
    n: usize,
    cached: Option<Vec<Complex64>>,
    energies: Vec<f64>,
}

/// Default memory budget for cached templates.
pub const DEFAULT_CACHE_BYTES: usize = 256 << 20;

impl<'m> TemplateBank<'m> {
    pub fn build(model: &'m dyn TemplateModel, grid: SearchGrid) -> Self {
        Self::build_with_budget(model, grid, DEFAULT_CACHE_BYTES)
    }

    pub fn build_with_budget(model: &'m dyn TemplateModel, grid: SearchGrid, cache_bytes: usize) -> Self {
        let n = model.n_outputs();
        let cells = grid.len();
        let cache = n.saturating_mul(cells).saturating_mul(std::mem::size_of::<Complex64>()) <= cache_bytes;
        let (cached, energies) = if cache {
            let mut data = vec![Complex64::new(0.0, 0.0); n * cells];
            let energies = data
                .par_chunks_mut(n.max(1))
                .enumerate()
                .map(|(i, out)| {
                    model.template_into(&grid.position(i), out);
                    out.iter().map(|v| v.norm_sqr()).sum()
                })
                .collect();
            (Some(data), energies)
        } else {
            let energies = (0..cells)
                .into_par_iter()
                .map_init(
                    || vec![Complex64::new(0.0, 0.0); n],
                    |buf, i| {
                        model.template_into(&grid.position(i), buf);
                        buf.iter().map(|v| v.norm_sqr()).sum()
                    },
                )
                .collect();
            (None, energies)
        };
        Self {
            grid,
            model,
            n,
            cached,
            energies,
        }
    }

    pub fn arch(&self) -> Architecture {
        self.model.arch()
    }

    pub fn n_outputs(&self) -> usize {
        self.n
    }

    pub fn is_cached(&self) -> bool {
        self.cached.is_some()
    }

    pub fn energy(&self, cell: usize) -> f64 {
        self.energies[cell]
    }

    fn with_template<R>(&self, cell: usize, buf: &mut Vec<Complex64>, f: impl FnOnce(&[Complex64]) -> R) -> R {
        match &self.cached {
            Some(data) => f(&data[cell * self.n..(cell + 1) * self.n]),
            None => {
                buf.resize(self.n, Complex64::new(0.0, 0.0));
                self.model.template_into(&self.grid.position(cell), buf);
                f(buf)
            }
        }
    }

    /// Template of one cell.
    pub fn template(&self, cell: usize) -> Vec<Complex64> {
        let mut buf = Vec::new();
        self.with_template(cell, &mut buf, |t| t.to_vec())
    }
}

#[inline]
fn correlate(r: &[Complex64], s: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, b) in r.iter().zip(s) {
        acc += a * b.conj();
    }
    acc
}

/// Objective and offset estimate for a correlation `C = Σ r_n s_n*` and
/// template energy `E`.
pub fn score_from_correlation(c: Complex64, energy: f64, mode: ChiMode) -> (f64, f64) {
    match mode {
        ChiMode::Analytic => (c.norm() - energy / 2.0, wrap_phase(-c.arg())),
        ChiMode::Normalized => {
            let s = if energy > 0.0 { c.norm() / energy.sqrt() } else { 0.0 };
            (s, wrap_phase(-c.arg()))
        }
        ChiMode::Coherent => (c.re - energy / 2.0, 0.0),
        ChiMode::Exhaustive(n) => {
            let mut best = (f64::NEG_INFINITY, 0.0);
            for k in 0..n.max(1) {
                let chi = TAU * k as f64 / n.max(1) as f64;
                let v = (c * Complex64::from_polar(1.0, chi)).re;
                if v > best.0 {
                    best = (v, chi);
                }
            }
            (best.0 - energy / 2.0, best.1)
        }
    }
}

#[derive(Clone, Copy)]
struct Best {
    score: f64,
    cell: usize,
    chi: f64,
}

impl Best {
    const NONE: Best = Best {
        score: f64::NEG_INFINITY,
        cell: usize::MAX,
        chi: 0.0,
    };

    /// Keeps `self` on ties when it comes first in cell order.
    fn merge(self, other: Best) -> Best {
        if other.score > self.score || (other.score == self.score && other.cell < self.cell) {
            other
        } else {
            self
        }
    }
}

fn check_lengths(bank: &TemplateBank<'_>, snapshots: &[&[Complex64]]) -> Result<()> {
    if bank.grid.is_empty() {
        return Err(Error::config("grid", "search grid is empty"));
    }
    for r in snapshots {
        if r.len() != bank.n {
            return Err(Error::config(
                "estimator",
                format!("snapshot has {} entries, templates have {}", r.len(), bank.n),
            ));
        }
    }
    Ok(())
}

/// Scores a batch of received vectors against every cell of the bank in a
/// single pass over the templates.
pub fn search_batch(bank: &TemplateBank<'_>, snapshots: &[&[Complex64]], mode: ChiMode) -> Result<Vec<Estimate>> {
    check_lengths(bank, snapshots)?;
    let cells = bank.grid.len();
    let chunks: Vec<Vec<Best>> = (0..cells.div_ceil(CELL_CHUNK))
        .into_par_iter()
        .map_init(Vec::new, |buf, chunk| {
            let mut best = vec![Best::NONE; snapshots.len()];
            let lo = chunk * CELL_CHUNK;
            for cell in lo..(lo + CELL_CHUNK).min(cells) {
                let energy = bank.energies[cell];
                bank.with_template(cell, buf, |t| {
                    for (b, r) in best.iter_mut().zip(snapshots) {
                        let (score, chi) = score_from_correlation(correlate(r, t), energy, mode);
                        *b = b.merge(Best { score, cell, chi });
                    }
                });
            }
            best
        })
        .collect();
    let mut best = vec![Best::NONE; snapshots.len()];
    for chunk in &chunks {
        for (b, c) in best.iter_mut().zip(chunk) {
            *b = b.merge(*c);
        }
    }
    Ok(best
        .into_iter()
        .map(|b| Estimate {
            p_hat: bank.grid.position(b.cell).with_chi(b.chi),
            cell: b.cell,
            score: b.score,
            scores: None,
        })
        .collect())
}

/// Objective at every cell for one received vector, distance-major.
pub fn score_map(bank: &TemplateBank<'_>, r: &[Complex64], mode: ChiMode) -> Result<Vec<f64>> {
    check_lengths(bank, &[r])?;
    Ok((0..bank.grid.len())
        .into_par_iter()
        .map_init(Vec::new, |buf, cell| {
            let e = bank.energies[cell];
            bank.with_template(cell, buf, |t| score_from_correlation(correlate(r, t), e, mode).0)
        })
        .collect())
}

/// Re-evaluates the objective at a single position from the model.
pub fn objective(model: &dyn TemplateModel, r: &[Complex64], p: &SourcePosition, mode: ChiMode) -> f64 {
    let mut t = vec![Complex64::new(0.0, 0.0); model.n_outputs()];
    model.template_into(p, &mut t);
    let e = t.iter().map(|v| v.norm_sqr()).sum();
    score_from_correlation(correlate(r, &t), e, mode).0
}

fn check_arch(snapshot: &Snapshot, bank: &TemplateBank<'_>) -> Result<()> {
    if snapshot.arch != bank.arch() {
        return Err(Error::config(
            "estimator",
            format!(
                "snapshot from {} cannot be matched with {} templates",
                snapshot.arch,
                bank.arch()
            ),
        ));
    }
    Ok(())
}

/// Maximum-likelihood position (and offset) for one snapshot.
pub fn ml_estimate(snapshot: &Snapshot, bank: &TemplateBank<'_>, mode: ChiMode) -> Result<Estimate> {
    check_arch(snapshot, bank)?;
    if mode == ChiMode::Coherent {
        return Err(Error::config(
            "chi_mode",
            "coherent scoring is reserved for differential templates",
        ));
    }
    Ok(search_batch(bank, &[&snapshot.r], mode)?.remove(0))
}

/// Same as [`ml_estimate`] with the per-cell objective attached.
pub fn ml_estimate_with_scores(snapshot: &Snapshot, bank: &TemplateBank<'_>, mode: ChiMode) -> Result<Estimate> {
    let mut est = ml_estimate(snapshot, bank, mode)?;
    est.scores = Some(score_map(bank, &snapshot.r, mode)?);
    Ok(est)
}

/// Differential estimate from a bare-array snapshot. `bank` must hold
/// [`DifferentialTemplates`].
pub fn differential_estimate(snapshot: &Snapshot, bank: &TemplateBank<'_>) -> Result<Estimate> {
    if snapshot.arch != Architecture::NoLens {
        return Err(Error::config(
            "estimator",
            "the differential estimator needs a no-lens snapshot",
        ));
    }
    if snapshot.r.len() < 2 {
        return Err(Error::config(
            "estimator",
            "the differential estimator needs at least two antennas",
        ));
    }
    let rd = differential_products(&snapshot.r);
    Ok(search_batch(bank, &[&rd], ChiMode::Coherent)?.remove(0))
}

/// Energy scan of the reconfigurable lens: `measure(cell, p_t)` returns the
/// lens output `r0` with the lens focused on `p_t`, and the cell maximizing
/// `|r0|²` wins.
pub fn rlens_scan<F>(grid: &SearchGrid, measure: F) -> Result<Estimate>
where
    F: Fn(usize, &SourcePosition) -> Complex64 + Sync,
{
    if grid.is_empty() {
        return Err(Error::config("grid", "search grid is empty"));
    }
    let scores: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| measure(i, &grid.position(i)).norm_sqr())
        .collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(Estimate {
        p_hat: grid.position(best),
        cell: best,
        score: scores[best],
        scores: Some(scores),
    })
}

/// Noiseless lens output for every grid cell, computed against one truth.
pub fn rlens_response_map(fe: &Frontend, lb: &LinkBudget, truth: &SourcePosition, grid: &SearchGrid) -> Vec<Complex64> {
    let table = fe.rlens_truth(lb, truth);
    (0..grid.len())
        .into_par_iter()
        .map(|i| fe.rlens_output_cached(&table, &fe.profile(grid.position(i), 0.0)))
        .collect()
}

/// Writes `d_m,theta_rad,score` rows in grid order.
pub fn write_score_csv<W: Write>(out: W, grid: &SearchGrid, scores: &[f64]) -> Result<()> {
    if scores.len() != grid.len() {
        return Err(Error::domain(format!(
            "{} scores for {} cells",
            scores.len(),
            grid.len()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["d_m", "theta_rad", "score"])?;
    for (i, s) in scores.iter().enumerate() {
        let (d, t) = grid.cell(i);
        w.write_record([d.to_string(), t.to_string(), format!("{s:e}")])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}
