//! Parameter sweeps behind the command-line tool.
//!
//! Every point of a grid reuses the master seed with trials `0..n`, so rows
//! are coupled across `p` and `W` and any single row can be replayed from its
//! parameters alone. Results do not depend on the worker count.

mod config;
mod output;

use std::time::Instant;

use rayon::prelude::*;

use crate::error::Error;
use crate::heuristics::{gamma_estimate, stacked_block, unique_component, HeuristicEstimate};
use crate::lattice::{Axis, Dims, Lattice, LatticeFamily};
use crate::pathfinding::estimate_p_pf;
use crate::percolation::{crossing_point, find_min_side, largest_component_size, Microcanonical, SideLengthQuery};
use crate::stats::{Estimate, Z_95};

pub use config::{
    Config, ConfigError, ContourConfig, ContourMethod, Grid, HeuristicChoice, HeuristicConfig, PathfindConfig,
    PercolateConfig, PercolateMode, SweepConfig, WindowGrid, QUICK_LENGTH, QUICK_TRIALS,
};
pub use output::{read_csv, write_csv, write_csv_to, write_json, Row};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Percolate,
    Pathfind,
    Contour,
    Heuristic,
    Sweep,
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid parameters: {0}")]
    Simulation(#[from] Error),
    #[error("cannot build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn elapsed_ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

fn quick_dims(config: &Config, dims: Dims) -> Dims {
    Dims::new(config.effective_length(dims.t), dims.y, dims.z)
}

/// Runs `experiment` on a pool of `config.workers` threads (all cores if unset).
pub fn run(experiment: Experiment, config: &Config) -> Result<Vec<Row>, ExperimentError> {
    config.validate()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.workers {
        pool = pool.num_threads(n);
    }
    pool.build()?.install(|| match experiment {
        Experiment::Percolate => percolate(config),
        Experiment::Pathfind => pathfind(config),
        Experiment::Contour => contour(config),
        Experiment::Heuristic => heuristic(config),
        Experiment::Sweep => sweep(config),
    })
}

pub fn percolate(config: &Config) -> Result<Vec<Row>, ExperimentError> {
    let c = &config.percolate;
    let trials = config.effective_trials(config.trials);
    let dims = quick_dims(config, c.dims);
    let mut rows = Vec::new();
    match c.mode {
        PercolateMode::Span => {
            for &p in &c.p.0 {
                let start = Instant::now();
                let family = LatticeFamily::new(dims, p, config.seed)?;
                let est = crate::percolation::estimate_spanning(&family, Axis::T, trials)?;
                rows.push(Row::new("percolate/span", dims).p(p).estimate(&est).wall_ms(elapsed_ms(start)));
            }
        }
        PercolateMode::Lmin => {
            for &p in &c.p.0 {
                let start = Instant::now();
                let search = find_min_side(&SideLengthQuery {
                    p,
                    length: dims.t,
                    target: c.target,
                    trials,
                    cap: c.cap,
                    seed: config.seed,
                })?;
                for (side, est) in &search.probes {
                    rows.push(Row::new("percolate/lmin-probe", Dims::elongated(dims.t, *side)).p(p).estimate(est));
                }
                let mut row = Row::new("percolate/lmin", Dims::elongated(dims.t, 0)).p(p);
                row.dims_y = search.found;
                row.dims_z = search.found;
                if search.found.is_some() {
                    let (_, est) = search.probes.last().expect("found implies a probe");
                    row = row.estimate(est);
                }
                rows.push(row.wall_ms(elapsed_ms(start)));
            }
        }
        PercolateMode::Largest => {
            for &p in &c.p.0 {
                let start = Instant::now();
                let (mean, half) = largest_fraction(dims, p, config.seed, trials)?;
                let mut row = Row::new("percolate/largest", dims).p(p);
                row.trials = Some(trials);
                row.point = Some(mean);
                row.ci_low = Some(mean - half);
                row.ci_high = Some(mean + half);
                rows.push(row.wall_ms(elapsed_ms(start)));
            }
        }
        PercolateMode::NewmanZiff => {
            // The requested lattice is compared against one of half the size.
            let half = Dims::new(
                (dims.t / 2).max(2),
                if dims.y > 1 { (dims.y / 2).max(2) } else { 1 },
                if dims.z > 1 { (dims.z / 2).max(2) } else { 1 },
            );
            rows = sweep_lattices(&[half, dims], &c.p, trials, config.seed)?;
        }
    }
    Ok(rows)
}

/// Mean largest-cluster fraction and its normal-approximation 95% half-width.
pub fn largest_fraction(dims: Dims, p: f64, seed: u64, trials: u64) -> Result<(f64, f64), Error> {
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    let family = LatticeFamily::new(dims, p, seed)?;
    let n = dims.node_count() as f64;
    let fractions: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let lattice = Lattice::generate(&family.member(trial)).expect("family was validated");
            largest_component_size(&lattice) as f64 / n
        })
        .collect();
    let k = trials as f64;
    let mean = fractions.iter().sum::<f64>() / k;
    let var = if trials > 1 {
        fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    Ok((mean, Z_95 * (var / k).sqrt()))
}

pub fn pathfind(config: &Config) -> Result<Vec<Row>, ExperimentError> {
    let c = &config.pathfind;
    let trials = config.effective_trials(config.trials);
    let dims = quick_dims(config, c.dims);
    let mut rows = Vec::new();
    for &strategy in &c.strategies {
        for &window in &c.window.0 {
            for &p in &c.p.0 {
                let start = Instant::now();
                let family = LatticeFamily::new(dims, p, config.seed)?;
                let est = estimate_p_pf(&family, window, strategy, trials)?;
                rows.push(
                    Row::new("pathfind", dims)
                        .p(p)
                        .window(window)
                        .strategy(strategy.name())
                        .estimate(&est)
                        .wall_ms(elapsed_ms(start)),
                );
            }
        }
    }
    Ok(rows)
}

/// Result of a bisection for the smallest `p` reaching a target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourPoint {
    /// Smallest probed `p` whose estimate reached the target; `None` if even
    /// `p = 1` falls short.
    pub p: Option<f64>,
    /// The probe at that `p`.
    pub estimate: Option<ProbeValue>,
    pub probes: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeValue {
    pub successes: u64,
    pub trials: u64,
    pub point: f64,
    pub low: f64,
    pub high: f64,
}

impl From<Estimate> for ProbeValue {
    fn from(e: Estimate) -> Self {
        ProbeValue {
            successes: e.successes,
            trials: e.trials,
            point: e.point,
            low: e.low,
            high: e.high,
        }
    }
}

impl From<HeuristicEstimate> for ProbeValue {
    fn from(h: HeuristicEstimate) -> Self {
        let base = h.base.expect("power heuristics carry a base estimate");
        ProbeValue {
            successes: base.successes,
            trials: base.trials,
            point: h.value,
            low: h.low,
            high: h.high,
        }
    }
}

/// Bisects `[0, 1]` for the point where `probe(p).point` first reaches
/// `target`, stopping once the bracket is narrower than `tolerance`.
pub fn bisect_contour(
    target: f64,
    tolerance: f64,
    mut probe: impl FnMut(f64) -> Result<ProbeValue, Error>,
) -> Result<ContourPoint, Error> {
    let top = probe(1.0)?;
    let mut probes = 1;
    if top.point < target {
        return Ok(ContourPoint {
            p: None,
            estimate: None,
            probes,
        });
    }
    let (mut lo, mut hi, mut at_hi) = (0.0f64, 1.0f64, top);
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        let v = probe(mid)?;
        probes += 1;
        if v.point >= target {
            hi = mid;
            at_hi = v;
        } else {
            lo = mid;
        }
    }
    Ok(ContourPoint {
        p: Some(hi),
        estimate: Some(at_hi),
        probes,
    })
}

pub fn contour(config: &Config) -> Result<Vec<Row>, ExperimentError> {
    let c = &config.contour;
    let trials = config.effective_trials(c.trials_per_probe);
    let length = config.effective_length(c.length);
    let mut rows = Vec::new();
    let (id, label) = match c.method {
        ContourMethod::Direct => ("contour/direct", c.strategy.name()),
        ContourMethod::UniqueComponent => ("contour/unique-component", "unique-component"),
    };
    for &side in &c.sides {
        let dims = Dims::elongated(length, side);
        for &window in c.window.0.iter().filter(|&&w| w <= length) {
            let start = Instant::now();
            let point = bisect_contour(c.target, c.tolerance, |p| match c.method {
                ContourMethod::Direct => {
                    let family = LatticeFamily::new(dims, p, config.seed)?;
                    Ok(estimate_p_pf(&family, window, c.strategy, trials)?.into())
                }
                ContourMethod::UniqueComponent => {
                    Ok(unique_component(p, side, window, length, trials, config.seed)?.into())
                }
            })?;
            let mut row = match point.p {
                Some(p) => Row::new(id, dims).p(p),
                None => Row::new(format!("{id}/unreachable"), dims),
            }
            .window(window)
            .strategy(label);
            if let Some(v) = point.estimate {
                row.trials = Some(v.trials);
                row.successes = Some(v.successes);
                row.point = Some(v.point);
                row.ci_low = Some(v.low);
                row.ci_high = Some(v.high);
            } else {
                row.trials = Some(trials);
            }
            rows.push(row.wall_ms(elapsed_ms(start)));
        }
    }
    Ok(rows)
}

fn heuristic_row(kind: &str, dims: Dims, p: f64, h: &HeuristicEstimate) -> Row {
    let mut row = Row::new(format!("heuristic/{kind}"), dims).p(p).strategy(kind);
    if let Some(base) = h.base {
        row.trials = Some(base.trials);
        row.successes = Some(base.successes);
    }
    row.point = Some(h.value);
    row.ci_low = Some(h.low);
    row.ci_high = Some(h.high);
    row
}

pub fn heuristic(config: &Config) -> Result<Vec<Row>, ExperimentError> {
    let c = &config.heuristic;
    let trials = config.effective_trials(config.trials);
    let length = config.effective_length(c.length);
    let mut rows = Vec::new();
    for &kind in &c.kinds {
        for &side in &c.sides {
            let dims = Dims::elongated(length, side);
            if kind == HeuristicChoice::Gamma {
                for &p in &c.p.0 {
                    let start = Instant::now();
                    let h = gamma_estimate(p, side, length)?;
                    rows.push(heuristic_row("gamma", dims, p, &h).wall_ms(elapsed_ms(start)));
                }
                continue;
            }
            for &window in c.window.0.iter().filter(|&&w| w <= length) {
                for &p in &c.p.0 {
                    let start = Instant::now();
                    let (name, h) = match kind {
                        HeuristicChoice::StackedBlock => {
                            ("stacked-block", stacked_block(p, side, window, length, trials, config.seed)?)
                        }
                        _ => (
                            "unique-component",
                            unique_component(p, side, window, length, trials, config.seed)?,
                        ),
                    };
                    rows.push(heuristic_row(name, dims, p, &h).window(window).wall_ms(elapsed_ms(start)));
                }
            }
        }
    }
    Ok(rows)
}

pub fn sweep(config: &Config) -> Result<Vec<Row>, ExperimentError> {
    let c = &config.sweep;
    let trials = config.effective_trials(config.trials);
    let dims: Vec<Dims> = c.dims.iter().map(|&d| quick_dims(config, d)).collect();
    Ok(sweep_lattices(&dims, &c.p, trials, config.seed)?)
}

/// Newman-Ziff curves for each lattice, followed by a crossing row for each
/// consecutive pair (recorded against the second lattice of the pair).
pub fn sweep_lattices(dims: &[Dims], grid: &Grid, realizations: u64, seed: u64) -> Result<Vec<Row>, Error> {
    let mut rows = Vec::new();
    let mut runs = Vec::with_capacity(dims.len());
    for (i, &d) in dims.iter().enumerate() {
        let start = Instant::now();
        // Distinct sizes get unrelated edge orders.
        let nz = Microcanonical::run(d, Axis::T, realizations, seed.wrapping_add(i as u64))?;
        let ms = elapsed_ms(start);
        for &p in &grid.0 {
            let mut row = Row::new("sweep/curve", d).p(p).wall_ms(ms);
            row.trials = Some(realizations);
            row.point = Some(nz.probability(p));
            rows.push(row);
        }
        runs.push(nz);
    }
    let lo = grid.0.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = grid.0.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for (pair, d) in runs.windows(2).zip(&dims[1..]) {
        let mut row = Row::new("sweep/crossing", *d);
        row.trials = Some(realizations);
        if hi > lo {
            row.p = crossing_point(&pair[0], &pair[1], lo, hi, 200);
        }
        rows.push(row);
    }
    Ok(rows)
}
