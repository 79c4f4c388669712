//! Limited-lookahead pathfinding.
//!
//! A path is grown one layer per step while only the active block
//! `B_{t, t+W}` is visible:
//!
//! 1. breadth-first search from the current node `v_t` finds the far nodes
//!    `F_t`, the reachable nodes of the farthest active layer; if there are
//!    none the run fails;
//! 2. a far node `f_t` is chosen by the [`Strategy`] and the shortest path
//!    `v_t .. f_t` is taken from the search tree;
//! 3. the last node of that path lying in layer `t + 1` becomes `v_{t+1}`
//!    and the path prefix up to it is appended (so a path may double back
//!    into earlier layers); if `f_t` lies in the final lattice layer the
//!    whole path is appended and the run succeeds;
//! 4. the stream drops layer `t` and reveals layer `t + W + 1`.
//!
//! [`Strategy::MostPaths`] replaces steps 2 and 3 by choosing, among the
//! reachable layer `t + 1` nodes, the one whose component in `B_{t+1, t+W}`
//! holds the most far-layer nodes.

mod search;
mod strategy;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Advance, Axis, BlockView, Coord, Dims, Lattice, LatticeFamily, LatticeSpec, LayerSource, LayerStream};
use crate::percolation::Clusters;
use crate::stats::{estimate_with, Estimate, ThresholdSearch};

pub use search::BlockSearch;
pub use strategy::{select_far_node, FarCandidate, Strategy};

/// Mixed into the master seed so strategy draws never share a stream with edges.
const PATH_STREAM_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Success,
    Failure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StepDiagnostic {
    pub t: u32,
    /// `|F_t|`.
    pub far_nodes: u32,
    /// Nodes appended to the path by this step.
    pub segment: u32,
}

/// Outcome of one pathfinding run.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub outcome: Outcome,
    /// Step at which the far-node set came up empty.
    pub failure_step: Option<u32>,
    pub path: Vec<Coord>,
    /// Per-step record, present when requested through [`RunOptions`].
    pub diagnostics: Option<Vec<StepDiagnostic>>,
}

impl PathResult {
    pub fn is_success(&self) -> bool {
        self.outcome == Outcome::Success
    }

    /// Checks the path against the lattice it was grown on: it starts in
    /// layer 0, stays in bounds, follows open edges and, on success, ends in
    /// the final layer.
    pub fn validate(&self, lattice: &Lattice) -> std::result::Result<(), String> {
        let dims = lattice.dims();
        if let Some(first) = self.path.first() {
            if first.t != 0 {
                return Err(format!("path starts in layer {}", first.t));
            }
        } else if self.is_success() {
            return Err("successful run with an empty path".into());
        }
        for c in &self.path {
            if c.t >= dims.t || c.y >= dims.y || c.z >= dims.z {
                return Err(format!("{c:?} is outside {dims}"));
            }
        }
        for w in self.path.windows(2) {
            if !lattice.joined(w[0], w[1]) {
                return Err(format!("{:?} -> {:?} is not an open edge", w[0], w[1]));
            }
        }
        match self.outcome {
            Outcome::Success => {
                let last = self.path.last().expect("checked above");
                if last.t + 1 != dims.t {
                    return Err(format!("successful path ends in layer {}", last.t));
                }
            }
            Outcome::Failure => {
                if self.failure_step.is_none() {
                    return Err("failure without a failure step".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub record_diagnostics: bool,
}

/// Online state of a run: the current time, path head and accumulated path.
#[derive(Debug, Clone)]
pub struct PathState {
    pub t: u32,
    pub current: Coord,
    pub path: Vec<Coord>,
    pub strategy: Strategy,
    rng: ChaCha8Rng,
}

impl PathState {
    pub fn new(start: Coord, strategy: Strategy, rng: ChaCha8Rng) -> Self {
        PathState {
            t: start.t,
            current: start,
            path: vec![start],
            strategy,
            rng,
        }
    }
}

/// Per-step strategy RNG for trial `spec.trial`.
pub fn path_rng(spec: &LatticeSpec) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ PATH_STREAM_SALT);
    rng.set_stream(spec.trial);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    /// Moved to the given node in layer `t + 1`.
    Advanced(Coord),
    Succeeded,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepReport {
    pub outcome: StepOutcome,
    pub far_nodes: u32,
    pub segment: u32,
}

/// Reusable buffers for [`step`].
#[derive(Debug, Default, Clone)]
pub struct StepScratch {
    search: BlockSearch,
    clusters: Clusters,
    far: Vec<u32>,
    candidates: Vec<FarCandidate>,
    segment: Vec<u32>,
    reach: Vec<u32>,
}

/// Far nodes of `from`: the nodes of the block's last layer reachable from it
/// inside the block.
pub fn find_far_nodes<S: LayerSource + ?Sized>(block: &BlockView<'_, S>, from: Coord) -> Vec<Coord> {
    let mut search = BlockSearch::new();
    search.run(block, block.local(from));
    let far_start = (block.layers() - 1) * block.layer_size();
    let mut far: Vec<Coord> = search
        .visited()
        .iter()
        .filter(|&&l| l >= far_start)
        .map(|&l| block.coord(l))
        .collect();
    far.sort();
    far
}

/// One pathfinding step on the active block `B_{t, t+W}`.
pub fn step<S: LayerSource + ?Sized>(
    state: &mut PathState,
    block: &BlockView<'_, S>,
    scratch: &mut StepScratch,
) -> Result<StepReport> {
    if block.first() != state.t || state.current.t != state.t || !block.contains(state.current) {
        return Err(Error::Contract("current node is not in the nearest layer of the active block"));
    }
    if block.layers() < 2 {
        return Err(Error::Contract("active block needs at least two layers"));
    }
    let dims = block.dims();
    let t = state.t;
    let far_layer = block.last();
    let reaches_end = far_layer + 1 == dims.t;
    let layer = block.layer_size();

    scratch.search.run(block, block.local(state.current));
    let far_start = (block.layers() - 1) * layer;
    scratch.far.clear();
    scratch
        .far
        .extend(scratch.search.visited().iter().copied().filter(|&l| l >= far_start));
    let far_nodes = scratch.far.len() as u32;
    if far_nodes == 0 {
        return Ok(StepReport {
            outcome: StepOutcome::Failed,
            far_nodes,
            segment: 0,
        });
    }

    // Local index of the node the appended segment ends at.
    let end = if state.strategy.selects_far_node() || reaches_end {
        let chooser = if state.strategy.selects_far_node() {
            state.strategy
        } else {
            Strategy::RandomNode
        };
        scratch.candidates.clear();
        for &l in &scratch.far {
            scratch.candidates.push(FarCandidate {
                node: block.coord(l),
                distance: scratch.search.distance(l).expect("visited"),
                degree: if chooser == Strategy::MostConnected {
                    block.degree(l)
                } else {
                    0
                },
            });
        }
        let pick = select_far_node(&scratch.candidates, chooser, dims, &mut state.rng)?;
        let target = scratch.far[pick];
        scratch.search.path_to(target, &mut scratch.segment);
        if reaches_end {
            target
        } else {
            // Last node of the segment lying in layer t + 1.
            let cut = scratch
                .segment
                .iter()
                .rposition(|&l| block.layer_of(l) == t + 1)
                .expect("every path to the far layer crosses layer t + 1");
            scratch.segment.truncate(cut + 1);
            scratch.segment[cut]
        }
    } else {
        most_paths_next(state, block, scratch)?
    };

    let appended = (scratch.segment.len() - 1) as u32;
    state
        .path
        .extend(scratch.segment[1..].iter().map(|&l| block.coord(l)));
    let outcome = if reaches_end {
        StepOutcome::Succeeded
    } else {
        let next = block.coord(end);
        state.t += 1;
        state.current = next;
        StepOutcome::Advanced(next)
    };
    Ok(StepReport {
        outcome,
        far_nodes,
        segment: appended,
    })
}

/// Chooses `v_{t+1}` for the most-paths strategy and leaves the connecting
/// shortest path in `scratch.segment`.
///
/// Every next-layer node in one component of `B_{t+1, t+W}` reaches the same
/// far nodes, so one labelling of that sub-block scores all candidates.
fn most_paths_next<S: LayerSource + ?Sized>(
    state: &mut PathState,
    block: &BlockView<'_, S>,
    scratch: &mut StepScratch,
) -> Result<u32> {
    let t = state.t;
    let layer = block.layer_size();
    let sub = BlockView::new(block.source(), t + 1, block.last())?;
    let uf = scratch.clusters.analyze(&sub);
    let n = sub.node_count();
    scratch.reach.clear();
    scratch.reach.resize(n, 0);
    let sub_far = (sub.layers() - 1) * layer;
    for l in sub_far..n as u32 {
        let r = uf.find(l);
        scratch.reach[r as usize] += 1;
    }
    // Candidates: reachable layer t + 1 nodes, as block-local indices.
    scratch.far.clear();
    scratch.far.extend(
        scratch
            .search
            .visited()
            .iter()
            .copied()
            .filter(|&l| l >= layer && l < 2 * layer),
    );
    let mut scores = Vec::with_capacity(scratch.far.len());
    for &l in &scratch.far {
        let r = uf.find(l - layer);
        scores.push(scratch.reach[r as usize] as u64);
    }
    let best = *scores.iter().max().ok_or(Error::Contract("no reachable next-layer node"))?;
    let pick = strategy::pick_tied(scores.iter().map(|&s| u64::MAX - s), u64::MAX - best, &mut state.rng)?;
    let next = scratch.far[pick];
    scratch.search.path_to(next, &mut scratch.segment);
    Ok(next)
}

/// Runs pathfinding trials with reusable scratch storage.
#[derive(Debug, Clone)]
pub struct Pathfinder {
    strategy: Strategy,
    options: RunOptions,
    scratch: StepScratch,
}

impl Pathfinder {
    pub fn new(strategy: Strategy, options: RunOptions) -> Self {
        Pathfinder {
            strategy,
            options,
            scratch: StepScratch::default(),
        }
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    /// Grows a path across the lattice of `spec`, streaming it with window `window`.
    pub fn run(&mut self, spec: &LatticeSpec, window: u32) -> Result<PathResult> {
        let mut stream = LayerStream::open(spec, window)?;
        let mut rng = path_rng(spec);
        let mut diagnostics = self.options.record_diagnostics.then(Vec::new);

        let Some(start) = self.choose_start(&stream, &mut rng) else {
            return Ok(PathResult {
                outcome: Outcome::Failure,
                failure_step: Some(0),
                path: Vec::new(),
                diagnostics,
            });
        };
        let mut state = PathState::new(start, self.strategy, rng);
        loop {
            let report = step(&mut state, &stream.active_block(), &mut self.scratch)?;
            if let Some(d) = diagnostics.as_mut() {
                d.push(StepDiagnostic {
                    t: state.t - matches!(report.outcome, StepOutcome::Advanced(_)) as u32,
                    far_nodes: report.far_nodes,
                    segment: report.segment,
                });
            }
            match report.outcome {
                StepOutcome::Advanced(_) => {
                    let advanced = stream.advance();
                    debug_assert_eq!(advanced, Advance::Advanced);
                }
                StepOutcome::Succeeded => {
                    return Ok(PathResult {
                        outcome: Outcome::Success,
                        failure_step: None,
                        path: state.path,
                        diagnostics,
                    });
                }
                StepOutcome::Failed => {
                    return Ok(PathResult {
                        outcome: Outcome::Failure,
                        failure_step: Some(state.t),
                        path: state.path,
                        diagnostics,
                    });
                }
            }
        }
    }

    /// Uniform draw among layer-0 nodes with a non-empty far-node set in the
    /// first active block.
    fn choose_start(&mut self, stream: &LayerStream, rng: &mut ChaCha8Rng) -> Option<Coord> {
        let block = stream.active_block();
        let uf = self.scratch.clusters.analyze(&block);
        let layer = block.layer_size();
        let starts = &mut self.scratch.far;
        starts.clear();
        for l in 0..layer {
            let r = uf.find(l);
            if uf.root_faces(r).touches_high(Axis::T) {
                starts.push(l);
            }
        }
        if starts.is_empty() {
            return None;
        }
        let pick = starts[rng.random_range(0..starts.len())];
        Some(block.coord(pick))
    }
}

/// One pathfinding run with default options.
pub fn run_llp(spec: &LatticeSpec, window: u32, strategy: Strategy) -> Result<PathResult> {
    Pathfinder::new(strategy, RunOptions::default()).run(spec, window)
}

fn check_window(dims: Dims, window: u32) -> Result<()> {
    if window < 2 || window > dims.t {
        return Err(Error::WindowOutOfRange {
            window,
            length: dims.t,
        });
    }
    Ok(())
}

/// Fraction of successful runs over trials `0..trials` of `family`.
pub fn estimate_p_pf(family: &LatticeFamily, window: u32, strategy: Strategy, trials: u64) -> Result<Estimate> {
    check_window(family.dims, window)?;
    estimate_with(
        trials,
        || Pathfinder::new(strategy, RunOptions::default()),
        |finder, trial| {
            finder
                .run(&family.member(trial), window)
                .expect("family and window were validated")
                .is_success()
        },
    )
}

/// Parameters of the minimum window search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowQuery {
    pub side: u32,
    pub p: f64,
    pub length: u32,
    pub strategy: Strategy,
    pub target: f64,
    pub trials: u64,
    pub cap: u32,
    pub seed: u64,
}

/// Smallest window `W >= 2` whose success rate reaches `target`.
pub fn find_min_window(q: &WindowQuery) -> Result<ThresholdSearch> {
    let family = LatticeFamily::new(Dims::elongated(q.length, q.side), q.p, q.seed)?;
    let cap = q.cap.min(q.length);
    let mut probes = Vec::new();
    for window in 2..=cap {
        let est = estimate_p_pf(&family, window, q.strategy, q.trials)?;
        probes.push((window, est));
        if est.point >= q.target {
            return Ok(ThresholdSearch {
                found: Some(window),
                cap,
                probes,
            });
        }
    }
    Ok(ThresholdSearch {
        found: None,
        cap,
        probes,
    })
}
