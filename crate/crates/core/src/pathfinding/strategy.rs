use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Coord, Dims};

/// How the next path node is chosen each step.
///
/// The first four pick a far-layer target and walk towards it; `MostPaths`
/// picks the next-layer node directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Uniformly random reachable far node.
    RandomNode,
    /// Far node with the shortest path from the current node.
    ShortestPath,
    /// Far node with the most open edges inside the active block.
    MostConnected,
    /// Far node closest to the centre of the cross-section.
    CentreFirst,
    /// Next-layer node that reaches the most far-layer nodes.
    MostPaths,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::RandomNode,
        Strategy::ShortestPath,
        Strategy::MostConnected,
        Strategy::CentreFirst,
        Strategy::MostPaths,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::RandomNode => "random-node",
            Strategy::ShortestPath => "shortest-path",
            Strategy::MostConnected => "most-connected",
            Strategy::CentreFirst => "centre-first",
            Strategy::MostPaths => "most-paths",
        }
    }

    pub fn selects_far_node(self) -> bool {
        self != Strategy::MostPaths
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Strategy::ALL.iter().map(|s| s.name()).collect();
                format!("unknown strategy `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// A reachable far-layer node and the measures strategies rank it by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FarCandidate {
    pub node: Coord,
    /// BFS distance from the current path node.
    pub distance: u32,
    /// Open edges incident to the node inside the active block.
    pub degree: u32,
}

/// Squared distance from the cross-section centre, in doubled coordinates so
/// it stays integral.
fn centre_offset(c: Coord, dims: Dims) -> u64 {
    let dy = (2 * c.y as i64 - (dims.y as i64 - 1)).unsigned_abs();
    let dz = (2 * c.z as i64 - (dims.z as i64 - 1)).unsigned_abs();
    dy * dy + dz * dz
}

/// Index of the candidate `strategy` picks; ties are broken uniformly at random.
pub fn select_far_node<R: Rng + ?Sized>(
    candidates: &[FarCandidate],
    strategy: Strategy,
    dims: Dims,
    rng: &mut R,
) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::Contract("far-node selection needs at least one candidate"));
    }
    if !strategy.selects_far_node() {
        return Err(Error::Contract("most-paths does not select a far node"));
    }
    let key = |c: &FarCandidate| -> u64 {
        match strategy {
            Strategy::RandomNode => 0,
            Strategy::ShortestPath => c.distance as u64,
            Strategy::MostConnected => u64::MAX - c.degree as u64,
            Strategy::CentreFirst => centre_offset(c.node, dims),
            Strategy::MostPaths => unreachable!(),
        }
    };
    if strategy == Strategy::RandomNode {
        return Ok(rng.random_range(0..candidates.len()));
    }
    let best = candidates.iter().map(key).min().expect("non-empty");
    pick_tied(candidates.iter().map(key), best, rng)
}

/// Uniform choice among the positions where `keys` equals `best`.
pub(crate) fn pick_tied<R: Rng + ?Sized>(
    keys: impl Iterator<Item = u64> + Clone,
    best: u64,
    rng: &mut R,
) -> Result<usize> {
    let ties = keys.clone().filter(|&k| k == best).count();
    let nth = match ties {
        0 => return Err(Error::Contract("no candidate holds the best key")),
        1 => 0,
        n => rng.random_range(0..n),
    };
    Ok(keys
        .enumerate()
        .filter(|&(_, k)| k == best)
        .nth(nth)
        .map(|(i, _)| i)
        .expect("counted above"))
}
