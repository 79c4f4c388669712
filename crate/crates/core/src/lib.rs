//! Bond percolation on elongated cubic lattices and limited-lookahead
//! pathfinding across them.
//!
//! * [`lattice`]: seeded lattice generation, block views and layer streaming.
//! * [`percolation`]: cluster labelling, spanning, Monte Carlo estimates,
//!   minimum side length search and Newman-Ziff sweeps.
//! * [`pathfinding`]: the limited-lookahead pathfinding engine and its strategies.
//! * [`heuristics`]: block-statistic approximations of long-range behaviour.
//! * [`experiments`]: configuration, parameter sweeps and CSV/JSON output.

pub mod error;
pub mod experiments;
pub mod heuristics;
pub mod lattice;
pub mod pathfinding;
pub mod percolation;
pub mod stats;

pub use error::{Error, Result};
pub use lattice::{Axis, Coord, Dims, Lattice, LatticeFamily, LatticeSpec};
pub use stats::Estimate;
