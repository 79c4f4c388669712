//! Seeded bond-percolated cubic lattices.
//!
//! Nodes are addressed by `(t, y, z)` with `t` outermost, so a layer of fixed
//! `t` is a contiguous run of `L_y * L_z` nodes. Each node stores the state of
//! its (up to) three positive-direction edges as a packed [`EdgeFlags`] byte.
//!
//! Edge states come from a counter-based stream: the uniform variate for the
//! edge leaving node `n` along axis `a` sits at a fixed position
//! (`3n + a`) of a ChaCha8 stream selected by `(seed, trial)`. Any layer can
//! therefore be produced on its own, and whole-lattice generation, streaming
//! and parallel trials all see the same edges.

mod block;
mod stream;

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use block::BlockView;
pub use stream::{Advance, LayerStream};

/// Largest node count a single lattice may hold (node ids are `u32`).
pub const NODE_LIMIT: u64 = u32::MAX as u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    T,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::T, Axis::Y, Axis::Z];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::T => "t",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "t" | "T" => Ok(Axis::T),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(format!("unknown axis `{other}` (expected t, y or z)")),
        }
    }
}

/// Lattice extent `(L_t, L_y, L_z)`. A 2D `L x L` lattice is `(L, L, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub t: u32,
    pub y: u32,
    pub z: u32,
}

impl Dims {
    pub const fn new(t: u32, y: u32, z: u32) -> Self {
        Dims { t, y, z }
    }

    /// `L x L` square lattice.
    pub const fn square(side: u32) -> Self {
        Dims::new(side, side, 1)
    }

    /// `L x L x L` cube.
    pub const fn cube(side: u32) -> Self {
        Dims::new(side, side, side)
    }

    /// `L_t x L x L` elongated block.
    pub const fn elongated(length: u32, side: u32) -> Self {
        Dims::new(length, side, side)
    }

    #[inline]
    pub fn extent(&self, axis: Axis) -> u32 {
        match axis {
            Axis::T => self.t,
            Axis::Y => self.y,
            Axis::Z => self.z,
        }
    }

    #[inline]
    pub fn layer_size(&self) -> usize {
        self.y as usize * self.z as usize
    }

    /// Node count, or `None` if it does not fit in a `u64`.
    pub fn checked_node_count(&self) -> Option<u64> {
        (self.t as u64)
            .checked_mul(self.y as u64)?
            .checked_mul(self.z as u64)
    }

    pub fn node_count(&self) -> usize {
        self.t as usize * self.layer_size()
    }

    /// Number of nearest-neighbour pairs with open boundaries.
    pub fn potential_edges(&self) -> u64 {
        let (t, y, z) = (self.t as u64, self.y as u64, self.z as u64);
        (t - 1) * y * z + t * (y - 1) * z + t * y * (z - 1)
    }

    fn validate(&self) -> Result<()> {
        if self.t == 0 || self.y == 0 || self.z == 0 {
            return Err(Error::InvalidSpec(format!("all dimensions must be >= 1, got {self}")));
        }
        match self.checked_node_count() {
            Some(n) if n <= NODE_LIMIT => Ok(()),
            _ => Err(Error::Capacity {
                dims: self.to_string(),
                limit: NODE_LIMIT,
            }),
        }
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.t, self.y, self.z)
    }
}

impl FromStr for Dims {
    type Err = String;

    /// Parses `TxYxZ`, or `TxY` for a 2D lattice.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts = s
            .split(['x', 'X'])
            .map(|p| p.trim().parse::<u32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| format!("bad dimensions `{s}`: {e}"))?;
        match parts[..] {
            [t, y] => Ok(Dims::new(t, y, 1)),
            [t, y, z] => Ok(Dims::new(t, y, z)),
            _ => Err(format!("bad dimensions `{s}`: expected TxYxZ")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coord {
    pub t: u32,
    pub y: u32,
    pub z: u32,
}

impl Coord {
    pub const fn new(t: u32, y: u32, z: u32) -> Self {
        Coord { t, y, z }
    }

    /// Offset of this node within its layer.
    #[inline]
    pub fn yz(&self, dims: Dims) -> u32 {
        self.y * dims.z + self.z
    }

    #[inline]
    pub fn from_layer_offset(t: u32, yz: u32, dims: Dims) -> Self {
        Coord::new(t, yz / dims.z, yz % dims.z)
    }

    /// Whether `self` and `other` differ by a unit step along exactly one axis.
    pub fn is_adjacent(&self, other: &Coord) -> bool {
        let d = |a: u32, b: u32| a.abs_diff(b);
        d(self.t, other.t) + d(self.y, other.y) + d(self.z, other.z) == 1
    }
}

/// Open/closed state of a node's positive-direction edges, one bit per axis.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EdgeFlags(pub u8);

impl EdgeFlags {
    #[inline]
    pub fn is_open(self, axis: Axis) -> bool {
        self.0 & (1 << axis.index()) != 0
    }

    #[inline]
    pub fn count(self) -> u32 {
        self.0.count_ones()
    }
}

/// The reproducible description of one random lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    pub dims: Dims,
    pub p: f64,
    pub seed: u64,
    pub trial: u64,
}

impl LatticeSpec {
    pub fn new(dims: Dims, p: f64, seed: u64, trial: u64) -> Result<Self> {
        dims.validate()?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidSpec(format!("edge probability {p} is outside [0, 1]")));
        }
        Ok(LatticeSpec { dims, p, seed, trial })
    }
}

/// All lattices sharing dimensions, edge probability and master seed; members
/// are told apart by their trial index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeFamily {
    pub dims: Dims,
    pub p: f64,
    pub seed: u64,
}

impl LatticeFamily {
    pub fn new(dims: Dims, p: f64, seed: u64) -> Result<Self> {
        LatticeSpec::new(dims, p, seed, 0)?;
        Ok(LatticeFamily { dims, p, seed })
    }

    #[inline]
    pub fn member(&self, trial: u64) -> LatticeSpec {
        LatticeSpec {
            dims: self.dims,
            p: self.p,
            seed: self.seed,
            trial,
        }
    }

    pub fn with_p(&self, p: f64) -> Self {
        LatticeFamily { p, ..*self }
    }
}

const WORDS_PER_EDGE: u128 = 2;

/// Maps a 64-bit draw onto `[0, 1)` with 53 bits of resolution.
#[inline]
fn to_unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Counter-based source of per-edge uniform variates.
#[derive(Clone)]
pub(crate) struct EdgeField {
    rng: ChaCha8Rng,
    dims: Dims,
}

impl EdgeField {
    pub(crate) fn new(dims: Dims, seed: u64, trial: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        EdgeField { rng, dims }
    }

    #[inline]
    fn seek_edge(&mut self, node: u64, axis: usize) {
        self.rng
            .set_word_pos((node as u128 * 3 + axis as u128) * WORDS_PER_EDGE);
    }

    /// The uniform variate attached to the edge leaving `at` along `axis`,
    /// whether or not that edge exists.
    pub(crate) fn uniform(&mut self, at: Coord, axis: Axis) -> f64 {
        let node = at.t as u64 * self.dims.layer_size() as u64 + at.yz(self.dims) as u64;
        self.seek_edge(node, axis.index());
        to_unit(self.rng.next_u64())
    }

    /// Writes the edge flags of layer `t` into `out` (length `L_y * L_z`).
    pub(crate) fn fill_layer(&mut self, t: u32, p: f64, out: &mut [u8]) {
        let dims = self.dims;
        debug_assert_eq!(out.len(), dims.layer_size());
        self.seek_edge(t as u64 * dims.layer_size() as u64, 0);
        let has_t = t + 1 < dims.t;
        let mut i = 0;
        for y in 0..dims.y {
            let has_y = y + 1 < dims.y;
            for z in 0..dims.z {
                let has_z = z + 1 < dims.z;
                let ut = to_unit(self.rng.next_u64());
                let uy = to_unit(self.rng.next_u64());
                let uz = to_unit(self.rng.next_u64());
                out[i] = (has_t && ut < p) as u8
                    | (((has_y && uy < p) as u8) << 1)
                    | (((has_z && uz < p) as u8) << 2);
                i += 1;
            }
        }
    }
}

/// Uniform variate behind one edge of `spec`; opening edges iff `u < p` with
/// this shared field couples lattices of different `p` monotonically.
pub fn edge_uniform(spec: &LatticeSpec, at: Coord, axis: Axis) -> f64 {
    EdgeField::new(spec.dims, spec.seed, spec.trial).uniform(at, axis)
}

/// Anything that can report the edge flags of a node by layer and in-layer offset.
pub trait LayerSource {
    fn dims(&self) -> Dims;

    /// Raw [`EdgeFlags`] bytes of layer `t`, indexed by in-layer offset.
    fn layer_flags(&self, t: u32) -> &[u8];

    /// Positive-direction edge flags of node `(t, yz)`.
    #[inline]
    fn flags(&self, t: u32, yz: u32) -> EdgeFlags {
        EdgeFlags(self.layer_flags(t)[yz as usize])
    }
}

/// A fully materialized lattice.
#[derive(Debug, Clone)]
pub struct Lattice {
    spec: LatticeSpec,
    flags: Vec<u8>,
}

impl Lattice {
    pub fn generate(spec: &LatticeSpec) -> Result<Self> {
        let spec = LatticeSpec::new(spec.dims, spec.p, spec.seed, spec.trial)?;
        let dims = spec.dims;
        let layer = dims.layer_size();
        let mut flags = vec![0u8; dims.node_count()];
        let mut field = EdgeField::new(dims, spec.seed, spec.trial);
        for (t, chunk) in flags.chunks_exact_mut(layer).enumerate() {
            field.fill_layer(t as u32, spec.p, chunk);
        }
        Ok(Lattice { spec, flags })
    }

    /// Builds a lattice from explicit edge flags, one byte per node in
    /// t-major order. Flags pointing off the lattice are cleared.
    pub fn from_flags(dims: Dims, mut flags: Vec<u8>) -> Result<Self> {
        let spec = LatticeSpec::new(dims, 0.0, 0, 0)?;
        if flags.len() != dims.node_count() {
            return Err(Error::InvalidSpec(format!(
                "expected {} node flags, got {}",
                dims.node_count(),
                flags.len()
            )));
        }
        for (i, f) in flags.iter_mut().enumerate() {
            let c = Coord::from_layer_offset(
                (i / dims.layer_size()) as u32,
                (i % dims.layer_size()) as u32,
                dims,
            );
            let mut mask = *f & 0b111;
            if c.t + 1 >= dims.t {
                mask &= !1;
            }
            if c.y + 1 >= dims.y {
                mask &= !2;
            }
            if c.z + 1 >= dims.z {
                mask &= !4;
            }
            *f = mask;
        }
        Ok(Lattice { spec, flags })
    }

    /// Builds a lattice whose open edges are exactly `edges` (pairs of adjacent nodes).
    pub fn from_open_edges(dims: Dims, edges: &[(Coord, Coord)]) -> Result<Self> {
        let mut flags = vec![0u8; dims.node_count()];
        for &(a, b) in edges {
            if !a.is_adjacent(&b) {
                return Err(Error::InvalidSpec(format!("{a:?} and {b:?} are not adjacent")));
            }
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if hi.t >= dims.t || hi.y >= dims.y || hi.z >= dims.z {
                return Err(Error::InvalidSpec(format!("{hi:?} is outside {dims}")));
            }
            let bit = if hi.t != lo.t {
                1
            } else if hi.y != lo.y {
                2
            } else {
                4
            };
            flags[lo.t as usize * dims.layer_size() + lo.yz(dims) as usize] |= bit;
        }
        Lattice::from_flags(dims, flags)
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn dims(&self) -> Dims {
        self.spec.dims
    }

    pub fn node_count(&self) -> usize {
        self.flags.len()
    }

    pub fn open_edge_count(&self) -> u64 {
        self.flags.iter().map(|f| f.count_ones() as u64).sum()
    }

    /// Whether the edge from `at` to its neighbour one step along `+axis` is open.
    pub fn is_open(&self, at: Coord, axis: Axis) -> bool {
        self.flags(at.t, at.yz(self.dims())).is_open(axis)
    }

    /// Whether the adjacent nodes `a` and `b` are joined by an open edge.
    pub fn joined(&self, a: Coord, b: Coord) -> bool {
        if !a.is_adjacent(&b) {
            return false;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let axis = if hi.t != lo.t {
            Axis::T
        } else if hi.y != lo.y {
            Axis::Y
        } else {
            Axis::Z
        };
        self.is_open(lo, axis)
    }

    /// Flags of layer `t` as a slice.
    pub fn layer(&self, t: u32) -> &[u8] {
        let n = self.dims().layer_size();
        &self.flags[t as usize * n..(t as usize + 1) * n]
    }

    /// The induced subgraph on layers `first..=last`.
    pub fn block(&self, first: u32, last: u32) -> Result<BlockView<'_, Lattice>> {
        BlockView::new(self, first, last)
    }

    pub fn whole(&self) -> BlockView<'_, Lattice> {
        BlockView::new(self, 0, self.dims().t - 1).expect("full range is always valid")
    }
}

impl LayerSource for Lattice {
    #[inline]
    fn dims(&self) -> Dims {
        self.spec.dims
    }

    #[inline]
    fn layer_flags(&self, t: u32) -> &[u8] {
        self.layer(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(dims: Dims, p: f64, trial: u64) -> LatticeSpec {
        LatticeSpec::new(dims, p, 7, trial).unwrap()
    }

    #[test]
    fn potential_edge_formula() {
        assert_eq!(Dims::new(2, 1, 1).potential_edges(), 1);
        assert_eq!(Dims::cube(3).potential_edges(), 54);
        assert_eq!(Dims::cube(10).potential_edges(), 2700);
        assert_eq!(Dims::new(4, 3, 3).potential_edges(), 75);
    }

    #[test]
    fn full_and_empty_lattices() {
        let l = Lattice::generate(&spec(Dims::new(2, 1, 1), 1.0, 0)).unwrap();
        assert_eq!(l.open_edge_count(), 1);
        let l = Lattice::generate(&spec(Dims::cube(3), 0.0, 0)).unwrap();
        assert_eq!(l.node_count(), 27);
        assert_eq!(l.open_edge_count(), 0);
        let l = Lattice::generate(&spec(Dims::new(5, 4, 3), 1.0, 0)).unwrap();
        assert_eq!(l.open_edge_count(), Dims::new(5, 4, 3).potential_edges());
    }

    #[test]
    fn replay_is_identical() {
        let s = spec(Dims::new(12, 5, 4), 0.4, 3);
        let a = Lattice::generate(&s).unwrap();
        let b = Lattice::generate(&s).unwrap();
        assert_eq!(a.flags, b.flags);
        let c = Lattice::generate(&LatticeSpec { trial: 4, ..s }).unwrap();
        assert_ne!(a.flags, c.flags);
    }

    #[test]
    fn random_access_matches_layer_fill() {
        let s = spec(Dims::new(6, 3, 4), 0.5, 11);
        let l = Lattice::generate(&s).unwrap();
        for t in 0..6 {
            for y in 0..3 {
                for z in 0..4 {
                    let c = Coord::new(t, y, z);
                    for axis in Axis::ALL {
                        let inside = match axis {
                            Axis::T => t + 1 < 6,
                            Axis::Y => y + 1 < 3,
                            Axis::Z => z + 1 < 4,
                        };
                        let expect = inside && edge_uniform(&s, c, axis) < s.p;
                        assert_eq!(l.is_open(c, axis), expect, "{c:?} {axis}");
                    }
                }
            }
        }
    }

    #[test]
    fn mean_open_edges_is_binomial() {
        // 200 trials of a 10^3 lattice at p = 0.5: mean within 4 standard errors of 1350.
        let dims = Dims::cube(10);
        let n = dims.potential_edges() as f64;
        let trials = 200;
        let total: u64 = (0..trials)
            .map(|i| Lattice::generate(&spec(dims, 0.5, i)).unwrap().open_edge_count())
            .sum();
        let mean = total as f64 / trials as f64;
        let se = (n * 0.25 / trials as f64).sqrt();
        assert!((mean - 1350.0).abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn capacity_and_parameter_errors() {
        let huge = Dims::new(u32::MAX, u32::MAX, 2);
        assert!(matches!(
            LatticeSpec::new(huge, 0.5, 0, 0),
            Err(Error::Capacity { .. })
        ));
        assert!(LatticeSpec::new(Dims::new(0, 1, 1), 0.5, 0, 0).is_err());
        assert!(LatticeSpec::new(Dims::cube(2), 1.5, 0, 0).is_err());
    }

    #[test]
    fn dims_parse() {
        assert_eq!("1000x5x5".parse::<Dims>().unwrap(), Dims::elongated(1000, 5));
        assert_eq!("100x100".parse::<Dims>().unwrap(), Dims::square(100));
        assert!("10".parse::<Dims>().is_err());
        assert!("ax2x2".parse::<Dims>().is_err());
    }

    #[test]
    fn explicit_edges() {
        let dims = Dims::new(3, 2, 2);
        let c = |t, y, z| Coord::new(t, y, z);
        let l = Lattice::from_open_edges(dims, &[(c(0, 0, 0), c(1, 0, 0)), (c(2, 0, 0), c(1, 0, 0))]).unwrap();
        assert_eq!(l.open_edge_count(), 2);
        assert!(l.joined(c(1, 0, 0), c(2, 0, 0)));
        assert!(!l.joined(c(0, 0, 0), c(0, 1, 0)));
        assert!(Lattice::from_open_edges(dims, &[(c(0, 0, 0), c(2, 0, 0))]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn coupling_is_monotone(seed in 0u64..1000, trial in 0u64..1000, p1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0) {
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            let dims = Dims::new(7, 3, 3);
            let a = Lattice::generate(&LatticeSpec::new(dims, lo, seed, trial).unwrap()).unwrap();
            let b = Lattice::generate(&LatticeSpec::new(dims, hi, seed, trial).unwrap()).unwrap();
            for (x, y) in a.flags.iter().zip(&b.flags) {
                proptest::prop_assert_eq!(x & !y, 0);
            }
        }
    }
}
