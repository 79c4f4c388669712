//! Connected components, spanning clusters and their Monte Carlo statistics.

mod newman_ziff;
mod union_find;

use crate::error::{Error, Result};
use crate::lattice::{Axis, BlockView, Coord, Dims, Lattice, LatticeFamily, LayerSource};
use crate::stats::{estimate_with, Estimate, ThresholdSearch};

pub use newman_ziff::{crossing_point, newman_ziff_sweep, Microcanonical, SweepCurve, SweepPoint};
pub use union_find::{FaceSet, UnionFind};

/// Faces of the block touched by the node at local index `local`.
#[inline]
fn node_faces<S: LayerSource + ?Sized>(block: &BlockView<'_, S>, local: u32) -> FaceSet {
    let c = block.coord(local);
    let dims = block.dims();
    let mut f = FaceSet::default();
    if c.t == block.first() {
        f |= FaceSet::low(Axis::T);
    }
    if c.t == block.last() {
        f |= FaceSet::high(Axis::T);
    }
    if c.y == 0 {
        f |= FaceSet::low(Axis::Y);
    }
    if c.y + 1 == dims.y {
        f |= FaceSet::high(Axis::Y);
    }
    if c.z == 0 {
        f |= FaceSet::low(Axis::Z);
    }
    if c.z + 1 == dims.z {
        f |= FaceSet::high(Axis::Z);
    }
    f
}

/// Union-find over a block, kept around so Monte Carlo loops can reuse storage.
#[derive(Debug, Default, Clone)]
pub struct Clusters {
    uf: UnionFind,
}

impl Clusters {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds the clusters of `block`, with face flags on every root.
    pub fn analyze<S: LayerSource + ?Sized>(&mut self, block: &BlockView<'_, S>) -> &mut UnionFind {
        let n = block.node_count();
        self.uf.reset(n);
        for local in 0..n as u32 {
            let f = node_faces(block, local);
            if f.0 != 0 {
                self.uf.set_faces(local, f);
            }
        }
        let uf = &mut self.uf;
        block.for_each_edge(|a, b| {
            uf.union(a, b);
        });
        &mut self.uf
    }

    pub fn union_find(&mut self) -> &mut UnionFind {
        &mut self.uf
    }
}

/// Node to component map of one block, with per-component sizes and face flags.
#[derive(Debug, Clone)]
pub struct ComponentLabeling {
    first: u32,
    dims: Dims,
    labels: Vec<u32>,
    sizes: Vec<u32>,
    faces: Vec<FaceSet>,
}

impl ComponentLabeling {
    pub fn component_count(&self) -> usize {
        self.sizes.len()
    }

    /// Component id of every node, indexed by block-local index.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn component_of(&self, c: Coord) -> u32 {
        let local = (c.t - self.first) * self.dims.y * self.dims.z + c.yz(self.dims);
        self.labels[local as usize]
    }

    pub fn size(&self, component: u32) -> u32 {
        self.sizes[component as usize]
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    pub fn faces(&self, component: u32) -> FaceSet {
        self.faces[component as usize]
    }

    pub fn largest(&self) -> u32 {
        self.sizes.iter().copied().max().unwrap_or(0)
    }

    /// Number of components touching both faces along `axis`.
    pub fn spanning_count(&self, axis: Axis) -> usize {
        self.faces.iter().filter(|f| f.spans(axis)).count()
    }
}

pub fn label_components<S: LayerSource + ?Sized>(block: &BlockView<'_, S>) -> ComponentLabeling {
    let mut clusters = Clusters::new();
    let uf = clusters.analyze(block);
    let n = block.node_count();
    let mut root_label = vec![u32::MAX; n];
    let mut labels = Vec::with_capacity(n);
    let mut sizes = Vec::new();
    let mut faces = Vec::new();
    for local in 0..n as u32 {
        let r = uf.find(local);
        let slot = &mut root_label[r as usize];
        if *slot == u32::MAX {
            *slot = sizes.len() as u32;
            sizes.push(uf.root_size(r));
            faces.push(uf.root_faces(r));
        }
        labels.push(*slot);
    }
    ComponentLabeling {
        first: block.first(),
        dims: block.dims(),
        labels,
        sizes,
        faces,
    }
}

fn check_axis<S: LayerSource + ?Sized>(block: &BlockView<'_, S>, axis: Axis) -> Result<()> {
    if block.extent(axis) < 2 {
        return Err(Error::DegenerateAxis(axis));
    }
    Ok(())
}

fn end_to_end_in(uf: &UnionFind, axis: Axis) -> usize {
    uf.roots().filter(|&r| uf.root_faces(r).spans(axis)).count()
}

/// Whether some component touches both faces of `block` along `axis`.
pub fn spans<S: LayerSource + ?Sized>(block: &BlockView<'_, S>, axis: Axis) -> Result<bool> {
    Ok(count_end_to_end(block, axis)? > 0)
}

/// Number of distinct components with nodes on both extreme faces along `axis`.
pub fn count_end_to_end<S: LayerSource + ?Sized>(block: &BlockView<'_, S>, axis: Axis) -> Result<usize> {
    check_axis(block, axis)?;
    let mut clusters = Clusters::new();
    Ok(end_to_end_in(clusters.analyze(block), axis))
}

pub fn largest_component_size(lattice: &Lattice) -> usize {
    let mut clusters = Clusters::new();
    let uf = clusters.analyze(&lattice.whole());
    uf.roots().map(|r| uf.root_size(r)).max().unwrap_or(0) as usize
}

/// Monte Carlo estimate of an end-to-end component statistic over trials
/// `0..trials` of `family`.
fn estimate_by_count(
    family: &LatticeFamily,
    axis: Axis,
    trials: u64,
    accept: impl Fn(usize) -> bool + Sync + Send,
) -> Result<Estimate> {
    if family.dims.extent(axis) < 2 {
        return Err(Error::DegenerateAxis(axis));
    }
    estimate_with(trials, Clusters::new, |clusters, trial| {
        let lattice = Lattice::generate(&family.member(trial)).expect("family was validated");
        let uf = clusters.analyze(&lattice.whole());
        accept(end_to_end_in(uf, axis))
    })
}

/// Probability that a spanning cluster exists along `axis`.
pub fn estimate_spanning(family: &LatticeFamily, axis: Axis, trials: u64) -> Result<Estimate> {
    estimate_by_count(family, axis, trials, |n| n >= 1)
}

/// Probability of exactly one end-to-end component along `t`.
pub fn estimate_unique_end_to_end(family: &LatticeFamily, trials: u64) -> Result<Estimate> {
    estimate_by_count(family, Axis::T, trials, |n| n == 1)
}

/// Parameters of the minimum side length search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideLengthQuery {
    pub p: f64,
    pub length: u32,
    pub target: f64,
    pub trials: u64,
    pub cap: u32,
    pub seed: u64,
}

/// Smallest `L` for which an `L_t x L x L` block spans along `t` with
/// probability at least `target`, searching upward from `L = 1`.
pub fn find_min_side(q: &SideLengthQuery) -> Result<ThresholdSearch> {
    let mut probes = Vec::new();
    for side in 1..=q.cap {
        let family = LatticeFamily::new(Dims::elongated(q.length, side), q.p, q.seed)?;
        let est = estimate_spanning(&family, Axis::T, q.trials)?;
        probes.push((side, est));
        if est.point >= q.target {
            return Ok(ThresholdSearch {
                found: Some(side),
                cap: q.cap,
                probes,
            });
        }
    }
    Ok(ThresholdSearch {
        found: None,
        cap: q.cap,
        probes,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::VecDeque;

    use super::*;
    use crate::lattice::LatticeSpec;

    /// Flood-fill labels; used as an independent oracle for the union-find.
    fn flood_fill(lattice: &Lattice) -> Vec<u32> {
        let dims = lattice.dims();
        let n = lattice.node_count();
        let idx = |c: Coord| c.t as usize * dims.layer_size() + c.yz(dims) as usize;
        let coord = |i: usize| {
            Coord::from_layer_offset((i / dims.layer_size()) as u32, (i % dims.layer_size()) as u32, dims)
        };
        let mut label = vec![u32::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if label[s] != u32::MAX {
                continue;
            }
            label[s] = next;
            let mut q = VecDeque::from([s]);
            while let Some(i) = q.pop_front() {
                let c = coord(i);
                for (dt, dy, dz) in [(1i64, 0i64, 0i64), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)] {
                    let (t, y, z) = (c.t as i64 + dt, c.y as i64 + dy, c.z as i64 + dz);
                    if t < 0 || y < 0 || z < 0 || t >= dims.t as i64 || y >= dims.y as i64 || z >= dims.z as i64 {
                        continue;
                    }
                    let d = Coord::new(t as u32, y as u32, z as u32);
                    let j = idx(d);
                    if label[j] == u32::MAX && lattice.joined(c, d) {
                        label[j] = next;
                        q.push_back(j);
                    }
                }
            }
            next += 1;
        }
        label
    }

    fn same_partition(a: &[u32], b: &[u32]) -> bool {
        let mut fwd = std::collections::HashMap::new();
        let mut back = std::collections::HashMap::new();
        a.iter().zip(b).all(|(x, y)| {
            *fwd.entry(*x).or_insert(*y) == *y && *back.entry(*y).or_insert(*x) == *x
        })
    }

    fn generated(dims: Dims, p: f64, trial: u64) -> Lattice {
        Lattice::generate(&LatticeSpec::new(dims, p, 99, trial).unwrap()).unwrap()
    }

    #[test]
    fn full_and_empty_blocks() {
        let full = generated(Dims::new(5, 3, 2), 1.0, 0);
        let lab = label_components(&full.whole());
        assert_eq!(lab.component_count(), 1);
        assert_eq!(lab.largest(), 30);
        let empty = generated(Dims::new(5, 3, 2), 0.0, 0);
        let lab = label_components(&empty.whole());
        assert_eq!(lab.component_count(), 30);
        assert!(lab.sizes().iter().all(|&s| s == 1));
        for axis in Axis::ALL {
            assert!(spans(&full.whole(), axis).unwrap());
            assert!(!spans(&empty.whole(), axis).unwrap());
        }
        assert_eq!(count_end_to_end(&full.whole(), Axis::T).unwrap(), 1);
        assert_eq!(count_end_to_end(&empty.whole(), Axis::T).unwrap(), 0);
        assert_eq!(largest_component_size(&full), 30);
        assert_eq!(largest_component_size(&empty), 1);
    }

    #[test]
    fn exhaustive_two_cube_matches_flood_fill() {
        let dims = Dims::cube(2);
        // Enumerate the 12 potential edges of the 2x2x2 cube.
        let mut edges = Vec::new();
        for t in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    let c = Coord::new(t, y, z);
                    if t == 0 {
                        edges.push((c, Coord::new(1, y, z)));
                    }
                    if y == 0 {
                        edges.push((c, Coord::new(t, 1, z)));
                    }
                    if z == 0 {
                        edges.push((c, Coord::new(t, y, 1)));
                    }
                }
            }
        }
        assert_eq!(edges.len(), 12);
        for mask in 0u32..1 << 12 {
            let open: Vec<_> = (0..12).filter(|i| mask >> i & 1 == 1).map(|i| edges[i]).collect();
            let lattice = Lattice::from_open_edges(dims, &open).unwrap();
            let lab = label_components(&lattice.whole());
            let oracle = flood_fill(&lattice);
            assert!(same_partition(lab.labels(), &oracle), "mask {mask:#x}");
            let total: u32 = lab.sizes().iter().sum();
            assert_eq!(total, 8);
            assert_eq!(lab.component_count() as u32, oracle.iter().max().unwrap() + 1);
        }
    }

    #[test]
    fn random_four_cubes_match_flood_fill() {
        for trial in 0..1000 {
            let p = [0.2, 0.35, 0.5, 0.7][trial as usize % 4];
            let lattice = generated(Dims::cube(4), p, trial);
            let lab = label_components(&lattice.whole());
            assert!(same_partition(lab.labels(), &flood_fill(&lattice)), "trial {trial}");
        }
    }

    #[test]
    fn straight_chain_spans_only_t() {
        let c = |t, y, z| Coord::new(t, y, z);
        let lattice = Lattice::from_open_edges(
            Dims::new(3, 2, 2),
            &[(c(0, 0, 0), c(1, 0, 0)), (c(1, 0, 0), c(2, 0, 0))],
        )
        .unwrap();
        let b = lattice.whole();
        assert!(spans(&b, Axis::T).unwrap());
        assert!(!spans(&b, Axis::Y).unwrap());
        assert!(!spans(&b, Axis::Z).unwrap());
    }

    #[test]
    fn two_disjoint_chains() {
        let c = |t, y| Coord::new(t, y, 0);
        let lattice = Lattice::from_open_edges(
            Dims::new(3, 3, 1),
            &[
                (c(0, 0), c(1, 0)),
                (c(1, 0), c(2, 0)),
                (c(0, 2), c(1, 2)),
                (c(1, 2), c(2, 2)),
            ],
        )
        .unwrap();
        assert_eq!(count_end_to_end(&lattice.whole(), Axis::T).unwrap(), 2);
        let lab = label_components(&lattice.whole());
        assert_eq!(lab.spanning_count(Axis::T), 2);
    }

    #[test]
    fn single_layer_is_degenerate() {
        let lattice = generated(Dims::new(4, 3, 1), 0.5, 0);
        assert_eq!(spans(&lattice.block(1, 1).unwrap(), Axis::T), Err(Error::DegenerateAxis(Axis::T)));
        assert_eq!(count_end_to_end(&lattice.whole(), Axis::Z), Err(Error::DegenerateAxis(Axis::Z)));
    }

    #[test]
    fn spans_iff_end_to_end() {
        for trial in 0..300 {
            let lattice = generated(Dims::new(12, 4, 3), 0.35, trial);
            for axis in Axis::ALL {
                let b = lattice.whole();
                assert_eq!(spans(&b, axis).unwrap(), count_end_to_end(&b, axis).unwrap() >= 1);
            }
        }
    }

    #[test]
    fn coupled_spanning_is_monotone() {
        let dims = Dims::new(15, 4, 4);
        for trial in 0..200 {
            let lo = generated(dims, 0.3, trial);
            let hi = generated(dims, 0.45, trial);
            assert!(lo.open_edge_count() <= hi.open_edge_count());
            if spans(&lo.whole(), Axis::T).unwrap() {
                assert!(spans(&hi.whole(), Axis::T).unwrap());
            }
        }
    }

    #[test]
    fn estimate_at_certainty() {
        let fam = LatticeFamily::new(Dims::elongated(50, 3), 1.0, 1).unwrap();
        let e = estimate_spanning(&fam, Axis::T, 20).unwrap();
        assert_eq!(e.point, 1.0);
        let e = estimate_unique_end_to_end(&fam, 20).unwrap();
        assert_eq!(e.point, 1.0);
        let fam = fam.with_p(0.0);
        assert_eq!(estimate_unique_end_to_end(&fam, 20).unwrap().point, 0.0);
        assert_eq!(estimate_spanning(&fam, Axis::T, 0), Err(Error::NoTrials));
    }

    #[test]
    fn min_side_at_p_one() {
        let q = SideLengthQuery {
            p: 1.0,
            length: 1000,
            target: 0.95,
            trials: 10,
            cap: 5,
            seed: 0,
        };
        assert_eq!(find_min_side(&q).unwrap().found, Some(1));
        let q = SideLengthQuery { p: 0.1, length: 200, cap: 3, ..q };
        let r = find_min_side(&q).unwrap();
        assert_eq!((r.found, r.cap, r.probes.len()), (None, 3, 3));
    }

    #[test]
    fn largest_component_scaling_in_2d() {
        // sqrt|C| grows linearly in L above the 2D threshold and sub-linearly below.
        let sides = [20u32, 40, 80];
        let mean_root = |p: f64, side: u32| {
            let trials = 20;
            (0..trials)
                .map(|i| (largest_component_size(&generated(Dims::square(side), p, i)) as f64).sqrt())
                .sum::<f64>()
                / trials as f64
        };
        let slope = |p: f64| {
            let pts: Vec<(f64, f64)> = sides.iter().map(|&l| (l as f64, mean_root(p, l))).collect();
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            sxy / sxx
        };
        let super_slope = slope(0.7);
        let sub_slope = slope(0.3);
        // Above threshold the giant component holds a fixed fraction of nodes.
        assert!(super_slope > 0.8, "{super_slope}");
        assert!(sub_slope < 0.1, "{sub_slope}");
    }
}
