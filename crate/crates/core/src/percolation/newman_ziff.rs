//! Newman-Ziff sweep: add edges one at a time in random order, note when a
//! spanning cluster first appears, then convolve with the binomial
//! distribution of the open-edge count to get `P(p)`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Axis, Coord, Dims};

use super::union_find::{FaceSet, UnionFind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub p: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCurve {
    pub dims: Dims,
    pub axis: Axis,
    pub realizations: u64,
    pub points: Vec<SweepPoint>,
}

/// Microcanonical spanning data for one lattice size.
#[derive(Debug, Clone)]
pub struct Microcanonical {
    dims: Dims,
    axis: Axis,
    edge_count: usize,
    /// Open-edge count at which each realization first spans, ascending.
    first_spanning: Vec<u32>,
    ln_factorial: Vec<f64>,
}

fn lattice_edges(dims: Dims) -> Vec<(u32, u32)> {
    let layer = dims.layer_size() as u32;
    let mut edges = Vec::with_capacity(dims.potential_edges() as usize);
    for t in 0..dims.t {
        for y in 0..dims.y {
            for z in 0..dims.z {
                let a = t * layer + y * dims.z + z;
                if t + 1 < dims.t {
                    edges.push((a, a + layer));
                }
                if y + 1 < dims.y {
                    edges.push((a, a + dims.z));
                }
                if z + 1 < dims.z {
                    edges.push((a, a + 1));
                }
            }
        }
    }
    edges
}

impl Microcanonical {
    pub fn run(dims: Dims, axis: Axis, realizations: u64, seed: u64) -> Result<Self> {
        crate::lattice::LatticeSpec::new(dims, 0.5, seed, 0)?;
        if realizations == 0 {
            return Err(Error::NoTrials);
        }
        let extent = dims.extent(axis);
        if extent < 2 {
            return Err(Error::DegenerateAxis(axis));
        }
        let edges = lattice_edges(dims);
        let n = dims.node_count();
        let faces: Vec<FaceSet> = (0..n as u32)
            .map(|i| {
                let layer = dims.layer_size() as u32;
                let c = Coord::from_layer_offset(i / layer, i % layer, dims);
                let x = match axis {
                    Axis::T => c.t,
                    Axis::Y => c.y,
                    Axis::Z => c.z,
                };
                if x == 0 {
                    FaceSet::low(axis)
                } else if x + 1 == extent {
                    FaceSet::high(axis)
                } else {
                    FaceSet::default()
                }
            })
            .collect();

        let mut first_spanning: Vec<u32> = (0..realizations)
            .into_par_iter()
            .map_init(
                || (UnionFind::new(n), edges.clone()),
                |(uf, order), r| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(r);
                    order.copy_from_slice(&edges);
                    order.shuffle(&mut rng);
                    uf.reset(n);
                    for (i, f) in faces.iter().enumerate() {
                        if f.0 != 0 {
                            uf.set_faces(i as u32, *f);
                        }
                    }
                    for (k, &(a, b)) in order.iter().enumerate() {
                        let root = uf.union(a, b);
                        if uf.root_faces(root).spans(axis) {
                            return k as u32 + 1;
                        }
                    }
                    unreachable!("the fully open lattice spans every axis of extent >= 2")
                },
            )
            .collect();
        first_spanning.sort_unstable();

        let mut ln_factorial = Vec::with_capacity(edges.len() + 1);
        let mut acc = 0.0f64;
        ln_factorial.push(0.0);
        for k in 1..=edges.len() {
            acc += (k as f64).ln();
            ln_factorial.push(acc);
        }

        Ok(Microcanonical {
            dims,
            axis,
            edge_count: edges.len(),
            first_spanning,
            ln_factorial,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn realizations(&self) -> u64 {
        self.first_spanning.len() as u64
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Fraction of realizations spanning once `open` edges have been added.
    pub fn spanning_fraction(&self, open: usize) -> f64 {
        let k = self.first_spanning.partition_point(|&f| f as usize <= open);
        k as f64 / self.first_spanning.len() as f64
    }

    /// Canonical spanning probability at edge probability `p`.
    pub fn probability(&self, p: f64) -> f64 {
        let m = self.edge_count;
        if p <= 0.0 {
            return self.spanning_fraction(0);
        }
        if p >= 1.0 {
            return self.spanning_fraction(m);
        }
        let (lp, lq) = (p.ln(), (-p).ln_1p());
        let ln_m = self.ln_factorial[m];
        let mut total = 0.0;
        let mut spanned = 0usize;
        let r = self.first_spanning.len() as f64;
        for n in 0..=m {
            while spanned < self.first_spanning.len() && self.first_spanning[spanned] as usize <= n {
                spanned += 1;
            }
            if spanned == 0 {
                continue;
            }
            let ln_pmf = ln_m - self.ln_factorial[n] - self.ln_factorial[m - n]
                + n as f64 * lp
                + (m - n) as f64 * lq;
            if ln_pmf > -745.0 {
                total += ln_pmf.exp() * spanned as f64;
            }
        }
        (total / r).clamp(0.0, 1.0)
    }

    pub fn curve(&self, grid: &[f64]) -> SweepCurve {
        SweepCurve {
            dims: self.dims,
            axis: self.axis,
            realizations: self.realizations(),
            points: grid
                .iter()
                .map(|&p| SweepPoint {
                    p,
                    probability: self.probability(p),
                })
                .collect(),
        }
    }
}

/// Spanning probability of `dims` along `axis` on the points of `grid`.
pub fn newman_ziff_sweep(
    dims: Dims,
    axis: Axis,
    realizations: u64,
    seed: u64,
    grid: &[f64],
) -> Result<SweepCurve> {
    Ok(Microcanonical::run(dims, axis, realizations, seed)?.curve(grid))
}

/// First `p` in `[lo, hi]` where the two spanning curves cross, located by a
/// scan over `steps` sub-intervals followed by bisection.
pub fn crossing_point(a: &Microcanonical, b: &Microcanonical, lo: f64, hi: f64, steps: usize) -> Option<f64> {
    let diff = |p: f64| a.probability(p) - b.probability(p);
    let h = (hi - lo) / steps as f64;
    let mut x0 = lo;
    let mut d0 = diff(x0);
    for i in 1..=steps {
        let x1 = lo + h * i as f64;
        let d1 = diff(x1);
        if d0 == 0.0 {
            return Some(x0);
        }
        if d0.signum() != d1.signum() {
            let (mut l, mut r, mut dl) = (x0, x1, d0);
            for _ in 0..60 {
                let mid = 0.5 * (l + r);
                let dm = diff(mid);
                if dm.signum() == dl.signum() {
                    l = mid;
                    dl = dm;
                } else {
                    r = mid;
                }
            }
            return Some(0.5 * (l + r));
        }
        x0 = x1;
        d0 = d1;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeFamily;
    use crate::percolation::estimate_spanning;

    #[test]
    fn endpoints() {
        let m = Microcanonical::run(Dims::cube(5), Axis::T, 50, 3).unwrap();
        assert_eq!(m.probability(0.0), 0.0);
        assert_eq!(m.probability(1.0), 1.0);
        assert_eq!(m.edge_count(), 300);
        let curve = m.curve(&[0.0, 0.25, 0.5, 0.75, 1.0]);
        for w in curve.points.windows(2) {
            assert!(w[0].probability <= w[1].probability + 1e-12);
        }
    }

    #[test]
    fn degenerate_axis_rejected() {
        assert_eq!(
            Microcanonical::run(Dims::square(5), Axis::Z, 10, 0).unwrap_err(),
            Error::DegenerateAxis(Axis::Z)
        );
        assert_eq!(Microcanonical::run(Dims::square(5), Axis::T, 0, 0).unwrap_err(), Error::NoTrials);
    }

    #[test]
    fn one_edge_lattice_is_exact() {
        // A 2x1x1 lattice spans iff its only edge is open: P(p) = p.
        let m = Microcanonical::run(Dims::new(2, 1, 1), Axis::T, 10, 0).unwrap();
        for p in [0.1, 0.37, 0.9] {
            assert!((m.probability(p) - p).abs() < 1e-12);
        }
    }

    #[test]
    fn convolution_matches_direct_estimates() {
        let dims = Dims::cube(8);
        let nz = Microcanonical::run(dims, Axis::T, 4000, 17).unwrap();
        for p in [0.2, 0.25, 0.3] {
            let direct = estimate_spanning(&LatticeFamily::new(dims, p, 5).unwrap(), Axis::T, 2000).unwrap();
            let canon = nz.probability(p);
            // Wilson-style half-width for the sweep, from its realization count.
            let half = 1.96 * (canon * (1.0 - canon) / 4000.0).sqrt() + 1e-3;
            assert!(
                (canon - direct.point).abs() <= half + direct.half_width(),
                "p={p}: sweep {canon} vs direct {direct:?}"
            );
        }
    }

    #[test]
    fn square_lattice_threshold() {
        let a = Microcanonical::run(Dims::square(50), Axis::T, 2000, 1).unwrap();
        let b = Microcanonical::run(Dims::square(100), Axis::T, 2000, 2).unwrap();
        let pc = crossing_point(&a, &b, 0.4, 0.6, 40).unwrap();
        assert!((pc - 0.5).abs() <= 0.01, "crossing at {pc}");
    }
}
