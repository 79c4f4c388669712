use crate::error::{Error, Result};

use super::{Axis, Coord, Dims, LayerSource};

/// The induced subgraph on layers `first..=last` of some [`LayerSource`].
///
/// Nodes inside the block are addressed by a dense local index
/// `(t - first) * L_y * L_z + y * L_z + z`. Edges leaving the layer range are
/// not part of the view.
#[derive(Debug)]
pub struct BlockView<'a, S: LayerSource + ?Sized> {
    source: &'a S,
    dims: Dims,
    first: u32,
    last: u32,
}

impl<S: LayerSource + ?Sized> Clone for BlockView<'_, S> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<S: LayerSource + ?Sized> Copy for BlockView<'_, S> {}

impl<'a, S: LayerSource + ?Sized> BlockView<'a, S> {
    pub fn new(source: &'a S, first: u32, last: u32) -> Result<Self> {
        let dims = source.dims();
        if first > last || last >= dims.t {
            return Err(Error::LayerBounds {
                first,
                last,
                layers: dims.t,
            });
        }
        Ok(BlockView {
            source,
            dims,
            first,
            last,
        })
    }

    #[inline]
    pub fn source(&self) -> &'a S {
        self.source
    }

    /// Dimensions of the parent lattice.
    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn first(&self) -> u32 {
        self.first
    }

    #[inline]
    pub fn last(&self) -> u32 {
        self.last
    }

    #[inline]
    pub fn layers(&self) -> u32 {
        self.last - self.first + 1
    }

    /// Extent of the block along `axis`.
    pub fn extent(&self, axis: Axis) -> u32 {
        match axis {
            Axis::T => self.layers(),
            _ => self.dims.extent(axis),
        }
    }

    #[inline]
    pub fn layer_size(&self) -> u32 {
        self.dims.y * self.dims.z
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.layers() as usize * self.layer_size() as usize
    }

    pub fn contains(&self, c: Coord) -> bool {
        (self.first..=self.last).contains(&c.t) && c.y < self.dims.y && c.z < self.dims.z
    }

    #[inline]
    pub fn local(&self, c: Coord) -> u32 {
        debug_assert!(self.contains(c), "{c:?} outside block");
        (c.t - self.first) * self.layer_size() + c.yz(self.dims)
    }

    #[inline]
    pub fn coord(&self, local: u32) -> Coord {
        let layer = self.layer_size();
        Coord::from_layer_offset(self.first + local / layer, local % layer, self.dims)
    }

    /// Layer (absolute `t`) of a local index.
    #[inline]
    pub fn layer_of(&self, local: u32) -> u32 {
        self.first + local / self.layer_size()
    }

    /// Calls `f` with the local index of every neighbour of `local` joined by
    /// an open edge, in the fixed order `+t, -t, +y, -y, +z, -z`.
    #[inline]
    pub fn for_each_neighbour(&self, local: u32, mut f: impl FnMut(u32)) {
        let layer = self.layer_size();
        let dz = self.dims.z;
        let lt = local / layer;
        let yz = local % layer;
        let t = self.first + lt;
        let y = yz / dz;
        let z = yz % dz;
        let here = self.source.flags(t, yz);
        if t < self.last && here.is_open(Axis::T) {
            f(local + layer);
        }
        if t > self.first && self.source.flags(t - 1, yz).is_open(Axis::T) {
            f(local - layer);
        }
        if here.is_open(Axis::Y) {
            f(local + dz);
        }
        if y > 0 && self.source.flags(t, yz - dz).is_open(Axis::Y) {
            f(local - dz);
        }
        if here.is_open(Axis::Z) {
            f(local + 1);
        }
        if z > 0 && self.source.flags(t, yz - 1).is_open(Axis::Z) {
            f(local - 1);
        }
    }

    /// Calls `f(a, b)` once for every open edge inside the block, with `b` the
    /// positive-direction endpoint.
    pub fn for_each_edge(&self, mut f: impl FnMut(u32, u32)) {
        let layer = self.layer_size();
        let dz = self.dims.z;
        for t in self.first..=self.last {
            let base = (t - self.first) * layer;
            for yz in 0..layer {
                let flags = self.source.flags(t, yz);
                if flags.0 == 0 {
                    continue;
                }
                let a = base + yz;
                if t < self.last && flags.is_open(Axis::T) {
                    f(a, a + layer);
                }
                if flags.is_open(Axis::Y) {
                    f(a, a + dz);
                }
                if flags.is_open(Axis::Z) {
                    f(a, a + 1);
                }
            }
        }
    }

    /// Number of open edges incident to `local` that lie inside the block.
    pub fn degree(&self, local: u32) -> u32 {
        let mut n = 0;
        self.for_each_neighbour(local, |_| n += 1);
        n
    }

    pub fn open_edge_count(&self) -> u64 {
        let mut n = 0;
        self.for_each_edge(|_, _| n += 1);
        n
    }
}

#[cfg(test)]
mod tests {
    use crate::lattice::{Lattice, LatticeSpec};

    use super::*;

    fn full(dims: Dims) -> Lattice {
        Lattice::generate(&LatticeSpec::new(dims, 1.0, 0, 0).unwrap()).unwrap()
    }

    #[test]
    fn full_range_is_whole_lattice() {
        let l = full(Dims::new(6, 3, 2));
        let b = l.block(0, 5).unwrap();
        assert_eq!(b.node_count(), l.node_count());
        assert_eq!(b.open_edge_count(), l.open_edge_count());
    }

    #[test]
    fn single_layer_has_no_t_edges() {
        let l = full(Dims::new(6, 3, 3));
        let b = l.block(2, 2).unwrap();
        let mut t_edges = 0;
        b.for_each_edge(|a, c| {
            if b.coord(a).t != b.coord(c).t {
                t_edges += 1;
            }
        });
        assert_eq!(t_edges, 0);
        assert_eq!(b.open_edge_count(), 12);
    }

    #[test]
    fn interior_block_counts() {
        let l = full(Dims::new(10, 3, 3));
        let b = l.block(2, 5).unwrap();
        assert_eq!(b.node_count(), 36);
        assert_eq!(b.open_edge_count(), 75);
    }

    #[test]
    fn bounds_are_checked() {
        let l = full(Dims::new(4, 2, 2));
        assert!(l.block(0, 4).is_err());
        assert!(l.block(3, 2).is_err());
        assert!(l.block(3, 3).is_ok());
    }

    #[test]
    fn neighbour_order_and_symmetry() {
        let l = full(Dims::new(3, 3, 3));
        let b = l.whole();
        let centre = b.local(Coord::new(1, 1, 1));
        let mut seen = Vec::new();
        b.for_each_neighbour(centre, |n| seen.push(b.coord(n)));
        assert_eq!(
            seen,
            vec![
                Coord::new(2, 1, 1),
                Coord::new(0, 1, 1),
                Coord::new(1, 2, 1),
                Coord::new(1, 0, 1),
                Coord::new(1, 1, 2),
                Coord::new(1, 1, 0),
            ]
        );
        for a in 0..b.node_count() as u32 {
            b.for_each_neighbour(a, |n| {
                let mut back = false;
                b.for_each_neighbour(n, |m| back |= m == a);
                assert!(back);
            });
        }
    }
}
