use crate::error::{Error, Result};

use super::{BlockView, Dims, EdgeField, LatticeSpec, LayerSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Advance {
    /// The far layer moved forward by one.
    Advanced,
    /// The active block already contains the final layer.
    EndOfLattice,
}

/// Layer-by-layer view of a lattice that keeps only the active block
/// `B_{t, t+W}` (clamped to the last layer) in memory.
///
/// Layers live in a ring buffer of `min(W + 1, L_t)` slots. Reading a layer
/// that is not resident is a bug and trips a debug assertion.
pub struct LayerStream {
    spec: LatticeSpec,
    window: u32,
    field: EdgeField,
    slots: u32,
    buf: Vec<u8>,
    first: u32,
    last: u32,
}

impl LayerStream {
    pub fn open(spec: &LatticeSpec, window: u32) -> Result<Self> {
        let spec = LatticeSpec::new(spec.dims, spec.p, spec.seed, spec.trial)?;
        let dims = spec.dims;
        if window < 2 || window > dims.t {
            return Err(Error::WindowOutOfRange {
                window,
                length: dims.t,
            });
        }
        let slots = (window + 1).min(dims.t);
        let mut stream = LayerStream {
            spec,
            window,
            field: EdgeField::new(dims, spec.seed, spec.trial),
            slots,
            buf: vec![0; slots as usize * dims.layer_size()],
            first: 0,
            last: slots - 1,
        };
        for t in 0..slots {
            stream.reveal(t);
        }
        Ok(stream)
    }

    fn reveal(&mut self, t: u32) {
        let n = self.spec.dims.layer_size();
        let slot = (t % self.slots) as usize;
        let p = self.spec.p;
        self.field.fill_layer(t, p, &mut self.buf[slot * n..(slot + 1) * n]);
    }

    /// Drops layer `t` and reveals layer `t + W + 1`.
    pub fn advance(&mut self) -> Advance {
        if self.last + 1 >= self.spec.dims.t {
            return Advance::EndOfLattice;
        }
        self.first += 1;
        self.last += 1;
        self.reveal(self.last);
        Advance::Advanced
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    /// Current time `t`, the nearest resident layer.
    pub fn time(&self) -> u32 {
        self.first
    }

    /// Farthest resident layer.
    pub fn far_layer(&self) -> u32 {
        self.last
    }

    /// Node capacity of the ring buffer.
    pub fn buffered_nodes(&self) -> usize {
        self.buf.len()
    }

    pub fn is_resident(&self, t: u32) -> bool {
        (self.first..=self.last).contains(&t)
    }

    pub fn active_block(&self) -> BlockView<'_, LayerStream> {
        BlockView::new(self, self.first, self.last).expect("resident range is valid")
    }

    /// A sub-block of the resident layers.
    pub fn block(&self, first: u32, last: u32) -> Result<BlockView<'_, LayerStream>> {
        if first < self.first || last > self.last {
            return Err(Error::LayerBounds {
                first,
                last,
                layers: self.spec.dims.t,
            });
        }
        BlockView::new(self, first, last)
    }
}

impl LayerSource for LayerStream {
    #[inline]
    fn dims(&self) -> Dims {
        self.spec.dims
    }

    #[inline]
    fn layer_flags(&self, t: u32) -> &[u8] {
        debug_assert!(
            self.is_resident(t),
            "layer {t} read outside the active block [{}, {}]",
            self.first,
            self.last
        );
        let n = self.spec.dims.layer_size();
        let slot = (t % self.slots) as usize;
        &self.buf[slot * n..(slot + 1) * n]
    }
}

#[cfg(test)]
mod tests {
    use crate::lattice::Lattice;

    use super::*;

    fn spec(dims: Dims, p: f64) -> LatticeSpec {
        LatticeSpec::new(dims, p, 42, 5).unwrap()
    }

    #[test]
    fn window_bounds() {
        let s = spec(Dims::new(10, 2, 2), 0.5);
        assert!(LayerStream::open(&s, 1).is_err());
        assert!(LayerStream::open(&s, 11).is_err());
        assert!(LayerStream::open(&s, 10).is_ok());
    }

    #[test]
    fn full_window_covers_lattice() {
        let s = spec(Dims::new(10, 2, 2), 0.5);
        let mut st = LayerStream::open(&s, 10).unwrap();
        assert_eq!((st.time(), st.far_layer()), (0, 9));
        assert_eq!(st.advance(), Advance::EndOfLattice);
    }

    #[test]
    fn streaming_matches_whole_lattice() {
        let dims = Dims::new(100, 5, 5);
        let s = spec(dims, 0.45);
        let whole = Lattice::generate(&s).unwrap();
        let w = 10;
        let mut st = LayerStream::open(&s, w).unwrap();
        let mut steps = 0;
        loop {
            assert!(st.buffered_nodes() <= (w as usize + 2) * dims.layer_size());
            assert_eq!(st.far_layer() - st.time(), w);
            let active = st.active_block();
            let reference = whole.block(st.time(), st.far_layer()).unwrap();
            for t in st.time()..=st.far_layer() {
                for yz in 0..dims.layer_size() as u32 {
                    assert_eq!(st.flags(t, yz), whole.flags(t, yz));
                }
            }
            assert_eq!(active.open_edge_count(), reference.open_edge_count());
            for local in 0..active.node_count() as u32 {
                let mut a = Vec::new();
                let mut b = Vec::new();
                active.for_each_neighbour(local, |n| a.push(n));
                reference.for_each_neighbour(local, |n| b.push(n));
                assert_eq!(a, b, "{:?}", active.coord(local));
            }
            if st.advance() == Advance::EndOfLattice {
                break;
            }
            steps += 1;
        }
        assert_eq!(steps, 100 - 1 - w);
    }

    #[test]
    #[cfg(debug_assertions)]
    #[should_panic(expected = "outside the active block")]
    fn reading_dropped_layer_panics() {
        let s = spec(Dims::new(20, 3, 3), 0.5);
        let mut st = LayerStream::open(&s, 4).unwrap();
        st.advance();
        st.flags(0, 0);
    }
}
