use crate::lattice::{Axis, BlockView, EdgeFlags, LayerSource};

/// Breadth-first search over a block, with storage reused between searches.
///
/// Neighbours are expanded in the block's fixed `+t, -t, +y, -y, +z, -z`
/// order, so the parent tree (and hence every reconstructed shortest path)
/// is a deterministic function of the block contents.
#[derive(Debug, Default, Clone)]
pub struct BlockSearch {
    stamp: Vec<u32>,
    epoch: u32,
    parent: Vec<u32>,
    dist: Vec<u32>,
    order: Vec<u32>,
    source: u32,
    /// Open-neighbour bits per local node, `+t, -t, +y, -y, +z, -z`.
    links: Vec<u8>,
}

const PLUS_T: u8 = 1;
const MINUS_T: u8 = 2;
const PLUS_Y: u8 = 4;
const MINUS_Y: u8 = 8;
const PLUS_Z: u8 = 16;
const MINUS_Z: u8 = 32;

impl BlockSearch {
    pub fn new() -> Self {
        Self::default()
    }

    fn load_links<S: LayerSource + ?Sized>(&mut self, block: &BlockView<'_, S>) {
        let n = block.node_count();
        let layer = block.layer_size();
        let dz = block.dims().z;
        self.links.clear();
        self.links.resize(n, 0);
        let links = &mut self.links;
        let mut i = 0usize;
        for t in block.first()..=block.last() {
            for &f in block.source().layer_flags(t) {
                let f = EdgeFlags(f);
                if t < block.last() && f.is_open(Axis::T) {
                    links[i] |= PLUS_T;
                    links[i + layer as usize] |= MINUS_T;
                }
                if f.is_open(Axis::Y) {
                    links[i] |= PLUS_Y;
                    links[i + dz as usize] |= MINUS_Y;
                }
                if f.is_open(Axis::Z) {
                    links[i] |= PLUS_Z;
                    links[i + 1] |= MINUS_Z;
                }
                i += 1;
            }
        }
    }

    /// Searches `block` from the local node `source`.
    pub fn run<S: LayerSource + ?Sized>(&mut self, block: &BlockView<'_, S>, source: u32) {
        self.load_links(block);
        let layer = block.layer_size();
        let dz = block.dims().z;
        let n = block.node_count();
        if self.stamp.len() < n {
            self.stamp.resize(n, 0);
            self.parent.resize(n, 0);
            self.dist.resize(n, 0);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        self.source = source;
        self.order.clear();
        self.order.push(source);
        self.stamp[source as usize] = epoch;
        self.parent[source as usize] = source;
        self.dist[source as usize] = 0;
        let mut head = 0;
        while head < self.order.len() {
            let v = self.order[head];
            head += 1;
            let d = self.dist[v as usize] + 1;
            let bits = self.links[v as usize];
            if bits == 0 {
                continue;
            }
            let (stamp, parent, dist, order) = (&mut self.stamp, &mut self.parent, &mut self.dist, &mut self.order);
            let mut visit = |w: u32| {
                let i = w as usize;
                if stamp[i] != epoch {
                    stamp[i] = epoch;
                    parent[i] = v;
                    dist[i] = d;
                    order.push(w);
                }
            };
            // Same order as `BlockView::for_each_neighbour`.
            if bits & PLUS_T != 0 {
                visit(v + layer);
            }
            if bits & MINUS_T != 0 {
                visit(v - layer);
            }
            if bits & PLUS_Y != 0 {
                visit(v + dz);
            }
            if bits & MINUS_Y != 0 {
                visit(v - dz);
            }
            if bits & PLUS_Z != 0 {
                visit(v + 1);
            }
            if bits & MINUS_Z != 0 {
                visit(v - 1);
            }
        }
    }

    /// Nodes reached by the last search, in visiting order.
    pub fn visited(&self) -> &[u32] {
        &self.order
    }

    #[inline]
    pub fn reached(&self, local: u32) -> bool {
        self.stamp.get(local as usize) == Some(&self.epoch)
    }

    pub fn distance(&self, local: u32) -> Option<u32> {
        self.reached(local).then(|| self.dist[local as usize])
    }

    /// Writes the shortest path `source, ..., target` into `out`.
    pub fn path_to(&self, target: u32, out: &mut Vec<u32>) {
        debug_assert!(self.reached(target));
        out.clear();
        let mut v = target;
        out.push(v);
        while v != self.source {
            v = self.parent[v as usize];
            out.push(v);
        }
        out.reverse();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Coord, Dims, Lattice, LatticeSpec};

    #[test]
    fn distances_on_full_lattice_are_manhattan() {
        let lattice = Lattice::generate(&LatticeSpec::new(Dims::new(5, 4, 3), 1.0, 0, 0).unwrap()).unwrap();
        let block = lattice.whole();
        let mut bfs = BlockSearch::new();
        let src = Coord::new(1, 2, 1);
        bfs.run(&block, block.local(src));
        assert_eq!(bfs.visited().len(), 60);
        let mut path = Vec::new();
        for local in 0..60 {
            let c = block.coord(local);
            let manhattan = c.t.abs_diff(src.t) + c.y.abs_diff(src.y) + c.z.abs_diff(src.z);
            assert_eq!(bfs.distance(local), Some(manhattan));
            bfs.path_to(local, &mut path);
            assert_eq!(path.len() as u32, manhattan + 1);
            for w in path.windows(2) {
                assert!(lattice.joined(block.coord(w[0]), block.coord(w[1])));
            }
        }
    }

    #[test]
    fn visiting_order_matches_block_neighbour_order() {
        for trial in 0..20 {
            let spec = LatticeSpec::new(Dims::new(9, 5, 4), 0.45, 8, trial).unwrap();
            let lattice = Lattice::generate(&spec).unwrap();
            let block = lattice.block(2, 7).unwrap();
            let src = (trial as u32 * 7) % block.node_count() as u32;
            let mut seen = vec![false; block.node_count()];
            let mut order = vec![src];
            seen[src as usize] = true;
            let mut head = 0;
            while head < order.len() {
                let v = order[head];
                head += 1;
                block.for_each_neighbour(v, |w| {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        order.push(w);
                    }
                });
            }
            let mut bfs = BlockSearch::new();
            bfs.run(&block, src);
            assert_eq!(bfs.visited(), &order[..]);
        }
    }

    #[test]
    fn reruns_forget_previous_search() {
        let c = |t, y| Coord::new(t, y, 0);
        let lattice = Lattice::from_open_edges(Dims::new(3, 2, 1), &[(c(0, 0), c(1, 0))]).unwrap();
        let block = lattice.whole();
        let mut bfs = BlockSearch::new();
        bfs.run(&block, block.local(c(0, 0)));
        assert!(bfs.reached(block.local(c(1, 0))));
        bfs.run(&block, block.local(c(2, 1)));
        assert_eq!(bfs.visited().len(), 1);
        assert!(!bfs.reached(block.local(c(1, 0))));
    }
}
