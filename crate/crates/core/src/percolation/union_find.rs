use crate::lattice::Axis;

/// Which block faces a set of nodes touches: bit `2a` is the low face of axis
/// `a`, bit `2a + 1` the high face.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct FaceSet(pub u8);

impl FaceSet {
    #[inline]
    pub fn low(axis: Axis) -> Self {
        FaceSet(1 << (2 * axis.index()))
    }

    #[inline]
    pub fn high(axis: Axis) -> Self {
        FaceSet(2 << (2 * axis.index()))
    }

    #[inline]
    pub fn touches_low(self, axis: Axis) -> bool {
        self.0 & Self::low(axis).0 != 0
    }

    #[inline]
    pub fn touches_high(self, axis: Axis) -> bool {
        self.0 & Self::high(axis).0 != 0
    }

    #[inline]
    pub fn spans(self, axis: Axis) -> bool {
        let both = Self::low(axis).0 | Self::high(axis).0;
        self.0 & both == both
    }
}

impl std::ops::BitOr for FaceSet {
    type Output = FaceSet;

    fn bitor(self, rhs: FaceSet) -> FaceSet {
        FaceSet(self.0 | rhs.0)
    }
}

impl std::ops::BitOrAssign for FaceSet {
    fn bitor_assign(&mut self, rhs: FaceSet) {
        self.0 |= rhs.0;
    }
}

/// Disjoint sets with union by size, path halving and per-set face flags.
#[derive(Debug, Clone, Default)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
    faces: Vec<FaceSet>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        let mut uf = UnionFind::default();
        uf.reset(n);
        uf
    }

    /// Reinitializes to `n` singletons without face flags, reusing storage.
    pub fn reset(&mut self, n: usize) {
        self.parent.clear();
        self.parent.extend(0..n as u32);
        self.size.clear();
        self.size.resize(n, 1);
        self.faces.clear();
        self.faces.resize(n, FaceSet::default());
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn set_faces(&mut self, x: u32, faces: FaceSet) {
        let r = self.find(x);
        self.faces[r as usize] |= faces;
    }

    #[inline]
    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Merges the sets of `a` and `b` and returns the surviving root.
    #[inline]
    pub fn union(&mut self, a: u32, b: u32) -> u32 {
        let mut ra = self.find(a);
        let mut rb = self.find(b);
        if ra == rb {
            return ra;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        let merged = self.faces[rb as usize];
        self.faces[ra as usize] |= merged;
        ra
    }

    /// Size of the set whose root is `root`.
    #[inline]
    pub fn root_size(&self, root: u32) -> u32 {
        self.size[root as usize]
    }

    #[inline]
    pub fn root_faces(&self, root: u32) -> FaceSet {
        self.faces[root as usize]
    }

    #[inline]
    pub fn is_root(&self, x: u32) -> bool {
        self.parent[x as usize] == x
    }

    /// Roots of all sets, in increasing index order.
    pub fn roots(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.parent.len() as u32).filter(move |&x| self.is_root(x))
    }
}
