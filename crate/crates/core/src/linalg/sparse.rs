use super::{zeros, CVec, C64, ZERO};

/// Sparse complex vector with strictly increasing indices and no stored zeros.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVec {
    entries: Vec<(usize, C64)>,
}

impl SparseVec {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from entries that are already sorted, unique and nonzero.
    pub fn from_sorted(entries: Vec<(usize, C64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        Self { entries }
    }

    pub fn from_dense(v: &CVec) -> Self {
        let entries = v
            .iter()
            .enumerate()
            .filter(|(_, z)| **z != ZERO)
            .map(|(i, z)| (i, *z))
            .collect();
        Self { entries }
    }

    pub fn unit(i: usize) -> Self {
        Self {
            entries: vec![(i, C64::new(1.0, 0.0))],
        }
    }

    pub fn to_dense(&self, n: usize) -> CVec {
        let mut v = zeros(n);
        for &(i, z) in &self.entries {
            v[i] = z;
        }
        v
    }

    pub fn entries(&self) -> &[(usize, C64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = &(usize, C64)> {
        self.entries.iter()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize) -> C64 {
        match self.entries.binary_search_by_key(&i, |e| e.0) {
            Ok(p) => self.entries[p].1,
            Err(_) => ZERO,
        }
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|e| e.0)
    }

    pub fn scale(&self, s: C64) -> SparseVec {
        if s == ZERO {
            return SparseVec::new();
        }
        Self {
            entries: self.entries.iter().map(|&(i, z)| (i, z * s)).collect(),
        }
    }

    /// Euclidean (coordinate) norm.
    pub fn coord_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.1.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.1.norm()).fold(0.0, f64::max)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: C64, other: &SparseVec) -> SparseVec {
        let mut acc = SparseAccumulator::with_capacity(self.nnz() + other.nnz());
        acc.add_vec(ONE_C, self);
        acc.add_vec(s, other);
        acc.finish()
    }

    /// Re-indexes every entry through `f`, summing collisions.
    pub fn map_indices(&self, f: impl Fn(usize) -> usize) -> SparseVec {
        let mut acc = SparseAccumulator::with_capacity(self.nnz());
        for &(i, z) in &self.entries {
            acc.push(f(i), z);
        }
        acc.finish()
    }

    /// Sum of a list of scaled sparse vectors.
    pub fn linear_combination<'a>(
        terms: impl IntoIterator<Item = (C64, &'a SparseVec)>,
    ) -> SparseVec {
        let mut acc = SparseAccumulator::default();
        for (s, v) in terms {
            acc.add_vec(s, v);
        }
        acc.finish()
    }
}

const ONE_C: C64 = C64 { re: 1.0, im: 0.0 };

/// Collects `(index, value)` contributions and merges them into a [`SparseVec`].
#[derive(Default)]
pub struct SparseAccumulator {
    raw: Vec<(usize, C64)>,
}

impl SparseAccumulator {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            raw: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, i: usize, z: C64) {
        if z != ZERO {
            self.raw.push((i, z));
        }
    }

    pub fn add_vec(&mut self, s: C64, v: &SparseVec) {
        if s == ZERO {
            return;
        }
        for &(i, z) in v.entries() {
            self.push(i, s * z);
        }
    }

    pub fn finish(mut self) -> SparseVec {
        // Stable sort keeps the summation order deterministic.
        self.raw.sort_by_key(|e| e.0);
        let mut entries: Vec<(usize, C64)> = Vec::with_capacity(self.raw.len());
        for (i, z) in self.raw {
            match entries.last_mut() {
                Some(last) if last.0 == i => last.1 += z,
                _ => entries.push((i, z)),
            }
        }
        entries.retain(|e| e.1 != ZERO);
        SparseVec { entries }
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] || (self.size[ra] == self.size[rb] && rb < ra) {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }

    /// Groups `items` by root, ordered by the smallest item of each group.
    pub fn groups(&mut self, items: impl IntoIterator<Item = usize>) -> Vec<Vec<usize>> {
        let mut by_root: std::collections::BTreeMap<usize, usize> = Default::default();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut sorted: Vec<usize> = items.into_iter().collect();
        sorted.sort_unstable();
        sorted.dedup();
        for x in sorted {
            let root = self.find(x);
            let slot = *by_root.entry(root).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[slot].push(x);
        }
        groups
    }
}
