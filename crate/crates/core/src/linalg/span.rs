use std::collections::BTreeMap;

use super::{numerical_rank, r, svd_thin, CMat, CVec, SparseVec, UnionFind, C64, ZERO};
use crate::error::Result;

/// GNS metric on `L²(N)^slots`: the Gram matrix of `N` repeated on every slot.
///
/// Ambient coordinate `slot * block + k` is coordinate `k` of slot `slot`.
#[derive(Clone, Copy, Debug)]
pub struct Metric<'a> {
    gram: &'a CMat,
    neighbors: &'a [Vec<usize>],
    diagonal: bool,
    slots: usize,
}

impl<'a> Metric<'a> {
    /// `neighbors[k]` lists the indices `k' != k` with `gram[k][k'] != 0`.
    pub fn new(gram: &'a CMat, neighbors: &'a [Vec<usize>], slots: usize) -> Self {
        let diagonal = neighbors.iter().all(|n| n.is_empty());
        Self {
            gram,
            neighbors,
            diagonal,
            slots,
        }
    }

    pub fn block(&self) -> usize {
        self.gram.nrows()
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn ambient_dim(&self) -> usize {
        self.slots * self.block()
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    fn g(&self, a: usize, b: usize) -> C64 {
        let m = self.block();
        if a / m != b / m {
            return ZERO;
        }
        self.gram[(a % m, b % m)]
    }

    /// `<x, y> = y^H K x`, linear in `x`.
    pub fn inner(&self, x: &SparseVec, y: &SparseVec) -> C64 {
        let mut s = ZERO;
        if self.diagonal {
            let (xe, ye) = (x.entries(), y.entries());
            let (mut i, mut j) = (0, 0);
            while i < xe.len() && j < ye.len() {
                match xe[i].0.cmp(&ye[j].0) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        s += ye[j].1.conj() * self.g(xe[i].0, xe[i].0) * xe[i].1;
                        i += 1;
                        j += 1;
                    }
                }
            }
            return s;
        }
        for &(a, xa) in x.iter() {
            for &(b, yb) in y.iter() {
                let k = self.g(b, a);
                if k != ZERO {
                    s += yb.conj() * k * xa;
                }
            }
        }
        s
    }

    pub fn norm(&self, x: &SparseVec) -> f64 {
        self.inner(x, x).re.max(0.0).sqrt()
    }

    /// Gram sub-block on the given ambient coordinates.
    fn sub_gram(&self, coords: &[usize]) -> CMat {
        let n = coords.len();
        CMat::from_fn(n, n, |i, j| self.g(coords[i], coords[j]))
    }

    fn coupled(&self, coord: usize) -> impl Iterator<Item = usize> + '_ {
        let m = self.block();
        let base = coord - coord % m;
        self.neighbors[coord % m].iter().map(move |&k| base + k)
    }
}

/// One connected block of a [`Span`].
#[derive(Clone, Debug)]
pub struct SpanComponent {
    /// Ambient coordinates touched by the block, increasing.
    pub coords: Vec<usize>,
    /// GNS-orthonormal basis of the block (columns, local coordinates).
    pub q: CMat,
    /// `K_block * q`, cached for projections.
    kq: CMat,
    /// Indices of the input vectors living in this block.
    pub members: Vec<usize>,
    /// `q = V_members * coeffs`.
    pub coeffs: CMat,
}

/// GNS-orthonormal basis of the span of a family of sparse vectors.
///
/// The family is partitioned into blocks that share no coordinate and no Gram
/// coupling; each block is orthonormalized by an SVD of its whitened vectors.
#[derive(Clone, Debug)]
pub struct Span {
    ambient: usize,
    components: Vec<SpanComponent>,
    lookup: Vec<u32>,
    smallest_kept: f64,
}

const NONE: u32 = u32::MAX;

impl Span {
    pub fn new(metric: &Metric<'_>, vectors: &[SparseVec]) -> Result<Span> {
        let ambient = metric.ambient_dim();
        let mut uf = UnionFind::new(ambient);
        let mut included = vec![false; ambient];
        let mut queue = Vec::new();
        for v in vectors {
            let mut it = v.iter();
            if let Some(&(first, _)) = it.next() {
                for &(j, _) in v.iter() {
                    uf.union(first, j);
                    if !included[j] {
                        included[j] = true;
                        queue.push(j);
                    }
                }
            }
        }
        while let Some(cidx) = queue.pop() {
            for nb in metric.coupled(cidx) {
                uf.union(cidx, nb);
                if !included[nb] {
                    included[nb] = true;
                    queue.push(nb);
                }
            }
        }
        let groups = uf.groups((0..ambient).filter(|&i| included[i]));
        let mut lookup = vec![NONE; ambient];
        let mut local = vec![0usize; ambient];
        for (g, coords) in groups.iter().enumerate() {
            for (l, &cidx) in coords.iter().enumerate() {
                lookup[cidx] = g as u32;
                local[cidx] = l;
            }
        }
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); groups.len()];
        for (vi, v) in vectors.iter().enumerate() {
            if let Some(&(first, _)) = v.iter().next() {
                members[lookup[first] as usize].push(vi);
            }
        }

        let mut components = Vec::new();
        let mut smallest_kept = f64::INFINITY;
        let mut new_lookup = vec![NONE; ambient];
        for (g, coords) in groups.into_iter().enumerate() {
            let mem = std::mem::take(&mut members[g]);
            let mut vmat = CMat::from_element(coords.len(), mem.len(), ZERO);
            for (col, &vi) in mem.iter().enumerate() {
                for &(j, z) in vectors[vi].iter() {
                    vmat[(local[j], col)] = z;
                }
            }
            let kblock = metric.sub_gram(&coords);
            let (coeffs, kept) = orthonormalizing_coeffs(&kblock, &vmat)?;
            if coeffs.ncols() == 0 {
                continue;
            }
            smallest_kept = smallest_kept.min(kept);
            let mut q = &vmat * &coeffs;
            let mut coeffs = coeffs;
            // One correction pass against accumulated rounding.
            let (fix, _) = orthonormalizing_coeffs(&kblock, &q)?;
            if fix.ncols() == q.ncols() {
                q = &q * &fix;
                coeffs = &coeffs * &fix;
            }
            let kq = &kblock * &q;
            let id = components.len() as u32;
            for &cidx in &coords {
                new_lookup[cidx] = id;
            }
            components.push(SpanComponent {
                coords,
                q,
                kq,
                members: mem,
                coeffs,
            });
        }
        Ok(Span {
            ambient,
            components,
            lookup: new_lookup,
            smallest_kept,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn rank(&self) -> usize {
        self.components.iter().map(|c| c.q.ncols()).sum()
    }

    pub fn components(&self) -> &[SpanComponent] {
        &self.components
    }

    pub fn smallest_kept_singular_value(&self) -> f64 {
        self.smallest_kept
    }

    /// Orthonormal basis vectors in ambient coordinates.
    pub fn basis(&self) -> Vec<SparseVec> {
        let mut out = Vec::with_capacity(self.rank());
        for comp in &self.components {
            for k in 0..comp.q.ncols() {
                let entries = comp
                    .coords
                    .iter()
                    .enumerate()
                    .map(|(l, &cidx)| (cidx, comp.q[(l, k)]))
                    .filter(|e| e.1 != ZERO)
                    .collect();
                out.push(SparseVec::from_sorted(entries));
            }
        }
        out
    }

    /// Each basis vector as a combination of the input vectors:
    /// `(members, coefficient column)` pairs in the order of [`Span::basis`].
    pub fn combinations(&self) -> Vec<(Vec<usize>, CVec)> {
        let mut out = Vec::with_capacity(self.rank());
        for comp in &self.components {
            for k in 0..comp.coeffs.ncols() {
                out.push((comp.members.clone(), comp.coeffs.column(k).into_owned()));
            }
        }
        out
    }

    /// Orthogonal projection of `v` onto the span.
    pub fn project(&self, v: &SparseVec) -> SparseVec {
        let mut by_comp: BTreeMap<u32, Vec<(usize, C64)>> = BTreeMap::new();
        for &(j, z) in v.iter() {
            let cidx = self.lookup[j];
            if cidx != NONE {
                by_comp.entry(cidx).or_default().push((j, z));
            }
        }
        let mut out: Vec<(usize, C64)> = Vec::new();
        for (cidx, entries) in by_comp {
            let comp = &self.components[cidx as usize];
            let mut coef = CVec::from_element(comp.q.ncols(), ZERO);
            for &(j, z) in &entries {
                let l = comp
                    .coords
                    .binary_search(&j)
                    .expect("coordinate in component");
                for k in 0..comp.q.ncols() {
                    coef[k] += comp.kq[(l, k)].conj() * z;
                }
            }
            let local = &comp.q * coef;
            out.extend(
                comp.coords
                    .iter()
                    .enumerate()
                    .map(|(l, &cidx)| (cidx, local[l]))
                    .filter(|e| e.1 != ZERO),
            );
        }
        out.sort_by_key(|e| e.0);
        SparseVec::from_sorted(out)
    }

    /// GNS norm of the component of `v` orthogonal to the span.
    pub fn residual(&self, metric: &Metric<'_>, v: &SparseVec) -> f64 {
        let p = self.project(v);
        metric.norm(&v.axpy(r(-1.0), &p))
    }
}

/// Coefficients turning the columns of `vmat` into a `K`-orthonormal basis of
/// their span, plus the smallest kept singular value.
fn orthonormalizing_coeffs(k: &CMat, vmat: &CMat) -> Result<(CMat, f64)> {
    let m = vmat.ncols();
    if m == 0 || vmat.nrows() == 0 {
        return Ok((CMat::from_element(m, 0, ZERO), f64::INFINITY));
    }
    let whitened = whiten(k, vmat);
    let (sv, v) = svd_thin(&whitened);
    let rank = numerical_rank(&sv, whitened.nrows(), m)?;
    let mut coeffs = CMat::from_element(m, rank, ZERO);
    for col in 0..rank {
        let inv = 1.0 / sv[col];
        for row in 0..m {
            coeffs[(row, col)] = v[(row, col)] * inv;
        }
    }
    let kept = if rank > 0 {
        sv[rank - 1]
    } else {
        f64::INFINITY
    };
    Ok((coeffs, kept))
}

/// `L^H * vmat` where `K = L L^H`.
fn whiten(k: &CMat, vmat: &CMat) -> CMat {
    let n = k.nrows();
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || k[(i, j)] == ZERO));
    if diagonal {
        let mut out = vmat.clone();
        for i in 0..n {
            let s = k[(i, i)].re.max(0.0).sqrt();
            for j in 0..vmat.ncols() {
                out[(i, j)] *= s;
            }
        }
        return out;
    }
    let chol = k
        .clone()
        .cholesky()
        .expect("validated algebras have positive definite Gram matrices");
    chol.l().adjoint() * vmat
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_metric(n: usize) -> (CMat, Vec<Vec<usize>>) {
        (CMat::identity(n, n), vec![Vec::new(); n])
    }

    #[test]
    fn span_rank_and_projection() {
        let (g, nb) = identity_metric(3);
        let metric = Metric::new(&g, &nb, 2);
        let vs = vec![
            SparseVec::from_sorted(vec![(0, r(1.0)), (1, r(1.0))]),
            SparseVec::from_sorted(vec![(0, r(2.0)), (1, r(2.0))]),
            SparseVec::from_sorted(vec![(4, r(3.0))]),
        ];
        let span = Span::new(&metric, &vs).unwrap();
        assert_eq!(span.rank(), 2);
        let probe = SparseVec::from_sorted(vec![(0, r(1.0)), (4, r(1.0)), (5, r(1.0))]);
        let p = span.project(&probe);
        assert!((p.get(0) - r(0.5)).norm() < 1e-12);
        assert!((p.get(1) - r(0.5)).norm() < 1e-12);
        assert!((p.get(4) - r(1.0)).norm() < 1e-12);
        assert_eq!(p.get(5), ZERO);
        assert!((span.residual(&metric, &probe) - 1.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn non_diagonal_gram_is_respected() {
        let g = CMat::from_row_slice(2, 2, &[r(2.0), r(1.0), r(1.0), r(2.0)]);
        let nb = vec![vec![1], vec![0]];
        let metric = Metric::new(&g, &nb, 1);
        let vs = vec![SparseVec::unit(0)];
        let span = Span::new(&metric, &vs).unwrap();
        let b = &span.basis()[0];
        assert!((metric.norm(b) - 1.0).abs() < 1e-12);
        // The coupled coordinate joins the block even though no vector uses it.
        assert_eq!(span.components()[0].coords, vec![0, 1]);
        let p = span.project(&SparseVec::unit(1));
        // <e1, e0> / <e0, e0> = 1/2
        assert!((p.get(0) - r(0.5)).norm() < 1e-12);
    }

    #[test]
    fn combinations_reproduce_basis() {
        let (g, nb) = identity_metric(2);
        let metric = Metric::new(&g, &nb, 1);
        let vs = vec![
            SparseVec::from_sorted(vec![(0, r(1.0)), (1, r(1.0))]),
            SparseVec::from_sorted(vec![(0, r(1.0))]),
        ];
        let span = Span::new(&metric, &vs).unwrap();
        for (b, (members, coef)) in span.basis().iter().zip(span.combinations()) {
            let rebuilt = SparseVec::linear_combination(
                members.iter().zip(coef.iter()).map(|(&m, &z)| (z, &vs[m])),
            );
            assert!(metric.norm(&rebuilt.axpy(r(-1.0), b)) < 1e-12);
        }
    }
}
