use super::{numerical_rank, svd_full, CMat, SparseVec, UnionFind, C64, ZERO};
use crate::error::Result;

/// Orthonormal (Euclidean) basis of the kernel of a sparse system.
#[derive(Clone, Debug)]
pub struct Nullspace {
    pub vectors: Vec<SparseVec>,
    /// Rank of the coefficient matrix.
    pub rank: usize,
    /// Number of independent blocks the system split into.
    pub components: usize,
    /// Smallest singular value treated as nonzero over all blocks.
    pub smallest_kept: f64,
    /// Largest singular value treated as zero over all blocks.
    pub largest_dropped: f64,
}

/// Row count above which a block is first compressed by QR before its SVD.
const QR_COMPRESS_FACTOR: usize = 2;

/// Kernel of the system whose rows are `rows`, over `ncols` unknowns.
///
/// Unknowns coupled by a common row are merged with a union-find; each
/// connected block is solved by its own SVD. Monomial bases give blocks with a
/// handful of unknowns, so systems with tens of thousands of unknowns stay
/// cheap.
pub fn sparse_nullspace(ncols: usize, rows: &[SparseVec]) -> Result<Nullspace> {
    let mut uf = UnionFind::new(ncols);
    for row in rows {
        let mut it = row.iter();
        if let Some(&(first, _)) = it.next() {
            for &(j, _) in it {
                uf.union(first, j);
            }
        }
    }
    let groups = uf.groups(0..ncols);
    let mut local = vec![(0usize, 0usize); ncols];
    for (g, cols) in groups.iter().enumerate() {
        for (l, &j) in cols.iter().enumerate() {
            local[j] = (g, l);
        }
    }
    let mut rows_of: Vec<Vec<usize>> = vec![Vec::new(); groups.len()];
    for (ri, row) in rows.iter().enumerate() {
        if let Some(&(first, _)) = row.iter().next() {
            rows_of[local[first].0].push(ri);
        }
    }

    let mut out = Nullspace {
        vectors: Vec::new(),
        rank: 0,
        components: groups.len(),
        smallest_kept: f64::INFINITY,
        largest_dropped: 0.0,
    };
    for (g, cols) in groups.iter().enumerate() {
        let nc = cols.len();
        if rows_of[g].is_empty() {
            out.vectors.extend(cols.iter().map(|&j| SparseVec::unit(j)));
            continue;
        }
        let mut m = CMat::from_element(rows_of[g].len(), nc, ZERO);
        for (li, &ri) in rows_of[g].iter().enumerate() {
            for &(j, z) in rows[ri].iter() {
                m[(li, local[j].1)] += z;
            }
        }
        let nr = m.nrows();
        if nr > QR_COMPRESS_FACTOR * nc {
            m = compress_rows(m);
        }
        let (sv, v) = svd_full(&m);
        let rank = numerical_rank(&sv, nr, nc)?;
        out.rank += rank;
        if rank > 0 {
            out.smallest_kept = out.smallest_kept.min(sv[rank - 1]);
        }
        if let Some(&d) = sv.get(rank) {
            out.largest_dropped = out.largest_dropped.max(d);
        }
        for k in rank..nc {
            let entries: Vec<(usize, C64)> = cols
                .iter()
                .enumerate()
                .map(|(l, &j)| (j, v[(l, k)]))
                .filter(|e| e.1 != ZERO)
                .collect();
            out.vectors.push(SparseVec::from_sorted(entries));
        }
    }
    Ok(out)
}

/// Replaces a tall matrix by the triangular factor of its QR decomposition,
/// which has the same singular values and right singular vectors.
fn compress_rows(m: CMat) -> CMat {
    let nc = m.ncols();
    let mut r_acc: Option<CMat> = None;
    let chunk = 4 * nc.max(1);
    let mut start = 0;
    while start < m.nrows() {
        let len = chunk.min(m.nrows() - start);
        let block = m.rows(start, len).into_owned();
        let stacked = match r_acc.take() {
            Some(r) => {
                let mut s = CMat::from_element(r.nrows() + len, nc, ZERO);
                s.view_mut((0, 0), (r.nrows(), nc)).copy_from(&r);
                s.view_mut((r.nrows(), 0), (len, nc)).copy_from(&block);
                s
            }
            None => block,
        };
        r_acc = Some(if stacked.nrows() > nc {
            stacked.qr().r()
        } else {
            stacked
        });
        start += len;
    }
    r_acc.unwrap_or_else(|| CMat::from_element(0, nc, ZERO))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::r;

    #[test]
    fn splits_independent_blocks() {
        // x0 - x1 = 0 ; x2 + x3 = 0 ; x4 free
        let rows = vec![
            SparseVec::from_sorted(vec![(0, r(1.0)), (1, r(-1.0))]),
            SparseVec::from_sorted(vec![(2, r(1.0)), (3, r(1.0))]),
        ];
        let ns = sparse_nullspace(5, &rows).unwrap();
        assert_eq!(ns.rank, 2);
        assert_eq!(ns.vectors.len(), 3);
        assert_eq!(ns.components, 3);
        for v in &ns.vectors {
            for row in &rows {
                let dot: C64 = row.iter().map(|&(j, z)| z * v.get(j)).sum();
                assert!(dot.norm() < 1e-12);
            }
            assert!((v.coord_norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tall_blocks_are_compressed_consistently() {
        let mut rows = Vec::new();
        for k in 0..20 {
            let s = r(1.0 + k as f64);
            rows.push(SparseVec::from_sorted(vec![
                (0, s),
                (1, -s),
                (2, r(0.0) + s * 2.0),
            ]));
        }
        let ns = sparse_nullspace(3, &rows).unwrap();
        assert_eq!(ns.rank, 1);
        assert_eq!(ns.vectors.len(), 2);
    }
}
