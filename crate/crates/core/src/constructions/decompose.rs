use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GroupAction;
use crate::algebra::FDAlgebra;
use crate::error::{Error, Result};
use crate::group::characters;
use crate::linalg::{c, max_abs_vec, r, sparse_nullspace, CMat, CVec, Span, SparseVec, C64, ZERO};

/// One simple summand `M_n(C)` with trace weight `α`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub size: usize,
    pub weight: f64,
}

/// A simple summand together with its minimal central projection.
#[derive(Clone, Debug)]
pub struct CentralBlock {
    pub projection: CVec,
    pub size: usize,
    pub weight: f64,
}

const DECOMPOSE_ATTEMPTS: u64 = 32;
const EIGEN_SEPARATION: f64 = 1e-6;
const SQUARE_TOL: f64 = 1e-6;

/// Block sizes and weights of a finite-dimensional tracial *-algebra, sorted
/// by `(n, α)` descending.
pub fn multimatrix_decompose(a: &FDAlgebra) -> Result<Vec<Block>> {
    Ok(central_projections(a)?
        .into_iter()
        .map(|b| Block {
            size: b.size,
            weight: b.weight,
        })
        .collect())
}

/// Minimal central projections with their block sizes and weights.
pub fn central_projections(a: &FDAlgebra) -> Result<Vec<CentralBlock>> {
    let n = a.dim();
    let center = center_basis(a)?;
    let k = center.len();
    let gram = &a.gns().gram;
    for attempt in 0..DECOMPOSE_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(0xB10C_0000 + attempt);
        let mut h = crate::linalg::zeros(n);
        for q in &center {
            h += q * c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let h = (&h + a.star_unchecked(&h)) * r(0.5);
        // Restriction of L_h to the center, in the GNS-orthonormal basis.
        let mut m = CMat::from_element(k, k, ZERO);
        for (col, qb) in center.iter().enumerate() {
            let hq = a.mul(&h, qb);
            for (row, qa) in center.iter().enumerate() {
                m[(row, col)] = (qa.adjoint() * gram * &hq)[(0, 0)];
            }
        }
        let eig = SymmetricEigen::new(crate::linalg::hermitian_part(&m));
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let scale = vals.iter().map(|v| v.abs()).fold(1.0, f64::max);
        vals.sort_by(f64::total_cmp);
        if vals
            .windows(2)
            .any(|w| w[1] - w[0] < EIGEN_SEPARATION * scale)
        {
            continue;
        }
        let mut blocks = Vec::with_capacity(k);
        for col in 0..k {
            let mut z = crate::linalg::zeros(n);
            for (row, q) in center.iter().enumerate() {
                z += q * eig.eigenvectors[(row, col)];
            }
            let z2 = a.mul(&z, &z);
            let scale = a.inner(&z2, &z) / a.inner(&z, &z);
            let z = z / scale;
            let idem = max_abs_vec(&(a.mul(&z, &z) - &z));
            if idem > 1e-8 {
                return Err(Error::NotSemisimple(format!(
                    "central eigenvector is not an idempotent (residual {idem:e})"
                )));
            }
            let lz = a.left_mult_matrix(&z);
            let block_dim = lz.trace().re;
            let size = block_dim.max(0.0).sqrt().round() as usize;
            if size == 0 || (block_dim - (size * size) as f64).abs() > SQUARE_TOL {
                return Err(Error::NotSemisimple(format!(
                    "block of dimension {block_dim} is not a perfect square"
                )));
            }
            let weight = a.tau(&z).re;
            blocks.push(CentralBlock {
                projection: z,
                size,
                weight,
            });
        }
        blocks.sort_by(|x, y| y.size.cmp(&x.size).then(y.weight.total_cmp(&x.weight)));
        return Ok(blocks);
    }
    Err(Error::NotSemisimple(
        "could not separate the spectrum of a central element".into(),
    ))
}

/// GNS-orthonormal basis of the center.
fn center_basis(a: &FDAlgebra) -> Result<Vec<CVec>> {
    let n = a.dim();
    let mut rows: Vec<SparseVec> = Vec::with_capacity(n * n);
    for i in 0..n {
        let mut per_k: Vec<Vec<(usize, C64)>> = vec![Vec::new(); n];
        for j in 0..n {
            for &(k, x) in a.mul_basis(i, j) {
                per_k[k].push((j, x));
            }
            for &(k, x) in a.mul_basis(j, i) {
                per_k[k].push((j, -x));
            }
        }
        for entries in per_k {
            let mut acc = crate::linalg::SparseAccumulator::default();
            for (j, x) in entries {
                acc.push(j, x);
            }
            let row = acc.finish();
            if !row.is_empty() {
                rows.push(row);
            }
        }
    }
    let ns = sparse_nullspace(n, &rows)?;
    let span = Span::new(&a.metric(1), &ns.vectors)?;
    Ok(span.basis().iter().map(|v| v.to_dense(n)).collect())
}

/// A unital *-subalgebra given by a GNS-orthonormal basis.
#[derive(Clone, Debug)]
pub struct Subalgebra {
    pub basis: Vec<CVec>,
}

impl Subalgebra {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Distance of `x` from the subalgebra.
    pub fn residual(&self, alg: &FDAlgebra, x: &CVec) -> f64 {
        let mut p = x.clone();
        for q in &self.basis {
            p -= q * alg.inner(x, q);
        }
        alg.norm(&p)
    }

    /// Largest distance of another subalgebra's basis from this one, both ways.
    pub fn distance(&self, alg: &FDAlgebra, other: &Subalgebra) -> f64 {
        let a = other
            .basis
            .iter()
            .map(|x| self.residual(alg, x))
            .fold(0.0, f64::max);
        let b = self
            .basis
            .iter()
            .map(|x| other.residual(alg, x))
            .fold(0.0, f64::max);
        a.max(b)
    }
}

/// Smallest unital *-subalgebra containing `s`, grown by products and
/// adjoints until the span stops growing.
pub fn subalgebra_generate(ambient: &FDAlgebra, s: &[CVec]) -> Result<Subalgebra> {
    let n = ambient.dim();
    for x in s {
        crate::linalg::check_len(x, n, "generator")?;
    }
    let metric = ambient.metric(1);
    let mut seed: Vec<SparseVec> = vec![SparseVec::from_dense(ambient.unit())];
    for x in s {
        seed.push(SparseVec::from_dense(x));
        seed.push(SparseVec::from_dense(&ambient.star_unchecked(x)));
    }
    let mut basis = Span::new(&metric, &seed)?.basis();
    loop {
        let mut cands = basis.clone();
        for x in &basis {
            cands.push(ambient.star_sparse(x));
            for y in &basis {
                cands.push(ambient.mul_sparse(x, y));
            }
        }
        let next = Span::new(&metric, &cands)?.basis();
        if next.len() == basis.len() {
            return Ok(Subalgebra {
                basis: next.iter().map(|v| v.to_dense(n)).collect(),
            });
        }
        basis = next;
    }
}

/// `{α_g(x) : g ∈ G, x ∈ X}`.
pub fn orbit(xs: &[CVec], act: &GroupAction) -> Vec<CVec> {
    let mut out = Vec::with_capacity(xs.len() * act.group().order());
    for x in xs {
        for g in act.group().elements() {
            out.push(act.apply(g, x));
        }
    }
    out
}

/// One element of a character-scaled generating set.
#[derive(Clone, Debug)]
pub struct ScaledGenerator {
    pub vector: CVec,
    /// Index into [`crate::group::characters`] of the group.
    pub character: usize,
    pub character_values: Vec<C64>,
    /// Index of the generator it was obtained from.
    pub source: usize,
}

impl ScaledGenerator {
    /// Maximum of `||α_h(y) - χ(h) y||` over the group.
    pub fn scaling_residual(&self, act: &GroupAction) -> f64 {
        act.group()
            .elements()
            .map(|h| {
                max_abs_vec(&(act.apply(h, &self.vector) - &self.vector * self.character_values[h]))
            })
            .fold(0.0, f64::max)
    }
}

/// Norm below which character projections are discarded.
pub const PRUNE_TOL: f64 = 1e-10;

/// Character projections `(1/|G|) Σ_g conj(χ(g)) α_g(x)` of every `x`,
/// with (GNS) zero vectors removed.
pub fn scaled_generating_set(xs: &[CVec], act: &GroupAction) -> Result<Vec<ScaledGenerator>> {
    let group = act.group();
    let chars = characters(group)?;
    let a = act.algebra();
    let order = group.order() as f64;
    let mut out = Vec::new();
    for (source, x) in xs.iter().enumerate() {
        crate::linalg::check_len(x, a.dim(), "generator")?;
        for (ci, chi) in chars.iter().enumerate() {
            let mut y = crate::linalg::zeros(a.dim());
            for g in group.elements() {
                y += act.apply(g, x) * chi.values[g].conj();
            }
            let y = y / r(order);
            if a.norm(&y) > PRUNE_TOL {
                out.push(ScaledGenerator {
                    vector: y,
                    character: ci,
                    character_values: chi.values.clone(),
                    source,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{group_algebra, multimatrix};
    use crate::group::FiniteGroup;
    use crate::linalg::basis_vector;
    use std::sync::Arc;

    fn blocks_of(a: &FDAlgebra) -> Vec<(usize, f64)> {
        multimatrix_decompose(a)
            .unwrap()
            .iter()
            .map(|b| (b.size, b.weight))
            .collect()
    }

    fn assert_blocks(got: &[(usize, f64)], want: &[(usize, f64)]) {
        assert_eq!(got.len(), want.len(), "{got:?} vs {want:?}");
        for (g, w) in got.iter().zip(want) {
            assert_eq!(g.0, w.0);
            assert!((g.1 - w.1).abs() < 1e-9, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn decompose_examples() {
        assert_blocks(
            &blocks_of(&group_algebra(&FiniteGroup::cyclic(2))),
            &[(1, 0.5), (1, 0.5)],
        );
        assert_blocks(&blocks_of(&multimatrix(&[(2, 1.0)]).unwrap()), &[(2, 1.0)]);
        assert_blocks(
            &blocks_of(&group_algebra(&FiniteGroup::symmetric3())),
            &[(2, 2.0 / 3.0), (1, 1.0 / 6.0), (1, 1.0 / 6.0)],
        );
        assert_blocks(
            &blocks_of(&multimatrix(&[(1, 0.2), (3, 0.5), (1, 0.3)]).unwrap()),
            &[(3, 0.5), (1, 0.3), (1, 0.2)],
        );
    }

    #[test]
    fn subalgebra_examples() {
        let c = multimatrix(&[(1, 1.0)]).unwrap();
        assert_eq!(subalgebra_generate(&c, &[]).unwrap().dim(), 1);
        let m2 = multimatrix(&[(2, 1.0)]).unwrap();
        assert_eq!(
            subalgebra_generate(&m2, &[basis_vector(4, 1)])
                .unwrap()
                .dim(),
            4
        );
        assert_eq!(subalgebra_generate(&m2, &[]).unwrap().dim(), 1);
        let z4 = group_algebra(&FiniteGroup::cyclic(4));
        assert_eq!(
            subalgebra_generate(&z4, &[basis_vector(4, 2)])
                .unwrap()
                .dim(),
            2
        );
    }

    #[test]
    fn scaled_set_for_flip() {
        let blocks = [(1, 0.5), (1, 0.5)];
        let a = Arc::new(multimatrix(&blocks).unwrap());
        let flip = GroupAction::block_permutation_matrix(&blocks, &[1, 0]).unwrap();
        let act = GroupAction::from_generators(FiniteGroup::cyclic(2), a, &[(1, flip)]).unwrap();
        let ys = scaled_generating_set(&[basis_vector(2, 0)], &act).unwrap();
        assert_eq!(ys.len(), 2);
        assert_eq!(ys[0].vector, CVec::from_vec(vec![r(0.5), r(0.5)]));
        assert_eq!(ys[1].vector, CVec::from_vec(vec![r(0.5), r(-0.5)]));
        for y in &ys {
            assert!(y.scaling_residual(&act) < 1e-15);
        }
    }

    #[test]
    fn scaled_set_for_trivial_action_is_the_input() {
        let a = Arc::new(multimatrix(&[(2, 1.0)]).unwrap());
        let act = GroupAction::trivial(FiniteGroup::cyclic(3), a);
        let xs: Vec<CVec> = (0..4).map(|i| basis_vector(4, i)).collect();
        let ys = scaled_generating_set(&xs, &act).unwrap();
        assert_eq!(ys.len(), 4);
        for (y, x) in ys.iter().zip(&xs) {
            assert_eq!(y.character, 0);
            assert!(max_abs_vec(&(&y.vector - x)) < 1e-15);
        }
    }
}
