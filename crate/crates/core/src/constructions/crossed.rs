use std::sync::Arc;

use super::GroupAction;
use crate::algebra::FDAlgebra;
use crate::error::{Error, Result};
use crate::group::FiniteGroup;
use crate::linalg::{basis_vector, zeros, CMat, CVec, SparseAccumulator, SparseVec, ONE, ZERO};

/// Crossed product `A ⋊ G` with its canonical embeddings.
///
/// The basis element `b_i u_g` has index `i * |G| + g`, so a trivial action
/// reproduces `A ⊗ C[G]` on the nose.
#[derive(Clone, Debug)]
pub struct CrossedProduct {
    algebra: Arc<FDAlgebra>,
    action: Arc<GroupAction>,
}

impl CrossedProduct {
    pub fn new(action: Arc<GroupAction>) -> Result<Self> {
        let res = action.residual();
        if res > super::action::ACTION_TOL {
            return Err(Error::ActionInvalid(format!("action residual {res:e}")));
        }
        let a = action.algebra().clone();
        let g = action.group();
        let (n, m) = (a.dim(), g.order());
        let idx = |i: usize, h: usize| i * m + h;
        let dim = n * m;
        let mut products = Vec::with_capacity(dim * dim);
        // Columns of U_g as sparse vectors, for α_g(b_j).
        let images: Vec<Vec<SparseVec>> = g
            .elements()
            .map(|x| {
                (0..n)
                    .map(|j| SparseVec::from_dense(&action.map(x).column(j).into_owned()))
                    .collect()
            })
            .collect();
        for i in 0..n {
            for x in 0..m {
                for j in 0..n {
                    for y in 0..m {
                        let xy = g.mul(x, y);
                        let mut acc = SparseAccumulator::default();
                        for &(l, ul) in images[x][j].iter() {
                            for &(k, cc) in a.mul_basis(i, l) {
                                acc.push(idx(k, xy), ul * cc);
                            }
                        }
                        products.push(acc.finish());
                    }
                }
            }
        }
        let mut star_cols = Vec::with_capacity(dim);
        for i in 0..n {
            for x in 0..m {
                let xi = g.inv(x);
                let img = action.map(xi) * a.star_basis(i).to_dense(n);
                let mut acc = SparseAccumulator::default();
                for (k, z) in img.iter().enumerate() {
                    acc.push(idx(k, xi), *z);
                }
                star_cols.push(acc.finish());
            }
        }
        let mut unit = zeros(dim);
        let mut trace = zeros(dim);
        for i in 0..n {
            unit[idx(i, g.identity())] = a.unit()[i];
            trace[idx(i, g.identity())] = a.trace_vector()[i];
        }
        let label = if g.order() == 1 {
            a.label().to_string()
        } else {
            format!("{}⋊{}", a.label(), g.label())
        };
        let algebra = FDAlgebra::from_sparse(label, dim, products, star_cols, unit, trace)?;
        Ok(Self {
            algebra: Arc::new(algebra),
            action,
        })
    }

    pub fn algebra(&self) -> &Arc<FDAlgebra> {
        &self.algebra
    }

    pub fn base(&self) -> &Arc<FDAlgebra> {
        self.action.algebra()
    }

    pub fn action(&self) -> &Arc<GroupAction> {
        &self.action
    }

    pub fn group(&self) -> &FiniteGroup {
        self.action.group()
    }

    pub fn order(&self) -> usize {
        self.group().order()
    }

    /// Index of `b_i u_g`.
    pub fn index(&self, i: usize, g: usize) -> usize {
        i * self.order() + g
    }

    /// Index of `ι_A(b_i) = b_i u_e`.
    pub fn base_index(&self, i: usize) -> usize {
        self.index(i, self.group().identity())
    }

    /// `ι_A(x)`.
    pub fn embed_base(&self, x: &CVec) -> CVec {
        let mut out = zeros(self.algebra.dim());
        for (i, z) in x.iter().enumerate() {
            out[self.base_index(i)] = *z;
        }
        out
    }

    /// The unitary `u_g = 1 u_g`.
    pub fn unitary(&self, g: usize) -> CVec {
        let base = self.base();
        let mut out = zeros(self.algebra.dim());
        for (i, z) in base.unit().iter().enumerate() {
            if *z != ZERO {
                out[self.index(i, g)] = *z;
            }
        }
        out
    }

    /// `ι_G(c)` for `c` in coordinates of `C[G]`.
    pub fn embed_group(&self, c: &CVec) -> CVec {
        let mut out = zeros(self.algebra.dim());
        for (g, z) in c.iter().enumerate() {
            out += self.unitary(g) * *z;
        }
        out
    }

    /// Matrix of `ι_A`.
    pub fn base_embedding(&self) -> CMat {
        let n = self.base().dim();
        let mut m = CMat::from_element(self.algebra.dim(), n, ZERO);
        for i in 0..n {
            m[(self.base_index(i), i)] = ONE;
        }
        m
    }

    /// Matrix of `ι_G`.
    pub fn group_embedding(&self) -> CMat {
        let m = self.order();
        let mut out = CMat::from_element(self.algebra.dim(), m, ZERO);
        for g in 0..m {
            out.set_column(g, &self.unitary(g));
        }
        out
    }

    /// The generators `{u_g}` as vectors.
    pub fn unitaries(&self) -> Vec<CVec> {
        (0..self.order()).map(|g| self.unitary(g)).collect()
    }

    /// `ι_A(X) ∪ {u_g}` for the full basis `X` of `A`, the default
    /// generating set of the crossed product.
    pub fn default_generators(&self) -> Vec<CVec> {
        let mut gens: Vec<CVec> = (0..self.base().dim())
            .map(|i| basis_vector(self.algebra.dim(), self.base_index(i)))
            .collect();
        gens.extend(self.unitaries());
        gens
    }

    /// Coordinate matrix of `Ad(u_g)` on the crossed product.
    pub fn ad_unitary(&self, g: usize) -> CMat {
        GroupAction::ad_matrix(&self.algebra, &self.unitary(g))
    }

    /// Splits `x = Σ_g a_g u_g` into its coefficients `a_g ∈ A`.
    pub fn coefficients(&self, x: &CVec) -> Vec<CVec> {
        let n = self.base().dim();
        (0..self.order())
            .map(|g| CVec::from_fn(n, |i, _| x[self.index(i, g)]))
            .collect()
    }

    /// Largest residual of the embedding identities: ι_A and ι_G are
    /// trace-preserving *-homomorphisms and `u_g ι_A(a) u_g^* = ι_A(α_g(a))`.
    pub fn embedding_residual(&self) -> f64 {
        let c = &*self.algebra;
        let a = &**self.base();
        let n = a.dim();
        let mut res: f64 = 0.0;
        let dist = |x: &CVec, y: &CVec| crate::linalg::max_abs_vec(&(x - y));
        for i in 0..n {
            let bi = a.basis_vector(i);
            let ei = self.embed_base(&bi);
            res = res.max(dist(
                &c.star_unchecked(&ei),
                &self.embed_base(&a.star_unchecked(&bi)),
            ));
            res = res.max((c.tau(&ei) - a.tau(&bi)).norm());
            for j in 0..n {
                let bj = a.basis_vector(j);
                let lhs = c.mul(&ei, &self.embed_base(&bj));
                res = res.max(dist(&lhs, &self.embed_base(&a.mul(&bi, &bj))));
            }
            for g in self.group().elements() {
                let ug = self.unitary(g);
                let lhs = c.mul(&c.mul(&ug, &ei), &c.star_unchecked(&ug));
                res = res.max(dist(&lhs, &self.embed_base(&self.action.apply(g, &bi))));
            }
        }
        let grp = self.group();
        for g in grp.elements() {
            let ug = self.unitary(g);
            res = res.max(dist(&c.star_unchecked(&ug), &self.unitary(grp.inv(g))));
            let expected_tau = if g == grp.identity() { ONE } else { ZERO };
            res = res.max((c.tau(&ug) - expected_tau).norm());
            for h in grp.elements() {
                res = res.max(dist(
                    &c.mul(&ug, &self.unitary(h)),
                    &self.unitary(grp.mul(g, h)),
                ));
            }
        }
        res
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{group_algebra, multimatrix, multimatrix_decompose, tensor, Block};
    use crate::linalg::r;

    fn c2_flip() -> CrossedProduct {
        let blocks = [(1, 0.5), (1, 0.5)];
        let a = Arc::new(multimatrix(&blocks).unwrap());
        let flip = GroupAction::block_permutation_matrix(&blocks, &[1, 0]).unwrap();
        let act = GroupAction::from_generators(FiniteGroup::cyclic(2), a, &[(1, flip)]).unwrap();
        CrossedProduct::new(Arc::new(act)).unwrap()
    }

    #[test]
    fn trivial_action_gives_tensor_product() {
        let a = Arc::new(multimatrix(&[(2, 0.5), (1, 0.5)]).unwrap());
        let g = FiniteGroup::cyclic(3);
        let act = GroupAction::trivial(g.clone(), a.clone());
        let cp = CrossedProduct::new(Arc::new(act)).unwrap();
        let t = tensor(&a, &group_algebra(&g));
        assert!(cp.algebra().structure_distance(&t) < 1e-12);
    }

    #[test]
    fn flip_crossed_product_is_m2() {
        let cp = c2_flip();
        assert!(cp.algebra().validate(1e-9).pass);
        assert!(cp.embedding_residual() < 1e-12);
        let blocks = multimatrix_decompose(cp.algebra()).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].size, 2);
        assert!((blocks[0].weight - 1.0).abs() < 1e-9);
    }

    #[test]
    fn m2_with_diagonal_ad_splits_in_two_blocks() {
        let m2 = Arc::new(multimatrix(&[(2, 1.0)]).unwrap());
        let u = CVec::from_vec(vec![r(1.0), r(0.0), r(0.0), r(-1.0)]);
        let ad = GroupAction::ad_matrix(&m2, &u);
        let act = GroupAction::from_generators(FiniteGroup::cyclic(2), m2, &[(1, ad)]).unwrap();
        let cp = CrossedProduct::new(Arc::new(act)).unwrap();
        assert!(cp.algebra().validate(1e-9).pass);
        assert!(cp.embedding_residual() < 1e-12);
        let blocks = multimatrix_decompose(cp.algebra()).unwrap();
        assert_eq!(blocks.len(), 2);
        for Block { size, weight } in blocks {
            assert_eq!(size, 2);
            assert!((weight - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn unitaries_implement_the_action() {
        let cp = c2_flip();
        let c = cp.algebra();
        let u1 = cp.unitary(1);
        let e0 = cp.embed_base(&basis_vector(2, 0));
        let conj = c.mul(&c.mul(&u1, &e0), &c.star_unchecked(&u1));
        assert_eq!(conj, cp.embed_base(&basis_vector(2, 1)));
        let ad = cp.ad_unitary(1);
        assert!(crate::linalg::max_abs_vec(&(&ad * &e0 - conj)) < 1e-15);
    }
}
