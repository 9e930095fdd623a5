use std::collections::VecDeque;
use std::sync::Arc;

use crate::algebra::FDAlgebra;
use crate::error::{Error, Result};
use crate::group::{Character, FiniteGroup};
use crate::linalg::{max_abs, max_abs_vec, CMat, CVec, SparseVec, C64, ONE, ZERO};

/// Residual allowed when validating an action.
pub const ACTION_TOL: f64 = 1e-9;

/// A trace-preserving action `g -> α_g` of a finite group by
/// *-automorphisms, stored as coordinate matrices `U_g`.
#[derive(Clone, Debug)]
pub struct GroupAction {
    group: FiniteGroup,
    algebra: Arc<FDAlgebra>,
    maps: Vec<CMat>,
}

impl GroupAction {
    /// Validates `maps` (one matrix per group element) and builds the action.
    pub fn new(group: FiniteGroup, algebra: Arc<FDAlgebra>, maps: Vec<CMat>) -> Result<Self> {
        let n = algebra.dim();
        if maps.len() != group.order() {
            return Err(Error::ActionInvalid(format!(
                "expected {} matrices, got {}",
                group.order(),
                maps.len()
            )));
        }
        if let Some((g, m)) = maps.iter().enumerate().find(|(_, m)| m.shape() != (n, n)) {
            return Err(Error::ActionInvalid(format!(
                "matrix for element {g} has shape {:?}, algebra has dimension {n}",
                m.shape()
            )));
        }
        let act = Self {
            group,
            algebra,
            maps,
        };
        act.check(ACTION_TOL)?;
        Ok(act)
    }

    pub fn trivial(group: FiniteGroup, algebra: Arc<FDAlgebra>) -> Self {
        let n = algebra.dim();
        let maps = vec![CMat::identity(n, n); group.order()];
        Self {
            group,
            algebra,
            maps,
        }
    }

    /// Extends images of generators along the Cayley graph, checking that
    /// the result is a well-defined homomorphism.
    pub fn from_generators(
        group: FiniteGroup,
        algebra: Arc<FDAlgebra>,
        generators: &[(usize, CMat)],
    ) -> Result<Self> {
        let n = algebra.dim();
        for (g, m) in generators {
            if *g >= group.order() {
                return Err(Error::ActionInvalid(format!("generator {g} out of range")));
            }
            if m.shape() != (n, n) {
                return Err(Error::ActionInvalid(format!(
                    "generator matrix has shape {:?}, algebra has dimension {n}",
                    m.shape()
                )));
            }
        }
        let mut maps: Vec<Option<CMat>> = vec![None; group.order()];
        maps[group.identity()] = Some(CMat::identity(n, n));
        let mut queue = VecDeque::from([group.identity()]);
        while let Some(g) = queue.pop_front() {
            for (s, ms) in generators {
                let gs = group.mul(g, *s);
                let img = maps[g].as_ref().expect("visited") * ms;
                match &maps[gs] {
                    Some(existing) => {
                        if max_abs(&(existing - &img)) > ACTION_TOL {
                            return Err(Error::ActionInvalid(format!(
                                "generator images do not define a homomorphism at element {gs}"
                            )));
                        }
                    }
                    None => {
                        maps[gs] = Some(img);
                        queue.push_back(gs);
                    }
                }
            }
        }
        let maps = maps
            .into_iter()
            .enumerate()
            .map(|(g, m)| {
                m.ok_or_else(|| Error::ActionInvalid(format!("element {g} is not generated")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(group, algebra, maps)
    }

    /// Coordinate matrix of `Ad(u): x -> u x u^*`.
    pub fn ad_matrix(algebra: &FDAlgebra, u: &CVec) -> CMat {
        let us = algebra.star_unchecked(u);
        let n = algebra.dim();
        let mut m = CMat::from_element(n, n, ZERO);
        for j in 0..n {
            let col = algebra.mul(&algebra.mul(u, &algebra.basis_vector(j)), &us);
            m.set_column(j, &col);
        }
        m
    }

    /// Coordinate matrix permuting the blocks of the algebra returned by
    /// [`super::multimatrix`]: `e^{(i)}_{jk} -> e^{(perm[i])}_{jk}`.
    pub fn block_permutation_matrix(blocks: &[(usize, f64)], perm: &[usize]) -> Result<CMat> {
        if perm.len() != blocks.len() {
            return Err(Error::ActionInvalid(
                "permutation length differs from block count".into(),
            ));
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || seen[p] {
                return Err(Error::ActionInvalid(
                    "not a permutation of the blocks".into(),
                ));
            }
            seen[p] = true;
        }
        let mut offsets = Vec::new();
        let mut o = 0;
        for &(n, _) in blocks {
            offsets.push(o);
            o += n * n;
        }
        let mut m = CMat::from_element(o, o, ZERO);
        for (i, &(n, _)) in blocks.iter().enumerate() {
            let target = perm[i];
            if blocks[target].0 != n {
                return Err(Error::ActionInvalid(format!(
                    "block {i} of size {n} cannot move to block {target} of size {}",
                    blocks[target].0
                )));
            }
            for jk in 0..n * n {
                m[(offsets[target] + jk, offsets[i] + jk)] = ONE;
            }
        }
        Ok(m)
    }

    /// Diagonal matrix `u_k -> χ(k) u_k` on a group algebra (the dual action
    /// of a character).
    pub fn character_matrix(chi: &Character) -> CMat {
        CMat::from_diagonal(&CVec::from_vec(chi.values.clone()))
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn algebra(&self) -> &Arc<FDAlgebra> {
        &self.algebra
    }

    pub fn map(&self, g: usize) -> &CMat {
        &self.maps[g]
    }

    pub fn maps(&self) -> &[CMat] {
        &self.maps
    }

    pub fn apply(&self, g: usize, x: &CVec) -> CVec {
        &self.maps[g] * x
    }

    pub fn is_trivial(&self, tol: f64) -> bool {
        let n = self.algebra.dim();
        self.maps
            .iter()
            .all(|m| max_abs(&(m - CMat::identity(n, n))) <= tol)
    }

    /// Restriction to a subgroup given by its parent indices.
    pub fn restrict(&self, sub: &crate::group::Subgroup) -> Self {
        Self {
            group: sub.group.clone(),
            algebra: self.algebra.clone(),
            maps: sub
                .embedding
                .iter()
                .map(|&g| self.maps[g].clone())
                .collect(),
        }
    }

    /// Largest residual among the action axioms.
    pub fn residual(&self) -> f64 {
        let a = &*self.algebra;
        let n = a.dim();
        let g = &self.group;
        let mut res = max_abs(&(&self.maps[g.identity()] - CMat::identity(n, n)));
        for x in g.elements() {
            for y in g.elements() {
                res = res.max(max_abs(
                    &(&self.maps[x] * &self.maps[y] - &self.maps[g.mul(x, y)]),
                ));
            }
        }
        for m in &self.maps {
            let cols: Vec<SparseVec> = (0..n)
                .map(|j| SparseVec::from_dense(&m.column(j).into_owned()))
                .collect();
            for i in 0..n {
                for j in 0..n {
                    let mut prod = crate::linalg::zeros(n);
                    for &(k, z) in a.mul_basis(i, j) {
                        prod += m.column(k) * z;
                    }
                    let rhs = a.mul_sparse(&cols[i], &cols[j]).to_dense(n);
                    res = res.max(max_abs_vec(&(prod - rhs)));
                }
                let star_img = m * a.star_basis(i).to_dense(n);
                let img_star = a.star_sparse(&cols[i]).to_dense(n);
                res = res.max(max_abs_vec(&(star_img - img_star)));
                let t: C64 = a.tau(&m.column(i).into_owned());
                res = res.max((t - a.trace_vector()[i]).norm());
            }
            res = res.max(max_abs_vec(&(m * a.unit() - a.unit())));
        }
        res
    }

    fn check(&self, tol: f64) -> Result<()> {
        let res = self.residual();
        if res > tol {
            return Err(Error::ActionInvalid(format!(
                "not a trace-preserving action by *-automorphisms (residual {res:e})"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{group_algebra, multimatrix};
    use crate::linalg::{basis_vector, r};

    #[test]
    fn flip_on_c2_is_valid() {
        let blocks = [(1, 0.5), (1, 0.5)];
        let a = Arc::new(multimatrix(&blocks).unwrap());
        let flip = GroupAction::block_permutation_matrix(&blocks, &[1, 0]).unwrap();
        let act = GroupAction::from_generators(FiniteGroup::cyclic(2), a, &[(1, flip)]).unwrap();
        assert!(act.residual() < 1e-15);
        assert_eq!(act.apply(1, &basis_vector(2, 0)), basis_vector(2, 1));
    }

    #[test]
    fn flip_on_uneven_weights_is_not_trace_preserving() {
        let blocks = [(1, 0.7), (1, 0.3)];
        let a = Arc::new(multimatrix(&blocks).unwrap());
        let flip = GroupAction::block_permutation_matrix(&blocks, &[1, 0]).unwrap();
        let err =
            GroupAction::from_generators(FiniteGroup::cyclic(2), a, &[(1, flip)]).unwrap_err();
        assert!(matches!(err, Error::ActionInvalid(_)));
    }

    #[test]
    fn generator_of_wrong_order_is_rejected() {
        let blocks = [(1, 1.0 / 3.0); 3];
        let a = Arc::new(multimatrix(&blocks).unwrap());
        let cyc = GroupAction::block_permutation_matrix(&blocks, &[1, 2, 0]).unwrap();
        assert!(GroupAction::from_generators(
            FiniteGroup::cyclic(2),
            a.clone(),
            &[(1, cyc.clone())]
        )
        .is_err());
        assert!(GroupAction::from_generators(FiniteGroup::cyclic(3), a, &[(1, cyc)]).is_ok());
    }

    #[test]
    fn ad_of_diagonal_unitary_on_m2() {
        let m2 = Arc::new(multimatrix(&[(2, 1.0)]).unwrap());
        let u = CVec::from_vec(vec![r(1.0), r(0.0), r(0.0), r(-1.0)]);
        let ad = GroupAction::ad_matrix(&m2, &u);
        let expected = CMat::from_diagonal(&CVec::from_vec(vec![r(1.0), r(-1.0), r(-1.0), r(1.0)]));
        assert!(max_abs(&(ad.clone() - expected)) < 1e-15);
        GroupAction::from_generators(FiniteGroup::cyclic(2), m2, &[(1, ad)]).unwrap();
    }

    #[test]
    fn dual_action_on_group_algebra() {
        let g = FiniteGroup::cyclic(3);
        let a = Arc::new(group_algebra(&g));
        let chars = crate::group::characters(&g).unwrap();
        let m = GroupAction::character_matrix(&chars[1]);
        let act = GroupAction::from_generators(g, a, &[(1, m)]).unwrap();
        assert!(act.residual() < 1e-12);
        assert!(!act.is_trivial(1e-9));
    }
}
