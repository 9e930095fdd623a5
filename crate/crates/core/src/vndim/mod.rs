//! Von Neumann dimensions of right submodules of `L²(N)^X`.
//!
//! For a subspace `V` closed under the diagonal right action of `N`, the
//! dimension is `Σ_x <P Ω_x, Ω_x>` where `P` is the orthogonal projection onto
//! `V` and `Ω_x` is the trace vector placed in coordinate `x`.

use std::sync::Arc;

use crate::algebra::FDAlgebra;
use crate::constructions::subalgebra_generate;
use crate::derivations::{evaluate_vec, right_mult_slotwise, CrossedContext, DerivationSpace};
use crate::error::{Error, Result};
use crate::linalg::{rationalize, CVec, Span, SparseAccumulator, SparseVec, C64, ZERO};

/// Tolerance for matching a dimension to a fraction.
pub const RATIONAL_TOL: f64 = 1e-6;

/// Default tolerance for the closure and commutant checks.
pub const CLOSURE_TOL: f64 = 1e-8;

/// A subspace of `L²(N)^slots`, given by spanning vectors.
#[derive(Clone, Debug)]
pub struct ModuleSubspace {
    algebra: Arc<FDAlgebra>,
    slots: usize,
    vectors: Vec<SparseVec>,
}

impl ModuleSubspace {
    pub fn new(algebra: Arc<FDAlgebra>, slots: usize, vectors: Vec<SparseVec>) -> Result<Self> {
        let ambient = algebra.dim() * slots;
        if let Some(bad) = vectors
            .iter()
            .find(|v| v.max_index().is_some_and(|i| i >= ambient))
        {
            return Err(Error::ShapeMismatch(format!(
                "vector index {} outside ambient dimension {ambient}",
                bad.max_index().unwrap_or(0)
            )));
        }
        Ok(Self {
            algebra,
            slots,
            vectors,
        })
    }

    /// All of `L²(N)^slots`.
    pub fn full(algebra: Arc<FDAlgebra>, slots: usize) -> Self {
        let vectors = (0..algebra.dim() * slots).map(SparseVec::unit).collect();
        Self {
            algebra,
            slots,
            vectors,
        }
    }

    pub fn zero(algebra: Arc<FDAlgebra>, slots: usize) -> Self {
        Self {
            algebra,
            slots,
            vectors: Vec::new(),
        }
    }

    pub fn algebra(&self) -> &Arc<FDAlgebra> {
        &self.algebra
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn vectors(&self) -> &[SparseVec] {
        &self.vectors
    }

    pub fn ambient_dim(&self) -> usize {
        self.algebra.dim() * self.slots
    }

    /// Applies the coordinate map `m` of `N` inside every slot.
    pub fn map_slotwise(&self, m: &crate::linalg::CMat) -> Self {
        let d = self.algebra.dim();
        let vectors = self
            .vectors
            .iter()
            .map(|v| {
                let mut acc = SparseAccumulator::with_capacity(v.nnz() * 2);
                for &(idx, z) in v.iter() {
                    let (s, k) = (idx / d, idx % d);
                    for (l, c) in m.column(k).iter().enumerate() {
                        if *c != ZERO {
                            acc.push(s * d + l, c * z);
                        }
                    }
                }
                acc.finish()
            })
            .collect();
        Self {
            algebra: self.algebra.clone(),
            slots: self.slots,
            vectors,
        }
    }

    /// Orthogonal direct sum with another subspace over the same algebra and slots.
    pub fn sum(&self, other: &ModuleSubspace) -> Result<Self> {
        if self.slots != other.slots || self.algebra.dim() != other.algebra.dim() {
            return Err(Error::ShapeMismatch(
                "subspaces live in different ambients".into(),
            ));
        }
        let mut vectors = self.vectors.clone();
        vectors.extend(other.vectors.iter().cloned());
        Ok(Self {
            algebra: self.algebra.clone(),
            slots: self.slots,
            vectors,
        })
    }
}

/// A computed dimension with the evidence behind it.
#[derive(Clone, Debug)]
pub struct VnDimension {
    pub value: f64,
    /// Linear dimension of the span.
    pub rank: usize,
    /// Largest distance of `v · m` from the span.
    pub closure_residual: f64,
    /// Largest `‖(1-P) R_m P‖ + ‖(1-P) R_{m*} P‖`, bounding `‖[P, R_m]‖`.
    pub commutator_bound: f64,
    /// Nearest fraction with denominator at most `dim N`, when within [`RATIONAL_TOL`].
    pub rational: Option<(i64, u64)>,
}

impl VnDimension {
    /// Nearest fraction with denominator at most `max_den`.
    pub fn rational_with(&self, max_den: u64) -> Option<(i64, u64)> {
        rationalize(self.value, max_den, RATIONAL_TOL)
    }
}

/// Dimension over `N` with the default closure tolerance.
pub fn vn_dimension(sub: &ModuleSubspace) -> Result<VnDimension> {
    vn_dimension_with(sub, CLOSURE_TOL)
}

pub fn vn_dimension_with(sub: &ModuleSubspace, tol: f64) -> Result<VnDimension> {
    let n = &*sub.algebra;
    let d = n.dim();
    let metric = n.metric(sub.slots);
    let span = Span::new(&metric, &sub.vectors)?;
    let basis = span.basis();

    let mut closure_residual: f64 = 0.0;
    let mut commutator_bound: f64 = 0.0;
    if !basis.is_empty() {
        for m in 0..d {
            let em = SparseVec::unit(m);
            let em_star = n.star_basis(m).clone();
            let mut frob = 0.0;
            let mut frob_star = 0.0;
            for q in &basis {
                let r1 = span.residual(&metric, &right_mult_slotwise(n, q, &em));
                let r2 = span.residual(&metric, &right_mult_slotwise(n, q, &em_star));
                closure_residual = closure_residual.max(r1).max(r2);
                frob += r1 * r1;
                frob_star += r2 * r2;
            }
            commutator_bound = commutator_bound.max(f64::sqrt(frob) + f64::sqrt(frob_star));
        }
    }
    if closure_residual > tol || commutator_bound > tol {
        return Err(Error::NotRightClosed(
            closure_residual.max(commutator_bound),
        ));
    }

    let t = n.trace_vector();
    let mut value = 0.0;
    for q in &basis {
        let mut per_slot = vec![ZERO; sub.slots];
        for &(idx, z) in q.iter() {
            per_slot[idx / d] += t[idx % d] * z;
        }
        value += per_slot.iter().map(|z: &C64| z.norm_sqr()).sum::<f64>();
    }
    Ok(VnDimension {
        value,
        rank: basis.len(),
        closure_residual,
        commutator_bound,
        rational: rationalize(value, d as u64, RATIONAL_TOL),
    })
}

/// `φ_X(space) ⊂ L²(N)^X`, after checking that `X` generates and that the
/// evaluation map is injective.
pub fn phi_x(space: &DerivationSpace, xs: &[CVec]) -> Result<ModuleSubspace> {
    let env = space.envelope();
    let a = env.base();
    let generated = subalgebra_generate(a, xs)?;
    if generated.dim() != a.dim() {
        return Err(Error::NotGenerating(format!(
            "generated subalgebra has dimension {} < {}",
            generated.dim(),
            a.dim()
        )));
    }
    let images: Vec<SparseVec> = space
        .vectors()
        .iter()
        .map(|v| evaluate_vec(env, v, xs))
        .collect();
    let rank = Span::new(&env.metric(xs.len()), &images)?.rank();
    if rank != space.len() {
        return Err(Error::NotGenerating(format!(
            "evaluation map has rank {rank} on a space of dimension {}",
            space.len()
        )));
    }
    ModuleSubspace::new(env.env().clone(), xs.len(), images)
}

/// `dim φ_X(space)` over `A ⊗ A°` for the space's own generating set.
pub fn derivation_dimension(space: &DerivationSpace) -> Result<VnDimension> {
    vn_dimension(&phi_x(space, space.generators())?)
}

/// Re-expresses a subspace of `L²(N_big)^X` as a subspace of
/// `L²(A ⊗ A°)^{X × G × G}` through the coset decomposition.
///
/// Coordinate `(x, g, h)` has index `x * |G|² + g * |G| + h` and holds
/// `(u_g ⊗ u_h°)^* p_{g,h} v_x`.
pub fn restrict_scalars(sub: &ModuleSubspace, ctx: &CrossedContext) -> Result<ModuleSubspace> {
    let big = ctx.big();
    if sub.algebra.dim() != big.dim_env() {
        return Err(Error::ShapeMismatch(format!(
            "subspace lives over an algebra of dimension {}, expected {}",
            sub.algebra.dim(),
            big.dim_env()
        )));
    }
    let k = ctx.order();
    let grp = ctx.group();
    let dim_big = big.dim_env();
    let dim_small = ctx.small().dim_env();
    let mut pulls = Vec::with_capacity(k * k);
    for g in grp.elements() {
        for h in grp.elements() {
            let adj = big.pair(
                &ctx.crossed_product().unitary(grp.inv(g)),
                &ctx.crossed_product().unitary(grp.inv(h)),
            );
            pulls.push(big.env().left_mult_matrix(&adj) * ctx.projection(g, h));
        }
    }
    let mut vectors = Vec::with_capacity(sub.vectors.len());
    for v in &sub.vectors {
        let mut entries = Vec::new();
        for s in 0..sub.slots {
            let mut block = CVec::from_element(dim_big, ZERO);
            for &(idx, z) in v.iter() {
                if idx / dim_big == s {
                    block[idx % dim_big] = z;
                }
            }
            if block.iter().all(|z| *z == ZERO) {
                continue;
            }
            for (gh, pull) in pulls.iter().enumerate() {
                let (xi, residual) = ctx.pullback_env(&(pull * &block));
                if residual > 1e-9 * (1.0 + crate::linalg::max_abs_vec(&block)) {
                    return Err(Error::ShapeMismatch(format!(
                        "coset component ({}, {}) leaves A ⊗ A° (residual {residual:e})",
                        gh / k,
                        gh % k
                    )));
                }
                let base = (s * k * k + gh) * dim_small;
                for (i, z) in xi.iter().enumerate() {
                    if *z != ZERO {
                        entries.push((base + i, *z));
                    }
                }
            }
        }
        vectors.push(SparseVec::from_sorted(entries));
    }
    ModuleSubspace::new(ctx.small().env().clone(), sub.slots * k * k, vectors)
}

/// Dimensions of the same space computed through two generating sets.
#[derive(Clone, Debug)]
pub struct IndependenceReport {
    pub first: VnDimension,
    pub second: VnDimension,
    pub difference: f64,
    pub pass: bool,
}

pub fn generating_set_independence_check(
    space: &DerivationSpace,
    x1: &[CVec],
    x2: &[CVec],
    tol: f64,
) -> Result<IndependenceReport> {
    let s1 = space.with_generators(x1.to_vec())?;
    let s2 = space.with_generators(x2.to_vec())?;
    let first = vn_dimension(&phi_x(&s1, x1)?)?;
    let second = vn_dimension(&phi_x(&s2, x2)?)?;
    let difference = (first.value - second.value).abs();
    Ok(IndependenceReport {
        pass: difference <= tol,
        first,
        second,
        difference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{group_algebra, multimatrix, CrossedProduct, GroupAction};
    use crate::derivations::{derivation_space, inner_derivations, Envelope};
    use crate::group::FiniteGroup;
    use crate::linalg::{basis_vector, c};

    fn der(a: FDAlgebra) -> DerivationSpace {
        derivation_space(&Envelope::new(Arc::new(a))).unwrap()
    }

    #[test]
    fn full_and_zero_ambients() {
        let n = Arc::new(multimatrix(&[(2, 0.6), (1, 0.4)]).unwrap());
        let full = vn_dimension(&ModuleSubspace::full(n.clone(), 3)).unwrap();
        assert!((full.value - 3.0).abs() < 1e-12);
        assert_eq!(
            vn_dimension(&ModuleSubspace::zero(n, 2)).unwrap().value,
            0.0
        );
    }

    #[test]
    fn group_algebra_z2() {
        let space = der(group_algebra(&FiniteGroup::cyclic(2)));
        let d = derivation_dimension(&space).unwrap();
        assert!((d.value - 0.5).abs() < 1e-12);
        assert_eq!(d.rational, Some((1, 2)));
    }

    #[test]
    fn matrix_algebra_m2() {
        let d = derivation_dimension(&der(multimatrix(&[(2, 1.0)]).unwrap())).unwrap();
        assert!((d.value - 0.75).abs() < 1e-12);
        assert!(d.closure_residual < 1e-10);
    }

    #[test]
    fn non_closed_subspace_is_rejected() {
        let n = Arc::new(multimatrix(&[(2, 1.0)]).unwrap());
        let sub = ModuleSubspace::new(n, 1, vec![SparseVec::unit(0)]).unwrap();
        assert!(matches!(vn_dimension(&sub), Err(Error::NotRightClosed(_))));
    }

    #[test]
    fn phi_x_requires_generation() {
        let space = der(multimatrix(&[(2, 1.0)]).unwrap());
        let diag = [basis_vector(4, 0), basis_vector(4, 3)];
        assert!(matches!(phi_x(&space, &diag), Err(Error::NotGenerating(_))));
    }

    #[test]
    fn phi_x_on_group_unitaries() {
        let env = Envelope::new(Arc::new(group_algebra(&FiniteGroup::cyclic(2))));
        let inn = inner_derivations(&env).unwrap();
        let xs = vec![basis_vector(2, 0), basis_vector(2, 1)];
        let image = phi_x(&inn, &xs).unwrap();
        assert_eq!(vn_dimension(&image).unwrap().rank, 2);
    }

    #[test]
    fn pauli_generators_give_same_dimension() {
        let space = der(multimatrix(&[(2, 1.0)]).unwrap());
        let units: Vec<CVec> = (0..4).map(|i| basis_vector(4, i)).collect();
        let mut sx = crate::linalg::zeros(4);
        sx[1] = c(1.0, 0.0);
        sx[2] = c(1.0, 0.0);
        let mut sy = crate::linalg::zeros(4);
        sy[1] = c(0.0, 1.0);
        sy[2] = c(0.0, -1.0);
        let rep = generating_set_independence_check(&space, &units, &[sx, sy], 1e-9).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!((rep.second.value - 0.75).abs() < 1e-9);
    }

    #[test]
    fn restrict_scalars_on_flip() {
        let blocks = [(1, 0.5), (1, 0.5)];
        let a = Arc::new(multimatrix(&blocks).unwrap());
        let u = GroupAction::block_permutation_matrix(&blocks, &[1, 0]).unwrap();
        let act = GroupAction::from_generators(FiniteGroup::cyclic(2), a, &[(1, u)]).unwrap();
        let ctx = CrossedContext::new(CrossedProduct::new(Arc::new(act)).unwrap());
        let full = ModuleSubspace::full(ctx.big().env().clone(), 1);
        let r = vn_dimension(&restrict_scalars(&full, &ctx).unwrap()).unwrap();
        assert!((r.value - 4.0).abs() < 1e-10);
        let van = ctx.vanishing_space().unwrap();
        let image = phi_x(&van, van.generators()).unwrap();
        let over_big = vn_dimension(&image).unwrap();
        let over_small = vn_dimension(&restrict_scalars(&image, &ctx).unwrap()).unwrap();
        assert!((over_big.value - 0.25).abs() < 1e-10, "{}", over_big.value);
        assert!(
            (over_small.value - 1.0).abs() < 1e-10,
            "{}",
            over_small.value
        );
    }
}
