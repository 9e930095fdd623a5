//! Derivations on a crossed product `A ⋊ G` and their relation to
//! derivations on `A`.

use std::sync::{Arc, OnceLock};

use super::{Derivation, DerivationSpace, Envelope};
use crate::algebra::AntilinearOp;
use crate::constructions::CrossedProduct;
use crate::error::{Error, Result};
use crate::group::FiniteGroup;
use crate::linalg::{kron_mat, max_abs, max_abs_vec, zeros, CMat, CVec, Span, SparseVec, ZERO};

/// Orthogonal projection onto the `(g, h)` coset summand of `L²(N_big)`.
#[derive(Clone, Debug)]
pub struct CosetProjection {
    pub g: usize,
    pub h: usize,
    pub matrix: CMat,
    pub rank: usize,
}

/// A crossed product together with the envelopes of `A` and of `A ⋊ G`.
#[derive(Debug)]
pub struct CrossedContext {
    cp: CrossedProduct,
    small: Arc<Envelope>,
    big: Arc<Envelope>,
    projections: OnceLock<Vec<CosetProjection>>,
    j_big: OnceLock<AntilinearOp>,
    right_twists: OnceLock<Vec<CMat>>,
    restrictors: OnceLock<Vec<CMat>>,
}

impl CrossedContext {
    pub fn new(cp: CrossedProduct) -> Arc<Self> {
        let small = Envelope::new(cp.base().clone());
        let big = Envelope::new(cp.algebra().clone());
        Arc::new(Self {
            cp,
            small,
            big,
            projections: OnceLock::new(),
            j_big: OnceLock::new(),
            right_twists: OnceLock::new(),
            restrictors: OnceLock::new(),
        })
    }

    pub fn crossed_product(&self) -> &CrossedProduct {
        &self.cp
    }

    pub fn group(&self) -> &FiniteGroup {
        self.cp.group()
    }

    pub fn order(&self) -> usize {
        self.cp.order()
    }

    /// Envelope `A ⊗ A°`.
    pub fn small(&self) -> &Arc<Envelope> {
        &self.small
    }

    /// Envelope `(A ⋊ G) ⊗ (A ⋊ G)°`.
    pub fn big(&self) -> &Arc<Envelope> {
        &self.big
    }

    /// Index of `ι(b_p) ⊗ ι(b_q)°` in `N_big`.
    pub fn env_index(&self, pq: usize) -> usize {
        let n = self.small.dim_base();
        let d = self.big.dim_base();
        self.cp.base_index(pq / n) * d + self.cp.base_index(pq % n)
    }

    /// `ι ⊗ ι°: A ⊗ A° -> N_big`.
    pub fn embed_env(&self, xi: &CVec) -> CVec {
        let mut out = zeros(self.big.dim_env());
        for (k, z) in xi.iter().enumerate() {
            out[self.env_index(k)] = *z;
        }
        out
    }

    /// Coordinates of `η` on the image of `A ⊗ A°`, and the size of what is left over.
    pub fn pullback_env(&self, eta: &CVec) -> (CVec, f64) {
        let m = self.small.dim_env();
        let mut rest = eta.clone();
        let mut out = zeros(m);
        for k in 0..m {
            let i = self.env_index(k);
            out[k] = eta[i];
            rest[i] = ZERO;
        }
        (out, max_abs_vec(&rest))
    }

    /// `u_g ⊗ u_h°` in `N_big`.
    pub fn unitary_pair(&self, g: usize, h: usize) -> CVec {
        self.big.pair(&self.cp.unitary(g), &self.cp.unitary(h))
    }

    /// Left multiplication by `u_g ⊗ u_h°` on `L²(N_big)`.
    pub fn unitary_pair_operator(&self, g: usize, h: usize) -> CMat {
        self.big.env().left_mult_matrix(&self.unitary_pair(g, h))
    }

    /// The modular conjugation of `N_big`.
    pub fn j_big(&self) -> &AntilinearOp {
        self.j_big.get_or_init(|| self.big.env().tomita_j())
    }

    /// `J L_{1 ⊗ (u_h^*)°} J`, indexed by `h`.
    fn right_twist(&self, h: usize) -> &CMat {
        let all = self.right_twists.get_or_init(|| {
            let j = self.j_big();
            let g = self.group();
            g.elements()
                .map(|h| {
                    let one = self.cp.unitary(g.identity());
                    let l = self
                        .big
                        .env()
                        .left_mult_matrix(&self.big.pair(&one, &self.cp.unitary(g.inv(h))));
                    j.conjugate(&l)
                })
                .collect()
        });
        &all[h]
    }

    /// `J L_{u_g ⊗ u_h°} J p_{g,h}`, indexed by `g * |G| + h`.
    fn restrictor(&self, g: usize, h: usize) -> &CMat {
        let all = self.restrictors.get_or_init(|| {
            let j = self.j_big();
            let k = self.order();
            let ps = self.coset_projections();
            (0..k * k)
                .map(|gh| {
                    let l = self.unitary_pair_operator(gh / k, gh % k);
                    j.conjugate(&l) * &ps[gh].matrix
                })
                .collect()
        });
        &all[g * self.order() + h]
    }

    /// The family `p_{g,h}`, indexed by `g * |G| + h`.
    pub fn coset_projections(&self) -> &[CosetProjection] {
        self.projections.get_or_init(|| {
            let big = self.big.env();
            let m = self.small.dim_env();
            let metric = big.metric(1);
            let mut out = Vec::new();
            for g in self.group().elements() {
                for h in self.group().elements() {
                    let u = SparseVec::from_dense(&self.unitary_pair(g, h));
                    let vectors: Vec<SparseVec> = (0..m)
                        .map(|k| big.mul_sparse(&SparseVec::unit(self.env_index(k)), &u))
                        .collect();
                    let span =
                        Span::new(&metric, &vectors).expect("coset vectors are well conditioned");
                    let basis = span.basis();
                    let mut q = CMat::from_element(big.dim(), basis.len(), ZERO);
                    for (c, v) in basis.iter().enumerate() {
                        q.set_column(c, &v.to_dense(big.dim()));
                    }
                    out.push(CosetProjection {
                        g,
                        h,
                        matrix: big.gns().projector(&q),
                        rank: basis.len(),
                    });
                }
            }
            out
        })
    }

    pub fn projection(&self, g: usize, h: usize) -> &CMat {
        &self.coset_projections()[g * self.order() + h].matrix
    }

    /// Residuals of the projection family: idempotent, self-adjoint,
    /// pairwise orthogonal, summing to the identity, and commuting with
    /// left and right multiplication by `A ⊗ A°`.
    pub fn projection_residuals(&self) -> ProjectionResiduals {
        let ps = self.coset_projections();
        let big = self.big.env();
        let gns = big.gns();
        let dim = big.dim();
        let mut sum = CMat::from_element(dim, dim, ZERO);
        let mut idempotent: f64 = 0.0;
        let mut self_adjoint: f64 = 0.0;
        let mut orthogonal: f64 = 0.0;
        for (a, p) in ps.iter().enumerate() {
            sum += &p.matrix;
            idempotent = idempotent.max(max_abs(&(&p.matrix * &p.matrix - &p.matrix)));
            self_adjoint = self_adjoint.max(max_abs(&(gns.adjoint_of(&p.matrix) - &p.matrix)));
            for q in ps.iter().skip(a + 1) {
                orthogonal = orthogonal.max(max_abs(&(&p.matrix * &q.matrix)));
            }
        }
        let resolution = max_abs(&(sum - CMat::identity(dim, dim)));
        let mut commutant: f64 = 0.0;
        for k in 0..self.small.dim_env() {
            let e = crate::linalg::basis_vector(big.dim(), self.env_index(k));
            let l = big.left_mult_matrix(&e);
            for p in ps {
                commutant = commutant.max(max_abs(&(&p.matrix * &l - &l * &p.matrix)));
            }
        }
        ProjectionResiduals {
            idempotent,
            self_adjoint,
            orthogonal,
            resolution,
            commutant,
        }
    }

    /// Largest residual of `p_{g,h} (u_k ⊗ u_l°) = (u_k ⊗ u_l°) p_{k⁻¹g, hl⁻¹}`.
    pub fn translation_residual(&self) -> f64 {
        let grp = self.group();
        let ops: Vec<CMat> = (0..self.order() * self.order())
            .map(|kl| self.unitary_pair_operator(kl / self.order(), kl % self.order()))
            .collect();
        let mut res: f64 = 0.0;
        for g in grp.elements() {
            for h in grp.elements() {
                for k in grp.elements() {
                    for l in grp.elements() {
                        let op = &ops[k * self.order() + l];
                        let lhs = self.projection(g, h) * op;
                        let rhs =
                            op * self.projection(grp.mul(grp.inv(k), g), grp.mul(h, grp.inv(l)));
                        res = res.max(max_abs(&(lhs - rhs)));
                    }
                }
            }
        }
        res
    }

    /// Largest residual of `J p_{g,h} = p_{g⁻¹,h⁻¹} J`.
    pub fn conjugation_residual(&self) -> f64 {
        let grp = self.group();
        let s = &self.j_big().matrix;
        let mut res: f64 = 0.0;
        for g in grp.elements() {
            for h in grp.elements() {
                let lhs = s * self.projection(g, h).map(|z| z.conj());
                let rhs = self.projection(grp.inv(g), grp.inv(h)) * s;
                res = res.max(max_abs(&(lhs - rhs)));
            }
        }
        res
    }

    /// `Y = ι(X) ∪ {u_g}` for the full basis `X` of `A`.
    pub fn default_generators(&self) -> Vec<CVec> {
        self.cp.default_generators()
    }

    /// `ι_G(C[G])` as a list of basis vectors of `A ⋊ G`.
    pub fn group_subalgebra(&self) -> Vec<CVec> {
        self.cp.unitaries()
    }

    /// `Der(C[G] ⊂ A ⋊ G)`, orthonormal for `Y`.
    pub fn vanishing_space(&self) -> Result<DerivationSpace> {
        let full =
            super::derivation_space(&self.big)?.with_generators(self.default_generators())?;
        super::relative_derivations(&full, &self.group_subalgebra())
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ProjectionResiduals {
    pub idempotent: f64,
    pub self_adjoint: f64,
    pub orthogonal: f64,
    pub resolution: f64,
    pub commutant: f64,
}

impl ProjectionResiduals {
    pub fn max(&self) -> f64 {
        self.idempotent
            .max(self.self_adjoint)
            .max(self.orthogonal)
            .max(self.resolution)
            .max(self.commutant)
    }
}

/// `d^h` on `A ⋊ G` for a derivation `d` on `A`.
pub fn extend(ctx: &CrossedContext, d: &Derivation, h: usize) -> Derivation {
    let cp = &ctx.cp;
    let grp = ctx.group();
    let big = &ctx.big;
    let n = ctx.small.dim_base();
    let mut matrix = CMat::from_element(big.dim_env(), big.dim_base(), ZERO);
    for i in 0..n {
        // d(α_g(b_i)) for every g, embedded in N_big
        let values: Vec<CVec> = grp
            .elements()
            .map(|g| ctx.embed_env(&d.apply(&cp.action().map(g).column(i).into_owned())))
            .collect();
        for k in grp.elements() {
            let mut acc = zeros(big.dim_env());
            for g in grp.elements() {
                let left = cp.unitary(grp.inv(g));
                let right = cp.unitary(grp.mul(g, k));
                acc += big.bimodule(&left, &values[g], &right);
            }
            matrix.set_column(cp.index(i, k), &(ctx.right_twist(h) * acc));
        }
    }
    Derivation::new(big.clone(), matrix).expect("shape fixed by construction")
}

/// `D_{g,h}` together with the size of the component that fails to land in `A ⊗ A°`.
pub fn restrict_with_residual(
    ctx: &CrossedContext,
    dd: &Derivation,
    g: usize,
    h: usize,
) -> (Derivation, f64) {
    let n = ctx.small.dim_base();
    let op = ctx.restrictor(g, h);
    let mut matrix = CMat::from_element(ctx.small.dim_env(), n, ZERO);
    let mut residual: f64 = 0.0;
    for i in 0..n {
        let v = dd.apply(&ctx.cp.embed_base(&ctx.small.base().basis_vector(i)));
        let (col, res) = ctx.pullback_env(&(op * v));
        residual = residual.max(res);
        matrix.set_column(i, &col);
    }
    let d = Derivation::new(ctx.small.clone(), matrix).expect("shape fixed by construction");
    (d, residual)
}

/// `D_{g,h}`.
pub fn restrict(ctx: &CrossedContext, dd: &Derivation, g: usize, h: usize) -> Derivation {
    restrict_with_residual(ctx, dd, g, h).0
}

/// `(1 ⊗ α_h)(m)` for `m` in `A ⊗ A°`.
pub fn twist_action(ctx: &CrossedContext, m: &CVec, h: usize) -> CVec {
    let n = ctx.small.dim_base();
    kron_mat(&CMat::identity(n, n), ctx.cp.action().map(h)) * m
}

/// Outcome of the covariance test.
#[derive(Clone, Copy, Debug)]
pub struct Covariance {
    /// Largest `|D(u_g b u_g^*) - u_g · D(b) · u_g^*|` over basis `b` and `g`.
    pub residual: f64,
    /// Largest `|D(u_g)|`.
    pub vanishing_residual: f64,
    pub covariant: bool,
    pub vanishes: bool,
}

pub fn is_covariant(ctx: &CrossedContext, dd: &Derivation, tol: f64) -> Covariance {
    let cp = &ctx.cp;
    let grp = ctx.group();
    let big = &ctx.big;
    let dim = big.dim_base();
    let mut residual: f64 = 0.0;
    let mut vanishing_residual: f64 = 0.0;
    for g in grp.elements() {
        let u = cp.unitary(g);
        let u_star = cp.unitary(grp.inv(g));
        let ad = cp.ad_unitary(g);
        for b in 0..dim {
            let lhs = dd.apply(&ad.column(b).into_owned());
            let rhs = big.bimodule(&u, &dd.matrix().column(b).into_owned(), &u_star);
            residual = residual.max(max_abs_vec(&(lhs - rhs)));
        }
        vanishing_residual = vanishing_residual.max(max_abs_vec(&dd.apply(&u)));
    }
    Covariance {
        residual,
        vanishing_residual,
        covariant: residual <= tol,
        vanishes: vanishing_residual <= tol,
    }
}

/// `D = Σ_h (D_h)^h` and `(Σ_g (d_g)^g)_h = d_h`, checked on a space.
#[derive(Clone, Debug)]
pub struct VanishingDecomposition {
    /// `components[i][h] = (D_i)_h` for the basis derivations `D_i`.
    pub components: Vec<Vec<Derivation>>,
    pub forward_residual: f64,
    pub backward_residual: f64,
    pub pullback_residual: f64,
    pub vanishing_dim: usize,
    pub base_dim: usize,
}

pub fn decompose_vanishing(
    ctx: &CrossedContext,
    vanishing: &DerivationSpace,
    base: &DerivationSpace,
) -> VanishingDecomposition {
    let grp = ctx.group();
    let e = grp.identity();
    let mut components = Vec::with_capacity(vanishing.len());
    let mut forward_residual: f64 = 0.0;
    let mut pullback_residual: f64 = 0.0;
    for dd in vanishing.derivations() {
        let mut comps = Vec::with_capacity(ctx.order());
        let mut total = Derivation::zero(ctx.big.clone());
        for h in grp.elements() {
            let (c, res) = restrict_with_residual(ctx, &dd, e, h);
            pullback_residual = pullback_residual.max(res);
            total = total.add(&extend(ctx, &c, h));
            comps.push(c);
        }
        forward_residual = forward_residual.max(total.sub(&dd).max_abs());
        components.push(comps);
    }
    let mut backward_residual: f64 = 0.0;
    let ds = base.derivations();
    if !ds.is_empty() {
        for shift in 0..ds.len().min(3) {
            let tuple: Vec<Derivation> = grp
                .elements()
                .map(|g| {
                    ds[(g + shift) % ds.len()]
                        .scale(crate::linalg::c(1.0 + g as f64, 0.5 * shift as f64))
                })
                .collect();
            let mut total = Derivation::zero(ctx.big.clone());
            for g in grp.elements() {
                total = total.add(&extend(ctx, &tuple[g], g));
            }
            for h in grp.elements() {
                let (back, res) = restrict_with_residual(ctx, &total, e, h);
                pullback_residual = pullback_residual.max(res);
                backward_residual = backward_residual.max(back.sub(&tuple[h]).max_abs());
            }
        }
    }
    VanishingDecomposition {
        components,
        forward_residual,
        backward_residual,
        pullback_residual,
        vanishing_dim: vanishing.len(),
        base_dim: base.len(),
    }
}

/// `V_g: D -> u_g^* · D(α_g(·)) · u_g` on derivations of `A ⋊ G`.
#[derive(Clone, Debug)]
pub struct VgMap {
    pub g: usize,
    left: CMat,
    ad: CMat,
}

impl VgMap {
    pub fn apply(&self, dd: &Derivation) -> Derivation {
        Derivation::new(dd.envelope().clone(), &self.left * dd.matrix() * &self.ad)
            .expect("same shape")
    }
}

/// Builds `V_g` after checking that every `y ∈ Y` is an eigenvector of `Ad(u_g)`.
pub fn vg_unitary(ctx: &CrossedContext, g: usize, ys: &[CVec], tol: f64) -> Result<VgMap> {
    let cp = &ctx.cp;
    let c = cp.algebra();
    let ad = cp.ad_unitary(g);
    for (idx, y) in ys.iter().enumerate() {
        let img = &ad * y;
        let yy = c.inner(y, y);
        if yy.norm() == 0.0 {
            return Err(Error::GeneratingSetNotScaled(format!(
                "generator {idx} is zero"
            )));
        }
        let lambda = c.inner(&img, y) / yy;
        let res = c.norm(&(img - y * lambda));
        if res > tol {
            return Err(Error::GeneratingSetNotScaled(format!(
                "generator {idx} is not an eigenvector of Ad(u_{g}) (residual {res:e})"
            )));
        }
    }
    let grp = ctx.group();
    let left = ctx
        .big
        .env()
        .left_mult_matrix(&ctx.big.pair(&cp.unitary(grp.inv(g)), &cp.unitary(g)));
    Ok(VgMap { g, left, ad })
}

/// `(1/|G|) Σ_g V_g D`.
pub fn average(maps: &[VgMap], dd: &Derivation) -> Derivation {
    let mut total = Derivation::zero(dd.envelope().clone());
    for v in maps {
        total = total.add(&v.apply(dd));
    }
    total.scale(crate::linalg::r(1.0 / maps.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{multimatrix, GroupAction};
    use crate::derivations::derivation_space;

    fn flip_context() -> Arc<CrossedContext> {
        let blocks = [(1, 0.5), (1, 0.5)];
        let a = Arc::new(multimatrix(&blocks).unwrap());
        let u = GroupAction::block_permutation_matrix(&blocks, &[1, 0]).unwrap();
        let act = GroupAction::from_generators(FiniteGroup::cyclic(2), a, &[(1, u)]).unwrap();
        CrossedContext::new(CrossedProduct::new(Arc::new(act)).unwrap())
    }

    #[test]
    fn coset_projections_resolve_identity() {
        let ctx = flip_context();
        let r = ctx.projection_residuals();
        assert!(r.max() < 1e-10, "{r:?}");
        assert!(ctx.translation_residual() < 1e-10);
        assert!(ctx.conjugation_residual() < 1e-10);
        assert!(ctx.coset_projections().iter().all(|p| p.rank == 4));
    }

    #[test]
    fn extend_and_restrict_round_trip() {
        let ctx = flip_context();
        let der = derivation_space(ctx.small()).unwrap();
        assert_eq!(der.len(), 2);
        for d in der.derivations() {
            for h in 0..2 {
                let dh = extend(&ctx, &d, h);
                assert!(dh.leibniz_residual() < 1e-10);
                let cov = is_covariant(&ctx, &dh, 1e-9);
                assert!(cov.covariant && cov.vanishes);
                for g in 0..2 {
                    let back = restrict(&ctx, &dh, ctx.group().identity(), g);
                    let diff = if g == h {
                        back.sub(&d).max_abs()
                    } else {
                        back.max_abs()
                    };
                    assert!(diff < 1e-10, "g={g} h={h} diff={diff}");
                }
            }
        }
    }

    #[test]
    fn vanishing_space_decomposes() {
        let ctx = flip_context();
        let van = ctx.vanishing_space().unwrap();
        let base = derivation_space(ctx.small()).unwrap();
        assert_eq!(van.len(), 2 * base.len());
        let dec = decompose_vanishing(&ctx, &van, &base);
        assert!(dec.forward_residual < 1e-9, "{}", dec.forward_residual);
        assert!(dec.backward_residual < 1e-9, "{}", dec.backward_residual);
        assert!(dec.pullback_residual < 1e-9);
    }
}
