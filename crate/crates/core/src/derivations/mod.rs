//! Derivations `d: A -> L²(A ⊗ A°)` for the coarse bimodule
//! `x · ξ · y = (x ⊗ y°) ξ`.
//!
//! A derivation is stored by its values on the basis: column `j` of the
//! matrix holds `d(b_j)`. Spaces of derivations are stored as sparse vectors
//! in the column-major vectorization, index `j * dim(N) + k`.

mod crossed;

pub use crossed::{average, ProjectionResiduals};

pub use crossed::{
    decompose_vanishing, extend, is_covariant, restrict, restrict_with_residual, twist_action,
    vg_unitary, CosetProjection, Covariance, CrossedContext, VanishingDecomposition, VgMap,
};

use std::sync::Arc;

use crate::algebra::FDAlgebra;
use crate::constructions::{opposite, subalgebra_generate, tensor, MatrixUnits};
use crate::error::{Error, Result};
use crate::linalg::{
    kron_vec, max_abs, r, sparse_nullspace, zeros, CMat, CVec, Metric, Span, SparseAccumulator,
    SparseVec, C64, ONE, ZERO,
};

/// An algebra `A` together with its enveloping algebra `N = A ⊗ A°`.
#[derive(Debug)]
pub struct Envelope {
    base: Arc<FDAlgebra>,
    env: Arc<FDAlgebra>,
}

impl Envelope {
    pub fn new(base: Arc<FDAlgebra>) -> Arc<Self> {
        let env = Arc::new(tensor(&base, &opposite(&base)));
        Arc::new(Self { base, env })
    }

    pub fn base(&self) -> &Arc<FDAlgebra> {
        &self.base
    }

    pub fn env(&self) -> &Arc<FDAlgebra> {
        &self.env
    }

    pub fn dim_base(&self) -> usize {
        self.base.dim()
    }

    pub fn dim_env(&self) -> usize {
        self.env.dim()
    }

    /// `x ⊗ y°`.
    pub fn pair(&self, x: &CVec, y: &CVec) -> CVec {
        kron_vec(x, y)
    }

    /// `x · ξ · y = (x ⊗ y°) ξ`.
    pub fn bimodule(&self, x: &CVec, xi: &CVec, y: &CVec) -> CVec {
        self.env.mul(&self.pair(x, y), xi)
    }

    /// `(b_i ⊗ 1) ξ`.
    pub fn left_basis(&self, i: usize, xi: &SparseVec) -> SparseVec {
        let n = self.dim_base();
        let mut acc = SparseAccumulator::with_capacity(xi.nnz());
        for &(pq, z) in xi.iter() {
            let (p, q) = (pq / n, pq % n);
            for &(k, c) in self.base.mul_basis(i, p) {
                acc.push(k * n + q, c * z);
            }
        }
        acc.finish()
    }

    /// `(1 ⊗ b_j°) ξ`, i.e. right multiplication of the second leg by `b_j`.
    pub fn right_basis(&self, j: usize, xi: &SparseVec) -> SparseVec {
        let n = self.dim_base();
        let mut acc = SparseAccumulator::with_capacity(xi.nnz());
        for &(pq, z) in xi.iter() {
            let (p, q) = (pq / n, pq % n);
            for &(k, c) in self.base.mul_basis(q, j) {
                acc.push(p * n + k, c * z);
            }
        }
        acc.finish()
    }

    /// `x · ξ - ξ · x` for `x` in `A`.
    pub fn commutator(&self, x: &CVec, xi: &SparseVec) -> SparseVec {
        let mut acc = SparseAccumulator::default();
        for (i, xv) in x.iter().enumerate() {
            if *xv == ZERO {
                continue;
            }
            acc.add_vec(*xv, &self.left_basis(i, xi));
            acc.add_vec(-*xv, &self.right_basis(i, xi));
        }
        acc.finish()
    }

    pub fn metric(&self, slots: usize) -> Metric<'_> {
        self.env.metric(slots)
    }
}

/// A derivation, stored by its values on the basis of `A`.
#[derive(Clone, Debug)]
pub struct Derivation {
    env: Arc<Envelope>,
    matrix: CMat,
}

impl Derivation {
    pub fn new(env: Arc<Envelope>, matrix: CMat) -> Result<Self> {
        let shape = (env.dim_env(), env.dim_base());
        if matrix.shape() != shape {
            return Err(Error::ShapeMismatch(format!(
                "derivation matrix must be {shape:?}, got {:?}",
                matrix.shape()
            )));
        }
        Ok(Self { env, matrix })
    }

    pub fn zero(env: Arc<Envelope>) -> Self {
        let matrix = CMat::from_element(env.dim_env(), env.dim_base(), ZERO);
        Self { env, matrix }
    }

    /// Inner derivation `x -> x · ξ - ξ · x`.
    pub fn inner(env: Arc<Envelope>, xi: &CVec) -> Self {
        let xs = SparseVec::from_dense(xi);
        let mut matrix = CMat::from_element(env.dim_env(), env.dim_base(), ZERO);
        for j in 0..env.dim_base() {
            let col = env
                .left_basis(j, &xs)
                .axpy(-ONE, &env.right_basis(j, &xs))
                .to_dense(env.dim_env());
            matrix.set_column(j, &col);
        }
        Self { env, matrix }
    }

    pub fn from_vec(env: Arc<Envelope>, v: &SparseVec) -> Self {
        let m = env.dim_env();
        let mut matrix = CMat::from_element(m, env.dim_base(), ZERO);
        for &(idx, z) in v.iter() {
            matrix[(idx % m, idx / m)] = z;
        }
        Self { env, matrix }
    }

    pub fn to_vec(&self) -> SparseVec {
        let m = self.env.dim_env();
        let mut entries = Vec::new();
        for j in 0..self.matrix.ncols() {
            for k in 0..m {
                let z = self.matrix[(k, j)];
                if z != ZERO {
                    entries.push((j * m + k, z));
                }
            }
        }
        SparseVec::from_sorted(entries)
    }

    pub fn envelope(&self) -> &Arc<Envelope> {
        &self.env
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// `d(x)`.
    pub fn apply(&self, x: &CVec) -> CVec {
        &self.matrix * x
    }

    /// Maximum over basis pairs of `|d(b_i b_j) - b_i · d(b_j) - d(b_i) · b_j|`.
    pub fn leibniz_residual(&self) -> f64 {
        let env = &self.env;
        let n = env.dim_base();
        let cols: Vec<SparseVec> = (0..n)
            .map(|j| SparseVec::from_dense(&self.matrix.column(j).into_owned()))
            .collect();
        let mut res: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut acc = SparseAccumulator::default();
                for &(l, c) in env.base.mul_basis(i, j) {
                    acc.add_vec(c, &cols[l]);
                }
                acc.add_vec(-ONE, &env.left_basis(i, &cols[j]));
                acc.add_vec(-ONE, &env.right_basis(j, &cols[i]));
                res = res.max(acc.finish().max_abs());
            }
        }
        res
    }

    /// `<d, d'>_X = Σ_{x ∈ X} <d(x), d'(x)>`.
    pub fn inner_on(&self, other: &Derivation, xs: &[CVec]) -> C64 {
        let env = &self.env.env;
        xs.iter()
            .map(|x| env.inner(&self.apply(x), &other.apply(x)))
            .sum()
    }

    /// `(d · m)(x) = d(x) m`.
    pub fn right_act(&self, m: &CVec) -> Derivation {
        let rm = self.env.env.right_mult_matrix(m);
        Self {
            env: self.env.clone(),
            matrix: rm * &self.matrix,
        }
    }

    pub fn scale(&self, s: C64) -> Derivation {
        Self {
            env: self.env.clone(),
            matrix: &self.matrix * s,
        }
    }

    pub fn add(&self, other: &Derivation) -> Derivation {
        Self {
            env: self.env.clone(),
            matrix: &self.matrix + &other.matrix,
        }
    }

    pub fn sub(&self, other: &Derivation) -> Derivation {
        Self {
            env: self.env.clone(),
            matrix: &self.matrix - &other.matrix,
        }
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    /// Values on a family of elements, as one vector of `L²(N)^X`.
    pub fn evaluate_on(&self, xs: &[CVec]) -> SparseVec {
        let m = self.env.dim_env();
        let mut entries = Vec::new();
        for (s, x) in xs.iter().enumerate() {
            for (k, z) in self.apply(x).iter().enumerate() {
                if *z != ZERO {
                    entries.push((s * m + k, *z));
                }
            }
        }
        SparseVec::from_sorted(entries)
    }
}

/// A space of derivations with a basis orthonormal for `<·,·>_X`.
#[derive(Clone, Debug)]
pub struct DerivationSpace {
    env: Arc<Envelope>,
    generators: Vec<CVec>,
    basis: Vec<SparseVec>,
}

impl DerivationSpace {
    /// Orthonormalizes `vectors` (vectorized derivations) for `<·,·>_X`.
    pub fn from_vectors(
        env: Arc<Envelope>,
        generators: Vec<CVec>,
        vectors: &[SparseVec],
    ) -> Result<Self> {
        for x in &generators {
            crate::linalg::check_len(x, env.dim_base(), "generator")?;
        }
        let basis = if is_standard_basis(&generators, env.dim_base()) {
            Span::new(&env.metric(env.dim_base()), vectors)?.basis()
        } else {
            let images: Vec<SparseVec> = vectors
                .iter()
                .map(|v| evaluate_vec(&env, v, &generators))
                .collect();
            let span = Span::new(&env.metric(generators.len()), &images)?;
            span.combinations()
                .iter()
                .map(|(members, coef)| {
                    SparseVec::linear_combination(
                        members
                            .iter()
                            .zip(coef.iter())
                            .map(|(&m, &z)| (z, &vectors[m])),
                    )
                })
                .collect()
        };
        Ok(Self {
            env,
            generators,
            basis,
        })
    }

    pub fn from_derivations(
        env: Arc<Envelope>,
        generators: Vec<CVec>,
        ds: &[Derivation],
    ) -> Result<Self> {
        let vectors: Vec<SparseVec> = ds.iter().map(|d| d.to_vec()).collect();
        Self::from_vectors(env, generators, &vectors)
    }

    /// Same space, orthonormalized for another generating set.
    pub fn with_generators(&self, generators: Vec<CVec>) -> Result<Self> {
        Self::from_vectors(self.env.clone(), generators, &self.basis)
    }

    pub fn envelope(&self) -> &Arc<Envelope> {
        &self.env
    }

    pub fn generators(&self) -> &[CVec] {
        &self.generators
    }

    /// Linear dimension.
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn vectors(&self) -> &[SparseVec] {
        &self.basis
    }

    pub fn derivation(&self, i: usize) -> Derivation {
        Derivation::from_vec(self.env.clone(), &self.basis[i])
    }

    pub fn derivations(&self) -> Vec<Derivation> {
        (0..self.len()).map(|i| self.derivation(i)).collect()
    }

    /// Gram matrix of the basis under `<·,·>_X`.
    pub fn gram(&self) -> CMat {
        let images: Vec<SparseVec> = self
            .basis
            .iter()
            .map(|v| evaluate_vec(&self.env, v, &self.generators))
            .collect();
        let metric = self.env.metric(self.generators.len());
        CMat::from_fn(self.len(), self.len(), |i, j| {
            metric.inner(&images[j], &images[i])
        })
    }

    /// Largest Leibniz residual over the basis.
    pub fn max_leibniz_residual(&self) -> f64 {
        (0..self.len())
            .map(|i| self.derivation(i).leibniz_residual())
            .fold(0.0, f64::max)
    }

    /// Largest distance (in `<·,·>_X`) of the vectors of `other` from this space.
    pub fn containment_residual(&self, other: &DerivationSpace) -> Result<f64> {
        let metric = self.env.metric(self.generators.len());
        let images: Vec<SparseVec> = self
            .basis
            .iter()
            .map(|v| evaluate_vec(&self.env, v, &self.generators))
            .collect();
        let span = Span::new(&metric, &images)?;
        Ok(other
            .basis
            .iter()
            .map(|v| span.residual(&metric, &evaluate_vec(&self.env, v, &self.generators)))
            .fold(0.0, f64::max))
    }

    /// Distance of a single derivation from this space.
    pub fn residual_of(&self, d: &Derivation) -> Result<f64> {
        let metric = self.env.metric(self.generators.len());
        let images: Vec<SparseVec> = self
            .basis
            .iter()
            .map(|v| evaluate_vec(&self.env, v, &self.generators))
            .collect();
        let span = Span::new(&metric, &images)?;
        Ok(span.residual(
            &metric,
            &evaluate_vec(&self.env, &d.to_vec(), &self.generators),
        ))
    }

    /// Largest residual of `d · m` against the space, over basis `d` and basis `m` of `N`.
    pub fn right_closure_residual(&self) -> Result<f64> {
        let env = &self.env;
        let metric = env.metric(self.generators.len());
        let images: Vec<SparseVec> = self
            .basis
            .iter()
            .map(|v| evaluate_vec(env, v, &self.generators))
            .collect();
        let span = Span::new(&metric, &images)?;
        let mut worst: f64 = 0.0;
        for v in &images {
            for m in 0..env.dim_env() {
                let w = right_mult_slotwise(&env.env, v, &SparseVec::unit(m));
                worst = worst.max(span.residual(&metric, &w));
            }
        }
        Ok(worst)
    }
}

fn is_standard_basis(xs: &[CVec], n: usize) -> bool {
    xs.len() == n
        && xs.iter().enumerate().all(|(i, x)| {
            x.iter()
                .enumerate()
                .all(|(k, z)| if k == i { *z == ONE } else { *z == ZERO })
        })
}

/// `(d(x))_{x ∈ X}` for a vectorized derivation.
pub(crate) fn evaluate_vec(env: &Envelope, v: &SparseVec, xs: &[CVec]) -> SparseVec {
    let m = env.dim_env();
    if is_standard_basis(xs, env.dim_base()) {
        return v.clone();
    }
    let mut acc = SparseAccumulator::with_capacity(v.nnz() * xs.len());
    for &(idx, z) in v.iter() {
        let (j, k) = (idx / m, idx % m);
        for (s, x) in xs.iter().enumerate() {
            let xj = x[j];
            if xj != ZERO {
                acc.push(s * m + k, xj * z);
            }
        }
    }
    acc.finish()
}

/// Slotwise right multiplication `v · y` in `L²(N)^X`.
pub(crate) fn right_mult_slotwise(n: &FDAlgebra, v: &SparseVec, y: &SparseVec) -> SparseVec {
    let m = n.dim();
    let mut acc = SparseAccumulator::with_capacity(v.nnz() * y.nnz());
    for &(idx, z) in v.iter() {
        let (s, i) = (idx / m, idx % m);
        for &(l, yl) in y.iter() {
            for &(k, c) in n.mul_basis(i, l) {
                acc.push(s * m + k, z * yl * c);
            }
        }
    }
    acc.finish()
}

/// All derivations `A -> L²(A ⊗ A°)`, orthonormal for the full basis.
///
/// Unknowns are the entries of the matrix of `d`; equations are the Leibniz
/// rule on every pair of basis elements.
pub fn derivation_space(env: &Arc<Envelope>) -> Result<DerivationSpace> {
    let rows = leibniz_rows(env);
    let n = env.dim_base();
    let m = env.dim_env();
    let ns = sparse_nullspace(n * m, &rows)?;
    let gens: Vec<CVec> = (0..n).map(|i| env.base.basis_vector(i)).collect();
    DerivationSpace::from_vectors(env.clone(), gens, &ns.vectors)
}

/// Derivation space of `a`, building its envelope.
pub fn derivation_space_of(a: Arc<FDAlgebra>) -> Result<DerivationSpace> {
    derivation_space(&Envelope::new(a))
}

fn leibniz_rows(env: &Envelope) -> Vec<SparseVec> {
    let n = env.dim_base();
    let m = env.dim_env();
    let a = &env.base;
    let var = |k: usize, j: usize| j * m + k;
    let mut rows = Vec::with_capacity(n * n * m);
    let mut scratch: Vec<Vec<(usize, C64)>> = vec![Vec::new(); m];
    for i in 0..n {
        for j in 0..n {
            for s in scratch.iter_mut() {
                s.clear();
            }
            // d(b_i b_j)
            for &(l, c) in a.mul_basis(i, j) {
                for (k, row) in scratch.iter_mut().enumerate() {
                    row.push((var(k, l), c));
                }
            }
            // - (b_i ⊗ 1) d(b_j)
            for p2 in 0..n {
                for &(p, c) in a.mul_basis(i, p2) {
                    for q in 0..n {
                        scratch[p * n + q].push((var(p2 * n + q, j), -c));
                    }
                }
            }
            // - (1 ⊗ b_j°) d(b_i)
            for q2 in 0..n {
                for &(q, c) in a.mul_basis(q2, j) {
                    for p in 0..n {
                        scratch[p * n + q].push((var(p * n + q2, i), -c));
                    }
                }
            }
            for row in scratch.iter_mut() {
                if row.is_empty() {
                    continue;
                }
                let mut acc = SparseAccumulator::with_capacity(row.len());
                for &(v, c) in row.iter() {
                    acc.push(v, c);
                }
                let sv = acc.finish();
                if !sv.is_empty() {
                    rows.push(sv);
                }
            }
        }
    }
    rows
}

/// Span of the inner derivations `[·, ξ]` over the basis `ξ` of `N`.
pub fn inner_derivations(env: &Arc<Envelope>) -> Result<DerivationSpace> {
    let n = env.dim_base();
    let m = env.dim_env();
    let mut vectors = Vec::with_capacity(m);
    for e in 0..m {
        let xi = SparseVec::unit(e);
        let mut acc = SparseAccumulator::default();
        for j in 0..n {
            let col = env.left_basis(j, &xi).axpy(-ONE, &env.right_basis(j, &xi));
            for &(k, z) in col.iter() {
                acc.push(j * m + k, z);
            }
        }
        let v = acc.finish();
        if !v.is_empty() {
            vectors.push(v);
        }
    }
    let gens: Vec<CVec> = (0..n).map(|i| env.base.basis_vector(i)).collect();
    DerivationSpace::from_vectors(env.clone(), gens, &vectors)
}

/// Derivations of `space` vanishing on the unital *-subalgebra spanned by `b_basis`.
pub fn relative_derivations(space: &DerivationSpace, b_basis: &[CVec]) -> Result<DerivationSpace> {
    let env = space.envelope();
    let a = env.base();
    let given = if b_basis.is_empty() {
        0
    } else {
        let vs: Vec<SparseVec> = b_basis.iter().map(SparseVec::from_dense).collect();
        Span::new(&a.metric(1), &vs)?.rank()
    };
    let generated = subalgebra_generate(a, b_basis)?;
    if generated.dim() != given {
        return Err(Error::NotSubalgebra {
            given,
            generated: generated.dim(),
        });
    }
    let m = env.dim_env();
    let r_dim = space.len();
    let mut rows_acc: Vec<SparseAccumulator> = Vec::new();
    rows_acc.resize_with(generated.dim() * m, SparseAccumulator::default);
    for (i, v) in space.vectors().iter().enumerate() {
        for (bi, b) in generated.basis.iter().enumerate() {
            let val = evaluate_vec(env, v, std::slice::from_ref(b));
            for &(k, z) in val.iter() {
                rows_acc[bi * m + k].push(i, z);
            }
        }
    }
    let rows: Vec<SparseVec> = rows_acc
        .into_iter()
        .map(|a| a.finish())
        .filter(|r| !r.is_empty())
        .collect();
    let ns = sparse_nullspace(r_dim, &rows)?;
    let vectors: Vec<SparseVec> = ns
        .vectors
        .iter()
        .map(|c| SparseVec::linear_combination(c.iter().map(|&(i, z)| (z, &space.vectors()[i]))))
        .collect();
    DerivationSpace::from_vectors(env.clone(), space.generators().to_vec(), &vectors)
}

/// GNS-orthonormal basis of `{ξ ∈ L²(N) : b · ξ = ξ · b for all b}`.
pub fn central_vectors(env: &Arc<Envelope>, b_basis: &[CVec]) -> Result<Vec<SparseVec>> {
    let m = env.dim_env();
    let mut rows_acc: Vec<SparseAccumulator> = Vec::new();
    rows_acc.resize_with(b_basis.len() * m, SparseAccumulator::default);
    for (bi, b) in b_basis.iter().enumerate() {
        crate::linalg::check_len(b, env.dim_base(), "subalgebra element")?;
        for e in 0..m {
            let col = env.commutator(b, &SparseVec::unit(e));
            for &(k, z) in col.iter() {
                rows_acc[bi * m + k].push(e, z);
            }
        }
    }
    let rows: Vec<SparseVec> = rows_acc
        .into_iter()
        .map(|a| a.finish())
        .filter(|r| !r.is_empty())
        .collect();
    let ns = sparse_nullspace(m, &rows)?;
    Ok(Span::new(&env.metric(1), &ns.vectors)?.basis())
}

/// The element `p = Σ_i (1/n_i) Σ_{j,k} e^{(i)}_{jk} ⊗ (e^{(i)}_{kj})°` of
/// `A ⊗ A°` and its comparison with the projection onto central vectors.
#[derive(Clone, Debug)]
pub struct CentralProjection {
    pub element: CVec,
    /// Left multiplication by `p` on `L²(N)`.
    pub operator: CMat,
    /// Orthogonal projection onto the `B`-central vectors.
    pub central_projection: CMat,
    /// `max |L_p - P|`.
    pub residual: f64,
    /// `(τ ⊗ τ°)(p)`.
    pub trace: f64,
    pub central_rank: usize,
}

pub fn lemma11_projection(env: &Arc<Envelope>, units: &MatrixUnits) -> Result<CentralProjection> {
    let a = env.base();
    units.check(a, 1e-9)?;
    let mut p = zeros(env.dim_env());
    for block in &units.units {
        let n = block.len() as f64;
        for (j, row) in block.iter().enumerate() {
            for (k, e_jk) in row.iter().enumerate() {
                p += env.pair(e_jk, &block[k][j]) * r(1.0 / n);
            }
        }
    }
    let operator = env.env().left_mult_matrix(&p);
    let central = central_vectors(env, &units.all())?;
    let m = env.dim_env();
    let mut q = CMat::from_element(m, central.len(), ZERO);
    for (c, v) in central.iter().enumerate() {
        q.set_column(c, &v.to_dense(m));
    }
    let central_projection = env.env().gns().projector(&q);
    let residual = max_abs(&(&operator - &central_projection));
    let trace = env.env().tau(&p).re;
    Ok(CentralProjection {
        element: p,
        operator,
        central_projection,
        residual,
        trace,
        central_rank: central.len(),
    })
}

/// The family `f_h = |G|^{-1/2} Σ_k δ_{kh} ⊗ δ_{k^{-1}}°` in `L²(C[G] ⊗ C[G]°)`.
pub fn group_central_family(
    env: &Envelope,
    group: &crate::group::FiniteGroup,
) -> Result<Vec<CVec>> {
    let n = group.order();
    if env.dim_base() != n {
        return Err(Error::ShapeMismatch(
            "envelope is not over the group algebra".into(),
        ));
    }
    let s = 1.0 / (n as f64).sqrt();
    Ok(group
        .elements()
        .map(|h| {
            let mut f = zeros(n * n);
            for k in group.elements() {
                f[group.mul(k, h) * n + group.inv(k)] += r(s);
            }
            f
        })
        .collect())
}

/// Largest entry of `G - I` for the Gram matrix of a family in `L²(N)`.
pub fn orthonormality_residual(n: &FDAlgebra, family: &[CVec]) -> f64 {
    let g = CMat::from_fn(family.len(), family.len(), |i, j| {
        n.inner(&family[j], &family[i])
    });
    max_abs(&(g - CMat::identity(family.len(), family.len())))
}

/// Largest GNS distance of the vectors of `family` from `span`, and back.
pub fn span_distance(n: &FDAlgebra, a: &[CVec], b: &[SparseVec]) -> Result<f64> {
    let metric = n.metric(1);
    let av: Vec<SparseVec> = a.iter().map(SparseVec::from_dense).collect();
    let sa = Span::new(&metric, &av)?;
    let sb = Span::new(&metric, b)?;
    let d1 = b
        .iter()
        .map(|v| sa.residual(&metric, v))
        .fold(0.0, f64::max);
    let d2 = av
        .iter()
        .map(|v| sb.residual(&metric, v))
        .fold(0.0, f64::max);
    Ok(d1.max(d2))
}

/// Maximal `|<d, d'>_Y|` between two families, and the check that together
/// they span `target`.
pub fn orthogonal_sum_residual(first: &[Derivation], second: &[Derivation], ys: &[CVec]) -> f64 {
    let mut worst: f64 = 0.0;
    for d in first {
        for e in second {
            worst = worst.max(d.inner_on(e, ys).norm());
        }
    }
    worst
}

/// Orthogonal splitting `Der(A) = Der(B ⊂ A) ⊕ {[·, ξ] : ξ ⊥ L²_B}` for the
/// generating set `Y = {e x e'}`.
#[derive(Clone, Debug)]
pub struct CentralSplitting {
    pub generators: Vec<CVec>,
    pub relative_dim: usize,
    pub complement_dim: usize,
    pub total_dim: usize,
    /// Largest `|<[·, (1-p)ξ], d>_Y|` over basis `ξ` and basis `d` of `Der(B ⊂ A)`.
    pub orthogonality: f64,
    /// Largest distance of `Der(A)` from the sum of the two pieces.
    pub span_residual: f64,
}

pub fn central_splitting(space: &DerivationSpace, units: &MatrixUnits) -> Result<CentralSplitting> {
    let env = space.envelope();
    let a = env.base();
    let es = units.all();
    let mut ys = Vec::new();
    for i in 0..a.dim() {
        let x = a.basis_vector(i);
        for e in &es {
            let ex = a.mul(e, &x);
            for e2 in &es {
                let y = a.mul(&ex, e2);
                if max_abs(&CMat::from_column_slice(y.len(), 1, y.as_slice())) > 0.0 {
                    ys.push(y);
                }
            }
        }
    }
    let full = space.with_generators(ys.clone())?;
    let rel = relative_derivations(&full, &es)?;
    let proj = lemma11_projection(env, units)?;
    let m = env.dim_env();
    let complement = CMat::identity(m, m) - &proj.operator;
    let inner: Vec<Derivation> = (0..m)
        .map(|k| Derivation::inner(env.clone(), &complement.column(k).into_owned()))
        .collect();
    let comp = DerivationSpace::from_derivations(env.clone(), ys.clone(), &inner)?;
    let orthogonality = orthogonal_sum_residual(&comp.derivations(), &rel.derivations(), &ys);
    let mut union: Vec<SparseVec> = rel.vectors().to_vec();
    union.extend(comp.vectors().iter().cloned());
    let sum = DerivationSpace::from_vectors(env.clone(), ys.clone(), &union)?;
    let span_residual = sum.containment_residual(&full)?;
    Ok(CentralSplitting {
        relative_dim: rel.len(),
        complement_dim: comp.len(),
        total_dim: full.len(),
        generators: ys,
        orthogonality,
        span_residual,
    })
}

/// Largest entry of a derivation-valued residual, exposed for checks.
pub fn max_residual(ds: &[Derivation]) -> f64 {
    ds.iter().map(|d| d.max_abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{group_algebra, multimatrix};
    use crate::group::FiniteGroup;
    use crate::linalg::basis_vector;

    fn env_of(a: FDAlgebra) -> Arc<Envelope> {
        Envelope::new(Arc::new(a))
    }

    #[test]
    fn scalars_have_no_derivations() {
        let env = env_of(multimatrix(&[(1, 1.0)]).unwrap());
        assert_eq!(derivation_space(&env).unwrap().len(), 0);
    }

    #[test]
    fn linear_dimensions_match_central_vector_count() {
        // the A-central vectors have dimension Σ n_i² = dim A
        for blocks in [
            vec![(2, 1.0)],
            vec![(1, 0.5), (1, 0.5)],
            vec![(2, 0.7), (1, 0.3)],
        ] {
            let env = env_of(multimatrix(&blocks).unwrap());
            let der = derivation_space(&env).unwrap();
            assert_eq!(der.len(), env.dim_env() - env.dim_base());
            assert!(der.max_leibniz_residual() < 1e-12);
            let g = der.gram();
            assert!(max_abs(&(g - CMat::identity(der.len(), der.len()))) < 1e-12);
        }
    }

    #[test]
    fn inner_derivations_of_z2() {
        let env = env_of(group_algebra(&FiniteGroup::cyclic(2)));
        let inn = inner_derivations(&env).unwrap();
        assert_eq!(inn.len(), 2);
        let der = derivation_space(&env).unwrap();
        assert!(der.containment_residual(&inn).unwrap() < 1e-12);
        assert!(inn.containment_residual(&der).unwrap() < 1e-12);
    }

    #[test]
    fn inner_derivation_examples() {
        let env = env_of(multimatrix(&[(2, 1.0)]).unwrap());
        let one = env.pair(env.base().unit(), env.base().unit());
        assert!(Derivation::inner(env.clone(), &one).max_abs() > 0.5);
        let p = lemma11_projection(&env, &MatrixUnits::standard(&[(2, 1.0)])).unwrap();
        assert!(Derivation::inner(env.clone(), &p.element).max_abs() < 1e-15);
        let xi = env.pair(&basis_vector(4, 0), env.base().unit());
        let d = Derivation::inner(env.clone(), &xi);
        assert!(d.apply(&basis_vector(4, 1)).norm() > 0.5);
        assert!(d.leibniz_residual() < 1e-15);
    }

    #[test]
    fn relative_derivations_examples() {
        let env = env_of(multimatrix(&[(2, 1.0)]).unwrap());
        let der = derivation_space(&env).unwrap();
        let a = env.base().clone();
        let all = relative_derivations(&der, &[a.unit().clone()]).unwrap();
        assert_eq!(all.len(), der.len());
        let basis: Vec<CVec> = (0..4).map(|i| basis_vector(4, i)).collect();
        assert_eq!(relative_derivations(&der, &basis).unwrap().len(), 0);
        let diag = [basis_vector(4, 0), basis_vector(4, 3)];
        let rel = relative_derivations(&der, &diag).unwrap();
        assert_eq!(rel.len(), 8 - 4);
        assert!(matches!(
            relative_derivations(&der, &[basis_vector(4, 1)]),
            Err(Error::NotSubalgebra { .. })
        ));
    }

    #[test]
    fn central_vectors_examples() {
        let env = env_of(group_algebra(&FiniteGroup::cyclic(3)));
        let a = env.base().clone();
        assert_eq!(central_vectors(&env, &[a.unit().clone()]).unwrap().len(), 9);
        let basis: Vec<CVec> = (0..3).map(|i| basis_vector(3, i)).collect();
        let cv = central_vectors(&env, &basis).unwrap();
        assert_eq!(cv.len(), 3);
        let f = group_central_family(&env, &FiniteGroup::cyclic(3)).unwrap();
        assert!(orthonormality_residual(env.env(), &f) < 1e-12);
        assert!(span_distance(env.env(), &f, &cv).unwrap() < 1e-12);
    }

    #[test]
    fn central_projection_examples() {
        let blocks = [(2, 1.0)];
        let env = env_of(multimatrix(&blocks).unwrap());
        let full = lemma11_projection(&env, &MatrixUnits::standard(&blocks)).unwrap();
        assert!(full.residual < 1e-12);
        assert!((full.trace - 0.25).abs() < 1e-12);
        let scalars = lemma11_projection(&env, &MatrixUnits::scalars(env.base())).unwrap();
        assert!(max_abs(&(scalars.operator.clone() - CMat::identity(16, 16))) < 1e-12);
        assert!(scalars.residual < 1e-12);
        let diag = MatrixUnits {
            units: vec![
                vec![vec![basis_vector(4, 0)]],
                vec![vec![basis_vector(4, 3)]],
            ],
        };
        let d = lemma11_projection(&env, &diag).unwrap();
        assert!(d.residual < 1e-12);
        assert_eq!(d.central_rank, 8);
    }

    #[test]
    fn central_splitting_is_orthogonal() {
        let env = env_of(multimatrix(&[(2, 1.0)]).unwrap());
        let der = derivation_space(&env).unwrap();
        let diag = MatrixUnits {
            units: vec![
                vec![vec![basis_vector(4, 0)]],
                vec![vec![basis_vector(4, 3)]],
            ],
        };
        let s = central_splitting(&der, &diag).unwrap();
        assert_eq!(s.relative_dim + s.complement_dim, s.total_dim);
        assert!(s.orthogonality < 1e-10, "{}", s.orthogonality);
        assert!(s.span_residual < 1e-10);
    }
}
