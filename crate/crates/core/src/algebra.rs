//! Finite-dimensional tracial *-algebras in structure-constant form.

use std::sync::{Arc, OnceLock};

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    basis_vector, check_len, kron_vec, max_abs, zeros, CMat, CVec, Metric, SparseAccumulator,
    SparseVec, C64, ONE, ZERO,
};

/// A finite-dimensional *-algebra with a tracial state, stored on a basis
/// `b_0, ..., b_{n-1}`.
///
/// Products are kept sparse: `b_i b_j` is a short list of `(k, c_ijk)`
/// pairs. The involution is stored column-wise, `b_i^* = sum_k S[k][i] b_k`,
/// and extended antilinearly.
#[derive(Debug)]
pub struct FDAlgebra {
    label: String,
    dim: usize,
    prod_offsets: Vec<usize>,
    prod_entries: Vec<(usize, C64)>,
    star_cols: Vec<SparseVec>,
    unit: CVec,
    trace: CVec,
    gns: OnceLock<GnsSpace>,
}

impl Clone for FDAlgebra {
    fn clone(&self) -> Self {
        Self {
            label: self.label.clone(),
            dim: self.dim,
            prod_offsets: self.prod_offsets.clone(),
            prod_entries: self.prod_entries.clone(),
            star_cols: self.star_cols.clone(),
            unit: self.unit.clone(),
            trace: self.trace.clone(),
            gns: OnceLock::new(),
        }
    }
}

impl FDAlgebra {
    /// Builds an algebra from sparse products (`products[i * n + j]` holds
    /// the coordinates of `b_i b_j`), involution columns, unit and trace.
    pub fn from_sparse(
        label: impl Into<String>,
        dim: usize,
        products: Vec<SparseVec>,
        star_cols: Vec<SparseVec>,
        unit: CVec,
        trace: CVec,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ShapeMismatch("dimension must be positive".into()));
        }
        if products.len() != dim * dim {
            return Err(Error::ShapeMismatch(format!(
                "expected {} products, got {}",
                dim * dim,
                products.len()
            )));
        }
        if star_cols.len() != dim {
            return Err(Error::ShapeMismatch(format!(
                "expected {dim} involution columns, got {}",
                star_cols.len()
            )));
        }
        check_len(&unit, dim, "unit")?;
        check_len(&trace, dim, "trace")?;
        for v in products.iter().chain(star_cols.iter()) {
            if v.max_index().is_some_and(|k| k >= dim) {
                return Err(Error::ShapeMismatch("coordinate index out of range".into()));
            }
        }
        let mut prod_offsets = Vec::with_capacity(dim * dim + 1);
        let mut prod_entries = Vec::new();
        prod_offsets.push(0);
        for p in &products {
            prod_entries.extend_from_slice(p.entries());
            prod_offsets.push(prod_entries.len());
        }
        Ok(Self {
            label: label.into(),
            dim,
            prod_offsets,
            prod_entries,
            star_cols,
            unit,
            trace,
            gns: OnceLock::new(),
        })
    }

    /// Builds an algebra from dense arrays: `mult[i][j][k] = c_ijk` and the
    /// involution matrix `star` whose column `i` holds `b_i^*`.
    pub fn from_dense(
        label: impl Into<String>,
        mult: &[Vec<Vec<C64>>],
        star: &CMat,
        unit: CVec,
        trace: CVec,
    ) -> Result<Self> {
        let dim = mult.len();
        if star.shape() != (dim, dim) {
            return Err(Error::ShapeMismatch(format!(
                "involution matrix must be {dim}x{dim}, got {:?}",
                star.shape()
            )));
        }
        let mut products = Vec::with_capacity(dim * dim);
        for (i, row) in mult.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "mult[{i}] has length {}",
                    row.len()
                )));
            }
            for (j, coords) in row.iter().enumerate() {
                if coords.len() != dim {
                    return Err(Error::ShapeMismatch(format!(
                        "mult[{i}][{j}] has length {}",
                        coords.len()
                    )));
                }
                products.push(SparseVec::from_dense(&CVec::from_column_slice(coords)));
            }
        }
        let star_cols = (0..dim)
            .map(|i| SparseVec::from_dense(&star.column(i).into_owned()))
            .collect();
        Self::from_sparse(label, dim, products, star_cols, unit, trace)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coordinates of `b_i b_j`.
    pub fn mul_basis(&self, i: usize, j: usize) -> &[(usize, C64)] {
        let p = i * self.dim + j;
        &self.prod_entries[self.prod_offsets[p]..self.prod_offsets[p + 1]]
    }

    /// Structure constant `c_ijk`.
    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> C64 {
        self.mul_basis(i, j)
            .iter()
            .find(|e| e.0 == k)
            .map_or(ZERO, |e| e.1)
    }

    /// Coordinates of `b_i^*`.
    pub fn star_basis(&self, i: usize) -> &SparseVec {
        &self.star_cols[i]
    }

    pub fn unit(&self) -> &CVec {
        &self.unit
    }

    pub fn trace_vector(&self) -> &CVec {
        &self.trace
    }

    pub fn basis_vector(&self, i: usize) -> CVec {
        basis_vector(self.dim, i)
    }

    /// Product `xy`, checking lengths.
    pub fn multiply(&self, x: &CVec, y: &CVec) -> Result<CVec> {
        check_len(x, self.dim, "left factor")?;
        check_len(y, self.dim, "right factor")?;
        Ok(self.mul(x, y))
    }

    /// Product `xy` for vectors already known to have the right length.
    pub fn mul(&self, x: &CVec, y: &CVec) -> CVec {
        let mut out = zeros(self.dim);
        for (i, xi) in x.iter().enumerate() {
            if *xi == ZERO {
                continue;
            }
            for (j, yj) in y.iter().enumerate() {
                if *yj == ZERO {
                    continue;
                }
                let s = xi * yj;
                for &(k, c) in self.mul_basis(i, j) {
                    out[k] += s * c;
                }
            }
        }
        out
    }

    pub fn mul_sparse(&self, x: &SparseVec, y: &SparseVec) -> SparseVec {
        let mut acc = SparseAccumulator::with_capacity(x.nnz() * y.nnz());
        for &(i, xi) in x.iter() {
            for &(j, yj) in y.iter() {
                let s = xi * yj;
                for &(k, c) in self.mul_basis(i, j) {
                    acc.push(k, s * c);
                }
            }
        }
        acc.finish()
    }

    /// Involution, checking lengths.
    pub fn star(&self, x: &CVec) -> Result<CVec> {
        check_len(x, self.dim, "argument")?;
        Ok(self.star_unchecked(x))
    }

    pub fn star_unchecked(&self, x: &CVec) -> CVec {
        let mut out = zeros(self.dim);
        for (i, xi) in x.iter().enumerate() {
            if *xi == ZERO {
                continue;
            }
            let s = xi.conj();
            for &(k, z) in self.star_cols[i].iter() {
                out[k] += s * z;
            }
        }
        out
    }

    pub fn star_sparse(&self, x: &SparseVec) -> SparseVec {
        let mut acc = SparseAccumulator::with_capacity(x.nnz());
        for &(i, xi) in x.iter() {
            acc.add_vec(xi.conj(), &self.star_cols[i]);
        }
        acc.finish()
    }

    /// Trace `tau(x)`, checking lengths.
    pub fn trace(&self, x: &CVec) -> Result<C64> {
        check_len(x, self.dim, "argument")?;
        Ok(self.tau(x))
    }

    pub fn tau(&self, x: &CVec) -> C64 {
        self.trace.dot(x)
    }

    pub fn tau_sparse(&self, x: &SparseVec) -> C64 {
        x.iter().map(|&(i, z)| self.trace[i] * z).sum()
    }

    /// GNS inner product `<x, y> = tau(y^* x)`.
    pub fn gns_inner(&self, x: &CVec, y: &CVec) -> Result<C64> {
        check_len(x, self.dim, "left argument")?;
        check_len(y, self.dim, "right argument")?;
        Ok(self.inner(x, y))
    }

    pub fn inner(&self, x: &CVec, y: &CVec) -> C64 {
        let k = &self.gns().gram;
        (y.adjoint() * k * x)[(0, 0)]
    }

    pub fn norm(&self, x: &CVec) -> f64 {
        self.inner(x, x).re.max(0.0).sqrt()
    }

    /// Matrix of `y -> x y`.
    pub fn left_mult_matrix(&self, x: &CVec) -> CMat {
        let mut m = CMat::from_element(self.dim, self.dim, ZERO);
        for (i, xi) in x.iter().enumerate() {
            if *xi == ZERO {
                continue;
            }
            for j in 0..self.dim {
                for &(k, c) in self.mul_basis(i, j) {
                    m[(k, j)] += xi * c;
                }
            }
        }
        m
    }

    /// Matrix of `y -> y x`.
    pub fn right_mult_matrix(&self, x: &CVec) -> CMat {
        let mut m = CMat::from_element(self.dim, self.dim, ZERO);
        for (i, xi) in x.iter().enumerate() {
            if *xi == ZERO {
                continue;
            }
            for j in 0..self.dim {
                for &(k, c) in self.mul_basis(j, i) {
                    m[(k, j)] += xi * c;
                }
            }
        }
        m
    }

    /// Right multiplication of a sparse vector by a sparse element.
    pub fn right_mul_sparse(&self, v: &SparseVec, x: &SparseVec) -> SparseVec {
        self.mul_sparse(v, x)
    }

    /// Dense involution matrix `S` (column `i` = coordinates of `b_i^*`).
    pub fn star_matrix(&self) -> CMat {
        let mut s = CMat::from_element(self.dim, self.dim, ZERO);
        for (i, col) in self.star_cols.iter().enumerate() {
            for &(k, z) in col.iter() {
                s[(k, i)] = z;
            }
        }
        s
    }

    /// Tomita conjugation `J(x) = x^*` on `L^2(A, tau)`.
    pub fn tomita_j(&self) -> AntilinearOp {
        AntilinearOp::new(self.star_matrix())
    }

    /// GNS data, computed on first use.
    pub fn gns(&self) -> &GnsSpace {
        self.gns.get_or_init(|| GnsSpace::compute(self))
    }

    /// GNS metric on `L^2(A)^slots`.
    pub fn metric(&self, slots: usize) -> Metric<'_> {
        let g = self.gns();
        Metric::new(&g.gram, &g.neighbors, slots)
    }

    /// Checks every axiom and reports per-axiom maximum residuals.
    pub fn validate(&self, tol: f64) -> ValidationReport {
        let n = self.dim;
        let mut assoc: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let left = SparseVec::from_sorted(sorted(self.mul_basis(i, j)));
                for k in 0..n {
                    let lhs = self.mul_sparse(&left, &SparseVec::unit(k));
                    let right = SparseVec::from_sorted(sorted(self.mul_basis(j, k)));
                    let rhs = self.mul_sparse(&SparseVec::unit(i), &right);
                    assoc = assoc.max(lhs.axpy(-ONE, &rhs).max_abs());
                }
            }
        }
        let unit_sp = SparseVec::from_dense(&self.unit);
        let mut unit_res: f64 = 0.0;
        for i in 0..n {
            let bi = SparseVec::unit(i);
            unit_res = unit_res.max(self.mul_sparse(&unit_sp, &bi).axpy(-ONE, &bi).max_abs());
            unit_res = unit_res.max(self.mul_sparse(&bi, &unit_sp).axpy(-ONE, &bi).max_abs());
        }
        let mut antimult: f64 = 0.0;
        let mut trace_comm: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let bij = SparseVec::from_sorted(sorted(self.mul_basis(i, j)));
                let lhs = self.star_sparse(&bij);
                let rhs = self.mul_sparse(&self.star_cols[j], &self.star_cols[i]);
                antimult = antimult.max(lhs.axpy(-ONE, &rhs).max_abs());
                let bji = SparseVec::from_sorted(sorted(self.mul_basis(j, i)));
                trace_comm = trace_comm.max((self.tau_sparse(&bij) - self.tau_sparse(&bji)).norm());
            }
        }
        let mut involutive: f64 = 0.0;
        for i in 0..n {
            let back = self.star_sparse(&self.star_cols[i]);
            involutive = involutive.max(back.axpy(-ONE, &SparseVec::unit(i)).max_abs());
        }
        let unit_star = crate::linalg::max_abs_vec(&(self.star_unchecked(&self.unit) - &self.unit));
        let trace_unit = (self.tau(&self.unit) - ONE).norm();
        let gram = &self.gns().gram;
        let hermitian = max_abs(&(gram - gram.adjoint()));
        let min_eig = SymmetricEigen::new(crate::linalg::hermitian_part(gram))
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);

        let axioms = vec![
            Axiom::new("associativity", assoc, tol),
            Axiom::new("unit", unit_res, tol),
            Axiom::new("star_antimultiplicative", antimult, tol),
            Axiom::new("star_involutive", involutive, tol),
            Axiom::new("star_unit", unit_star, tol),
            Axiom::new("trace_normalized", trace_unit, tol),
            Axiom::new("trace_tracial", trace_comm, tol),
            Axiom::new("gram_hermitian", hermitian, tol),
            Axiom {
                name: "gram_positive".into(),
                residual: (-min_eig).max(0.0),
                pass: min_eig > tol,
            },
        ];
        let pass = axioms.iter().all(|a| a.pass);
        ValidationReport {
            label: self.label.clone(),
            tolerance: tol,
            axioms,
            min_gram_eigenvalue: min_eig,
            pass,
        }
    }

    /// Maximum difference of structure constants, involution, unit and trace.
    pub fn structure_distance(&self, other: &FDAlgebra) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        let n = self.dim;
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let a = SparseVec::from_sorted(sorted(self.mul_basis(i, j)));
                let b = SparseVec::from_sorted(sorted(other.mul_basis(i, j)));
                d = d.max(a.axpy(-ONE, &b).max_abs());
            }
            d = d.max(self.star_cols[i].axpy(-ONE, &other.star_cols[i]).max_abs());
        }
        d = d.max(crate::linalg::max_abs_vec(&(&self.unit - &other.unit)));
        d.max(crate::linalg::max_abs_vec(&(&self.trace - &other.trace)))
    }

    /// Element `x ⊗ y` of a tensor product built by [`crate::constructions::tensor`].
    pub fn tensor_element(x: &CVec, y: &CVec) -> CVec {
        kron_vec(x, y)
    }
}

fn sorted(entries: &[(usize, C64)]) -> Vec<(usize, C64)> {
    let mut v = entries.to_vec();
    v.sort_by_key(|e| e.0);
    v
}

/// Per-axiom residual and verdict.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Axiom {
    pub name: String,
    pub residual: f64,
    pub pass: bool,
}

impl Axiom {
    fn new(name: &str, residual: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            pass: residual <= tol,
        }
    }
}

/// Outcome of [`FDAlgebra::validate`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ValidationReport {
    pub label: String,
    pub tolerance: f64,
    pub axioms: Vec<Axiom>,
    pub min_gram_eigenvalue: f64,
    pub pass: bool,
}

impl ValidationReport {
    pub fn max_residual(&self) -> f64 {
        self.axioms.iter().map(|a| a.residual).fold(0.0, f64::max)
    }

    pub fn axiom(&self, name: &str) -> Option<&Axiom> {
        self.axioms.iter().find(|a| a.name == name)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.axioms
            .iter()
            .filter(|a| !a.pass)
            .map(|a| a.name.as_str())
            .collect()
    }
}

/// Gram matrix `K[j][i] = <b_i, b_j> = tau(b_j^* b_i)` and its Cholesky factor.
#[derive(Debug)]
pub struct GnsSpace {
    pub gram: CMat,
    /// `neighbors[k]`: indices `k' != k` with `K[k][k'] != 0`.
    pub neighbors: Vec<Vec<usize>>,
    chol: OnceLock<Option<CMat>>,
}

impl GnsSpace {
    fn compute(alg: &FDAlgebra) -> Self {
        let n = alg.dim;
        let mut gram = CMat::from_element(n, n, ZERO);
        // tau(b_l b_i) is needed only for the l occurring in some b_j^*.
        let mut tau_row: Vec<Option<Vec<C64>>> = vec![None; n];
        for j in 0..n {
            for &(l, s) in alg.star_cols[j].iter() {
                let row = tau_row[l].get_or_insert_with(|| {
                    (0..n)
                        .map(|i| {
                            alg.mul_basis(l, i)
                                .iter()
                                .map(|&(k, c)| c * alg.trace[k])
                                .sum()
                        })
                        .collect()
                });
                for i in 0..n {
                    gram[(j, i)] += s * row[i];
                }
            }
        }
        let neighbors = (0..n)
            .map(|k| (0..n).filter(|&m| m != k && gram[(k, m)] != ZERO).collect())
            .collect();
        Self {
            gram,
            neighbors,
            chol: OnceLock::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    /// Lower Cholesky factor `L` with `gram = L L^H`, when `gram` is positive definite.
    pub fn chol(&self) -> Option<&CMat> {
        self.chol
            .get_or_init(|| {
                crate::linalg::hermitian_part(&self.gram)
                    .cholesky()
                    .map(|c| c.l())
            })
            .as_ref()
    }

    /// `<x, y> = y^H K x`.
    pub fn inner(&self, x: &CVec, y: &CVec) -> C64 {
        (y.adjoint() * &self.gram * x)[(0, 0)]
    }

    /// Orthogonal projection (as a matrix on coordinates) onto the span of
    /// the GNS-orthonormal columns of `q`.
    pub fn projector(&self, q: &CMat) -> CMat {
        q * (q.adjoint() * &self.gram)
    }

    /// GNS adjoint of an operator given as a coordinate matrix.
    pub fn adjoint_of(&self, m: &CMat) -> CMat {
        let kinv = self
            .gram
            .clone()
            .try_inverse()
            .expect("positive definite Gram matrix");
        kinv * m.adjoint() * &self.gram
    }
}

/// Antilinear operator `v -> M conj(v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AntilinearOp {
    pub matrix: CMat,
}

impl AntilinearOp {
    pub fn new(matrix: CMat) -> Self {
        Self { matrix }
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        &self.matrix * v.map(|z| z.conj())
    }

    pub fn apply_sparse(&self, v: &SparseVec) -> SparseVec {
        let mut acc = SparseAccumulator::default();
        for &(i, z) in v.iter() {
            for (k, m) in self.matrix.column(i).iter().enumerate() {
                acc.push(k, m * z.conj());
            }
        }
        acc.finish()
    }

    /// `J ∘ J'` for antilinear `J'`, which is linear.
    pub fn compose(&self, other: &AntilinearOp) -> CMat {
        &self.matrix * other.matrix.map(|z| z.conj())
    }

    /// `J ∘ L` for linear `L`.
    pub fn after_linear(&self, l: &CMat) -> AntilinearOp {
        AntilinearOp::new(&self.matrix * l.map(|z| z.conj()))
    }

    /// `L ∘ J` for linear `L`.
    pub fn before_linear(&self, l: &CMat) -> AntilinearOp {
        AntilinearOp::new(l * &self.matrix)
    }

    /// The linear operator `J L J^{-1} = M conj(L) M^{-1}`; equals `J L J`
    /// for a conjugation.
    pub fn conjugate(&self, l: &CMat) -> CMat {
        let inv = self
            .matrix
            .clone()
            .try_inverse()
            .expect("invertible conjugation");
        &self.matrix * l.map(|z| z.conj()) * inv
    }

    /// Maximum entry of `J∘J - I`.
    pub fn involution_residual(&self) -> f64 {
        let n = self.matrix.nrows();
        max_abs(&(self.compose(self) - CMat::identity(n, n)))
    }
}

/// Shared handle to an immutable algebra.
pub type AlgebraRef = Arc<FDAlgebra>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{group_algebra, multimatrix};
    use crate::group::FiniteGroup;
    use crate::linalg::{c, max_abs_vec, r};

    #[test]
    fn scalars_validate_with_zero_residuals() {
        let c = multimatrix(&[(1, 1.0)]).unwrap();
        let rep = c.validate(1e-9);
        assert!(rep.pass);
        assert_eq!(rep.max_residual(), 0.0);
    }

    #[test]
    fn unnormalized_trace_fails_on_normalization() {
        let m2 = multimatrix(&[(2, 1.0)]).unwrap();
        let n = m2.dim();
        let products = (0..n * n)
            .map(|p| SparseVec::from_sorted(sorted(m2.mul_basis(p / n, p % n))))
            .collect();
        let stars = (0..n).map(|i| m2.star_basis(i).clone()).collect();
        let bad = FDAlgebra::from_sparse(
            "M_2 with tau(1)=2",
            n,
            products,
            stars,
            m2.unit().clone(),
            m2.trace_vector() * r(2.0),
        )
        .unwrap();
        let rep = bad.validate(1e-9);
        assert!(!rep.pass);
        assert_eq!(rep.failures(), vec!["trace_normalized"]);
    }

    #[test]
    fn matrix_unit_products_and_inner_products() {
        let m2 = multimatrix(&[(2, 1.0)]).unwrap();
        // basis e11, e12, e21, e22
        let p = m2
            .multiply(&m2.basis_vector(1), &m2.basis_vector(2))
            .unwrap();
        assert_eq!(p, m2.basis_vector(0));
        let ip = m2
            .gns_inner(&m2.basis_vector(0), &m2.basis_vector(0))
            .unwrap();
        assert!((ip - r(0.5)).norm() < 1e-15);
        assert!(m2.multiply(&zeros(3), &m2.basis_vector(0)).is_err());
    }

    #[test]
    fn group_algebra_involution_and_trace() {
        let z2 = FiniteGroup::cyclic(2);
        let a = group_algebra(&z2);
        let g = a.basis_vector(1);
        assert_eq!(a.multiply(&g, &g).unwrap(), a.basis_vector(0));
        assert_eq!(a.gns_inner(&g, &a.basis_vector(0)).unwrap(), ZERO);
        let j = a.tomita_j();
        assert_eq!(j.apply(&g), a.basis_vector(1));
        assert_eq!(j.apply(a.unit()), a.unit().clone());
        assert!(j.involution_residual() < 1e-15);
    }

    #[test]
    fn gram_of_m2_is_half_identity() {
        let m2 = multimatrix(&[(2, 1.0)]).unwrap();
        let k = &m2.gns().gram;
        assert!(max_abs(&(k - CMat::identity(4, 4) * r(0.5))) < 1e-15);
        let l = m2.gns().chol().unwrap();
        assert!(max_abs(&(l * l.adjoint() - k)) < 1e-14);
    }

    #[test]
    fn conjugation_by_a_non_real_antilinear_map() {
        let m = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 1.0), c(2.0, 0.0), c(1.0, -1.0)]);
        let j = AntilinearOp::new(m.clone());
        let l = CMat::from_row_slice(
            2,
            2,
            &[c(1.0, 2.0), c(0.5, 0.0), c(-1.0, 0.3), c(0.0, -2.0)],
        );
        let v = CVec::from_vec(vec![c(0.3, -0.7), c(1.1, 0.4)]);
        let j_inv_v = (m.try_inverse().unwrap() * &v).map(|z| z.conj());
        let direct = j.apply(&(&l * j_inv_v));
        assert!(max_abs_vec(&(j.conjugate(&l) * v - direct)) < 1e-12);
    }
}
