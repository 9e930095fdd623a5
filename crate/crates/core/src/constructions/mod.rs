//! Algebras built from smaller pieces: multi-matrix algebras, group algebras,
//! opposites, tensor products and crossed products.

mod action;
mod crossed;
mod decompose;

pub use action::GroupAction;
pub use crossed::CrossedProduct;
pub use decompose::{
    central_projections, multimatrix_decompose, orbit, scaled_generating_set, subalgebra_generate,
    Block, CentralBlock, ScaledGenerator, Subalgebra,
};

use serde::{Deserialize, Serialize};

use crate::algebra::FDAlgebra;
use crate::error::{Error, Result};
use crate::group::FiniteGroup;
use crate::linalg::{
    kron_vec, r, rationalize, zeros, CVec, SparseAccumulator, SparseVec, C64, ONE,
};

/// Tolerance on the total weight of a multi-matrix trace.
pub const WEIGHT_TOL: f64 = 1e-9;

/// `⊕_i M_{n_i}(C)` with trace `Σ_i α_i tr_{n_i}` on its matrix-unit basis.
///
/// Block `i` occupies indices `offset_i + j * n_i + k` for `e^{(i)}_{jk}`.
pub fn multimatrix(blocks: &[(usize, f64)]) -> Result<FDAlgebra> {
    let sum: f64 = blocks.iter().map(|b| b.1).sum();
    if blocks.is_empty()
        || blocks
            .iter()
            .any(|b| b.0 == 0 || !b.1.is_finite() || b.1 <= 0.0)
        || (sum - 1.0).abs() > WEIGHT_TOL
    {
        return Err(Error::WeightsNotNormalized { sum });
    }
    let dim: usize = blocks.iter().map(|b| b.0 * b.0).sum();
    let offsets = block_offsets(blocks);
    let mut products = vec![SparseVec::new(); dim * dim];
    let mut star_cols = vec![SparseVec::new(); dim];
    let mut unit = zeros(dim);
    let mut trace = zeros(dim);
    for (b, &(n, alpha)) in blocks.iter().enumerate() {
        let o = offsets[b];
        for j in 0..n {
            unit[o + j * n + j] = ONE;
            trace[o + j * n + j] = r(alpha / n as f64);
            for k in 0..n {
                star_cols[o + j * n + k] = SparseVec::unit(o + k * n + j);
                for l in 0..n {
                    products[(o + j * n + k) * dim + (o + k * n + l)] =
                        SparseVec::unit(o + j * n + l);
                }
            }
        }
    }
    FDAlgebra::from_sparse(
        multimatrix_label(blocks),
        dim,
        products,
        star_cols,
        unit,
        trace,
    )
}

fn block_offsets(blocks: &[(usize, f64)]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(blocks.len());
    let mut o = 0;
    for &(n, _) in blocks {
        offsets.push(o);
        o += n * n;
    }
    offsets
}

fn multimatrix_label(blocks: &[(usize, f64)]) -> String {
    let names: Vec<String> = blocks
        .iter()
        .map(|&(n, _)| if n == 1 { "C".into() } else { format!("M_{n}") })
        .collect();
    let base = names.join("⊕");
    if blocks.len() == 1 {
        return base;
    }
    let weights: Vec<String> = blocks
        .iter()
        .map(|&(_, a)| match rationalize(a, 1000, 1e-12) {
            Some((p, q)) => crate::linalg::format_rational(p, q),
            None => format!("{a:.6}"),
        })
        .collect();
    format!("{base}[{}]", weights.join(","))
}

/// A system of matrix units `e^{(i)}_{jk}` inside an algebra.
#[derive(Clone, Debug)]
pub struct MatrixUnits {
    /// `units[i][j][k]` holds the coordinates of `e^{(i)}_{jk}`.
    pub units: Vec<Vec<Vec<CVec>>>,
}

impl MatrixUnits {
    /// Matrix units of the algebra returned by [`multimatrix`] for `blocks`.
    pub fn standard(blocks: &[(usize, f64)]) -> Self {
        let dim: usize = blocks.iter().map(|b| b.0 * b.0).sum();
        let offsets = block_offsets(blocks);
        let units = blocks
            .iter()
            .zip(&offsets)
            .map(|(&(n, _), &o)| {
                (0..n)
                    .map(|j| {
                        (0..n)
                            .map(|k| crate::linalg::basis_vector(dim, o + j * n + k))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self { units }
    }

    /// The scalar subalgebra `C·1` of `alg`, as a single 1×1 block.
    pub fn scalars(alg: &FDAlgebra) -> Self {
        Self {
            units: vec![vec![vec![alg.unit().clone()]]],
        }
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.units.iter().map(|b| b.len()).collect()
    }

    /// All units in block order, flattened.
    pub fn all(&self) -> Vec<CVec> {
        self.units.iter().flatten().flatten().cloned().collect()
    }

    /// Checks `e_jk e_kl = e_jl`, `e_jk e_k'l = 0` for `k != k'`, products
    /// across blocks vanish and `e_jk^* = e_kj`.
    pub fn check(&self, alg: &FDAlgebra, tol: f64) -> Result<()> {
        let mut worst: f64 = 0.0;
        for (bi, block) in self.units.iter().enumerate() {
            let n = block.len();
            if block.iter().any(|row| row.len() != n) {
                return Err(Error::UnitsInvalid(format!("block {bi} is not square")));
            }
            for row in block {
                for e in row {
                    crate::linalg::check_len(e, alg.dim(), "matrix unit")
                        .map_err(|err| Error::UnitsInvalid(err.to_string()))?;
                }
            }
        }
        for (bi, block) in self.units.iter().enumerate() {
            let n = block.len();
            for (bj, other) in self.units.iter().enumerate() {
                let m = other.len();
                for j in 0..n {
                    for k in 0..n {
                        for k2 in 0..m {
                            for l in 0..m {
                                let prod = alg.mul(&block[j][k], &other[k2][l]);
                                let expected = if bi == bj && k == k2 {
                                    block[j][l].clone()
                                } else {
                                    zeros(alg.dim())
                                };
                                worst = worst.max(crate::linalg::max_abs_vec(&(prod - expected)));
                            }
                        }
                    }
                }
            }
            for j in 0..n {
                for k in 0..n {
                    let s = alg.star_unchecked(&block[j][k]);
                    worst = worst.max(crate::linalg::max_abs_vec(&(s - &block[k][j])));
                }
            }
        }
        if worst > tol {
            return Err(Error::UnitsInvalid(format!(
                "matrix-unit relations fail with residual {worst:e}"
            )));
        }
        Ok(())
    }
}

/// Group algebra `C[G]` with basis `u_g`, `u_g^* = u_{g^{-1}}` and the
/// canonical trace `τ(u_g) = δ_{g,e}`.
pub fn group_algebra(group: &FiniteGroup) -> FDAlgebra {
    let n = group.order();
    let mut products = Vec::with_capacity(n * n);
    for g in group.elements() {
        for h in group.elements() {
            products.push(SparseVec::unit(group.mul(g, h)));
        }
    }
    let star_cols = group
        .elements()
        .map(|g| SparseVec::unit(group.inv(g)))
        .collect();
    let unit = crate::linalg::basis_vector(n, group.identity());
    let trace = unit.clone();
    let label = if n == 1 {
        "C".to_string()
    } else {
        format!("C[{}]", group.label())
    };
    FDAlgebra::from_sparse(label, n, products, star_cols, unit, trace)
        .expect("group algebra shapes are consistent")
}

/// Opposite algebra: same space, involution, unit and trace, product reversed.
pub fn opposite(a: &FDAlgebra) -> FDAlgebra {
    let n = a.dim();
    let mut products = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            products.push(sorted_vec(a.mul_basis(j, i)));
        }
    }
    let star_cols = (0..n).map(|i| a.star_basis(i).clone()).collect();
    let label = match a.label().strip_suffix('°') {
        Some(base) => base.to_string(),
        None => format!("{}°", a.label()),
    };
    FDAlgebra::from_sparse(
        label,
        n,
        products,
        star_cols,
        a.unit().clone(),
        a.trace_vector().clone(),
    )
    .expect("opposite preserves shapes")
}

/// Tensor product on the basis `a_p ⊗ b_q`, index `p * dim(B) + q`.
pub fn tensor(a: &FDAlgebra, b: &FDAlgebra) -> FDAlgebra {
    let (na, nb) = (a.dim(), b.dim());
    let n = na * nb;
    let mut products = Vec::with_capacity(n * n);
    for p in 0..na {
        for q in 0..nb {
            for p2 in 0..na {
                let ab = a.mul_basis(p, p2);
                for q2 in 0..nb {
                    let bb = b.mul_basis(q, q2);
                    let mut acc = SparseAccumulator::with_capacity(ab.len() * bb.len());
                    for &(k, x) in ab {
                        for &(l, y) in bb {
                            acc.push(k * nb + l, x * y);
                        }
                    }
                    products.push(acc.finish());
                }
            }
        }
    }
    let mut star_cols = Vec::with_capacity(n);
    for p in 0..na {
        for q in 0..nb {
            let mut acc = SparseAccumulator::default();
            for &(k, x) in a.star_basis(p).iter() {
                for &(l, y) in b.star_basis(q).iter() {
                    acc.push(k * nb + l, x * y);
                }
            }
            star_cols.push(acc.finish());
        }
    }
    let unit = kron_vec(a.unit(), b.unit());
    let trace = kron_vec(a.trace_vector(), b.trace_vector());
    FDAlgebra::from_sparse(
        format!("{}⊗{}", a.label(), b.label()),
        n,
        products,
        star_cols,
        unit,
        trace,
    )
    .expect("tensor shapes are consistent")
}

fn sorted_vec(entries: &[(usize, C64)]) -> SparseVec {
    let mut v = entries.to_vec();
    v.sort_by_key(|e| e.0);
    SparseVec::from_sorted(v)
}

/// Shorthand description of a multi-matrix algebra.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultimatrixSpec {
    pub blocks: Vec<(usize, f64)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::basis_vector;

    #[test]
    fn multimatrix_examples() {
        let c = multimatrix(&[(1, 1.0)]).unwrap();
        assert_eq!(c.dim(), 1);
        assert_eq!(c.label(), "C");
        let m2 = multimatrix(&[(2, 1.0)]).unwrap();
        assert!((m2.tau(&basis_vector(4, 0)) - r(0.5)).norm() < 1e-15);
        let c2 = multimatrix(&[(1, 0.5), (1, 0.5)]).unwrap();
        assert_eq!(c2.label(), "C⊕C[1/2,1/2]");
        assert!(c2.validate(1e-9).pass);
        assert!(matches!(
            multimatrix(&[(1, 0.5), (1, 0.4)]),
            Err(Error::WeightsNotNormalized { .. })
        ));
        assert!(multimatrix(&[(1, 1.5), (1, -0.5)]).is_err());
    }

    #[test]
    fn standard_units_are_valid() {
        let blocks = [(2, 0.6), (1, 0.4)];
        let a = multimatrix(&blocks).unwrap();
        MatrixUnits::standard(&blocks).check(&a, 1e-12).unwrap();
        let mut bad = MatrixUnits::standard(&blocks);
        bad.units[0][0][1] = basis_vector(5, 0);
        assert!(matches!(bad.check(&a, 1e-12), Err(Error::UnitsInvalid(_))));
    }

    #[test]
    fn opposite_is_involutive_and_reverses_products() {
        let m2 = multimatrix(&[(2, 1.0)]).unwrap();
        let op = opposite(&m2);
        assert_eq!(
            op.structure_constant(1, 2, 3),
            m2.structure_constant(2, 1, 3)
        );
        let back = opposite(&op);
        assert_eq!(back.structure_distance(&m2), 0.0);
        assert_eq!(back.label(), m2.label());
        assert!(op.validate(1e-9).pass);
    }

    #[test]
    fn opposite_group_algebra_relabels_by_inversion() {
        let g = FiniteGroup::symmetric3();
        let a = group_algebra(&g);
        let op = opposite(&a);
        for x in g.elements() {
            for y in g.elements() {
                // (u_x° u_y°) = (u_y u_x)°, and u_g -> u_{g^-1} maps it to u_{x^-1} u_{y^-1}.
                let lhs = g.inv(op.mul_basis(x, y)[0].0);
                let rhs = a.mul_basis(g.inv(x), g.inv(y))[0].0;
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn tensor_trace_and_validation() {
        let m2 = multimatrix(&[(2, 1.0)]).unwrap();
        let n = tensor(&m2, &opposite(&m2));
        assert_eq!(n.dim(), 16);
        assert!((n.tau(&basis_vector(16, 0)) - r(0.25)).norm() < 1e-15);
        assert!(n.validate(1e-9).pass);
        let c = multimatrix(&[(1, 1.0)]).unwrap();
        assert_eq!(tensor(&m2, &c).structure_distance(&m2), 0.0);
        let z2 = group_algebra(&FiniteGroup::cyclic(2));
        let t = tensor(&z2, &opposite(&z2));
        assert_eq!(t.dim(), 4);
        assert!(t.validate(1e-9).pass);
    }

    #[test]
    fn group_algebras_validate() {
        for g in [
            FiniteGroup::trivial(),
            FiniteGroup::cyclic(4),
            FiniteGroup::symmetric3(),
        ] {
            let a = group_algebra(&g);
            assert_eq!(a.dim(), g.order());
            assert!(a.validate(1e-9).pass);
        }
        assert_eq!(group_algebra(&FiniteGroup::trivial()).label(), "C");
    }
}
