//! Dense and sparse complex linear algebra shared by every other module.
//!
//! Dense work goes through `nalgebra`. Large systems in this crate are
//! extremely sparse in monomial bases, so they are split into connected
//! components and each component is handled by a small dense factorization.

mod nullspace;
mod span;
mod sparse;

pub use nullspace::{sparse_nullspace, Nullspace};
pub use span::{Metric, Span, SpanComponent};
pub use sparse::{SparseAccumulator, SparseVec, UnionFind};

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Absolute floor for singular values that are treated as zero.
pub const ABS_RANK_CUT: f64 = 1e-10;
/// Relative factor applied to the dimensional scale of a system.
pub const REL_RANK_CUT: f64 = 1e-10;
/// Minimal ratio between the smallest kept and largest dropped singular value.
pub const GAP_RATIO: f64 = 10.0;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn zeros(n: usize) -> CVec {
    CVec::from_element(n, ZERO)
}

pub fn basis_vector(n: usize, i: usize) -> CVec {
    let mut v = zeros(n);
    v[i] = ONE;
    v
}

/// Kronecker product of two coordinate vectors, index `(p, q) -> p * b.len() + q`.
pub fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    let nb = b.len();
    let mut out = zeros(a.len() * nb);
    for (p, ap) in a.iter().enumerate() {
        if *ap == ZERO {
            continue;
        }
        for (q, bq) in b.iter().enumerate() {
            out[p * nb + q] = ap * bq;
        }
    }
    out
}

pub fn kron_mat(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMat::from_element(ra * rb, ca * cb, ZERO);
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_vec(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn check_len(v: &CVec, n: usize, what: &str) -> Result<()> {
    if v.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{what}: expected length {n}, got {}",
            v.len()
        )));
    }
    Ok(())
}

/// Singular values cut for a system of the given shape.
pub fn rank_threshold(sigma_max: f64, rows: usize, cols: usize) -> f64 {
    let scale = sigma_max * (rows.max(cols).max(1) as f64).sqrt();
    (REL_RANK_CUT * scale).max(ABS_RANK_CUT)
}

/// Numerical rank of a list of singular values (any order).
///
/// Returns `RankAmbiguous` when the smallest kept value is within
/// [`GAP_RATIO`] of the largest dropped one.
pub fn numerical_rank(singular_values: &[f64], rows: usize, cols: usize) -> Result<usize> {
    let smax = singular_values.iter().copied().fold(0.0, f64::max);
    let cut = rank_threshold(smax, rows, cols);
    let mut kept_min = f64::INFINITY;
    let mut dropped_max: Option<f64> = None;
    let mut rank = 0;
    for &s in singular_values {
        if s > cut {
            rank += 1;
            kept_min = kept_min.min(s);
        } else {
            dropped_max = Some(dropped_max.map_or(s, |d: f64| d.max(s)));
        }
    }
    if let Some(d) = dropped_max {
        if rank > 0 && kept_min < GAP_RATIO * d {
            return Err(Error::RankAmbiguous {
                kept: kept_min,
                dropped: d,
            });
        }
    }
    Ok(rank)
}

/// Hermitian part `(m + m^H) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * r(0.5)
}

/// Singular values and right singular vectors of `m`, sorted descending.
///
/// The matrix is padded with zero rows when it is wide so that `v` is always
/// a full square unitary.
pub fn svd_full(m: &CMat) -> (Vec<f64>, CMat) {
    let (rows, cols) = m.shape();
    let padded;
    let a = if rows < cols {
        let mut p = CMat::from_element(cols, cols, ZERO);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        padded = p;
        &padded
    } else {
        m
    };
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut v = CMat::from_element(cols, order.len(), ZERO);
    for (col, &i) in order.iter().enumerate() {
        for k in 0..cols {
            v[(k, col)] = v_t[(i, k)].conj();
        }
    }
    (sv, v)
}

/// Thin SVD with singular values sorted descending: returns `(sigma, v)`
/// where `v` holds the right singular vectors as columns.
pub fn svd_thin(m: &CMat) -> (Vec<f64>, CMat) {
    let (_, cols) = m.shape();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut v = CMat::from_element(cols, order.len(), ZERO);
    for (col, &i) in order.iter().enumerate() {
        for k in 0..cols {
            v[(k, col)] = v_t[(i, k)].conj();
        }
    }
    (sv, v)
}

/// Best rational approximation `p/q` with `q <= max_den` lying within `tol`.
pub fn rationalize(x: f64, max_den: u64, tol: f64) -> Option<(i64, u64)> {
    if !x.is_finite() {
        return None;
    }
    let max_den = max_den.max(1);
    let mut best: Option<(i64, u64, f64)> = None;
    for q in 1..=max_den {
        let p = (x * q as f64).round();
        let err = (x - p / q as f64).abs();
        if err <= tol && best.is_none_or(|(_, _, e)| err < e - 1e-15) {
            best = Some((p as i64, q, err));
            if err < 1e-12 {
                break;
            }
        }
    }
    best.map(|(p, q, _)| {
        let g = gcd(p.unsigned_abs(), q);
        (p / g as i64, q / g)
    })
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// Formats a rational pair as `p/q` or `p` when the denominator is one.
pub fn format_rational(p: i64, q: u64) -> String {
    if q == 1 {
        format!("{p}")
    } else {
        format!("{p}/{q}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_clean_spectrum() {
        assert_eq!(numerical_rank(&[3.0, 1.0, 1e-15], 3, 3).unwrap(), 2);
        assert_eq!(numerical_rank(&[0.0, 0.0], 2, 2).unwrap(), 0);
        assert_eq!(numerical_rank(&[], 0, 0).unwrap(), 0);
    }

    #[test]
    fn rank_guard_fires_on_small_gap() {
        let err = numerical_rank(&[1.0, 3e-10, 1e-10], 3, 3).unwrap_err();
        assert!(matches!(err, Error::RankAmbiguous { .. }));
    }

    #[test]
    fn rationalize_small_fractions() {
        assert_eq!(rationalize(0.75, 16, 1e-6), Some((3, 4)));
        assert_eq!(rationalize(-1.0 / 8.0, 16, 1e-6), Some((-1, 8)));
        assert_eq!(rationalize(8.0 / 9.0, 81, 1e-6), Some((8, 9)));
        assert_eq!(rationalize(2.0, 4, 1e-6), Some((2, 1)));
        assert_eq!(rationalize(0.123456789, 4, 1e-6), None);
    }

    #[test]
    fn svd_full_pads_wide_matrices() {
        let m = CMat::from_row_slice(1, 3, &[r(1.0), r(1.0), ZERO]);
        let (sv, v) = svd_full(&m);
        assert_eq!(sv.len(), 3);
        assert_eq!(v.shape(), (3, 3));
        assert!((sv[0] - 2f64.sqrt()).abs() < 1e-12);
        assert!(sv[1].abs() < 1e-12 && sv[2].abs() < 1e-12);
        let prod = &m * v.column(2);
        assert!(prod[0].norm() < 1e-12);
    }

    #[test]
    #[allow(clippy::identity_op)]
    fn kron_vec_matches_index_convention() {
        let a = CVec::from_vec(vec![r(1.0), r(2.0)]);
        let b = CVec::from_vec(vec![r(3.0), r(5.0), r(7.0)]);
        let k = kron_vec(&a, &b);
        assert_eq!(k[1 * 3 + 2], r(14.0));
    }
}
