//! Finite groups given by multiplication tables, and their characters.

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec, C64, ZERO};

/// A finite group: `table[g][h]` is the index of `gh`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteGroup {
    label: String,
    table: Vec<Vec<usize>>,
    inverse: Vec<usize>,
    identity: usize,
}

impl FiniteGroup {
    /// Validates the group axioms on `table`.
    pub fn new(label: impl Into<String>, table: Vec<Vec<usize>>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::InvalidGroup("empty table".into()));
        }
        for (g, row) in table.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidGroup(format!(
                    "row {g} has length {}",
                    row.len()
                )));
            }
            if let Some(&bad) = row.iter().find(|&&x| x >= n) {
                return Err(Error::InvalidGroup(format!(
                    "entry {bad} out of range in row {g}"
                )));
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|g| table[e][g] == g && table[g][e] == g))
            .ok_or_else(|| Error::InvalidGroup("no identity element".into()))?;
        let mut inverse = vec![0; n];
        for g in 0..n {
            inverse[g] = (0..n)
                .find(|&h| table[g][h] == identity && table[h][g] == identity)
                .ok_or_else(|| Error::InvalidGroup(format!("element {g} has no inverse")))?;
        }
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    if table[table[a][b]][cc] != table[a][table[b][cc]] {
                        return Err(Error::InvalidGroup(format!(
                            "associativity fails on ({a}, {b}, {cc})"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            label: label.into(),
            table,
            inverse,
            identity,
        })
    }

    pub fn trivial() -> Self {
        Self::cyclic(1)
    }

    /// `Z/n` with elements `0..n` and addition mod `n`.
    pub fn cyclic(n: usize) -> Self {
        assert!(n >= 1, "cyclic group order must be positive");
        let table = (0..n)
            .map(|a| (0..n).map(|b| (a + b) % n).collect())
            .collect();
        let label = if n == 1 {
            "{e}".to_string()
        } else {
            format!("Z/{n}")
        };
        Self::new(label, table).expect("cyclic table is a group")
    }

    /// Direct product of cyclic groups; element index is mixed-radix with the
    /// first factor most significant.
    pub fn product_of_cyclics(orders: &[usize]) -> Self {
        assert!(
            orders.iter().all(|&n| n >= 1),
            "factor orders must be positive"
        );
        let total: usize = orders.iter().product();
        let digits = |mut x: usize| {
            let mut d = vec![0; orders.len()];
            for (k, &n) in orders.iter().enumerate().rev() {
                d[k] = x % n;
                x /= n;
            }
            d
        };
        let index = |d: &[usize]| d.iter().zip(orders).fold(0, |acc, (&x, &n)| acc * n + x);
        let table = (0..total)
            .map(|a| {
                let da = digits(a);
                (0..total)
                    .map(|b| {
                        let db = digits(b);
                        let s: Vec<usize> = da
                            .iter()
                            .zip(&db)
                            .zip(orders)
                            .map(|((x, y), n)| (x + y) % n)
                            .collect();
                        index(&s)
                    })
                    .collect()
            })
            .collect();
        let label = orders
            .iter()
            .map(|n| format!("Z/{n}"))
            .collect::<Vec<_>>()
            .join("×");
        Self::new(label, table).expect("product of cyclic groups is a group")
    }

    /// Symmetric group on three letters, elements in lexicographic order of
    /// their permutation arrays.
    pub fn symmetric3() -> Self {
        let perms = permutation_closure(&[vec![1, 0, 2], vec![1, 2, 0]]);
        Self::from_permutations("S_3", &perms)
    }

    /// Dihedral group of order 8 acting on the vertices of a square.
    pub fn dihedral4() -> Self {
        let perms = permutation_closure(&[vec![1, 2, 3, 0], vec![3, 2, 1, 0]]);
        Self::from_permutations("D_4", &perms)
    }

    fn from_permutations(label: &str, perms: &[Vec<usize>]) -> Self {
        let idx = |p: &Vec<usize>| perms.iter().position(|q| q == p).expect("closed set");
        let table = perms
            .iter()
            .map(|a| {
                perms
                    .iter()
                    .map(|b| idx(&b.iter().map(|&x| a[x]).collect()))
                    .collect()
            })
            .collect();
        Self::new(label, table).expect("permutation group")
    }

    /// Built-in groups by name: `Z/n`, `Z/a×Z/b` (or `Z/axZ/b`), `S_3`/`S3`, `D_4`/`D4`, `trivial`.
    pub fn named(name: &str) -> Option<Self> {
        let compact: String = name.chars().filter(|c| !c.is_whitespace()).collect();
        match compact.as_str() {
            "S3" | "S_3" => return Some(Self::symmetric3()),
            "D4" | "D_4" | "D8" => return Some(Self::dihedral4()),
            "trivial" | "{e}" | "1" => return Some(Self::trivial()),
            _ => {}
        }
        let parts: Vec<&str> = compact.split(['×', 'x', '*']).collect();
        let mut orders = Vec::new();
        for p in parts {
            let n: usize = p.strip_prefix("Z/")?.parse().ok()?;
            if n == 0 {
                return None;
            }
            orders.push(n);
        }
        match orders.len() {
            0 => None,
            1 => Some(Self::cyclic(orders[0])),
            _ => Some(Self::product_of_cyclics(&orders)),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.table[g][h]
    }

    pub fn inv(&self, g: usize) -> usize {
        self.inverse[g]
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.order()
    }

    pub fn is_abelian(&self) -> bool {
        let n = self.order();
        (0..n).all(|a| (0..n).all(|b| self.table[a][b] == self.table[b][a]))
    }

    pub fn element_order(&self, g: usize) -> usize {
        let mut x = g;
        let mut k = 1;
        while x != self.identity {
            x = self.mul(x, g);
            k += 1;
        }
        k
    }

    /// Checks that `elements` (indices into this group) form a subgroup and
    /// returns it with its own multiplication table.
    pub fn subgroup(&self, elements: &[usize]) -> Result<Subgroup> {
        let mut els = elements.to_vec();
        els.sort_unstable();
        els.dedup();
        if els.len() != elements.len() {
            return Err(Error::NotSubgroup("repeated element".into()));
        }
        if let Some(&bad) = els.iter().find(|&&g| g >= self.order()) {
            return Err(Error::NotSubgroup(format!("element {bad} out of range")));
        }
        if !els.contains(&self.identity) {
            return Err(Error::NotSubgroup("identity missing".into()));
        }
        let pos = |g: usize| els.iter().position(|&x| x == g);
        let mut table = Vec::with_capacity(els.len());
        for &a in &els {
            let mut row = Vec::with_capacity(els.len());
            for &b in &els {
                let p = pos(self.mul(a, b))
                    .ok_or_else(|| Error::NotSubgroup(format!("not closed: {a}·{b}")))?;
                row.push(p);
            }
            table.push(row);
        }
        let label = format!("{}≤{}", subgroup_label(&els, self), self.label);
        let group =
            FiniteGroup::new(label, table).map_err(|e| Error::NotSubgroup(e.to_string()))?;
        Ok(Subgroup {
            group,
            embedding: els,
        })
    }
}

fn subgroup_label(els: &[usize], g: &FiniteGroup) -> String {
    if els.len() == 1 {
        return "{e}".into();
    }
    if els.len() == g.order() {
        return g.label.clone();
    }
    format!(
        "{{{}}}",
        els.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(",")
    )
}

fn permutation_closure(generators: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = generators[0].len();
    let mut set: Vec<Vec<usize>> = vec![(0..n).collect()];
    let mut frontier = set.clone();
    while let Some(p) = frontier.pop() {
        for g in generators {
            let q: Vec<usize> = (0..n).map(|x| g[p[x]]).collect();
            if !set.contains(&q) {
                set.push(q.clone());
                frontier.push(q);
            }
        }
    }
    set.sort();
    set
}

/// A subgroup together with its embedding into the parent group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subgroup {
    pub group: FiniteGroup,
    /// `embedding[k]` is the parent index of subgroup element `k`.
    pub embedding: Vec<usize>,
}

/// A one-dimensional unitary representation of an abelian group.
#[derive(Clone, Debug, PartialEq)]
pub struct Character {
    pub values: Vec<C64>,
}

impl Character {
    pub fn value(&self, g: usize) -> C64 {
        self.values[g]
    }

    pub fn is_trivial(&self, tol: f64) -> bool {
        self.values
            .iter()
            .all(|z| (z - C64::new(1.0, 0.0)).norm() <= tol)
    }

    /// Maximum of `|chi(gh) - chi(g) chi(h)|` and `||chi(g)| - 1|`.
    pub fn homomorphism_residual(&self, group: &FiniteGroup) -> f64 {
        let mut res: f64 = 0.0;
        for g in group.elements() {
            res = res.max((self.values[g].norm() - 1.0).abs());
            for h in group.elements() {
                res = res
                    .max((self.values[group.mul(g, h)] - self.values[g] * self.values[h]).norm());
            }
        }
        res
    }
}

/// Matrix of left translation `delta_h -> delta_{gh}` on `C[G]`.
pub fn regular_representation(group: &FiniteGroup, g: usize) -> CMat {
    let n = group.order();
    let mut m = CMat::from_element(n, n, ZERO);
    for h in 0..n {
        m[(group.mul(g, h), h)] = C64::new(1.0, 0.0);
    }
    m
}

const CHARACTER_ATTEMPTS: u64 = 32;
const EIGEN_SEPARATION: f64 = 1e-6;

/// All characters of an abelian group, trivial character first, the rest in
/// lexicographic order of their phases.
///
/// The regular representation is diagonalized through one random Hermitian
/// combination `sum_g (c_g λ(g) + conj(c_g) λ(g)^*)`; when two eigenvalues
/// are closer than `1e-6` a new combination is drawn.
pub fn characters(group: &FiniteGroup) -> Result<Vec<Character>> {
    if !group.is_abelian() {
        return Err(Error::NotAbelian);
    }
    let n = group.order();
    let reps: Vec<CMat> = group
        .elements()
        .map(|g| regular_representation(group, g))
        .collect();
    for attempt in 0..CHARACTER_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC4A2_0000 + attempt);
        let mut h = CMat::from_element(n, n, ZERO);
        for rep in &reps {
            let cg = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            h += rep * cg + rep.adjoint() * cg.conj();
        }
        let eig = SymmetricEigen::new(h);
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        if vals.windows(2).any(|w| w[1] - w[0] < EIGEN_SEPARATION) {
            continue;
        }
        let mut chars = Vec::with_capacity(n);
        for k in 0..n {
            let v: CVec = eig.eigenvectors.column(k).into_owned();
            let v = &v / C64::new(v.norm(), 0.0);
            let values = reps
                .iter()
                .map(|rep| snap_to_root_of_unity((v.adjoint() * rep * &v)[(0, 0)], n))
                .collect();
            chars.push(Character { values });
        }
        chars.sort_by(|a, b| {
            character_key(a, group)
                .partial_cmp(&character_key(b, group))
                .unwrap()
        });
        return Ok(chars);
    }
    Err(Error::NotSemisimple(
        "could not separate the eigenvalues of the regular representation".into(),
    ))
}

/// Replaces a value within `1e-9` of an `n`-th root of unity by that root,
/// exact at quarter turns.
fn snap_to_root_of_unity(z: C64, n: usize) -> C64 {
    let turns = z.arg() / std::f64::consts::TAU * n as f64;
    let k = turns.round();
    let kk = (k as i64).rem_euclid(n as i64) as usize;
    let root = if (4 * kk).is_multiple_of(n) {
        match 4 * kk / n {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    } else {
        C64::from_polar(1.0, std::f64::consts::TAU * kk as f64 / n as f64)
    };
    if (z - root).norm() <= 1e-9 {
        root
    } else {
        z
    }
}

/// Sort key: trivial character first, then phases in `[0, 1)` turns.
fn character_key(chi: &Character, group: &FiniteGroup) -> Vec<f64> {
    let mut key = vec![if chi.is_trivial(1e-9) { 0.0 } else { 1.0 }];
    for g in group.elements() {
        let turns = chi.values[g].arg() / std::f64::consts::TAU;
        let t = if turns < -1e-12 {
            turns + 1.0
        } else {
            turns.max(0.0)
        };
        key.push((t * 1e9).round() / 1e9);
    }
    key
}

/// Gram matrix `(1/|G|) sum_g chi(g) conj(chi'(g))` of a family of characters.
pub fn character_gram(group: &FiniteGroup, chars: &[Character]) -> CMat {
    let n = group.order() as f64;
    CMat::from_fn(chars.len(), chars.len(), |a, b| {
        group
            .elements()
            .map(|g| chars[a].values[g] * chars[b].values[g].conj())
            .sum::<C64>()
            / C64::new(n, 0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    #[test]
    fn named_groups_have_expected_orders() {
        assert_eq!(FiniteGroup::named("Z/5").unwrap().order(), 5);
        assert_eq!(FiniteGroup::named("Z/2×Z/2").unwrap().order(), 4);
        assert_eq!(FiniteGroup::named("Z/2xZ/3").unwrap().order(), 6);
        assert_eq!(FiniteGroup::named("S_3").unwrap().order(), 6);
        assert_eq!(FiniteGroup::named("D4").unwrap().order(), 8);
        assert!(FiniteGroup::named("Q8").is_none());
        assert!(!FiniteGroup::symmetric3().is_abelian());
        assert!(!FiniteGroup::dihedral4().is_abelian());
        assert!(FiniteGroup::product_of_cyclics(&[2, 2]).is_abelian());
    }

    #[test]
    fn rejects_non_group_tables() {
        assert!(FiniteGroup::new("bad", vec![vec![0, 1], vec![1, 1]]).is_err());
        assert!(FiniteGroup::new("bad", vec![vec![0, 2]]).is_err());
    }

    #[test]
    fn z2_characters() {
        let chars = characters(&FiniteGroup::cyclic(2)).unwrap();
        assert_eq!(chars.len(), 2);
        assert!((chars[0].values[1] - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((chars[1].values[1] - C64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn z3_characters_are_cube_roots() {
        let g = FiniteGroup::cyclic(3);
        let chars = characters(&g).unwrap();
        let w = C64::from_polar(1.0, std::f64::consts::TAU / 3.0);
        assert!((chars[1].values[1] - w).norm() < 1e-12);
        assert!((chars[2].values[1] - w * w).norm() < 1e-12);
        for chi in &chars {
            assert!(chi.homomorphism_residual(&g) < 1e-12);
        }
    }

    #[test]
    fn klein_group_characters_are_orthonormal() {
        let g = FiniteGroup::product_of_cyclics(&[2, 2]);
        let chars = characters(&g).unwrap();
        assert_eq!(chars.len(), 4);
        let gram = character_gram(&g, &chars);
        assert!(max_abs(&(gram - CMat::identity(4, 4))) < 1e-12);
    }

    #[test]
    fn non_abelian_has_no_character_table() {
        assert!(matches!(
            characters(&FiniteGroup::symmetric3()),
            Err(Error::NotAbelian)
        ));
    }

    #[test]
    fn subgroups_are_checked() {
        let z4 = FiniteGroup::cyclic(4);
        let h = z4.subgroup(&[0, 2]).unwrap();
        assert_eq!(h.group.order(), 2);
        assert!(z4.subgroup(&[0, 1]).is_err());
        assert!(z4.subgroup(&[1, 2]).is_err());
    }
}
