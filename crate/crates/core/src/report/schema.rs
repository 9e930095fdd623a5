//! JSON input formats for algebras, groups, actions and experiments.
//!
//! Complex numbers are written either as a bare number or as `[re, im]`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::FDAlgebra;
use crate::constructions::{group_algebra, multimatrix, GroupAction, MatrixUnits};
use crate::error::{Error, Result};
use crate::group::{Character, FiniteGroup};
use crate::linalg::{c, CMat, CVec, C64};

/// A complex number in JSON.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ComplexJson {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexJson {
    pub fn value(self) -> C64 {
        match self {
            ComplexJson::Real(x) => c(x, 0.0),
            ComplexJson::Pair([re, im]) => c(re, im),
        }
    }
}

fn vector(loc: &str, xs: &[ComplexJson], n: usize) -> Result<CVec> {
    if xs.len() != n {
        return Err(Error::spec(
            loc,
            format!("expected {n} entries, found {}", xs.len()),
        ));
    }
    Ok(CVec::from_iterator(n, xs.iter().map(|z| z.value())))
}

fn matrix(loc: &str, rows: &[Vec<ComplexJson>], n: usize) -> Result<CMat> {
    if rows.len() != n {
        return Err(Error::spec(
            loc,
            format!("expected {n} rows, found {}", rows.len()),
        ));
    }
    let mut m = CMat::from_element(n, n, c(0.0, 0.0));
    for (i, row) in rows.iter().enumerate() {
        let v = vector(&format!("{loc}[{i}]"), row, n)?;
        m.set_row(i, &v.transpose());
    }
    Ok(m)
}

/// Block list `[[n_1, α_1], ...]`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BlocksJson {
    pub blocks: Vec<(usize, f64)>,
}

/// Algebra input.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum AlgebraJson {
    Multimatrix {
        multimatrix: BlocksJson,
        #[serde(default)]
        label: Option<String>,
    },
    GroupAlgebra {
        group_algebra: GroupJson,
    },
    Explicit {
        dim: usize,
        /// `mult[i][j][k]`: coefficient of `b_k` in `b_i b_j`.
        mult: Vec<Vec<Vec<ComplexJson>>>,
        /// `star[i]`: coordinates of `b_i^*`.
        star: Vec<Vec<ComplexJson>>,
        unit: Vec<ComplexJson>,
        trace: Vec<ComplexJson>,
        #[serde(default)]
        label: Option<String>,
    },
}

/// An algebra together with the matrix units it was built from, when known.
#[derive(Clone, Debug)]
pub struct BuiltAlgebra {
    pub algebra: Arc<FDAlgebra>,
    pub units: Option<MatrixUnits>,
    /// Blocks `(n_i, α_i)` when built from the multimatrix shorthand.
    pub blocks: Option<Vec<(usize, f64)>>,
    /// Set when the algebra is the group algebra of this group.
    pub group: Option<FiniteGroup>,
}

impl AlgebraJson {
    pub fn build(&self, loc: &str) -> Result<BuiltAlgebra> {
        match self {
            AlgebraJson::Multimatrix {
                multimatrix: b,
                label,
            } => {
                if b.blocks.is_empty() || b.blocks.iter().any(|(n, a)| *n == 0 || *a <= 0.0) {
                    return Err(Error::spec(
                        format!("{loc}.multimatrix.blocks"),
                        "blocks need positive sizes and weights",
                    ));
                }
                let mut a = multimatrix(&b.blocks)
                    .map_err(|e| Error::spec(format!("{loc}.multimatrix"), e.to_string()))?;
                if let Some(l) = label {
                    a = a.with_label(l.clone());
                }
                Ok(BuiltAlgebra {
                    algebra: Arc::new(a),
                    units: Some(MatrixUnits::standard(&b.blocks)),
                    blocks: Some(b.blocks.clone()),
                    group: None,
                })
            }
            AlgebraJson::GroupAlgebra { group_algebra: g } => {
                let g = g.build(&format!("{loc}.group_algebra"))?;
                Ok(BuiltAlgebra {
                    algebra: Arc::new(group_algebra(&g)),
                    units: None,
                    blocks: None,
                    group: Some(g),
                })
            }
            AlgebraJson::Explicit {
                dim,
                mult,
                star,
                unit,
                trace,
                label,
            } => {
                let n = *dim;
                if mult.len() != n {
                    return Err(Error::spec(
                        format!("{loc}.mult"),
                        format!("expected {n} entries"),
                    ));
                }
                let mut dense = Vec::with_capacity(n);
                for (i, row) in mult.iter().enumerate() {
                    if row.len() != n {
                        return Err(Error::spec(
                            format!("{loc}.mult[{i}]"),
                            format!("expected {n} entries"),
                        ));
                    }
                    let mut out = Vec::with_capacity(n);
                    for (j, v) in row.iter().enumerate() {
                        let coords = vector(&format!("{loc}.mult[{i}][{j}]"), v, n)?;
                        out.push(coords.iter().copied().collect::<Vec<C64>>());
                    }
                    dense.push(out);
                }
                if star.len() != n {
                    return Err(Error::spec(
                        format!("{loc}.star"),
                        format!("expected {n} entries"),
                    ));
                }
                let mut s = CMat::from_element(n, n, c(0.0, 0.0));
                for (i, col) in star.iter().enumerate() {
                    s.set_column(i, &vector(&format!("{loc}.star[{i}]"), col, n)?);
                }
                let unit = vector(&format!("{loc}.unit"), unit, n)?;
                let trace = vector(&format!("{loc}.trace"), trace, n)?;
                let label = label.clone().unwrap_or_else(|| format!("A{n}"));
                let a = FDAlgebra::from_dense(label, &dense, &s, unit, trace)
                    .map_err(|e| Error::spec(loc.to_string(), e.to_string()))?;
                Ok(BuiltAlgebra {
                    algebra: Arc::new(a),
                    units: None,
                    blocks: None,
                    group: None,
                })
            }
        }
    }
}

/// Group input: a name (`"Z/3"`, `"Z/2xZ/2"`, `"S3"`, `"D4"`), a cyclic or
/// product shorthand, or an explicit table.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum GroupJson {
    Named(String),
    Cyclic {
        cyclic: usize,
    },
    Product {
        product: Vec<usize>,
    },
    Table {
        order: usize,
        table: Vec<Vec<usize>>,
        #[serde(default)]
        label: Option<String>,
    },
}

impl GroupJson {
    pub fn build(&self, loc: &str) -> Result<FiniteGroup> {
        match self {
            GroupJson::Named(name) => FiniteGroup::named(name)
                .ok_or_else(|| Error::spec(loc.to_string(), format!("unknown group {name:?}"))),
            GroupJson::Cyclic { cyclic } if *cyclic == 0 => Err(Error::spec(
                format!("{loc}.cyclic"),
                "order must be positive",
            )),
            GroupJson::Cyclic { cyclic } => Ok(FiniteGroup::cyclic(*cyclic)),
            GroupJson::Product { product } => {
                if product.is_empty() || product.contains(&0) {
                    return Err(Error::spec(
                        format!("{loc}.product"),
                        "factor orders must be positive",
                    ));
                }
                Ok(FiniteGroup::product_of_cyclics(product))
            }
            GroupJson::Table {
                order,
                table,
                label,
            } => {
                if table.len() != *order {
                    return Err(Error::spec(
                        format!("{loc}.table"),
                        format!("expected {order} rows"),
                    ));
                }
                let label = label.clone().unwrap_or_else(|| format!("G{order}"));
                FiniteGroup::new(label, table.clone())
                    .map_err(|e| Error::spec(format!("{loc}.table"), e.to_string()))
            }
        }
    }
}

/// The image of one group element under an action.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GeneratorJson {
    pub element: usize,
    /// Permutation of the blocks of a multimatrix algebra.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_permutation: Option<Vec<usize>>,
    /// `Ad(u)` for a unitary `u`, in algebra coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ad: Option<Vec<ComplexJson>>,
    /// Explicit coordinate matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<ComplexJson>>>,
}

/// Action input.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ActionJson {
    /// `"trivial"` or `"dual"`.
    Named(String),
    Matrices {
        matrices: Vec<Vec<Vec<ComplexJson>>>,
    },
    Generators {
        generators: Vec<GeneratorJson>,
    },
}

impl ActionJson {
    pub fn build(
        &self,
        loc: &str,
        group: &FiniteGroup,
        algebra: &BuiltAlgebra,
    ) -> Result<GroupAction> {
        let a = algebra.algebra.clone();
        let n = a.dim();
        let invalid = |l: String, e: Error| Error::spec(l, e.to_string());
        match self {
            ActionJson::Named(name) if name == "trivial" => {
                Ok(GroupAction::trivial(group.clone(), a))
            }
            ActionJson::Named(name) if name == "dual" => {
                let base = algebra.group.as_ref().ok_or_else(|| {
                    Error::spec(loc.to_string(), "the dual action needs a group algebra")
                })?;
                if base.order() != group.order()
                    || !group.is_abelian()
                    || base.table() != group.table()
                {
                    return Err(Error::spec(
                        loc.to_string(),
                        "the dual action needs the acting group to equal the abelian group of the algebra",
                    ));
                }
                let k = group.order();
                if (0..k).any(|g| (0..k).any(|h| group.mul(g, h) != (g + h) % k)) {
                    return Err(Error::spec(
                        loc.to_string(),
                        "the dual action is defined for cyclic groups",
                    ));
                }
                // α_g(u_h) = ω^{gh} u_h with ω = exp(2πi/k)
                let maps = group
                    .elements()
                    .map(|g| {
                        let values = (0..k)
                            .map(|h| {
                                let t =
                                    2.0 * std::f64::consts::PI * ((g * h) % k) as f64 / k as f64;
                                c(t.cos(), t.sin())
                            })
                            .collect();
                        GroupAction::character_matrix(&Character { values })
                    })
                    .collect();
                GroupAction::new(group.clone(), a, maps).map_err(|e| invalid(loc.to_string(), e))
            }
            ActionJson::Named(name) => Err(Error::spec(
                loc.to_string(),
                format!("unknown action {name:?}"),
            )),
            ActionJson::Matrices { matrices } => {
                if matrices.len() != group.order() {
                    return Err(Error::spec(
                        format!("{loc}.matrices"),
                        format!(
                            "expected {} matrices, found {}",
                            group.order(),
                            matrices.len()
                        ),
                    ));
                }
                let maps = matrices
                    .iter()
                    .enumerate()
                    .map(|(g, m)| matrix(&format!("{loc}.matrices[{g}]"), m, n))
                    .collect::<Result<Vec<_>>>()?;
                GroupAction::new(group.clone(), a, maps)
                    .map_err(|e| invalid(format!("{loc}.matrices"), e))
            }
            ActionJson::Generators { generators } => {
                let mut gens = Vec::with_capacity(generators.len());
                for (k, gj) in generators.iter().enumerate() {
                    let l = format!("{loc}.generators[{k}]");
                    if gj.element >= group.order() {
                        return Err(Error::spec(
                            format!("{l}.element"),
                            "element outside the group",
                        ));
                    }
                    let given = [
                        gj.block_permutation.is_some(),
                        gj.ad.is_some(),
                        gj.matrix.is_some(),
                    ]
                    .iter()
                    .filter(|b| **b)
                    .count();
                    if given != 1 {
                        return Err(Error::spec(
                            l,
                            "give exactly one of block_permutation, ad, matrix",
                        ));
                    }
                    let m = if let Some(p) = &gj.block_permutation {
                        let blocks = algebra.blocks.as_ref().ok_or_else(|| {
                            Error::spec(
                                format!("{l}.block_permutation"),
                                "algebra has no block structure",
                            )
                        })?;
                        GroupAction::block_permutation_matrix(blocks, p)
                            .map_err(|e| invalid(format!("{l}.block_permutation"), e))?
                    } else if let Some(u) = &gj.ad {
                        GroupAction::ad_matrix(&a, &vector(&format!("{l}.ad"), u, n)?)
                    } else {
                        matrix(
                            &format!("{l}.matrix"),
                            gj.matrix.as_ref().expect("checked above"),
                            n,
                        )?
                    };
                    gens.push((gj.element, m));
                }
                GroupAction::from_generators(group.clone(), a, &gens)
                    .map_err(|e| invalid(format!("{loc}.generators"), e))
            }
        }
    }
}

/// Subgroup input: the list of its elements.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum SubgroupJson {
    Elements(Vec<usize>),
}

/// A declarative experiment.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub label: Option<String>,
    pub algebra: AlgebraJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<ActionJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subgroup: Option<SubgroupJson>,
    #[serde(default = "default_checks")]
    pub checks: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_checks() -> Vec<String> {
    vec!["all".to_string()]
}

/// A file holding one experiment or a list of them.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecFile {
    One(Box<ExperimentSpec>),
    Many { experiments: Vec<ExperimentSpec> },
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<Vec<ExperimentSpec>> {
        // Parse twice so a malformed single spec reports its own error location.
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| {
            Error::spec(
                format!("line {} column {}", e.line(), e.column()),
                e.to_string(),
            )
        })?;
        if let Some(list) = value.get("experiments") {
            let list = list
                .as_array()
                .ok_or_else(|| Error::spec("experiments", "expected an array"))?;
            list.iter()
                .enumerate()
                .map(|(i, v)| ExperimentSpec::from_value(v, &format!("$.experiments[{i}]")))
                .collect()
        } else {
            Ok(vec![ExperimentSpec::from_value(&value, "$")?])
        }
    }
}

impl ExperimentSpec {
    pub fn from_value(v: &serde_json::Value, loc: &str) -> Result<Self> {
        for key in ["algebra", "group", "action", "subgroup"] {
            if let Some(sub) = v.get(key) {
                let l = format!("{loc}.{key}");
                let ok = match key {
                    "algebra" => serde_json::from_value::<AlgebraJson>(sub.clone()).is_ok(),
                    "group" => serde_json::from_value::<GroupJson>(sub.clone()).is_ok(),
                    "action" => serde_json::from_value::<ActionJson>(sub.clone()).is_ok(),
                    _ => serde_json::from_value::<SubgroupJson>(sub.clone()).is_ok(),
                };
                if !ok {
                    return Err(Error::spec(l, format!("unrecognized {key} description")));
                }
            }
        }
        serde_json::from_value(v.clone()).map_err(|e| Error::spec(loc.to_string(), e.to_string()))
    }

    pub fn label_or(&self, fallback: &str) -> String {
        self.label.clone().unwrap_or_else(|| fallback.to_string())
    }
}
