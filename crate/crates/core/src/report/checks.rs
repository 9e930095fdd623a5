//! The check registry and the per-experiment pipeline that feeds it.

use std::cell::OnceCell;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::schema::{BuiltAlgebra, ExperimentSpec};
use crate::algebra::FDAlgebra;
use crate::constructions::{
    multimatrix_decompose, orbit, scaled_generating_set, subalgebra_generate, Block,
    CrossedProduct, GroupAction, MatrixUnits,
};
use crate::derivations::{
    average, central_splitting, central_vectors, decompose_vanishing, derivation_space, extend,
    group_central_family, inner_derivations, is_covariant, lemma11_projection,
    orthonormality_residual, restrict, restrict_with_residual, span_distance, twist_action,
    vg_unitary, CrossedContext, Derivation, DerivationSpace, Envelope,
};
use crate::error::{Error, Result};
use crate::group::{FiniteGroup, Subgroup};
use crate::linalg::{c, format_rational, max_abs_vec, rationalize, CVec, SparseVec, C64};
use crate::vndim::{
    phi_x, restrict_scalars, vn_dimension, ModuleSubspace, VnDimension, RATIONAL_TOL,
};

/// Outcome of a single report row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        }
    }
}

/// One row of a verification report.
#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub name: String,
    pub status: Status,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub lhs_rational: Option<String>,
    pub rhs_rational: Option<String>,
    pub residual: Option<f64>,
    pub anchor: String,
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

impl Row {
    fn new(name: &str, anchor: &str) -> Self {
        Self {
            name: name.to_string(),
            status: Status::Skipped,
            lhs: None,
            rhs: None,
            lhs_rational: None,
            rhs_rational: None,
            residual: None,
            anchor: anchor.to_string(),
            note: None,
            elapsed_ms: None,
        }
    }

    fn skipped(name: &str, anchor: &str, note: impl Into<String>) -> Self {
        let mut r = Self::new(name, anchor);
        r.note = Some(note.into());
        r
    }

    fn failed(name: &str, anchor: &str, note: impl Into<String>) -> Self {
        let mut r = Self::new(name, anchor);
        r.status = Status::Fail;
        r.note = Some(note.into());
        r
    }

    fn residual(name: &str, anchor: &str, residual: f64, tol: f64) -> Self {
        let mut r = Self::new(name, anchor);
        r.residual = Some(residual);
        r.status = if residual <= tol {
            Status::Pass
        } else {
            Status::Fail
        };
        r
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Every registered check identifier, in execution order.
pub const CHECKS: &[&str] = &[
    "validate",
    "lemma_group_algebra_dim",
    "multimatrix_dim",
    "derivations_inner",
    "generating_set_independence",
    "scaled_generating_set",
    "schreier_dim_der",
    "schreier_vanishing",
    "vanishing_subspace_dim",
    "index_scaling",
    "subgroup_schreier",
    "betti_difference",
    "identity_coset_projections",
    "identity_coset_translation",
    "identity_coset_conjugation",
    "identity_covariance",
    "identity_extension",
    "identity_restriction",
    "identity_round_trip",
    "identity_module_twist",
    "identity_twist_action",
    "identity_central_projection",
    "identity_central_splitting",
    "identity_fh_family",
    "identity_vg_unitarity",
    "identity_vg_averaging",
];

/// Expands `"all"` and `"identities"` and checks that every id exists.
pub fn resolve_checks(ids: &[String], loc: &str) -> Result<Vec<&'static str>> {
    let mut wanted = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        match id.as_str() {
            "all" => wanted.extend(CHECKS.iter().copied()),
            "identities" => wanted.extend(
                CHECKS
                    .iter()
                    .copied()
                    .filter(|c| c.starts_with("identity_")),
            ),
            other => match CHECKS.iter().find(|c| **c == other) {
                Some(c) => wanted.push(*c),
                None => {
                    return Err(Error::spec(
                        format!("{loc}.checks[{i}]"),
                        format!("unknown check {other:?}"),
                    ))
                }
            },
        }
    }
    // registry order, without duplicates
    Ok(CHECKS
        .iter()
        .copied()
        .filter(|c| wanted.contains(c))
        .collect())
}

type Cached<T> = OnceCell<std::result::Result<T, String>>;

fn cached<T>(cell: &Cached<T>, f: impl FnOnce() -> Result<T>) -> std::result::Result<&T, String> {
    cell.get_or_init(|| f().map_err(|e| e.to_string()))
        .as_ref()
        .map_err(Clone::clone)
}

/// A fully built experiment with lazily computed intermediate results.
pub struct Pipeline {
    pub label: String,
    pub tol: f64,
    pub seed: u64,
    pub built: BuiltAlgebra,
    pub group: Option<FiniteGroup>,
    pub action: Option<Arc<GroupAction>>,
    pub subgroup: Option<Subgroup>,
    pub checks: Vec<&'static str>,
    env_a: OnceCell<Arc<Envelope>>,
    blocks_a: Cached<Vec<Block>>,
    der_a: Cached<(DerivationSpace, VnDimension)>,
    inn_a: Cached<(DerivationSpace, VnDimension)>,
    ctx: Cached<Arc<CrossedContext>>,
    der_c: Cached<(DerivationSpace, VnDimension)>,
    inn_c: Cached<(DerivationSpace, VnDimension)>,
    van: Cached<(DerivationSpace, VnDimension, VnDimension)>,
    der_h: Cached<VnDimension>,
}

impl Pipeline {
    /// Builds every object an experiment names; semantic problems become `SpecInvalid`.
    pub fn build(spec: &ExperimentSpec, loc: &str, tol: f64, seed: u64) -> Result<Self> {
        let built = spec.algebra.build(&format!("{loc}.algebra"))?;
        let group = match &spec.group {
            Some(g) => Some(g.build(&format!("{loc}.group"))?),
            None => built.group.clone(),
        };
        let action = match &spec.action {
            None => None,
            Some(a) => {
                let g = group.as_ref().ok_or_else(|| {
                    Error::spec(format!("{loc}.action"), "an action needs a group")
                })?;
                Some(Arc::new(a.build(&format!("{loc}.action"), g, &built)?))
            }
        };
        let subgroup = match &spec.subgroup {
            None => None,
            Some(super::schema::SubgroupJson::Elements(els)) => {
                let g = group.as_ref().ok_or_else(|| {
                    Error::spec(format!("{loc}.subgroup"), "a subgroup needs a group")
                })?;
                Some(
                    g.subgroup(els)
                        .map_err(|e| Error::spec(format!("{loc}.subgroup"), e.to_string()))?,
                )
            }
        };
        let checks = resolve_checks(&spec.checks, loc)?;
        Ok(Self {
            label: spec.label_or(built.algebra.label()),
            tol,
            seed,
            built,
            group,
            action,
            subgroup,
            checks,
            env_a: OnceCell::new(),
            blocks_a: OnceCell::new(),
            der_a: OnceCell::new(),
            inn_a: OnceCell::new(),
            ctx: OnceCell::new(),
            der_c: OnceCell::new(),
            inn_c: OnceCell::new(),
            van: OnceCell::new(),
            der_h: OnceCell::new(),
        })
    }

    pub fn algebra(&self) -> &Arc<FDAlgebra> {
        &self.built.algebra
    }

    fn env_a(&self) -> &Arc<Envelope> {
        self.env_a
            .get_or_init(|| Envelope::new(self.algebra().clone()))
    }

    fn blocks_a(&self) -> std::result::Result<&Vec<Block>, String> {
        cached(&self.blocks_a, || multimatrix_decompose(self.algebra()))
    }

    fn der_a(&self) -> std::result::Result<&(DerivationSpace, VnDimension), String> {
        cached(&self.der_a, || {
            let space = derivation_space(self.env_a())?;
            let dim = vn_dimension(&phi_x(&space, space.generators())?)?;
            Ok((space, dim))
        })
    }

    fn inn_a(&self) -> std::result::Result<&(DerivationSpace, VnDimension), String> {
        cached(&self.inn_a, || {
            let space = inner_derivations(self.env_a())?;
            let dim = vn_dimension(&phi_x(&space, space.generators())?)?;
            Ok((space, dim))
        })
    }

    fn ctx(&self) -> std::result::Result<&Arc<CrossedContext>, String> {
        cached(&self.ctx, || {
            let act = self
                .action
                .clone()
                .ok_or_else(|| Error::ActionInvalid("no action".into()))?;
            Ok(CrossedContext::new(CrossedProduct::new(act)?))
        })
    }

    fn der_c(&self) -> std::result::Result<&(DerivationSpace, VnDimension), String> {
        cached(&self.der_c, || {
            let ctx = self.ctx().map_err(Error::ActionInvalid)?;
            let space = derivation_space(ctx.big())?.with_generators(ctx.default_generators())?;
            let dim = vn_dimension(&phi_x(&space, space.generators())?)?;
            Ok((space, dim))
        })
    }

    fn inn_c(&self) -> std::result::Result<&(DerivationSpace, VnDimension), String> {
        cached(&self.inn_c, || {
            let ctx = self.ctx().map_err(Error::ActionInvalid)?;
            let space = inner_derivations(ctx.big())?.with_generators(ctx.default_generators())?;
            let dim = vn_dimension(&phi_x(&space, space.generators())?)?;
            Ok((space, dim))
        })
    }

    /// Vanishing space with its dimension over `N_big` and over `A ⊗ A°`.
    fn van(&self) -> std::result::Result<&(DerivationSpace, VnDimension, VnDimension), String> {
        cached(&self.van, || {
            let ctx = self.ctx().map_err(Error::ActionInvalid)?;
            let (full, _) = self.der_c().map_err(Error::ActionInvalid)?;
            let space = crate::derivations::relative_derivations(full, &ctx.group_subalgebra())?;
            let image = phi_x(&space, space.generators())?;
            let big = vn_dimension(&image)?;
            let small = vn_dimension(&restrict_scalars(&image, ctx)?)?;
            Ok((space, big, small))
        })
    }

    fn der_h(&self) -> std::result::Result<&VnDimension, String> {
        cached(&self.der_h, || {
            let act = self
                .action
                .as_ref()
                .ok_or_else(|| Error::ActionInvalid("no action".into()))?;
            let sub = self
                .subgroup
                .as_ref()
                .ok_or_else(|| Error::NotSubgroup("no subgroup".into()))?;
            let ctx = CrossedContext::new(CrossedProduct::new(Arc::new(act.restrict(sub)))?);
            let space = derivation_space(ctx.big())?.with_generators(ctx.default_generators())?;
            vn_dimension(&phi_x(&space, space.generators())?)
        })
    }

    /// Denominator bound `|G|² Π n_i²` for displayed fractions, at least 100.
    fn rational_bound(&self) -> u64 {
        let blocks: u64 = self
            .blocks_a()
            .map(|bs| bs.iter().map(|b| (b.size * b.size) as u64).product())
            .unwrap_or(1);
        let g = self.group.as_ref().map_or(1, |g| g.order() as u64);
        (g * g * blocks).max(100)
    }

    fn rational(&self, x: f64) -> Option<String> {
        rationalize(x, self.rational_bound(), RATIONAL_TOL).map(|(p, q)| format_rational(p, q))
    }

    fn compare(&self, name: &str, anchor: &str, lhs: f64, rhs: f64) -> Row {
        let mut r = Row::new(name, anchor);
        let residual = (lhs - rhs).abs();
        r.lhs = Some(lhs);
        r.rhs = Some(rhs);
        r.lhs_rational = self.rational(lhs);
        r.rhs_rational = self.rational(rhs);
        r.residual = Some(residual);
        r.status = if residual <= self.tol {
            Status::Pass
        } else {
            Status::Fail
        };
        r
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(
            self.seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(salt),
        )
    }

    /// Runs every requested check; a failed validation skips the rest.
    pub fn run(&self, timings: bool) -> Vec<Row> {
        let mut rows = Vec::new();
        let mut valid = true;
        for &id in &self.checks {
            let start = Instant::now();
            let mut produced = if !valid {
                vec![Row::skipped(id, anchor(id), "algebra validation failed")]
            } else {
                self.run_check(id)
            };
            if id == "validate" && produced.iter().any(|r| r.status == Status::Fail) {
                valid = false;
            }
            if timings {
                let ms = start.elapsed().as_secs_f64() * 1e3;
                for r in &mut produced {
                    r.elapsed_ms = Some(ms);
                }
            }
            rows.extend(produced);
        }
        if !self.checks.contains(&"validate") {
            // Validation still gates everything, even when not requested as a row.
            let report = self.algebra().validate(self.tol.min(1e-9));
            if !report.pass {
                for r in &mut rows {
                    *r = Row::skipped(&r.name, &r.anchor, "algebra validation failed");
                }
            }
        }
        rows
    }

    fn run_check(&self, id: &str) -> Vec<Row> {
        let a = anchor(id);
        let result = match id {
            "validate" => Ok(self.check_validate()),
            "lemma_group_algebra_dim" => self.check_group_algebra_dim(),
            "multimatrix_dim" => self.check_multimatrix_dim(),
            "derivations_inner" => self.check_inner(),
            "generating_set_independence" => self.check_independence(),
            "scaled_generating_set" => self.check_scaled_set(),
            "schreier_dim_der" => self.check_schreier(),
            "schreier_vanishing" => self.check_schreier_vanishing(),
            "vanishing_subspace_dim" => self.check_vanishing_dim(),
            "index_scaling" => self.check_index_scaling(),
            "subgroup_schreier" => self.check_subgroup(),
            "betti_difference" => self.check_betti(),
            "identity_coset_projections" => self.with_ctx(id, |ctx| {
                let r = ctx.projection_residuals();
                Ok(vec![Row::residual(id, a, r.max(), self.tol).note(format!(
                    "idempotent {:.1e}, self-adjoint {:.1e}, orthogonal {:.1e}, resolution {:.1e}, commutant {:.1e}",
                    r.idempotent, r.self_adjoint, r.orthogonal, r.resolution, r.commutant
                ))])
            }),
            "identity_coset_translation" => {
                self.with_ctx(id, |ctx| Ok(vec![Row::residual(id, a, ctx.translation_residual(), self.tol)]))
            }
            "identity_coset_conjugation" => {
                self.with_ctx(id, |ctx| Ok(vec![Row::residual(id, a, ctx.conjugation_residual(), self.tol)]))
            }
            "identity_covariance" => self.check_covariance(),
            "identity_extension" => self.check_extension(),
            "identity_restriction" => self.check_restriction(),
            "identity_round_trip" => self.check_round_trip(),
            "identity_module_twist" => self.check_module_twist(),
            "identity_twist_action" => self.check_twist_action(),
            "identity_central_projection" => self.check_central_projection(),
            "identity_central_splitting" => self.check_central_splitting(),
            "identity_fh_family" => self.check_fh_family(),
            "identity_vg_unitarity" => self.check_vg_unitarity(),
            "identity_vg_averaging" => self.check_vg_averaging(),
            other => Err(format!("unregistered check {other}")),
        };
        result.unwrap_or_else(|e| vec![Row::failed(id, a, e)])
    }

    fn with_ctx(
        &self,
        id: &str,
        f: impl FnOnce(&CrossedContext) -> std::result::Result<Vec<Row>, String>,
    ) -> std::result::Result<Vec<Row>, String> {
        if self.action.is_none() {
            return Ok(vec![Row::skipped(
                id,
                anchor(id),
                "requires a group action",
            )]);
        }
        f(self.ctx()?)
    }

    fn abelian_gate(&self, id: &str) -> Option<Row> {
        match (&self.action, &self.group) {
            (None, _) | (_, None) => Some(Row::skipped(id, anchor(id), "requires a group action")),
            (Some(_), Some(g)) if !g.is_abelian() => Some(Row::skipped(
                id,
                anchor(id),
                format!("requires an abelian group; {} is not abelian", g.label()),
            )),
            _ => None,
        }
    }

    fn check_validate(&self) -> Vec<Row> {
        let tol = self.tol.min(1e-9);
        let mut rows = Vec::new();
        let report = self.algebra().validate(tol);
        let mut row = Row::residual("validate", anchor("validate"), report.max_residual(), tol);
        if !report.pass {
            row.status = Status::Fail;
            row = row.note(format!("failing axioms: {}", report.failures().join(", ")));
        }
        rows.push(row);
        if report.pass {
            if let Some(act) = &self.action {
                rows.push(Row::residual(
                    "validate_action",
                    anchor("validate"),
                    act.residual(),
                    tol,
                ));
                match self.ctx() {
                    Ok(ctx) => {
                        let cr = ctx.crossed_product().algebra().validate(tol);
                        let mut row = Row::residual(
                            "validate_crossed_product",
                            anchor("validate"),
                            cr.max_residual()
                                .max(ctx.crossed_product().embedding_residual()),
                            tol,
                        );
                        if !cr.pass {
                            row.status = Status::Fail;
                        }
                        rows.push(row);
                    }
                    Err(e) => rows.push(Row::failed(
                        "validate_crossed_product",
                        anchor("validate"),
                        e,
                    )),
                }
            }
        }
        rows
    }

    fn check_group_algebra_dim(&self) -> std::result::Result<Vec<Row>, String> {
        let id = "lemma_group_algebra_dim";
        let Some(g) = &self.group else {
            return Ok(vec![Row::skipped(id, anchor(id), "requires a group")]);
        };
        let lhs = if self.built.group.as_ref() == Some(g) {
            self.der_a()?.1.value
        } else {
            let env = Envelope::new(Arc::new(crate::constructions::group_algebra(g)));
            let space = derivation_space(&env).map_err(|e| e.to_string())?;
            derivation_dim(&space)?.value
        };
        Ok(vec![self
            .compare(id, anchor(id), lhs, 1.0 - 1.0 / g.order() as f64)
            .note(format!("G = {}", g.label()))])
    }

    fn check_multimatrix_dim(&self) -> std::result::Result<Vec<Row>, String> {
        let id = "multimatrix_dim";
        let blocks = self.blocks_a()?;
        let rhs = 1.0
            - blocks
                .iter()
                .map(|b| b.weight * b.weight / (b.size * b.size) as f64)
                .sum::<f64>();
        let desc: Vec<String> = blocks
            .iter()
            .map(|b| format!("({}, {:.6})", b.size, b.weight))
            .collect();
        Ok(vec![self
            .compare(id, anchor(id), self.der_a()?.1.value, rhs)
            .note(format!("blocks {}", desc.join(" ")))])
    }

    fn check_inner(&self) -> std::result::Result<Vec<Row>, String> {
        let id = "derivations_inner";
        let (der, d_dim) = self.der_a()?;
        let (inn, i_dim) = self.inn_a()?;
        let res = der
            .containment_residual(inn)
            .and_then(|x| inn.containment_residual(der).map(|y| x.max(y)))
            .map_err(|e| e.to_string())?;
        let mut rows = vec![Row::residual(
            id,
            anchor(id),
            res.max((d_dim.value - i_dim.value).abs()),
            self.tol,
        )
        .note(format!("linear dimensions {} and {}", der.len(), inn.len()))];
        if self.action.is_some() {
            let (dc, dcd) = self.der_c()?;
            let (ic, icd) = self.inn_c()?;
            let res = dc
                .containment_residual(ic)
                .and_then(|x| ic.containment_residual(dc).map(|y| x.max(y)))
                .map_err(|e| e.to_string())?;
            rows.push(Row::residual(
                "derivations_inner_crossed",
                anchor(id),
                res.max((dcd.value - icd.value).abs()),
                self.tol,
            ));
        }
        Ok(rows)
    }

    fn check_independence(&self) -> std::result::Result<Vec<Row>, String> {
        let id = "generating_set_independence";
        let a = self.algebra();
        let (der, dim) = self.der_a()?;
        let mut rng = self.rng(1);
        let n = a.dim();
        // a random invertible change of basis generates A
        let xs: Vec<CVec> = (0..n)
            .map(|i| {
                CVec::from_fn(n, |k, _| {
                    let diag = if i == k { 2.0 } else { 0.0 };
                    c(
                        diag + rng.random_range(-0.5..0.5),
                        rng.random_range(-0.5..0.5),
                    )
                })
            })
            .collect();
        let other = derivation_dim(&der.with_generators(xs).map_err(|e| e.to_string())?)?;
        let mut rows = vec![self
            .compare(id, anchor(id), dim.value, other.value)
            .note("basis vs random generating set")];
        if let Some(act) = &self.action {
            if self.group.as_ref().is_some_and(|g| g.is_abelian()) {
                let ctx = self.ctx()?;
                let (dc, dcd) = self.der_c()?;
                let basis: Vec<CVec> = (0..n).map(|i| a.basis_vector(i)).collect();
                let scaled = scaled_generating_set(&basis, act).map_err(|e| e.to_string())?;
                let mut ys: Vec<CVec> = scaled
                    .iter()
                    .map(|s| ctx.crossed_product().embed_base(&s.vector))
                    .collect();
                ys.extend(ctx.crossed_product().unitaries());
                let other = derivation_dim(&dc.with_generators(ys).map_err(|e| e.to_string())?)?;
                rows.push(
                    self.compare(
                        "generating_set_independence_crossed",
                        anchor(id),
                        dcd.value,
                        other.value,
                    )
                    .note("Y = basis ∪ {u_g} vs scaled set ∪ {u_g}"),
                );
            }
        }
        Ok(rows)
    }

    fn check_scaled_set(&self) -> std::result::Result<Vec<Row>, String> {
        let id = "scaled_generating_set";
        if let Some(r) = self.abelian_gate(id) {
            return Ok(vec![r]);
        }
        let act = self.action.as_ref().expect("gated");
        let a = self.algebra();
        let basis: Vec<CVec> = (0..a.dim()).map(|i| a.basis_vector(i)).collect();
        let scaled = scaled_generating_set(&basis, act).map_err(|e| e.to_string())?;
        let scaling = scaled
            .iter()
            .map(|s| s.scaling_residual(act))
            .fold(0.0, f64::max);
        let vectors: Vec<CVec> = scaled.iter().map(|s| s.vector.clone()).collect();
        let regenerated = subalgebra_generate(a, &vectors).map_err(|e| e.to_string())?;
        let target = subalgebra_generate(a, &orbit(&basis, act)).map_err(|e| e.to_string())?;
        let distance = regenerated
            .distance(a, &target)
            .max(target.distance(a, &regenerated));
        Ok(vec![
            Row::residual(id, anchor(id), scaling, self.tol.min(1e-9))
                .note(format!("{} scaled vectors", scaled.len())),
            Row::residual(
                "scaled_generating_set_regenerates",
                anchor(id),
                distance,
                self.tol,
            )
            .note(format!(
                "dimensions {} and {}",
                regenerated.dim(),
                target.dim()
            )),
        ])
    }

    fn check_schreier(&self) -> std::result::Result<Vec<Row>, String> {
        let id = "schreier_dim_der";
        let Some(g) = &self.group else {
            return Ok(vec![Row::skipped(
                id,
                anchor(id),
                "requires a group action",
            )]);
        };
        if self.action.is_none() {
            return Ok(vec![Row::skipped(
                id,
                anchor(id),
                "requires a group action",
            )]);
        }
        let lhs = self.der_c()?.1.value;
        let rhs = 1.0 + (self.der_a()?.1.value - 1.0) / g.order() as f64;
        Ok(vec![self.compare(id, anchor(id), lhs, rhs)])
    }

    fn check_schreier_vanishing(&self) -> std::result::Result<Vec<Row>, String> {
        let id = "schreier_vanishing";
        let Some(g) = self.group.as_ref().filter(|_| self.action.is_some()) else {
            return Ok(vec![Row::skipped(
                id,
                anchor(id),
                "requires a group action",
            )]);
        };
        let lhs = self.van()?.1.value;
        let rhs = self.der_a()?.1.value / g.order() as f64;
        Ok(vec![self.compare(id, anchor(id), lhs, rhs)])
    }

    fn check_vanishing_dim(&self) -> std::result::Result<Vec<Row>, String> {
        let id = "vanishing_subspace_dim";
        let Some(g) = self.group.as_ref().filter(|_| self.action.is_some()) else {
            return Ok(vec![Row::skipped(
                id,
                anchor(id),
                "requires a group action",
            )]);
        };
        let (space, _, small) = self.van()?;
        let base = &self.der_a()?.0;
        let rhs = g.order() as f64 * self.der_a()?.1.value;
        Ok(vec![self.compare(id, anchor(id), small.value, rhs).note(
            format!(
                "linear dimensions {} and {} x {}",
                space.len(),
                g.order(),
                base.len()
            ),
        )])
    }

    fn check_index_scaling(&self) -> std::result::Result<Vec<Row>, String> {
        let id = "index_scaling";
        let Some(g) = self.group.as_ref().filter(|_| self.action.is_some()) else {
            return Ok(vec![Row::skipped(
                id,
                anchor(id),
                "requires a group action",
            )]);
        };
        let ctx = self.ctx()?;
        let k = g.order() as f64;
        let full = ModuleSubspace::full(ctx.big().env().clone(), 1);
        let over_small = vn_dimension(&restrict_scalars(&full, ctx).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let (dc, dcd) = self.der_c()?;
        let image = phi_x(dc, dc.generators()).map_err(|e| e.to_string())?;
        let der_small = vn_dimension(&restrict_scalars(&image, ctx).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        Ok(vec![
            self.compare(id, anchor(id), over_small.value, k * k)
                .note("full L²(N_big) over A ⊗ A°"),
            self.compare(
                "index_scaling_der",
                anchor(id),
                der_small.value,
                k * k * dcd.value,
            )
            .note("Der(A ⋊ G) over A ⊗ A° vs |G|² times its dimension over N_big"),
        ])
    }

    fn check_subgroup(&self) -> std::result::Result<Vec<Row>, String> {
        let id = "subgroup_schreier";
        let (Some(g), Some(h)) = (&self.group, &self.subgroup) else {
            return Ok(vec![Row::skipped(
                id,
                anchor(id),
                "requires a group action and a subgroup",
            )]);
        };
        if self.action.is_none() {
            return Ok(vec![Row::skipped(
                id,
                anchor(id),
                "requires a group action and a subgroup",
            )]);
        }
        let index = (g.order() / h.group.order()) as f64;
        let lhs = self.der_c()?.1.value - 1.0;
        let rhs = (self.der_h()?.value - 1.0) / index;
        Ok(vec![self.compare(id, anchor(id), lhs, rhs).note(format!(
            "[G:H] = {index}, |H| = {}",
            h.group.order()
        ))])
    }

    fn check_betti(&self) -> std::result::Result<Vec<Row>, String> {
        let id = "betti_difference";
        let Some(g) = self.group.as_ref().filter(|_| self.action.is_some()) else {
            return Ok(vec![Row::skipped(
                id,
                anchor(id),
                "requires a group action",
            )]);
        };
        // β₀ = 1 - dim InnDer, β₁ = dim Der - dim InnDer
        let diff = |der: f64, inn: f64| (der - inn) - (1.0 - inn);
        let lhs = diff(self.der_c()?.1.value, self.inn_c()?.1.value);
        let rhs = diff(self.der_a()?.1.value, self.inn_a()?.1.value) / g.order() as f64;
        Ok(vec![self.compare(id, anchor(id), lhs, rhs).note(
            "InnDer = Der in finite dimensions, so this coincides with the Schreier relation",
        )])
    }

    fn check_covariance(&self) -> std::result::Result<Vec<Row>, String> {
        let id = "identity_covariance";
        self.with_ctx(id, |ctx| {
            let mut worst_positive: f64 = 0.0;
            let mut mismatches = 0;
            let mut negatives = 0;
            let mut positives = 0;
            let mut consider = |d: &Derivation, expect_positive: Option<bool>| {
                let cov = is_covariant(ctx, d, self.tol);
                if cov.covariant != cov.vanishes {
                    mismatches += 1;
                }
                if let Some(p) = expect_positive {
                    if p != cov.covariant {
                        mismatches += 1;
                    }
                }
                if cov.vanishes {
                    positives += 1;
                    worst_positive = worst_positive.max(cov.residual);
                } else {
                    negatives += 1;
                }
            };
            for d in self.der_a()?.0.derivations() {
                for h in ctx.group().elements() {
                    consider(&extend(ctx, &d, h), Some(true));
                }
            }
            for d in self.van()?.0.derivations() {
                consider(&d, Some(true));
            }
            let dim = ctx.big().dim_env();
            let mut rng = self.rng(2);
            for _ in 0..6 {
                let xi = CVec::from_fn(dim, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
                consider(&Derivation::inner(ctx.big().clone(), &xi), None);
            }
            let mut row = Row::residual(id, anchor(id), worst_positive, self.tol).note(format!(
                "{positives} vanishing/covariant, {negatives} non-vanishing, {mismatches} mismatches"
            ));
            if mismatches > 0 || negatives == 0 {
                row.status = Status::Fail;
            }
            Ok(vec![row])
        })
    }

    fn check_extension(&self) -> std::result::Result<Vec<Row>, String> {
        let id = "identity_extension";
        self.with_ctx(id, |ctx| {
            let der = &self.der_a()?.0;
            let ys = ctx.default_generators();
            let mut leibniz: f64 = 0.0;
            let mut vanishing: f64 = 0.0;
            let mut orthogonal: f64 = 0.0;
            let mut rank_ok = true;
            let ds = der.derivations();
            let mut per_h: Vec<Vec<Derivation>> = Vec::new();
            for h in ctx.group().elements() {
                let ext: Vec<Derivation> = ds.iter().map(|d| extend(ctx, d, h)).collect();
                for e in &ext {
                    leibniz = leibniz.max(e.leibniz_residual());
                    vanishing = vanishing.max(is_covariant(ctx, e, self.tol).vanishing_residual);
                }
                let space = DerivationSpace::from_derivations(ctx.big().clone(), ys.clone(), &ext).map_err(|e| e.to_string())?;
                rank_ok &= space.len() == ds.len();
                per_h.push(ext);
            }
            for (h, eh) in per_h.iter().enumerate() {
                for eh2 in per_h.iter().skip(h + 1) {
                    for (d1, d2) in eh.iter().zip(eh2.iter()) {
                        orthogonal = orthogonal.max(d1.inner_on(d2, &ys).norm());
                    }
                }
            }
            let mut row = Row::residual(id, anchor(id), leibniz.max(vanishing).max(orthogonal), self.tol).note(format!(
                "Leibniz {leibniz:.1e}, vanishing on C[G] {vanishing:.1e}, orthogonality {orthogonal:.1e}, injective {rank_ok}"
            ));
            if !rank_ok {
                row.status = Status::Fail;
            }
            Ok(vec![row])
        })
    }

    fn check_restriction(&self) -> std::result::Result<Vec<Row>, String> {
        let id = "identity_restriction";
        self.with_ctx(id, |ctx| {
            let mut leibniz: f64 = 0.0;
            let mut pullback: f64 = 0.0;
            for dd in self.der_c()?.0.derivations() {
                for g in ctx.group().elements() {
                    for h in ctx.group().elements() {
                        let (d, res) = restrict_with_residual(ctx, &dd, g, h);
                        leibniz = leibniz.max(d.leibniz_residual());
                        pullback = pullback.max(res);
                    }
                }
            }
            Ok(vec![Row::residual(
                id,
                anchor(id),
                leibniz.max(pullback),
                self.tol,
            )
            .note(format!(
                "Leibniz {leibniz:.1e}, leaves A ⊗ A° {pullback:.1e}"
            ))])
        })
    }

    fn check_round_trip(&self) -> std::result::Result<Vec<Row>, String> {
        let id = "identity_round_trip";
        self.with_ctx(id, |ctx| {
            let dec = decompose_vanishing(ctx, &self.van()?.0, &self.der_a()?.0);
            let worst = dec
                .forward_residual
                .max(dec.backward_residual)
                .max(dec.pullback_residual);
            Ok(vec![Row::residual(id, anchor(id), worst, self.tol).note(
                format!(
                    "Σ_h (D_h)^h = D {:.1e}, (Σ_g (d_g)^g)_h = d_h {:.1e}",
                    dec.forward_residual, dec.backward_residual
                ),
            )])
        })
    }

    fn check_module_twist(&self) -> std::result::Result<Vec<Row>, String> {
        let id = "identity_module_twist";
        self.with_ctx(id, |ctx| {
            let mut worst: f64 = 0.0;
            let mut rng = self.rng(3);
            let m0 = ctx.small().dim_env();
            let e = ctx.group().identity();
            let ms: Vec<CVec> = (0..3)
                .map(|_| {
                    CVec::from_fn(m0, |_, _| {
                        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                    })
                })
                .collect();
            for dd in self.van()?.0.derivations() {
                for h in ctx.group().elements() {
                    let dh = restrict(ctx, &dd, e, h);
                    for m in &ms {
                        let twisted = ctx.embed_env(&twist_action(ctx, m, h));
                        let lhs = restrict(ctx, &dd.right_act(&twisted), e, h);
                        worst = worst.max(lhs.sub(&dh.right_act(m)).max_abs());
                    }
                }
            }
            Ok(vec![Row::residual(id, anchor(id), worst, self.tol)])
        })
    }

    fn check_twist_action(&self) -> std::result::Result<Vec<Row>, String> {
        let id = "identity_twist_action";
        self.with_ctx(id, |ctx| {
            let grp = ctx.group();
            let m0 = ctx.small().dim_env();
            let mut rng = self.rng(4);
            let m = CVec::from_fn(m0, |_, _| {
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let one = ctx
                .small()
                .pair(ctx.small().base().unit(), ctx.small().base().unit());
            let mut worst = max_abs_vec(&(twist_action(ctx, &m, grp.identity()) - &m));
            for g in grp.elements() {
                worst = worst.max(max_abs_vec(&(twist_action(ctx, &one, g) - &one)));
                for h in grp.elements() {
                    let lhs = twist_action(ctx, &twist_action(ctx, &m, h), g);
                    let rhs = twist_action(ctx, &m, grp.mul(g, h));
                    worst = worst.max(max_abs_vec(&(lhs - rhs)));
                }
            }
            Ok(vec![Row::residual(id, anchor(id), worst, self.tol)])
        })
    }

    fn units(&self) -> Vec<(&'static str, MatrixUnits)> {
        let mut out = vec![("B = C·1", MatrixUnits::scalars(self.algebra()))];
        if let Some(u) = &self.built.units {
            out.push(("B = A", u.clone()));
        }
        out
    }

    fn check_central_projection(&self) -> std::result::Result<Vec<Row>, String> {
        let id = "identity_central_projection";
        let env = self.env_a();
        let mut worst: f64 = 0.0;
        let mut notes = Vec::new();
        for (label, units) in self.units() {
            let p = lemma11_projection(env, &units).map_err(|e| e.to_string())?;
            worst = worst.max(p.residual);
            notes.push(format!(
                "{label}: rank {}, trace {:.6}",
                p.central_rank, p.trace
            ));
        }
        Ok(vec![
            Row::residual(id, anchor(id), worst, self.tol).note(notes.join("; "))
        ])
    }

    fn check_central_splitting(&self) -> std::result::Result<Vec<Row>, String> {
        let id = "identity_central_splitting";
        let Some(units) = &self.built.units else {
            return Ok(vec![Row::skipped(
                id,
                anchor(id),
                "requires matrix units for B",
            )]);
        };
        let der = &self.der_a()?.0;
        // B = the diagonal subalgebra spanned by the e_jj, a proper subalgebra with known units
        let diag = MatrixUnits {
            units: units
                .units
                .iter()
                .flat_map(|block| {
                    block
                        .iter()
                        .enumerate()
                        .map(|(j, row)| vec![vec![row[j].clone()]])
                })
                .collect(),
        };
        let s = central_splitting(der, &diag).map_err(|e| e.to_string())?;
        let mut row = Row::residual(
            id,
            anchor(id),
            s.orthogonality.max(s.span_residual),
            self.tol,
        )
        .note(format!(
            "B = diagonal: {} + {} = {} derivations",
            s.relative_dim, s.complement_dim, s.total_dim
        ));
        if s.relative_dim + s.complement_dim != s.total_dim {
            row.status = Status::Fail;
        }
        Ok(vec![row])
    }

    fn check_fh_family(&self) -> std::result::Result<Vec<Row>, String> {
        let id = "identity_fh_family";
        let Some(g) = &self.built.group else {
            return Ok(vec![Row::skipped(
                id,
                anchor(id),
                "requires a group algebra",
            )]);
        };
        let env = self.env_a();
        let family = group_central_family(env, g).map_err(|e| e.to_string())?;
        let ortho = orthonormality_residual(env.env(), &family);
        let basis: Vec<CVec> = (0..g.order())
            .map(|i| self.algebra().basis_vector(i))
            .collect();
        let central = central_vectors(env, &basis).map_err(|e| e.to_string())?;
        let dist = span_distance(env.env(), &family, &central).map_err(|e| e.to_string())?;
        let mut row =
            Row::residual(id, anchor(id), ortho.max(dist), self.tol.min(1e-9)).note(format!(
                "orthonormality {ortho:.1e}, span distance {dist:.1e}, {} central vectors",
                central.len()
            ));
        if central.len() != g.order() {
            row.status = Status::Fail;
        }
        Ok(vec![row])
    }

    fn scaled_context(&self) -> std::result::Result<Vec<CVec>, String> {
        let act = self.action.as_ref().expect("gated");
        let ctx = self.ctx()?;
        let a = self.algebra();
        let basis: Vec<CVec> = (0..a.dim()).map(|i| a.basis_vector(i)).collect();
        let scaled = scaled_generating_set(&basis, act).map_err(|e| e.to_string())?;
        let mut ys: Vec<CVec> = scaled
            .iter()
            .map(|s| ctx.crossed_product().embed_base(&s.vector))
            .collect();
        ys.extend(ctx.crossed_product().unitaries());
        Ok(ys)
    }

    fn check_vg_unitarity(&self) -> std::result::Result<Vec<Row>, String> {
        let id = "identity_vg_unitarity";
        if let Some(r) = self.abelian_gate(id) {
            return Ok(vec![r]);
        }
        let ctx = self.ctx()?;
        let ys = self.scaled_context()?;
        let grp = ctx.group();
        let maps = grp
            .elements()
            .map(|g| vg_unitary(ctx, g, &ys, 1e-9))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        let der = &self.der_c()?.0;
        let mut rng = self.rng(5);
        let pairs: Vec<(Derivation, Derivation)> = (0..4)
            .map(|_| {
                (
                    random_combination(der, &mut rng),
                    random_combination(der, &mut rng),
                )
            })
            .collect();
        let mut worst: f64 = 0.0;
        let mut identity: f64 = 0.0;
        for (d1, d2) in &pairs {
            let base = d1.inner_on(d2, &ys);
            for g in grp.elements() {
                let lhs = maps[g].apply(d1).inner_on(d2, &ys);
                let rhs = d1.inner_on(&maps[grp.inv(g)].apply(d2), &ys);
                let iso = maps[g].apply(d1).inner_on(&maps[g].apply(d2), &ys);
                worst = worst.max((lhs - rhs).norm()).max((iso - base).norm());
                worst = worst.max(maps[g].apply(d1).leibniz_residual());
            }
            identity = identity.max(maps[grp.identity()].apply(d1).sub(d1).max_abs());
        }
        Ok(vec![Row::residual(
            id,
            anchor(id),
            worst.max(identity),
            self.tol.min(1e-9),
        )
        .note(format!(
            "{} random pairs, {} scaled generators",
            pairs.len(),
            ys.len()
        ))])
    }

    fn check_vg_averaging(&self) -> std::result::Result<Vec<Row>, String> {
        let id = "identity_vg_averaging";
        if let Some(r) = self.abelian_gate(id) {
            return Ok(vec![r]);
        }
        let ctx = self.ctx()?;
        let ys = self.scaled_context()?;
        let maps = ctx
            .group()
            .elements()
            .map(|g| vg_unitary(ctx, g, &ys, 1e-9))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        let mut worst: f64 = 0.0;
        for d in self.der_c()?.0.derivations() {
            let avg = average(&maps, &d);
            let cov = is_covariant(ctx, &avg, self.tol);
            worst = worst
                .max(cov.vanishing_residual)
                .max(avg.leibniz_residual());
        }
        Ok(vec![Row::residual(id, anchor(id), worst, self.tol)])
    }
}

fn derivation_dim(space: &DerivationSpace) -> std::result::Result<VnDimension, String> {
    phi_x(space, space.generators())
        .and_then(|image| vn_dimension(&image))
        .map_err(|e| e.to_string())
}

fn random_combination(space: &DerivationSpace, rng: &mut ChaCha8Rng) -> Derivation {
    let terms: Vec<(C64, &SparseVec)> = space
        .vectors()
        .iter()
        .map(|v| {
            (
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                v,
            )
        })
        .collect();
    let v = if terms.is_empty() {
        SparseVec::new()
    } else {
        SparseVec::linear_combination(terms)
    };
    Derivation::from_vec(space.envelope().clone(), &v)
}

/// The formula or statement a check verifies.
pub fn anchor(id: &str) -> &'static str {
    match id {
        "validate" => "tracial *-algebra axioms: associativity, unit, involution, τ(1) = 1, τ(ab) = τ(ba), τ(a*a) > 0",
        "lemma_group_algebra_dim" => "dim Der(C[G], τ) = 1 − 1/|G|",
        "multimatrix_dim" => "dim Der(B, τ) = 1 − Σ α_i²/n_i² for B = Σ M_{n_i}(C)",
        "derivations_inner" => "every derivation is bounded and hence inner",
        "generating_set_independence" => "the dimension is independent of the generating set X",
        "scaled_generating_set" => "α_g(x_χ) = χ(g) x_χ and C⟨X_Ĝ⟩ = ⋁_g α_g(A)",
        "schreier_dim_der" => "dim Der(A⋊G, τ) − 1 = (1/|G|)(dim Der(A, τ) − 1)",
        "schreier_vanishing" => "dim Der(C[G] ⊂ A⋊G, τ) = (1/|G|) dim Der(A, τ)",
        "vanishing_subspace_dim" => "Der(C[G] ⊂ A⋊G, τ) ≅ ⊕_{g∈G} (Der(A, τ))_{1⊗α_g}, dimension |G| dim Der(A, τ)",
        "index_scaling" => "[((A⋊G)⊗(A⋊G)°)′′ : (A⊗A°)′′] = |G|²",
        "subgroup_schreier" => "dim Der(A⋊G, τ) − 1 = (1/[G:H])(dim Der(A⋊H, τ) − 1)",
        "betti_difference" => "β₁ − β₀ (A⋊G) = (1/|G|)(β₁ − β₀)(A)",
        "identity_coset_projections" => "p_{g,h} := [L²(A⊗A°)(u_g ⊗ u_h°)] ∈ (A⊗A°)′, Σ p_{g,h} = 1",
        "identity_coset_translation" => "p_{g,h}(u_k ⊗ u_ℓ°) = (u_k ⊗ u_ℓ°) p_{k⁻¹g, hℓ⁻¹}",
        "identity_coset_conjugation" => "J p_{g,h} = p_{g⁻¹,h⁻¹} J",
        "identity_covariance" => "D(u_g b u_g*) = u_g · D(b) · u_g* for all g iff D vanishes on C[G]",
        "identity_extension" => "d^h ∈ Der(C[G] ⊂ A⋊G, τ) and {d^h}_{h∈G} are orthogonal",
        "identity_restriction" => "D_{g,h} := J(u_g ⊗ u_h°)J p_{g,h} D|_A ∈ Der(A, τ)",
        "identity_round_trip" => "the inverse being D ↦ (D_g)_{g∈G}: Σ_h (D_h)^h = D and (d^h)_h = d",
        "identity_module_twist" => "(D ·_h m)_h = D_h · m",
        "identity_twist_action" => "d ·_h m = d · (1⊗α_h)(m)",
        "identity_central_projection" => "p := Σ (1/n_i) Σ e^{(i)}_{j,k} ⊗ (e^{(i)}_{k,j})° is the projection onto B-central vectors",
        "identity_central_splitting" => "Der(A) = Der(B ⊂ A) ⊕ {[·, ξ] : ξ ⊥ L²_B} for ⟨·,·⟩_Y, Y = {exe′}",
        "identity_fh_family" => "{Σ_k δ_{kh} ⊗ δ_{k⁻¹}°}_h is an orthonormal basis of the central vectors",
        "identity_vg_unitarity" => "V_g : D ↦ u_g* · D(α_g(·)) · u_g is a unitary with respect to ⟨·,·⟩_Y",
        "identity_vg_averaging" => "(1/|G|) Σ_g V_g D vanishes on C[G]",
        _ => "",
    }
}
