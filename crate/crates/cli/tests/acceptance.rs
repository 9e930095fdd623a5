//! Acceptance battery. Every criterion prints one `[PASS]` or `[FAIL]` line
//! on stdout (outside the test harness capture) and then asserts.

use std::io::Write;
use std::process::Command;
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steinlab::constructions::{
    group_algebra, multimatrix, orbit, scaled_generating_set, subalgebra_generate, CrossedProduct,
    GroupAction,
};
use steinlab::derivations::{
    derivation_space, derivation_space_of, relative_derivations, CrossedContext,
};
use steinlab::linalg::{c, r, CMat, CVec};
use steinlab::report::{self, corpus_specs, RunOptions, Status, VerificationReport};
use steinlab::vndim::{
    derivation_dimension, generating_set_independence_check, phi_x, restrict_scalars, vn_dimension,
    ModuleSubspace,
};
use steinlab::{FDAlgebra, FiniteGroup};

fn verdict(n: u32, title: &str, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "[{tag}] criterion {n}: {title} ({detail})").unwrap();
    out.flush().unwrap();
    assert!(ok, "criterion {n} failed: {detail}");
}

fn der_dim(a: FDAlgebra) -> f64 {
    derivation_dimension(&derivation_space_of(Arc::new(a)).unwrap())
        .unwrap()
        .value
}

fn context(act: GroupAction) -> Arc<CrossedContext> {
    CrossedContext::new(CrossedProduct::new(Arc::new(act)).unwrap())
}

/// Dimension of `Der(A ⋊ G)` with `Y = A ∪ {u_g}` over the big envelope.
fn crossed_der_dim(ctx: &CrossedContext) -> f64 {
    let space = derivation_space(ctx.big())
        .unwrap()
        .with_generators(ctx.default_generators())
        .unwrap();
    vn_dimension(&phi_x(&space, space.generators()).unwrap())
        .unwrap()
        .value
}

fn powers(
    group: &FiniteGroup,
    algebra: &Arc<FDAlgebra>,
    of: impl Fn(usize) -> CMat,
) -> GroupAction {
    let maps = group.elements().map(of).collect();
    GroupAction::new(group.clone(), algebra.clone(), maps).unwrap()
}

fn flip() -> CMat {
    GroupAction::block_permutation_matrix(&[(1, 0.5), (1, 0.5)], &[1, 0]).unwrap()
}

fn flip_action(group: &FiniteGroup, flips: impl Fn(usize) -> bool) -> GroupAction {
    let c2 = Arc::new(multimatrix(&[(1, 0.5), (1, 0.5)]).unwrap());
    powers(group, &c2, |g| {
        if flips(g) {
            flip()
        } else {
            CMat::identity(2, 2)
        }
    })
}

fn m2_ad() -> GroupAction {
    let m2 = Arc::new(multimatrix(&[(2, 1.0)]).unwrap());
    let u = CVec::from_vec(vec![r(1.0), r(0.0), r(0.0), r(-1.0)]);
    let ad = GroupAction::ad_matrix(&m2, &u);
    powers(&FiniteGroup::cyclic(2), &m2, |g| {
        if g == 0 {
            CMat::identity(4, 4)
        } else {
            ad.clone()
        }
    })
}

fn cyclic_block_shift() -> GroupAction {
    let blocks = [(1, 1.0 / 3.0), (1, 1.0 / 3.0), (1, 1.0 / 3.0)];
    let c3 = Arc::new(multimatrix(&blocks).unwrap());
    powers(&FiniteGroup::cyclic(3), &c3, |g| {
        let perm: Vec<usize> = (0..3).map(|i| (i + g) % 3).collect();
        GroupAction::block_permutation_matrix(&blocks, &perm).unwrap()
    })
}

/// `α_g(u_h) = ω^{gh} u_h` on `C[Z/n]`.
fn dual_action(n: usize) -> GroupAction {
    let group = FiniteGroup::cyclic(n);
    let a = Arc::new(group_algebra(&group));
    powers(&group, &a, |g| {
        let phases: Vec<_> = (0..n)
            .map(|h| {
                let t = 2.0 * std::f64::consts::PI * ((g * h) % n) as f64 / n as f64;
                c(t.cos(), t.sin())
            })
            .collect();
        CMat::from_diagonal(&CVec::from_vec(phases))
    })
}

fn trivial_on(a: FDAlgebra, group: FiniteGroup) -> GroupAction {
    GroupAction::trivial(group, Arc::new(a))
}

/// Closed form `1 − Σ_i α_i² / n_i²` for a multi-matrix algebra.
fn multimatrix_oracle(blocks: &[(usize, f64)]) -> f64 {
    1.0 - blocks
        .iter()
        .map(|&(n, a)| a * a / (n * n) as f64)
        .sum::<f64>()
}

fn corpus_report() -> &'static VerificationReport {
    static REPORT: OnceLock<VerificationReport> = OnceLock::new();
    REPORT.get_or_init(|| report::run(&corpus_specs(), &RunOptions::default()).unwrap())
}

/// `(experiment label, lhs, rhs, residual, status)` of one report row.
type CorpusRow = (String, Option<f64>, Option<f64>, Option<f64>, Status);

fn corpus_rows(name: &str) -> Vec<CorpusRow> {
    corpus_report()
        .experiments
        .iter()
        .flat_map(|e| {
            e.rows
                .iter()
                .filter(|row| row.name == name)
                .map(|row| (e.label.clone(), row.lhs, row.rhs, row.residual, row.status))
        })
        .collect()
}

#[test]
fn criterion_1_group_algebras() {
    let start = Instant::now();
    let groups = [
        FiniteGroup::cyclic(2),
        FiniteGroup::cyclic(3),
        FiniteGroup::cyclic(4),
        FiniteGroup::cyclic(5),
        FiniteGroup::cyclic(6),
        FiniteGroup::product_of_cyclics(&[2, 2]),
        FiniteGroup::symmetric3(),
    ];
    let mut worst: f64 = 0.0;
    for g in &groups {
        let got = der_dim(group_algebra(g));
        worst = worst.max((got - (1.0 - 1.0 / g.order() as f64)).abs());
    }
    let elapsed = start.elapsed();
    verdict(
        1,
        "dim Der(C[G]) = 1 - 1/|G|",
        worst <= 1e-7 && elapsed < Duration::from_secs(10),
        &format!(
            "{} groups, max error {worst:.2e}, {:.2}s",
            groups.len(),
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_2_random_multimatrix() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut shapes = Vec::new();
    for _ in 0..10 {
        let k = rng.random_range(1..=3);
        let raw: Vec<(usize, f64)> = (0..k)
            .map(|_| (rng.random_range(1..=3), rng.random_range(0.1..1.0)))
            .collect();
        let total: f64 = raw.iter().map(|b| b.1).sum();
        let blocks: Vec<(usize, f64)> = raw.iter().map(|&(n, a)| (n, a / total)).collect();
        let got = der_dim(multimatrix(&blocks).unwrap());
        worst = worst.max((got - multimatrix_oracle(&blocks)).abs());
        shapes.push(
            blocks
                .iter()
                .map(|b| b.0.to_string())
                .collect::<Vec<_>>()
                .join("+"),
        );
    }
    let elapsed = start.elapsed();
    verdict(
        2,
        "dim Der(⊕M_n_i) = 1 - Σα_i²/n_i²",
        worst <= 1e-7 && elapsed < Duration::from_secs(30),
        &format!(
            "shapes [{}], max error {worst:.2e}, {:.2}s",
            shapes.join(" "),
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_3_schreier_battery() {
    let start = Instant::now();
    let mut cases: Vec<(String, GroupAction, f64)> = vec![
        (
            "C², flip".into(),
            flip_action(&FiniteGroup::cyclic(2), |g| g == 1),
            0.75,
        ),
        ("M_2, Ad diag(1,-1)".into(), m2_ad(), 0.875),
        (
            "C[Z/2], Z/2 trivial".into(),
            trivial_on(
                group_algebra(&FiniteGroup::cyclic(2)),
                FiniteGroup::cyclic(2),
            ),
            0.75,
        ),
    ];
    for n in 2..=6 {
        cases.push((
            format!("C, Z/{n} trivial"),
            trivial_on(multimatrix(&[(1, 1.0)]).unwrap(), FiniteGroup::cyclic(n)),
            1.0 - 1.0 / n as f64,
        ));
    }
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for (label, act, expected) in cases {
        let got = crossed_der_dim(&context(act));
        let err = (got - expected).abs();
        if err > 1e-7 {
            failures.push(format!("{label}: {got} vs {expected}"));
        }
        worst = worst.max(err);
    }
    let elapsed = start.elapsed();
    verdict(
        3,
        "Schreier battery",
        failures.is_empty() && elapsed < Duration::from_secs(60),
        &format!(
            "{}max error {worst:.2e}, {:.2}s",
            failures
                .iter()
                .map(|f| format!("{f}; "))
                .collect::<String>(),
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_4_restriction_of_scalars() {
    let actions = vec![
        flip_action(&FiniteGroup::cyclic(2), |g| g == 1),
        m2_ad(),
        cyclic_block_shift(),
        dual_action(2),
        trivial_on(multimatrix(&[(1, 1.0)]).unwrap(), FiniteGroup::cyclic(3)),
        trivial_on(multimatrix(&[(1, 1.0)]).unwrap(), FiniteGroup::symmetric3()),
    ];
    let mut worst_full: f64 = 0.0;
    let mut worst_vanishing: f64 = 0.0;
    for act in actions {
        let k = act.group().order() as f64;
        let base = act.algebra().clone();
        let ctx = context(act);
        let full = ModuleSubspace::full(ctx.big().env().clone(), 1);
        let over_small = vn_dimension(&restrict_scalars(&full, &ctx).unwrap())
            .unwrap()
            .value;
        worst_full = worst_full.max((over_small - k * k).abs());

        let der = derivation_space(ctx.big())
            .unwrap()
            .with_generators(ctx.default_generators())
            .unwrap();
        let vanishing = relative_derivations(&der, &ctx.group_subalgebra()).unwrap();
        let image = phi_x(&vanishing, vanishing.generators()).unwrap();
        let small = vn_dimension(&restrict_scalars(&image, &ctx).unwrap())
            .unwrap()
            .value;
        worst_vanishing = worst_vanishing.max((small - k * der_dim((*base).clone())).abs());
    }
    verdict(
        4,
        "restrict_scalars: |G|² on L²(A⋊G) and |G|·dim Der(A) on Der(C[G] ⊂ A⋊G)",
        worst_full <= 1e-7 && worst_vanishing <= 1e-7,
        &format!("full max error {worst_full:.2e}, vanishing max error {worst_vanishing:.2e}"),
    );
}

#[test]
fn criterion_5_identity_suite() {
    let families = [
        "identity_covariance",
        "identity_extension",
        "identity_restriction",
        "identity_coset_projections",
        "identity_coset_translation",
        "identity_coset_conjugation",
        "identity_round_trip",
        "identity_module_twist",
        "identity_twist_action",
        "identity_central_projection",
        "identity_central_splitting",
        "identity_fh_family",
        "identity_vg_unitarity",
        "identity_vg_averaging",
    ];
    let mut worst: f64 = 0.0;
    let mut problems = Vec::new();
    let mut evaluated = 0;
    for family in families {
        let rows = corpus_rows(family);
        let passed = rows.iter().filter(|row| row.4 == Status::Pass).count();
        if passed == 0 {
            problems.push(format!("{family}: never evaluated"));
        }
        for (label, _, _, residual, status) in rows {
            if status == Status::Skipped {
                continue;
            }
            evaluated += 1;
            match residual {
                Some(res) => {
                    worst = worst.max(res);
                    if res > 1e-8 || status != Status::Pass {
                        problems.push(format!("{family} on {label}: residual {res:.2e}"));
                    }
                }
                None => problems.push(format!("{family} on {label}: no residual")),
            }
        }
    }
    verdict(
        5,
        "identity suite",
        problems.is_empty(),
        &format!(
            "{}{evaluated} rows, max residual {worst:.2e}",
            problems
                .iter()
                .map(|p| format!("{p}; "))
                .collect::<String>()
        ),
    );
}

#[test]
fn criterion_6_generating_set_independence() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let algebras = vec![
        multimatrix(&[(1, 0.5), (1, 0.5)]).unwrap(),
        multimatrix(&[(2, 1.0)]).unwrap(),
        multimatrix(&[(2, 0.75), (1, 0.25)]).unwrap(),
        group_algebra(&FiniteGroup::symmetric3()),
    ];
    let mut worst: f64 = 0.0;
    for a in algebras {
        let n = a.dim();
        let basis: Vec<CVec> = (0..n).map(|i| a.basis_vector(i)).collect();
        let perturbed: Vec<CVec> = (0..n)
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
        let space = derivation_space_of(Arc::new(a)).unwrap();
        let rep = generating_set_independence_check(&space, &basis, &perturbed, 1e-7).unwrap();
        worst = worst.max(rep.difference);
    }
    let crossed = corpus_rows("generating_set_independence_crossed");
    for (_, lhs, rhs, _, _) in &crossed {
        worst = worst.max((lhs.unwrap() - rhs.unwrap()).abs());
    }
    verdict(
        6,
        "generating-set independence",
        worst <= 1e-7 && !crossed.is_empty(),
        &format!(
            "4 algebras and {} crossed products, max difference {worst:.2e}",
            crossed.len()
        ),
    );
}

#[test]
fn criterion_7_subgroup_schreier() {
    let z4 = FiniteGroup::cyclic(4);
    let klein = FiniteGroup::product_of_cyclics(&[2, 2]);
    // the flip is g mod 2 on Z/4; on Z/2 × Z/2 the second factor acts trivially
    let cases = vec![
        (
            "Z/4 ⊃ Z/2",
            flip_action(&z4, |g| g % 2 == 1),
            z4.subgroup(&[0, 2]).unwrap(),
        ),
        (
            "Z/2×Z/2 ⊃ Z/2",
            flip_action(&klein, |g| matches!(g, 2 | 3)),
            klein.subgroup(&[0, 1]).unwrap(),
        ),
    ];
    let mut worst: f64 = 0.0;
    let mut values = Vec::new();
    for (label, act, sub) in cases {
        let index = (act.group().order() / sub.group.order()) as f64;
        let der_h = crossed_der_dim(&context(act.restrict(&sub)));
        let der_g = crossed_der_dim(&context(act));
        worst = worst.max(((der_g - 1.0) - (der_h - 1.0) / index).abs());
        // both are C² ⋊ G with |G| = 4 and Der(C²) = 1/2
        worst = worst.max((der_g - 0.875).abs());
        values.push(format!("{label}: {der_g:.6} vs {der_h:.6}"));
    }
    verdict(
        7,
        "dim Der(A⋊G) - 1 = (dim Der(A⋊H) - 1)/[G:H]",
        worst <= 1e-7,
        &format!("{}, max error {worst:.2e}", values.join("; ")),
    );
}

#[test]
fn criterion_8_scaled_generating_set() {
    let actions = vec![
        flip_action(&FiniteGroup::cyclic(2), |g| g == 1),
        m2_ad(),
        cyclic_block_shift(),
        dual_action(2),
        dual_action(3),
        dual_action(4),
    ];
    let mut worst_scaling: f64 = 0.0;
    let mut worst_distance: f64 = 0.0;
    for act in &actions {
        let a = act.algebra();
        let basis: Vec<CVec> = (0..a.dim()).map(|i| a.basis_vector(i)).collect();
        let scaled = scaled_generating_set(&basis, act).unwrap();
        for s in &scaled {
            worst_scaling = worst_scaling.max(s.scaling_residual(act));
        }
        let vectors: Vec<CVec> = scaled.iter().map(|s| s.vector.clone()).collect();
        let regenerated = subalgebra_generate(a, &vectors).unwrap();
        let target = subalgebra_generate(a, &orbit(&basis, act)).unwrap();
        worst_distance = worst_distance
            .max(regenerated.distance(a, &target))
            .max(target.distance(a, &regenerated));
    }
    verdict(
        8,
        "X_Ĝ is character-scaled and generates the same subalgebra",
        worst_scaling <= 1e-9 && worst_distance <= 1e-9,
        &format!(
            "{} actions, scaling {worst_scaling:.2e}, subalgebra distance {worst_distance:.2e}",
            actions.len()
        ),
    );
}

#[test]
fn criterion_9_corpus_is_deterministic() {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_steinlab"))
            .args(["corpus", "--seed", "7", "--format", "json"])
            .output()
            .unwrap()
    };
    let (first, second) = std::thread::scope(|s| {
        let a = s.spawn(run);
        let b = s.spawn(run);
        (a.join().unwrap(), b.join().unwrap())
    });
    let parsed: serde_json::Value =
        serde_json::from_slice(&first.stdout).unwrap_or(serde_json::Value::Null);
    let ok = first.status.success()
        && !first.stdout.is_empty()
        && first.stdout == second.stdout
        && parsed.is_object();
    verdict(
        9,
        "steinlab corpus --seed 7 is byte-identical across runs",
        ok,
        &format!(
            "{} bytes, exit {:?}",
            first.stdout.len(),
            first.status.code()
        ),
    );
}
