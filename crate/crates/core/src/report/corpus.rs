//! The built-in experiment battery.

use serde_json::{json, Value};

use super::schema::ExperimentSpec;

fn spec(v: Value) -> ExperimentSpec {
    ExperimentSpec::from_value(&v, "corpus").expect("built-in corpus entries are well formed")
}

const ALGEBRA_CHECKS: &[&str] = &[
    "validate",
    "multimatrix_dim",
    "derivations_inner",
    "generating_set_independence",
    "identity_central_projection",
    "identity_central_splitting",
];

const GROUP_ALGEBRA_CHECKS: &[&str] = &[
    "validate",
    "lemma_group_algebra_dim",
    "multimatrix_dim",
    "derivations_inner",
    "generating_set_independence",
    "identity_central_projection",
    "identity_fh_family",
];

/// Every built-in experiment as JSON, in run order.
pub fn corpus() -> Vec<Value> {
    let third = 1.0 / 3.0;
    let mut out = vec![
        json!({ "label": "C", "algebra": { "multimatrix": { "blocks": [[1, 1.0]] } }, "checks": ALGEBRA_CHECKS }),
        json!({ "label": "C^2", "algebra": { "multimatrix": { "blocks": [[1, 0.5], [1, 0.5]] } }, "checks": ALGEBRA_CHECKS }),
        json!({
            "label": "C^3 uneven, trivial Z/3",
            "algebra": { "multimatrix": { "blocks": [[1, 0.5], [1, 0.3], [1, 0.2]] } },
            "group": "Z/3",
            "action": "trivial",
            "checks": ["all"]
        }),
        json!({ "label": "M_2", "algebra": { "multimatrix": { "blocks": [[2, 1.0]] } }, "checks": ALGEBRA_CHECKS }),
        json!({
            "label": "M_2+C",
            "algebra": { "multimatrix": { "blocks": [[2, 0.75], [1, 0.25]] } },
            "checks": ALGEBRA_CHECKS
        }),
        json!({
            "label": "C^2, Z/2 flip",
            "algebra": { "multimatrix": { "blocks": [[1, 0.5], [1, 0.5]] } },
            "group": "Z/2",
            "action": { "generators": [{ "element": 1, "block_permutation": [1, 0] }] },
            "checks": ["all"]
        }),
        json!({
            "label": "C^3, Z/3 cyclic block permutation",
            "algebra": { "multimatrix": { "blocks": [[1, third], [1, third], [1, third]] } },
            "group": "Z/3",
            "action": { "generators": [{ "element": 1, "block_permutation": [1, 2, 0] }] },
            "checks": ["all"]
        }),
        json!({
            "label": "M_2, Z/2 Ad(diag(1,-1))",
            "algebra": { "multimatrix": { "blocks": [[2, 1.0]] } },
            "group": "Z/2",
            "action": { "generators": [{ "element": 1, "ad": [1, 0, 0, -1] }] },
            "checks": ["all"]
        }),
        json!({
            "label": "M_2+C, Z/2 Ad(diag(1,-1)+1)",
            "algebra": { "multimatrix": { "blocks": [[2, 0.75], [1, 0.25]] } },
            "group": "Z/2",
            "action": { "generators": [{ "element": 1, "ad": [1, 0, 0, -1, 1] }] },
            "checks": ["all"]
        }),
    ];
    for n in 2..=6 {
        out.push(json!({
            "label": format!("C[Z/{n}]"),
            "algebra": { "group_algebra": format!("Z/{n}") },
            "checks": GROUP_ALGEBRA_CHECKS
        }));
    }
    out.push(json!({ "label": "C[Z/2xZ/2]", "algebra": { "group_algebra": "Z/2xZ/2" }, "checks": GROUP_ALGEBRA_CHECKS }));
    out.push(json!({ "label": "C[S3]", "algebra": { "group_algebra": "S3" }, "checks": GROUP_ALGEBRA_CHECKS }));
    for n in 2..=6 {
        out.push(json!({
            "label": format!("C, Z/{n} trivial"),
            "algebra": { "multimatrix": { "blocks": [[1, 1.0]] } },
            "group": format!("Z/{n}"),
            "action": "trivial",
            "checks": ["all"]
        }));
    }
    out.push(json!({
        "label": "C, S3 trivial",
        "algebra": { "multimatrix": { "blocks": [[1, 1.0]] } },
        "group": "S3",
        "action": "trivial",
        "checks": ["all"]
    }));
    out.push(json!({
        "label": "C[Z/2], Z/2 trivial",
        "algebra": { "group_algebra": "Z/2" },
        "group": "Z/2",
        "action": "trivial",
        "checks": ["all"]
    }));
    for n in [2, 3] {
        out.push(json!({
            "label": format!("C[Z/{n}], Z/{n} dual"),
            "algebra": { "group_algebra": format!("Z/{n}") },
            "group": format!("Z/{n}"),
            "action": "dual",
            "checks": ["all"]
        }));
    }
    out.push(json!({
        "label": "C^2, Z/4 through the flip, H = Z/2",
        "algebra": { "multimatrix": { "blocks": [[1, 0.5], [1, 0.5]] } },
        "group": "Z/4",
        "action": { "generators": [{ "element": 1, "block_permutation": [1, 0] }] },
        "subgroup": [0, 2],
        "checks": ["all"]
    }));
    out.push(json!({
        "label": "C^2, Z/2xZ/2 through the flip, H = Z/2",
        "algebra": { "multimatrix": { "blocks": [[1, 0.5], [1, 0.5]] } },
        "group": "Z/2xZ/2",
        "action": { "generators": [
            { "element": 2, "block_permutation": [1, 0] },
            { "element": 1, "block_permutation": [0, 1] }
        ] },
        "subgroup": [0, 1],
        "checks": ["all"]
    }));
    out
}

pub fn corpus_specs() -> Vec<ExperimentSpec> {
    corpus().into_iter().map(spec).collect()
}
