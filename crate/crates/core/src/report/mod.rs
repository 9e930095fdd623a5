//! Declarative experiments and their reports.

mod checks;
mod corpus;
mod output;
pub mod schema;

pub use checks::{anchor, resolve_checks, Pipeline, Row, Status, CHECKS};
pub use corpus::{corpus, corpus_specs};
pub use output::{ExperimentReport, Format, Summary, VerificationReport};
pub use schema::{ActionJson, AlgebraJson, ExperimentSpec, GroupJson, SpecFile};

use crate::error::Result;

/// Default pass/fail tolerance.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Options shared by every run.
#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Overrides every spec tolerance when set.
    pub tolerance: Option<f64>,
    /// Used when a spec has no tolerance of its own.
    pub fallback_tolerance: f64,
    /// Overrides every spec seed when set.
    pub seed: Option<u64>,
    pub timings: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            tolerance: None,
            fallback_tolerance: DEFAULT_TOLERANCE,
            seed: None,
            timings: false,
        }
    }
}

/// Builds and runs a list of experiments.
///
/// All specs are built before anything runs, so a malformed entry fails the
/// whole batch with its location.
pub fn run(specs: &[ExperimentSpec], opts: &RunOptions) -> Result<VerificationReport> {
    let mut pipelines = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let loc = if specs.len() == 1 {
            "$".to_string()
        } else {
            format!("$.experiments[{i}]")
        };
        let tol = opts
            .tolerance
            .or(spec.tolerance)
            .unwrap_or(opts.fallback_tolerance);
        if !(tol.is_finite() && tol > 0.0) {
            return Err(crate::error::Error::spec(
                format!("{loc}.tolerance"),
                "tolerance must be positive",
            ));
        }
        let seed = opts.seed.or(spec.seed).unwrap_or(0).wrapping_add(i as u64);
        pipelines.push(Pipeline::build(spec, &loc, tol, seed)?);
    }
    let experiments = pipelines
        .iter()
        .map(|p| ExperimentReport {
            label: p.label.clone(),
            algebra: p.algebra().label().to_string(),
            group: p.group.as_ref().map(|g| g.label().to_string()),
            tolerance: p.tol,
            seed: p.seed,
            rows: p.run(opts.timings),
        })
        .collect();
    Ok(VerificationReport::new(experiments))
}
