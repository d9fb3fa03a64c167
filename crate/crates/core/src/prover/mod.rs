//! Goal-directed connection-tableau prover.
//!
//! Search uses extension and reduction steps with a regularity check and
//! iterative deepening on path length. Resource use is counted in
//! inferences: every extension or reduction attempt counts, successful or
//! not. When no proof is found the finite model finder is asked for a model
//! of the whole clause set.

mod check;
mod engine;
mod proof;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fol::{ClauseId, ClauseSet, Literal};
use crate::models::{find_model, FiniteModel, DEFAULT_MAX_DOMAIN};

pub use check::{check_proof, CheckError};
pub use proof::{copy_var, parse_proof_file, render_proof_file, ProofObject, Step, Unifier};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProverError {
    #[error("malformed clause set: {0}")]
    Malformed(String),
    #[error("invalid limits: {0}")]
    Limits(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Proved,
    CounterSatisfiable,
    Timeout,
    InferenceLimit,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Proved => "proved",
            Status::CounterSatisfiable => "counter_satisfiable",
            Status::Timeout => "timeout",
            Status::InferenceLimit => "inference_limit",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    /// Wall-clock budget; `None` leaves only the inference budget.
    pub time: Option<Duration>,
    pub inferences: u64,
    pub max_depth: usize,
    pub max_axioms: usize,
    /// Largest domain tried when looking for a countermodel; 0 disables it.
    pub model_domain: u32,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            time: None,
            inferences: 200_000,
            max_depth: 12,
            max_axioms: 128,
            model_domain: DEFAULT_MAX_DOMAIN,
        }
    }
}

impl Limits {
    pub fn with_inferences(inferences: u64) -> Self {
        Limits {
            inferences,
            ..Limits::default()
        }
    }

    pub fn validate(&self) -> Result<(), ProverError> {
        if self.inferences == 0 || self.max_depth == 0 || self.max_axioms == 0 {
            return Err(ProverError::Limits(
                "inference budget, depth and axiom count must be positive".into(),
            ));
        }
        if self.time.is_some_and(|t| t.is_zero()) {
            return Err(ProverError::Limits("time budget must be positive".into()));
        }
        Ok(())
    }
}

/// Calculus switches; both are off by default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProverOptions {
    pub lemmata: bool,
    pub restricted_backtracking: bool,
    /// Record every extension choice point in [`RunResult::trace`].
    pub trace: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub inferences: u64,
    pub depth: usize,
    #[serde(skip)]
    pub wall: Duration,
}

/// What an advisor sees at an extension choice point.
pub struct ChoicePoint<'a> {
    /// Path literals from the root, under the current substitution.
    pub branch: &'a [Literal],
    pub goal: &'a Literal,
    /// Branch length including the goal.
    pub depth: usize,
    /// Distinct candidate clauses in input order.
    pub candidates: &'a [ClauseId],
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct GuideError(pub String);

/// Hook for reordering extension candidates. Implementations must be safe
/// for concurrent queries from several prover instances.
pub trait Guide: Sync {
    /// Whether to consult [`Guide::advise`] at this choice point.
    fn wants(&self, depth: usize, candidates: usize) -> bool;
    /// A permutation of `point.candidates`. Anything else, an error or a
    /// panic falls back to input order.
    fn advise(&self, point: &ChoicePoint<'_>) -> Result<Vec<ClauseId>, GuideError>;
}

/// A consulted choice point, filled in once the search has finished.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChoiceRecord {
    pub branch: Vec<Literal>,
    pub goal: Literal,
    pub depth: usize,
    pub candidates: Vec<ClauseId>,
    pub advised: Vec<ClauseId>,
    /// Candidates whose extension was attempted, in order.
    pub tried: Vec<ClauseId>,
    /// The clause this goal was closed with in the final proof.
    pub closed_with: Option<ClauseId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub depth: usize,
    pub candidates: usize,
    pub consulted: bool,
    pub branch: Vec<Literal>,
    pub goal: Literal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub status: Status,
    pub proof: Option<ProofObject>,
    pub model: Option<FiniteModel>,
    pub stats: Stats,
    pub choices: Vec<ChoiceRecord>,
    pub trace: Vec<TraceEntry>,
}

/// Searches for a refutation of `clauses`.
pub fn prove(
    clauses: &ClauseSet,
    limits: &Limits,
    guide: Option<&dyn Guide>,
) -> Result<RunResult, ProverError> {
    prove_with(clauses, limits, &ProverOptions::default(), guide)
}

pub fn prove_with(
    clauses: &ClauseSet,
    limits: &Limits,
    options: &ProverOptions,
    guide: Option<&dyn Guide>,
) -> Result<RunResult, ProverError> {
    limits.validate()?;
    let started = Instant::now();
    let out = engine::Engine::new(clauses, limits, options, guide)?.run();
    let mut stats = Stats {
        inferences: out.inferences,
        depth: out.depth,
        wall: Duration::ZERO,
    };
    let (status, proof, model) = match out.proof {
        Some(p) => (Status::Proved, Some(p), None),
        None => match counter_satisfiable(clauses, limits.model_domain) {
            Some(m) => (Status::CounterSatisfiable, None, Some(m)),
            None => match out.stop {
                Some(engine::Stop::Time) => (Status::Timeout, None, None),
                _ => {
                    if out.exhausted {
                        log::debug!(
                            "search space exhausted at depth {} without a countermodel",
                            out.depth
                        );
                    }
                    (Status::InferenceLimit, None, None)
                }
            },
        },
    };
    stats.wall = started.elapsed();
    Ok(RunResult {
        status,
        proof,
        model,
        stats,
        choices: out.choices,
        trace: out.trace,
    })
}

/// A model of every clause (negated conjecture included) with at most
/// `max_domain` elements.
pub fn counter_satisfiable(clauses: &ClauseSet, max_domain: u32) -> Option<FiniteModel> {
    if max_domain == 0 {
        return None;
    }
    match find_model(clauses, max_domain) {
        Ok(m) => m,
        Err(e) => {
            log::debug!("model search skipped: {e}");
            None
        }
    }
}

#[cfg(test)]
mod tests;
