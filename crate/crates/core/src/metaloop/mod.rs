//! The closed learn-select-prove loop over a chronological corpus.
//!
//! Each iteration retrains the premise learner on every proof found so far,
//! ranks the eligible premises of each unsolved item, and walks the
//! (axiom count, inference limit) ladder breadth first: every unsolved item
//! is tried at rung 0 before any item is tried at rung 1. Proofs enter the
//! state only after the independent checker accepts them; countermodels of
//! pruned problems go to the model store and feed semantic features.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{assemble, clausify, ClausalForm, CnfConfig};
use crate::features::{symbol_features, FeatureConfig, FeatureVector};
use crate::fol::{ClauseSet, Corpus};
use crate::guidance::{records_from_run, GuidanceConfig, GuidanceTrainer};
use crate::learner::{BayesModel, LearnerConfig};
use crate::models::{ModelStore, Truth, TruthMatrix, DEFAULT_MAX_DOMAIN};
use crate::prover::{
    check_proof, prove_with, render_proof_file, Guide, Limits, ProofObject, ProverError,
    ProverOptions, Status,
};

pub const DEFAULT_AXIOM_LADDER: [usize; 6] = [4, 8, 16, 32, 64, 128];
pub const DEFAULT_INFERENCE_LADDER: [u64; 3] = [2_000, 8_000, 32_000];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Naive Bayes ranking, symbol overlap while the learner is empty.
    Learned,
    /// Most recent eligible premises first.
    Recency,
    /// Symbol overlap only; nothing is learned.
    Overlap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub axiom_ladder: Vec<usize>,
    /// Limit of rung `r` is entry `min(r, len - 1)`.
    pub inference_ladder: Vec<u64>,
    /// Shared inference budget over all attempts.
    pub total_inferences: Option<u64>,
    /// Wall-clock budget, checked between batches.
    pub total_time: Option<Duration>,
    /// Wall-clock limit per attempt.
    pub attempt_time: Option<Duration>,
    pub max_iterations: usize,
    pub max_depth: usize,
    pub model_domain: u32,
    pub semantic: bool,
    pub structural: bool,
    pub guidance: bool,
    pub selection: Selection,
    /// Also train on the reference premises of solved items.
    pub reference_training: bool,
    /// Earlier items are eligible premises; off leaves only global axioms.
    pub items_as_premises: bool,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
    pub learner: LearnerConfig,
    pub guidance_config: GuidanceConfig,
    pub cnf: CnfConfig,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            axiom_ladder: DEFAULT_AXIOM_LADDER.to_vec(),
            inference_ladder: DEFAULT_INFERENCE_LADDER.to_vec(),
            total_inferences: None,
            total_time: None,
            attempt_time: None,
            max_iterations: 6,
            max_depth: 12,
            model_domain: DEFAULT_MAX_DOMAIN,
            semantic: true,
            structural: true,
            guidance: false,
            selection: Selection::Learned,
            reference_training: true,
            items_as_premises: true,
            workers: 0,
            learner: LearnerConfig::default(),
            guidance_config: GuidanceConfig::default(),
            cnf: CnfConfig::default(),
        }
    }
}

fn strictly_increasing<T: PartialOrd>(xs: &[T]) -> bool {
    xs.windows(2).all(|w| w[0] < w[1])
}

impl LoopConfig {
    pub fn validate(&self) -> Result<(), LoopError> {
        if self.axiom_ladder.is_empty() || self.inference_ladder.is_empty() {
            return Err(LoopError::Config("ladders must be non-empty".into()));
        }
        if !strictly_increasing(&self.axiom_ladder) || !strictly_increasing(&self.inference_ladder)
        {
            return Err(LoopError::Config(
                "ladders must be strictly increasing".into(),
            ));
        }
        if self.axiom_ladder[0] == 0 || self.inference_ladder[0] == 0 {
            return Err(LoopError::Config("ladder entries must be positive".into()));
        }
        if self.max_depth == 0 {
            return Err(LoopError::Config("max depth must be positive".into()));
        }
        Ok(())
    }

    pub fn rungs(&self) -> Vec<(usize, u64)> {
        let last = self.inference_ladder.len() - 1;
        self.axiom_ladder
            .iter()
            .enumerate()
            .map(|(r, &k)| (k, self.inference_ladder[r.min(last)]))
            .collect()
    }

    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig {
            structural: self.structural,
            semantic: self.semantic,
            ..FeatureConfig::default()
        }
    }
}

#[derive(Debug, Error)]
pub enum LoopError {
    #[error("invalid loop configuration: {0}")]
    Config(String),
    #[error("proof of `{item}` rejected by the checker: {detail}")]
    UnsoundProof { item: String, detail: String },
    #[error("proof of `{item}` uses `{premise}`, which is not eligible")]
    Ineligible { item: String, premise: String },
    #[error("prover failed on `{item}`: {error}")]
    Prover { item: String, error: ProverError },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub iteration: usize,
    pub rung: usize,
    pub given: Vec<String>,
    pub used: BTreeSet<String>,
    pub proof: ProofObject,
    /// Clause dump followed by the proof, re-checkable on its own.
    pub proof_file: String,
    pub inferences: u64,
}

/// Latest countermodel of an unproved item, with the clauses it satisfies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Countermodel {
    pub rung: usize,
    pub model: String,
    pub clauses: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItemState {
    pub name: String,
    pub solution: Option<Solution>,
    pub countermodel: Option<Countermodel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub iteration: usize,
    pub item: String,
    pub rung: usize,
    pub k: usize,
    pub given: usize,
    pub limit: u64,
    pub status: Status,
    pub inferences: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub iteration: usize,
    pub attempts: usize,
    pub inferences: u64,
    pub newly_solved: Vec<String>,
    pub models_added: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    AllSolved,
    NothingNew,
    LadderExhausted,
    Budget,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopState {
    pub iteration: usize,
    pub items: Vec<ItemState>,
    pub models: ModelStore,
    pub learner: BayesModel,
    pub attempts: Vec<AttemptRecord>,
    pub iterations: Vec<IterationSummary>,
    pub inferences_used: u64,
    pub stop: Option<StopReason>,
}

impl LoopState {
    pub fn new(corpus: &Corpus) -> Self {
        LoopState {
            iteration: 0,
            items: corpus
                .items
                .iter()
                .map(|i| ItemState {
                    name: i.name().to_string(),
                    solution: None,
                    countermodel: None,
                })
                .collect(),
            models: ModelStore::new(),
            learner: BayesModel::new(),
            attempts: Vec::new(),
            iterations: Vec::new(),
            inferences_used: 0,
            stop: None,
        }
    }

    pub fn solved(&self) -> BTreeSet<String> {
        self.items
            .iter()
            .filter(|i| i.solution.is_some())
            .map(|i| i.name.clone())
            .collect()
    }
}

/// Clausal forms of every corpus formula, computed once.
struct Forms {
    axioms: Vec<ClausalForm>,
    as_premise: Vec<ClausalForm>,
    as_goal: Vec<ClausalForm>,
}

struct Context<'a> {
    corpus: &'a Corpus,
    config: &'a LoopConfig,
    forms: Forms,
    premise_symbols: Vec<FeatureVector>,
    goal_symbols: Vec<FeatureVector>,
}

impl<'a> Context<'a> {
    fn new(corpus: &'a Corpus, config: &'a LoopConfig) -> Self {
        let forms = Forms {
            axioms: corpus
                .axioms
                .iter()
                .map(|a| clausify(a, &config.cnf))
                .collect(),
            as_premise: corpus
                .items
                .iter()
                .map(|i| clausify(&corpus.premise(i.name()).expect("item"), &config.cnf))
                .collect(),
            as_goal: corpus
                .items
                .iter()
                .map(|i| clausify(&i.theorem, &config.cnf))
                .collect(),
        };
        let premise_symbols = corpus
            .axioms
            .iter()
            .map(|a| symbol_features(&a.formula))
            .chain(
                corpus
                    .items
                    .iter()
                    .map(|i| symbol_features(&i.theorem.formula)),
            )
            .collect();
        let goal_symbols = corpus
            .items
            .iter()
            .map(|i| symbol_features(&i.theorem.formula))
            .collect();
        Context {
            corpus,
            config,
            forms,
            premise_symbols,
            goal_symbols,
        }
    }

    fn premise_slot(&self, name: &str) -> usize {
        match self.corpus.order_of(name) {
            Some(-1) => self
                .corpus
                .axioms
                .iter()
                .position(|a| a.name == name)
                .expect("axiom"),
            Some(i) => self.corpus.axioms.len() + i as usize,
            None => unreachable!("eligible names are corpus names"),
        }
    }

    fn problem(&self, item: usize, premises: &[String]) -> ClauseSet {
        let mut forms: Vec<&ClausalForm> = premises
            .iter()
            .map(|p| {
                let slot = self.premise_slot(p);
                if slot < self.forms.axioms.len() {
                    &self.forms.axioms[slot]
                } else {
                    &self.forms.as_premise[slot - self.forms.axioms.len()]
                }
            })
            .collect();
        forms.push(&self.forms.as_goal[item]);
        assemble(forms)
    }

    fn eligible(&self, item: usize) -> Vec<&'a str> {
        if self.config.items_as_premises {
            self.corpus.eligible(item)
        } else {
            self.corpus.axioms.iter().map(|a| a.name.as_str()).collect()
        }
    }

    fn rank(&self, item: usize, learner: &BayesModel, query: &FeatureVector) -> Vec<String> {
        self.rank_with(item, learner, query, &BTreeSet::new())
    }

    fn rank_with(
        &self,
        item: usize,
        learner: &BayesModel,
        query: &FeatureVector,
        exclude: &BTreeSet<String>,
    ) -> Vec<String> {
        let mut eligible = self.eligible(item);
        eligible.retain(|p| !exclude.contains(*p));
        match self.config.selection {
            Selection::Recency => eligible.iter().rev().map(|s| s.to_string()).collect(),
            Selection::Overlap => self.overlap(item, &eligible),
            Selection::Learned if learner.is_empty() => self.overlap(item, &eligible),
            Selection::Learned => learner
                .rank_premises(query, &eligible, &self.config.learner)
                .into_iter()
                .map(|(p, _)| p)
                .collect(),
        }
    }

    fn overlap(&self, item: usize, eligible: &[&str]) -> Vec<String> {
        let goal = &self.goal_symbols[item];
        let mut scored: Vec<(&str, f64)> = eligible
            .iter()
            .map(|p| {
                (
                    *p,
                    goal.jaccard(&self.premise_symbols[self.premise_slot(p)]),
                )
            })
            .collect();
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        scored.into_iter().map(|(p, _)| p.to_string()).collect()
    }
}

fn item_features(ctx: &Context<'_>, matrix: &TruthMatrix) -> Vec<FeatureVector> {
    let cfg = ctx.config.feature_config();
    (0..ctx.corpus.items.len())
        .map(|i| {
            let row: Option<&[Truth]> = cfg.semantic.then(|| matrix.rows[i].as_slice());
            cfg.extract(&ctx.corpus.items[i].theorem.formula, row)
        })
        .collect()
}

fn train(ctx: &Context<'_>, state: &LoopState, features: &[FeatureVector]) -> BayesModel {
    let mut model = BayesModel::new();
    for (i, it) in state.items.iter().enumerate() {
        let Some(sol) = &it.solution else { continue };
        model.train_incremental(&features[i], &sol.used);
        if ctx.config.reference_training {
            if let Some(refs) = &ctx.corpus.items[i].references {
                let refs: BTreeSet<String> = refs.iter().cloned().collect();
                if refs != sol.used {
                    model.train_incremental(&features[i], &refs);
                }
            }
        }
    }
    model
}

struct Planned {
    item: usize,
    rung: usize,
    k: usize,
    given: Vec<String>,
    limit: u64,
}

struct Outcome {
    status: Status,
    inferences: u64,
    proof: Option<ProofObject>,
    model: Option<crate::models::FiniteModel>,
    clauses: ClauseSet,
    records: Vec<crate::guidance::TrainingRecord>,
}

fn attempt(
    ctx: &Context<'_>,
    plan: &Planned,
    advisor: Option<&crate::guidance::Advisor>,
) -> Result<Outcome, LoopError> {
    let clauses = ctx.problem(plan.item, &plan.given);
    let limits = Limits {
        time: ctx.config.attempt_time,
        inferences: plan.limit,
        max_depth: ctx.config.max_depth,
        max_axioms: plan.given.len().max(1),
        model_domain: ctx.config.model_domain,
    };
    let name = ctx.corpus.items[plan.item].name();
    let guide = advisor.map(|a| a.for_problem(name, &clauses));
    let r = prove_with(
        &clauses,
        &limits,
        &ProverOptions::default(),
        guide.as_ref().map(|g| g as &dyn Guide),
    )
    .map_err(|error| LoopError::Prover {
        item: name.to_string(),
        error,
    })?;
    let records = if advisor.is_some() && r.status == Status::Proved {
        records_from_run(name, &clauses, &r)
    } else {
        Vec::new()
    };
    Ok(Outcome {
        status: r.status,
        inferences: r.stats.inferences,
        proof: r.proof,
        model: r.model,
        clauses,
        records,
    })
}

/// Runs the loop to a stop condition.
pub fn run_loop(corpus: &Corpus, config: &LoopConfig) -> Result<LoopState, LoopError> {
    config.validate()?;
    let ctx = Context::new(corpus, config);
    let pool = if config.workers > 0 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.workers)
                .build()
                .map_err(|e| LoopError::Config(e.to_string()))?,
        )
    } else {
        None
    };
    let started = Instant::now();
    let formulas: Vec<&crate::fol::Formula> =
        corpus.items.iter().map(|i| &i.theorem.formula).collect();
    let mut matrix = TruthMatrix::new(0);
    let mut state = LoopState::new(corpus);
    let mut tried: HashSet<(usize, Vec<String>, u64)> = HashSet::new();
    let mut guidance = config
        .guidance
        .then(|| GuidanceTrainer::new(config.guidance_config.clone()));
    let rungs = config.rungs();

    let stop = loop {
        if state.items.iter().all(|i| i.solution.is_some()) {
            break StopReason::AllSolved;
        }
        if state.iteration >= config.max_iterations {
            break StopReason::MaxIterations;
        }
        state.iteration += 1;
        let it = state.iteration;
        matrix.update(&state.models, &formulas);
        let features = item_features(&ctx, &matrix);
        if config.selection == Selection::Learned {
            state.learner = train(&ctx, &state, &features);
        }
        let advisor = guidance.as_ref().map(|g| g.advisor());
        let rankings: Vec<Option<Vec<String>>> = (0..corpus.items.len())
            .map(|i| {
                state.items[i]
                    .solution
                    .is_none()
                    .then(|| ctx.rank(i, &state.learner, &features[i]))
            })
            .collect();

        let mut summary = IterationSummary {
            iteration: it,
            ..Default::default()
        };
        let mut budget_hit = false;
        for (r, &(k, limit)) in rungs.iter().enumerate() {
            if config.total_time.is_some_and(|t| started.elapsed() >= t) {
                budget_hit = true;
                break;
            }
            let mut reserved = 0u64;
            let mut batch = Vec::new();
            for (i, ranking) in rankings.iter().enumerate() {
                let Some(ranking) = ranking else { continue };
                if state.items[i].solution.is_some() {
                    continue;
                }
                let given: Vec<String> = ranking.iter().take(k).cloned().collect();
                let mut key_names = given.clone();
                key_names.sort();
                if tried.contains(&(i, key_names.clone(), limit)) {
                    continue;
                }
                let limit = match config.total_inferences {
                    Some(total) => {
                        let left = total - state.inferences_used - reserved;
                        if left == 0 {
                            budget_hit = true;
                            break;
                        }
                        limit.min(left)
                    }
                    None => limit,
                };
                reserved += limit;
                tried.insert((i, key_names, limit));
                batch.push(Planned {
                    item: i,
                    rung: r,
                    k,
                    given,
                    limit,
                });
            }
            let run_batch = || {
                batch
                    .par_iter()
                    .map(|p| attempt(&ctx, p, advisor.as_ref()))
                    .collect::<Vec<_>>()
            };
            let results = match &pool {
                Some(pool) => pool.install(run_batch),
                None => run_batch(),
            };
            for (plan, res) in batch.iter().zip(results) {
                let out = res?;
                let name = corpus.items[plan.item].name().to_string();
                state.inferences_used += out.inferences;
                summary.attempts += 1;
                summary.inferences += out.inferences;
                state.attempts.push(AttemptRecord {
                    iteration: it,
                    item: name.clone(),
                    rung: plan.rung,
                    k: plan.k,
                    given: plan.given.len(),
                    limit: plan.limit,
                    status: out.status,
                    inferences: out.inferences,
                });
                if let Some(proof) = out.proof {
                    match check_proof(&proof, &out.clauses) {
                        Ok(true) => {}
                        Ok(false) => {
                            return Err(LoopError::UnsoundProof {
                                item: name,
                                detail: "replay failed".into(),
                            })
                        }
                        Err(e) => {
                            return Err(LoopError::UnsoundProof {
                                item: name,
                                detail: e.to_string(),
                            })
                        }
                    }
                    let eligible: BTreeSet<&str> = ctx.eligible(plan.item).into_iter().collect();
                    if let Some(p) = proof
                        .used_premises
                        .iter()
                        .find(|p| !eligible.contains(p.as_str()))
                    {
                        return Err(LoopError::Ineligible {
                            item: name,
                            premise: p.clone(),
                        });
                    }
                    if let Some(g) = guidance.as_mut() {
                        out.records.into_iter().for_each(|rec| {
                            g.record(rec.query, rec.chosen, rec.label, rec.outcome)
                        });
                    }
                    let proof_file = render_proof_file(&out.clauses, &proof);
                    summary.newly_solved.push(name);
                    state.items[plan.item].solution = Some(Solution {
                        iteration: it,
                        rung: plan.rung,
                        given: plan.given.clone(),
                        used: proof.used_premises.clone(),
                        proof,
                        proof_file,
                        inferences: out.inferences,
                    });
                } else if let Some(m) = out.model {
                    state.items[plan.item].countermodel = Some(Countermodel {
                        rung: plan.rung,
                        model: m.dump(),
                        clauses: out.clauses.dump(),
                    });
                    if state
                        .models
                        .push_unique(m.with_provenance(name, it))
                        .is_some()
                    {
                        summary.models_added += 1;
                    }
                }
            }
            if budget_hit {
                break;
            }
        }
        if let Some(g) = guidance.as_mut() {
            g.flush();
        }
        let attempts = summary.attempts;
        let nothing_new = summary.newly_solved.is_empty();
        state.iterations.push(summary);
        if budget_hit
            || config
                .total_inferences
                .is_some_and(|t| state.inferences_used >= t)
        {
            break StopReason::Budget;
        }
        if attempts == 0 {
            break StopReason::LadderExhausted;
        }
        if nothing_new {
            break StopReason::NothingNew;
        }
    };
    state.stop = Some(stop);
    Ok(state)
}

/// Outcome of one item in [`evaluate_fixed`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedOutcome {
    pub item: usize,
    pub solution: Option<Solution>,
    pub countermodel: Option<Countermodel>,
    pub attempts: Vec<AttemptRecord>,
    /// Training examples the learner held when the item was ranked.
    pub learner_examples: u64,
}

/// Ranks each listed item once with a frozen learner (symbol overlap when
/// it is empty), never offering premises named in `exclude`, and climbs the
/// ladder until a checked proof is found. Nothing is learned in between.
pub fn evaluate_fixed(
    corpus: &Corpus,
    config: &LoopConfig,
    items: &[usize],
    learner: &BayesModel,
    exclude: &BTreeSet<String>,
) -> Result<Vec<FixedOutcome>, LoopError> {
    config.validate()?;
    let ctx = Context::new(corpus, config);
    let cfg = config.feature_config();
    let rungs = config.rungs();
    let run = |&i: &usize| -> Result<FixedOutcome, LoopError> {
        let name = corpus.items[i].name().to_string();
        let query = cfg.extract(&corpus.items[i].theorem.formula, None);
        let ranking = ctx.rank_with(i, learner, &query, exclude);
        let mut out = FixedOutcome {
            item: i,
            solution: None,
            countermodel: None,
            attempts: Vec::new(),
            learner_examples: learner.total_examples,
        };
        let mut last: Option<Vec<String>> = None;
        for (r, &(k, limit)) in rungs.iter().enumerate() {
            let given: Vec<String> = ranking.iter().take(k).cloned().collect();
            if last.as_ref() == Some(&given) && r > 0 && rungs[r - 1].1 == limit {
                continue;
            }
            last = Some(given.clone());
            let plan = Planned {
                item: i,
                rung: r,
                k,
                given,
                limit,
            };
            let res = attempt(&ctx, &plan, None)?;
            out.attempts.push(AttemptRecord {
                iteration: 1,
                item: name.clone(),
                rung: r,
                k,
                given: plan.given.len(),
                limit,
                status: res.status,
                inferences: res.inferences,
            });
            if let Some(proof) = res.proof {
                if check_proof(&proof, &res.clauses) != Ok(true) {
                    return Err(LoopError::UnsoundProof {
                        item: name,
                        detail: "replay failed".into(),
                    });
                }
                let proof_file = render_proof_file(&res.clauses, &proof);
                out.solution = Some(Solution {
                    iteration: 1,
                    rung: r,
                    given: plan.given,
                    used: proof.used_premises.clone(),
                    proof,
                    proof_file,
                    inferences: res.inferences,
                });
                break;
            }
            if let Some(m) = res.model {
                out.countermodel = Some(Countermodel {
                    rung: r,
                    model: m.dump(),
                    clauses: res.clauses.dump(),
                });
            }
        }
        Ok(out)
    };
    items.par_iter().map(run).collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub proved: usize,
    pub counter_satisfiable: usize,
    pub timeout_or_inference_out: usize,
    pub total: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shortened {
    pub item: String,
    pub used: Vec<String>,
    pub reference: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixpointReport {
    pub iterations: Vec<TableRow>,
    pub cumulative: TableRow,
    pub shortened: Vec<Shortened>,
}

fn classify(statuses: impl Iterator<Item = Status>) -> Option<Status> {
    let mut best = None;
    for s in statuses {
        best = match (best, s) {
            (_, Status::Proved) | (Some(Status::Proved), _) => Some(Status::Proved),
            (_, Status::CounterSatisfiable) | (Some(Status::CounterSatisfiable), _) => {
                Some(Status::CounterSatisfiable)
            }
            _ => Some(Status::InferenceLimit),
        };
    }
    best
}

fn row(label: String, outcomes: impl Iterator<Item = Option<Status>>) -> TableRow {
    let mut r = TableRow {
        label,
        ..TableRow::default()
    };
    for o in outcomes {
        r.total += 1;
        match o {
            Some(Status::Proved) => r.proved += 1,
            Some(Status::CounterSatisfiable) => r.counter_satisfiable += 1,
            _ => r.timeout_or_inference_out += 1,
        }
    }
    r
}

/// Per-iteration and cumulative outcome tables plus the items whose found
/// premise set is strictly smaller than their reference set.
pub fn fixpoint_report(state: &LoopState, corpus: &Corpus) -> FixpointReport {
    let iterations = state
        .iterations
        .iter()
        .map(|s| {
            let mut names: Vec<&str> = state
                .attempts
                .iter()
                .filter(|a| a.iteration == s.iteration)
                .map(|a| a.item.as_str())
                .collect();
            names.dedup();
            let uniq: BTreeSet<&str> = names.iter().copied().collect();
            let outcomes = uniq.iter().map(|n| {
                classify(
                    state
                        .attempts
                        .iter()
                        .filter(|a| a.iteration == s.iteration && a.item == *n)
                        .map(|a| a.status),
                )
            });
            row(format!("iteration {}", s.iteration), outcomes)
        })
        .collect();
    let cumulative = row(
        "cumulative".into(),
        state.items.iter().map(|it| {
            if it.solution.is_some() {
                Some(Status::Proved)
            } else {
                classify(
                    state
                        .attempts
                        .iter()
                        .filter(|a| a.item == it.name)
                        .map(|a| a.status),
                )
            }
        }),
    );
    let shortened = state
        .items
        .iter()
        .zip(&corpus.items)
        .filter_map(|(st, ci)| {
            let sol = st.solution.as_ref()?;
            let refs: BTreeSet<&String> = ci.references.as_ref()?.iter().collect();
            (sol.used.len() < refs.len()).then(|| Shortened {
                item: st.name.clone(),
                used: sol.used.iter().cloned().collect(),
                reference: refs.into_iter().cloned().collect(),
            })
        })
        .collect();
    FixpointReport {
        iterations,
        cumulative,
        shortened,
    }
}

impl FixpointReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<16} {:>7} {:>20} {:>25} {:>6}",
            "", "proved", "counter-satisfiable", "timeout-or-inference-out", "total"
        );
        for r in self
            .iterations
            .iter()
            .chain(std::iter::once(&self.cumulative))
        {
            let _ = writeln!(
                s,
                "{:<16} {:>7} {:>20} {:>25} {:>6}",
                r.label, r.proved, r.counter_satisfiable, r.timeout_or_inference_out, r.total
            );
        }
        let _ = writeln!(s, "\nshorter proofs: {}", self.shortened.len());
        for x in &self.shortened {
            let _ = writeln!(
                s,
                "  {}: used [{}] reference [{}]",
                x.item,
                x.used.join(", "),
                x.reference.join(", ")
            );
        }
        s
    }
}

/// Writes config, attempt records, proofs, models and the final learner
/// checkpoint under `dir`.
pub fn write_run_dir(dir: &Path, config: &LoopConfig, state: &LoopState) -> std::io::Result<()> {
    std::fs::create_dir_all(dir.join("proofs"))?;
    std::fs::create_dir_all(dir.join("models"))?;
    std::fs::write(
        dir.join("config.json"),
        serde_json::to_string_pretty(config).expect("config serializes") + "\n",
    )?;
    let mut lines = String::new();
    for a in &state.attempts {
        lines.push_str(&serde_json::to_string(a).expect("attempt record"));
        lines.push('\n');
    }
    std::fs::write(dir.join("attempts.jsonl"), lines)?;
    for it in &state.items {
        if let Some(sol) = &it.solution {
            std::fs::write(
                dir.join("proofs").join(format!("{}.proof", it.name)),
                &sol.proof_file,
            )?;
        }
    }
    for (i, m) in state.models.iter().enumerate() {
        std::fs::write(dir.join("models").join(format!("m{i}.model")), m.dump())?;
    }
    std::fs::write(dir.join("learner.json"), state.learner.checkpoint())?;
    Ok(())
}

#[cfg(test)]
mod tests;
