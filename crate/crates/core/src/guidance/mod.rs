//! Advisor between prover choice points and a naive Bayes learner.
//!
//! The prover asks [`ProblemGuide`] (through [`Guide`]) at throttled choice
//! points; the advisor ranks candidate clauses by the learner score of their
//! origin labels given the branch symbols. Training data is collected after
//! a prove call from its [`ChoiceRecord`]s and only reaches the learner at
//! [`GuidanceTrainer::flush`], which produces a fresh immutable snapshot.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::hash::{Hash, Hasher};
use std::io::{self, BufRead, Write};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::features::{combine, symbol_features, FeatureVector};
use crate::fol::{ClauseId, ClauseSet, Literal};
use crate::learner::{BayesModel, LearnerConfig};
use crate::prover::{
    prove_with, ChoicePoint, ChoiceRecord, Guide, GuideError, Limits, ProverOptions, RunResult,
    Status,
};

pub const DEFAULT_CONSULT_DEPTH: usize = 3;
pub const DEFAULT_MIN_CANDIDATES: usize = 3;
pub const DEFAULT_BUFFER_CAPACITY: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuidanceConfig {
    pub consult_depth: usize,
    pub min_candidates: usize,
    pub buffer_capacity: usize,
    /// Also learn from clauses tried on branches that did not close.
    pub train_failures: bool,
    pub cache: bool,
    pub learner: LearnerConfig,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        GuidanceConfig {
            consult_depth: DEFAULT_CONSULT_DEPTH,
            min_candidates: DEFAULT_MIN_CANDIDATES,
            buffer_capacity: DEFAULT_BUFFER_CAPACITY,
            train_failures: false,
            cache: true,
            learner: LearnerConfig::default(),
        }
    }
}

/// Consult the advisor iff `depth <= consult_depth` and there are at least
/// `min_candidates` candidates.
pub fn throttle_policy(config: &GuidanceConfig, depth: usize, candidates: usize) -> bool {
    depth <= config.consult_depth && candidates >= config.min_candidates
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateQuery {
    pub branch_symbols: FeatureVector,
    pub goal: Literal,
    pub depth: usize,
    pub problem: String,
}

/// Symbol counts over the path literals and the goal.
pub fn branch_features(branch: &[Literal], goal: &Literal) -> FeatureVector {
    let parts: Vec<FeatureVector> = branch
        .iter()
        .chain(std::iter::once(goal))
        .map(|l| symbol_features(&l.to_formula()))
        .collect();
    combine(&parts)
}

impl StateQuery {
    pub fn from_point(problem: &str, point: &ChoicePoint<'_>) -> Self {
        StateQuery {
            branch_symbols: branch_features(point.branch, point.goal),
            goal: point.goal.clone(),
            depth: point.depth,
            problem: problem.to_string(),
        }
    }

    pub fn from_record(problem: &str, rec: &ChoiceRecord) -> Self {
        StateQuery {
            branch_symbols: branch_features(&rec.branch, &rec.goal),
            goal: rec.goal.clone(),
            depth: rec.depth,
            problem: problem.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Advice {
    pub order: Vec<(ClauseId, f64)>,
    pub advice_id: u64,
}

impl Advice {
    pub fn clause_ids(&self) -> Vec<ClauseId> {
        self.order.iter().map(|(c, _)| *c).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    OnClosedBranch,
    OnFailedBranch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub query: StateQuery,
    pub chosen: ClauseId,
    /// Origin of the chosen clause, the label the learner sees.
    pub label: String,
    pub outcome: Outcome,
}

/// An immutable learner state the advisor ranks against.
#[derive(Debug, Default)]
pub struct Snapshot {
    pub id: u64,
    pub positive: BayesModel,
    pub negative: BayesModel,
}

impl Snapshot {
    pub fn empty() -> Arc<Snapshot> {
        Arc::new(Snapshot::default())
    }

    pub fn is_empty(&self) -> bool {
        self.positive.is_empty() && self.negative.is_empty()
    }
}

type CacheKey = (u64, u64, u64);

fn stable_hash<T: Hash + ?Sized>(x: &T) -> u64 {
    let mut h = DefaultHasher::new();
    x.hash(&mut h);
    h.finish()
}

fn features_hash(v: &FeatureVector) -> u64 {
    let mut h = DefaultHasher::new();
    for (f, w) in v.iter() {
        f.hash(&mut h);
        w.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Ranks candidate clauses against one snapshot; safe to share between
/// concurrent prover runs.
pub struct Advisor {
    pub config: GuidanceConfig,
    snapshot: Arc<Snapshot>,
    // candidate positions in advised order, with scores
    cache: Mutex<HashMap<CacheKey, Vec<(usize, f64)>>>,
    next_advice: AtomicU64,
    consulted: AtomicU64,
    cache_hits: AtomicU64,
}

impl Advisor {
    pub fn new(config: GuidanceConfig, snapshot: Arc<Snapshot>) -> Self {
        Advisor {
            config,
            snapshot,
            cache: Mutex::new(HashMap::new()),
            next_advice: AtomicU64::new(0),
            consulted: AtomicU64::new(0),
            cache_hits: AtomicU64::new(0),
        }
    }

    pub fn snapshot(&self) -> &Arc<Snapshot> {
        &self.snapshot
    }

    pub fn consulted(&self) -> u64 {
        self.consulted.load(Ordering::Relaxed)
    }

    pub fn cache_hits(&self) -> u64 {
        self.cache_hits.load(Ordering::Relaxed)
    }

    fn score(&self, query: &FeatureVector, label: &str) -> f64 {
        let cfg = &self.config.learner;
        let mut s = self.snapshot.positive.score(query, label, cfg);
        if !self.snapshot.negative.is_empty() {
            s -= self.snapshot.negative.score(query, label, cfg);
        }
        s
    }

    /// Candidates paired with their origin labels, best first. Ties and an
    /// empty snapshot keep input order.
    pub fn advise(&self, query: &StateQuery, candidates: &[(ClauseId, &str)]) -> Advice {
        self.consulted.fetch_add(1, Ordering::Relaxed);
        let advice_id = self.next_advice.fetch_add(1, Ordering::Relaxed);
        if self.snapshot.is_empty() || candidates.len() < 2 {
            return Advice {
                order: candidates.iter().map(|(c, _)| (*c, 0.0)).collect(),
                advice_id,
            };
        }
        let labels: Vec<&str> = candidates.iter().map(|(_, l)| *l).collect();
        let key = (
            self.snapshot.id,
            features_hash(&query.branch_symbols),
            stable_hash(&labels),
        );
        if self.config.cache {
            if let Some(hit) = self.cache.lock().expect("advice cache").get(&key) {
                self.cache_hits.fetch_add(1, Ordering::Relaxed);
                return Advice {
                    order: hit.iter().map(|&(i, s)| (candidates[i].0, s)).collect(),
                    advice_id,
                };
            }
        }
        let mut scored: Vec<(usize, f64)> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (i, self.score(&query.branch_symbols, l)))
            .collect();
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        if self.config.cache {
            self.cache
                .lock()
                .expect("advice cache")
                .insert(key, scored.clone());
        }
        Advice {
            order: scored.iter().map(|&(i, s)| (candidates[i].0, s)).collect(),
            advice_id,
        }
    }

    pub fn for_problem<'a>(&'a self, problem: &str, clauses: &'a ClauseSet) -> ProblemGuide<'a> {
        ProblemGuide {
            advisor: self,
            clauses,
            problem: problem.to_string(),
        }
    }
}

/// An [`Advisor`] bound to one problem's clause set.
pub struct ProblemGuide<'a> {
    advisor: &'a Advisor,
    clauses: &'a ClauseSet,
    problem: String,
}

impl Guide for ProblemGuide<'_> {
    fn wants(&self, depth: usize, candidates: usize) -> bool {
        throttle_policy(&self.advisor.config, depth, candidates)
    }

    fn advise(&self, point: &ChoicePoint<'_>) -> Result<Vec<ClauseId>, GuideError> {
        let mut cands = Vec::with_capacity(point.candidates.len());
        for &id in point.candidates {
            let c = self
                .clauses
                .get(id)
                .ok_or_else(|| GuideError(format!("unknown clause {id}")))?;
            cands.push((id, c.origin.as_str()));
        }
        let query = StateQuery::from_point(&self.problem, point);
        Ok(self.advisor.advise(&query, &cands).clause_ids())
    }
}

/// Training records of one finished run. Each consulted choice point
/// yields its closing clause as a closed-branch record and every other
/// tried clause as a failed-branch record.
pub fn records_from_run(
    problem: &str,
    clauses: &ClauseSet,
    run: &RunResult,
) -> Vec<TrainingRecord> {
    let mut out = Vec::new();
    for rec in &run.choices {
        let query = StateQuery::from_record(problem, rec);
        let label = |id: ClauseId| {
            clauses
                .get(id)
                .map(|c| c.origin.clone())
                .unwrap_or_default()
        };
        if let Some(c) = rec.closed_with {
            out.push(TrainingRecord {
                query: query.clone(),
                chosen: c,
                label: label(c),
                outcome: Outcome::OnClosedBranch,
            });
        }
        for &t in &rec.tried {
            if Some(t) != rec.closed_with {
                out.push(TrainingRecord {
                    query: query.clone(),
                    chosen: t,
                    label: label(t),
                    outcome: Outcome::OnFailedBranch,
                });
            }
        }
    }
    out
}

/// Bounded record buffer; when full the oldest record is dropped.
#[derive(Clone, Debug)]
pub struct RecordBuffer {
    capacity: usize,
    records: VecDeque<TrainingRecord>,
    dropped: u64,
}

impl RecordBuffer {
    pub fn new(capacity: usize) -> Self {
        RecordBuffer {
            capacity,
            records: VecDeque::new(),
            dropped: 0,
        }
    }

    pub fn record(&mut self, query: StateQuery, chosen: ClauseId, label: String, outcome: Outcome) {
        self.push(TrainingRecord {
            query,
            chosen,
            label,
            outcome,
        });
    }

    pub fn push(&mut self, rec: TrainingRecord) {
        if self.capacity == 0 {
            self.dropped += 1;
            return;
        }
        if self.records.len() == self.capacity {
            self.records.pop_front();
            self.dropped += 1;
        }
        self.records.push_back(rec);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn iter(&self) -> impl Iterator<Item = &TrainingRecord> {
        self.records.iter()
    }
}

/// Single writer owning the guidance learner.
#[derive(Debug)]
pub struct GuidanceTrainer {
    pub config: GuidanceConfig,
    positive: BayesModel,
    negative: BayesModel,
    buffer: RecordBuffer,
    version: u64,
    current: Arc<Snapshot>,
}

impl GuidanceTrainer {
    pub fn new(config: GuidanceConfig) -> Self {
        let buffer = RecordBuffer::new(config.buffer_capacity);
        GuidanceTrainer {
            config,
            positive: BayesModel::new(),
            negative: BayesModel::new(),
            buffer,
            version: 0,
            current: Snapshot::empty(),
        }
    }

    pub fn record(&mut self, query: StateQuery, chosen: ClauseId, label: String, outcome: Outcome) {
        self.buffer.record(query, chosen, label, outcome);
    }

    /// Moves a per-run buffer into the trainer's buffer.
    pub fn absorb(&mut self, other: RecordBuffer) {
        self.buffer.dropped += other.dropped;
        for r in other.records {
            self.buffer.push(r);
        }
    }

    pub fn pending(&self) -> usize {
        self.buffer.len()
    }

    pub fn dropped(&self) -> u64 {
        self.buffer.dropped()
    }

    /// Trains on the buffered records and empties the buffer; returns the
    /// number of training examples added. A new snapshot is published when
    /// anything changed.
    pub fn flush(&mut self) -> usize {
        let mut trained = 0;
        for r in self.buffer.records.drain(..) {
            let label: BTreeSet<String> = std::iter::once(r.label).collect();
            match r.outcome {
                Outcome::OnClosedBranch => {
                    self.positive
                        .train_incremental(&r.query.branch_symbols, &label);
                    trained += 1;
                }
                Outcome::OnFailedBranch if self.config.train_failures => {
                    self.negative
                        .train_incremental(&r.query.branch_symbols, &label);
                    trained += 1;
                }
                Outcome::OnFailedBranch => {}
            }
        }
        if trained > 0 {
            self.version += 1;
            self.current = Arc::new(Snapshot {
                id: self.version,
                positive: self.positive.clone(),
                negative: self.negative.clone(),
            });
        }
        trained
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.clone()
    }

    pub fn advisor(&self) -> Advisor {
        Advisor::new(self.config.clone(), self.snapshot())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub problem: String,
    pub unguided: Option<u64>,
    pub guided: Option<u64>,
    /// `unguided / guided` when both runs found a proof.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedupReport {
    pub rows: Vec<SpeedupRow>,
    pub geometric_mean: Option<f64>,
    pub trained_on: usize,
    pub training_examples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedupConfig {
    pub limits: Limits,
    pub guidance: GuidanceConfig,
    /// Problems used for training; the rest are measured.
    pub train_count: usize,
    pub training: bool,
}

impl Default for SpeedupConfig {
    fn default() -> Self {
        SpeedupConfig {
            limits: Limits {
                model_domain: 0,
                ..Limits::default()
            },
            guidance: GuidanceConfig::default(),
            train_count: 25,
            training: true,
        }
    }
}

fn run(problem: &str, clauses: &ClauseSet, advisor: &Advisor, limits: &Limits) -> RunResult {
    let guide = advisor.for_problem(problem, clauses);
    match prove_with(clauses, limits, &ProverOptions::default(), Some(&guide)) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("{problem}: {e}");
            RunResult {
                status: Status::InferenceLimit,
                proof: None,
                model: None,
                stats: Default::default(),
                choices: Vec::new(),
                trace: Vec::new(),
            }
        }
    }
}

fn proved_inferences(r: &RunResult) -> Option<u64> {
    (r.status == Status::Proved).then_some(r.stats.inferences)
}

/// Runs every problem unguided (an empty-snapshot advisor, which keeps input
/// order), trains on the records of the first `train_count` problems and
/// reruns the remaining problems guided.
pub fn measure_speedup(problems: &[(String, ClauseSet)], config: &SpeedupConfig) -> SpeedupReport {
    let mut trainer = GuidanceTrainer::new(config.guidance.clone());
    let recorder = Advisor::new(config.guidance.clone(), Snapshot::empty());
    let split = config.train_count.min(problems.len());
    let unguided: Vec<RunResult> = problems
        .iter()
        .map(|(n, c)| run(n, c, &recorder, &config.limits))
        .collect();
    let mut training_examples = 0;
    if config.training {
        for ((name, clauses), r) in problems[..split].iter().zip(&unguided) {
            if r.status == Status::Proved {
                for rec in records_from_run(name, clauses, r) {
                    trainer.buffer.push(rec);
                }
            }
        }
        training_examples = trainer.flush();
    }
    let advisor = trainer.advisor();
    let mut rows = Vec::new();
    for ((name, clauses), base) in problems[split..].iter().zip(&unguided[split..]) {
        let guided = run(name, clauses, &advisor, &config.limits);
        let (u, g) = (proved_inferences(base), proved_inferences(&guided));
        let ratio = match (u, g) {
            (Some(u), Some(g)) => Some(u.max(1) as f64 / g.max(1) as f64),
            _ => None,
        };
        rows.push(SpeedupRow {
            problem: name.clone(),
            unguided: u,
            guided: g,
            ratio,
        });
    }
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    let geometric_mean = (!ratios.is_empty())
        .then(|| (ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp());
    SpeedupReport {
        rows,
        geometric_mean,
        trained_on: split,
        training_examples,
    }
}

/// Messages of the out-of-process advisor protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WireMessage {
    Query {
        query: StateQuery,
        candidates: Vec<(ClauseId, String)>,
    },
    Advice(Advice),
    Record(TrainingRecord),
}

/// Writes `<byte length>\n<json>\n`.
pub fn write_message(w: &mut impl Write, msg: &WireMessage) -> io::Result<()> {
    let body = serde_json::to_string(msg).map_err(io::Error::other)?;
    writeln!(w, "{}", body.len())?;
    w.write_all(body.as_bytes())?;
    w.write_all(b"\n")
}

/// Reads one message; `None` at a clean end of stream.
pub fn read_message(r: &mut impl BufRead) -> io::Result<Option<WireMessage>> {
    let mut header = String::new();
    if r.read_line(&mut header)? == 0 {
        return Ok(None);
    }
    let len: usize = header.trim_end().parse().map_err(|_| {
        io::Error::new(
            io::ErrorKind::InvalidData,
            format!("bad length header `{}`", header.trim_end()),
        )
    })?;
    let mut body = vec![0; len + 1];
    r.read_exact(&mut body)?;
    if body.pop() != Some(b'\n') {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "record not newline terminated",
        ));
    }
    serde_json::from_slice(&body)
        .map(Some)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}
