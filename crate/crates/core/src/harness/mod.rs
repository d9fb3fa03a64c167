//! Batch experiments over a corpus: re-proving from reference premises,
//! the full library loop, a shared-budget challenge and a train/test split.
//!
//! Every experiment produces line-oriented [`ResultRecord`]s plus artifact
//! files (proofs and countermodels) that [`verify`] can re-check from disk.

pub mod generate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{generate_corpus, library_problems, verification_limits, Family};

use crate::cnf::{clause_set, CnfConfig};
use crate::features::FeatureConfig;
use crate::fol::{ClauseSet, Corpus, CorpusError};
use crate::learner::BayesModel;
use crate::metaloop::{
    evaluate_fixed, fixpoint_report, run_loop, FixpointReport, LoopConfig, LoopError, LoopState,
    Selection, TableRow,
};
use crate::models::{FiniteModel, Truth};
use crate::prover::{
    check_proof, parse_proof_file, prove, render_proof_file, Limits, ProverError, Status,
};

pub const RESULTS_FILE: &str = "results.jsonl";
pub const REPORT_FILE: &str = "report.txt";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Reprove,
    Library,
    Challenge,
    Traintest,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Reprove => "reprove",
            Mode::Library => "library",
            Mode::Challenge => "challenge",
            Mode::Traintest => "traintest",
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("item `{0}` has no reference premises")]
    MissingReferences(String),
    #[error("corpus has no train/test split")]
    MissingSplit,
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Loop(#[from] LoopError),
    #[error("prover failed on `{item}`: {error}")]
    Prover { item: String, error: ProverError },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("cannot access `{path}`: {message}")]
    Io { path: String, message: String },
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config: String,
    pub mode: Mode,
    pub item: String,
    pub status: Status,
    pub inferences: u64,
    pub premises_given: usize,
    pub premises_used: Vec<String>,
    /// Proof or model file relative to the output directory.
    pub artifact: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub mode: Mode,
    pub records: Vec<ResultRecord>,
    /// Relative path to file contents.
    pub artifacts: BTreeMap<String, String>,
    /// Mode-specific sections of the summary.
    pub details: serde_json::Value,
}

impl Experiment {
    fn new(mode: Mode) -> Self {
        Experiment {
            mode,
            records: Vec::new(),
            artifacts: BTreeMap::new(),
            details: serde_json::Value::Null,
        }
    }

    fn proof_artifact(&mut self, config: &str, item: &str, text: String) -> String {
        let rel = format!("proofs/{config}/{item}.proof");
        self.artifacts.insert(rel.clone(), text);
        rel
    }

    fn model_artifact(
        &mut self,
        config: &str,
        item: &str,
        model: String,
        clauses: String,
    ) -> String {
        let rel = format!("models/{config}/{item}.model");
        self.artifacts.insert(rel.clone(), model);
        self.artifacts
            .insert(format!("models/{config}/{item}.cnf"), clauses);
        rel
    }

    pub fn report(&self) -> Report {
        report(&self.records)
    }
}

/// Re-proving: each item from exactly its reference premises.
pub fn run_reprove(
    corpus: &Corpus,
    limits: &Limits,
    cnf: &CnfConfig,
    workers: usize,
) -> Result<Experiment, HarnessError> {
    for it in &corpus.items {
        if it.references.is_none() {
            return Err(HarnessError::MissingReferences(it.name().to_string()));
        }
    }
    let job = || -> Vec<_> {
        corpus
            .items
            .par_iter()
            .map(|it| {
                let refs = it.references.as_ref().expect("checked");
                let mut fs: Vec<_> = refs
                    .iter()
                    .map(|r| corpus.premise(r).expect("validated reference"))
                    .collect();
                fs.push(it.theorem.clone());
                let clauses = clause_set(&fs, cnf);
                let r = prove(&clauses, limits, None).map_err(|error| HarnessError::Prover {
                    item: it.name().to_string(),
                    error,
                });
                r.map(|r| (clauses, r, refs.len()))
            })
            .collect()
    };
    let runs = if workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| HarnessError::Invariant(format!("thread pool: {e}")))?;
        pool.install(job)
    } else {
        job()
    };
    let mut exp = Experiment::new(Mode::Reprove);
    for (it, run) in corpus.items.iter().zip(runs) {
        let (clauses, r, given) = run?;
        let name = it.name();
        let mut used = Vec::new();
        let artifact = if let Some(p) = &r.proof {
            if check_proof(p, &clauses) != Ok(true) {
                return Err(HarnessError::Invariant(format!(
                    "proof of `{name}` fails the checker"
                )));
            }
            used = p.used_premises.iter().cloned().collect();
            Some(exp.proof_artifact("reprove", name, render_proof_file(&clauses, p)))
        } else {
            r.model
                .as_ref()
                .map(|m| exp.model_artifact("reprove", name, m.dump(), clauses.dump()))
        };
        exp.records.push(ResultRecord {
            config: "reprove".into(),
            mode: Mode::Reprove,
            item: name.to_string(),
            status: r.status,
            inferences: r.stats.inferences,
            premises_given: given,
            premises_used: used,
            artifact,
        });
    }
    Ok(exp)
}

fn final_status(state: &LoopState, item: &str) -> Status {
    let mut cs = false;
    let mut timeout = false;
    for a in state.attempts.iter().filter(|a| a.item == item) {
        match a.status {
            Status::Proved => return Status::Proved,
            Status::CounterSatisfiable => cs = true,
            Status::Timeout => timeout = true,
            Status::InferenceLimit => {}
        }
    }
    if cs {
        Status::CounterSatisfiable
    } else if timeout {
        Status::Timeout
    } else {
        Status::InferenceLimit
    }
}

fn loop_records(exp: &mut Experiment, mode: Mode, config: &str, state: &LoopState) {
    for it in &state.items {
        let attempts: Vec<_> = state
            .attempts
            .iter()
            .filter(|a| a.item == it.name)
            .collect();
        let inferences = attempts.iter().map(|a| a.inferences).sum();
        let (status, given, used, artifact) = match &it.solution {
            Some(sol) => (
                Status::Proved,
                sol.given.len(),
                sol.used.iter().cloned().collect(),
                Some(exp.proof_artifact(config, &it.name, sol.proof_file.clone())),
            ),
            None => {
                let status = final_status(state, &it.name);
                let artifact = match &it.countermodel {
                    Some(cm) if status == Status::CounterSatisfiable => Some(exp.model_artifact(
                        config,
                        &it.name,
                        cm.model.clone(),
                        cm.clauses.clone(),
                    )),
                    _ => None,
                };
                (
                    status,
                    attempts.last().map_or(0, |a| a.given),
                    Vec::new(),
                    artifact,
                )
            }
        };
        exp.records.push(ResultRecord {
            config: config.to_string(),
            mode,
            item: it.name.clone(),
            status,
            inferences,
            premises_given: given,
            premises_used: used,
            artifact,
        });
    }
    for (i, m) in state.models.iter().enumerate() {
        exp.artifacts
            .insert(format!("models/{config}/m{i}.model"), m.dump());
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopSection {
    pub config: String,
    pub fixpoint: FixpointReport,
    pub iterations: usize,
    pub models: usize,
    pub inferences: u64,
}

fn section(config: &str, state: &LoopState, corpus: &Corpus) -> LoopSection {
    LoopSection {
        config: config.to_string(),
        fixpoint: fixpoint_report(state, corpus),
        iterations: state.iterations.len(),
        models: state.models.len(),
        inferences: state.inferences_used,
    }
}

/// The full loop with learned selection next to the chronological-recency
/// baseline under the same budgets.
pub fn run_library(corpus: &Corpus, config: &LoopConfig) -> Result<Experiment, HarnessError> {
    let mut exp = Experiment::new(Mode::Library);
    let mut sections = Vec::new();
    for (name, selection) in [
        ("learned", Selection::Learned),
        ("recency", Selection::Recency),
    ] {
        let cfg = LoopConfig {
            selection,
            ..config.clone()
        };
        let state = run_loop(corpus, &cfg)?;
        loop_records(&mut exp, Mode::Library, name, &state);
        sections.push(section(name, &state, corpus));
    }
    exp.details = serde_json::json!({ "loops": sections });
    Ok(exp)
}

/// Every item against the global axioms under one shared inference budget,
/// with and without learning from solutions found earlier in the batch.
pub fn run_challenge(
    corpus: &Corpus,
    config: &LoopConfig,
    budget: u64,
) -> Result<Experiment, HarnessError> {
    let mut exp = Experiment::new(Mode::Challenge);
    let mut sections = Vec::new();
    for (name, selection) in [
        ("learning", Selection::Learned),
        ("no-learning", Selection::Overlap),
    ] {
        let cfg = LoopConfig {
            selection,
            items_as_premises: false,
            reference_training: false,
            total_inferences: Some(budget),
            ..config.clone()
        };
        let state = run_loop(corpus, &cfg)?;
        loop_records(&mut exp, Mode::Challenge, name, &state);
        sections.push(section(name, &state, corpus));
    }
    exp.details = serde_json::json!({ "loops": sections, "budget": budget });
    Ok(exp)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainTestSection {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub train_solved: usize,
    pub training_examples: u64,
    /// Learner size seen by every test ranking; equal to the training count.
    pub hygiene: bool,
}

/// Trains on re-proved train items only, then evaluates the test items with
/// the frozen learner and with a cold (symbol overlap) ranking.
pub fn run_traintest(
    corpus: &Corpus,
    config: &LoopConfig,
    limits: &Limits,
) -> Result<Experiment, HarnessError> {
    let split = corpus.split.as_ref().ok_or(HarnessError::MissingSplit)?;
    let test: BTreeSet<String> = split.test.iter().cloned().collect();
    if let Some(t) = split.train.iter().find(|t| test.contains(*t)) {
        return Err(CorpusError::OverlappingSplit(t.clone()).into());
    }
    let index = |n: &String| {
        corpus
            .item_index(n)
            .ok_or_else(|| CorpusError::UnknownSplitItem(n.clone()))
    };
    let train_idx: Vec<usize> = split.train.iter().map(index).collect::<Result<_, _>>()?;
    let test_idx: Vec<usize> = split.test.iter().map(index).collect::<Result<_, _>>()?;

    let train_corpus = Corpus::new(
        corpus.axioms.clone(),
        train_idx.iter().map(|&i| corpus.items[i].clone()).collect(),
        None,
    )?;
    let mut exp = Experiment::new(Mode::Traintest);
    let mut learner = BayesModel::new();
    let mut train_solved = 0;
    let features = FeatureConfig {
        semantic: false,
        ..config.feature_config()
    };
    let re = run_reprove(&train_corpus, limits, &config.cnf, config.workers)?;
    for (rec, &i) in re.records.iter().zip(&train_idx) {
        if rec.status == Status::Proved {
            train_solved += 1;
            let used: BTreeSet<String> = rec.premises_used.iter().cloned().collect();
            learner.train_incremental(
                &features.extract(&corpus.items[i].theorem.formula, None),
                &used,
            );
        }
    }
    let trained = learner.total_examples;
    let mut hygiene = true;
    for (name, model) in [("trained", learner), ("cold", BayesModel::new())] {
        let cfg = LoopConfig {
            selection: Selection::Learned,
            semantic: false,
            ..config.clone()
        };
        let outs = evaluate_fixed(corpus, &cfg, &test_idx, &model, &test)?;
        for o in outs {
            if name == "trained" && o.learner_examples != trained {
                hygiene = false;
            }
            let item = corpus.items[o.item].name().to_string();
            let inferences = o.attempts.iter().map(|a| a.inferences).sum();
            let (status, given, used, artifact) = match &o.solution {
                Some(sol) => (
                    Status::Proved,
                    sol.given.len(),
                    sol.used.iter().cloned().collect(),
                    Some(exp.proof_artifact(name, &item, sol.proof_file.clone())),
                ),
                None => {
                    let status = if o
                        .attempts
                        .iter()
                        .any(|a| a.status == Status::CounterSatisfiable)
                    {
                        Status::CounterSatisfiable
                    } else {
                        Status::InferenceLimit
                    };
                    let artifact = o.countermodel.as_ref().map(|cm| {
                        exp.model_artifact(name, &item, cm.model.clone(), cm.clauses.clone())
                    });
                    (
                        status,
                        o.attempts.last().map_or(0, |a| a.given),
                        Vec::new(),
                        artifact,
                    )
                }
            };
            exp.records.push(ResultRecord {
                config: name.into(),
                mode: Mode::Traintest,
                item,
                status,
                inferences,
                premises_given: given,
                premises_used: used,
                artifact,
            });
        }
    }
    if !hygiene {
        return Err(HarnessError::Invariant(
            "learner changed during test evaluation".into(),
        ));
    }
    exp.details = serde_json::to_value(TrainTestSection {
        train: split.train.clone(),
        test: split.test.clone(),
        train_solved,
        training_examples: trained,
        hygiene,
    })
    .expect("section serializes");
    Ok(exp)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<TableRow>,
}

/// One row per configuration in order of first appearance, plus a
/// `together` row over the union of items when there are several.
pub fn report(records: &[ResultRecord]) -> Report {
    let mut configs: Vec<&str> = Vec::new();
    for r in records {
        if !configs.contains(&r.config.as_str()) {
            configs.push(&r.config);
        }
    }
    let mut rows = Vec::new();
    for c in &configs {
        let mut row = TableRow {
            label: c.to_string(),
            ..TableRow::default()
        };
        let mut seen = BTreeSet::new();
        for r in records.iter().filter(|r| r.config == *c) {
            if !seen.insert(&r.item) {
                continue;
            }
            row.total += 1;
            match r.status {
                Status::Proved => row.proved += 1,
                Status::CounterSatisfiable => row.counter_satisfiable += 1,
                Status::Timeout | Status::InferenceLimit => row.timeout_or_inference_out += 1,
            }
        }
        rows.push(row);
    }
    if configs.len() >= 2 {
        let items: BTreeSet<&str> = records.iter().map(|r| r.item.as_str()).collect();
        let proved: BTreeSet<&str> = records
            .iter()
            .filter(|r| r.status == Status::Proved)
            .map(|r| r.item.as_str())
            .collect();
        let cs: BTreeSet<&str> = records
            .iter()
            .filter(|r| r.status == Status::CounterSatisfiable && !proved.contains(r.item.as_str()))
            .map(|r| r.item.as_str())
            .collect();
        rows.push(TableRow {
            label: "together".into(),
            proved: proved.len(),
            counter_satisfiable: cs.len(),
            timeout_or_inference_out: items.len() - proved.len() - cs.len(),
            total: items.len(),
        });
    }
    Report { rows }
}

impl Report {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<14} {:>7} {:>20} {:>25} {:>6}",
            "description", "proved", "counter-satisfiable", "timeout-or-inference-out", "total"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<14} {:>7} {:>20} {:>25} {:>6}",
                r.label, r.proved, r.counter_satisfiable, r.timeout_or_inference_out, r.total
            );
        }
        s
    }
}

pub fn records_to_jsonl(records: &[ResultRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("record serializes"));
        s.push('\n');
    }
    s
}

pub fn records_from_jsonl(text: &str) -> Result<Vec<ResultRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Writes records, report, summary and artifacts under `dir`.
pub fn write_experiment(dir: &Path, exp: &Experiment) -> Result<(), HarnessError> {
    write(&dir.join(RESULTS_FILE), &records_to_jsonl(&exp.records))?;
    let rep = exp.report();
    let mut text = format!("mode: {}\n\n{}", exp.mode.as_str(), rep.render());
    if let Some(loops) = exp.details.get("loops").and_then(|l| l.as_array()) {
        for l in loops {
            if let Ok(sec) = serde_json::from_value::<LoopSection>(l.clone()) {
                let _ = write!(
                    text,
                    "\n[{}] {} iterations, {} models, {} inferences\n{}",
                    sec.config,
                    sec.iterations,
                    sec.models,
                    sec.inferences,
                    sec.fixpoint.render()
                );
            }
        }
    }
    write(&dir.join(REPORT_FILE), &text)?;
    let summary = serde_json::json!({ "mode": exp.mode, "report": rep, "details": exp.details });
    write(
        &dir.join(SUMMARY_FILE),
        &(serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n"),
    )?;
    for (rel, body) in &exp.artifacts {
        write(&dir.join(rel), body)?;
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub proofs: usize,
    pub models: usize,
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Re-checks every proof and countermodel referenced from the result
/// files found under `dir` (searched recursively).
pub fn verify(dir: &Path) -> Result<VerifyReport, HarnessError> {
    let mut out = VerifyReport::default();
    let mut stack: Vec<PathBuf> = vec![dir.to_path_buf()];
    let mut result_files = Vec::new();
    while let Some(d) = stack.pop() {
        let entries = std::fs::read_dir(&d).map_err(|e| io_err(&d, e))?;
        let mut paths: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
        paths.sort();
        for p in paths {
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n == RESULTS_FILE) {
                result_files.push(p);
            }
        }
    }
    result_files.sort();
    for file in result_files {
        let base = file.parent().expect("file has a parent").to_path_buf();
        let text = std::fs::read_to_string(&file).map_err(|e| io_err(&file, e))?;
        let records = records_from_jsonl(&text).map_err(|e| io_err(&file, e))?;
        for r in records {
            let tag = format!("{}: {}/{}", file.display(), r.config, r.item);
            match (r.status, &r.artifact) {
                (Status::Proved, None) => out
                    .failures
                    .push(format!("{tag}: proved without a proof file")),
                (Status::Proved, Some(rel)) => {
                    out.proofs += 1;
                    if let Err(why) = verify_proof(&base.join(rel), &r.premises_used) {
                        out.failures.push(format!("{tag}: {why}"));
                    }
                }
                (Status::CounterSatisfiable, Some(rel)) => {
                    out.models += 1;
                    if let Err(why) = verify_model(&base.join(rel)) {
                        out.failures.push(format!("{tag}: {why}"));
                    }
                }
                _ => {}
            }
        }
    }
    Ok(out)
}

fn verify_proof(path: &Path, used: &[String]) -> Result<(), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let (clauses, proof) = parse_proof_file(&text).map_err(|e| e.to_string())?;
    match check_proof(&proof, &clauses) {
        Ok(true) => {}
        Ok(false) => return Err("proof rejected".into()),
        Err(e) => return Err(e.to_string()),
    }
    let recorded: BTreeSet<&String> = used.iter().collect();
    if recorded != proof.used_premises.iter().collect() {
        return Err("recorded premises differ from the proof".into());
    }
    Ok(())
}

fn verify_model(path: &Path) -> Result<(), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let model = FiniteModel::parse_dump(&text).map_err(|e| e.to_string())?;
    let cnf = path.with_extension("cnf");
    let dump = std::fs::read_to_string(&cnf).map_err(|e| format!("{}: {e}", cnf.display()))?;
    let clauses = ClauseSet::parse_dump(&dump).map_err(|e| e.to_string())?;
    match clauses
        .iter()
        .find(|c| model.evaluate_clause(c) != Truth::True)
    {
        Some(c) => Err(format!("model falsifies clause {}", c.id)),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests;
