//! Naive Bayes premise ranking.
//!
//! Each premise is an independent label. For a conjecture with feature
//! weights `w_f` the score of candidate `c` is
//!
//! ```text
//! ln((N_c + s) / (N + s)) + sum_f w_f * ln((C_cf + s) / (N_c + 2s))
//! ```
//!
//! where `N_c` counts proofs using `c`, `N` counts examples, `C_cf` is the
//! accumulated weight of `f` over proofs using `c`, and `s` is the smoothing
//! constant. Features never seen in training are skipped.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::features::{Feature, FeatureVector};
use crate::fol::Corpus;

pub const DEFAULT_SIGMA: f64 = 0.05;
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub sigma: f64,
    /// Treat every query feature as weight 1.
    pub binarize: bool,
    /// Multiply query weights by `ln((N + 1) / (df_f + 1)) + 1`.
    pub tfidf: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            sigma: DEFAULT_SIGMA,
            binarize: false,
            tfidf: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BayesModel {
    pub label_count: BTreeMap<String, f64>,
    pub cooccurrence: BTreeMap<String, BTreeMap<Feature, f64>>,
    pub total_examples: u64,
    pub feature_totals: BTreeMap<Feature, f64>,
    /// Number of examples containing each feature.
    pub feature_docs: BTreeMap<Feature, u64>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    model: BayesModel,
}

impl BayesModel {
    pub fn new() -> Self {
        BayesModel::default()
    }

    pub fn is_empty(&self) -> bool {
        self.total_examples == 0
    }

    /// Adds one example: the conjecture's features and the premises its
    /// proof used.
    pub fn train_incremental(&mut self, features: &FeatureVector, used: &BTreeSet<String>) {
        self.total_examples += 1;
        for (f, w) in features.iter() {
            *self.feature_totals.entry(f.clone()).or_insert(0.0) += w;
            *self.feature_docs.entry(f.clone()).or_insert(0) += 1;
        }
        for label in used {
            *self.label_count.entry(label.clone()).or_insert(0.0) += 1.0;
            let row = self.cooccurrence.entry(label.clone()).or_default();
            for (f, w) in features.iter() {
                *row.entry(f.clone()).or_insert(0.0) += w;
            }
        }
    }

    pub fn train_batch<'a>(
        examples: impl IntoIterator<Item = (&'a FeatureVector, &'a BTreeSet<String>)>,
    ) -> Self {
        let mut m = BayesModel::new();
        for (f, u) in examples {
            m.train_incremental(f, u);
        }
        m
    }

    fn query_weight(&self, f: &Feature, w: f64, config: &LearnerConfig) -> f64 {
        let w = if config.binarize { 1.0 } else { w };
        if config.tfidf {
            let df = self.feature_docs.get(f).copied().unwrap_or(0) as f64;
            w * (((self.total_examples as f64 + 1.0) / (df + 1.0)).ln() + 1.0)
        } else {
            w
        }
    }

    pub fn score(&self, query: &FeatureVector, candidate: &str, config: &LearnerConfig) -> f64 {
        let s = config.sigma;
        let n = self.total_examples as f64;
        let nc = self.label_count.get(candidate).copied().unwrap_or(0.0);
        let prior = ((nc + s) / (n + s)).ln();
        let Some(row) = self.cooccurrence.get(candidate) else {
            return prior;
        };
        let denom = nc + 2.0 * s;
        let mut sum = 0.0;
        for (f, w) in query.iter() {
            if !self.feature_totals.contains_key(f) {
                continue;
            }
            let c = row.get(f).copied().unwrap_or(0.0);
            sum += self.query_weight(f, w, config) * ((c + s) / denom).ln();
        }
        prior + sum
    }

    /// Candidates with scores, best first; ties keep input order.
    pub fn rank_premises<S: AsRef<str>>(
        &self,
        query: &FeatureVector,
        candidates: &[S],
        config: &LearnerConfig,
    ) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = candidates
            .iter()
            .map(|c| {
                (
                    c.as_ref().to_string(),
                    self.score(query, c.as_ref(), config),
                )
            })
            .collect();
        out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        out
    }

    pub fn checkpoint(&self) -> String {
        serde_json::to_string_pretty(&Checkpoint {
            version: CHECKPOINT_VERSION,
            model: self.clone(),
        })
        .expect("model serializes")
    }

    pub fn load_checkpoint(text: &str) -> Result<Self, String> {
        let c: Checkpoint = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if c.version != CHECKPOINT_VERSION {
            return Err(format!("unsupported checkpoint version {}", c.version));
        }
        Ok(c.model)
    }
}

/// The first `k` names of a ranking.
pub fn select_top(ranking: &[(String, f64)], k: usize) -> Vec<String> {
    ranking.iter().take(k).map(|(n, _)| n.clone()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecallRow {
    pub k: usize,
    /// Fraction of evaluated items whose whole reference set is in the top k.
    pub full_recall: f64,
    /// Mean fraction of each reference set found in the top k.
    pub coverage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub rows: Vec<RecallRow>,
    pub evaluated: usize,
    /// For each evaluated item: its index and the largest item index the
    /// model had been trained on when it was ranked.
    pub trained_before: Vec<(usize, Option<usize>)>,
}

/// Chronological leave-one-out premise-selection evaluation: item `i` is
/// ranked by a model trained on the reference sets of items before `i`.
/// Items without reference sets are skipped.
pub fn evaluate_selection(
    corpus: &Corpus,
    features: &dyn Fn(usize) -> FeatureVector,
    ks: &[usize],
    config: &LearnerConfig,
) -> SelectionReport {
    let mut model = BayesModel::new();
    let mut last_trained = None;
    let mut full = vec![0usize; ks.len()];
    let mut coverage = vec![0f64; ks.len()];
    let mut trained_before = Vec::new();
    let mut evaluated = 0;
    for (i, item) in corpus.items.iter().enumerate() {
        let Some(refs) = &item.references else {
            continue;
        };
        let query = features(i);
        let ranking = model.rank_premises(&query, &corpus.eligible(i), config);
        trained_before.push((i, last_trained));
        evaluated += 1;
        for (j, &k) in ks.iter().enumerate() {
            let top: BTreeSet<String> = select_top(&ranking, k).into_iter().collect();
            let hit = refs.iter().filter(|r| top.contains(*r)).count();
            if hit == refs.len() {
                full[j] += 1;
            }
            coverage[j] += if refs.is_empty() {
                1.0
            } else {
                hit as f64 / refs.len() as f64
            };
        }
        let used: BTreeSet<String> = refs.iter().cloned().collect();
        model.train_incremental(&query, &used);
        last_trained = Some(i);
    }
    let denom = evaluated.max(1) as f64;
    let rows = ks
        .iter()
        .enumerate()
        .map(|(j, &k)| RecallRow {
            k,
            full_recall: if evaluated == 0 {
                0.0
            } else {
                full[j] as f64 / denom
            },
            coverage: if evaluated == 0 {
                0.0
            } else {
                coverage[j] / denom
            },
        })
        .collect();
    SelectionReport {
        rows,
        evaluated,
        trained_before,
    }
}

#[cfg(test)]
mod tests;
