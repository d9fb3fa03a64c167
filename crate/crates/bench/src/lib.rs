//! Fixed workloads shared by the benchmarks.

use std::collections::BTreeSet;

use axsel_core::cnf::{clause_set, CnfConfig};
use axsel_core::features::{symbol_features, FeatureVector};
use axsel_core::fol::{AnnotatedFormula, ClauseSet, Corpus};
use axsel_core::harness::{generate_corpus, Family};

pub fn corpus() -> Corpus {
    generate_corpus(Family::Mixed, 30, 1)
}

fn premises(corpus: &Corpus, names: &[String]) -> Vec<AnnotatedFormula> {
    names.iter().filter_map(|r| corpus.premise(r)).collect()
}

/// Each item with exactly its references.
pub fn reference_formulas(corpus: &Corpus) -> Vec<Vec<AnnotatedFormula>> {
    corpus
        .items
        .iter()
        .map(|it| {
            let mut fs = premises(corpus, it.references.as_deref().unwrap_or_default());
            fs.push(it.theorem.clone());
            fs
        })
        .collect()
}

pub fn reference_problems(corpus: &Corpus) -> Vec<ClauseSet> {
    reference_formulas(corpus)
        .iter()
        .map(|fs| clause_set(fs, &CnfConfig::default()))
        .collect()
}

/// Items with their first reference dropped; most have small countermodels.
pub fn weakened_problems(corpus: &Corpus) -> Vec<ClauseSet> {
    corpus
        .items
        .iter()
        .filter_map(|it| {
            let refs = it.references.as_deref()?;
            let mut fs = premises(corpus, refs.get(1..)?);
            fs.push(it.theorem.clone());
            Some(clause_set(&fs, &CnfConfig::default()))
        })
        .collect()
}

pub fn training_examples(corpus: &Corpus) -> Vec<(FeatureVector, BTreeSet<String>)> {
    corpus
        .items
        .iter()
        .map(|it| {
            let used = it.references.iter().flatten().cloned().collect();
            (symbol_features(&it.theorem.formula), used)
        })
        .collect()
}
