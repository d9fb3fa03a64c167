use std::hint::black_box;

use axsel_bench::{
    corpus, reference_formulas, reference_problems, training_examples, weakened_problems,
};
use axsel_core::cnf::{clause_set, CnfConfig};
use axsel_core::harness::verification_limits;
use axsel_core::learner::{BayesModel, LearnerConfig};
use axsel_core::models::find_model;
use axsel_core::prover::prove;
use criterion::{criterion_group, criterion_main, Criterion};

fn clausify(c: &mut Criterion) {
    let formulas = reference_formulas(&corpus());
    let cfg = CnfConfig::default();
    c.bench_function("clausify/mixed30", |b| {
        b.iter(|| {
            for fs in &formulas {
                black_box(clause_set(fs, &cfg));
            }
        })
    });
}

fn reprove(c: &mut Criterion) {
    let problems = reference_problems(&corpus());
    let limits = verification_limits();
    c.bench_function("prove/mixed30-references", |b| {
        b.iter(|| {
            for p in &problems {
                black_box(prove(p, &limits, None).unwrap());
            }
        })
    });
}

fn models(c: &mut Criterion) {
    let problems = weakened_problems(&corpus());
    c.bench_function("find_model/mixed30-weakened", |b| {
        b.iter(|| {
            for p in &problems {
                let _ = black_box(find_model(p, 2));
            }
        })
    });
}

fn learner(c: &mut Criterion) {
    let corpus = corpus();
    let examples = training_examples(&corpus);
    let names: Vec<&str> = corpus.axioms.iter().map(|a| a.name.as_str()).collect();
    let cfg = LearnerConfig::default();
    c.bench_function("learner/train", |b| {
        b.iter(|| {
            black_box(BayesModel::train_batch(
                examples.iter().map(|(f, u)| (f, u)),
            ))
        })
    });
    let model = BayesModel::train_batch(examples.iter().map(|(f, u)| (f, u)));
    c.bench_function("learner/rank", |b| {
        b.iter(|| {
            for (f, _) in &examples {
                black_box(model.rank_premises(f, &names, &cfg));
            }
        })
    });
}

criterion_group!(benches, clausify, reprove, models, learner);
criterion_main!(benches);
