use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::features::symbol_features;
use crate::fol::{AnnotatedFormula, Corpus, CorpusItem, Formula, Role, Term};

fn sym(name: &str) -> Feature {
    Feature::Sym(name.to_string())
}

fn fv(pairs: &[(&str, f64)]) -> FeatureVector {
    pairs.iter().map(|(n, w)| (sym(n), *w)).collect()
}

fn names(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

#[test]
fn single_example_counters() {
    let mut m = BayesModel::new();
    m.train_incremental(&fv(&[("p", 1.0)]), &names(&["ax1"]));
    assert_eq!(m.label_count["ax1"], 1.0);
    assert_eq!(m.cooccurrence["ax1"][&sym("p")], 1.0);
    assert_eq!(m.total_examples, 1);
    let ranking = m.rank_premises(
        &fv(&[("p", 1.0)]),
        &["ax1", "ax2"],
        &LearnerConfig::default(),
    );
    assert_eq!(ranking[0].0, "ax1");
    assert_eq!(select_top(&ranking, 1), vec!["ax1"]);
    assert_eq!(select_top(&ranking, 10).len(), 2);

    let once = m.clone();
    m.train_incremental(&fv(&[("p", 1.0)]), &names(&["ax1"]));
    assert_eq!(m.label_count["ax1"], 2.0 * once.label_count["ax1"]);
    assert_eq!(
        m.cooccurrence["ax1"][&sym("p")],
        2.0 * once.cooccurrence["ax1"][&sym("p")]
    );
    assert_eq!(m.total_examples, 2);
}

#[test]
fn empty_model_keeps_input_order() {
    let m = BayesModel::new();
    let cands = ["z", "a", "m", "b"];
    let ranking = m.rank_premises(&fv(&[("p", 3.0)]), &cands, &LearnerConfig::default());
    assert_eq!(
        ranking.iter().map(|r| r.0.as_str()).collect::<Vec<_>>(),
        cands
    );
    assert!(ranking.iter().all(|r| r.1 == 0.0));
}

fn hand_table() -> BayesModel {
    let mut m = BayesModel::new();
    m.total_examples = 10;
    for (l, n) in [("a", 6.0), ("b", 3.0), ("c", 1.0)] {
        m.label_count.insert(l.into(), n);
    }
    for (l, f, w) in [
        ("a", "f1", 4.0),
        ("a", "f2", 1.0),
        ("b", "f1", 1.0),
        ("b", "f3", 3.0),
        ("c", "f2", 2.0),
    ] {
        m.cooccurrence
            .entry(l.into())
            .or_default()
            .insert(sym(f), w);
    }
    for (f, w) in [("f1", 5.0), ("f2", 3.0), ("f3", 3.0)] {
        m.feature_totals.insert(sym(f), w);
    }
    m
}

#[test]
fn hand_computed_scores() {
    let m = hand_table();
    // f4 has never been seen and contributes nothing
    let q = fv(&[("f1", 1.0), ("f2", 2.0), ("f4", 1.0)]);
    let cfg = LearnerConfig::default();
    let expected = [
        ("a", -4.4360834665428195),
        ("b", -10.529311761297617),
        ("c", -4.104765697001985),
        ("d", -5.303304908059076),
    ];
    for (l, v) in expected {
        assert!(
            (m.score(&q, l, &cfg) - v).abs() < 1e-9,
            "{l}: {}",
            m.score(&q, l, &cfg)
        );
    }
    let ranking = m.rank_premises(&q, &["a", "b", "c", "d"], &cfg);
    assert_eq!(
        ranking.iter().map(|r| r.0.as_str()).collect::<Vec<_>>(),
        ["c", "a", "d", "b"]
    );
}

fn random_examples(rng: &mut impl Rng, n: usize) -> Vec<(FeatureVector, BTreeSet<String>)> {
    (0..n)
        .map(|_| {
            let f: FeatureVector = (0..rng.gen_range(1..5))
                .map(|_| {
                    (
                        sym(&format!("s{}", rng.gen_range(0..6))),
                        rng.gen_range(1..4) as f64,
                    )
                })
                .collect();
            let used: BTreeSet<String> = (0..rng.gen_range(0..3))
                .map(|_| format!("ax{}", rng.gen_range(0..5)))
                .collect();
            (f, used)
        })
        .collect()
}

#[test]
fn batch_equals_incremental() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ex = random_examples(&mut rng, 10);
    let batch = BayesModel::train_batch(ex.iter().map(|(f, u)| (f, u)));
    let mut inc = BayesModel::new();
    for (f, u) in &ex {
        inc.train_incremental(f, u);
    }
    assert_eq!(batch, inc);
}

#[test]
fn checkpoint_reload_reproduces_rankings() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ex = random_examples(&mut rng, 20);
    let m = BayesModel::train_batch(ex.iter().map(|(f, u)| (f, u)));
    let back = BayesModel::load_checkpoint(&m.checkpoint()).unwrap();
    assert_eq!(back, m);
    let cands: Vec<String> = (0..6).map(|i| format!("ax{i}")).collect();
    let q = &ex[0].0;
    assert_eq!(
        back.rank_premises(q, &cands, &LearnerConfig::default()),
        m.rank_premises(q, &cands, &LearnerConfig::default())
    );
    assert!(BayesModel::load_checkpoint("{\"version\": 9, \"model\": {}}").is_err());
}

#[test]
fn top_k_is_a_prefix_of_the_ranking() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ex = random_examples(&mut rng, 30);
    let m = BayesModel::train_batch(ex.iter().map(|(f, u)| (f, u)));
    let cands: Vec<String> = (0..40).map(|i| format!("ax{}", i % 20)).collect();
    let ranking = m.rank_premises(&ex[3].0, &cands, &LearnerConfig::default());
    let top = select_top(&ranking, 16);
    assert_eq!(top.len(), 16);
    assert_eq!(
        top,
        ranking[..16]
            .iter()
            .map(|r| r.0.clone())
            .collect::<Vec<_>>()
    );
}

fn arb_model() -> impl Strategy<Value = (BayesModel, FeatureVector)> {
    let example = (
        prop::collection::vec((0..5usize, 1..4u32), 1..4),
        prop::collection::btree_set(0..4usize, 0..3),
    );
    (
        prop::collection::vec(example, 1..12),
        prop::collection::vec((0..6usize, 1..4u32), 1..4),
    )
        .prop_map(|(ex, q)| {
            let mut m = BayesModel::new();
            for (feats, used) in ex {
                let f: FeatureVector = feats
                    .into_iter()
                    .map(|(i, w)| (sym(&format!("s{i}")), w as f64))
                    .collect();
                let used: BTreeSet<String> = used.into_iter().map(|i| format!("ax{i}")).collect();
                m.train_incremental(&f, &used);
            }
            let q: FeatureVector = q
                .into_iter()
                .map(|(i, w)| (sym(&format!("s{i}")), w as f64))
                .collect();
            (m, q)
        })
}

proptest! {
    #[test]
    fn scores_are_finite((m, q) in arb_model(), sigma in 0.001f64..2.0) {
        let cfg = LearnerConfig { sigma, ..LearnerConfig::default() };
        for i in 0..6 {
            let s = m.score(&q, &format!("ax{i}"), &cfg);
            prop_assert!(s.is_finite());
        }
    }

}

#[test]
fn prior_dominates_small_weights() {
    // a: frequent but never with f; b: rare but always with f
    let mut m = BayesModel::new();
    for _ in 0..9 {
        m.train_incremental(&fv(&[("g", 1.0)]), &names(&["a"]));
    }
    m.train_incremental(&fv(&[("f", 1.0)]), &names(&["a", "b"]));
    let cfg = LearnerConfig::default();
    let top = |w: f64| {
        m.rank_premises(&fv(&[("f", w)]), &["a", "b"], &cfg)[0]
            .0
            .clone()
    };
    assert_eq!(top(0.1), "a");
    assert_eq!(top(3.0), "b");
}

#[test]
fn binarize_and_tfidf_toggles() {
    let m = hand_table();
    let q = fv(&[("f1", 3.0)]);
    let bin = LearnerConfig {
        binarize: true,
        ..LearnerConfig::default()
    };
    assert!(
        (m.score(&q, "a", &bin) - m.score(&fv(&[("f1", 1.0)]), "a", &LearnerConfig::default()))
            .abs()
            < 1e-12
    );
    let mut m2 = m.clone();
    m2.feature_docs.insert(sym("f1"), 9);
    let tf = LearnerConfig {
        tfidf: true,
        ..LearnerConfig::default()
    };
    let idf = (11.0f64 / 10.0).ln() + 1.0;
    let expected = (6.05f64 / 10.05).ln() + 3.0 * idf * (4.05f64 / 6.1).ln();
    assert!((m2.score(&q, "a", &tf) - expected).abs() < 1e-12);
}

fn item(name: &str, f: Formula, refs: Option<Vec<&str>>) -> CorpusItem {
    CorpusItem {
        theorem: AnnotatedFormula::new(name, Role::Conjecture, f),
        references: refs.map(|r| r.into_iter().map(str::to_string).collect()),
        tag: None,
    }
}

#[test]
fn predecessor_corpus_has_perfect_recall_at_one() {
    // item i mentions x_i, x_{i-1} and x_{i-3}; no earlier item contains
    // both of its previously seen symbols, so every used premise is
    // penalized and the one never used before (the predecessor) wins
    let n = 30;
    let x = |i: isize| Term::constant(format!("x{}", i.max(0)));
    let items: Vec<CorpusItem> = (0..n as isize)
        .map(|i| {
            let f = Formula::atom("p", vec![x(i + 3), x(i + 2), x(i)]);
            let refs = if i == 0 {
                vec![]
            } else {
                vec![format!("t{}", i - 1)]
            };
            item(
                &format!("t{i}"),
                f,
                Some(refs.iter().map(|s| s.as_str()).collect()),
            )
        })
        .collect();
    let corpus = Corpus::new(vec![], items, None).unwrap();
    let feats = |i: usize| symbol_features(&corpus.items[i].theorem.formula);
    let rep = evaluate_selection(&corpus, &feats, &[1, 4], &LearnerConfig::default());
    assert_eq!(rep.evaluated, n);
    assert_eq!(rep.rows[0].full_recall, 1.0);
    assert_eq!(rep.rows[1].coverage, 1.0);
    for (i, t) in &rep.trained_before {
        assert!(t.is_none_or(|t| t < *i));
    }
}

#[test]
fn empty_model_with_every_candidate_has_full_recall() {
    let items = vec![
        item("a", Formula::prop("p"), Some(vec![])),
        item("b", Formula::prop("q"), Some(vec!["a"])),
        item("c", Formula::prop("r"), Some(vec!["a", "b"])),
    ];
    let corpus = Corpus::new(vec![], items, None).unwrap();
    let rep = evaluate_selection(
        &corpus,
        &|_| FeatureVector::new(),
        &[3],
        &LearnerConfig::default(),
    );
    assert_eq!(rep.rows[0].full_recall, 1.0);
}

#[test]
fn random_labels_give_chance_recall() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 400;
    let axioms: Vec<AnnotatedFormula> = (0..20)
        .map(|i| {
            AnnotatedFormula::new(
                format!("ax{i}"),
                Role::Axiom,
                Formula::prop(format!("a{i}")),
            )
        })
        .collect();
    let items: Vec<CorpusItem> = (0..n)
        .map(|i| {
            let pick = rng.gen_range(0..20 + i);
            let r = if pick < 20 {
                format!("ax{pick}")
            } else {
                format!("t{}", pick - 20)
            };
            let f = Formula::atom(format!("s{}", rng.gen_range(0..8)), vec![]);
            item(&format!("t{i}"), f, Some(vec![r.as_str()]))
        })
        .collect();
    let corpus = Corpus::new(axioms, items, None).unwrap();
    let feats = |i: usize| symbol_features(&corpus.items[i].theorem.formula);
    let k = 5;
    let rep = evaluate_selection(&corpus, &feats, &[k], &LearnerConfig::default());
    let probs: Vec<f64> = (0..n).map(|i| k as f64 / (20 + i) as f64).collect();
    let mean: f64 = probs.iter().sum::<f64>() / n as f64;
    let sd = (probs.iter().map(|p| p * (1.0 - p)).sum::<f64>()).sqrt() / n as f64;
    assert!(
        (rep.rows[0].full_recall - mean).abs() < 4.0 * sd,
        "{} vs {mean} (sd {sd})",
        rep.rows[0].full_recall
    );
}
