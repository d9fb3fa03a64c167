use super::*;
use crate::fol::{parse_formula, AnnotatedFormula, CorpusItem, Role};
use crate::prover::parse_proof_file;

fn ax(name: &str, f: &str) -> AnnotatedFormula {
    AnnotatedFormula::new(name, Role::Axiom, parse_formula(f).unwrap())
}

fn item(name: &str, f: &str, refs: &[&str]) -> CorpusItem {
    CorpusItem {
        theorem: AnnotatedFormula::new(name, Role::Conjecture, parse_formula(f).unwrap()),
        references: Some(refs.iter().map(|s| s.to_string()).collect()),
        tag: None,
    }
}

fn small() -> LoopConfig {
    LoopConfig {
        axiom_ladder: vec![2, 4, 8],
        inference_ladder: vec![500, 4_000],
        ..LoopConfig::default()
    }
}

/// A chain `a0 => a1 => ...` with noise axioms, each item deriving one
/// more link from the previous item.
fn chain_corpus(n: usize) -> Corpus {
    let mut axioms = vec![ax("base", "p0(c)")];
    for i in 0..n {
        axioms.push(ax(
            &format!("step{i}"),
            &format!("![X]: (p{i}(X) => p{}(X))", i + 1),
        ));
        axioms.push(ax(
            &format!("noise{i}"),
            &format!("![X]: (q{i}(X) => r{i}(X))"),
        ));
    }
    let items = (0..n)
        .map(|i| {
            let refs: Vec<String> = if i == 0 {
                vec!["base".into(), "step0".into()]
            } else {
                vec![format!("t{}", i - 1), format!("step{i}")]
            };
            let refs: Vec<&str> = refs.iter().map(|s| s.as_str()).collect();
            item(&format!("t{i}"), &format!("p{}(c)", i + 1), &refs)
        })
        .collect();
    Corpus::new(axioms, items, None).unwrap()
}

#[test]
fn tautology_is_solved_at_first_rung() {
    let corpus = Corpus::new(vec![ax("a", "q")], vec![item("taut", "p | ~p", &[])], None).unwrap();
    let state = run_loop(&corpus, &LoopConfig::default()).unwrap();
    let sol = state.items[0].solution.as_ref().unwrap();
    assert_eq!((sol.iteration, sol.rung), (1, 0));
    assert_eq!(state.stop, Some(StopReason::AllSolved));
    let rep = fixpoint_report(&state, &corpus);
    assert_eq!(
        rep.cumulative,
        TableRow {
            label: "cumulative".into(),
            proved: 1,
            total: 1,
            ..TableRow::default()
        }
    );
}

#[test]
fn empty_corpus_gives_zero_table() {
    let corpus = Corpus::new(vec![], vec![], None).unwrap();
    let state = run_loop(&corpus, &LoopConfig::default()).unwrap();
    let rep = fixpoint_report(&state, &corpus);
    assert!(rep.iterations.is_empty());
    assert_eq!(rep.cumulative.total, 0);
    assert!(rep.render().contains("cumulative"));
}

#[test]
fn dependent_item_is_solved_from_its_predecessor() {
    // B needs A; A shares every symbol with B
    let axioms = vec![
        ax("d1", "![X]: (f(X) => g(X))"),
        ax("d2", "f(a)"),
        ax("n1", "h(b)"),
        ax("n2", "k(b)"),
    ];
    let items = vec![
        item("A", "g(a)", &["d1", "d2"]),
        item("B", "g(a) | f(b)", &["A"]),
    ];
    let corpus = Corpus::new(axioms, items, None).unwrap();
    let cfg = LoopConfig {
        axiom_ladder: vec![1, 2],
        ..small()
    };
    let state = run_loop(&corpus, &cfg).unwrap();
    for it in &state.items {
        assert!(
            it.solution.as_ref().is_some_and(|s| s.iteration <= 2),
            "{}",
            it.name
        );
    }
}

#[test]
fn stored_proofs_recheck_and_respect_chronology() {
    let corpus = chain_corpus(6);
    let state = run_loop(&corpus, &small()).unwrap();
    assert!(state.solved().len() >= 4);
    for (i, it) in state.items.iter().enumerate() {
        let Some(sol) = &it.solution else { continue };
        let (clauses, proof) = parse_proof_file(&sol.proof_file).unwrap();
        assert_eq!(proof, sol.proof);
        assert_eq!(check_proof(&proof, &clauses), Ok(true));
        for p in &sol.used {
            assert!(corpus.order_of(p).unwrap() < i as isize);
        }
    }
    let mut seen = BTreeSet::new();
    for s in &state.iterations {
        for n in &s.newly_solved {
            assert!(seen.insert(n.clone()), "{n} solved twice");
        }
    }
}

#[test]
fn runs_are_reproducible() {
    let corpus = chain_corpus(6);
    let cfg = LoopConfig {
        workers: 3,
        ..small()
    };
    let a = run_loop(&corpus, &cfg).unwrap();
    let b = run_loop(&corpus, &LoopConfig { workers: 1, ..cfg }).unwrap();
    assert_eq!(a, b);
    assert_eq!(fixpoint_report(&a, &corpus), fixpoint_report(&b, &corpus));
}

#[test]
fn budget_is_respected() {
    let corpus = chain_corpus(8);
    for total in [0, 1, 700, 3_000, 20_000] {
        let cfg = LoopConfig {
            total_inferences: Some(total),
            ..small()
        };
        let state = run_loop(&corpus, &cfg).unwrap();
        let spent: u64 = state.attempts.iter().map(|a| a.inferences).sum();
        assert_eq!(spent, state.inferences_used);
        assert!(spent <= total, "{spent} > {total}");
        if total == 0 {
            assert!(state.attempts.is_empty());
            assert!(state.solved().is_empty());
        }
    }
}

#[test]
fn pruned_countersatisfiable_problems_feed_the_store() {
    let axioms = vec![
        ax("a1", "p(c)"),
        ax("a2", "![X]: (p(X) => q(X))"),
        ax("a3", "r(c)"),
    ];
    let items = vec![item("t", "q(c)", &["a1", "a2"])];
    let corpus = Corpus::new(axioms, items, None).unwrap();
    let cfg = LoopConfig {
        axiom_ladder: vec![1],
        selection: Selection::Recency,
        ..small()
    };
    let state = run_loop(&corpus, &cfg).unwrap();
    assert!(state.solved().is_empty());
    assert_eq!(state.attempts[0].status, Status::CounterSatisfiable);
    assert_eq!(state.models.len(), 1);
    assert_eq!(
        state
            .models
            .get(0)
            .unwrap()
            .provenance
            .as_ref()
            .unwrap()
            .problem,
        "t"
    );
    let rep = fixpoint_report(&state, &corpus);
    assert_eq!(rep.cumulative.counter_satisfiable, 1);
}

#[test]
fn recency_ranks_latest_first() {
    let corpus = chain_corpus(3);
    let cfg = LoopConfig {
        selection: Selection::Recency,
        ..LoopConfig::default()
    };
    let ctx = Context::new(&corpus, &cfg);
    let r = ctx.rank(2, &BayesModel::new(), &FeatureVector::new());
    assert_eq!(&r[..3], ["t1", "t0", "noise2"]);
}

#[test]
fn cold_start_prefers_symbol_overlap() {
    let corpus = chain_corpus(3);
    let cfg = LoopConfig::default();
    let ctx = Context::new(&corpus, &cfg);
    let r = ctx.rank(1, &BayesModel::new(), &FeatureVector::new());
    // goal p2(c): t0 is p1(c), step1 mentions p1 and p2
    assert!(r[..2].contains(&"step1".to_string()), "{r:?}");
}

#[test]
fn shortening_matches_a_recount() {
    let axioms = vec![
        ax("a1", "p(c)"),
        ax("a2", "![X]: (p(X) => q(X))"),
        ax("extra", "s(c)"),
    ];
    let items = vec![item("t", "q(c)", &["a1", "a2", "extra"])];
    let corpus = Corpus::new(axioms, items, None).unwrap();
    let state = run_loop(&corpus, &small()).unwrap();
    let rep = fixpoint_report(&state, &corpus);
    let recount = state
        .items
        .iter()
        .zip(&corpus.items)
        .filter(|(s, c)| {
            s.solution
                .as_ref()
                .is_some_and(|x| x.proof.used_premises.len() < c.references.as_ref().unwrap().len())
        })
        .count();
    assert_eq!(rep.shortened.len(), recount);
    assert_eq!(recount, 1);
    assert_eq!(rep.shortened[0].used, ["a1", "a2"]);
}

#[test]
fn guided_loop_also_terminates_soundly() {
    let corpus = chain_corpus(5);
    let state = run_loop(
        &corpus,
        &LoopConfig {
            guidance: true,
            ..small()
        },
    )
    .unwrap();
    assert!(!state.solved().is_empty());
}

#[test]
fn bad_ladders_are_rejected() {
    let corpus = chain_corpus(1);
    for cfg in [
        LoopConfig {
            axiom_ladder: vec![],
            ..LoopConfig::default()
        },
        LoopConfig {
            axiom_ladder: vec![4, 4],
            ..LoopConfig::default()
        },
        LoopConfig {
            inference_ladder: vec![10, 5],
            ..LoopConfig::default()
        },
    ] {
        assert!(matches!(run_loop(&corpus, &cfg), Err(LoopError::Config(_))));
    }
}

#[test]
fn run_dir_has_every_artifact() {
    let corpus = chain_corpus(3);
    let cfg = small();
    let state = run_loop(&corpus, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_run_dir(dir.path(), &cfg, &state).unwrap();
    let lines = std::fs::read_to_string(dir.path().join("attempts.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), state.attempts.len());
    assert_eq!(
        std::fs::read_dir(dir.path().join("proofs"))
            .unwrap()
            .count(),
        state.solved().len()
    );
    let back = BayesModel::load_checkpoint(
        &std::fs::read_to_string(dir.path().join("learner.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(back, state.learner);
}
