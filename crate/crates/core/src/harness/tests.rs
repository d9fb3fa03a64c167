use super::generate::depth_tag;
use super::*;
use crate::fol::{parse_formula, AnnotatedFormula, CorpusItem, Role, Split};

fn ax(name: &str, f: &str) -> AnnotatedFormula {
    AnnotatedFormula::new(name, Role::Axiom, parse_formula(f).unwrap())
}

fn item(name: &str, f: &str, refs: Option<&[&str]>) -> CorpusItem {
    CorpusItem {
        theorem: AnnotatedFormula::new(name, Role::Conjecture, parse_formula(f).unwrap()),
        references: refs.map(|r| r.iter().map(|s| s.to_string()).collect()),
        tag: None,
    }
}

fn rec(config: &str, item: &str, status: Status) -> ResultRecord {
    ResultRecord {
        config: config.into(),
        mode: Mode::Library,
        item: item.into(),
        status,
        inferences: 0,
        premises_given: 0,
        premises_used: Vec::new(),
        artifact: None,
    }
}

fn small() -> LoopConfig {
    LoopConfig {
        axiom_ladder: vec![2, 4, 8, 16],
        inference_ladder: vec![500, 4_000],
        ..LoopConfig::default()
    }
}

fn files_under(root: &std::path::Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn chain_items_are_shallow_and_tagged() {
    let c = generate_corpus(Family::Chain, 12, 3);
    assert_eq!(c.len(), 12);
    for it in &c.items {
        let d = depth_tag(it).unwrap();
        assert!(d <= 3, "{} has depth {d}", it.name());
    }
}

#[test]
fn size_zero_is_empty() {
    for f in [Family::Chain, Family::Group, Family::Mixed, Family::NearDup] {
        assert!(generate_corpus(f, 0, 1).is_empty(), "{f}");
    }
}

#[test]
fn generation_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    generate_corpus(Family::Mixed, 15, 9)
        .write(a.path())
        .unwrap();
    generate_corpus(Family::Mixed, 15, 9)
        .write(b.path())
        .unwrap();
    let files = files_under(a.path());
    assert!(!files.is_empty());
    assert_eq!(files, files_under(b.path()));
    for f in files {
        assert_eq!(
            std::fs::read(a.path().join(&f)).unwrap(),
            std::fs::read(b.path().join(&f)).unwrap()
        );
    }
    assert_ne!(
        generate_corpus(Family::Chain, 10, 1).items,
        generate_corpus(Family::Chain, 10, 2).items
    );
}

#[test]
fn family_names_round_trip() {
    for f in [Family::Chain, Family::Group, Family::Mixed, Family::NearDup] {
        assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
    }
    assert!("lattice".parse::<Family>().is_err());
}

#[test]
fn mixed_has_a_disjoint_split() {
    let c = generate_corpus(Family::Mixed, 18, 4);
    let s = c.split.as_ref().unwrap();
    assert_eq!(s.train.len() + s.test.len(), c.len());
    assert!(s.train.iter().all(|t| !s.test.contains(t)));
}

#[test]
fn report_counts_each_column() {
    let mut rs = Vec::new();
    for i in 0..3 {
        rs.push(rec("a", &format!("p{i}"), Status::Proved));
    }
    rs.push(rec("a", "c0", Status::CounterSatisfiable));
    rs.push(rec("a", "c1", Status::Timeout));
    let rep = report(&rs);
    assert_eq!(rep.rows.len(), 1);
    let r = &rep.rows[0];
    assert_eq!(
        (
            r.proved,
            r.counter_satisfiable,
            r.timeout_or_inference_out,
            r.total
        ),
        (3, 1, 1, 5)
    );
}

#[test]
fn together_row_is_the_union() {
    let rs = vec![
        rec("x", "a", Status::Proved),
        rec("x", "b", Status::Proved),
        rec("x", "c", Status::InferenceLimit),
        rec("x", "d", Status::InferenceLimit),
        rec("y", "a", Status::InferenceLimit),
        rec("y", "b", Status::InferenceLimit),
        rec("y", "c", Status::Proved),
        rec("y", "d", Status::Proved),
    ];
    let rep = report(&rs);
    assert_eq!(rep.rows.len(), 3);
    assert_eq!(rep.rows[2].label, "together");
    assert_eq!((rep.rows[2].proved, rep.rows[2].total), (4, 4));
}

#[test]
fn countersatisfiable_together_excludes_proved() {
    let rs = vec![
        rec("x", "a", Status::CounterSatisfiable),
        rec("y", "a", Status::Proved),
        rec("y", "b", Status::CounterSatisfiable),
    ];
    let t = report(&rs).rows.pop().unwrap();
    assert_eq!(
        (
            t.proved,
            t.counter_satisfiable,
            t.timeout_or_inference_out,
            t.total
        ),
        (1, 1, 0, 2)
    );
}

#[test]
fn empty_report_is_header_only() {
    let rep = report(&[]);
    assert!(rep.rows.is_empty());
    assert_eq!(rep.render().lines().count(), 1);
}

#[test]
fn jsonl_round_trips() {
    let rs = vec![
        rec("x", "a", Status::Proved),
        rec("x", "b", Status::Timeout),
    ];
    assert_eq!(records_from_jsonl(&records_to_jsonl(&rs)).unwrap(), rs);
}

#[test]
fn reprove_needs_references() {
    let c = Corpus::new(vec![ax("a", "p")], vec![item("t", "p", None)], None).unwrap();
    assert!(matches!(
        run_reprove(&c, &verification_limits(), &CnfConfig::default(), 0),
        Err(HarnessError::MissingReferences(_))
    ));
}

#[test]
fn reprove_writes_checkable_artifacts() {
    let axioms = vec![ax("a1", "p(c)"), ax("a2", "![X]: (p(X) => q(X))")];
    let items = vec![
        item("good", "q(c)", Some(&["a1", "a2"])),
        item("short", "q(c)", Some(&["a2"])),
    ];
    let c = Corpus::new(axioms, items, None).unwrap();
    let limits = Limits {
        model_domain: 2,
        ..verification_limits()
    };
    let exp = run_reprove(&c, &limits, &CnfConfig::default(), 0).unwrap();
    assert_eq!(exp.records[0].status, Status::Proved);
    assert_eq!(exp.records[0].premises_used, ["a1", "a2"]);
    assert_eq!(exp.records[1].status, Status::CounterSatisfiable);
    let dir = tempfile::tempdir().unwrap();
    write_experiment(dir.path(), &exp).unwrap();
    let v = verify(dir.path()).unwrap();
    assert!(v.ok(), "{:?}", v.failures);
    assert_eq!((v.proofs, v.models), (1, 1));
}

#[test]
fn verify_catches_tampering() {
    let c = Corpus::new(
        vec![ax("a1", "p(c)")],
        vec![item("t", "p(c)", Some(&["a1"]))],
        None,
    )
    .unwrap();
    let exp = run_reprove(&c, &verification_limits(), &CnfConfig::default(), 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_experiment(dir.path(), &exp).unwrap();
    let mut recs = exp.records.clone();
    recs[0].premises_used.push("ghost".into());
    std::fs::write(dir.path().join(RESULTS_FILE), records_to_jsonl(&recs)).unwrap();
    assert!(!verify(dir.path()).unwrap().ok());
}

#[test]
fn library_compares_learned_and_recency() {
    let corpus = generate_corpus(Family::Chain, 8, 5);
    let exp = run_library(&corpus, &small()).unwrap();
    let rep = exp.report();
    let labels: Vec<_> = rep.rows.iter().map(|r| r.label.as_str()).collect();
    assert_eq!(labels, ["learned", "recency", "together"]);
    assert!(rep.rows[0].proved > 0);
    let dir = tempfile::tempdir().unwrap();
    write_experiment(dir.path(), &exp).unwrap();
    assert!(verify(dir.path()).unwrap().ok());
    assert!(std::fs::read_to_string(dir.path().join(REPORT_FILE))
        .unwrap()
        .contains("cumulative"));
}

#[test]
fn loop_countermodels_are_written_and_checked() {
    let c = Corpus::new(
        vec![ax("a1", "p(c)"), ax("a2", "![X]: (p(X) => r(X))")],
        vec![
            item("t1", "r(c)", Some(&["a1", "a2"])),
            item("t2", "q(c)", Some(&["a1"])),
        ],
        None,
    )
    .unwrap();
    let exp = run_library(&c, &small()).unwrap();
    let cs: Vec<_> = exp
        .records
        .iter()
        .filter(|r| r.status == Status::CounterSatisfiable)
        .collect();
    assert_eq!(cs.len(), 2);
    assert!(cs.iter().all(|r| r
        .artifact
        .as_deref()
        .is_some_and(|a| a.ends_with("t2.model"))));
    let dir = tempfile::tempdir().unwrap();
    write_experiment(dir.path(), &exp).unwrap();
    let v = verify(dir.path()).unwrap();
    assert!(v.ok(), "{:?}", v.failures);
    assert_eq!(v.models, 2);
}

#[test]
fn challenge_with_no_budget_attempts_nothing() {
    let corpus = generate_corpus(Family::Chain, 5, 2);
    let exp = run_challenge(&corpus, &small(), 0).unwrap();
    assert_eq!(exp.records.len(), 10);
    assert!(exp
        .records
        .iter()
        .all(|r| r.status != Status::Proved && r.inferences == 0));
}

#[test]
fn challenge_shares_one_budget() {
    let corpus = generate_corpus(Family::Chain, 6, 2);
    let exp = run_challenge(&corpus, &small(), 5_000).unwrap();
    for config in ["learning", "no-learning"] {
        let spent: u64 = exp
            .records
            .iter()
            .filter(|r| r.config == config)
            .map(|r| r.inferences)
            .sum();
        assert!(spent <= 5_000, "{config}: {spent}");
    }
}

#[test]
fn traintest_keeps_test_items_out_of_training() {
    let corpus = generate_corpus(Family::Mixed, 15, 7);
    let exp = run_traintest(&corpus, &small(), &verification_limits()).unwrap();
    let sec: TrainTestSection = serde_json::from_value(exp.details.clone()).unwrap();
    assert!(sec.hygiene);
    assert_eq!(sec.training_examples as usize, sec.train_solved);
    let test: BTreeSet<_> = sec.test.iter().collect();
    for r in &exp.records {
        assert!(test.contains(&r.item));
        assert!(
            r.premises_used.iter().all(|p| !test.contains(p)),
            "{} used a test item",
            r.item
        );
    }
}

#[test]
fn traintest_rejects_bad_splits() {
    let axioms = vec![ax("a", "p")];
    let items = vec![
        item("t0", "p", Some(&["a"])),
        item("t1", "p | q", Some(&["a"])),
    ];
    let none = Corpus::new(axioms.clone(), items.clone(), None).unwrap();
    assert!(matches!(
        run_traintest(&none, &small(), &verification_limits()),
        Err(HarnessError::MissingSplit)
    ));
    let both = Split {
        train: vec!["t0".into()],
        test: vec!["t0".into()],
    };
    if let Ok(c) = Corpus::new(axioms, items, Some(both)) {
        assert!(run_traintest(&c, &small(), &verification_limits()).is_err());
    }
}
