use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;

fn sym(name: &str, kind: SymbolKind, arity: usize) -> Symbol {
    Symbol {
        name: name.to_string(),
        kind,
        arity,
    }
}

#[test]
fn smallest_statement() {
    let p = parse_problem("fof(a1, axiom, p(c)).").unwrap();
    assert_eq!(p.formulas.len(), 1);
    assert_eq!(p.formulas[0].role, Role::Axiom);
    let sig = p.signature().unwrap();
    assert_eq!(sig[&("p".to_string(), SymbolKind::Predicate)], 1);
    assert_eq!(sig[&("c".to_string(), SymbolKind::Function)], 0);
    assert!(p.warnings.is_empty());
}

#[test]
fn tautology_conjecture() {
    let p = parse_problem("fof(t, conjecture, ![X]: (p(X) => p(X))).").unwrap();
    let c = p.conjecture().unwrap();
    assert_eq!(c.name, "t");
    assert_eq!(
        c.formula,
        Formula::forall(
            "X",
            Formula::implies(
                Formula::atom("p", vec![Term::var("X")]),
                Formula::atom("p", vec![Term::var("X")])
            )
        )
    );
}

#[test]
fn free_variables_are_closed_with_warning() {
    let p = parse_problem("fof(a, axiom, p(X)).").unwrap();
    assert_eq!(p.warnings.len(), 1);
    assert_eq!(
        p.formulas[0].formula,
        Formula::forall("X", Formula::atom("p", vec![Term::var("X")]))
    );
    assert_eq!(print_formula(&p.formulas[0].formula), "![X]: p(X)");
}

#[test]
fn error_values_are_distinct() {
    match parse_problem("fof(a, axiom, p(c)") {
        Err(ParseError::Syntax { line: 1, .. }) => {}
        other => panic!("{other:?}"),
    }
    assert_eq!(
        parse_problem("fof(a, axiom, p).\nfof(a, axiom, q).").unwrap_err(),
        ParseError::DuplicateName("a".into())
    );
    assert!(matches!(
        parse_problem("fof(a, axiom, p(c)).\nfof(b, axiom, p(c, c)).").unwrap_err(),
        ParseError::ArityClash { ref symbol, first: 1, second: 2, .. } if symbol == "p"
    ));
    assert!(matches!(
        parse_problem("fof(a, conjecture, p).\nfof(b, conjecture, q).").unwrap_err(),
        ParseError::MultipleConjectures { .. }
    ));
    assert!(matches!(
        parse_problem("fof(a, banana, p).").unwrap_err(),
        ParseError::UnknownRole { .. }
    ));
}

#[test]
fn syntax_error_reports_position() {
    let err = parse_problem("% header\nfof(a, axiom,\n   p(c) & ).").unwrap_err();
    match err {
        ParseError::Syntax { line, col, .. } => assert_eq!((line, col), (3, 11)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn printer_examples() {
    assert_eq!(
        print_formula(&Formula::and(Formula::prop("p"), Formula::prop("q"))),
        "(p & q)"
    );
    assert_eq!(
        print_formula(&Formula::forall(
            "X",
            Formula::atom("p", vec![Term::var("X")])
        )),
        "![X]: p(X)"
    );
}

#[test]
fn connectives_and_sugar() {
    let f = parse_formula("(a <= b)").unwrap();
    assert_eq!(f, Formula::implies(Formula::prop("b"), Formula::prop("a")));
    let f = parse_formula("a & b & c").unwrap();
    assert_eq!(
        f,
        Formula::and(
            Formula::and(Formula::prop("a"), Formula::prop("b")),
            Formula::prop("c")
        )
    );
    assert!(parse_formula("a & b | c").is_err());
    assert!(parse_formula("a => b => c").is_err());
    let f = parse_formula("![X,Y]: X != Y").unwrap();
    assert_eq!(
        f,
        Formula::forall(
            "X",
            Formula::forall(
                "Y",
                Formula::not(Formula::equals(Term::var("X"), Term::var("Y")))
            )
        )
    );
    assert_eq!(
        parse_formula("(a <~> b)").unwrap(),
        Formula::not(Formula::iff(Formula::prop("a"), Formula::prop("b")))
    );
    assert_eq!(
        parse_formula("$true | $false").unwrap(),
        Formula::or(Formula::True, Formula::False)
    );
}

#[test]
fn quoted_atoms_are_normalized() {
    let p = parse_problem("fof('a1', axiom, 'p'('hello world')).").unwrap();
    assert_eq!(p.formulas[0].name, "a1");
    assert_eq!(
        p.formulas[0].formula,
        Formula::atom("p", vec![Term::constant("hello world")])
    );
    let printed = print_formula(&p.formulas[0].formula);
    assert_eq!(printed, "p('hello world')");
    assert_eq!(parse_formula(&printed).unwrap(), p.formulas[0].formula);
}

#[test]
fn include_resolves_against_search_path() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("lib")).unwrap();
    std::fs::write(dir.path().join("lib/ax.p"), "fof(ax, axiom, p(c)).\n").unwrap();
    let reader = ProblemReader::new(vec![dir.path().join("lib")]);
    let p = reader
        .parse_str("include('ax.p').\nfof(g, conjecture, p(c)).", None)
        .unwrap();
    assert_eq!(p.formulas.len(), 2);
    assert!(matches!(
        ProblemReader::default().parse_str("include('ax.p').", None),
        Err(ParseError::IncludeNotFound(_))
    ));
    std::fs::write(dir.path().join("loop.p"), "include('loop.p').\n").unwrap();
    assert!(matches!(
        ProblemReader::default().read_file(&dir.path().join("loop.p")),
        Err(ParseError::IncludeCycle(_))
    ));
}

#[test]
fn symbol_counts() {
    let f = parse_formula("p(f(c))").unwrap();
    let expect: BTreeMap<_, _> = [
        (sym("p", SymbolKind::Predicate, 1), 1),
        (sym("f", SymbolKind::Function, 1), 1),
        (sym("c", SymbolKind::Function, 0), 1),
    ]
    .into_iter()
    .collect();
    assert_eq!(symbols_of(&f), expect);

    let f = parse_formula("p(X) & p(X)").unwrap();
    assert_eq!(
        symbols_of(&f),
        [(sym("p", SymbolKind::Predicate, 1), 2)]
            .into_iter()
            .collect()
    );

    // q occurs twice, c twice, by hand
    let f = parse_formula("![X]: (q(X,c) | q(c,X))").unwrap();
    let expect: BTreeMap<_, _> = [
        (sym("q", SymbolKind::Predicate, 2), 2),
        (sym("c", SymbolKind::Function, 0), 2),
    ]
    .into_iter()
    .collect();
    assert_eq!(symbols_of(&f), expect);
}

#[test]
fn closure_is_idempotent() {
    let f = parse_formula("p(X, Y) => q(Y)")
        .unwrap()
        .universal_closure();
    assert!(f.is_closed());
    assert_eq!(f.clone().universal_closure(), f);
    assert_eq!(print_formula(&f), "![X]: ![Y]: (p(X,Y) => q(Y))");
}

#[test]
fn substitution_avoids_capture() {
    let f = parse_formula("?[Y]: p(X, Y)").unwrap();
    let map = [("X".to_string(), Term::var("Y"))].into_iter().collect();
    let g = f.substitute(&map);
    assert_eq!(g.free_vars(), vec!["Y".to_string()]);
}

// Random formula generator over a fixed signature so that arities stay consistent.
pub(crate) fn arb_term(vars: Vec<&'static str>) -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        proptest::sample::select(vars).prop_map(Term::var),
        proptest::sample::select(vec!["a", "b", "c"]).prop_map(Term::constant),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| Term::app("f", vec![t])),
            (inner.clone(), inner).prop_map(|(s, t)| Term::app("g", vec![s, t])),
        ]
    })
}

pub(crate) fn arb_formula() -> impl Strategy<Value = Formula> {
    let vars = vec!["X", "Y", "Z"];
    let atom = prop_oneof![
        Just(Formula::prop("r")),
        arb_term(vars.clone()).prop_map(|t| Formula::atom("p", vec![t])),
        (arb_term(vars.clone()), arb_term(vars.clone()))
            .prop_map(|(s, t)| Formula::atom("q", vec![s, t])),
        (arb_term(vars.clone()), arb_term(vars.clone())).prop_map(|(s, t)| Formula::equals(s, t)),
        Just(Formula::True),
        Just(Formula::False),
    ];
    atom.prop_recursive(4, 24, 2, move |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::iff(a, b)),
            (proptest::sample::select(vec!["X", "Y", "Z"]), inner.clone())
                .prop_map(|(v, b)| Formula::forall(v, b)),
            (proptest::sample::select(vec!["X", "Y", "Z"]), inner)
                .prop_map(|(v, b)| Formula::exists(v, b)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn print_parse_round_trip(f in arb_formula()) {
        let printed = print_formula(&f);
        let back = parse_formula(&printed).unwrap();
        prop_assert!(back.alpha_eq(&f), "{} reparsed as {}", printed, back);
    }
}

proptest! {
    #[test]
    fn closure_idempotent_prop(f in arb_formula()) {
        let c = f.universal_closure();
        prop_assert_eq!(c.clone().universal_closure(), c);
    }

    #[test]
    fn symbols_stable_under_alpha_renaming(f in arb_formula()) {
        let g = f.alpha_normalize_with("V");
        prop_assert_eq!(symbols_of(&f), symbols_of(&g));
    }
}

fn write_corpus(dir: &std::path::Path, manifest: &str, files: &[(&str, &str)]) {
    for (name, text) in files {
        std::fs::write(dir.join(name), text).unwrap();
    }
    std::fs::write(dir.join(MANIFEST_FILE), manifest).unwrap();
}

#[test]
fn corpus_backward_reference_is_valid() {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(
        dir.path(),
        "t1 t1.p :\nt2 t2.p : t1\nt3 t3.p : t1\n",
        &[
            ("t1.p", "fof(t1, conjecture, p(a))."),
            ("t2.p", "fof(t2, axiom, q(a))."),
            ("t3.p", "fof(t3, conjecture, p(b))."),
        ],
    );
    let c = Corpus::load(dir.path()).unwrap();
    assert_eq!(c.len(), 3);
    assert_eq!(
        c.items[2].references.as_deref(),
        Some(&["t1".to_string()][..])
    );
    assert_eq!(c.items[1].theorem.role, Role::Conjecture);
    assert_eq!(c.eligible(2), vec!["t1", "t2"]);
}

#[test]
fn corpus_forward_reference_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(
        dir.path(),
        "t1 t1.p : t2\nt2 t2.p :\n",
        &[
            ("t1.p", "fof(t1, conjecture, p)."),
            ("t2.p", "fof(t2, conjecture, q)."),
        ],
    );
    assert!(matches!(
        Corpus::load(dir.path()),
        Err(CorpusError::ForwardReference { .. })
    ));
    write_corpus(dir.path(), "t1 t1.p : t1\n", &[]);
    assert!(matches!(
        Corpus::load(dir.path()),
        Err(CorpusError::ForwardReference { .. })
    ));
    write_corpus(dir.path(), "t1 t1.p : nope\n", &[]);
    assert!(matches!(
        Corpus::load(dir.path()),
        Err(CorpusError::DanglingPremise { .. })
    ));
}

#[test]
fn corpus_split_overlap_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(
        dir.path(),
        "t1 t1.p :\nt2 t2.p :\n@split train t1\n@split test t1 t2\n",
        &[
            ("t1.p", "fof(t1, conjecture, p)."),
            ("t2.p", "fof(t2, conjecture, q)."),
        ],
    );
    assert!(matches!(
        Corpus::load(dir.path()),
        Err(CorpusError::OverlappingSplit(_))
    ));
    write_corpus(
        dir.path(),
        "t1 t1.p :\nt2 t2.p :\n@split train t1\n@split test t2\n",
        &[
            ("t1.p", "fof(t1, conjecture, ![X]: p(X))."),
            ("t2.p", "fof(t2, conjecture, ![Y]: p(Y))."),
        ],
    );
    assert!(matches!(
        Corpus::load(dir.path()),
        Err(CorpusError::DuplicateAcrossSplit { .. })
    ));
}

#[test]
fn corpus_write_then_load() {
    let dir = tempfile::tempdir().unwrap();
    let axioms = vec![AnnotatedFormula::new(
        "base",
        Role::Axiom,
        parse_formula("p(a)").unwrap(),
    )];
    let items = vec![
        CorpusItem {
            theorem: AnnotatedFormula::new(
                "t1",
                Role::Conjecture,
                parse_formula("p(a) | q").unwrap(),
            ),
            references: Some(vec!["base".into()]),
            tag: Some("train".into()),
        },
        CorpusItem {
            theorem: AnnotatedFormula::new(
                "t2",
                Role::Conjecture,
                parse_formula("q | p(a)").unwrap(),
            ),
            references: None,
            tag: None,
        },
    ];
    let c = Corpus::new(
        axioms,
        items,
        Some(Split {
            train: vec!["t1".into()],
            test: vec!["t2".into()],
        }),
    )
    .unwrap();
    c.write(dir.path()).unwrap();
    let back = Corpus::load(dir.path()).unwrap();
    assert_eq!(back.items, c.items);
    assert_eq!(back.axioms, c.axioms);
    assert_eq!(back.split, c.split);
}
