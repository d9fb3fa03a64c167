use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fol::parse_formula;
use crate::models::FiniteModel;
use crate::random::{alpha_variant, fo_formula, SmallSignature};

fn f(s: &str) -> Formula {
    parse_formula(s).unwrap()
}

fn sym(pairs: &[(&str, f64)]) -> FeatureVector {
    pairs
        .iter()
        .map(|(s, w)| (Feature::Sym(s.to_string()), *w))
        .collect()
}

fn chain(pairs: &[(&str, f64)]) -> FeatureVector {
    pairs
        .iter()
        .map(|(s, w)| (s.parse::<Feature>().unwrap(), *w))
        .collect()
}

#[test]
fn symbol_counts() {
    assert_eq!(symbol_features(&f("p(c)")), sym(&[("p", 1.0), ("c", 1.0)]));
    assert_eq!(symbol_features(&f("p(X) & p(X)")), sym(&[("p", 2.0)]));
    let schema = f("re(plus(a,times(i,b))) = a & im(plus(a,times(i,b))) = b");
    assert_eq!(
        symbol_features(&schema),
        sym(&[
            ("re", 1.0),
            ("im", 1.0),
            ("plus", 2.0),
            ("times", 2.0),
            ("i", 2.0),
            ("a", 3.0),
            ("b", 3.0),
            ("=", 2.0)
        ])
    );
}

#[test]
fn structural_chains() {
    assert_eq!(
        structural_features(&f("p(f(c))"), 2),
        chain(&[("STR:p>f", 1.0), ("STR:f>c", 1.0)])
    );
    assert!(structural_features(&f("p(f(c))"), 3).get(&"STR:p>f>c".parse().unwrap()) == 1.0);
    assert_eq!(
        structural_features(&f("p(X)"), 2),
        chain(&[("STR:p>VAR", 1.0)])
    );
    assert_eq!(
        structural_features(&f("q(f(X), f(c))"), 2),
        chain(&[("STR:q>f", 2.0), ("STR:f>VAR", 1.0), ("STR:f>c", 1.0)])
    );
    assert!(structural_features(&f("p"), 2).is_empty());
}

#[test]
fn semantic_from_models() {
    assert!(semantic_features(&f("p(a)"), &ModelStore::new()).is_empty());
    let mut store = ModelStore::new();
    let mut m = FiniteModel::new(1);
    m.set_function("a", 0, vec![0]);
    m.set_predicate("p", 1, vec![true]);
    store.push(m);
    store.push(FiniteModel::new(1));
    assert_eq!(
        semantic_features(&f("p(a)"), &store),
        chain(&[("MOD:0:T", 1.0)])
    );
    assert_eq!(
        semantic_features(&f("~p(a)"), &store),
        chain(&[("MOD:0:F", 1.0)])
    );
}

#[test]
fn combine_sums_and_counts() {
    let a = sym(&[("p", 1.0)]);
    let b = chain(&[("STR:p>c", 2.0)]);
    let both = combine([&a, &b]);
    assert_eq!(both.len(), 2);
    assert_eq!(combine([&a, &FeatureVector::new()]), a);
    assert_eq!(combine([&a, &a]).get(&Feature::Sym("p".into())), 2.0);

    let g = f("![X]: (p(X) => q(f(X), c))");
    let mut store = ModelStore::new();
    let mut m = FiniteModel::new(2);
    m.set_function("c", 0, vec![1]);
    m.set_function("f", 1, vec![1, 0]);
    m.set_predicate("p", 1, vec![true, false]);
    m.set_predicate("q", 2, vec![false, true, false, false]);
    store.push(m);
    let parts = [
        symbol_features(&g),
        structural_features(&g, 2),
        semantic_features(&g, &store),
    ];
    assert_eq!(
        combine(&parts).len(),
        parts.iter().map(|p| p.len()).sum::<usize>()
    );
}

#[test]
fn display_round_trips() {
    for s in ["SYM:p", "SYM:=", "STR:p>f>VAR", "MOD:12:T", "MOD:0:F"] {
        let feat: Feature = s.parse().unwrap();
        assert_eq!(feat.to_string(), s);
    }
    assert!("XYZ:p".parse::<Feature>().is_err());
    assert!("STR:p".parse::<Feature>().is_err());
}

#[test]
fn alpha_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let sig = SmallSignature {
        max_depth: 4,
        use_function: true,
        use_equality: true,
    };
    let mut store = ModelStore::new();
    let mut m = FiniteModel::new(2);
    m.set_function("a", 0, vec![0]);
    m.set_function("f", 1, vec![1, 1]);
    m.set_predicate("p", 1, vec![true, false]);
    m.set_predicate("q", 1, vec![false, true]);
    m.set_predicate("r", 2, vec![true, false, false, true]);
    store.push(m);
    let cfg = FeatureConfig::default();
    for _ in 0..200 {
        let a = fo_formula(&mut rng, &sig);
        let b = alpha_variant(&mut rng, &a);
        let row = |x: &Formula| store.iter().map(|m| m.evaluate(x)).collect::<Vec<_>>();
        assert_eq!(
            cfg.extract(&a, Some(&row(&a))),
            cfg.extract(&b, Some(&row(&b)))
        );
    }
}

#[test]
fn adding_models_only_adds_columns() {
    let g = f("?[X]: p(X)");
    let mut store = ModelStore::new();
    let mut m = FiniteModel::new(1);
    m.set_predicate("p", 1, vec![false]);
    store.push(m);
    let before = semantic_features(&g, &store);
    let mut m2 = FiniteModel::new(2);
    m2.set_predicate("p", 1, vec![false, true]);
    store.push(m2);
    let after = semantic_features(&g, &store);
    for (k, w) in before.iter() {
        assert_eq!(after.get(k), w);
    }
    assert_eq!(after.len(), before.len() + 1);
}

#[test]
fn cache_round_trips() {
    let a = combine([
        &sym(&[("p", 2.0)]),
        &chain(&[("STR:p>c", 1.0), ("MOD:3:T", 1.0)]),
    ]);
    let text = write_cache([("t1", &a), ("t2", &FeatureVector::new())]);
    let back = read_cache(&text).unwrap();
    assert_eq!(
        back,
        vec![
            ("t1".to_string(), a),
            ("t2".to_string(), FeatureVector::new())
        ]
    );
}
