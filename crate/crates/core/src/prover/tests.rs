use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::cnf::{clause_set, CnfConfig};
use crate::fol::{parse_problem, ClauseRole, Cursor, Term};
use crate::random::prop_clause_set;

fn set(axioms: &[&str], goals: &[&str]) -> ClauseSet {
    let mut s = ClauseSet::default();
    for (i, c) in axioms.iter().enumerate() {
        s.push(
            Cursor::new(c).unwrap().clause_literals().unwrap(),
            format!("ax{}", i + 1),
            ClauseRole::Axiom,
        );
    }
    for c in goals {
        s.push(
            Cursor::new(c).unwrap().clause_literals().unwrap(),
            "goal",
            ClauseRole::NegatedConjecture,
        );
    }
    s
}

fn truth_table_unsat(s: &ClauseSet) -> bool {
    let atoms: BTreeSet<String> = s
        .iter()
        .flat_map(|c| c.literals.iter().map(|l| l.atom.predicate().to_string()))
        .collect();
    let atoms: Vec<String> = atoms.into_iter().collect();
    !(0..1u32 << atoms.len()).any(|bits| {
        s.iter().all(|c| {
            c.literals.iter().any(|l| {
                let i = atoms.iter().position(|a| a == l.atom.predicate()).unwrap();
                (bits >> i & 1 == 1) == l.sign
            })
        })
    })
}

#[test]
fn modus_ponens() {
    let s = set(&["p", "(~p | q)"], &["~q"]);
    let r = prove(&s, &Limits::default(), None).unwrap();
    assert_eq!(r.status, Status::Proved);
    assert!(r.stats.depth <= 2);
    let proof = r.proof.unwrap();
    assert_eq!(
        proof.used_premises,
        ["ax1", "ax2"].iter().map(|s| s.to_string()).collect()
    );
    assert_eq!(check_proof(&proof, &s), Ok(true));
    assert_eq!(
        proof.render(),
        "start(c2).\next(c1, 1, ~q, []).\next(c0, 0, ~p, []).\npremises(ax1, ax2).\n"
    );

    let mut bad = proof.clone();
    if let Step::Extension { clause, .. } = &mut bad.steps[2] {
        *clause = ClauseId(2);
    }
    assert_eq!(check_proof(&bad, &s), Ok(false));
    if let Step::Extension { clause, .. } = &mut bad.steps[2] {
        *clause = ClauseId(9);
    }
    assert_eq!(
        check_proof(&bad, &s),
        Err(CheckError::UnknownClause(ClauseId(9)))
    );
}

#[test]
fn existential_goal_binds_witness() {
    let s = set(&["p(c)"], &["~p(X0)"]);
    let r = prove(&s, &Limits::default(), None).unwrap();
    let proof = r.proof.unwrap();
    match &proof.steps[1] {
        Step::Extension { unifier, goal, .. } => {
            assert_eq!(unifier, &vec![("X0_0".to_string(), Term::constant("c"))]);
            assert_eq!(goal.to_string(), "~p(c)");
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(check_proof(&proof, &s), Ok(true));
}

#[test]
fn random_propositional_sets_match_truth_table() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let limits = Limits {
        max_depth: 20,
        inferences: 1_000_000,
        ..Limits::default()
    };
    let (mut proved, mut csa) = (0, 0);
    for _ in 0..100 {
        let atoms = rng.gen_range(1..=4);
        let n = rng.gen_range(2..=9);
        let s = prop_clause_set(&mut rng, atoms, n, 1);
        let r = prove(&s, &limits, None).unwrap();
        let unsat = truth_table_unsat(&s);
        match r.status {
            Status::Proved => {
                assert!(unsat);
                assert_eq!(check_proof(r.proof.as_ref().unwrap(), &s), Ok(true));
                proved += 1;
            }
            Status::CounterSatisfiable => {
                assert!(!unsat);
                csa += 1;
            }
            other => panic!("{other:?} on\n{}", s.dump()),
        }
    }
    assert!(proved > 10 && csa > 10, "{proved} {csa}");
}

#[test]
fn counter_satisfiable_examples() {
    let m = counter_satisfiable(&set(&["p(c)"], &["~q(c)"]), 3).unwrap();
    assert_eq!(m.size, 1);
    assert_eq!(m.predicates["p"].values, vec![true]);
    assert_eq!(m.predicates["q"].values, vec![false]);
    assert!(counter_satisfiable(&set(&["p(X0)"], &["~p(c)"]), 4).is_none());
    let r = prove(&set(&["p(c)"], &["~q(c)"]), &Limits::default(), None).unwrap();
    assert_eq!(r.status, Status::CounterSatisfiable);
    assert!(r.model.is_some());
}

#[test]
fn deepening_needs_the_right_depth() {
    // chain q0 -> q1 -> ... -> q5 needs five nested extensions
    let axioms: Vec<String> = (0..5).map(|i| format!("(~q{i} | q{})", i + 1)).collect();
    let mut refs: Vec<&str> = axioms.iter().map(|s| s.as_str()).collect();
    refs.push("q0");
    let s = set(&refs, &["~q5"]);
    let shallow = prove(
        &s,
        &Limits {
            max_depth: 4,
            model_domain: 0,
            ..Limits::default()
        },
        None,
    )
    .unwrap();
    assert_eq!(shallow.status, Status::InferenceLimit);
    let deep = prove(
        &s,
        &Limits {
            max_depth: 5,
            ..Limits::default()
        },
        None,
    )
    .unwrap();
    assert_eq!(deep.status, Status::Proved);
    assert_eq!(deep.stats.depth, 5);
}

#[test]
fn inference_budget_is_respected() {
    let axioms: Vec<String> = (0..5).map(|i| format!("(~q{i} | q{})", i + 1)).collect();
    let mut refs: Vec<&str> = axioms.iter().map(|s| s.as_str()).collect();
    refs.push("q0");
    let s = set(&refs, &["~q5"]);
    let r = prove(
        &s,
        &Limits {
            inferences: 3,
            model_domain: 0,
            ..Limits::default()
        },
        None,
    )
    .unwrap();
    assert_eq!(r.status, Status::InferenceLimit);
    assert!(r.stats.inferences <= 4);
}

#[test]
fn first_order_with_equality() {
    let p = parse_problem(
        "fof(a1, axiom, ![X]: (man(X) => mortal(X))).\n\
         fof(a2, axiom, man(socrates)).\n\
         fof(a3, axiom, plato = socrates).\n\
         fof(g, conjecture, mortal(plato)).",
    )
    .unwrap();
    let s = clause_set(&p.formulas, &CnfConfig::default());
    let r = prove(&s, &Limits::default(), None).unwrap();
    assert_eq!(r.status, Status::Proved);
    let proof = r.proof.unwrap();
    assert_eq!(check_proof(&proof, &s), Ok(true));
    assert_eq!(
        proof.used_premises,
        ["a1", "a2", "a3"].iter().map(|s| s.to_string()).collect()
    );
    let text = render_proof_file(&s, &proof);
    let (s2, p2) = parse_proof_file(&text).unwrap();
    assert_eq!(s2, s);
    assert_eq!(p2, proof);
}

#[test]
fn determinism() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..20 {
        let s = prop_clause_set(&mut rng, 4, 8, 1);
        let a = prove(&s, &Limits::default(), None).unwrap();
        let b = prove(&s, &Limits::default(), None).unwrap();
        assert_eq!(
            (a.status, a.stats.inferences, a.stats.depth),
            (b.status, b.stats.inferences, b.stats.depth)
        );
        assert_eq!(a.proof, b.proof);
    }
}

#[test]
fn regularity_holds_on_traces() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let options = ProverOptions {
        trace: true,
        ..ProverOptions::default()
    };
    let mut entries = 0;
    for _ in 0..50 {
        let s = prop_clause_set(&mut rng, 4, 10, 2);
        let r = prove_with(&s, &Limits::default(), &options, None).unwrap();
        for t in &r.trace {
            entries += 1;
            assert!(!t.branch.contains(&t.goal));
            for (i, a) in t.branch.iter().enumerate() {
                assert!(!t.branch[i + 1..].contains(a));
            }
            assert_eq!(t.depth, t.branch.len() + 1);
        }
    }
    assert!(entries > 100);
}

struct Reverse;
impl Guide for Reverse {
    fn wants(&self, _: usize, n: usize) -> bool {
        n >= 2
    }
    fn advise(&self, p: &ChoicePoint<'_>) -> Result<Vec<ClauseId>, GuideError> {
        Ok(p.candidates.iter().rev().copied().collect())
    }
}

struct Broken(u8);
impl Guide for Broken {
    fn wants(&self, _: usize, _: usize) -> bool {
        true
    }
    fn advise(&self, p: &ChoicePoint<'_>) -> Result<Vec<ClauseId>, GuideError> {
        match self.0 {
            0 => Err(GuideError("offline".into())),
            1 => Ok(vec![p.candidates[0]; p.candidates.len() + 1]),
            _ => panic!("advisor crashed"),
        }
    }
}

#[test]
fn guidance_never_breaks_soundness() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    for _ in 0..60 {
        let s = prop_clause_set(&mut rng, 4, 10, 1);
        let r = prove(&s, &Limits::default(), Some(&Reverse)).unwrap();
        if let Some(p) = &r.proof {
            assert_eq!(check_proof(p, &s), Ok(true));
            assert_eq!(r.status, Status::Proved);
        }
        for c in &r.choices {
            let mut a = c.advised.clone();
            a.sort();
            let mut b = c.candidates.clone();
            b.sort();
            assert_eq!(a, b);
        }
    }
}

#[test]
fn broken_advisors_fall_back_to_input_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(59);
    let hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    for _ in 0..20 {
        let s = prop_clause_set(&mut rng, 4, 10, 1);
        let plain = prove(&s, &Limits::default(), None).unwrap();
        for kind in 0..3 {
            let r = prove(&s, &Limits::default(), Some(&Broken(kind))).unwrap();
            assert_eq!(r.status, plain.status);
            assert_eq!(r.stats.inferences, plain.stats.inferences);
            assert_eq!(r.proof, plain.proof);
        }
    }
    std::panic::set_hook(hook);
}

#[test]
fn lemmata_and_restricted_backtracking_stay_sound() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let mut lemma_steps = 0;
    for _ in 0..150 {
        let s = prop_clause_set(&mut rng, 4, 10, 1);
        for options in [
            ProverOptions {
                lemmata: true,
                ..Default::default()
            },
            ProverOptions {
                restricted_backtracking: true,
                ..Default::default()
            },
            ProverOptions {
                lemmata: true,
                restricted_backtracking: true,
                trace: false,
            },
        ] {
            let r = prove_with(&s, &Limits::default(), &options, None).unwrap();
            if let Some(p) = &r.proof {
                assert!(truth_table_unsat(&s));
                assert_eq!(check_proof(p, &s), Ok(true), "{}", p.render());
                lemma_steps += p
                    .steps
                    .iter()
                    .filter(|s| matches!(s, Step::Lemma { .. }))
                    .count();
            }
            if r.status == Status::CounterSatisfiable {
                assert!(!truth_table_unsat(&s));
            }
        }
    }
    assert!(lemma_steps > 0);
}

#[test]
fn checker_rejects_leftovers_and_extra_steps() {
    let s = set(&["p", "(~p | q)"], &["~q"]);
    let proof = prove(&s, &Limits::default(), None).unwrap().proof.unwrap();
    let mut short = proof.clone();
    short.steps.pop();
    assert_eq!(check_proof(&short, &s), Ok(false));
    let mut long = proof.clone();
    long.steps.push(proof.steps[2].clone());
    assert_eq!(check_proof(&long, &s), Ok(false));
    let mut premises = proof.clone();
    premises.used_premises.remove("ax1");
    assert_eq!(check_proof(&premises, &s), Ok(false));
}

#[test]
fn empty_clause_is_an_immediate_refutation() {
    let s = set(&["$false"], &["~q"]);
    let r = prove(&s, &Limits::default(), None).unwrap();
    assert_eq!(r.status, Status::Proved);
    assert_eq!(check_proof(r.proof.as_ref().unwrap(), &s), Ok(true));
}

#[test]
fn malformed_sets_are_errors() {
    let mut s = set(&["p(a)", "p(a,b)"], &[]);
    assert!(matches!(
        prove(&s, &Limits::default(), None),
        Err(ProverError::Malformed(_))
    ));
    s.clauses.truncate(1);
    s.clauses[0].id = ClauseId(5);
    assert!(matches!(
        prove(&s, &Limits::default(), None),
        Err(ProverError::Malformed(_))
    ));
    assert!(prove(
        &ClauseSet::default(),
        &Limits {
            inferences: 0,
            ..Limits::default()
        },
        None
    )
    .is_err());
}
