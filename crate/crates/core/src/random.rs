//! Seeded generators for formulas and clause sets, shared by tests,
//! acceptance checks and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::fol::{Atom, ClauseRole, ClauseSet, Formula, Literal, Term};

/// A random propositional formula over atoms `p0..p{atoms-1}`.
pub fn prop_formula(rng: &mut impl Rng, atoms: usize, depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return Formula::prop(format!("p{}", rng.gen_range(0..atoms)));
    }
    let a = prop_formula(rng, atoms, depth - 1);
    match rng.gen_range(0..5) {
        0 => Formula::not(a),
        1 => Formula::and(a, prop_formula(rng, atoms, depth - 1)),
        2 => Formula::or(a, prop_formula(rng, atoms, depth - 1)),
        3 => Formula::implies(a, prop_formula(rng, atoms, depth - 1)),
        _ => Formula::iff(a, prop_formula(rng, atoms, depth - 1)),
    }
}

/// A random propositional clause set with `clauses` clauses of 1..=3
/// literals over `atoms` atoms. The last `goal_clauses` clauses are marked
/// as negated conjecture.
pub fn prop_clause_set(
    rng: &mut impl Rng,
    atoms: usize,
    clauses: usize,
    goal_clauses: usize,
) -> ClauseSet {
    let mut set = ClauseSet::default();
    for i in 0..clauses {
        let len = rng.gen_range(1..=3);
        let mut lits: Vec<Literal> = Vec::new();
        for _ in 0..len {
            let atom = Atom::Pred(format!("p{}", rng.gen_range(0..atoms)), Vec::new());
            let lit = Literal {
                sign: rng.gen_bool(0.5),
                atom,
            };
            if !lits.contains(&lit) {
                lits.push(lit);
            }
        }
        let role = if i + goal_clauses >= clauses {
            ClauseRole::NegatedConjecture
        } else {
            ClauseRole::Axiom
        };
        let origin = if role == ClauseRole::Axiom {
            format!("ax{i}")
        } else {
            "goal".to_string()
        };
        set.push(lits, origin, role);
    }
    set
}

/// Signature used by [`fo_formula`]: unary `p`, `q`, binary `r`, constant
/// `a` and unary function `f`.
pub struct SmallSignature {
    pub max_depth: usize,
    pub use_function: bool,
    pub use_equality: bool,
}

impl Default for SmallSignature {
    fn default() -> Self {
        SmallSignature {
            max_depth: 3,
            use_function: false,
            use_equality: false,
        }
    }
}

fn fo_term(rng: &mut impl Rng, sig: &SmallSignature, bound: &[String], depth: usize) -> Term {
    if sig.use_function && depth > 0 && rng.gen_bool(0.2) {
        return Term::app("f", vec![fo_term(rng, sig, bound, depth - 1)]);
    }
    if !bound.is_empty() && rng.gen_bool(0.75) {
        Term::Var(bound.choose(rng).unwrap().clone())
    } else {
        Term::constant("a")
    }
}

fn fo_atom(rng: &mut impl Rng, sig: &SmallSignature, bound: &[String]) -> Formula {
    let pick = if sig.use_equality {
        rng.gen_range(0..4)
    } else {
        rng.gen_range(0..3)
    };
    match pick {
        0 => Formula::atom("p", vec![fo_term(rng, sig, bound, 1)]),
        1 => Formula::atom("q", vec![fo_term(rng, sig, bound, 1)]),
        2 => Formula::atom(
            "r",
            vec![fo_term(rng, sig, bound, 1), fo_term(rng, sig, bound, 1)],
        ),
        _ => Formula::equals(fo_term(rng, sig, bound, 1), fo_term(rng, sig, bound, 1)),
    }
}

/// A random closed first-order formula over a tiny signature.
pub fn fo_formula(rng: &mut impl Rng, sig: &SmallSignature) -> Formula {
    let mut bound = Vec::new();
    let mut counter = 0;
    fo_rec(rng, sig, sig.max_depth, &mut bound, &mut counter)
}

fn fo_rec(
    rng: &mut impl Rng,
    sig: &SmallSignature,
    depth: usize,
    bound: &mut Vec<String>,
    counter: &mut usize,
) -> Formula {
    if depth == 0 || rng.gen_bool(0.2) {
        return fo_atom(rng, sig, bound);
    }
    match rng.gen_range(0..7) {
        0 => Formula::not(fo_rec(rng, sig, depth - 1, bound, counter)),
        1 => Formula::and(
            fo_rec(rng, sig, depth - 1, bound, counter),
            fo_rec(rng, sig, depth - 1, bound, counter),
        ),
        2 => Formula::or(
            fo_rec(rng, sig, depth - 1, bound, counter),
            fo_rec(rng, sig, depth - 1, bound, counter),
        ),
        3 => Formula::implies(
            fo_rec(rng, sig, depth - 1, bound, counter),
            fo_rec(rng, sig, depth - 1, bound, counter),
        ),
        4 => Formula::iff(
            fo_rec(rng, sig, depth - 1, bound, counter),
            fo_rec(rng, sig, depth - 1, bound, counter),
        ),
        k => {
            let v = format!("X{}", *counter);
            *counter += 1;
            bound.push(v.clone());
            let body = fo_rec(rng, sig, depth - 1, bound, counter);
            bound.pop();
            if k == 5 {
                Formula::forall(v, body)
            } else {
                Formula::exists(v, body)
            }
        }
    }
}

/// Renames every bound variable of `f` to a fresh random-looking name,
/// producing an alpha-variant.
pub fn alpha_variant(rng: &mut impl Rng, f: &Formula) -> Formula {
    let tag: u32 = rng.gen_range(100..10_000);
    f.alpha_normalize_with(&format!("Q{tag}_"))
}
