//! Clausal normal form with content-addressed skolem and definition names.
//!
//! Pipeline: negation normal form, miniscoping, renaming binders apart,
//! skolemization, then distribution with definitional naming once a
//! disjunction would expand past the configured clause threshold.
//!
//! A skolem symbol is `sk_` followed by a 64-bit FNV-1a fingerprint of the
//! existential subformula, printed after its governing universal variables
//! are renamed by position and its bound variables are renamed by binding
//! order. Alpha-variant formulas therefore get the same skolem symbols in
//! every problem. Fingerprint collisions between unrelated subformulas are
//! accepted at 64-bit rarity.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::fol::{
    normalize_literals, AnnotatedFormula, Atom, Clause, ClauseId, ClauseRole, ClauseSet, Formula,
    Literal, Role, Signature, SymbolKind, Term, EQUALITY, EQUALITY_ORIGIN,
};

/// Estimated-clause-count threshold above which disjuncts are named.
pub const DEFAULT_DISTRIBUTION_THRESHOLD: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnfConfig {
    pub distribution_threshold: usize,
}

impl Default for CnfConfig {
    fn default() -> Self {
        CnfConfig {
            distribution_threshold: DEFAULT_DISTRIBUTION_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClausalForm {
    /// Clause ids are local (`c0..`) until the form is added to a [`ClauseSet`].
    pub clauses: Vec<Clause>,
    pub skolem_map: BTreeMap<String, u64>,
    pub source: String,
}

pub fn fingerprint(text: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    text.bytes()
        .fold(OFFSET, |h, b| (h ^ b as u64).wrapping_mul(PRIME))
}

/// Negation normal form: no implications or equivalences, negation only on atoms.
pub fn nnf(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => f.clone(),
        Formula::Not(g) => negate(g),
        Formula::And(a, b) => Formula::and(nnf(a), nnf(b)),
        Formula::Or(a, b) => Formula::or(nnf(a), nnf(b)),
        Formula::Implies(a, b) => Formula::or(negate(a), nnf(b)),
        Formula::Iff(a, b) => Formula::and(
            Formula::or(negate(a), nnf(b)),
            Formula::or(negate(b), nnf(a)),
        ),
        Formula::Forall(v, b) => Formula::forall(v.clone(), nnf(b)),
        Formula::Exists(v, b) => Formula::exists(v.clone(), nnf(b)),
    }
}

fn negate(f: &Formula) -> Formula {
    match f {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        Formula::Atom(_) => Formula::not(f.clone()),
        Formula::Not(g) => nnf(g),
        Formula::And(a, b) => Formula::or(negate(a), negate(b)),
        Formula::Or(a, b) => Formula::and(negate(a), negate(b)),
        Formula::Implies(a, b) => Formula::and(nnf(a), negate(b)),
        Formula::Iff(a, b) => Formula::and(
            Formula::or(nnf(a), nnf(b)),
            Formula::or(negate(a), negate(b)),
        ),
        Formula::Forall(v, b) => Formula::exists(v.clone(), negate(b)),
        Formula::Exists(v, b) => Formula::forall(v.clone(), negate(b)),
    }
}

/// Removes `$true`/`$false` below the top level of an NNF formula.
pub fn simplify(f: &Formula) -> Formula {
    match f {
        Formula::And(a, b) => match (simplify(a), simplify(b)) {
            (Formula::False, _) | (_, Formula::False) => Formula::False,
            (Formula::True, x) | (x, Formula::True) => x,
            (x, y) => Formula::and(x, y),
        },
        Formula::Or(a, b) => match (simplify(a), simplify(b)) {
            (Formula::True, _) | (_, Formula::True) => Formula::True,
            (Formula::False, x) | (x, Formula::False) => x,
            (x, y) => Formula::or(x, y),
        },
        Formula::Forall(v, b) => match simplify(b) {
            c @ (Formula::True | Formula::False) => c,
            c => Formula::forall(v.clone(), c),
        },
        Formula::Exists(v, b) => match simplify(b) {
            c @ (Formula::True | Formula::False) => c,
            c => Formula::exists(v.clone(), c),
        },
        Formula::Not(g) => match g.as_ref() {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            _ => f.clone(),
        },
        _ => f.clone(),
    }
}

fn free_in(v: &str, f: &Formula) -> bool {
    f.free_vars().iter().any(|x| x == v)
}

/// Pushes quantifiers inward over an NNF formula and drops vacuous ones.
pub fn miniscope(f: &Formula) -> Formula {
    match f {
        Formula::And(a, b) => Formula::and(miniscope(a), miniscope(b)),
        Formula::Or(a, b) => Formula::or(miniscope(a), miniscope(b)),
        Formula::Forall(v, b) => push_quantifier(true, v, miniscope(b)),
        Formula::Exists(v, b) => push_quantifier(false, v, miniscope(b)),
        _ => f.clone(),
    }
}

fn push_quantifier(universal: bool, v: &str, body: Formula) -> Formula {
    if !free_in(v, &body) {
        return body;
    }
    let wrap = |b: Formula| {
        if universal {
            Formula::forall(v, b)
        } else {
            Formula::exists(v, b)
        }
    };
    match body {
        // the quantifier distributes over the matching connective
        Formula::And(a, b) if universal => {
            Formula::and(push_quantifier(true, v, *a), push_quantifier(true, v, *b))
        }
        Formula::Or(a, b) if !universal => {
            Formula::or(push_quantifier(false, v, *a), push_quantifier(false, v, *b))
        }
        Formula::And(a, b) | Formula::Or(a, b) => rebuild_one_sided(universal, v, a, b, wrap),
        other => wrap(other),
    }
}

fn rebuild_one_sided(
    universal: bool,
    v: &str,
    a: Box<Formula>,
    b: Box<Formula>,
    wrap: impl Fn(Formula) -> Formula,
) -> Formula {
    // Here the connective is `|` under a universal or `&` under an existential.
    let join = |x: Formula, y: Formula| {
        if universal {
            Formula::or(x, y)
        } else {
            Formula::and(x, y)
        }
    };
    match (free_in(v, &a), free_in(v, &b)) {
        (true, false) => join(push_quantifier(universal, v, *a), *b),
        (false, true) => join(*a, push_quantifier(universal, v, *b)),
        _ => wrap(join(*a, *b)),
    }
}

/// Renames every binder to a unique `V<n>` name.
fn rename_apart(f: &Formula) -> Formula {
    f.alpha_normalize_with("V")
}

/// Canonical text of `sub` with `deps` renamed positionally to `U0, U1, ...`.
fn canonical_text(sub: &Formula, deps: &[String]) -> String {
    let map: HashMap<String, Term> = deps
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), Term::Var(format!("U{i}"))))
        .collect();
    sub.substitute(&map).alpha_normalize_with("B").to_string()
}

pub fn skolem_name(hash: u64) -> String {
    format!("sk_{hash:016x}")
}

pub fn definition_name(hash: u64) -> String {
    format!("def_{hash:016x}")
}

/// Replaces existential quantifiers with canonically named skolem terms.
/// The input must be closed and in NNF.
pub fn skolemize(f: &Formula) -> Formula {
    skolemize_with_map(f).0
}

pub fn skolemize_with_map(f: &Formula) -> (Formula, BTreeMap<String, u64>) {
    let mut map = BTreeMap::new();
    let out = skolem_rec(f, &mut Vec::new(), &mut map);
    (out, map)
}

fn skolem_rec(
    f: &Formula,
    universals: &mut Vec<String>,
    map: &mut BTreeMap<String, u64>,
) -> Formula {
    match f {
        Formula::And(a, b) => Formula::and(
            skolem_rec(a, universals, map),
            skolem_rec(b, universals, map),
        ),
        Formula::Or(a, b) => Formula::or(
            skolem_rec(a, universals, map),
            skolem_rec(b, universals, map),
        ),
        Formula::Forall(v, b) => {
            universals.push(v.clone());
            let body = skolem_rec(b, universals, map);
            universals.pop();
            Formula::forall(v.clone(), body)
        }
        Formula::Exists(v, b) => {
            let free = f.free_vars();
            let deps: Vec<String> = universals
                .iter()
                .filter(|u| free.contains(u))
                .cloned()
                .collect();
            let hash = fingerprint(&canonical_text(f, &deps));
            let name = skolem_name(hash);
            map.insert(name.clone(), hash);
            let term = Term::App(name, deps.into_iter().map(Term::Var).collect());
            let body = b.substitute(&[(v.clone(), term)].into_iter().collect());
            skolem_rec(&body, universals, map)
        }
        _ => f.clone(),
    }
}

fn strip_universals(f: Formula) -> Formula {
    match f {
        Formula::Forall(_, b) => strip_universals(*b),
        Formula::And(a, b) => Formula::and(strip_universals(*a), strip_universals(*b)),
        Formula::Or(a, b) => Formula::or(strip_universals(*a), strip_universals(*b)),
        other => other,
    }
}

fn flatten_or(f: Formula, out: &mut Vec<Formula>) {
    match f {
        Formula::Or(a, b) => {
            flatten_or(*a, out);
            flatten_or(*b, out);
        }
        other => out.push(other),
    }
}

fn literal_of(f: &Formula) -> Literal {
    match f {
        Formula::Atom(a) => Literal::pos(a.clone()),
        Formula::Not(g) => match g.as_ref() {
            Formula::Atom(a) => Literal::neg(a.clone()),
            other => panic!("not in negation normal form: ~{other}"),
        },
        other => panic!("not a literal: {other}"),
    }
}

/// Estimated clause count under naive distribution, saturating.
pub fn estimate_clauses(f: &Formula) -> usize {
    match f {
        Formula::True => 0,
        Formula::And(a, b) => estimate_clauses(a).saturating_add(estimate_clauses(b)),
        Formula::Or(a, b) => estimate_clauses(a).saturating_mul(estimate_clauses(b)),
        _ => 1,
    }
}

struct Distributor {
    threshold: usize,
    definitions: Vec<Vec<Literal>>,
}

impl Distributor {
    /// Clauses of a quantifier-free NNF matrix without `$true`/`$false` inside.
    fn clauses(&mut self, f: Formula) -> Vec<Vec<Literal>> {
        match f {
            Formula::True => Vec::new(),
            Formula::False => vec![Vec::new()],
            Formula::And(a, b) => {
                let mut out = self.clauses(*a);
                out.extend(self.clauses(*b));
                out
            }
            Formula::Or(..) => {
                let mut disjuncts = Vec::new();
                flatten_or(f, &mut disjuncts);
                let mut sets: Vec<Vec<Vec<Literal>>> = Vec::with_capacity(disjuncts.len());
                let product = disjuncts
                    .iter()
                    .map(estimate_clauses)
                    .fold(1usize, usize::saturating_mul);
                for d in disjuncts {
                    let is_conjunctive = estimate_clauses(&d) > 1;
                    if product > self.threshold && is_conjunctive {
                        sets.push(vec![vec![self.define(d)]]);
                    } else {
                        sets.push(self.clauses(d));
                    }
                }
                let mut acc: Vec<Vec<Literal>> = vec![Vec::new()];
                for set in sets {
                    let mut next = Vec::with_capacity(acc.len() * set.len());
                    for prefix in &acc {
                        for c in &set {
                            let mut merged = prefix.clone();
                            merged.extend(c.iter().cloned());
                            next.push(merged);
                        }
                    }
                    acc = next;
                }
                acc
            }
            other => vec![vec![literal_of(&other)]],
        }
    }

    /// Names a disjunct `d` by a fresh predicate over its free variables and
    /// emits `~def(vs) | C` for each clause `C` of `d`.
    fn define(&mut self, d: Formula) -> Literal {
        let vars = d.free_vars();
        let hash = fingerprint(&format!("def:{}", canonical_text(&d, &vars)));
        let atom = Atom::Pred(
            definition_name(hash),
            vars.into_iter().map(Term::Var).collect(),
        );
        for mut c in self.clauses(d) {
            c.insert(0, Literal::neg(atom.clone()));
            self.definitions.push(c);
        }
        Literal::pos(atom)
    }
}

/// Front half of the pipeline: NNF, simplification, miniscoping,
/// binder renaming and skolemization.
pub fn prenex_free_skolem_form(f: &Formula) -> (Formula, BTreeMap<String, u64>) {
    let f = simplify(&nnf(f));
    let f = rename_apart(&miniscope(&f));
    skolemize_with_map(&f)
}

pub fn cnf(f: &Formula) -> ClausalForm {
    cnf_with(f, "", ClauseRole::Axiom, &CnfConfig::default())
}

/// Clausifies a closed formula. Clauses are deduplicated and normalized
/// with canonical variable names; tautologies are dropped.
pub fn cnf_with(f: &Formula, source: &str, role: ClauseRole, config: &CnfConfig) -> ClausalForm {
    let (sk, skolem_map) = prenex_free_skolem_form(f);
    let matrix = simplify(&strip_universals(sk));
    let mut dist = Distributor {
        threshold: config.distribution_threshold,
        definitions: Vec::new(),
    };
    let mut raw = dist.clauses(matrix);
    raw.extend(dist.definitions);
    let mut clauses: Vec<Clause> = Vec::new();
    for lits in raw {
        let Some(lits) = normalize_literals(lits) else {
            continue;
        };
        if clauses.iter().any(|c| c.literals == lits) {
            continue;
        }
        let id = ClauseId(clauses.len() as u32);
        clauses.push(Clause {
            id,
            literals: lits,
            origin: source.to_string(),
            role,
        });
    }
    ClausalForm {
        clauses,
        skolem_map,
        source: source.to_string(),
    }
}

/// Clausifies an annotated formula; conjectures are negated first.
pub fn clausify(af: &AnnotatedFormula, config: &CnfConfig) -> ClausalForm {
    if af.role == Role::Conjecture {
        cnf_with(
            &Formula::not(af.formula.clone()),
            &af.name,
            ClauseRole::NegatedConjecture,
            config,
        )
    } else {
        cnf_with(&af.formula, &af.name, ClauseRole::Axiom, config)
    }
}

fn vars(prefix: &str, n: usize) -> Vec<Term> {
    (1..=n).map(|i| Term::Var(format!("{prefix}{i}"))).collect()
}

fn eq(l: Term, r: Term) -> Atom {
    Atom::Eq(l, r)
}

/// Reflexivity, symmetry, transitivity and one congruence clause per
/// non-constant symbol; empty when the signature has no equality.
pub fn equality_axioms(sig: &Signature) -> Vec<Vec<Literal>> {
    if !sig.contains_key(&(EQUALITY.to_string(), SymbolKind::Predicate)) {
        return Vec::new();
    }
    let (x, y, z) = (Term::var("X"), Term::var("Y"), Term::var("Z"));
    let mut out = vec![
        vec![Literal::pos(eq(x.clone(), x.clone()))],
        vec![
            Literal::neg(eq(x.clone(), y.clone())),
            Literal::pos(eq(y.clone(), x.clone())),
        ],
        vec![
            Literal::neg(eq(x.clone(), y.clone())),
            Literal::neg(eq(y.clone(), z.clone())),
            Literal::pos(eq(x, z)),
        ],
    ];
    for ((name, kind), &arity) in sig {
        if arity == 0 || name == EQUALITY {
            continue;
        }
        let (xs, ys) = (vars("X", arity), vars("Y", arity));
        let mut c: Vec<Literal> = xs
            .iter()
            .zip(&ys)
            .map(|(a, b)| Literal::neg(eq(a.clone(), b.clone())))
            .collect();
        match kind {
            SymbolKind::Function => {
                c.push(Literal::pos(eq(
                    Term::App(name.clone(), xs),
                    Term::App(name.clone(), ys),
                )));
            }
            SymbolKind::Predicate => {
                c.push(Literal::neg(Atom::Pred(name.clone(), xs)));
                c.push(Literal::pos(Atom::Pred(name.clone(), ys)));
            }
        }
        out.push(c);
    }
    out
}

/// Signature of a list of clauses.
pub fn clause_signature<'a>(clauses: impl IntoIterator<Item = &'a Clause>) -> Signature {
    let mut sig = Signature::new();
    for c in clauses {
        for l in &c.literals {
            let mut counts = crate::fol::SymbolCounts::new();
            crate::fol::atom_symbols(&l.atom, &mut counts);
            for s in counts.into_keys() {
                sig.entry((s.name, s.kind)).or_insert(s.arity);
            }
        }
    }
    sig
}

/// Concatenates clausal forms into one indexed clause set and appends the
/// equality axioms when `=` occurs.
pub fn assemble<'a>(forms: impl IntoIterator<Item = &'a ClausalForm>) -> ClauseSet {
    let mut set = ClauseSet::default();
    for form in forms {
        for c in &form.clauses {
            set.push(c.literals.clone(), c.origin.clone(), c.role);
        }
    }
    let sig = clause_signature(&set.clauses);
    for lits in equality_axioms(&sig) {
        let lits = normalize_literals(lits).expect("equality axioms are not tautologies");
        set.push(lits, EQUALITY_ORIGIN, ClauseRole::Axiom);
    }
    set
}

/// Clausifies every formula of a problem and assembles the clause set.
pub fn clause_set(formulas: &[AnnotatedFormula], config: &CnfConfig) -> ClauseSet {
    let forms: Vec<ClausalForm> = formulas.iter().map(|f| clausify(f, config)).collect();
    assemble(&forms)
}
