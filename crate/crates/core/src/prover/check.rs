//! Independent proof replay. Shares only the syntax types and the variable
//! naming convention with the search.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::fol::{Atom, ClauseId, ClauseSet, Literal, Term};

use super::proof::{copy_var, ProofObject, Step, Unifier};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("proof refers to unknown clause {0}")]
    UnknownClause(ClauseId),
}

type Subst = HashMap<String, Term>;

fn walk<'a>(mut t: &'a Term, s: &'a Subst) -> &'a Term {
    while let Term::Var(v) = t {
        match s.get(v) {
            Some(b) => t = b,
            None => break,
        }
    }
    t
}

fn occurs(v: &str, t: &Term, s: &Subst) -> bool {
    match walk(t, s) {
        Term::Var(w) => w == v,
        Term::App(_, args) => args.iter().any(|a| occurs(v, a, s)),
    }
}

fn unify(a: &Term, b: &Term, s: &mut Subst) -> bool {
    let a = walk(a, s).clone();
    let b = walk(b, s).clone();
    match (a, b) {
        (Term::Var(x), Term::Var(y)) if x == y => true,
        (Term::Var(x), t) | (t, Term::Var(x)) => {
            if occurs(&x, &t, s) {
                return false;
            }
            s.insert(x, t);
            true
        }
        (Term::App(f, fa), Term::App(g, ga)) => {
            f == g && fa.len() == ga.len() && fa.iter().zip(ga.iter()).all(|(x, y)| unify(x, y, s))
        }
    }
}

fn atom_parts(a: &Atom) -> (&str, Vec<&Term>) {
    match a {
        Atom::Pred(p, args) => (p.as_str(), args.iter().collect()),
        Atom::Eq(l, r) => ("=", vec![l, r]),
    }
}

/// Unifies `goal` with the complement of `other`.
fn connect(goal: &Literal, other: &Literal, s: &mut Subst) -> bool {
    if goal.sign == other.sign {
        return false;
    }
    let (p, pa) = atom_parts(&goal.atom);
    let (q, qa) = atom_parts(&other.atom);
    p == q && pa.len() == qa.len() && pa.iter().zip(qa.iter()).all(|(x, y)| unify(x, y, s))
}

fn resolve(t: &Term, s: &Subst) -> Term {
    match walk(t, s) {
        Term::Var(v) => Term::Var(v.clone()),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| resolve(a, s)).collect()),
    }
}

fn resolve_lit(l: &Literal, s: &Subst) -> Literal {
    Literal {
        sign: l.sign,
        atom: l.atom.map_terms(|t| resolve(t, s)),
    }
}

fn rename(lits: &[Literal], step: usize) -> Vec<Literal> {
    lits.iter()
        .map(|l| Literal {
            sign: l.sign,
            atom: l
                .atom
                .map_terms(|t| t.rename_vars(&mut |v| copy_var(v, step))),
        })
        .collect()
}

fn lit_vars(l: &Literal, out: &mut Vec<String>) {
    l.atom.collect_vars(out);
}

#[derive(Clone)]
struct Goal {
    lit: Literal,
    /// (literal, id of the extension that put it there)
    path: Vec<(Literal, usize)>,
}

enum Item {
    Goal(Goal),
    Closed(usize),
}

struct Pending {
    raw_goal: Literal,
    domain: Vec<String>,
    recorded_goal: Literal,
    unifier: Option<Unifier>,
}

/// Bijective variable correspondence between recorded and replayed terms.
#[derive(Default)]
struct Renaming {
    fwd: HashMap<String, String>,
    back: HashMap<String, String>,
}

impl Renaming {
    fn terms(&mut self, recorded: &Term, replayed: &Term) -> bool {
        match (recorded, replayed) {
            (Term::Var(a), Term::Var(b)) => match (self.fwd.get(a), self.back.get(b)) {
                (None, None) => {
                    self.fwd.insert(a.clone(), b.clone());
                    self.back.insert(b.clone(), a.clone());
                    true
                }
                (Some(x), Some(y)) => x == b && y == a,
                _ => false,
            },
            (Term::App(f, fa), Term::App(g, ga)) => {
                f == g
                    && fa.len() == ga.len()
                    && fa.iter().zip(ga.iter()).all(|(x, y)| self.terms(x, y))
            }
            _ => false,
        }
    }

    fn literals(&mut self, recorded: &Literal, replayed: &Literal) -> bool {
        if recorded.sign != replayed.sign {
            return false;
        }
        let (p, pa) = atom_parts(&recorded.atom);
        let (q, qa) = atom_parts(&replayed.atom);
        p == q && pa.len() == qa.len() && pa.iter().zip(qa.iter()).all(|(x, y)| self.terms(x, y))
    }
}

/// Replays `proof` against `clauses`. Returns `Ok(false)` for any step that
/// does not apply, a goal left open, a step left over, recorded literals or
/// unifiers that disagree with the replay, or a wrong premise list.
pub fn check_proof(proof: &ProofObject, clauses: &ClauseSet) -> Result<bool, CheckError> {
    for id in proof.clause_ids() {
        if clauses.get(id).is_none() {
            return Err(CheckError::UnknownClause(id));
        }
    }
    let mut steps = proof.steps.iter().enumerate();
    let Some((_, Step::Start { clause })) = steps.next() else {
        return Ok(false);
    };
    let start = clauses.get(*clause).unwrap();
    let mut used = BTreeSet::new();
    if start.is_premise() {
        used.insert(start.origin.clone());
    }
    let mut subst = Subst::new();
    let mut agenda: Vec<Item> = rename(&start.literals, 0)
        .into_iter()
        .rev()
        .map(|lit| {
            Item::Goal(Goal {
                lit,
                path: Vec::new(),
            })
        })
        .collect();
    // step index -> (goal literal, path ids at the time) for closed subtrees
    let mut closed: HashMap<usize, (Literal, Vec<usize>)> = HashMap::new();
    let mut open_steps: HashMap<usize, (Literal, Vec<usize>)> = HashMap::new();
    let mut pending = Vec::new();

    for (i, step) in steps {
        let goal = loop {
            match agenda.pop() {
                None => return Ok(false),
                Some(Item::Closed(k)) => {
                    if let Some(v) = open_steps.remove(&k) {
                        closed.insert(k, v);
                    }
                }
                Some(Item::Goal(g)) => break g,
            }
        };
        let path_ids: Vec<usize> = goal.path.iter().map(|p| p.1).collect();
        match step {
            Step::Start { .. } => return Ok(false),
            Step::Extension {
                goal: recorded,
                clause,
                literal,
                unifier,
            } => {
                let c = clauses.get(*clause).unwrap();
                if *literal >= c.literals.len() {
                    return Ok(false);
                }
                let copy = rename(&c.literals, i);
                if !connect(&goal.lit, &copy[*literal], &mut subst) {
                    return Ok(false);
                }
                if c.is_premise() {
                    used.insert(c.origin.clone());
                }
                let mut domain = Vec::new();
                lit_vars(&goal.lit, &mut domain);
                copy.iter().for_each(|l| lit_vars(l, &mut domain));
                pending.push(Pending {
                    raw_goal: goal.lit.clone(),
                    domain,
                    recorded_goal: recorded.clone(),
                    unifier: Some(unifier.clone()),
                });
                open_steps.insert(i, (goal.lit.clone(), path_ids));
                agenda.push(Item::Closed(i));
                let mut path = goal.path.clone();
                path.push((goal.lit.clone(), i));
                for (j, lit) in copy.into_iter().enumerate().rev() {
                    if j != *literal {
                        agenda.push(Item::Goal(Goal {
                            lit,
                            path: path.clone(),
                        }));
                    }
                }
            }
            Step::Reduction {
                goal: recorded,
                path_index,
                unifier,
            } => {
                let Some((other, _)) = goal.path.get(*path_index) else {
                    return Ok(false);
                };
                if !connect(&goal.lit, other, &mut subst) {
                    return Ok(false);
                }
                let mut domain = Vec::new();
                lit_vars(&goal.lit, &mut domain);
                lit_vars(other, &mut domain);
                pending.push(Pending {
                    raw_goal: goal.lit.clone(),
                    domain,
                    recorded_goal: recorded.clone(),
                    unifier: Some(unifier.clone()),
                });
                closed.insert(i, (goal.lit.clone(), path_ids));
            }
            Step::Lemma {
                goal: recorded,
                step,
            } => {
                let Some((lemma, lemma_path)) = closed.get(step) else {
                    return Ok(false);
                };
                if !path_ids.starts_with(lemma_path) {
                    return Ok(false);
                }
                if resolve_lit(lemma, &subst) != resolve_lit(&goal.lit, &subst) {
                    return Ok(false);
                }
                pending.push(Pending {
                    raw_goal: goal.lit.clone(),
                    domain: Vec::new(),
                    recorded_goal: recorded.clone(),
                    unifier: None,
                });
                closed.insert(i, (goal.lit.clone(), path_ids));
            }
        }
    }
    if agenda.iter().any(|it| matches!(it, Item::Goal(_))) {
        return Ok(false);
    }
    // lemma literals must stay equal under the final substitution
    for (i, step) in proof.steps.iter().enumerate() {
        if let Step::Lemma { step: k, .. } = step {
            let (a, _) = &closed[k];
            let (b, _) = &closed[&i];
            if resolve_lit(a, &subst) != resolve_lit(b, &subst) {
                return Ok(false);
            }
        }
    }
    let mut ren = Renaming::default();
    for p in &pending {
        if !ren.literals(&p.recorded_goal, &resolve_lit(&p.raw_goal, &subst)) {
            return Ok(false);
        }
        if let Some(u) = &p.unifier {
            let mut seen = BTreeSet::new();
            for (v, _) in u {
                if !p.domain.contains(v) || !seen.insert(v.clone()) {
                    return Ok(false);
                }
            }
            for v in &p.domain {
                let rec = u
                    .iter()
                    .find(|(w, _)| w == v)
                    .map(|(_, t)| t.clone())
                    .unwrap_or_else(|| Term::Var(v.clone()));
                if !ren.terms(&rec, &resolve(&Term::Var(v.clone()), &subst)) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(used == proof.used_premises)
}
