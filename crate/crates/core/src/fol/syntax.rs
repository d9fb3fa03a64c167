use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

/// A first-order term. Constants are applications with no arguments.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Term::App(name.into(), Vec::new())
    }

    pub fn app(name: impl Into<String>, args: Vec<Term>) -> Self {
        Term::App(name.into(), args)
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn contains_var(&self, name: &str) -> bool {
        match self {
            Term::Var(v) => v == name,
            Term::App(_, args) => args.iter().any(|a| a.contains_var(name)),
        }
    }

    /// Pushes variables in first-occurrence order, without duplicates.
    pub fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(v) => {
                if !out.iter().any(|o| o == v) {
                    out.push(v.clone());
                }
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn substitute(&self, map: &HashMap<String, Term>) -> Term {
        match self {
            Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::App(f, args) => {
                Term::App(f.clone(), args.iter().map(|a| a.substitute(map)).collect())
            }
        }
    }

    pub fn rename_vars(&self, f: &mut impl FnMut(&str) -> String) -> Term {
        match self {
            Term::Var(v) => Term::Var(f(v)),
            Term::App(s, args) => {
                Term::App(s.clone(), args.iter().map(|a| a.rename_vars(f)).collect())
            }
        }
    }
}

/// Atomic formula: a predicate application or a built-in equation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Atom {
    Pred(String, Vec<Term>),
    Eq(Term, Term),
}

/// Name used for equality wherever a predicate symbol is expected.
pub const EQUALITY: &str = "=";

impl Atom {
    pub fn pred(name: impl Into<String>, args: Vec<Term>) -> Self {
        Atom::Pred(name.into(), args)
    }

    pub fn predicate(&self) -> &str {
        match self {
            Atom::Pred(p, _) => p,
            Atom::Eq(..) => EQUALITY,
        }
    }

    pub fn args(&self) -> Vec<&Term> {
        match self {
            Atom::Pred(_, args) => args.iter().collect(),
            Atom::Eq(l, r) => vec![l, r],
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Atom::Pred(_, args) => args.len(),
            Atom::Eq(..) => 2,
        }
    }

    pub fn collect_vars(&self, out: &mut Vec<String>) {
        for t in self.args() {
            t.collect_vars(out);
        }
    }

    pub fn map_terms(&self, mut f: impl FnMut(&Term) -> Term) -> Atom {
        match self {
            Atom::Pred(p, args) => Atom::Pred(p.clone(), args.iter().map(&mut f).collect()),
            Atom::Eq(l, r) => Atom::Eq(f(l), f(r)),
        }
    }

    pub fn substitute(&self, map: &HashMap<String, Term>) -> Atom {
        self.map_terms(|t| t.substitute(map))
    }
}

/// A signed atom.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub sign: bool,
    pub atom: Atom,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal { sign: true, atom }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal { sign: false, atom }
    }

    pub fn complement(&self) -> Literal {
        Literal {
            sign: !self.sign,
            atom: self.atom.clone(),
        }
    }

    pub fn substitute(&self, map: &HashMap<String, Term>) -> Literal {
        Literal {
            sign: self.sign,
            atom: self.atom.substitute(map),
        }
    }

    pub fn to_formula(&self) -> Formula {
        let a = Formula::Atom(self.atom.clone());
        if self.sign {
            a
        } else {
            Formula::not(a)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Forall(String, Box<Formula>),
    Exists(String, Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>, args: Vec<Term>) -> Self {
        Formula::Atom(Atom::Pred(name.into(), args))
    }

    pub fn prop(name: impl Into<String>) -> Self {
        Formula::atom(name, Vec::new())
    }

    pub fn equals(l: Term, r: Term) -> Self {
        Formula::Atom(Atom::Eq(l, r))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn forall(v: impl Into<String>, body: Formula) -> Self {
        Formula::Forall(v.into(), Box::new(body))
    }

    pub fn exists(v: impl Into<String>, body: Formula) -> Self {
        Formula::Exists(v.into(), Box::new(body))
    }

    /// Free variables in first-occurrence order.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut bound = Vec::new();
        self.free_vars_into(&mut bound, &mut out);
        out
    }

    fn free_vars_into(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => {
                let mut vs = Vec::new();
                a.collect_vars(&mut vs);
                for v in vs {
                    if !bound.contains(&v) && !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
            Formula::Not(f) => f.free_vars_into(bound, out),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => {
                a.free_vars_into(bound, out);
                b.free_vars_into(bound, out);
            }
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                bound.push(v.clone());
                body.free_vars_into(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Universally closes the formula over its free variables (in
    /// first-occurrence order, outermost first). Closed formulas are
    /// returned unchanged.
    pub fn universal_closure(self) -> Formula {
        let free = self.free_vars();
        free.into_iter()
            .rev()
            .fold(self, |acc, v| Formula::forall(v, acc))
    }

    /// Replaces free occurrences of variables with terms. Bound variables that
    /// would capture a variable of a substituted term are renamed.
    pub fn substitute(&self, map: &HashMap<String, Term>) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom(a) => Formula::Atom(a.substitute(map)),
            Formula::Not(f) => Formula::not(f.substitute(map)),
            Formula::And(a, b) => Formula::and(a.substitute(map), b.substitute(map)),
            Formula::Or(a, b) => Formula::or(a.substitute(map), b.substitute(map)),
            Formula::Implies(a, b) => Formula::implies(a.substitute(map), b.substitute(map)),
            Formula::Iff(a, b) => Formula::iff(a.substitute(map), b.substitute(map)),
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                let mut inner = map.clone();
                inner.remove(v);
                let captures = inner.values().any(|t| t.contains_var(v));
                let (v2, body2) = if captures {
                    let mut k = 0;
                    let fresh = loop {
                        let cand = format!("{v}_{k}");
                        if !inner.values().any(|t| t.contains_var(&cand))
                            && !body.free_vars().contains(&cand)
                        {
                            break cand;
                        }
                        k += 1;
                    };
                    inner.insert(v.clone(), Term::Var(fresh.clone()));
                    (fresh, body.substitute(&inner))
                } else {
                    (v.clone(), body.substitute(&inner))
                };
                if matches!(self, Formula::Forall(..)) {
                    Formula::forall(v2, body2)
                } else {
                    Formula::exists(v2, body2)
                }
            }
        }
    }

    /// Renames every bound variable to a canonical name determined by binding
    /// order (`B0`, `B1`, ...). Two formulas are alpha-equivalent iff their
    /// normal forms are identical. Free variables are left as they are.
    pub fn alpha_normalize(&self) -> Formula {
        let mut counter = 0usize;
        self.alpha_rec(&mut Vec::new(), &mut counter, "B")
    }

    /// Like [`Formula::alpha_normalize`] with a caller-chosen bound-variable prefix.
    pub fn alpha_normalize_with(&self, prefix: &str) -> Formula {
        let mut counter = 0usize;
        self.alpha_rec(&mut Vec::new(), &mut counter, prefix)
    }

    fn alpha_rec(
        &self,
        scope: &mut Vec<(String, String)>,
        counter: &mut usize,
        prefix: &str,
    ) -> Formula {
        let rename = |t: &Term, scope: &Vec<(String, String)>| {
            t.rename_vars(&mut |v: &str| {
                scope
                    .iter()
                    .rev()
                    .find(|(orig, _)| orig == v)
                    .map(|(_, new)| new.clone())
                    .unwrap_or_else(|| v.to_string())
            })
        };
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom(a) => Formula::Atom(a.map_terms(|t| rename(t, scope))),
            Formula::Not(f) => Formula::not(f.alpha_rec(scope, counter, prefix)),
            Formula::And(a, b) => Formula::and(
                a.alpha_rec(scope, counter, prefix),
                b.alpha_rec(scope, counter, prefix),
            ),
            Formula::Or(a, b) => Formula::or(
                a.alpha_rec(scope, counter, prefix),
                b.alpha_rec(scope, counter, prefix),
            ),
            Formula::Implies(a, b) => Formula::implies(
                a.alpha_rec(scope, counter, prefix),
                b.alpha_rec(scope, counter, prefix),
            ),
            Formula::Iff(a, b) => Formula::iff(
                a.alpha_rec(scope, counter, prefix),
                b.alpha_rec(scope, counter, prefix),
            ),
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                let new = format!("{prefix}{}", *counter);
                *counter += 1;
                scope.push((v.clone(), new.clone()));
                let body = body.alpha_rec(scope, counter, prefix);
                scope.pop();
                if matches!(self, Formula::Forall(..)) {
                    Formula::forall(new, body)
                } else {
                    Formula::exists(new, body)
                }
            }
        }
    }

    pub fn alpha_eq(&self, other: &Formula) -> bool {
        self.alpha_normalize() == other.alpha_normalize()
    }

    /// Visits every atom in the formula.
    pub fn for_each_atom<'a>(&'a self, f: &mut impl FnMut(&'a Atom)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => f(a),
            Formula::Not(g) | Formula::Forall(_, g) | Formula::Exists(_, g) => g.for_each_atom(f),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => {
                a.for_each_atom(f);
                b.for_each_atom(f);
            }
        }
    }

    /// Number of connectives and quantifiers.
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 1,
            Formula::Not(g) | Formula::Forall(_, g) | Formula::Exists(_, g) => 1 + g.size(),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => 1 + a.size() + b.size(),
        }
    }
}

/// Whether a symbol names a function (including constants) or a predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SymbolKind {
    Function,
    Predicate,
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolKind::Function => write!(f, "function"),
            SymbolKind::Predicate => write!(f, "predicate"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symbol {
    pub name: String,
    pub kind: SymbolKind,
    pub arity: usize,
}

/// Occurrence counts of every non-variable symbol. Equality counts as the
/// predicate `=`/2.
pub type SymbolCounts = BTreeMap<Symbol, usize>;

fn term_symbols(t: &Term, out: &mut SymbolCounts) {
    if let Term::App(f, args) = t {
        *out.entry(Symbol {
            name: f.clone(),
            kind: SymbolKind::Function,
            arity: args.len(),
        })
        .or_insert(0) += 1;
        args.iter().for_each(|a| term_symbols(a, out));
    }
}

pub fn atom_symbols(a: &Atom, out: &mut SymbolCounts) {
    *out.entry(Symbol {
        name: a.predicate().to_string(),
        kind: SymbolKind::Predicate,
        arity: a.arity(),
    })
    .or_insert(0) += 1;
    for t in a.args() {
        term_symbols(t, out);
    }
}

/// Symbol multiset of a formula.
pub fn symbols_of(f: &Formula) -> SymbolCounts {
    let mut out = SymbolCounts::new();
    f.for_each_atom(&mut |a| atom_symbols(a, &mut out));
    out
}

/// Symbol signature: name and kind to arity.
pub type Signature = BTreeMap<(String, SymbolKind), usize>;

/// Formula role in a problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Axiom,
    Definition,
    Hypothesis,
    Conjecture,
}

impl Role {
    pub fn parse(s: &str) -> Option<Role> {
        match s {
            "axiom" | "lemma" | "theorem" => Some(Role::Axiom),
            "definition" => Some(Role::Definition),
            "hypothesis" => Some(Role::Hypothesis),
            "conjecture" => Some(Role::Conjecture),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Axiom => "axiom",
            Role::Definition => "definition",
            Role::Hypothesis => "hypothesis",
            Role::Conjecture => "conjecture",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedFormula {
    pub name: String,
    pub role: Role,
    pub formula: Formula,
}

impl AnnotatedFormula {
    pub fn new(name: impl Into<String>, role: Role, formula: Formula) -> Self {
        AnnotatedFormula {
            name: name.into(),
            role,
            formula,
        }
    }

    pub fn with_role(&self, role: Role) -> Self {
        AnnotatedFormula {
            name: self.name.clone(),
            role,
            formula: self.formula.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub formulas: Vec<AnnotatedFormula>,
    /// Notes produced while reading, such as automatic closure of free variables.
    pub warnings: Vec<String>,
}

impl Problem {
    pub fn conjecture(&self) -> Option<&AnnotatedFormula> {
        self.formulas.iter().find(|f| f.role == Role::Conjecture)
    }

    pub fn premises(&self) -> impl Iterator<Item = &AnnotatedFormula> {
        self.formulas.iter().filter(|f| f.role != Role::Conjecture)
    }

    pub fn get(&self, name: &str) -> Option<&AnnotatedFormula> {
        self.formulas.iter().find(|f| f.name == name)
    }

    pub fn signature(&self) -> Result<Signature, ArityClash> {
        signature_of(self.formulas.iter().map(|f| &f.formula))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArityClash {
    pub symbol: String,
    pub kind: SymbolKind,
    pub first: usize,
    pub second: usize,
}

/// Collects a signature, failing on the first symbol used with two arities.
pub fn signature_of<'a>(
    formulas: impl IntoIterator<Item = &'a Formula>,
) -> Result<Signature, ArityClash> {
    let mut sig = Signature::new();
    for f in formulas {
        extend_signature(&mut sig, f)?;
    }
    Ok(sig)
}

pub fn extend_signature(sig: &mut Signature, f: &Formula) -> Result<(), ArityClash> {
    for sym in symbols_of(f).into_keys() {
        match sig.get(&(sym.name.clone(), sym.kind)) {
            Some(&a) if a != sym.arity => {
                return Err(ArityClash {
                    symbol: sym.name,
                    kind: sym.kind,
                    first: a,
                    second: sym.arity,
                });
            }
            Some(_) => {}
            None => {
                sig.insert((sym.name, sym.kind), sym.arity);
            }
        }
    }
    Ok(())
}

/// Distinct symbol names of a formula, ignoring kinds and arities.
pub fn symbol_names(f: &Formula) -> BTreeSet<String> {
    symbols_of(f).into_keys().map(|s| s.name).collect()
}
