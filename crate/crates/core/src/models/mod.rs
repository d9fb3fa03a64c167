//! Finite models: a small-domain model finder, a three-valued evaluator,
//! an append-only model store and the formula-by-model truth matrix.
//!
//! Equality is always interpreted as identity on the domain, so models
//! carry no table for `=`.

mod finder;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fol::{
    write_name, Atom, Clause, Cursor, Formula, Literal, ParseError, Term, Tok, EQUALITY,
};

pub use finder::{
    find_model, find_model_in, FinderConfig, DEFAULT_CONFLICT_LIMIT, DEFAULT_GROUNDING_LIMIT,
    DEFAULT_MAX_DOMAIN,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("grounding would produce {count} instances (limit {limit})")]
    GroundingTooLarge { count: u64, limit: u64 },
    #[error("symbol `{0}` used with two arities")]
    ArityClash(String),
    #[error("model failed its own check on clause {0}")]
    SelfCheck(String),
    #[error("gave up at domain size {domain} after {limit} conflicts")]
    SearchLimit { domain: u32, limit: u64 },
}

/// Where a model came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub problem: String,
    pub iteration: usize,
}

/// A total table over `size^arity` argument tuples, indexed in mixed radix
/// with the first argument most significant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table<V> {
    pub arity: usize,
    pub values: Vec<V>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteModel {
    pub size: u32,
    pub functions: BTreeMap<String, Table<u32>>,
    pub predicates: BTreeMap<String, Table<bool>>,
    pub provenance: Option<Provenance>,
}

pub(crate) fn tuple_index(size: u32, args: &[u32]) -> usize {
    args.iter()
        .fold(0usize, |acc, &a| acc * size as usize + a as usize)
}

/// Three-valued truth: `Undefined` when the formula mentions a symbol the
/// model has no table for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Truth {
    True,
    False,
    Undefined,
}

impl From<bool> for Truth {
    fn from(b: bool) -> Self {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }
}

impl fmt::Display for Truth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Truth::True => "T",
            Truth::False => "F",
            Truth::Undefined => "U",
        })
    }
}

impl FiniteModel {
    pub fn new(size: u32) -> Self {
        FiniteModel {
            size,
            functions: BTreeMap::new(),
            predicates: BTreeMap::new(),
            provenance: None,
        }
    }

    pub fn with_provenance(mut self, problem: impl Into<String>, iteration: usize) -> Self {
        self.provenance = Some(Provenance {
            problem: problem.into(),
            iteration,
        });
        self
    }

    pub fn set_function(&mut self, name: impl Into<String>, arity: usize, values: Vec<u32>) {
        assert_eq!(values.len(), (self.size as usize).pow(arity as u32));
        self.functions.insert(name.into(), Table { arity, values });
    }

    pub fn set_predicate(&mut self, name: impl Into<String>, arity: usize, values: Vec<bool>) {
        assert_eq!(values.len(), (self.size as usize).pow(arity as u32));
        self.predicates.insert(name.into(), Table { arity, values });
    }

    fn has_function(&self, name: &str, arity: usize) -> bool {
        self.functions.get(name).is_some_and(|t| t.arity == arity)
    }

    fn has_predicate(&self, name: &str, arity: usize) -> bool {
        if name == EQUALITY && arity == 2 {
            return true;
        }
        self.predicates.get(name).is_some_and(|t| t.arity == arity)
    }

    fn term_defined(&self, t: &Term) -> bool {
        match t {
            Term::Var(_) => true,
            Term::App(f, args) => {
                self.has_function(f, args.len()) && args.iter().all(|a| self.term_defined(a))
            }
        }
    }

    fn atom_defined(&self, a: &Atom) -> bool {
        match a {
            Atom::Pred(p, args) => {
                self.has_predicate(p, args.len()) && args.iter().all(|t| self.term_defined(t))
            }
            Atom::Eq(l, r) => self.term_defined(l) && self.term_defined(r),
        }
    }

    pub fn defines(&self, f: &Formula) -> bool {
        let mut ok = true;
        f.for_each_atom(&mut |a| ok &= self.atom_defined(a));
        ok
    }

    fn term_value(&self, t: &Term, env: &[(&str, u32)]) -> u32 {
        match t {
            Term::Var(v) => env
                .iter()
                .rev()
                .find(|(n, _)| n == v)
                .map(|p| p.1)
                .unwrap_or(0),
            Term::App(f, args) => {
                let vals: Vec<u32> = args.iter().map(|a| self.term_value(a, env)).collect();
                self.functions[f].values[tuple_index(self.size, &vals)]
            }
        }
    }

    fn atom_value(&self, a: &Atom, env: &[(&str, u32)]) -> bool {
        match a {
            Atom::Eq(l, r) => self.term_value(l, env) == self.term_value(r, env),
            Atom::Pred(p, args) if p == EQUALITY && args.len() == 2 => {
                self.term_value(&args[0], env) == self.term_value(&args[1], env)
            }
            Atom::Pred(p, args) => {
                let vals: Vec<u32> = args.iter().map(|t| self.term_value(t, env)).collect();
                self.predicates[p].values[tuple_index(self.size, &vals)]
            }
        }
    }

    fn holds<'a>(&self, f: &'a Formula, env: &mut Vec<(&'a str, u32)>) -> bool {
        match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => self.atom_value(a, env),
            Formula::Not(g) => !self.holds(g, env),
            Formula::And(a, b) => self.holds(a, env) && self.holds(b, env),
            Formula::Or(a, b) => self.holds(a, env) || self.holds(b, env),
            Formula::Implies(a, b) => !self.holds(a, env) || self.holds(b, env),
            Formula::Iff(a, b) => self.holds(a, env) == self.holds(b, env),
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                let universal = matches!(f, Formula::Forall(..));
                for d in 0..self.size {
                    env.push((v.as_str(), d));
                    let r = self.holds(body, env);
                    env.pop();
                    if r != universal {
                        return !universal;
                    }
                }
                universal
            }
        }
    }

    /// Evaluates a formula; free variables are read universally.
    pub fn evaluate(&self, f: &Formula) -> Truth {
        if !self.defines(f) {
            return Truth::Undefined;
        }
        let mut env = Vec::new();
        let free = f.free_vars();
        if free.is_empty() {
            return self.holds(f, &mut env).into();
        }
        let closed = f.clone().universal_closure();
        self.holds(&closed, &mut env).into()
    }

    fn literals_hold(
        &self,
        lits: &[Literal],
        vars: &[String],
        env: &mut Vec<(String, u32)>,
    ) -> bool {
        if env.len() == vars.len() {
            let view: Vec<(&str, u32)> = env.iter().map(|(n, d)| (n.as_str(), *d)).collect();
            return lits
                .iter()
                .any(|l| self.atom_value(&l.atom, &view) == l.sign);
        }
        for d in 0..self.size {
            env.push((vars[env.len()].clone(), d));
            let ok = self.literals_hold(lits, vars, env);
            env.pop();
            if !ok {
                return false;
            }
        }
        true
    }

    /// Evaluates a clause as the universal closure of its disjunction.
    pub fn evaluate_literals(&self, lits: &[Literal]) -> Truth {
        if !lits.iter().all(|l| self.atom_defined(&l.atom)) {
            return Truth::Undefined;
        }
        let mut vars = Vec::new();
        for l in lits {
            l.atom.collect_vars(&mut vars);
        }
        self.literals_hold(lits, &vars, &mut Vec::new()).into()
    }

    pub fn evaluate_clause(&self, c: &Clause) -> Truth {
        self.evaluate_literals(&c.literals)
    }

    /// Textual table dump, one line per symbol.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        writeln!(s, "domain {}", self.size).unwrap();
        if let Some(p) = &self.provenance {
            s.push_str("provenance ");
            write_name(&mut s, &p.problem).unwrap();
            writeln!(s, " {}", p.iteration).unwrap();
        }
        for (name, t) in &self.functions {
            s.push_str("function ");
            write_name(&mut s, name).unwrap();
            write!(s, " {} :", t.arity).unwrap();
            for v in &t.values {
                write!(s, " {v}").unwrap();
            }
            s.push('\n');
        }
        for (name, t) in &self.predicates {
            s.push_str("predicate ");
            write_name(&mut s, name).unwrap();
            write!(s, " {} :", t.arity).unwrap();
            for v in &t.values {
                s.push_str(if *v { " T" } else { " F" });
            }
            s.push('\n');
        }
        s
    }

    /// Reads the format written by [`FiniteModel::dump`].
    pub fn parse_dump(text: &str) -> Result<FiniteModel, ParseError> {
        let mut cur = Cursor::new(text)?;
        if cur.lower()? != "domain" {
            return Err(cur.error("expected `domain`"));
        }
        let size = cur.int()? as u32;
        if size == 0 {
            return Err(cur.error("domain size must be positive"));
        }
        let mut m = FiniteModel::new(size);
        while !cur.at_eof() {
            let kw = cur.lower()?;
            match kw.as_str() {
                "provenance" => {
                    let problem = cur.name()?;
                    let iteration = cur.int()? as usize;
                    m.provenance = Some(Provenance { problem, iteration });
                }
                "function" | "predicate" => {
                    let name = cur.name()?;
                    let arity = cur.int()? as usize;
                    cur.expect(Tok::Colon)?;
                    let want = (size as usize).pow(arity as u32);
                    if kw == "function" {
                        let mut values = Vec::with_capacity(want);
                        for _ in 0..want {
                            let v = cur.int()? as u32;
                            if v >= size {
                                return Err(cur.error(format!("value {v} outside the domain")));
                            }
                            values.push(v);
                        }
                        m.functions.insert(name, Table { arity, values });
                    } else {
                        let mut values = Vec::with_capacity(want);
                        for _ in 0..want {
                            match cur.next() {
                                Tok::Upper(t) if t == "T" => values.push(true),
                                Tok::Upper(t) if t == "F" => values.push(false),
                                _ => return Err(cur.error("expected T or F")),
                            }
                        }
                        m.predicates.insert(name, Table { arity, values });
                    }
                }
                other => return Err(cur.error(format!("unknown model line `{other}`"))),
            }
        }
        Ok(m)
    }
}

/// Append-only, index-stable collection of models.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelStore {
    models: Vec<FiniteModel>,
}

impl ModelStore {
    pub fn new() -> Self {
        ModelStore::default()
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&FiniteModel> {
        self.models.get(i)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, FiniteModel> {
        self.models.iter()
    }

    /// Appends a model and returns its index.
    pub fn push(&mut self, m: FiniteModel) -> usize {
        self.models.push(m);
        self.models.len() - 1
    }

    /// Appends unless a model with identical tables is already stored.
    pub fn push_unique(&mut self, m: FiniteModel) -> Option<usize> {
        let same = |o: &FiniteModel| {
            o.size == m.size && o.functions == m.functions && o.predicates == m.predicates
        };
        if self.models.iter().any(same) {
            None
        } else {
            Some(self.push(m))
        }
    }
}

/// Rows are formulas, columns are models of a store.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TruthMatrix {
    pub rows: Vec<Vec<Truth>>,
    pub columns: usize,
}

impl TruthMatrix {
    pub fn new(formulas: usize) -> Self {
        TruthMatrix {
            rows: vec![Vec::new(); formulas],
            columns: 0,
        }
    }

    pub fn get(&self, formula: usize, model: usize) -> Truth {
        self.rows[formula][model]
    }

    /// Evaluates only the columns for models added since the last update
    /// and rows for formulas added since.
    pub fn update(&mut self, store: &ModelStore, formulas: &[&Formula]) {
        use rayon::prelude::*;
        let old_rows = self.rows.len();
        let old_cols = self.columns;
        let models = &store.models;
        self.rows
            .par_iter_mut()
            .zip(formulas.par_iter())
            .for_each(|(row, f)| {
                row.extend(models[old_cols..].iter().map(|m| m.evaluate(f)));
            });
        let fresh: Vec<Vec<Truth>> = formulas[old_rows..]
            .par_iter()
            .map(|f| models.iter().map(|m| m.evaluate(f)).collect())
            .collect();
        self.rows.extend(fresh);
        self.columns = store.len();
    }
}

/// Full matrix of `evaluate(formula, model)` values.
pub fn evaluate_corpus(store: &ModelStore, formulas: &[&Formula]) -> TruthMatrix {
    let mut m = TruthMatrix::new(0);
    m.update(store, formulas);
    m
}
