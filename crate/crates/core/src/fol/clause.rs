use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::parser::Cursor;
use super::print::write_name;
use super::syntax::{Literal, Term};
use super::{ParseError, Tok};

/// Origin recorded on equality-axiom clauses.
pub const EQUALITY_ORIGIN: &str = "$equality";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClauseId(pub u32);

impl fmt::Display for ClauseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

impl ClauseId {
    pub fn parse(s: &str) -> Option<ClauseId> {
        s.strip_prefix('c')?.parse().ok().map(ClauseId)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClauseRole {
    Axiom,
    NegatedConjecture,
}

impl ClauseRole {
    pub fn as_str(self) -> &'static str {
        match self {
            ClauseRole::Axiom => "axiom",
            ClauseRole::NegatedConjecture => "negated_conjecture",
        }
    }
}

/// A disjunction of literals; variables are implicitly universal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clause {
    pub id: ClauseId,
    pub literals: Vec<Literal>,
    /// Name of the annotated formula this clause was derived from.
    pub origin: String,
    pub role: ClauseRole,
}

impl Clause {
    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        for l in &self.literals {
            l.atom.collect_vars(&mut out);
        }
        out
    }

    pub fn is_premise(&self) -> bool {
        self.role == ClauseRole::Axiom && self.origin != EQUALITY_ORIGIN
    }
}

/// Removes duplicate literals, renames variables to `X0, X1, ...` in
/// first-occurrence order, and reports tautologies as `None`.
pub fn normalize_literals(lits: Vec<Literal>) -> Option<Vec<Literal>> {
    let mut out: Vec<Literal> = Vec::with_capacity(lits.len());
    for l in lits {
        if out.iter().any(|o| o.atom == l.atom && o.sign != l.sign) {
            return None;
        }
        if !out.contains(&l) {
            out.push(l);
        }
    }
    let mut vars = Vec::new();
    for l in &out {
        l.atom.collect_vars(&mut vars);
    }
    let map: HashMap<String, Term> = vars
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), Term::Var(format!("X{i}"))))
        .collect();
    Some(out.iter().map(|l| l.substitute(&map)).collect())
}

impl fmt::Display for Clause {
    /// `cnf(c3, axiom, (p(X0) | ~q(X0)), origin).`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cnf({}, {}, ", self.id, self.role.as_str())?;
        write_literals(f, &self.literals)?;
        f.write_str(", ")?;
        write_name(f, &self.origin)?;
        f.write_str(").")
    }
}

pub fn write_literals(f: &mut impl fmt::Write, lits: &[Literal]) -> fmt::Result {
    if lits.is_empty() {
        return f.write_str("$false");
    }
    f.write_char('(')?;
    for (i, l) in lits.iter().enumerate() {
        if i > 0 {
            f.write_str(" | ")?;
        }
        write!(f, "{l}")?;
    }
    f.write_char(')')
}

/// An indexed clause set; `clauses[i].id == ClauseId(i)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClauseSet {
    pub clauses: Vec<Clause>,
}

impl ClauseSet {
    pub fn get(&self, id: ClauseId) -> Option<&Clause> {
        self.clauses.get(id.index()).filter(|c| c.id == id)
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Clause> {
        self.clauses.iter()
    }

    /// Appends a clause with the next free id.
    pub fn push(
        &mut self,
        literals: Vec<Literal>,
        origin: impl Into<String>,
        role: ClauseRole,
    ) -> ClauseId {
        let id = ClauseId(self.clauses.len() as u32);
        self.clauses.push(Clause {
            id,
            literals,
            origin: origin.into(),
            role,
        });
        id
    }

    pub fn has_conjecture(&self) -> bool {
        self.clauses
            .iter()
            .any(|c| c.role == ClauseRole::NegatedConjecture)
    }

    /// One clause per line in the dump format.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for c in &self.clauses {
            s.push_str(&c.to_string());
            s.push('\n');
        }
        s
    }

    /// Reads `cnf(...)` lines written by [`ClauseSet::dump`]. Ids must be
    /// consecutive from `c0`.
    pub fn parse_dump(text: &str) -> Result<ClauseSet, ParseError> {
        let mut cur = Cursor::new(text)?;
        let mut set = ClauseSet::default();
        while !cur.at_eof() {
            if !matches!(cur.peek(), Tok::Lower(w) if w == "cnf") {
                return Err(cur.error("expected `cnf(`"));
            }
            cur.next();
            cur.expect(Tok::LParen)?;
            let id_word = cur.name()?;
            let id = ClauseId::parse(&id_word)
                .ok_or_else(|| cur.error(format!("bad clause id `{id_word}`")))?;
            if id.index() != set.len() {
                return Err(cur.error(format!("clause id `{id}` out of sequence")));
            }
            cur.expect(Tok::Comma)?;
            let role = match cur.lower()?.as_str() {
                "axiom" => ClauseRole::Axiom,
                "negated_conjecture" => ClauseRole::NegatedConjecture,
                other => return Err(cur.error(format!("unknown clause role `{other}`"))),
            };
            cur.expect(Tok::Comma)?;
            let literals = cur.clause_literals()?;
            cur.expect(Tok::Comma)?;
            let origin = cur.name()?;
            cur.expect(Tok::RParen)?;
            cur.expect(Tok::Dot)?;
            set.push(literals, origin, role);
        }
        Ok(set)
    }
}
