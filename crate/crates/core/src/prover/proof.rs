//! Proof objects and their line-oriented text form.
//!
//! Grammar, one statement per line:
//!
//! ```text
//! proof     ::= step* premises
//! step      ::= "start(" id ")."
//!             | "ext(" id "," index "," literal "," unifier ")."
//!             | "red(" index "," literal "," unifier ")."
//!             | "lem(" index "," literal ")."
//! premises  ::= "premises(" [name ("," name)*] ")."
//! unifier   ::= "[" [var ":=" term ("," var ":=" term)*] "]"
//! ```
//!
//! Steps are listed in depth-first order: each step closes the leftmost open
//! goal. The clause copy introduced by step `k` renames clause variable `V`
//! to `V_k`. Literals and unifier values are shown under the final
//! substitution.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::fol::{write_name, ClauseId, ClauseSet, Cursor, Literal, ParseError, Term, Tok};

pub type Unifier = Vec<(String, Term)>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Step {
    Start {
        clause: ClauseId,
    },
    Extension {
        goal: Literal,
        clause: ClauseId,
        literal: usize,
        unifier: Unifier,
    },
    /// Closes the goal against the path literal at `path_index` (0 is the root).
    Reduction {
        goal: Literal,
        path_index: usize,
        unifier: Unifier,
    },
    /// Closes the goal by an identical literal closed earlier at `step`.
    Lemma {
        goal: Literal,
        step: usize,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofObject {
    pub steps: Vec<Step>,
    pub used_premises: BTreeSet<String>,
}

/// Variable name of clause variable `var` in the copy made at step `step`.
pub fn copy_var(var: &str, step: usize) -> String {
    format!("{var}_{step}")
}

fn write_unifier(out: &mut impl fmt::Write, u: &Unifier) -> fmt::Result {
    out.write_char('[')?;
    for (i, (v, t)) in u.iter().enumerate() {
        if i > 0 {
            out.write_str(", ")?;
        }
        write!(out, "{v} := {t}")?;
    }
    out.write_char(']')
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Start { clause } => write!(f, "start({clause})."),
            Step::Extension {
                goal,
                clause,
                literal,
                unifier,
            } => {
                write!(f, "ext({clause}, {literal}, {goal}, ")?;
                write_unifier(f, unifier)?;
                f.write_str(").")
            }
            Step::Reduction {
                goal,
                path_index,
                unifier,
            } => {
                write!(f, "red({path_index}, {goal}, ")?;
                write_unifier(f, unifier)?;
                f.write_str(").")
            }
            Step::Lemma { goal, step } => write!(f, "lem({step}, {goal})."),
        }
    }
}

impl ProofObject {
    pub fn clause_ids(&self) -> impl Iterator<Item = ClauseId> + '_ {
        self.steps.iter().filter_map(|s| match s {
            Step::Start { clause } | Step::Extension { clause, .. } => Some(*clause),
            _ => None,
        })
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for step in &self.steps {
            writeln!(s, "{step}").unwrap();
        }
        s.push_str("premises(");
        for (i, p) in self.used_premises.iter().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            write_name(&mut s, p).unwrap();
        }
        s.push_str(").\n");
        s
    }

    pub fn parse(text: &str) -> Result<ProofObject, ParseError> {
        let mut cur = Cursor::new(text)?;
        let mut proof = ProofObject::default();
        let mut seen_premises = false;
        while !cur.at_eof() {
            if seen_premises {
                return Err(cur.error("nothing may follow `premises`"));
            }
            let kw = cur.lower()?;
            cur.expect(Tok::LParen)?;
            match kw.as_str() {
                "start" => {
                    let clause = clause_id(&mut cur)?;
                    proof.steps.push(Step::Start { clause });
                }
                "ext" => {
                    let clause = clause_id(&mut cur)?;
                    cur.expect(Tok::Comma)?;
                    let literal = cur.int()? as usize;
                    cur.expect(Tok::Comma)?;
                    let goal = cur.literal()?;
                    cur.expect(Tok::Comma)?;
                    let unifier = unifier(&mut cur)?;
                    proof.steps.push(Step::Extension {
                        goal,
                        clause,
                        literal,
                        unifier,
                    });
                }
                "red" => {
                    let path_index = cur.int()? as usize;
                    cur.expect(Tok::Comma)?;
                    let goal = cur.literal()?;
                    cur.expect(Tok::Comma)?;
                    let unifier = unifier(&mut cur)?;
                    proof.steps.push(Step::Reduction {
                        goal,
                        path_index,
                        unifier,
                    });
                }
                "lem" => {
                    let step = cur.int()? as usize;
                    cur.expect(Tok::Comma)?;
                    let goal = cur.literal()?;
                    proof.steps.push(Step::Lemma { goal, step });
                }
                "premises" => {
                    seen_premises = true;
                    if cur.peek() != &Tok::RParen {
                        loop {
                            proof.used_premises.insert(cur.name()?);
                            if !cur.eat(&Tok::Comma) {
                                break;
                            }
                        }
                    }
                }
                other => return Err(cur.error(format!("unknown proof statement `{other}`"))),
            }
            cur.expect(Tok::RParen)?;
            cur.expect(Tok::Dot)?;
        }
        if !seen_premises {
            return Err(cur.error("missing `premises` statement"));
        }
        Ok(proof)
    }
}

fn clause_id(cur: &mut Cursor) -> Result<ClauseId, ParseError> {
    let w = cur.lower()?;
    ClauseId::parse(&w).ok_or_else(|| cur.error(format!("bad clause id `{w}`")))
}

fn unifier(cur: &mut Cursor) -> Result<Unifier, ParseError> {
    cur.expect(Tok::LBracket)?;
    let mut out = Vec::new();
    if cur.eat(&Tok::RBracket) {
        return Ok(out);
    }
    loop {
        let v = match cur.next() {
            Tok::Upper(v) => v,
            _ => return Err(cur.error("expected a variable")),
        };
        cur.expect(Tok::Assign)?;
        out.push((v, cur.term()?));
        if !cur.eat(&Tok::Comma) {
            break;
        }
    }
    cur.expect(Tok::RBracket)?;
    Ok(out)
}

/// A self-contained proof file: the clause dump followed by the proof.
pub fn render_proof_file(clauses: &ClauseSet, proof: &ProofObject) -> String {
    let mut s = clauses.dump();
    s.push_str(&proof.render());
    s
}

pub fn parse_proof_file(text: &str) -> Result<(ClauseSet, ProofObject), ParseError> {
    let (mut cnf, mut rest) = (String::new(), String::new());
    for line in text.lines() {
        if line.trim_start().starts_with("cnf(") {
            cnf.push_str(line);
            cnf.push('\n');
        } else {
            rest.push_str(line);
            rest.push('\n');
        }
    }
    Ok((ClauseSet::parse_dump(&cnf)?, ProofObject::parse(&rest)?))
}
