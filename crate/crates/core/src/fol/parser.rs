use std::collections::HashSet;
use std::path::{Path, PathBuf};

use super::lexer::{tokenize, Spanned, Tok};
use super::syntax::{AnnotatedFormula, Atom, Formula, Literal, Problem, Role, Term};
use super::ParseError;

/// Token cursor shared by every line-oriented reader in the crate.
pub struct Cursor {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Cursor {
    pub fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Cursor {
            toks: tokenize(text)?,
            pos: 0,
        })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn error(&self, msg: impl Into<String>) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError::syntax(s.line, s.col, msg)
    }

    pub fn position(&self) -> (usize, usize) {
        let s = &self.toks[self.pos];
        (s.line, s.col)
    }

    pub fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            Err(self.error(format!(
                "expected {}, found {}",
                tok.describe(),
                self.peek().describe()
            )))
        }
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.next();
            true
        } else {
            false
        }
    }

    /// A lower word, quoted atom or integer, used for formula and clause names.
    pub fn name(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Lower(s) | Tok::Quoted(s) => {
                self.next();
                Ok(s)
            }
            Tok::Int(n) => {
                self.next();
                Ok(n.to_string())
            }
            other => Err(self.error(format!("expected a name, found {}", other.describe()))),
        }
    }

    pub fn lower(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Lower(s) => {
                self.next();
                Ok(s)
            }
            other => Err(self.error(format!("expected a word, found {}", other.describe()))),
        }
    }

    pub fn int(&mut self) -> Result<u64, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.next();
                Ok(n)
            }
            other => Err(self.error(format!("expected an integer, found {}", other.describe()))),
        }
    }

    pub fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Upper(v) => {
                self.next();
                Ok(Term::Var(v))
            }
            Tok::Lower(f) | Tok::Quoted(f) => {
                self.next();
                let args = self.args()?;
                Ok(Term::App(f, args))
            }
            Tok::Int(_) => Err(self.error("numeric terms are not supported")),
            other => Err(self.error(format!("expected a term, found {}", other.describe()))),
        }
    }

    fn args(&mut self) -> Result<Vec<Term>, ParseError> {
        let mut args = Vec::new();
        if self.eat(&Tok::LParen) {
            loop {
                args.push(self.term()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RParen)?;
        }
        Ok(args)
    }

    /// Atomic formula: `$true`, `$false`, `p(..)`, `s = t` or `s != t`.
    fn atomic(&mut self) -> Result<Formula, ParseError> {
        if let Tok::Dollar(d) = self.peek().clone() {
            self.next();
            return match d.as_str() {
                "true" => Ok(Formula::True),
                "false" => Ok(Formula::False),
                _ => Err(self.error(format!("unsupported defined symbol `${d}`"))),
            };
        }
        let (line, col) = self.position();
        let lhs = self.term()?;
        match self.peek() {
            Tok::Eq => {
                self.next();
                let rhs = self.term()?;
                Ok(Formula::equals(lhs, rhs))
            }
            Tok::Neq => {
                self.next();
                let rhs = self.term()?;
                Ok(Formula::not(Formula::equals(lhs, rhs)))
            }
            _ => match lhs {
                Term::App(p, args) => Ok(Formula::atom(p, args)),
                Term::Var(v) => Err(ParseError::syntax(
                    line,
                    col,
                    format!("variable `{v}` used as a formula"),
                )),
            },
        }
    }

    pub fn unitary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Tok::Not => {
                self.next();
                Ok(Formula::not(self.unitary()?))
            }
            Tok::Bang | Tok::Question => {
                let universal = matches!(self.next(), Tok::Bang);
                self.expect(Tok::LBracket)?;
                let mut vars = Vec::new();
                loop {
                    match self.next() {
                        Tok::Upper(v) => vars.push(v),
                        other => {
                            return Err(self.error(format!(
                                "expected a variable, found {}",
                                other.describe()
                            )));
                        }
                    }
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RBracket)?;
                self.expect(Tok::Colon)?;
                let body = self.unitary()?;
                Ok(vars.into_iter().rev().fold(body, |acc, v| {
                    if universal {
                        Formula::forall(v, acc)
                    } else {
                        Formula::exists(v, acc)
                    }
                }))
            }
            Tok::LParen => {
                self.next();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            _ => self.atomic(),
        }
    }

    /// Full formula: unitary formulas joined by binary connectives. `&` and `|`
    /// chain associatively (left-nested); the others are non-associative.
    pub fn formula(&mut self) -> Result<Formula, ParseError> {
        let first = self.unitary()?;
        let op = self.peek().clone();
        match op {
            Tok::And | Tok::Or => {
                let mut acc = first;
                while self.eat(&op) {
                    let rhs = self.unitary()?;
                    acc = if op == Tok::And {
                        Formula::and(acc, rhs)
                    } else {
                        Formula::or(acc, rhs)
                    };
                }
                if is_binary(self.peek()) {
                    return Err(self.error("mixed binary connectives need parentheses"));
                }
                Ok(acc)
            }
            Tok::Implies | Tok::RevImplies | Tok::Iff | Tok::Xor | Tok::Nor | Tok::Nand => {
                self.next();
                let rhs = self.unitary()?;
                if is_binary(self.peek()) {
                    return Err(self.error("non-associative connective needs parentheses"));
                }
                Ok(match op {
                    Tok::Implies => Formula::implies(first, rhs),
                    Tok::RevImplies => Formula::implies(rhs, first),
                    Tok::Iff => Formula::iff(first, rhs),
                    Tok::Xor => Formula::not(Formula::iff(first, rhs)),
                    Tok::Nor => Formula::not(Formula::or(first, rhs)),
                    _ => Formula::not(Formula::and(first, rhs)),
                })
            }
            _ => Ok(first),
        }
    }

    /// A clause literal: an atomic formula, possibly negated with `~`.
    pub fn literal(&mut self) -> Result<Literal, ParseError> {
        let negated = self.eat(&Tok::Not);
        let f = self.atomic()?;
        let lit = match f {
            Formula::Atom(a) => Literal {
                sign: true,
                atom: a,
            },
            Formula::Not(inner) => match *inner {
                Formula::Atom(a) => Literal {
                    sign: false,
                    atom: a,
                },
                _ => unreachable!("atomic() only negates equations"),
            },
            _ => return Err(self.error("`$true`/`$false` are not literals")),
        };
        Ok(if negated { lit.complement() } else { lit })
    }

    /// `$false` (empty clause), a single literal, or a parenthesized disjunction.
    pub fn clause_literals(&mut self) -> Result<Vec<Literal>, ParseError> {
        if matches!(self.peek(), Tok::Dollar(d) if d == "false") {
            self.next();
            return Ok(Vec::new());
        }
        let paren = self.eat(&Tok::LParen);
        let mut lits = vec![self.literal()?];
        while self.eat(&Tok::Or) {
            lits.push(self.literal()?);
        }
        if paren {
            self.expect(Tok::RParen)?;
        }
        Ok(lits)
    }

    pub fn atom(&mut self) -> Result<Atom, ParseError> {
        match self.literal()? {
            Literal { sign: true, atom } => Ok(atom),
            _ => Err(self.error("expected an atom")),
        }
    }
}

fn is_binary(t: &Tok) -> bool {
    matches!(
        t,
        Tok::And
            | Tok::Or
            | Tok::Implies
            | Tok::RevImplies
            | Tok::Iff
            | Tok::Xor
            | Tok::Nor
            | Tok::Nand
    )
}

/// Parses a standalone formula.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut c = Cursor::new(text)?;
    let f = c.formula()?;
    if !c.at_eof() {
        return Err(c.error(format!("trailing input {}", c.peek().describe())));
    }
    Ok(f)
}

/// Reads problem text, resolving `include` directives first against the
/// including file's directory and then against the search path.
#[derive(Clone, Debug, Default)]
pub struct ProblemReader {
    pub search_path: Vec<PathBuf>,
}

impl ProblemReader {
    pub fn new(search_path: Vec<PathBuf>) -> Self {
        ProblemReader { search_path }
    }

    pub fn read_file(&self, path: &Path) -> Result<Problem, ParseError> {
        let mut acc = Accumulator::default();
        let mut stack = HashSet::new();
        self.read_into(path, &mut acc, &mut stack)?;
        acc.finish()
    }

    pub fn parse_str(&self, text: &str, base: Option<&Path>) -> Result<Problem, ParseError> {
        let mut acc = Accumulator::default();
        let mut stack = HashSet::new();
        self.parse_into(text, base, &mut acc, &mut stack)?;
        acc.finish()
    }

    fn read_into(
        &self,
        path: &Path,
        acc: &mut Accumulator,
        stack: &mut HashSet<PathBuf>,
    ) -> Result<(), ParseError> {
        let canon = path.canonicalize().unwrap_or_else(|_| path.to_path_buf());
        if !stack.insert(canon.clone()) {
            return Err(ParseError::IncludeCycle(path.display().to_string()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| ParseError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        self.parse_into(&text, path.parent(), acc, stack)?;
        stack.remove(&canon);
        Ok(())
    }

    fn resolve(&self, file: &str, base: Option<&Path>) -> Option<PathBuf> {
        let direct = Path::new(file);
        if direct.is_absolute() {
            return direct.exists().then(|| direct.to_path_buf());
        }
        base.into_iter()
            .chain(self.search_path.iter().map(PathBuf::as_path))
            .map(|dir| dir.join(file))
            .find(|p| p.exists())
    }

    fn parse_into(
        &self,
        text: &str,
        base: Option<&Path>,
        acc: &mut Accumulator,
        stack: &mut HashSet<PathBuf>,
    ) -> Result<(), ParseError> {
        let mut c = Cursor::new(text)?;
        while !c.at_eof() {
            let (line, col) = c.position();
            let kw = c.lower()?;
            match kw.as_str() {
                "include" => {
                    c.expect(Tok::LParen)?;
                    let file = match c.next() {
                        Tok::Quoted(f) => f,
                        other => {
                            return Err(c.error(format!(
                                "expected a quoted file name, found {}",
                                other.describe()
                            )))
                        }
                    };
                    c.expect(Tok::RParen)?;
                    c.expect(Tok::Dot)?;
                    let path = self
                        .resolve(&file, base)
                        .ok_or_else(|| ParseError::IncludeNotFound(file.clone()))?;
                    self.read_into(&path, acc, stack)?;
                }
                "fof" => {
                    c.expect(Tok::LParen)?;
                    let name = c.name()?;
                    c.expect(Tok::Comma)?;
                    let (rl, rc) = c.position();
                    let role_word = c.lower()?;
                    let role = Role::parse(&role_word).ok_or(ParseError::UnknownRole {
                        line: rl,
                        col: rc,
                        role: role_word,
                    })?;
                    c.expect(Tok::Comma)?;
                    let formula = c.formula()?;
                    // optional source/useful-info annotations are skipped
                    if c.eat(&Tok::Comma) {
                        skip_annotation(&mut c)?;
                    }
                    c.expect(Tok::RParen)?;
                    c.expect(Tok::Dot)?;
                    acc.push(name, role, formula)?;
                }
                other => {
                    return Err(ParseError::syntax(
                        line,
                        col,
                        format!("unsupported statement `{other}`"),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn skip_annotation(c: &mut Cursor) -> Result<(), ParseError> {
    let mut depth = 0usize;
    loop {
        match c.peek() {
            Tok::Eof => return Err(c.error("unterminated annotation")),
            Tok::LParen | Tok::LBracket => depth += 1,
            Tok::RParen | Tok::RBracket if depth == 0 => return Ok(()),
            Tok::RParen | Tok::RBracket => depth -= 1,
            _ => {}
        }
        c.next();
    }
}

#[derive(Default)]
struct Accumulator {
    problem: Problem,
    names: HashSet<String>,
}

impl Accumulator {
    fn push(&mut self, name: String, role: Role, formula: Formula) -> Result<(), ParseError> {
        if !self.names.insert(name.clone()) {
            return Err(ParseError::DuplicateName(name));
        }
        if role == Role::Conjecture {
            if let Some(first) = self.problem.conjecture() {
                return Err(ParseError::MultipleConjectures {
                    first: first.name.clone(),
                    second: name,
                });
            }
        }
        let free = formula.free_vars();
        let formula = if free.is_empty() {
            formula
        } else {
            self.problem.warnings.push(format!(
                "{name}: free variable(s) {} universally closed",
                free.join(", ")
            ));
            formula.universal_closure()
        };
        self.problem.formulas.push(AnnotatedFormula {
            name,
            role,
            formula,
        });
        Ok(())
    }

    fn finish(self) -> Result<Problem, ParseError> {
        self.problem.signature().map_err(ParseError::from)?;
        Ok(self.problem)
    }
}

/// Parses problem text without include resolution beyond the working directory.
pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    ProblemReader::default().parse_str(text, None)
}
