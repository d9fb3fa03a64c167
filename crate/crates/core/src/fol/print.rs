use std::fmt::{self, Write};

use super::syntax::{AnnotatedFormula, Atom, Formula, Literal, Term};

/// True for names that can be printed bare as functors.
pub fn is_lower_word(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn is_upper_word(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_uppercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Writes a functor name, quoting it when it is not a plain lower word.
pub fn write_name(out: &mut impl Write, name: &str) -> fmt::Result {
    if is_lower_word(name) {
        out.write_str(name)
    } else {
        out.write_char('\'')?;
        for c in name.chars() {
            if c == '\'' || c == '\\' {
                out.write_char('\\')?;
            }
            out.write_char(c)?;
        }
        out.write_char('\'')
    }
}

fn write_args(f: &mut impl Write, name: &str, args: &[Term]) -> fmt::Result {
    write_name(f, name)?;
    if !args.is_empty() {
        f.write_char('(')?;
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                f.write_char(',')?;
            }
            write!(f, "{a}")?;
        }
        f.write_char(')')?;
    }
    Ok(())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::App(name, args) => write_args(f, name, args),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Pred(p, args) => write_args(f, p, args),
            Atom::Eq(l, r) => write!(f, "{l} = {r}"),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.atom, self.sign) {
            (a, true) => write!(f, "{a}"),
            (Atom::Eq(l, r), false) => write!(f, "{l} != {r}"),
            (a, false) => write!(f, "~{a}"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("$true"),
            Formula::False => f.write_str("$false"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Atom(Atom::Eq(l, r)) => write!(f, "{l} != {r}"),
                Formula::Atom(_) | Formula::True | Formula::False => write!(f, "~{inner}"),
                _ => write!(f, "~ {inner}"),
            },
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Implies(a, b) => write!(f, "({a} => {b})"),
            Formula::Iff(a, b) => write!(f, "({a} <=> {b})"),
            Formula::Forall(v, body) => write!(f, "![{v}]: {}", Unitary(body)),
            Formula::Exists(v, body) => write!(f, "?[{v}]: {}", Unitary(body)),
        }
    }
}

/// Quantifier bodies and negation arguments must be unitary; an equation
/// body is unitary in the grammar but reads better parenthesized.
struct Unitary<'a>(&'a Formula);

impl fmt::Display for Unitary<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Formula::Atom(Atom::Eq(..)) => write!(f, "({})", self.0),
            Formula::Not(inner) if matches!(inner.as_ref(), Formula::Atom(Atom::Eq(..))) => {
                write!(f, "({})", self.0)
            }
            other => write!(f, "{other}"),
        }
    }
}

/// Prints a formula in the problem syntax.
pub fn print_formula(f: &Formula) -> String {
    f.to_string()
}

impl fmt::Display for AnnotatedFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("fof(")?;
        write_name(f, &self.name)?;
        write!(f, ", {}, {}).", self.role.as_str(), self.formula)
    }
}
