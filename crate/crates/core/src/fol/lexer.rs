use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Lower(String),
    Upper(String),
    /// Single-quoted atom, unescaped.
    Quoted(String),
    Dollar(String),
    Int(u64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Colon,
    Assign,
    Not,
    And,
    Or,
    Implies,
    RevImplies,
    Iff,
    Xor,
    Nor,
    Nand,
    Eq,
    Neq,
    Bang,
    Question,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Lower(s) | Tok::Upper(s) => format!("`{s}`"),
            Tok::Quoted(s) => format!("'{s}'"),
            Tok::Dollar(s) => format!("`${s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("{other:?}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub fn tokenize(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! advance {
        ($n:expr) => {
            for _ in 0..$n {
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
        };
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance!(1);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                advance!(1);
            }
            continue;
        }
        if c == '/' && chars.get(i + 1).copied() == Some('*') {
            let (l0, c0) = (line, col);
            advance!(2);
            loop {
                if i >= chars.len() {
                    return Err(ParseError::syntax(l0, c0, "unterminated block comment"));
                }
                if chars[i] == '*' && chars.get(i + 1).copied() == Some('/') {
                    advance!(2);
                    break;
                }
                advance!(1);
            }
            continue;
        }
        let (l0, c0) = (line, col);
        let push = |out: &mut Vec<Spanned>, tok| {
            out.push(Spanned {
                tok,
                line: l0,
                col: c0,
            })
        };
        if c.is_ascii_alphabetic() || c == '$' {
            let start = i;
            advance!(1);
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance!(1);
            }
            let word: String = chars[start..i].iter().collect();
            let tok = if let Some(rest) = word.strip_prefix('$') {
                Tok::Dollar(rest.to_string())
            } else if c.is_ascii_uppercase() {
                Tok::Upper(word)
            } else {
                Tok::Lower(word)
            };
            push(&mut out, tok);
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance!(1);
            }
            let digits: String = chars[start..i].iter().collect();
            let n = digits
                .parse()
                .map_err(|_| ParseError::syntax(l0, c0, "integer out of range"))?;
            push(&mut out, Tok::Int(n));
            continue;
        }
        if c == '\'' {
            advance!(1);
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => return Err(ParseError::syntax(l0, c0, "unterminated quoted atom")),
                    Some('\'') => {
                        advance!(1);
                        break;
                    }
                    Some('\\') => {
                        advance!(1);
                        match chars.get(i) {
                            Some(&e) => {
                                s.push(e);
                                advance!(1);
                            }
                            None => {
                                return Err(ParseError::syntax(l0, c0, "unterminated quoted atom"))
                            }
                        }
                    }
                    Some(&ch) => {
                        s.push(ch);
                        advance!(1);
                    }
                }
            }
            if s.is_empty() {
                return Err(ParseError::syntax(l0, c0, "empty quoted atom"));
            }
            push(&mut out, Tok::Quoted(s));
            continue;
        }
        let three: String = chars[i..(i + 3).min(chars.len())].iter().collect();
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let (tok, len) = if three == "<=>" {
            (Tok::Iff, 3)
        } else if three == "<~>" {
            (Tok::Xor, 3)
        } else if two == "=>" {
            (Tok::Implies, 2)
        } else if two == "<=" {
            (Tok::RevImplies, 2)
        } else if two == "~|" {
            (Tok::Nor, 2)
        } else if two == "~&" {
            (Tok::Nand, 2)
        } else if two == "!=" {
            (Tok::Neq, 2)
        } else if two == ":=" {
            (Tok::Assign, 2)
        } else {
            let t = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                ':' => Tok::Colon,
                '~' => Tok::Not,
                '&' => Tok::And,
                '|' => Tok::Or,
                '=' => Tok::Eq,
                '!' => Tok::Bang,
                '?' => Tok::Question,
                other => {
                    return Err(ParseError::syntax(
                        l0,
                        c0,
                        format!("unexpected character `{other}`"),
                    ))
                }
            };
            (t, 1)
        };
        push(&mut out, tok);
        advance!(len);
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}
