//! S-expression reader for SMT-LIB2 text.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Atom {
    /// Simple or `|quoted|` symbol, stored without bars.
    Symbol(String),
    /// `:keyword`, stored without the colon.
    Keyword(String),
    Numeral(String),
    Decimal(String),
    Hex(String),
    Binary(String),
    Str(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExpr {
    Atom(Atom, Pos),
    List(Vec<SExpr>, Pos),
}

impl SExpr {
    pub fn pos(&self) -> Pos {
        match self {
            SExpr::Atom(_, p) | SExpr::List(_, p) => *p,
        }
    }

    pub fn symbol(&self) -> Option<&str> {
        match self {
            SExpr::Atom(Atom::Symbol(s), _) => Some(s),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items, _) => Some(items),
            _ => None,
        }
    }

    /// Head symbol of a list, if any.
    pub fn head(&self) -> Option<&str> {
        self.list().and_then(|l| l.first()).and_then(SExpr::symbol)
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Atom(a, _) => match a {
                Atom::Symbol(s) => f.write_str(&super::print::quote_symbol(s)),
                Atom::Keyword(k) => write!(f, ":{k}"),
                Atom::Numeral(s) | Atom::Decimal(s) => f.write_str(s),
                Atom::Hex(s) => write!(f, "#x{s}"),
                Atom::Binary(s) => write!(f, "#b{s}"),
                Atom::Str(s) => write!(f, "\"{}\"", s.replace('"', "\"\"")),
            },
            SExpr::List(items, _) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {msg}")]
pub struct LexError {
    pub pos: Pos,
    pub msg: String,
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl Reader<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn error<T>(&self, pos: Pos, msg: impl Into<String>) -> Result<T, LexError> {
        Err(LexError { pos, msg: msg.into() })
    }

    fn read(&mut self) -> Result<SExpr, LexError> {
        let start = self.pos;
        match self.peek() {
            None => self.error(start, "unexpected end of input"),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.peek() {
                        None => return self.error(start, "unclosed parenthesis"),
                        Some(')') => {
                            self.bump();
                            return Ok(SExpr::List(items, start));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(')') => self.error(start, "unexpected `)`"),
            Some('|') => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return self.error(start, "unterminated quoted symbol"),
                        Some('|') => return Ok(SExpr::Atom(Atom::Symbol(s), start)),
                        Some(c) => s.push(c),
                    }
                }
            }
            Some('"') => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return self.error(start, "unterminated string literal"),
                        Some('"') if self.peek() == Some('"') => {
                            self.bump();
                            s.push('"');
                        }
                        Some('"') => return Ok(SExpr::Atom(Atom::Str(s), start)),
                        Some(c) => s.push(c),
                    }
                }
            }
            Some(_) => {
                let mut tok = String::new();
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | ';' | '"' | '|') {
                        break;
                    }
                    tok.push(c);
                    self.bump();
                }
                classify_token(tok, start)
            }
        }
    }
}

fn classify_token(tok: String, pos: Pos) -> Result<SExpr, LexError> {
    let atom = if let Some(k) = tok.strip_prefix(':') {
        Atom::Keyword(k.to_string())
    } else if let Some(h) = tok.strip_prefix("#x") {
        if h.is_empty() || !h.chars().all(|c| c.is_ascii_hexdigit()) {
            return Err(LexError { pos, msg: format!("malformed hexadecimal `{tok}`") });
        }
        Atom::Hex(h.to_string())
    } else if let Some(b) = tok.strip_prefix("#b") {
        if b.is_empty() || !b.chars().all(|c| c == '0' || c == '1') {
            return Err(LexError { pos, msg: format!("malformed binary `{tok}`") });
        }
        Atom::Binary(b.to_string())
    } else if tok.chars().all(|c| c.is_ascii_digit()) {
        Atom::Numeral(tok)
    } else if tok.starts_with(|c: char| c.is_ascii_digit()) {
        let mut parts = tok.splitn(2, '.');
        let int = parts.next().unwrap_or("");
        let frac = parts.next();
        match frac {
            Some(f)
                if !f.is_empty()
                    && int.chars().all(|c| c.is_ascii_digit())
                    && f.chars().all(|c| c.is_ascii_digit()) =>
            {
                Atom::Decimal(tok)
            }
            _ => return Err(LexError { pos, msg: format!("malformed number `{tok}`") }),
        }
    } else {
        Atom::Symbol(tok)
    };
    Ok(SExpr::Atom(atom, pos))
}

/// Reads all top-level s-expressions from `text`.
pub fn parse_sexps(text: &str) -> Result<Vec<SExpr>, LexError> {
    let mut r = Reader {
        chars: text.chars().peekable(),
        pos: Pos { line: 1, col: 1 },
    };
    let mut out = Vec::new();
    loop {
        r.skip_trivia();
        if r.peek().is_none() {
            return Ok(out);
        }
        out.push(r.read()?);
    }
}
