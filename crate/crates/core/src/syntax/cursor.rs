use super::{SyntaxError, SyntaxErrorKind};

/// Character cursor with line/column tracking. `#` starts a comment that
/// runs to the end of the line.
#[derive(Debug, Clone)]
pub(crate) struct Cursor<'s> {
    src: &'s str,
    pos: usize,
    line: usize,
    col: usize,
}

/// Characters that end a bare word.
pub(crate) fn is_delimiter(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '[' | ']' | '{' | '}' | ',' | '#')
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum SExpr {
    Atom(String, (usize, usize)),
    List(Vec<SExpr>, (usize, usize)),
}

impl SExpr {
    pub(crate) fn pos(&self) -> (usize, usize) {
        match self {
            SExpr::Atom(_, p) | SExpr::List(_, p) => *p,
        }
    }
}

impl<'s> Cursor<'s> {
    pub(crate) fn new(src: &'s str) -> Cursor<'s> {
        Cursor {
            src,
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    pub(crate) fn position(&self) -> (usize, usize) {
        (self.line, self.col)
    }

    pub(crate) fn error(&self, kind: SyntaxErrorKind) -> SyntaxError {
        SyntaxError::new(self.line, self.col, kind)
    }

    pub(crate) fn expected(&self, what: &str) -> SyntaxError {
        let found = match self.peek() {
            Some(c) => format!("`{c}`"),
            None => "end of input".to_string(),
        };
        self.error(SyntaxErrorKind::Parse(format!("expected {what}, found {found}")))
    }

    pub(crate) fn rest(&self) -> &'s str {
        &self.src[self.pos..]
    }

    pub(crate) fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    pub(crate) fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    pub(crate) fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                _ => return,
            }
        }
    }

    pub(crate) fn at_end(&mut self) -> bool {
        self.skip_trivia();
        self.peek().is_none()
    }

    /// Consumes `s` (after trivia) if it is next.
    pub(crate) fn eat(&mut self, s: &str) -> bool {
        self.skip_trivia();
        if self.rest().starts_with(s) {
            for _ in s.chars() {
                self.bump();
            }
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, s: &str) -> Result<(), SyntaxError> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.expected(&format!("`{s}`")))
        }
    }

    /// A maximal run of non-delimiter characters.
    pub(crate) fn word(&mut self) -> Option<String> {
        self.skip_trivia();
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if is_delimiter(c) {
                break;
            }
            out.push(c);
            self.bump();
        }
        (!out.is_empty()).then_some(out)
    }

    pub(crate) fn peek_word(&self) -> Option<String> {
        let mut probe = self.clone();
        probe.word()
    }

    /// Identifier: a letter or `_` followed by letters, digits, `_` or `'`.
    pub(crate) fn ident(&mut self) -> Option<String> {
        self.skip_trivia();
        let first = self.peek()?;
        if !(first.is_alphabetic() || first == '_') {
            return None;
        }
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' || c == '\'' {
                out.push(c);
                self.bump();
            } else {
                break;
            }
        }
        Some(out)
    }

    pub(crate) fn peek_ident(&self) -> Option<String> {
        let mut probe = self.clone();
        probe.ident()
    }

    /// Is the next identifier exactly the keyword `kw`?
    pub(crate) fn at_keyword(&self, kw: &str) -> bool {
        self.peek_ident().as_deref() == Some(kw)
    }

    pub(crate) fn sexpr(&mut self) -> Result<SExpr, SyntaxError> {
        self.skip_trivia();
        let pos = self.position();
        if self.eat("(") {
            let mut items = Vec::new();
            loop {
                self.skip_trivia();
                match self.peek() {
                    Some(')') => {
                        self.bump();
                        return Ok(SExpr::List(items, pos));
                    }
                    None => return Err(self.expected("`)`")),
                    _ => items.push(self.sexpr()?),
                }
            }
        }
        match self.word() {
            Some(w) => Ok(SExpr::Atom(w, pos)),
            None => Err(self.expected("a term")),
        }
    }
}
