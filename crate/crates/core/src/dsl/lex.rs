//! Line tokenizer shared by every text format.

use crate::error::{Error, Result, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Word(String),
    Colon,
    Pipe,
    Arrow,
    Assign,
    Equals,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semicolon,
    Star,
    Indep,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Colon => "`:`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Assign => "`:=`".into(),
            Tok::Equals => "`=`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semicolon => "`;`".into(),
            Tok::Star => "`*`".into(),
            Tok::Indep => "`_||_`".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '.' | '/' | '+' | '-' | '\'' | '∅')
}

/// Tokenizes one line; `#` starts a comment.
pub fn tokenize_line(line: &str, line_no: usize) -> Result<Vec<Token>> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let span = Span::new(line_no, i + 1);
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let starts = |pat: &str| pat.chars().enumerate().all(|(k, p)| chars.get(i + k) == Some(&p));
        let (tok, len) = if starts("_||_") {
            (Tok::Indep, 4)
        } else if c == '⫫' || c == '⊥' {
            (Tok::Indep, 1)
        } else if starts("->") || c == '→' {
            (Tok::Arrow, if c == '→' { 1 } else { 2 })
        } else if starts(":=") {
            (Tok::Assign, 2)
        } else {
            match c {
                ':' => (Tok::Colon, 1),
                '|' => (Tok::Pipe, 1),
                '=' => (Tok::Equals, 1),
                '{' => (Tok::LBrace, 1),
                '}' => (Tok::RBrace, 1),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                ',' => (Tok::Comma, 1),
                ';' => (Tok::Semicolon, 1),
                '*' => (Tok::Star, 1),
                c if is_word_char(c) => {
                    let start = i;
                    let mut end = i;
                    while end < chars.len() && is_word_char(chars[end]) {
                        if chars[end] == '-' && chars.get(end + 1) == Some(&'>') {
                            break;
                        }
                        end += 1;
                    }
                    let word: String = chars[start..end].iter().collect();
                    (Tok::Word(word), end - start)
                }
                other => return Err(Error::parse(span, format!("unexpected character `{other}`"))),
            }
        };
        out.push(Token { tok, span });
        i += len;
    }
    Ok(out)
}

/// Cursor over the tokens of one line.
pub struct Cursor<'a> {
    tokens: &'a [Token],
    pos: usize,
    line: usize,
    line_len: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(tokens: &'a [Token], line: usize, line_len: usize) -> Self {
        Cursor {
            tokens,
            pos: 0,
            line,
            line_len,
        }
    }

    pub fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    pub fn peek_tok(&self) -> Option<&'a Tok> {
        self.peek().map(|t| &t.tok)
    }

    pub fn bump(&mut self) -> Option<&'a Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    /// Span of the next token, or end of line.
    pub fn span(&self) -> Span {
        self.peek()
            .map(|t| t.span)
            .unwrap_or(Span::new(self.line, self.line_len + 1))
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek_tok() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: &Tok) -> Result<Span> {
        let span = self.span();
        match self.bump() {
            Some(t) if &t.tok == tok => Ok(t.span),
            Some(t) => Err(Error::parse(
                t.span,
                format!("expected {}, found {}", tok.describe(), t.tok.describe()),
            )),
            None => Err(Error::parse(
                span,
                format!("expected {}, found end of line", tok.describe()),
            )),
        }
    }

    pub fn word(&mut self, what: &str) -> Result<(String, Span)> {
        let span = self.span();
        match self.bump() {
            Some(Token {
                tok: Tok::Word(w),
                span,
            }) => Ok((w.clone(), *span)),
            Some(t) => Err(Error::parse(
                t.span,
                format!("expected {what}, found {}", t.tok.describe()),
            )),
            None => Err(Error::parse(span, format!("expected {what}, found end of line"))),
        }
    }

    /// Consecutive words (stops at the first non-word token).
    pub fn words(&mut self) -> Vec<(String, Span)> {
        let mut out = Vec::new();
        while let Some(Token {
            tok: Tok::Word(w),
            span,
        }) = self.peek()
        {
            out.push((w.clone(), *span));
            self.pos += 1;
        }
        out
    }

    pub fn finish(&self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(Error::parse(t.span, format!("unexpected {}", t.tok.describe()))),
        }
    }
}

/// Non-empty lines with their tokens, 1-based line numbers.
pub fn lines(text: &str) -> Result<Vec<(usize, usize, Vec<Token>)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let toks = tokenize_line(line, i + 1)?;
        if !toks.is_empty() {
            out.push((i + 1, line.chars().count(), toks));
        }
    }
    Ok(out)
}
