//! Conditional-independence statements.
//!
//! `X1,X2 _||_ Y1,sigma | Z1,Z2 ; regime=s`. Sides may be parenthesized;
//! `()` or `∅` is the empty set, `σ` is accepted for `sigma` and `⫫` for `_||_`.

use crate::ci::statement::{CiStatement, SIGMA};
use crate::dsl::lex::{lines, tokenize_line, Cursor, Tok};
use crate::error::{Error, Result, Span};

pub fn parse_ci(text: &str) -> Result<CiStatement> {
    let mut toks = Vec::new();
    let mut width = 0;
    for (i, line) in text.lines().enumerate() {
        toks.extend(tokenize_line(line, i + 1)?);
        width = line.chars().count();
    }
    if toks.is_empty() {
        return Err(Error::parse(Span::new(1, 1), "empty statement"));
    }
    let line = toks.last().map(|t| t.span.line).unwrap_or(1);
    let mut cur = Cursor::new(&toks, line, width);
    parse_statement(&mut cur)
}

/// One statement per non-empty line.
pub fn parse_premises(text: &str) -> Result<Vec<CiStatement>> {
    lines(text)?
        .into_iter()
        .map(|(line_no, len, toks)| parse_statement(&mut Cursor::new(&toks, line_no, len)))
        .collect()
}

struct Side {
    names: Vec<(String, Span)>,
    sigma: Option<Span>,
}

fn parse_side(cur: &mut Cursor) -> Result<Side> {
    let mut side = Side {
        names: Vec::new(),
        sigma: None,
    };
    loop {
        match cur.peek_tok() {
            None | Some(Tok::Indep) | Some(Tok::Pipe) | Some(Tok::Semicolon) => break,
            Some(Tok::Comma) | Some(Tok::LParen) | Some(Tok::RParen) => {
                cur.bump();
            }
            Some(Tok::Word(_)) => {
                let (w, span) = cur.word("variable")?;
                match w.as_str() {
                    "∅" => {}
                    SIGMA | "σ" => side.sigma = Some(span),
                    _ => {
                        if side.names.iter().any(|(n, _)| *n == w) {
                            return Err(Error::parse(span, format!("`{w}` listed twice")));
                        }
                        side.names.push((w, span));
                    }
                }
            }
            Some(t) => return Err(Error::parse(cur.span(), format!("unexpected {}", t.describe()))),
        }
    }
    Ok(side)
}

fn parse_statement(cur: &mut Cursor) -> Result<CiStatement> {
    let start = cur.span();
    let x = parse_side(cur)?;
    if let Some(span) = x.sigma {
        return Err(Error::parse(span, "`sigma` cannot appear on the left-hand side"));
    }
    cur.expect(&Tok::Indep)?;
    let y = parse_side(cur)?;
    let z = if cur.eat(&Tok::Pipe) {
        parse_side(cur)?
    } else {
        Side {
            names: Vec::new(),
            sigma: None,
        }
    };
    let mut regime = None;
    if cur.eat(&Tok::Semicolon) {
        let (key, key_span) = cur.word("`regime`")?;
        if key != "regime" && key != SIGMA && key != "σ" {
            return Err(Error::parse(key_span, format!("expected `regime=`, found `{key}`")));
        }
        cur.expect(&Tok::Equals)?;
        regime = Some(cur.word("regime id")?);
    }
    cur.finish()?;

    for (name, span) in &y.names {
        if x.names.iter().any(|(n, _)| n == name) {
            return Err(Error::parse(*span, format!("`{name}` appears on both sides")));
        }
    }
    if let (Some(_), Some(span)) = (y.sigma, z.sigma) {
        return Err(Error::parse(span, "`sigma` appears on both sides"));
    }
    let names = |s: &Side| s.names.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
    let stmt = CiStatement::new(names(&x), names(&y), names(&z), y.sigma.is_some(), z.sigma.is_some())
        .map_err(|e| Error::parse(start, e.to_string()))?;
    match regime {
        None => Ok(stmt),
        Some((id, span)) => stmt.in_regime(id).map_err(|e| Error::parse(span, e.to_string())),
    }
}
