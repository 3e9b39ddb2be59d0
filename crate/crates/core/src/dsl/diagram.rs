//! The `.dag` format.
//!
//! ```text
//! nodes: sigma U A Y      # optional; fixes node order
//! sigma -> A
//! U -> A -> Y, U -> Y
//! ```
//!
//! Edges may be chained and separated by commas. Without a `nodes:` line,
//! nodes are declared by first use. `σ` is read as `sigma`.

use std::fmt::Write as _;

use crate::diagram::InfluenceDiagram;
use crate::dsl::lex::{lines, Cursor, Tok};
use crate::error::{Error, Result, Span};

pub fn parse_diagram(text: &str) -> Result<InfluenceDiagram> {
    let mut declared: Option<Vec<String>> = None;
    let mut seen: Vec<String> = Vec::new();
    let mut edges: Vec<(String, String, Span)> = Vec::new();
    let norm = |w: String| if w == "σ" { "sigma".to_string() } else { w };

    for (line_no, len, toks) in lines(text)? {
        let mut cur = Cursor::new(&toks, line_no, len);
        if matches!(cur.peek_tok(), Some(Tok::Word(w)) if w == "nodes")
            && toks.get(1).map(|t| &t.tok) == Some(&Tok::Colon)
        {
            let span = cur.span();
            cur.bump();
            cur.bump();
            if declared.is_some() || !seen.is_empty() {
                return Err(Error::parse(span, "`nodes:` must come first and only once"));
            }
            let mut names = Vec::new();
            while !cur.at_end() {
                if cur.eat(&Tok::Comma) {
                    continue;
                }
                let (w, wspan) = cur.word("node name")?;
                let w = norm(w);
                if names.contains(&w) {
                    return Err(Error::parse(wspan, format!("duplicate node `{w}`")));
                }
                names.push(w);
            }
            declared = Some(names);
            continue;
        }
        loop {
            let (mut from, mut from_span) = cur.word("node name")?;
            from = norm(from);
            let mut chained = false;
            while cur.eat(&Tok::Arrow) {
                let (to, to_span) = cur.word("node name")?;
                let to = norm(to);
                edges.push((from.clone(), to.clone(), to_span));
                for (name, span) in [(&from, from_span), (&to, to_span)] {
                    declare(&declared, &mut seen, name, span)?;
                }
                from = to;
                from_span = to_span;
                chained = true;
            }
            if !chained {
                // a bare node name declares an isolated node
                declare(&declared, &mut seen, &from, from_span)?;
            }
            if !cur.eat(&Tok::Comma) {
                break;
            }
        }
        cur.finish()?;
    }

    let nodes = declared.unwrap_or(seen);
    for (i, (a, b, span)) in edges.iter().enumerate() {
        if edges[..i].iter().any(|(c, d, _)| c == a && d == b) {
            return Err(Error::parse(*span, format!("duplicate edge {a} -> {b}")));
        }
    }
    let pairs: Vec<(String, String)> = edges.iter().map(|(a, b, _)| (a.clone(), b.clone())).collect();
    InfluenceDiagram::new(&nodes, &pairs).map_err(|e| match e {
        Error::InvalidDiagram(msg) => {
            let span = edges.last().map(|e| e.2).unwrap_or(Span::new(1, 1));
            Error::parse(span, msg)
        }
        other => other,
    })
}

fn declare(declared: &Option<Vec<String>>, seen: &mut Vec<String>, name: &str, span: Span) -> Result<()> {
    match declared {
        Some(names) if !names.iter().any(|n| n == name) => Err(Error::parse(span, format!("unknown node `{name}`"))),
        Some(_) => Ok(()),
        None => {
            if !seen.iter().any(|n| n == name) {
                seen.push(name.to_string());
            }
            Ok(())
        }
    }
}

/// Canonical text: a `nodes:` line, then one edge per line.
pub fn diagram_to_source(dag: &InfluenceDiagram) -> String {
    let names: Vec<&str> = dag.nodes().iter().map(|n| n.name.as_str()).collect();
    let mut out = format!("nodes: {}\n", names.join(" "));
    for (a, b) in dag.edges() {
        let _ = writeln!(out, "{a} -> {b}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counterexample_diagram() {
        let g = parse_diagram("σ -> A\nU -> A -> Y, U -> Y\n").unwrap();
        assert_eq!(g.nodes().len(), 4);
        assert_eq!(g.edges().len(), 4);
        assert_eq!(parse_diagram(&diagram_to_source(&g)).unwrap(), g);
    }

    #[test]
    fn empty_and_errors() {
        let g = parse_diagram("").unwrap();
        assert!(g.nodes().is_empty());
        let err = parse_diagram("A -> B, B -> A").unwrap_err();
        assert!(err.to_string().contains("cycle"), "{err}");
        assert!(err.span().is_some());
        let err = parse_diagram("A -> B\nA -> B\n").unwrap_err();
        assert_eq!(err.span(), Some(Span::new(2, 6)));
        let err = parse_diagram("nodes: A B\nA -> C\n").unwrap_err();
        assert!(err.to_string().contains("unknown node `C`"));
    }
}
