//! The `.strategy` format, one rule per action.
//!
//! ```text
//! A1 := 1                 # always choose 1
//! A1 : 1/2 1/2            # static randomized rule
//! A2 | L1 L2 :            # rule reading the observed history
//!   0 0 -> 1/2 1/2
//!   0 1 := 1
//!   * := 0                # every row not listed above
//! ```

use std::fmt::Write as _;

use crate::dsl::lex::{lines, Cursor, Tok};
use crate::error::{Error, Result, Span};
use crate::model::{Kernel, RegimeModel, Row, VarId};
use crate::rational::{self, fmt_exact, Rational};
use crate::strategy::Strategy;

struct RawRule {
    action: VarId,
    parents: Vec<VarId>,
    rows: Vec<Option<Row>>,
    fallback: Option<Row>,
    span: Span,
}

pub fn parse_strategy(model: &RegimeModel, text: &str) -> Result<Strategy> {
    let mut rules: Vec<RawRule> = Vec::new();
    let var = |name: &str, span: Span| {
        model
            .var_id(name)
            .map_err(|_| Error::parse(span, format!("unknown variable `{name}`")))
    };
    for (line_no, len, toks) in lines(text)? {
        let mut cur = Cursor::new(&toks, line_no, len);
        // a header names an action; anything else is a row of the last rule
        let header = match (toks.first().map(|t| &t.tok), toks.get(1).map(|t| &t.tok)) {
            (Some(Tok::Word(w)), Some(Tok::Assign | Tok::Pipe | Tok::Colon)) => {
                model
                    .var_id(w)
                    .is_ok_and(|id| model.var(id).role == crate::model::Role::Action)
                    || !rules.last().is_some_and(|r| !r.parents.is_empty())
            }
            _ => false,
        };
        let indented_row = !header;
        if indented_row {
            let Some(rule) = rules.last_mut() else {
                return Err(Error::parse(cur.span(), "row outside a rule"));
            };
            parse_row(model, rule, &mut cur)?;
            continue;
        }
        let span = cur.span();
        let (name, name_span) = cur.word("action name")?;
        let action = var(&name, name_span)?;
        if model.var(action).role != crate::model::Role::Action {
            return Err(Error::parse(name_span, format!("`{name}` is not an action")));
        }
        if rules.iter().any(|r| r.action == action) {
            return Err(Error::parse(name_span, format!("second rule for `{name}`")));
        }
        let size = model.var(action).size();
        if cur.eat(&Tok::Assign) {
            let row = assign_row(model, action, &mut cur)?;
            rules.push(RawRule {
                action,
                parents: Vec::new(),
                rows: vec![Some(row)],
                fallback: None,
                span,
            });
            continue;
        }
        let mut parents = Vec::new();
        if cur.eat(&Tok::Pipe) {
            for (p, pspan) in cur.words() {
                let id = var(&p, pspan)?;
                if parents.contains(&id) {
                    return Err(Error::parse(pspan, format!("`{p}` listed twice")));
                }
                parents.push(id);
            }
        }
        cur.expect(&Tok::Colon)?;
        let rows_needed: usize = parents.iter().map(|&p| model.var(p).size()).product();
        let mut rule = RawRule {
            action,
            parents,
            rows: vec![None; rows_needed],
            fallback: None,
            span,
        };
        if !cur.at_end() {
            if !rule.parents.is_empty() {
                return Err(Error::parse(
                    cur.span(),
                    "a rule with history variables takes its rows on the following lines",
                ));
            }
            rule.rows[0] = Some(prob_row(size, &mut cur)?);
        }
        rules.push(rule);
    }
    let mut kernels = Vec::new();
    for rule in rules {
        let mut rows = Vec::new();
        for (index, row) in rule.rows.into_iter().enumerate() {
            match row.or_else(|| rule.fallback.clone()) {
                Some(r) => rows.push(r),
                None => {
                    let probe = Kernel::new(rule.action, rule.parents.clone(), Vec::new());
                    let labels = crate::model::row_labels(&model.variables, &probe, index);
                    return Err(Error::parse(
                        rule.span,
                        format!(
                            "rule for `{}` is missing the row for ({})",
                            model.var(rule.action).name,
                            labels.join(" ")
                        ),
                    ));
                }
            }
        }
        kernels.push(Kernel::new(rule.action, rule.parents, rows));
    }
    Strategy::new(model, kernels)
}

fn parse_row(model: &RegimeModel, rule: &mut RawRule, cur: &mut Cursor) -> Result<()> {
    let span = cur.span();
    let size = model.var(rule.action).size();
    let wildcard = cur.eat(&Tok::Star);
    let labels = if wildcard { Vec::new() } else { cur.words() };
    let row = if cur.eat(&Tok::Assign) {
        assign_row(model, rule.action, cur)?
    } else {
        cur.expect(&Tok::Arrow)?;
        prob_row(size, cur)?
    };
    if wildcard {
        if rule.fallback.replace(row).is_some() {
            return Err(Error::parse(span, "second `*` row"));
        }
        return Ok(());
    }
    if labels.len() != rule.parents.len() {
        return Err(Error::parse(
            span,
            format!(
                "row has {} history values, rule reads {} variables",
                labels.len(),
                rule.parents.len()
            ),
        ));
    }
    let mut index = 0;
    for ((label, lspan), &p) in labels.iter().zip(&rule.parents) {
        let v = model.var(p);
        let i = v
            .value_index(label)
            .ok_or_else(|| Error::parse(*lspan, format!("`{label}` is not a value of `{}`", v.name)))?;
        index = index * v.size() + i;
    }
    if rule.rows[index].replace(row).is_some() {
        return Err(Error::parse(span, "duplicate row"));
    }
    Ok(())
}

fn assign_row(model: &RegimeModel, action: VarId, cur: &mut Cursor) -> Result<Row> {
    let (label, span) = cur.word("action value")?;
    cur.finish()?;
    let v = model.var(action);
    let i = v
        .value_index(&label)
        .ok_or_else(|| Error::parse(span, format!("`{label}` is not a value of `{}`", v.name)))?;
    Ok(Row::Dist(
        (0..v.size())
            .map(|j| if j == i { rational::one() } else { rational::zero() })
            .collect(),
    ))
}

fn prob_row(size: usize, cur: &mut Cursor) -> Result<Row> {
    let span = cur.span();
    let words = cur.words();
    cur.finish()?;
    if words.len() != size {
        return Err(Error::parse(
            span,
            format!("expected {size} probabilities, found {}", words.len()),
        ));
    }
    let mut dist = Vec::new();
    for (w, wspan) in words {
        let p = rational::parse_rational(&w)
            .filter(|p| *p >= rational::zero() && *p <= rational::one())
            .ok_or_else(|| Error::parse(wspan, format!("`{w}` is not a probability")))?;
        dist.push(p);
    }
    let total: Rational = dist.iter().sum();
    if total != rational::one() {
        return Err(Error::parse(span, format!("row sums to {}, not 1", fmt_exact(&total))));
    }
    Ok(Row::Dist(dist))
}

/// Canonical text with every row written out.
pub fn strategy_to_source(model: &RegimeModel, strategy: &Strategy) -> String {
    let mut out = String::new();
    let probs = |r: &Row| {
        r.dist()
            .expect("strategy rows are distributions")
            .iter()
            .map(fmt_exact)
            .collect::<Vec<_>>()
            .join(" ")
    };
    for k in &strategy.rules {
        let name = &model.var(k.child).name;
        if k.parents.is_empty() {
            let _ = writeln!(out, "{name} : {}", probs(&k.rows[0]));
            continue;
        }
        let _ = writeln!(out, "{name} | {} :", model.names(&k.parents).join(" "));
        for (i, row) in k.rows.iter().enumerate() {
            let labels = crate::model::row_labels(&model.variables, k, i);
            let _ = writeln!(out, "  {} -> {}", labels.join(" "), probs(row));
        }
    }
    out
}
