//! The `.model` format.
//!
//! ```text
//! # Counterexample with an unobserved allergy indicator
//! variables:
//!   U : unobserved {0, 1}
//!   A : action {0, 1}
//!   Y : outcome {0, 1}
//! order: U A Y
//!
//! shared:
//!   kernel U : 5/12 7/12
//!
//! regime o : observational
//!   kernel A | U :
//!     0 -> 3/5 2/5
//!     1 -> 1 0
//!   kernel Y | U A :
//!     0 0 -> 9/25 16/25
//!     ...
//!     1 1 -> *
//! ```
//!
//! Rows are keyed by parent labels; `*` marks a row the regime never reaches.
//! `shared:` kernels are copied into every regime.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::dsl::lex::{lines, Cursor, Tok};
use crate::error::{Error, Result, Span};
use crate::model::{Kernel, Regime, RegimeKind, RegimeModel, Role, Row, Variable};
use crate::rational::{self, fmt_exact, Rational};

struct RawVar {
    name: String,
    span: Span,
    role: Role,
    domain: Vec<String>,
}

struct RawRow {
    labels: Vec<(String, Span)>,
    probs: Option<Vec<(String, Span)>>,
    span: Span,
}

struct RawKernel {
    child: (String, Span),
    parents: Vec<(String, Span)>,
    rows: Vec<RawRow>,
    span: Span,
}

struct RawRegime {
    id: String,
    kind: RegimeKind,
    span: Span,
    kernels: Vec<RawKernel>,
}

enum Section {
    None,
    Variables,
    Shared,
    Regime(usize),
}

/// Parses and validates a model document.
pub fn parse_model(text: &str) -> Result<RegimeModel> {
    let mut vars: Vec<RawVar> = Vec::new();
    let mut order: Option<Vec<(String, Span)>> = None;
    let mut shared: Vec<RawKernel> = Vec::new();
    let mut regimes: Vec<RawRegime> = Vec::new();
    let mut section = Section::None;

    for (line_no, len, toks) in lines(text)? {
        let mut cur = Cursor::new(&toks, line_no, len);
        let first = match cur.peek_tok() {
            Some(Tok::Word(w)) => Some(w.as_str()),
            _ => None,
        };
        let header_colon = toks.len() == 2 && toks[1].tok == Tok::Colon;
        match first {
            Some("variables") if header_colon => {
                section = Section::Variables;
                continue;
            }
            Some("shared") if header_colon => {
                section = Section::Shared;
                continue;
            }
            Some("order") if toks.get(1).map(|t| &t.tok) == Some(&Tok::Colon) => {
                let span = cur.span();
                cur.bump();
                cur.bump();
                if order.is_some() {
                    return Err(Error::parse(span, "duplicate `order:` line"));
                }
                order = Some(cur.words());
                cur.finish()?;
                section = Section::None;
                continue;
            }
            Some("regime") => {
                let span = cur.span();
                cur.bump();
                let (id, id_span) = cur.word("regime id")?;
                cur.expect(&Tok::Colon)?;
                let (kind, kind_span) = cur.word("`observational` or `interventional`")?;
                cur.finish()?;
                let kind = match kind.as_str() {
                    "observational" => RegimeKind::Observational,
                    "interventional" => RegimeKind::Interventional,
                    other => return Err(Error::parse(kind_span, format!("unknown regime kind `{other}`"))),
                };
                if id == "sigma" {
                    return Err(Error::parse(id_span, "`sigma` is reserved for the regime indicator"));
                }
                if regimes.iter().any(|r| r.id == id) {
                    return Err(Error::parse(id_span, format!("duplicate regime `{id}`")));
                }
                regimes.push(RawRegime {
                    id,
                    kind,
                    span,
                    kernels: Vec::new(),
                });
                section = Section::Regime(regimes.len() - 1);
                continue;
            }
            Some("kernel") => {
                let kernel = parse_kernel_header(&mut cur)?;
                match section {
                    Section::Shared => shared.push(kernel),
                    Section::Regime(r) => regimes[r].kernels.push(kernel),
                    _ => {
                        return Err(Error::parse(
                            kernel.span,
                            "kernel outside a `shared:` or `regime` section",
                        ))
                    }
                }
                continue;
            }
            _ => {}
        }
        match section {
            Section::Variables => vars.push(parse_variable(&mut cur)?),
            Section::Shared | Section::Regime(_) => {
                let kernel = match section {
                    Section::Shared => shared.last_mut(),
                    Section::Regime(r) => regimes[r].kernels.last_mut(),
                    _ => unreachable!(),
                };
                let Some(kernel) = kernel else {
                    return Err(Error::parse(cur.span(), "row before any `kernel` line"));
                };
                kernel.rows.push(parse_row(&mut cur)?);
            }
            Section::None => {
                return Err(Error::parse(
                    cur.span(),
                    "expected a section header (`variables:`, `order:`, `shared:`, `regime`)",
                ));
            }
        }
    }
    build(vars, order, shared, regimes)
}

fn parse_variable(cur: &mut Cursor) -> Result<RawVar> {
    let (name, span) = cur.word("variable name")?;
    if name == "sigma" {
        return Err(Error::parse(span, "`sigma` is reserved for the regime indicator"));
    }
    cur.expect(&Tok::Colon)?;
    let (role, role_span) = cur.word("role")?;
    let role = Role::from_keyword(&role).ok_or_else(|| {
        Error::parse(
            role_span,
            format!("unknown role `{role}`; expected observable, action, unobserved or outcome"),
        )
    })?;
    cur.expect(&Tok::LBrace)?;
    let mut domain = Vec::new();
    loop {
        if cur.eat(&Tok::RBrace) {
            break;
        }
        let (label, label_span) = cur.word("domain value")?;
        if domain.contains(&label) {
            return Err(Error::parse(label_span, format!("duplicate value `{label}`")));
        }
        domain.push(label);
        if !cur.eat(&Tok::Comma) {
            cur.expect(&Tok::RBrace)?;
            break;
        }
    }
    cur.finish()?;
    if domain.is_empty() {
        return Err(Error::parse(span, format!("variable `{name}` has an empty domain")));
    }
    Ok(RawVar {
        name,
        span,
        role,
        domain,
    })
}

fn parse_kernel_header(cur: &mut Cursor) -> Result<RawKernel> {
    let span = cur.span();
    cur.bump();
    let child = cur.word("kernel variable")?;
    let parents = if cur.eat(&Tok::Pipe) { cur.words() } else { Vec::new() };
    cur.expect(&Tok::Colon)?;
    let mut rows = Vec::new();
    if !cur.at_end() {
        // inline row for a parentless kernel
        let row_span = cur.span();
        let probs = parse_probs(cur)?;
        rows.push(RawRow {
            labels: Vec::new(),
            probs,
            span: row_span,
        });
    }
    Ok(RawKernel {
        child,
        parents,
        rows,
        span,
    })
}

fn parse_row(cur: &mut Cursor) -> Result<RawRow> {
    let span = cur.span();
    let labels = cur.words();
    cur.expect(&Tok::Arrow)?;
    let probs = parse_probs(cur)?;
    Ok(RawRow { labels, probs, span })
}

fn parse_probs(cur: &mut Cursor) -> Result<Option<Vec<(String, Span)>>> {
    if cur.eat(&Tok::Star) {
        cur.finish()?;
        return Ok(None);
    }
    let probs = cur.words();
    cur.finish()?;
    if probs.is_empty() {
        return Err(Error::parse(cur.span(), "expected probabilities or `*`"));
    }
    Ok(Some(probs))
}

fn build(
    raw_vars: Vec<RawVar>,
    order: Option<Vec<(String, Span)>>,
    shared: Vec<RawKernel>,
    raw_regimes: Vec<RawRegime>,
) -> Result<RegimeModel> {
    let mut by_name: HashMap<&str, usize> = HashMap::new();
    for (i, v) in raw_vars.iter().enumerate() {
        if by_name.insert(&v.name, i).is_some() {
            return Err(Error::parse(v.span, format!("duplicate variable `{}`", v.name)));
        }
    }
    let ordered: Vec<usize> = match &order {
        None => (0..raw_vars.len()).collect(),
        Some(names) => {
            let mut seen = vec![false; raw_vars.len()];
            let mut ids = Vec::new();
            for (name, span) in names {
                let &id = by_name
                    .get(name.as_str())
                    .ok_or_else(|| Error::parse(*span, format!("unknown variable `{name}`")))?;
                if std::mem::replace(&mut seen[id], true) {
                    return Err(Error::parse(*span, format!("`{name}` listed twice in `order:`")));
                }
                ids.push(id);
            }
            if let Some(missing) = seen.iter().position(|s| !s) {
                let v = &raw_vars[missing];
                return Err(Error::parse(
                    v.span,
                    format!("variable `{}` missing from `order:`", v.name),
                ));
            }
            ids
        }
    };
    let variables: Vec<Variable> = ordered
        .iter()
        .map(|&i| Variable {
            name: raw_vars[i].name.clone(),
            role: raw_vars[i].role,
            domain: raw_vars[i].domain.clone(),
        })
        .collect();
    let id_of: HashMap<&str, usize> = variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.name.as_str(), i))
        .collect();

    if raw_regimes.is_empty() {
        return Err(Error::parse(Span::new(1, 1), "no regimes defined"));
    }
    let shared_kernels = shared
        .iter()
        .map(|k| resolve_kernel(&variables, &id_of, k))
        .collect::<Result<Vec<_>>>()?;

    let mut regimes = Vec::new();
    for raw in &raw_regimes {
        let mut kernels: Vec<Kernel> = Vec::new();
        let mut spans: HashMap<usize, Span> = HashMap::new();
        for (k, raw_k) in shared_kernels.iter().zip(&shared) {
            spans.insert(k.child, raw_k.span);
            kernels.push(k.clone());
        }
        for raw_k in &raw.kernels {
            let k = resolve_kernel(&variables, &id_of, raw_k)?;
            if spans.insert(k.child, raw_k.span).is_some() {
                return Err(Error::parse(
                    raw_k.span,
                    format!(
                        "duplicate kernel for `{}` in regime `{}`",
                        variables[k.child].name, raw.id
                    ),
                ));
            }
            kernels.push(k);
        }
        for (v, var) in variables.iter().enumerate() {
            if !spans.contains_key(&v) {
                return Err(Error::parse(
                    raw.span,
                    format!("regime `{}` has no kernel for `{}`", raw.id, var.name),
                ));
            }
        }
        regimes.push(Regime {
            id: raw.id.clone(),
            kind: raw.kind,
            kernels,
        });
    }
    RegimeModel::new(variables, regimes)
}

fn resolve_kernel(vars: &[Variable], id_of: &HashMap<&str, usize>, raw: &RawKernel) -> Result<Kernel> {
    let lookup = |(name, span): &(String, Span)| {
        id_of
            .get(name.as_str())
            .copied()
            .ok_or_else(|| Error::parse(*span, format!("unknown variable `{name}`")))
    };
    let child = lookup(&raw.child)?;
    let mut parents = Vec::new();
    for p in &raw.parents {
        let id = lookup(p)?;
        if id >= child {
            return Err(Error::parse(
                p.1,
                format!("ordering: parent `{}` does not precede `{}`", p.0, raw.child.0),
            ));
        }
        if parents.contains(&id) {
            return Err(Error::parse(p.1, format!("parent `{}` listed twice", p.0)));
        }
        parents.push(id);
    }
    let child_var = &vars[child];
    let row_count: usize = parents.iter().map(|&p| vars[p].size()).product();
    let mut rows: Vec<Option<Row>> = vec![None; row_count];
    for raw_row in &raw.rows {
        if raw_row.labels.len() != parents.len() {
            return Err(Error::parse(
                raw_row.span,
                format!(
                    "row has {} parent values, kernel has {} parents",
                    raw_row.labels.len(),
                    parents.len()
                ),
            ));
        }
        let mut index = 0;
        for ((label, span), &p) in raw_row.labels.iter().zip(&parents) {
            let v = vars[p]
                .value_index(label)
                .ok_or_else(|| Error::parse(*span, format!("`{label}` is not a value of `{}`", vars[p].name)))?;
            index = index * vars[p].size() + v;
        }
        let row = match &raw_row.probs {
            None => Row::Unconstrained,
            Some(probs) => {
                if probs.len() != child_var.size() {
                    return Err(Error::parse(
                        raw_row.span,
                        format!(
                            "row has {} probabilities, `{}` has {} values",
                            probs.len(),
                            child_var.name,
                            child_var.size()
                        ),
                    ));
                }
                let mut dist = Vec::with_capacity(probs.len());
                for (text, span) in probs {
                    let p = rational::parse_rational(text)
                        .ok_or_else(|| Error::parse(*span, format!("`{text}` is not a probability")))?;
                    if p < rational::zero() || p > rational::one() {
                        return Err(Error::parse(*span, format!("probability `{text}` outside [0, 1]")));
                    }
                    dist.push(p);
                }
                let total: Rational = dist.iter().sum();
                if total != rational::one() {
                    return Err(Error::parse(
                        raw_row.span,
                        format!("row sums to {}, not 1", fmt_exact(&total)),
                    ));
                }
                Row::Dist(dist)
            }
        };
        if rows[index].replace(row).is_some() {
            return Err(Error::parse(raw_row.span, "duplicate row"));
        }
    }
    let mut out = Vec::with_capacity(row_count);
    for (index, row) in rows.into_iter().enumerate() {
        match row {
            Some(r) => out.push(r),
            None => {
                let probe = Kernel::new(child, parents.clone(), Vec::new());
                let labels = crate::model::row_labels(vars, &probe, index);
                return Err(Error::parse(
                    raw.span,
                    format!(
                        "kernel `{}` is missing the row for ({})",
                        child_var.name,
                        labels.join(" ")
                    ),
                ));
            }
        }
    }
    Ok(Kernel::new(child, parents, out))
}

/// Canonical text form; `parse_model(&model_to_source(m)) == m`.
pub fn model_to_source(model: &RegimeModel) -> String {
    let mut out = String::from("variables:\n");
    for v in &model.variables {
        let _ = writeln!(out, "  {} : {} {{{}}}", v.name, v.role.keyword(), v.domain.join(", "));
    }
    for r in &model.regimes {
        let _ = writeln!(out, "\nregime {} : {}", r.id, r.kind.keyword());
        for k in &r.kernels {
            write_kernel(&mut out, model, k);
        }
    }
    out
}

pub(crate) fn write_kernel(out: &mut String, model: &RegimeModel, k: &Kernel) {
    let child = &model.variables[k.child];
    if k.parents.is_empty() {
        let _ = writeln!(out, "  kernel {} : {}", child.name, row_text(&k.rows[0]));
        return;
    }
    let parents: Vec<&str> = k.parents.iter().map(|&p| model.variables[p].name.as_str()).collect();
    let _ = writeln!(out, "  kernel {} | {} :", child.name, parents.join(" "));
    for (index, row) in k.rows.iter().enumerate() {
        let labels = crate::model::row_labels(&model.variables, k, index);
        let _ = writeln!(out, "    {} -> {}", labels.join(" "), row_text(row));
    }
}

fn row_text(row: &Row) -> String {
    match row {
        Row::Unconstrained => "*".to_string(),
        Row::Dist(d) => d.iter().map(fmt_exact).collect::<Vec<_>>().join(" "),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    const SMALL: &str = "
variables:
  L : observable {0, 1}
  A : action {0, 1}
  Y : outcome {0, 1}

shared:
  kernel L : 1/2 0.5
  kernel Y | L A :
    0 0 -> 1 0
    0 1 -> 0 1
    1 0 -> 0 1
    1 1 -> 1 0

regime o : observational
  kernel A | L :
    0 -> 0.25 0.75
    1 -> 1/2 1/2
regime s : interventional
  kernel A | L :
    0 -> 1 0
    1 -> 0 1
";

    #[test]
    fn parses_and_expands_shared_kernels() {
        let m = parse_model(SMALL).unwrap();
        assert_eq!(m.regimes.len(), 2);
        assert_eq!(m.regimes[0].kernels[2], m.regimes[1].kernels[2]);
        assert_eq!(
            m.regimes[0].kernels[0].rows[0],
            Row::Dist(vec![ratio(1, 2), ratio(1, 2)])
        );
        assert_eq!(
            m.regimes[0].kernels[1].rows[0],
            Row::Dist(vec![ratio(1, 4), ratio(3, 4)])
        );
    }

    #[test]
    fn canonical_round_trip() {
        let m = parse_model(SMALL).unwrap();
        let text = model_to_source(&m);
        assert_eq!(parse_model(&text).unwrap(), m);
    }

    #[test]
    fn row_sum_error_points_at_row() {
        let bad = SMALL.replace("1 -> 1/2 1/2", "1 -> 0.5 0.6");
        let err = parse_model(&bad).unwrap_err();
        let Error::Parse { span, message } = err else {
            panic!("{err:?}")
        };
        assert_eq!(span.line, 18);
        assert!(message.contains("11/10"), "{message}");
    }

    #[test]
    fn semantic_errors_carry_spans() {
        let cases = [
            (
                SMALL.replace("kernel A | L :\n    0 -> 1 0", "kernel A | Q :\n    0 -> 1 0"),
                "unknown variable `Q`",
            ),
            (
                SMALL.replace(
                    "regime s : interventional\n  kernel A | L :",
                    "regime s : interventional\n  kernel L : 1 0\n  kernel A | L :",
                ),
                "duplicate kernel",
            ),
            (
                SMALL.replace("    1 -> 0 1\n", "    1 -> 0 1\n    1 -> 0 1\n"),
                "duplicate row",
            ),
            (SMALL.replace("    0 -> 1 0\n", ""), "missing the row"),
            (
                SMALL.replace("kernel L : 1/2 0.5", "kernel L | Y : 1/2 0.5"),
                "ordering",
            ),
            (SMALL.replace("0 -> 0.25 0.75", "0 -> 0.25 x"), "not a probability"),
            (SMALL.replace("A : action", "A : decision"), "unknown role"),
        ];
        for (text, needle) in cases {
            let err = parse_model(&text).unwrap_err();
            assert!(err.span().is_some(), "{err}");
            assert!(err.to_string().contains(needle), "{err} should mention {needle}");
        }
    }

    #[test]
    fn order_line_reorders_variables() {
        let text = "
variables:
  Y : outcome {0, 1}
  A : action {0, 1}
order: A Y
regime o : observational
  kernel A : 1 0
  kernel Y | A :
    0 -> 1 0
    1 -> *
regime s : interventional
  kernel A : 0 1
  kernel Y | A :
    0 -> *
    1 -> 0 1
";
        let m = parse_model(text).unwrap();
        assert_eq!(m.variables[0].name, "A");
        assert_eq!(m.regimes[0].kernels[1].rows[1], Row::Unconstrained);
    }
}
