//! Loss tables: `label = value` pairs, one per line or comma-separated.
//!
//! ```text
//! 0 = 0
//! 1 = 1
//! 2 = 5/2
//! ```

use crate::dsl::lex::{lines, Cursor, Tok};
use crate::error::{Error, Result};
use crate::grecursion::OutcomeFunctional;
use crate::model::RegimeModel;
use crate::rational::parse_rational;

pub fn parse_loss(model: &RegimeModel, text: &str) -> Result<OutcomeFunctional> {
    let y = model.var(model.base.outcome());
    let mut pairs = Vec::new();
    for (line_no, len, toks) in lines(text)? {
        let mut cur = Cursor::new(&toks, line_no, len);
        loop {
            let (label, span) = cur.word("outcome value")?;
            if !cur.eat(&Tok::Equals) {
                cur.expect(&Tok::Assign)?;
            }
            let (value, vspan) = cur.word("loss value")?;
            if y.value_index(&label).is_none() {
                return Err(Error::parse(
                    span,
                    format!("`{label}` is not a value of outcome `{}`", y.name),
                ));
            }
            if pairs.iter().any(|(l, _)| *l == label) {
                return Err(Error::parse(span, format!("loss for `{label}` given twice")));
            }
            let v = parse_rational(&value).ok_or_else(|| Error::parse(vspan, format!("`{value}` is not a number")))?;
            pairs.push((label, v));
            if !cur.eat(&Tok::Comma) {
                break;
            }
        }
        cur.finish()?;
    }
    OutcomeFunctional::new(model, &pairs)
}
