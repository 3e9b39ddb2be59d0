//! Consequences `E{k(Y); s}`: brute-force marginalization, G-recursion over
//! partial histories, and transfer from the observational regime.

use num_traits::Zero;
use serde::Serialize;

use crate::conditions::{CheckReport, Checker};
use crate::error::{Error, Result};
use crate::joint::{materialize_joint, Joint};
use crate::model::{BlockKind, RegimeKind, RegimeModel, Row};
use crate::rational::{self, ser_rational, Rational};

/// `k : dom(Y) -> Q`, stored in domain order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeFunctional {
    outcome: String,
    labels: Vec<String>,
    values: Vec<Rational>,
}

impl OutcomeFunctional {
    /// From `label = value` pairs; every outcome value must be covered once.
    pub fn new(model: &RegimeModel, pairs: &[(String, Rational)]) -> Result<Self> {
        let y = model.var(model.base.outcome());
        let mut values: Vec<Option<Rational>> = vec![None; y.size()];
        for (label, v) in pairs {
            let i = y
                .value_index(label)
                .ok_or_else(|| Error::Precondition(format!("`{label}` is not a value of outcome `{}`", y.name)))?;
            if values[i].replace(v.clone()).is_some() {
                return Err(Error::Precondition(format!("loss for `{label}` given twice")));
            }
        }
        let values = values
            .into_iter()
            .zip(&y.domain)
            .map(|(v, l)| v.ok_or_else(|| Error::Precondition(format!("no loss given for outcome value `{l}`"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(OutcomeFunctional {
            outcome: y.name.clone(),
            labels: y.domain.clone(),
            values,
        })
    }

    pub fn from_fn(model: &RegimeModel, f: impl Fn(&str) -> Rational) -> Self {
        let y = model.var(model.base.outcome());
        OutcomeFunctional {
            outcome: y.name.clone(),
            labels: y.domain.clone(),
            values: y.domain.iter().map(|l| f(l)).collect(),
        }
    }

    /// `k(y) = y`, for outcome labels that are numbers.
    pub fn identity(model: &RegimeModel) -> Result<Self> {
        let y = model.var(model.base.outcome());
        let pairs = y
            .domain
            .iter()
            .map(|l| {
                rational::parse_rational(l)
                    .map(|v| (l.clone(), v))
                    .ok_or_else(|| Error::Precondition(format!("outcome value `{l}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(model, &pairs)
    }

    pub fn indicator(model: &RegimeModel, label: &str) -> Result<Self> {
        let y = model.var(model.base.outcome());
        if y.value_index(label).is_none() {
            return Err(Error::Precondition(format!(
                "`{label}` is not a value of outcome `{}`",
                y.name
            )));
        }
        Ok(Self::from_fn(model, |l| {
            if l == label {
                rational::one()
            } else {
                rational::zero()
            }
        }))
    }

    /// `a·k + b`.
    pub fn affine(&self, a: &Rational, b: &Rational) -> Self {
        OutcomeFunctional {
            outcome: self.outcome.clone(),
            labels: self.labels.clone(),
            values: self.values.iter().map(|v| a * v + b).collect(),
        }
    }

    pub fn value(&self, index: usize) -> &Rational {
        &self.values[index]
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &Rational)> {
        self.labels.iter().map(String::as_str).zip(&self.values)
    }

    pub fn outcome(&self) -> &str {
        &self.outcome
    }

    fn check(&self, model: &RegimeModel) -> Result<()> {
        let y = model.var(model.base.outcome());
        if y.name != self.outcome || y.domain != self.labels {
            return Err(Error::Precondition(format!(
                "loss is defined on `{}`, the outcome is `{}`",
                self.outcome, y.name
            )));
        }
        Ok(())
    }
}

/// `Σ p(config; s) k(y)` over every configuration.
pub fn consequence_brute_force(model: &RegimeModel, s: &str, k: &OutcomeFunctional) -> Result<Rational> {
    k.check(model)?;
    let joint = materialize_joint(model, s)?;
    Ok(expectation(&joint, model, k))
}

fn expectation(joint: &Joint, model: &RegimeModel, k: &OutcomeFunctional) -> Rational {
    let slot = model.base.outcome();
    let mut total = rational::zero();
    for (i, p) in joint.probs().iter().enumerate() {
        if !p.is_zero() {
            total += p * k.value(joint.decode(i)[slot]);
        }
    }
    total
}

/// Marginals of the domain joint on each prefix of the block sequence.
struct Prefixes {
    /// `tables[j]` covers the variables of the first `j` blocks.
    tables: Vec<Joint>,
    block_sizes: Vec<usize>,
    kinds: Vec<BlockKind>,
}

impl Prefixes {
    fn new(model: &RegimeModel, joint: &Joint) -> Result<Self> {
        let blocks = model.base.domain_blocks();
        let mut names: Vec<String> = Vec::new();
        let mut tables = vec![joint.marginalize::<&str>(&[])?];
        let mut block_sizes = Vec::new();
        for b in &blocks {
            names.extend(model.names(&b.vars));
            tables.push(joint.marginalize(&names)?);
            block_sizes.push(b.vars.iter().map(|&v| model.var(v).size()).product());
        }
        Ok(Prefixes {
            tables,
            block_sizes,
            kinds: blocks.iter().map(|b| b.kind).collect(),
        })
    }

    fn depth(&self) -> usize {
        self.block_sizes.len()
    }

    fn mass(&self, level: usize, index: usize) -> &Rational {
        &self.tables[level].probs()[index]
    }

    fn labels(&self, level: usize, index: usize) -> Vec<(String, String)> {
        self.tables[level].labels(index)
    }
}

fn history_text(labels: &[(String, String)]) -> String {
    if labels.is_empty() {
        return "(empty history)".to_string();
    }
    labels
        .iter()
        .map(|(n, v)| format!("{n}={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// One entry of the value table `f`, keyed by partial history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValueEntry {
    pub history: String,
    #[serde(serialize_with = "ser_rational")]
    pub value: Rational,
    /// Set when the history has zero mass and the value came from a chosen version.
    pub null: bool,
}

/// Value of `f` at a zero-mass history, given its labels.
pub type VersionFn<'a> = dyn Fn(&[(String, String)]) -> Rational + 'a;

/// Options for the traced recursion.
#[derive(Default)]
pub struct Trace<'a> {
    /// Values assigned to `f` on zero-mass histories. Their weight is zero,
    /// so the result must not depend on them.
    pub version: Option<&'a VersionFn<'a>>,
    pub record: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Recursion {
    #[serde(serialize_with = "ser_rational")]
    pub value: Rational,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<ValueEntry>,
}

/// `f(∅)` computed backwards from `f(full history) = k(y)`.
pub fn g_recursion(model: &RegimeModel, s: &str, k: &OutcomeFunctional) -> Result<Rational> {
    Ok(g_recursion_traced(model, s, k, &Trace::default())?.value)
}

pub fn g_recursion_traced(model: &RegimeModel, s: &str, k: &OutcomeFunctional, trace: &Trace) -> Result<Recursion> {
    k.check(model)?;
    let joint = materialize_joint(model, s)?;
    let prefixes = Prefixes::new(model, &joint)?;
    let mut table = Vec::new();
    let y_size = model.var(model.base.outcome()).size();
    let value = recurse(&prefixes, k, y_size, trace, 0, 0, &mut table)?;
    Ok(Recursion { value, table })
}

fn recurse(
    p: &Prefixes,
    k: &OutcomeFunctional,
    y_size: usize,
    trace: &Trace,
    level: usize,
    index: usize,
    table: &mut Vec<ValueEntry>,
) -> Result<Rational> {
    let value = if level == p.depth() {
        k.value(index % y_size).clone()
    } else {
        let mass = p.mass(level, index).clone();
        if mass.is_zero() {
            return Err(Error::UndefinedConditional {
                history: history_text(&p.labels(level, index)),
            });
        }
        let size = p.block_sizes[level];
        let mut acc = rational::zero();
        for b in 0..size {
            let child = index * size + b;
            let child_mass = p.mass(level + 1, child);
            if child_mass.is_zero() {
                if let Some(version) = trace.version {
                    let labels = p.labels(level + 1, child);
                    let f = version(&labels);
                    if trace.record {
                        table.push(ValueEntry {
                            history: history_text(&labels),
                            value: f.clone(),
                            null: true,
                        });
                    }
                    acc += child_mass / &mass * f;
                }
                continue;
            }
            let f = recurse(p, k, y_size, trace, level + 1, child, table)?;
            acc += child_mass / &mass * f;
        }
        acc
    };
    if trace.record {
        table.push(ValueEntry {
            history: history_text(&p.labels(level, index)),
            value: value.clone(),
            null: false,
        });
    }
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransferPolicy {
    #[default]
    RequireChecks,
    Force,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Transfer {
    /// `verified` is false when forced past failing checks.
    Value {
        value: Rational,
        verified: bool,
        checks: Vec<CheckReport>,
    },
    Refused {
        checks: Vec<CheckReport>,
    },
}

impl Transfer {
    pub fn value(&self) -> Option<&Rational> {
        match self {
            Transfer::Value { value, .. } => Some(value),
            Transfer::Refused { .. } => None,
        }
    }
}

/// G-recursion with nature blocks taken from `o` and actions from `s`'s kernels.
pub fn g_transfer(model: &RegimeModel, s: &str, k: &OutcomeFunctional, policy: TransferPolicy) -> Result<Transfer> {
    k.check(model)?;
    let regime = model.regime(s)?;
    if regime.kind != RegimeKind::Interventional {
        return Err(Error::Precondition(format!("regime `{s}` is not interventional")));
    }
    let domain = model.base.domain_variables();
    for i in 1..=model.base.n() {
        let kernel = regime.kernel(model.base.action(i));
        if let Some(&p) = kernel.parents.iter().find(|p| !domain.contains(p)) {
            return Err(Error::Precondition(format!(
                "the action kernel for `{}` in `{s}` reads unobserved `{}`; transfer needs a known strategy on observed history",
                model.var(kernel.child).name,
                model.var(p).name
            )));
        }
    }
    let checker = Checker::new(model)?;
    let checks = vec![checker.simple_stability(s)?, checker.positivity(s)?];
    let verified = checks.iter().all(|c| c.holds);
    if !verified && policy == TransferPolicy::RequireChecks {
        return Ok(Transfer::Refused { checks });
    }
    let o = checker.joints().get(&model.observational().id)?;
    let prefixes = Prefixes::new(model, o)?;
    let blocks = model.base.domain_blocks();
    let ctx = TransferCtx {
        model,
        s: regime,
        prefixes: &prefixes,
        blocks: &blocks,
        k,
    };
    let value = ctx.recurse(0, 0, &mut Vec::new())?;
    Ok(Transfer::Value {
        value,
        verified,
        checks,
    })
}

struct TransferCtx<'a> {
    model: &'a RegimeModel,
    s: &'a crate::model::Regime,
    prefixes: &'a Prefixes,
    blocks: &'a [crate::model::Block],
    k: &'a OutcomeFunctional,
}

impl TransferCtx<'_> {
    /// `config` holds the domain values fixed so far, by variable id.
    fn recurse(&self, level: usize, index: usize, config: &mut Vec<(usize, usize)>) -> Result<Rational> {
        let p = self.prefixes;
        if level == p.depth() {
            let y = self.model.var(self.model.base.outcome()).size();
            return Ok(self.k.value(index % y).clone());
        }
        let size = p.block_sizes[level];
        let mut acc = rational::zero();
        match p.kinds[level] {
            BlockKind::Nature => {
                let mass = p.mass(level, index).clone();
                if mass.is_zero() {
                    return Err(Error::UndefinedConditional {
                        history: history_text(&p.labels(level, index)),
                    });
                }
                let vars = &self.blocks[level].vars;
                for b in 0..size {
                    let child = index * size + b;
                    let child_mass = p.mass(level + 1, child);
                    if child_mass.is_zero() {
                        continue;
                    }
                    let w = child_mass / &mass;
                    let mut rest = b;
                    let mut values = vec![0; vars.len()];
                    for (slot, &v) in vars.iter().enumerate().rev() {
                        let n = self.model.var(v).size();
                        values[slot] = rest % n;
                        rest /= n;
                    }
                    let before = config.len();
                    config.extend(vars.iter().copied().zip(values));
                    let f = self.recurse(level + 1, child, config)?;
                    config.truncate(before);
                    acc += w * f;
                }
            }
            BlockKind::Action => {
                let action = self.blocks[level].vars[0];
                let kernel = self.s.kernel(action);
                let mut full = vec![0usize; self.model.variables.len()];
                for &(v, x) in config.iter() {
                    full[v] = x;
                }
                let row = kernel.row_for(&self.model.variables, &full);
                let Row::Dist(dist) = row else {
                    return Err(Error::UndefinedConditional {
                        history: history_text(&p.labels(level, index)),
                    });
                };
                for (b, w) in dist.iter().enumerate() {
                    if w.is_zero() {
                        continue;
                    }
                    config.push((action, b));
                    let f = self.recurse(level + 1, index * size + b, config)?;
                    config.pop();
                    acc += w * f;
                }
            }
        }
        Ok(acc)
    }
}
