//! Strategies, their composition with a model into a new regime, and
//! exhaustive search over non-randomized strategies.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::conditions::CheckReport;
use crate::error::{Error, Result};
use crate::grecursion::{g_recursion, g_transfer, OutcomeFunctional, Transfer, TransferPolicy};
use crate::model::{Kernel, Regime, RegimeKind, RegimeModel, Row, VarId};
use crate::rational::{ser_opt_rational, Rational};

pub const DEFAULT_STRATEGY_CAP: u128 = 100_000;

/// One action kernel per stage, reading only the observed history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strategy {
    pub rules: Vec<Kernel>,
}

impl Strategy {
    /// Checks the rules against the model's stages.
    pub fn new(model: &RegimeModel, mut rules: Vec<Kernel>) -> Result<Self> {
        let base = &model.base;
        rules.sort_by_key(|k| k.child);
        let actions: Vec<VarId> = (1..=base.n()).map(|i| base.action(i)).collect();
        for &a in &actions {
            if !rules.iter().any(|k| k.child == a) {
                return Err(Error::InvalidStrategy(format!(
                    "no rule for action `{}`",
                    model.var(a).name
                )));
            }
        }
        for (i, k) in rules.iter().enumerate() {
            let name = &model.var(k.child).name;
            if rules[..i].iter().any(|o| o.child == k.child) {
                return Err(Error::InvalidStrategy(format!("two rules for `{name}`")));
            }
            let Some(stage) = actions.iter().position(|&a| a == k.child) else {
                return Err(Error::InvalidStrategy(format!("`{name}` is not an action")));
            };
            let history = base.decision_history(stage + 1);
            if let Some(&p) = k.parents.iter().find(|p| !history.contains(p)) {
                return Err(Error::InvalidStrategy(format!(
                    "rule for `{name}` reads `{}`, which is not in its observed history",
                    model.var(p).name
                )));
            }
            if k.rows.len() != k.expected_rows(&model.variables) {
                return Err(Error::InvalidStrategy(format!(
                    "rule for `{name}` has the wrong number of rows"
                )));
            }
            let size = model.var(k.child).size();
            for row in &k.rows {
                let Row::Dist(d) = row else {
                    return Err(Error::InvalidStrategy(format!(
                        "rule for `{name}` leaves a row unspecified"
                    )));
                };
                let sum: Rational = d.iter().sum();
                if d.len() != size || d.iter().any(|p| *p < Rational::zero()) || !sum.is_one() {
                    return Err(Error::InvalidStrategy(format!(
                        "rule for `{name}` has a row that is not a distribution"
                    )));
                }
            }
        }
        Ok(Strategy { rules })
    }

    /// Every row puts all mass on one action.
    pub fn is_deterministic(&self) -> bool {
        self.rules.iter().all(|k| {
            k.rows
                .iter()
                .all(|r| r.dist().is_some_and(|d| d.iter().any(|p| p.is_one())))
        })
    }

    /// No rule reads the history.
    pub fn is_static(&self) -> bool {
        self.rules.iter().all(|k| k.parents.is_empty())
    }
}

/// Adds regime `id` whose actions follow `strategy` and whose other kernels
/// are copied from `template`.
pub fn instantiate_regime(model: &RegimeModel, strategy: &Strategy, id: &str, template: &str) -> Result<RegimeModel> {
    if model.regime(id).is_ok() {
        return Err(Error::InvalidStrategy(format!("regime `{id}` already exists")));
    }
    let source = model.regime(template)?;
    let mut kernels = source.kernels.clone();
    for rule in &strategy.rules {
        kernels[rule.child] = rule.clone();
    }
    let mut regimes = model.regimes.clone();
    regimes.push(Regime {
        id: id.to_string(),
        kind: RegimeKind::Interventional,
        kernels,
    });
    RegimeModel::new(model.variables.clone(), regimes)
}

/// A non-randomized strategy with its canonical id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enumerated {
    pub id: String,
    pub strategy: Strategy,
}

/// Non-randomized strategies as maps from `l̄_i` to `a_i`.
///
/// Under such a strategy past actions are functions of `l̄_i`, so these
/// maps cover every distinct strategy. Order is lexicographic in the
/// vector of chosen action indices, stage 1 first.
pub struct Strategies<'m> {
    model: &'m RegimeModel,
    /// `(action, history variables, number of histories)` per stage.
    stages: Vec<(VarId, Vec<VarId>, usize)>,
    digits: Vec<usize>,
    radix: Vec<usize>,
    done: bool,
}

pub fn strategy_count(model: &RegimeModel) -> u128 {
    let base = &model.base;
    (1..=base.n())
        .map(|i| {
            let histories: u128 = base.l_bar(i).iter().map(|&v| model.var(v).size() as u128).product();
            (model.var(base.action(i)).size() as u128).saturating_pow(histories.min(u32::MAX as u128) as u32)
        })
        .fold(1u128, |a, b| a.saturating_mul(b))
}

pub fn enumerate_strategies(model: &RegimeModel) -> Result<Strategies<'_>> {
    enumerate_strategies_capped(model, DEFAULT_STRATEGY_CAP)
}

pub fn enumerate_strategies_capped(model: &RegimeModel, cap: u128) -> Result<Strategies<'_>> {
    let count = strategy_count(model);
    if count > cap {
        return Err(Error::CapExceeded {
            what: "strategies",
            count,
            cap,
        });
    }
    let base = &model.base;
    let mut stages = Vec::new();
    let mut radix = Vec::new();
    for i in 1..=base.n() {
        let history = base.l_bar(i);
        let histories: usize = history.iter().map(|&v| model.var(v).size()).product();
        let a = base.action(i);
        radix.extend(std::iter::repeat_n(model.var(a).size(), histories));
        stages.push((a, history, histories));
    }
    Ok(Strategies {
        model,
        stages,
        digits: vec![0; radix.len()],
        radix,
        done: false,
    })
}

impl Strategies<'_> {
    fn current(&self) -> Enumerated {
        let mut rules = Vec::new();
        let mut ids = Vec::new();
        let mut offset = 0;
        for (a, history, n) in &self.stages {
            let var = self.model.var(*a);
            let chosen = &self.digits[offset..offset + n];
            offset += n;
            let rows = chosen
                .iter()
                .map(|&c| {
                    Row::Dist(
                        (0..var.size())
                            .map(|j| if j == c { Rational::one() } else { Rational::zero() })
                            .collect(),
                    )
                })
                .collect();
            rules.push(Kernel::new(*a, history.clone(), rows));
            let labels: Vec<&str> = chosen.iter().map(|&c| var.domain[c].as_str()).collect();
            ids.push(format!("{}=[{}]", var.name, labels.join(",")));
        }
        Enumerated {
            id: ids.join(";"),
            strategy: Strategy { rules },
        }
    }
}

impl Iterator for Strategies<'_> {
    type Item = Enumerated;

    fn next(&mut self) -> Option<Enumerated> {
        if self.done {
            return None;
        }
        let item = self.current();
        // odometer, last digit fastest
        self.done = true;
        for slot in (0..self.digits.len()).rev() {
            self.digits[slot] += 1;
            if self.digits[slot] < self.radix[slot] {
                self.done = false;
                break;
            }
            self.digits[slot] = 0;
        }
        Some(item)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Safety {
    /// Computed from the regime itself, or transferred with both checks passing.
    Verified,
    Unsafe,
    Refused,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationRow {
    pub id: String,
    #[serde(serialize_with = "ser_opt_rational")]
    pub consequence: Option<Rational>,
    pub safety: Safety,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Oracle,
    Transfer,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Optimization {
    pub best: EvaluationRow,
    pub table: Vec<EvaluationRow>,
}

/// Regime id used for a candidate strategy while it is evaluated.
const CANDIDATE: &str = "candidate";

fn candidate_id(model: &RegimeModel) -> String {
    let mut id = CANDIDATE.to_string();
    while model.regime(&id).is_ok() {
        id.push('_');
    }
    id
}

/// Evaluates one strategy. Nature kernels come from the observational regime.
pub fn evaluate_strategy(
    model: &RegimeModel,
    id: &str,
    strategy: &Strategy,
    k: &OutcomeFunctional,
    mode: Mode,
) -> Result<EvaluationRow> {
    let regime = candidate_id(model);
    let o = model.observational().id.clone();
    let row = |consequence, safety, checks, reason| EvaluationRow {
        id: id.to_string(),
        consequence,
        safety,
        checks,
        reason,
    };
    let instantiated = match instantiate_regime(model, strategy, &regime, &o) {
        Ok(m) => m,
        Err(Error::InvalidModel(v)) if mode == Mode::Transfer => {
            let reason = v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
            return Ok(row(None, Safety::Refused, Vec::new(), Some(reason)));
        }
        Err(e) => return Err(e),
    };
    match mode {
        Mode::Oracle => Ok(row(
            Some(g_recursion(&instantiated, &regime, k)?),
            Safety::Verified,
            Vec::new(),
            None,
        )),
        Mode::Transfer => match g_transfer(&instantiated, &regime, k, TransferPolicy::RequireChecks)? {
            Transfer::Value {
                value,
                verified,
                checks,
            } => {
                let safety = if verified { Safety::Verified } else { Safety::Unsafe };
                Ok(row(
                    Some(value),
                    safety,
                    if verified { Vec::new() } else { checks },
                    None,
                ))
            }
            Transfer::Refused { checks } => {
                let failing: Vec<CheckReport> = checks.into_iter().filter(|c| !c.holds).collect();
                let names: Vec<&str> = failing.iter().map(|c| c.condition.as_str()).collect();
                let reason = format!("{} failed", names.join(" and "));
                Ok(row(None, Safety::Refused, failing, Some(reason)))
            }
        },
    }
}

/// Evaluates every non-randomized strategy and returns the one with least
/// expected loss; ties go to the earliest in enumeration order.
pub fn optimize(model: &RegimeModel, k: &OutcomeFunctional, mode: Mode) -> Result<Optimization> {
    let mut table = Vec::new();
    for e in enumerate_strategies(model)? {
        table.push(evaluate_strategy(model, &e.id, &e.strategy, k, mode)?);
    }
    let best = table
        .iter()
        .filter(|r| r.consequence.is_some())
        .fold(None::<&EvaluationRow>, |best, r| match best {
            Some(b) if b.consequence <= r.consequence => Some(b),
            _ => Some(r),
        })
        .cloned()
        .ok_or_else(|| {
            Error::NotIdentifiable(
                "every strategy was refused; the consequences are not identifiable from observational data".to_string(),
            )
        })?;
    Ok(Optimization { best, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_model;
    use crate::rational::ratio;

    #[test]
    fn counts_and_order() {
        let m = parse_model(include_str!("../fixtures/appb.model")).unwrap();
        let all: Vec<_> = enumerate_strategies(&m).unwrap().collect();
        assert_eq!(all.len(), 4);
        assert_eq!(strategy_count(&m), 4);
        assert_eq!(all[0].id, "A=[0,0]");
        assert_eq!(all[1].id, "A=[0,1]");
        assert_eq!(all[3].id, "A=[1,1]");
        assert!(all.iter().all(|e| e.strategy.is_deterministic()));
        assert!(matches!(
            enumerate_strategies_capped(&m, 3),
            Err(Error::CapExceeded { count: 4, .. })
        ));
    }

    #[test]
    fn appb_transfer_refuses_treatment() {
        let m = parse_model(include_str!("../fixtures/appb.model")).unwrap();
        let k = OutcomeFunctional::identity(&m).unwrap();
        let o = optimize(&m, &k, Mode::Transfer).unwrap();
        let row = |id: &str| o.table.iter().find(|r| r.id == id).unwrap();
        assert_eq!(row("A=[1,1]").safety, Safety::Refused);
        assert_eq!(row("A=[0,0]").safety, Safety::Verified);
        assert_eq!(row("A=[0,0]").consequence, Some(ratio(1, 2)));
        assert_eq!(o.best.id, "A=[0,0]");
        let oracle = optimize(&m, &k, Mode::Oracle).unwrap();
        assert_eq!(oracle.table[3].consequence, Some(ratio(3, 2)));
    }
}
