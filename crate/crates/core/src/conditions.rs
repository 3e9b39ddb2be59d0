//! Named checkers for the identifying conditions, and the aggregate report
//! that cross-checks the implications between them.

use std::fmt;

use num_traits::Zero;
use serde::Serialize;

use crate::ci::numeric::{check_extended_ci_with, Cell, CommonVersion, RegimeJoints, Witness};
use crate::ci::statement::CiStatement;
use crate::error::{Error, Result};
use crate::joint::Joint;
use crate::model::{RegimeKind, RegimeModel, VarId};
use crate::rational::{ser_rational, Rational};

/// Condition names as used on the command line.
pub const CONDITIONS: &[&str] = &[
    "simple-stability",
    "positivity",
    "extended-stability",
    "extended-positivity",
    "control",
    "sequential-randomization",
    "sequential-irrelevance",
    "lemma1",
];

/// Events checked for absolute continuity, smallest first, before falling
/// back to full configurations.
const MAX_EVENT_SIZE: usize = 3;
const MAX_EVENT_WITNESSES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageCheck {
    pub stage: usize,
    pub statement: String,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub common_version: Option<CommonVersion>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Evidence {
    /// Two conditionals that a CI statement says should agree.
    Conditional {
        stage: usize,
        statement: String,
        witness: Witness,
    },
    /// An event with positive interventional and zero observational mass.
    Event {
        event: Cell,
        #[serde(serialize_with = "ser_rational")]
        s_mass: Rational,
        #[serde(serialize_with = "ser_rational")]
        o_mass: Rational,
    },
    /// A cell where the positivity-propagation property fails.
    Cell {
        stage: usize,
        cell: Cell,
        #[serde(serialize_with = "ser_rational")]
        observed_s_mass: Rational,
        #[serde(serialize_with = "ser_rational")]
        o_mass: Rational,
        #[serde(serialize_with = "ser_rational")]
        s_mass: Rational,
    },
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use crate::rational::fmt_exact;
        match self {
            Evidence::Conditional {
                stage,
                statement,
                witness,
            } => {
                write!(f, "stage {stage}, {statement}: {witness}")
            }
            Evidence::Event { event, s_mass, o_mass } => {
                write!(
                    f,
                    "event {event}: s-mass {}, o-mass {}",
                    fmt_exact(s_mass),
                    fmt_exact(o_mass)
                )
            }
            Evidence::Cell {
                stage,
                cell,
                observed_s_mass,
                o_mass,
                s_mass,
            } => write!(
                f,
                "stage {stage}, cell {cell}: observed s-mass {}, o-mass {}, s-mass {}",
                fmt_exact(observed_s_mass),
                fmt_exact(o_mass),
                fmt_exact(s_mass)
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub condition: String,
    pub regimes: Vec<String>,
    pub holds: bool,
    pub witnesses: Vec<Evidence>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub stages: Vec<StageCheck>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckReport {
    fn new(condition: &str, regimes: &[&str]) -> Self {
        CheckReport {
            condition: condition.to_string(),
            regimes: regimes.iter().map(|r| r.to_string()).collect(),
            holds: true,
            witnesses: Vec::new(),
            stages: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Label used in verdict tables, e.g. `sequential-irrelevance(o)`.
    pub fn label(&self) -> String {
        match self.condition.as_str() {
            "sequential-irrelevance" | "control" | "sequential-randomization" => {
                format!("{}({})", self.condition, self.regimes.join(","))
            }
            _ => self.condition.clone(),
        }
    }

    /// Conditional witnesses at a given stage.
    pub fn conditional_witnesses(&self) -> impl Iterator<Item = &Witness> {
        self.witnesses.iter().filter_map(|w| match w {
            Evidence::Conditional { witness, .. } => Some(witness),
            _ => None,
        })
    }

    pub fn common_version(&self, stage: usize) -> Option<&CommonVersion> {
        self.stages
            .iter()
            .find(|s| s.stage == stage)
            .and_then(|s| s.common_version.as_ref())
    }
}

/// Checks over one model with joints materialized once.
pub struct Checker<'m> {
    model: &'m RegimeModel,
    joints: RegimeJoints,
}

fn names(model: &RegimeModel, ids: &[VarId]) -> Vec<String> {
    model.names(ids)
}

impl<'m> Checker<'m> {
    pub fn new(model: &'m RegimeModel) -> Result<Self> {
        Ok(Checker {
            model,
            joints: RegimeJoints::new(model)?,
        })
    }

    pub fn model(&self) -> &RegimeModel {
        self.model
    }

    pub fn joints(&self) -> &RegimeJoints {
        &self.joints
    }

    fn interventional(&self, s: &str) -> Result<()> {
        let r = self.model.regime(s)?;
        if r.kind != RegimeKind::Interventional {
            return Err(Error::Precondition(format!("regime `{s}` is not interventional")));
        }
        Ok(())
    }

    fn extended(&self, what: &'static str) -> Result<()> {
        if self.model.is_extended() {
            Ok(())
        } else {
            Err(Error::NotExtended(what))
        }
    }

    fn o(&self) -> &str {
        &self.model.observational().id
    }

    /// Runs one statement per stage and folds the verdicts into a report.
    fn staged(&self, condition: &str, regimes: &[&str], stmts: Vec<(usize, CiStatement)>) -> Result<CheckReport> {
        let mut report = CheckReport::new(condition, regimes);
        for (stage, stmt) in stmts {
            let verdict = check_extended_ci_with(&self.joints, regimes, &stmt)?;
            let text = stmt.to_string();
            report.holds &= verdict.holds;
            for w in verdict.witnesses {
                report.witnesses.push(Evidence::Conditional {
                    stage,
                    statement: text.clone(),
                    witness: w,
                });
            }
            report.stages.push(StageCheck {
                stage,
                statement: text,
                holds: verdict.holds,
                common_version: verdict.common_version,
            });
        }
        Ok(report)
    }

    /// `L_i ⫫ σ | (L̄_{i-1}, Ā_{i-1})` for every stage, over `{o, s}`.
    pub fn simple_stability(&self, s: &str) -> Result<CheckReport> {
        self.interventional(s)?;
        let base = &self.model.base;
        let mut stmts = Vec::new();
        for i in 1..=base.n() + 1 {
            if base.l_block(i).is_empty() {
                continue;
            }
            let x = names(self.model, base.l_block(i));
            let z = names(self.model, &base.observed_past(i));
            stmts.push((i, CiStatement::new(x, Vec::new(), z, true, false)?));
        }
        self.staged("simple-stability", &[self.o(), s], stmts)
    }

    /// `((L_i, U_i) ⫫ σ | (L̄_{i-1}, Ū_{i-1}, Ā_{i-1}))` over `{o, s}`.
    pub fn extended_stability(&self, s: &str) -> Result<CheckReport> {
        self.interventional(s)?;
        self.extended("extended-stability")?;
        let base = &self.model.base;
        let mut stmts = Vec::new();
        for i in 1..=base.n() + 1 {
            let mut block = base.l_block(i).to_vec();
            block.extend(base.u_block(i));
            if block.is_empty() {
                continue;
            }
            let z = names(self.model, &base.extended_past(i));
            stmts.push((
                i,
                CiStatement::new(names(self.model, &block), Vec::new(), z, true, false)?,
            ));
        }
        self.staged("extended-stability", &[self.o(), s], stmts)
    }

    /// `A_i ⫫ Ū_i | (L̄_i, Ā_{i-1})` within one regime.
    fn actions_ignore_unobserved(&self, condition: &str, regime: &str) -> Result<CheckReport> {
        let base = &self.model.base;
        let mut stmts = Vec::new();
        for i in 1..=base.n() {
            let u = base.u_bar(i);
            if u.is_empty() {
                continue;
            }
            let x = names(self.model, &[base.action(i)]);
            let z = names(self.model, &base.decision_history(i));
            stmts.push((
                i,
                CiStatement::new(x, names(self.model, &u), z, false, false)?.in_regime(regime)?,
            ));
        }
        self.staged(condition, &[regime], stmts)
    }

    pub fn control_strategy(&self, s: &str) -> Result<CheckReport> {
        self.model.regime(s)?;
        self.extended("control")?;
        let mut report = self.actions_ignore_unobserved("control", s)?;
        report.notes.push(format!(
            "the action kernels of `{s}` are given explicitly in the model, which stands in for being known to the analyst"
        ));
        Ok(report)
    }

    pub fn sequential_randomization(&self) -> Result<CheckReport> {
        self.extended("sequential-randomization")?;
        self.actions_ignore_unobserved("sequential-randomization", self.o())
    }

    /// `L_i ⫫ Ū_{i-1} | (L̄_{i-1}, Ā_{i-1})` within `regime`.
    pub fn sequential_irrelevance(&self, regime: &str) -> Result<CheckReport> {
        self.model.regime(regime)?;
        self.extended("sequential-irrelevance")?;
        let base = &self.model.base;
        let mut stmts = Vec::new();
        for i in 1..=base.n() + 1 {
            let u = base.u_bar(i - 1);
            if u.is_empty() || base.l_block(i).is_empty() {
                continue;
            }
            let x = names(self.model, base.l_block(i));
            let z = names(self.model, &base.observed_past(i));
            stmts.push((
                i,
                CiStatement::new(x, names(self.model, &u), z, false, false)?.in_regime(regime)?,
            ));
        }
        self.staged("sequential-irrelevance", &[regime], stmts)
    }

    fn absolute_continuity(&self, condition: &str, s: &str, vars: &[VarId]) -> Result<CheckReport> {
        let o = self.o();
        let mut report = CheckReport::new(condition, &[o, s]);
        let all = names(self.model, vars);
        let so = self.joints.get(s)?;
        let oo = self.joints.get(o)?;
        let full = event_witnesses(so, oo, &all)?;
        if full.is_empty() {
            return Ok(report);
        }
        report.holds = false;
        let mut found = Vec::new();
        for k in 1..=MAX_EVENT_SIZE.min(all.len().saturating_sub(1)) {
            for subset in combinations(all.len(), k) {
                let vars: Vec<String> = subset.iter().map(|&i| all[i].clone()).collect();
                found.extend(event_witnesses(so, oo, &vars)?);
            }
            if !found.is_empty() {
                break;
            }
        }
        if found.is_empty() {
            found = full;
        }
        let total = found.len();
        report.witnesses.extend(found.into_iter().take(MAX_EVENT_WITNESSES));
        if total > MAX_EVENT_WITNESSES {
            report.notes.push(format!(
                "{} further minimal events omitted",
                total - MAX_EVENT_WITNESSES
            ));
        }
        Ok(report)
    }

    /// Absolute continuity of `P_s` with respect to `P_o` over the domain variables.
    pub fn positivity(&self, s: &str) -> Result<CheckReport> {
        self.interventional(s)?;
        self.absolute_continuity("positivity", s, &self.model.base.domain_variables())
    }

    /// Absolute continuity over every variable, unobserved ones included.
    pub fn extended_positivity(&self, s: &str) -> Result<CheckReport> {
        self.interventional(s)?;
        self.extended("extended-positivity")?;
        let all: Vec<VarId> = (0..self.model.variables.len()).collect();
        self.absolute_continuity("extended-positivity", s, &all)
    }

    /// Positivity propagation: `p(l̄_k, ā_k; s) > 0` and `p(ū_k, l̄_k, ā_k; o) > 0`
    /// imply `p(ū_k, l̄_k, ā_k; s) > 0`, checked on every cell for `k = 1..n`.
    pub fn lemma1(&self, s: &str) -> Result<CheckReport> {
        self.interventional(s)?;
        self.extended("lemma1")?;
        let es = self.extended_stability(s)?;
        let cs = self.control_strategy(s)?;
        if !es.holds || !cs.holds {
            let failing: Vec<&str> = [&es, &cs]
                .iter()
                .filter(|r| !r.holds)
                .map(|r| r.condition.as_str())
                .collect();
            return Err(Error::Precondition(format!(
                "lemma1 requires {} to hold",
                failing.join(" and ")
            )));
        }
        let o = self.o();
        let mut report = CheckReport::new("lemma1", &[o, s]);
        let base = &self.model.base;
        let (sj, oj) = (self.joints.get(s)?, self.joints.get(o)?);
        let mut cells = 0usize;
        for k in 1..=base.n() {
            let upto = base.action(k);
            let all: Vec<String> = names(self.model, &(0..=upto).collect::<Vec<_>>());
            let observed: Vec<String> = names(self.model, &base.decision_history(k))
                .into_iter()
                .chain(std::iter::once(self.model.var(upto).name.clone()))
                .collect();
            let s_full = sj.marginalize(&all)?;
            let o_full = oj.marginalize(&all)?;
            let s_obs = sj.marginalize(&observed)?;
            for index in 0..s_full.probs().len() {
                cells += 1;
                let labels = s_full.labels(index);
                let obs_cell: Vec<(String, String)> =
                    labels.iter().filter(|(n, _)| observed.contains(n)).cloned().collect();
                let a = &s_obs.prob(&obs_cell)?;
                let b = &o_full.probs()[index];
                let c = &s_full.probs()[index];
                if !a.is_zero() && !b.is_zero() && c.is_zero() {
                    report.holds = false;
                    report.witnesses.push(Evidence::Cell {
                        stage: k,
                        cell: Cell(labels),
                        observed_s_mass: a.clone(),
                        o_mass: b.clone(),
                        s_mass: c.clone(),
                    });
                }
            }
        }
        report.notes.push(format!("{cells} cells checked"));
        Ok(report)
    }

    /// Runs one checker by command-line name.
    pub fn check(&self, condition: &str, s: &str) -> Result<Vec<CheckReport>> {
        Ok(match condition {
            "simple-stability" => vec![self.simple_stability(s)?],
            "positivity" => vec![self.positivity(s)?],
            "extended-stability" => vec![self.extended_stability(s)?],
            "extended-positivity" => vec![self.extended_positivity(s)?],
            "control" => vec![self.control_strategy(s)?],
            "sequential-randomization" => vec![self.sequential_randomization()?],
            "sequential-irrelevance" => vec![self.sequential_irrelevance(self.o())?, self.sequential_irrelevance(s)?],
            "lemma1" => vec![self.lemma1(s)?],
            other => {
                return Err(Error::Precondition(format!(
                    "unknown condition `{other}`; expected one of {} or all",
                    CONDITIONS.join(", ")
                )))
            }
        })
    }
}

/// Cells of `vars` with positive mass under `s` and none under `o`.
fn event_witnesses(s: &Joint, o: &Joint, vars: &[String]) -> Result<Vec<Evidence>> {
    let sm = s.marginalize(vars)?;
    let om = o.marginalize(vars)?;
    Ok(sm
        .probs()
        .iter()
        .zip(om.probs())
        .enumerate()
        .filter(|(_, (ps, po))| !ps.is_zero() && po.is_zero())
        .map(|(i, (ps, po))| Evidence::Event {
            event: Cell(sm.labels(i)),
            s_mass: ps.clone(),
            o_mass: po.clone(),
        })
        .collect())
}

/// k-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - k + i {
                break;
            }
        }
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Implication {
    pub name: String,
    pub premises: Vec<String>,
    pub conclusion: String,
    pub premises_hold: bool,
    pub conclusion_holds: bool,
    /// Premises hold and the conclusion does not: an engine fault.
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub regime: String,
    pub checks: Vec<CheckReport>,
    pub implications: Vec<Implication>,
    pub internal_error: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ConditionReport {
    pub fn get(&self, label: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.label() == label)
    }

    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

/// Every applicable checker for `(o, s)` plus the implications between them.
pub fn condition_report(model: &RegimeModel, s: &str) -> Result<ConditionReport> {
    let checker = Checker::new(model)?;
    checker.interventional(s)?;
    let o = checker.o().to_string();
    let mut checks = vec![checker.simple_stability(s)?, checker.positivity(s)?];
    let mut notes = Vec::new();
    if model.is_extended() {
        checks.push(checker.extended_stability(s)?);
        checks.push(checker.extended_positivity(s)?);
        checks.push(checker.control_strategy(s)?);
        checks.push(checker.sequential_randomization()?);
        checks.push(checker.sequential_irrelevance(&o)?);
        checks.push(checker.sequential_irrelevance(s)?);
        match checker.lemma1(s) {
            Ok(r) => checks.push(r),
            Err(Error::Precondition(msg)) => notes.push(format!("lemma1 skipped: {msg}")),
            Err(e) => return Err(e),
        }
    } else {
        notes.push("no unobserved variables: only simple stability and positivity apply".to_string());
    }
    Ok(ConditionReport::from_checks(s, &o, model.is_extended(), checks, notes))
}

impl ConditionReport {
    /// Evaluates the implications between already computed checks.
    pub fn from_checks(s: &str, o: &str, extended: bool, checks: Vec<CheckReport>, notes: Vec<String>) -> Self {
        let holds = |label: &str| checks.iter().find(|c| c.label() == label).map(|c| c.holds);
        let mut implications = Vec::new();
        let mut imply = |name: &str, premises: &[String], conclusion: &str| {
            let p: Option<Vec<bool>> = premises.iter().map(|l| holds(l)).collect();
            let (Some(p), Some(c)) = (p, holds(conclusion)) else {
                return;
            };
            let premises_hold = p.iter().all(|&b| b);
            implications.push(Implication {
                name: name.to_string(),
                premises: premises.to_vec(),
                conclusion: conclusion.to_string(),
                premises_hold,
                conclusion_holds: c,
                violated: premises_hold && !c,
            });
        };
        if extended {
            let control = format!("control({s})");
            let rand = format!("sequential-randomization({o})");
            let irr_s = format!("sequential-irrelevance({s})");
            let es = "extended-stability".to_string();
            imply(
                "sequential randomization",
                &[es.clone(), rand, control.clone()],
                "simple-stability",
            );
            imply(
                "discrete sequential irrelevance",
                &[es.clone(), control.clone(), irr_s],
                "simple-stability",
            );
            imply("positivity propagation", &[es, control], "lemma1");
            imply(
                "extended positivity",
                &["extended-positivity".to_string()],
                "positivity",
            );
        }
        let internal_error = implications.iter().any(|i| i.violated);
        ConditionReport {
            regime: s.to_string(),
            checks,
            implications,
            internal_error,
            notes,
        }
    }
}
