//! Variables, information bases, kernels and regime models.
//!
//! A [`RegimeModel`] holds one observational regime and one or more
//! interventional regimes over a shared, ordered set of variables. Each
//! regime factorizes the joint distribution as a product of [`Kernel`]s, one
//! per variable, in information-base order.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use num_traits::{One, Signed};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::joint;
use crate::rational::{self, Rational};

pub type VarId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Observable,
    Action,
    Unobserved,
    Outcome,
}

impl Role {
    pub fn keyword(self) -> &'static str {
        match self {
            Role::Observable => "observable",
            Role::Action => "action",
            Role::Unobserved => "unobserved",
            Role::Outcome => "outcome",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Role> {
        match word {
            "observable" => Some(Role::Observable),
            "action" => Some(Role::Action),
            "unobserved" => Some(Role::Unobserved),
            "outcome" => Some(Role::Outcome),
            _ => None,
        }
    }

    /// Observables, actions and the outcome are available to the decision maker.
    pub fn is_domain(self) -> bool {
        self != Role::Unobserved
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub role: Role,
    pub domain: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(name: &str, role: Role, domain: impl IntoIterator<Item = S>) -> Self {
        Variable {
            name: name.to_string(),
            role,
            domain: domain.into_iter().map(Into::into).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.domain.len()
    }

    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.domain.iter().position(|v| v == label)
    }
}

/// One decision stage `(L_i, U_i, A_i)`. Either block may be empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stage {
    pub observed: Vec<VarId>,
    pub unobserved: Vec<VarId>,
    pub action: VarId,
}

/// The ordered information base `(L_1, [U_1,] A_1, ..., L_n, [U_n,] A_n, L_{n+1})`.
///
/// Stages are indexed from 1 in the accessors below; `L_{n+1}` is the final
/// block and always ends with the outcome variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InformationBase {
    pub stages: Vec<Stage>,
    pub final_block: Vec<VarId>,
    pub extended: bool,
}

impl InformationBase {
    /// Derives the stage structure from variables listed in information-base order.
    pub fn from_variables(vars: &[Variable]) -> std::result::Result<Self, Vec<Violation>> {
        let mut faults = Vec::new();
        let mut stages = Vec::new();
        let mut observed = Vec::new();
        let mut unobserved: Vec<VarId> = Vec::new();
        let mut outcome_seen = false;
        for (id, var) in vars.iter().enumerate() {
            if outcome_seen {
                faults.push(Violation::ordering(format!(
                    "variable `{}` follows the outcome; the outcome must be last",
                    var.name
                )));
            }
            match var.role {
                Role::Observable => {
                    if !unobserved.is_empty() {
                        faults.push(Violation::ordering(format!(
                            "observable `{}` follows an unobserved variable in the same stage",
                            var.name
                        )));
                    }
                    observed.push(id);
                }
                Role::Unobserved => unobserved.push(id),
                Role::Action => stages.push(Stage {
                    observed: std::mem::take(&mut observed),
                    unobserved: std::mem::take(&mut unobserved),
                    action: id,
                }),
                Role::Outcome => {
                    if outcome_seen {
                        faults.push(Violation::ordering("more than one outcome variable"));
                    }
                    outcome_seen = true;
                    observed.push(id);
                }
            }
        }
        if !outcome_seen {
            faults.push(Violation::ordering("no outcome variable"));
        }
        if !unobserved.is_empty() {
            faults.push(Violation::ordering(
                "unobserved variables after the last action are not part of any stage",
            ));
        }
        let extended = vars.iter().any(|v| v.role == Role::Unobserved);
        if faults.is_empty() {
            Ok(InformationBase {
                stages,
                final_block: observed,
                extended,
            })
        } else {
            Err(faults)
        }
    }

    /// Number of decision stages `n`.
    pub fn n(&self) -> usize {
        self.stages.len()
    }

    /// `L_i` for `i` in `1..=n+1`.
    pub fn l_block(&self, i: usize) -> &[VarId] {
        assert!(i >= 1 && i <= self.n() + 1, "stage {i} out of range");
        if i == self.n() + 1 {
            &self.final_block
        } else {
            &self.stages[i - 1].observed
        }
    }

    /// `U_i` for `i` in `1..=n+1` (`U_{n+1}` is always empty).
    pub fn u_block(&self, i: usize) -> &[VarId] {
        assert!(i >= 1 && i <= self.n() + 1, "stage {i} out of range");
        if i == self.n() + 1 {
            &[]
        } else {
            &self.stages[i - 1].unobserved
        }
    }

    /// `A_i` for `i` in `1..=n`.
    pub fn action(&self, i: usize) -> VarId {
        self.stages[i - 1].action
    }

    /// `(L_1, ..., L_i)`.
    pub fn l_bar(&self, i: usize) -> Vec<VarId> {
        (1..=i).flat_map(|j| self.l_block(j).iter().copied()).collect()
    }

    /// `(U_1, ..., U_i)`; empty for `i == 0`.
    pub fn u_bar(&self, i: usize) -> Vec<VarId> {
        (1..=i).flat_map(|j| self.u_block(j).iter().copied()).collect()
    }

    /// `(A_1, ..., A_i)`.
    pub fn a_bar(&self, i: usize) -> Vec<VarId> {
        (1..=i).map(|j| self.action(j)).collect()
    }

    /// `(L̄_{i-1}, Ā_{i-1})` in information-base order.
    pub fn observed_past(&self, i: usize) -> Vec<VarId> {
        let mut v = self.l_bar(i - 1);
        v.extend(self.a_bar(i - 1));
        v.sort_unstable();
        v
    }

    /// `(L̄_{i-1}, Ū_{i-1}, Ā_{i-1})` in information-base order.
    pub fn extended_past(&self, i: usize) -> Vec<VarId> {
        let mut v = self.observed_past(i);
        v.extend(self.u_bar(i - 1));
        v.sort_unstable();
        v
    }

    /// The observed history available when choosing `A_i`: `(L̄_i, Ā_{i-1})`.
    pub fn decision_history(&self, i: usize) -> Vec<VarId> {
        let mut v = self.l_bar(i);
        v.extend(self.a_bar(i - 1));
        v.sort_unstable();
        v
    }

    /// Domain variables `(L̄, Ā, Y)` in order.
    pub fn domain_variables(&self) -> Vec<VarId> {
        let mut v = self.l_bar(self.n() + 1);
        v.extend(self.a_bar(self.n()));
        v.sort_unstable();
        v
    }

    /// Domain blocks in recursion order: `L_1, A_1, ..., A_n, L_{n+1}`, skipping empty L-blocks.
    pub fn domain_blocks(&self) -> Vec<Block> {
        let mut blocks = Vec::new();
        for i in 1..=self.n() + 1 {
            if !self.l_block(i).is_empty() {
                blocks.push(Block {
                    kind: BlockKind::Nature,
                    stage: i,
                    vars: self.l_block(i).to_vec(),
                });
            }
            if i <= self.n() {
                blocks.push(Block {
                    kind: BlockKind::Action,
                    stage: i,
                    vars: vec![self.action(i)],
                });
            }
        }
        blocks
    }

    pub fn outcome(&self) -> VarId {
        *self.final_block.last().expect("validated base has an outcome")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Nature,
    Action,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub kind: BlockKind,
    pub stage: usize,
    pub vars: Vec<VarId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Row {
    Dist(Vec<Rational>),
    /// Row for a parent configuration the regime never reaches.
    Unconstrained,
}

impl Row {
    pub fn dist(&self) -> Option<&[Rational]> {
        match self {
            Row::Dist(d) => Some(d),
            Row::Unconstrained => None,
        }
    }
}

/// `p(child | parents)` as a dense table over the parent product space.
///
/// Rows are indexed in mixed radix with the first parent most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Kernel {
    pub child: VarId,
    pub parents: Vec<VarId>,
    pub rows: Vec<Row>,
}

impl Kernel {
    pub fn new(child: VarId, parents: Vec<VarId>, rows: Vec<Row>) -> Self {
        Kernel { child, parents, rows }
    }

    /// A parentless kernel with a single distribution row.
    pub fn prior(child: VarId, dist: Vec<Rational>) -> Self {
        Kernel {
            child,
            parents: Vec::new(),
            rows: vec![Row::Dist(dist)],
        }
    }

    /// Row index for parent values given as domain indices.
    pub fn row_index(&self, vars: &[Variable], parent_values: &[usize]) -> usize {
        let mut index = 0;
        for (&p, &v) in self.parents.iter().zip(parent_values) {
            index = index * vars[p].size() + v;
        }
        index
    }

    /// Row for a full configuration (indexed by variable id).
    pub fn row_for(&self, vars: &[Variable], config: &[usize]) -> &Row {
        let mut index = 0;
        for &p in &self.parents {
            index = index * vars[p].size() + config[p];
        }
        &self.rows[index]
    }

    pub fn expected_rows(&self, vars: &[Variable]) -> usize {
        self.parents.iter().map(|&p| vars[p].size()).product()
    }

    pub fn reads_any(&self, ids: &[VarId]) -> bool {
        self.parents.iter().any(|p| ids.contains(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeKind {
    Observational,
    Interventional,
}

impl RegimeKind {
    pub fn keyword(self) -> &'static str {
        match self {
            RegimeKind::Observational => "observational",
            RegimeKind::Interventional => "interventional",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Regime {
    pub id: String,
    pub kind: RegimeKind,
    /// One kernel per variable; after validation `kernels[v].child == v`.
    pub kernels: Vec<Kernel>,
}

impl Regime {
    pub fn kernel(&self, v: VarId) -> &Kernel {
        &self.kernels[v]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegimeModel {
    pub variables: Vec<Variable>,
    pub base: InformationBase,
    pub regimes: Vec<Regime>,
}

impl RegimeModel {
    /// Builds and validates a model. Kernels may be supplied in any order.
    pub fn new(variables: Vec<Variable>, mut regimes: Vec<Regime>) -> Result<Self> {
        let base = InformationBase::from_variables(&variables).map_err(Error::InvalidModel)?;
        for r in &mut regimes {
            r.kernels.sort_by_key(|k| k.child);
        }
        let model = RegimeModel {
            variables,
            base,
            regimes,
        };
        let violations = validate_model(&model);
        if violations.is_empty() {
            Ok(model)
        } else {
            Err(Error::InvalidModel(violations))
        }
    }

    pub fn var_id(&self, name: &str) -> Result<VarId> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.variables[id]
    }

    pub fn names(&self, ids: &[VarId]) -> Vec<String> {
        ids.iter().map(|&i| self.variables[i].name.clone()).collect()
    }

    pub fn regime(&self, id: &str) -> Result<&Regime> {
        self.regimes
            .iter()
            .find(|r| r.id == id)
            .ok_or_else(|| Error::UnknownRegime(id.to_string()))
    }

    pub fn observational(&self) -> &Regime {
        self.regimes
            .iter()
            .find(|r| r.kind == RegimeKind::Observational)
            .expect("validated model has an observational regime")
    }

    pub fn interventional(&self) -> impl Iterator<Item = &Regime> {
        self.regimes.iter().filter(|r| r.kind == RegimeKind::Interventional)
    }

    pub fn regime_ids(&self) -> Vec<String> {
        self.regimes.iter().map(|r| r.id.clone()).collect()
    }

    pub fn configurations(&self) -> u128 {
        self.variables.iter().map(|v| v.size() as u128).product()
    }

    pub fn is_extended(&self) -> bool {
        self.base.extended
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub regime: Option<String>,
    pub kernel: Option<String>,
    pub row: Option<Vec<String>>,
    pub message: String,
}

impl Violation {
    fn ordering(message: impl Into<String>) -> Self {
        Violation {
            regime: None,
            kernel: None,
            row: None,
            message: message.into(),
        }
    }

    fn at(regime: &str, kernel: Option<&str>, message: impl Into<String>) -> Self {
        Violation {
            regime: Some(regime.to_string()),
            kernel: kernel.map(str::to_string),
            row: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = &self.regime {
            write!(f, "regime `{r}`")?;
            if let Some(k) = &self.kernel {
                write!(f, ", kernel `{k}`")?;
            }
            if let Some(row) = &self.row {
                write!(f, ", row [{}]", row.join(" "))?;
            }
            write!(f, ": ")?;
        }
        write!(f, "{}", self.message)
    }
}

/// Lists every invariant violation; empty iff the model is valid.
pub fn validate_model(model: &RegimeModel) -> Vec<Violation> {
    let vars = &model.variables;
    let mut out = Vec::new();

    let mut seen = HashSet::new();
    for v in vars {
        if !seen.insert(v.name.as_str()) {
            out.push(Violation::ordering(format!("duplicate variable `{}`", v.name)));
        }
        if v.domain.is_empty() {
            out.push(Violation::ordering(format!(
                "variable `{}` has an empty domain",
                v.name
            )));
        }
        let labels: BTreeSet<&String> = v.domain.iter().collect();
        if labels.len() != v.domain.len() {
            out.push(Violation::ordering(format!(
                "variable `{}` repeats a domain value",
                v.name
            )));
        }
    }
    match InformationBase::from_variables(vars) {
        Ok(base) if base != model.base => out.push(Violation::ordering(
            "stored information base does not match the variable order",
        )),
        Ok(_) => {}
        Err(faults) => out.extend(faults),
    }

    let observational = model
        .regimes
        .iter()
        .filter(|r| r.kind == RegimeKind::Observational)
        .count();
    if observational != 1 {
        out.push(Violation::ordering(format!(
            "expected exactly one observational regime, found {observational}"
        )));
    }
    if model.regimes.iter().all(|r| r.kind != RegimeKind::Interventional) {
        out.push(Violation::ordering("no interventional regime"));
    }
    let mut ids = HashSet::new();
    for r in &model.regimes {
        if !ids.insert(r.id.as_str()) {
            out.push(Violation::ordering(format!("duplicate regime id `{}`", r.id)));
        }
        if r.id == "sigma" {
            out.push(Violation::ordering("`sigma` is reserved for the regime indicator"));
        }
    }
    if !out.is_empty() {
        return out;
    }

    for regime in &model.regimes {
        let before = out.len();
        let mut covered = vec![0usize; vars.len()];
        for k in &regime.kernels {
            if k.child >= vars.len() {
                out.push(Violation::at(&regime.id, None, "kernel for an unknown variable"));
                continue;
            }
            covered[k.child] += 1;
        }
        for (v, count) in covered.iter().enumerate() {
            match count {
                1 => {}
                0 => out.push(Violation::at(&regime.id, Some(&vars[v].name), "missing kernel")),
                _ => out.push(Violation::at(&regime.id, Some(&vars[v].name), "duplicate kernel")),
            }
        }
        for (pos, k) in regime.kernels.iter().enumerate() {
            if k.child >= vars.len() {
                continue;
            }
            if pos != k.child {
                out.push(Violation::at(
                    &regime.id,
                    Some(&vars[k.child].name),
                    "kernels are not in factorization order",
                ));
            }
            validate_kernel(vars, &regime.id, k, &mut out);
        }
        if out.len() == before {
            check_unconstrained_rows(model, regime, &mut out);
        }
    }
    out
}

fn validate_kernel(vars: &[Variable], regime: &str, k: &Kernel, out: &mut Vec<Violation>) {
    let child = &vars[k.child];
    let mut parent_set = HashSet::new();
    for &p in &k.parents {
        if p >= vars.len() {
            out.push(Violation::at(regime, Some(&child.name), "unknown parent"));
            return;
        }
        if !parent_set.insert(p) {
            out.push(Violation::at(
                regime,
                Some(&child.name),
                format!("parent `{}` listed twice", vars[p].name),
            ));
        }
        if p >= k.child {
            out.push(Violation::at(
                regime,
                Some(&child.name),
                format!(
                    "ordering: parent `{}` does not precede `{}` in the information base",
                    vars[p].name, child.name
                ),
            ));
        }
    }
    let expected = k.expected_rows(vars);
    if k.rows.len() != expected {
        out.push(Violation::at(
            regime,
            Some(&child.name),
            format!("expected {expected} rows, found {}", k.rows.len()),
        ));
        return;
    }
    for (index, row) in k.rows.iter().enumerate() {
        let Row::Dist(dist) = row else { continue };
        let labels = || Some(row_labels(vars, k, index));
        if dist.len() != child.size() {
            out.push(Violation {
                regime: Some(regime.to_string()),
                kernel: Some(child.name.clone()),
                row: labels(),
                message: format!("row has {} entries, domain has {}", dist.len(), child.size()),
            });
            continue;
        }
        if dist.iter().any(|p| p.is_negative() || *p > rational::one()) {
            out.push(Violation {
                regime: Some(regime.to_string()),
                kernel: Some(child.name.clone()),
                row: labels(),
                message: "probability outside [0, 1]".to_string(),
            });
        }
        let total: Rational = dist.iter().sum();
        if !total.is_one() {
            out.push(Violation {
                regime: Some(regime.to_string()),
                kernel: Some(child.name.clone()),
                row: labels(),
                message: format!("row sums to {}, not 1", rational::fmt_exact(&total)),
            });
        }
    }
}

/// Parent labels of the row at `index`.
pub fn row_labels(vars: &[Variable], k: &Kernel, mut index: usize) -> Vec<String> {
    let mut labels = vec![String::new(); k.parents.len()];
    for (slot, &p) in k.parents.iter().enumerate().rev() {
        let size = vars[p].size();
        labels[slot] = vars[p].domain[index % size].clone();
        index /= size;
    }
    labels
}

fn check_unconstrained_rows(model: &RegimeModel, regime: &Regime, out: &mut Vec<Violation>) {
    let has_unconstrained = regime.kernels.iter().any(|k| k.rows.contains(&Row::Unconstrained));
    if !has_unconstrained {
        return;
    }
    let kernels: Vec<&Kernel> = regime.kernels.iter().collect();
    match joint::joint_from_kernels(&model.variables, &kernels, joint::state_cap()) {
        Ok(_) => {}
        Err(joint::MaterializeError::Unconstrained { child, row }) => out.push(Violation {
            regime: Some(regime.id.clone()),
            kernel: Some(model.variables[child].name.clone()),
            row: Some(row),
            message: "row is marked unconstrained but is reached with positive probability".to_string(),
        }),
        // Too large to verify here; materialization reports it when used.
        Err(joint::MaterializeError::TooLarge { .. }) => {}
    }
}
