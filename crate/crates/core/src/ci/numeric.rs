//! Exact numeric checks of stochastic and extended conditional independence.

use std::fmt;

use num_traits::Zero;
use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::ci::statement::{CiStatement, SIGMA};
use crate::error::{Error, Result};
use crate::joint::{materialize_joint, Joint, JointVar};
use crate::model::RegimeModel;
use crate::rational::{self, ser_rational, Rational};

/// An ordered assignment of labels to variables.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell(pub Vec<(String, String)>);

impl Cell {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn without(&self, name: &str) -> Cell {
        Cell(self.0.iter().filter(|(n, _)| n != name).cloned().collect())
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "(none)");
        }
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}", parts.join(", "))
    }
}

/// One side of a comparison: the conditioning cell and its mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Side {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regime: Option<String>,
    pub given: Cell,
    #[serde(serialize_with = "ser_rational")]
    pub mass: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistRow {
    pub x: Cell,
    #[serde(serialize_with = "ser_rational")]
    pub lhs: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub rhs: Rational,
}

/// Two conditionals of `X` that should agree at `context` but do not.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub context: Cell,
    pub lhs: Side,
    pub rhs: Side,
    pub rows: Vec<DistRow>,
}

impl Witness {
    /// Conditional probability of `x` on each side.
    pub fn probabilities(&self, x: &[(&str, &str)]) -> Option<(&Rational, &Rational)> {
        self.rows
            .iter()
            .find(|r| x.iter().all(|(n, v)| r.x.get(n) == Some(v)))
            .map(|r| (&r.lhs, &r.rhs))
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |s: &Side| {
            let mut parts = Vec::new();
            if !s.given.is_empty() {
                parts.push(s.given.to_string());
            }
            if let Some(r) = &s.regime {
                parts.push(format!("regime {r}"));
            }
            if parts.is_empty() {
                "-".to_string()
            } else {
                parts.join("; ")
            }
        };
        write!(
            f,
            "at {}: [{}] vs [{}]:",
            self.context,
            side(&self.lhs),
            side(&self.rhs)
        )?;
        for row in self.rows.iter().filter(|r| r.lhs != r.rhs) {
            write!(
                f,
                " P({})={} vs {}",
                row.x,
                rational::fmt_exact(&row.lhs),
                rational::fmt_exact(&row.rhs)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VersionRow {
    pub z: Cell,
    #[serde(serialize_with = "rational::ser_rationals")]
    pub probs: Vec<Rational>,
    /// Regimes whose positive-mass cells fix this row; empty means filled uniformly.
    pub constrained_by: Vec<String>,
}

/// `w(x, z)`: a conditional of `X` given `Z` valid in every compared regime.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommonVersion {
    pub x: Vec<String>,
    pub z: Vec<String>,
    pub x_cells: Vec<Cell>,
    pub rows: Vec<VersionRow>,
}

impl CommonVersion {
    pub fn value(&self, z: &[(&str, &str)], x: &[(&str, &str)]) -> Option<&Rational> {
        let row = self
            .rows
            .iter()
            .find(|r| z.iter().all(|(n, v)| r.z.get(n) == Some(v)))?;
        let col = self
            .x_cells
            .iter()
            .position(|c| x.iter().all(|(n, v)| c.get(n) == Some(v)))?;
        row.probs.get(col)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub holds: bool,
    pub witnesses: Vec<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub common_version: Option<CommonVersion>,
}

/// Regime joints materialized once and shared by many checks.
#[derive(Debug, Clone)]
pub struct RegimeJoints {
    entries: Vec<(String, Joint)>,
}

impl RegimeJoints {
    pub fn new(model: &RegimeModel) -> Result<Self> {
        let entries = model
            .regimes
            .iter()
            .map(|r| Ok((r.id.clone(), materialize_joint(model, &r.id)?)))
            .collect::<Result<_>>()?;
        Ok(RegimeJoints { entries })
    }

    pub fn from_entries(entries: Vec<(String, Joint)>) -> Self {
        RegimeJoints { entries }
    }

    pub fn get(&self, id: &str) -> Result<&Joint> {
        self.entries
            .iter()
            .find(|(r, _)| r == id)
            .map(|(_, j)| j)
            .ok_or_else(|| Error::UnknownRegime(id.to_string()))
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|(r, _)| r.as_str()).collect()
    }
}

struct Source<'a> {
    regime: Option<&'a str>,
    joint: &'a Joint,
}

/// The shared engine: within each `z` cell every positive-mass `(source, y)`
/// pair must induce the same conditional of `X`.
fn compare(sources: &[Source], x: &[String], y: &[String], z: &[String]) -> Result<Verdict> {
    let mut witnesses = Vec::new();
    let mut tables = Vec::new();
    for s in sources {
        let mut keep: Vec<&str> = z.iter().map(String::as_str).collect();
        keep.extend(y.iter().map(String::as_str));
        keep.extend(x.iter().map(String::as_str));
        tables.push(s.joint.marginalize(&keep)?);
    }
    let Some(first) = tables.first() else {
        return Err(Error::InvalidStatement("no regime to check".to_string()));
    };
    let vars = first.vars();
    let (zv, rest) = vars.split_at(z.len());
    let (yv, xv) = rest.split_at(y.len());
    let size = |v: &[JointVar]| v.iter().map(|v| v.domain.len()).product::<usize>();
    let (nz, ny, nx) = (size(zv), size(yv), size(xv));
    let cell_of = |v: &[JointVar], index: usize| {
        let mut labels = vec![(String::new(), String::new()); v.len()];
        let mut i = index;
        for (slot, var) in v.iter().enumerate().rev() {
            let d = var.domain.len();
            labels[slot] = (var.name.clone(), var.domain[i % d].clone());
            i /= d;
        }
        Cell(labels)
    };
    let x_cells: Vec<Cell> = (0..nx).map(|i| cell_of(xv, i)).collect();
    let mut rows = Vec::with_capacity(nz);

    for zi in 0..nz {
        let mut reference: Option<(Side, Vec<Rational>)> = None;
        let mut constrained_by: Vec<String> = Vec::new();
        let mut failed = false;
        for (src, table) in sources.iter().zip(&tables) {
            for yi in 0..ny {
                let base = (zi * ny + yi) * nx;
                let slice = &table.probs()[base..base + nx];
                let mass: Rational = slice.iter().sum();
                if mass.is_zero() {
                    continue;
                }
                if let Some(r) = src.regime {
                    if !constrained_by.iter().any(|c| c == r) {
                        constrained_by.push(r.to_string());
                    }
                }
                let cond: Vec<Rational> = slice.iter().map(|p| p / &mass).collect();
                let side = Side {
                    regime: src.regime.map(str::to_string),
                    given: cell_of(yv, yi),
                    mass,
                };
                match &reference {
                    None => reference = Some((side, cond)),
                    Some((ref_side, ref_cond)) => {
                        if !failed && *ref_cond != cond {
                            failed = true;
                            witnesses.push(Witness {
                                context: cell_of(zv, zi),
                                lhs: ref_side.clone(),
                                rhs: side,
                                rows: x_cells
                                    .iter()
                                    .zip(ref_cond.iter().zip(&cond))
                                    .map(|(c, (l, r))| DistRow {
                                        x: c.clone(),
                                        lhs: l.clone(),
                                        rhs: r.clone(),
                                    })
                                    .collect(),
                            });
                        }
                    }
                }
            }
        }
        let probs = match reference {
            Some((_, cond)) => cond,
            None => vec![rational::ratio(1, nx as i64); nx],
        };
        rows.push(VersionRow {
            z: cell_of(zv, zi),
            probs,
            constrained_by,
        });
    }
    let holds = witnesses.is_empty();
    let version = CommonVersion {
        x: x.to_vec(),
        z: z.to_vec(),
        x_cells,
        rows,
    };
    Ok(Verdict {
        holds,
        witnesses,
        common_version: holds.then_some(version),
    })
}

/// `X ⫫ Y | Z` in a single joint.
///
/// `sigma` may appear in the statement when the joint carries a `sigma`
/// variable, as a mixture joint does.
pub fn check_stochastic_ci(joint: &Joint, stmt: &CiStatement) -> Result<Verdict> {
    if stmt.is_trivial() {
        return Ok(Verdict {
            holds: true,
            witnesses: Vec::new(),
            common_version: None,
        });
    }
    let mut v = compare(
        &[Source { regime: None, joint }],
        &stmt.x_names(),
        &stmt.y_names(),
        &stmt.z_names(),
    )?;
    v.common_version = None;
    Ok(v)
}

/// Regime sets over which extended statements are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExtendedMode {
    /// `{o, s}` for each interventional `s` separately.
    #[default]
    Pairwise,
    /// All regimes at once.
    Strict,
}

/// Extended CI over `regimes`.
///
/// * `sigma` on the right: one conditional `w(x, z)` must serve every regime
///   wherever that regime gives `(y, z)` positive mass.
/// * `sigma` in the condition: the statement must hold in each regime separately.
/// * no `sigma`: as above (each regime separately), or in the one regime named
///   by a `; regime=` suffix.
pub fn check_extended_ci(model: &RegimeModel, regimes: &[&str], stmt: &CiStatement) -> Result<Verdict> {
    let mut ids: Vec<&str> = regimes.to_vec();
    if let Some(r) = &stmt.regime {
        ids = vec![r.as_str()];
    }
    let mut entries = Vec::new();
    for id in &ids {
        entries.push((id.to_string(), materialize_joint(model, id)?));
    }
    check_extended_ci_with(&RegimeJoints::from_entries(entries), &ids, stmt)
}

pub fn check_extended_ci_with(joints: &RegimeJoints, regimes: &[&str], stmt: &CiStatement) -> Result<Verdict> {
    let regimes: Vec<&str> = match &stmt.regime {
        Some(r) => vec![r.as_str()],
        None => regimes.to_vec(),
    };
    if regimes.is_empty() {
        return Err(Error::InvalidStatement("no regimes listed".to_string()));
    }
    if stmt.sigma_in_y && regimes.len() < 2 {
        return Err(Error::InvalidStatement(format!(
            "`{stmt}` compares regimes and needs at least two"
        )));
    }
    let sources = regimes
        .iter()
        .map(|r| {
            Ok(Source {
                regime: Some(r),
                joint: joints.get(r)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if stmt.is_trivial() {
        return Ok(Verdict {
            holds: true,
            witnesses: Vec::new(),
            common_version: None,
        });
    }
    let x = stmt.x_names();
    let y: Vec<String> = stmt.y.iter().cloned().collect();
    let z: Vec<String> = stmt.z.iter().cloned().collect();
    if stmt.sigma_in_y {
        return compare(&sources, &x, &y, &z);
    }
    let mut witnesses = Vec::new();
    for s in sources {
        witnesses.extend(compare(&[s], &x, &y, &z)?.witnesses);
    }
    Ok(Verdict {
        holds: witnesses.is_empty(),
        witnesses,
        common_version: None,
    })
}

/// `P* = Σ π(s) P_s` over `(sigma, variables)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureJoint {
    pub prior: Vec<(String, Rational)>,
    pub joint: Joint,
}

pub fn mixture_joint(model: &RegimeModel, prior: &[(String, Rational)]) -> Result<MixtureJoint> {
    let joints = RegimeJoints::new(model)?;
    mixture_joint_with(model, &joints, prior)
}

pub fn mixture_joint_with(
    model: &RegimeModel,
    joints: &RegimeJoints,
    prior: &[(String, Rational)],
) -> Result<MixtureJoint> {
    if prior.is_empty() {
        return Err(Error::InvalidPrior("empty prior".to_string()));
    }
    let mut total = rational::zero();
    for (i, (id, p)) in prior.iter().enumerate() {
        model.regime(id)?;
        if prior[..i].iter().any(|(other, _)| other == id) {
            return Err(Error::InvalidPrior(format!("regime `{id}` listed twice")));
        }
        if *p <= rational::zero() {
            return Err(Error::InvalidPrior(format!(
                "prior of `{id}` is {}, must be positive",
                rational::fmt_exact(p)
            )));
        }
        total += p;
    }
    if total != rational::one() {
        return Err(Error::InvalidPrior(format!(
            "prior sums to {}, not 1",
            rational::fmt_exact(&total)
        )));
    }
    let mut vars = vec![JointVar {
        name: SIGMA.to_string(),
        domain: prior.iter().map(|(id, _)| id.clone()).collect(),
    }];
    vars.extend(model.variables.iter().map(JointVar::from));
    let mut probs = Vec::new();
    for (id, p) in prior {
        probs.extend(joints.get(id)?.probs().iter().map(|q| q * p));
    }
    Ok(MixtureJoint {
        prior: prior.to_vec(),
        joint: Joint::new(vars, probs)?,
    })
}

/// Equal prior mass on every regime of the model.
pub fn uniform_prior(model: &RegimeModel) -> Vec<(String, Rational)> {
    let n = model.regimes.len() as i64;
    model
        .regimes
        .iter()
        .map(|r| (r.id.clone(), rational::ratio(1, n)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VersionMismatch {
    pub given: Cell,
    #[serde(serialize_with = "ser_rational")]
    pub mass: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub expectation: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub candidate: Rational,
}

/// Whether `candidate(given labels)` is a version of `E(target | given)` in `joint`.
///
/// Target labels are read as numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VersionCheck {
    pub valid: bool,
    pub mismatches: Vec<VersionMismatch>,
}

pub fn check_expectation_version(
    joint: &Joint,
    target: &str,
    given: &[&str],
    candidate: &dyn Fn(&[&str]) -> Rational,
) -> Result<VersionCheck> {
    let mut keep: Vec<&str> = given.to_vec();
    keep.push(target);
    let table = joint.marginalize(&keep)?;
    let tvar = &table.vars()[given.len()];
    let values = tvar
        .domain
        .iter()
        .map(|l| {
            rational::parse_rational(l)
                .ok_or_else(|| Error::InvalidStatement(format!("value `{l}` of `{target}` is not numeric")))
        })
        .collect::<Result<Vec<_>>>()?;
    let nt = values.len();
    let mut mismatches = Vec::new();
    for gi in 0..table.probs().len() / nt {
        let slice = &table.probs()[gi * nt..(gi + 1) * nt];
        let mass: Rational = slice.iter().sum();
        if mass.is_zero() {
            continue;
        }
        let expectation: Rational = slice.iter().zip(&values).map(|(p, v)| p * v).sum::<Rational>() / &mass;
        let labels: Vec<(String, String)> = table.labels(gi * nt)[..given.len()].to_vec();
        let refs: Vec<&str> = labels.iter().map(|(_, v)| v.as_str()).collect();
        let c = candidate(&refs);
        if c != expectation {
            mismatches.push(VersionMismatch {
                given: Cell(labels),
                mass,
                expectation,
                candidate: c,
            });
        }
    }
    Ok(VersionCheck {
        valid: mismatches.is_empty(),
        mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn two_by_two(probs: [i64; 8]) -> Joint {
        let var = |n: &str| JointVar {
            name: n.into(),
            domain: vec!["0".into(), "1".into()],
        };
        Joint::new(
            vec![var("Z"), var("Y"), var("X")],
            probs.iter().map(|&p| ratio(p, 100)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn independent_product_holds_and_dependence_fails() {
        let j = two_by_two([6, 14, 9, 21, 10, 10, 15, 15]);
        let s = CiStatement::new(["X"], ["Y"], ["Z"], false, false).unwrap();
        assert!(check_stochastic_ci(&j, &s).unwrap().holds);
        let j = two_by_two([10, 10, 10, 20, 10, 10, 15, 15]);
        let v = check_stochastic_ci(&j, &s).unwrap();
        assert!(!v.holds);
        assert_eq!(v.witnesses.len(), 1);
        assert_eq!(v.witnesses[0].context.get("Z"), Some("0"));
        assert_eq!(
            v.witnesses[0].probabilities(&[("X", "1")]),
            Some((&ratio(1, 2), &ratio(2, 3)))
        );
    }

    #[test]
    fn zero_mass_cells_impose_nothing() {
        let j = two_by_two([0, 0, 9, 21, 10, 10, 0, 0]);
        let s = CiStatement::new(["X"], ["Y"], ["Z"], false, false).unwrap();
        assert!(check_stochastic_ci(&j, &s).unwrap().holds);
    }
}
