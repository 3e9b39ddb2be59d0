//! Dense joint probability tables.
//!
//! Full-joint materialization is the reference semantics of the engine: every
//! check and every consequence can be traced back to sums over one of these
//! tables. Tables are indexed in mixed radix, first variable most significant.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::model::{row_labels, Kernel, RegimeModel, Row, Variable};
use crate::rational::{self, Rational};

/// Default bound on the number of full configurations a model may have.
pub const DEFAULT_STATE_CAP: u128 = 1_000_000;

/// Environment variable overriding [`DEFAULT_STATE_CAP`].
pub const STATE_CAP_ENV: &str = "REGIME_MAX_STATES";

pub fn state_cap() -> u128 {
    std::env::var(STATE_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_STATE_CAP)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointVar {
    pub name: String,
    pub domain: Vec<String>,
}

impl From<&Variable> for JointVar {
    fn from(v: &Variable) -> Self {
        JointVar {
            name: v.name.clone(),
            domain: v.domain.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    vars: Vec<JointVar>,
    probs: Vec<Rational>,
}

/// Result of conditioning: a zero-mass slice is reported, never divided.
#[derive(Debug, Clone, PartialEq)]
pub enum Conditional {
    Defined(Joint),
    Undefined,
}

impl Conditional {
    pub fn defined(self) -> Option<Joint> {
        match self {
            Conditional::Defined(j) => Some(j),
            Conditional::Undefined => None,
        }
    }
}

impl Joint {
    pub fn new(vars: Vec<JointVar>, probs: Vec<Rational>) -> Result<Self> {
        let size: usize = vars.iter().map(|v| v.domain.len()).product();
        if size != probs.len() {
            return Err(Error::InvalidModel(vec![crate::model::Violation {
                regime: None,
                kernel: None,
                row: None,
                message: format!("joint table has {} cells, expected {size}", probs.len()),
            }]));
        }
        Ok(Joint { vars, probs })
    }

    /// A joint over no variables with mass 1.
    pub fn unit() -> Self {
        Joint {
            vars: Vec::new(),
            probs: vec![rational::one()],
        }
    }

    pub fn vars(&self) -> &[JointVar] {
        &self.vars
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.vars.iter().map(|v| v.domain.len()).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn total(&self) -> Rational {
        self.probs.iter().sum()
    }

    /// Decodes a cell index into per-variable value indices.
    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.vars.len()];
        for (slot, var) in self.vars.iter().enumerate().rev() {
            let size = var.domain.len();
            out[slot] = index % size;
            index /= size;
        }
        out
    }

    pub fn encode(&self, values: &[usize]) -> usize {
        values
            .iter()
            .zip(&self.vars)
            .fold(0, |acc, (&v, var)| acc * var.domain.len() + v)
    }

    /// Labels of the cell at `index`.
    pub fn labels(&self, index: usize) -> Vec<(String, String)> {
        self.decode(index)
            .into_iter()
            .zip(&self.vars)
            .map(|(v, var)| (var.name.clone(), var.domain[v].clone()))
            .collect()
    }

    /// Table over `keep`, in the order given.
    pub fn marginalize<S: AsRef<str>>(&self, keep: &[S]) -> Result<Joint> {
        let slots = keep
            .iter()
            .map(|name| self.index_of(name.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let mut seen = vec![false; self.vars.len()];
        for &s in &slots {
            if std::mem::replace(&mut seen[s], true) {
                return Err(Error::InvalidStatement(format!(
                    "variable `{}` kept twice",
                    self.vars[s].name
                )));
            }
        }
        Ok(self.marginalize_slots(&slots))
    }

    pub(crate) fn marginalize_slots(&self, slots: &[usize]) -> Joint {
        let vars: Vec<JointVar> = slots.iter().map(|&s| self.vars[s].clone()).collect();
        let sizes = self.sizes();
        let size: usize = vars.iter().map(|v| v.domain.len()).product();
        let mut probs = vec![rational::zero(); size];
        let mut digits = vec![0usize; sizes.len()];
        for p in &self.probs {
            if !p.is_zero() {
                let mut index = 0;
                for &s in slots {
                    index = index * sizes[s] + digits[s];
                }
                probs[index] += p;
            }
            // odometer increment
            for slot in (0..digits.len()).rev() {
                digits[slot] += 1;
                if digits[slot] < sizes[slot] {
                    break;
                }
                digits[slot] = 0;
            }
        }
        Joint { vars, probs }
    }

    /// Marginal mass of a partial assignment.
    pub fn prob<A: AsRef<str>, B: AsRef<str>>(&self, assignment: &[(A, B)]) -> Result<Rational> {
        let fixed = self.resolve(assignment)?;
        let mut total = rational::zero();
        for (index, p) in self.probs.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let values = self.decode(index);
            if fixed.iter().all(|&(slot, v)| values[slot] == v) {
                total += p;
            }
        }
        Ok(total)
    }

    /// Renormalized slice given a partial assignment, over the remaining variables.
    pub fn condition<A: AsRef<str>, B: AsRef<str>>(&self, given: &[(A, B)]) -> Result<Conditional> {
        let fixed = self.resolve(given)?;
        let rest: Vec<usize> = (0..self.vars.len())
            .filter(|s| !fixed.iter().any(|(f, _)| f == s))
            .collect();
        let vars: Vec<JointVar> = rest.iter().map(|&s| self.vars[s].clone()).collect();
        let size: usize = vars.iter().map(|v| v.domain.len()).product();
        let mut probs = vec![rational::zero(); size];
        let mut mass = rational::zero();
        for (index, p) in self.probs.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let values = self.decode(index);
            if fixed.iter().all(|&(slot, v)| values[slot] == v) {
                let sub = rest
                    .iter()
                    .fold(0, |acc, &s| acc * self.vars[s].domain.len() + values[s]);
                probs[sub] += p;
                mass += p;
            }
        }
        if mass.is_zero() {
            return Ok(Conditional::Undefined);
        }
        for p in &mut probs {
            *p /= &mass;
        }
        Ok(Conditional::Defined(Joint { vars, probs }))
    }

    fn resolve<A: AsRef<str>, B: AsRef<str>>(&self, assignment: &[(A, B)]) -> Result<Vec<(usize, usize)>> {
        assignment
            .iter()
            .map(|(name, label)| {
                let slot = self.index_of(name.as_ref())?;
                let value = self.vars[slot]
                    .domain
                    .iter()
                    .position(|d| d == label.as_ref())
                    .ok_or_else(|| {
                        Error::InvalidStatement(format!("`{}` is not a value of `{}`", label.as_ref(), name.as_ref()))
                    })?;
                Ok((slot, value))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MaterializeError {
    TooLarge {
        configurations: u128,
        cap: u128,
    },
    /// An unconstrained row was reached with positive probability.
    Unconstrained {
        child: usize,
        row: Vec<String>,
    },
}

/// Product of kernel rows over the prefix `vars[..kernels.len()]`.
///
/// Zero-mass prefixes are pruned, so unconstrained rows are only an error
/// when they are actually reached.
pub fn joint_from_kernels(
    vars: &[Variable],
    kernels: &[&Kernel],
    cap: u128,
) -> std::result::Result<Joint, MaterializeError> {
    let vars = &vars[..kernels.len()];
    let configurations: u128 = vars.iter().map(|v| v.size() as u128).product();
    if configurations > cap {
        return Err(MaterializeError::TooLarge { configurations, cap });
    }
    let mut probs = vec![rational::zero(); configurations as usize];
    let mut config = vec![0usize; vars.len()];
    fill(vars, kernels, 0, 0, &rational::one(), &mut config, &mut probs)?;
    Ok(Joint {
        vars: vars.iter().map(JointVar::from).collect(),
        probs,
    })
}

fn fill(
    vars: &[Variable],
    kernels: &[&Kernel],
    depth: usize,
    index: usize,
    mass: &Rational,
    config: &mut [usize],
    out: &mut [Rational],
) -> std::result::Result<(), MaterializeError> {
    if depth == vars.len() {
        out[index] = mass.clone();
        return Ok(());
    }
    let kernel = kernels[depth];
    let row = kernel.row_for(vars, config);
    let Row::Dist(dist) = row else {
        let row_index = kernel
            .parents
            .iter()
            .fold(0, |acc, &p| acc * vars[p].size() + config[p]);
        return Err(MaterializeError::Unconstrained {
            child: depth,
            row: row_labels(vars, kernel, row_index),
        });
    };
    let size = vars[depth].size();
    for (value, p) in dist.iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        config[depth] = value;
        let next = mass * p;
        fill(vars, kernels, depth + 1, index * size + value, &next, config, out)?;
    }
    config[depth] = 0;
    Ok(())
}

/// Joint distribution of all variables under `regime`.
pub fn materialize_joint(model: &RegimeModel, regime: &str) -> Result<Joint> {
    let r = model.regime(regime)?;
    let kernels: Vec<&Kernel> = r.kernels.iter().collect();
    joint_from_kernels(&model.variables, &kernels, state_cap()).map_err(|e| match e {
        MaterializeError::TooLarge { configurations, cap } => Error::StateSpace { configurations, cap },
        MaterializeError::Unconstrained { child, row } => Error::InvalidModel(vec![crate::model::Violation {
            regime: Some(regime.to_string()),
            kernel: Some(model.variables[child].name.clone()),
            row: Some(row),
            message: "row is marked unconstrained but is reached with positive probability".to_string(),
        }]),
    })
}
