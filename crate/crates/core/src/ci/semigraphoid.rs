//! Symbolic closure of CI statements under symmetry, decomposition, weak
//! union and contraction. Triviality is built in: statements with an empty
//! side are never stored and always count as derivable.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::ci::statement::{CiStatement, SIGMA};
use crate::error::{Error, Result};

pub const DEFAULT_GROUND_CAP: usize = 8;

type Mask = u32;
type Key = u32;

fn key(x: Mask, y: Mask, z: Mask) -> Key {
    x | (y << 8) | (z << 16)
}

fn parts(k: Key) -> (Mask, Mask, Mask) {
    (k & 0xff, (k >> 8) & 0xff, (k >> 16) & 0xff)
}

/// Non-empty proper subsets of `set` in increasing numeric order.
fn proper_subsets(set: Mask) -> impl Iterator<Item = Mask> {
    (1..set).filter(move |s| s & !set == 0)
}

/// Non-empty subsets of `set`, including `set` itself.
fn subsets(set: Mask) -> impl Iterator<Item = Mask> {
    (1..=set).filter(move |s| s & !set == 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Premise,
    Symmetry,
    Decomposition,
    #[serde(rename = "weak union")]
    WeakUnion,
    Contraction,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Premise => "premise",
            Rule::Symmetry => "symmetry",
            Rule::Decomposition => "decomposition",
            Rule::WeakUnion => "weak union",
            Rule::Contraction => "contraction",
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Origin {
    rule: Rule,
    from: [Option<Key>; 2],
}

/// The least set containing the premises and closed under the rules.
#[derive(Debug, Clone)]
pub struct Closure {
    ground: Vec<String>,
    derived: HashMap<Key, Origin>,
    order: Vec<Key>,
}

impl Closure {
    pub fn ground(&self) -> &[String] {
        &self.ground
    }

    fn mask(&self, names: impl IntoIterator<Item = String>) -> Result<Mask> {
        let mut m = 0;
        for n in names {
            let i = self
                .ground
                .iter()
                .position(|g| *g == n)
                .ok_or_else(|| Error::InvalidStatement(format!("`{n}` is not in the ground set")))?;
            m |= 1 << i;
        }
        Ok(m)
    }

    fn key_of(&self, stmt: &CiStatement) -> Result<(Mask, Mask, Mask)> {
        if stmt.regime.is_some() {
            return Err(Error::InvalidStatement(format!(
                "`{stmt}`: regime suffixes are not supported in derivations"
            )));
        }
        Ok((
            self.mask(stmt.x_names())?,
            self.mask(stmt.y_names())?,
            self.mask(stmt.z_names())?,
        ))
    }

    fn names(&self, m: Mask) -> BTreeSet<String> {
        (0..self.ground.len())
            .filter(|i| m & (1 << i) != 0)
            .map(|i| self.ground[i].clone())
            .collect()
    }

    fn statement(&self, k: Key) -> CiStatement {
        let (x, y, z) = parts(k);
        CiStatement::from_names(&self.names(x), &self.names(y), &self.names(z))
            .expect("closure statements are disjoint and sigma-consistent")
    }

    pub fn contains(&self, stmt: &CiStatement) -> Result<bool> {
        let (x, y, z) = self.key_of(stmt)?;
        Ok(x == 0 || y == 0 || self.derived.contains_key(&key(x, y, z)))
    }

    /// Non-trivial members, one orientation per symmetric pair.
    pub fn statements(&self) -> BTreeSet<CiStatement> {
        self.order.iter().map(|&k| self.statement(k).oriented()).collect()
    }

    pub fn len(&self) -> usize {
        self.derived.len()
    }

    pub fn is_empty(&self) -> bool {
        self.derived.is_empty()
    }

    fn insert(&mut self, queue: &mut VecDeque<Key>, x: Mask, y: Mask, z: Mask, origin: Origin) {
        if x == 0 || y == 0 {
            return;
        }
        let k = key(x, y, z);
        if let std::collections::hash_map::Entry::Vacant(e) = self.derived.entry(k) {
            e.insert(origin);
            self.order.push(k);
            queue.push_back(k);
        }
    }

    fn run(&mut self, mut queue: VecDeque<Key>) {
        let all: Mask = (1 << self.ground.len()) - 1;
        while let Some(k) = queue.pop_front() {
            let (x, y, z) = parts(k);
            let from1 = |rule| Origin {
                rule,
                from: [Some(k), None],
            };
            self.insert(&mut queue, y, x, z, from1(Rule::Symmetry));
            for w in proper_subsets(y) {
                self.insert(&mut queue, x, w, z, from1(Rule::Decomposition));
            }
            for w in proper_subsets(y) {
                self.insert(&mut queue, x, y & !w, z | w, from1(Rule::WeakUnion));
            }
            // (x, y | z) with (x, w | z y)  =>  (x, y w | z)
            let rest = all & !(x | y | z);
            for w in subsets(rest) {
                let other = key(x, w, z | y);
                if self.derived.contains_key(&other) {
                    let origin = Origin {
                        rule: Rule::Contraction,
                        from: [Some(k), Some(other)],
                    };
                    self.insert(&mut queue, x, y | w, z, origin);
                }
            }
            // k plays the second role: (x, y | z') with z' = b \ y
            for part in subsets(z) {
                let other = key(x, part, z & !part);
                if self.derived.contains_key(&other) {
                    let origin = Origin {
                        rule: Rule::Contraction,
                        from: [Some(other), Some(k)],
                    };
                    self.insert(&mut queue, x, part | y, z & !part, origin);
                }
            }
        }
    }

    /// Axiom applications leading to `stmt`, premises first.
    pub fn trace(&self, stmt: &CiStatement) -> Result<Option<Vec<TraceStep>>> {
        let (x, y, z) = self.key_of(stmt)?;
        if x == 0 || y == 0 {
            return Ok(Some(vec![TraceStep {
                rule: "triviality",
                premises: Vec::new(),
                conclusion: stmt.to_string(),
            }]));
        }
        let target = key(x, y, z);
        if !self.derived.contains_key(&target) {
            return Ok(None);
        }
        let mut steps = Vec::new();
        let mut done = BTreeSet::new();
        let mut stack = vec![(target, false)];
        while let Some((k, expanded)) = stack.pop() {
            if done.contains(&k) {
                continue;
            }
            let origin = self.derived[&k];
            if origin.rule == Rule::Premise {
                done.insert(k);
                continue;
            }
            if expanded {
                done.insert(k);
                steps.push(TraceStep {
                    rule: origin.rule.name(),
                    premises: origin.from.iter().flatten().map(|&p| self.render(p)).collect(),
                    conclusion: self.render(k),
                });
            } else {
                stack.push((k, true));
                for p in origin.from.iter().rev().flatten() {
                    if !done.contains(p) {
                        stack.push((*p, false));
                    }
                }
            }
        }
        Ok(Some(steps))
    }

    /// Statements keep their stored orientation in traces, so sigma may appear on the left.
    fn render(&self, k: Key) -> String {
        let (x, y, z) = parts(k);
        let side = |m: Mask| {
            let n: Vec<String> = self.names(m).into_iter().collect();
            if n.is_empty() {
                "()".to_string()
            } else {
                n.join(",")
            }
        };
        if z == 0 {
            format!("{} _||_ {}", side(x), side(y))
        } else {
            format!("{} _||_ {} | {}", side(x), side(y), side(z))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub rule: &'static str,
    pub premises: Vec<String>,
    pub conclusion: String,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.premises.is_empty() {
            write!(f, "{} [{}]", self.conclusion, self.rule)
        } else {
            write!(
                f,
                "{} [{} from {}]",
                self.conclusion,
                self.rule,
                self.premises.join(" ; ")
            )
        }
    }
}

fn symbols(stmt: &CiStatement) -> impl Iterator<Item = String> + '_ {
    stmt.x_names().into_iter().chain(stmt.y_names()).chain(stmt.z_names())
}

/// Ground set: the given symbols, else every symbol in `statements`, sorted
/// with `sigma` last.
fn ground_set(statements: &[&CiStatement], ground: Option<&[String]>) -> Vec<String> {
    let mut set: BTreeSet<String> = match ground {
        Some(g) => g.iter().cloned().collect(),
        None => statements.iter().flat_map(|s| symbols(s)).collect(),
    };
    let sigma = set.remove(SIGMA);
    let mut out: Vec<String> = set.into_iter().collect();
    if sigma {
        out.push(SIGMA.to_string());
    }
    out
}

/// Symbols are bitmask positions, so the cap is also a hard limit.
pub fn semigraphoid_close(premises: &[CiStatement], ground: Option<&[String]>) -> Result<Closure> {
    let refs: Vec<&CiStatement> = premises.iter().collect();
    let ground = ground_set(&refs, ground);
    if ground.len() > DEFAULT_GROUND_CAP {
        return Err(Error::CapExceeded {
            what: "ground symbols",
            count: ground.len() as u128,
            cap: DEFAULT_GROUND_CAP as u128,
        });
    }
    let mut closure = Closure {
        ground,
        derived: HashMap::new(),
        order: Vec::new(),
    };
    let mut queue = VecDeque::new();
    for p in premises {
        let (x, y, z) = closure.key_of(p)?;
        closure.insert(
            &mut queue,
            x,
            y,
            z,
            Origin {
                rule: Rule::Premise,
                from: [None, None],
            },
        );
    }
    closure.run(queue);
    Ok(closure)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Derivation {
    pub derivable: bool,
    pub ground: Vec<String>,
    pub closure_size: usize,
    pub trace: Vec<TraceStep>,
}

/// Whether `target` follows from `premises`, with the derivation when it does.
pub fn derivable(premises: &[CiStatement], target: &CiStatement, ground: Option<&[String]>) -> Result<Derivation> {
    let mut refs: Vec<&CiStatement> = premises.iter().collect();
    refs.push(target);
    let ground = ground_set(&refs, ground);
    let closure = semigraphoid_close(premises, Some(&ground))?;
    let trace = closure.trace(target)?;
    Ok(Derivation {
        derivable: trace.is_some(),
        ground,
        closure_size: closure.len(),
        trace: trace.unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_ci;

    fn stmts(texts: &[&str]) -> Vec<CiStatement> {
        texts.iter().map(|t| parse_ci(t).unwrap()).collect()
    }

    #[test]
    fn decomposition_and_contraction() {
        let c = semigraphoid_close(&stmts(&["X _||_ Y,W | Z"]), None).unwrap();
        assert!(c.contains(&parse_ci("X _||_ Y | Z").unwrap()).unwrap());
        assert!(c.contains(&parse_ci("W _||_ X | Z,Y").unwrap()).unwrap());
        let c = semigraphoid_close(&stmts(&["X _||_ Y | Z", "X _||_ W | Y,Z"]), None).unwrap();
        assert!(c.contains(&parse_ci("X _||_ Y,W | Z").unwrap()).unwrap());
    }

    #[test]
    fn empty_premises_close_to_nothing_but_trivia() {
        let ground: Vec<String> = ["A", "B"].iter().map(|s| s.to_string()).collect();
        let c = semigraphoid_close(&[], Some(&ground)).unwrap();
        assert!(c.is_empty());
        assert!(c.contains(&parse_ci("A _||_ B | A").unwrap()).unwrap());
        assert!(!c.contains(&parse_ci("A _||_ B").unwrap()).unwrap());
    }

    #[test]
    fn premise_target_has_empty_trace() {
        let p = stmts(&["A _||_ B | C"]);
        let d = derivable(&p, &p[0], None).unwrap();
        assert!(d.derivable);
        assert!(d.trace.is_empty());
        let d = derivable(&p, &parse_ci("B _||_ A | C").unwrap(), None).unwrap();
        assert_eq!(d.trace.len(), 1);
        assert_eq!(d.trace[0].rule, "symmetry");
    }

    #[test]
    fn ground_cap() {
        let p = stmts(&["A _||_ B,C,D,E,F,G,H | I"]);
        assert!(matches!(semigraphoid_close(&p, None), Err(Error::CapExceeded { .. })));
    }
}
