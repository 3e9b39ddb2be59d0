//! Influence diagrams: DAGs over stochastic nodes plus an optional regime
//! node `sigma`, queried by d-separation or moralization.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::ci::statement::{CiStatement, SIGMA};
use crate::error::{Error, Result};

/// Node cap for [`InfluenceDiagram::implied_ci`].
pub const DEFAULT_NODE_CAP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Stochastic,
    Regime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfluenceDiagram {
    nodes: Vec<Node>,
    /// Sorted by (parent, child) node index.
    edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

/// Per node and arrival direction, the state it was reached from (`Some(None)` for a start).
type Reach = Vec<[Option<Option<(usize, Dir)>>; 2]>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    /// Arrived from a child.
    Up,
    /// Arrived from a parent.
    Down,
}

/// The outcome of a d-separation query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Separation {
    pub separated: bool,
    /// An unblocked path from X to Y when not separated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub active_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Represented {
    pub statement: String,
    pub implied: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Representation {
    pub all_implied: bool,
    pub statements: Vec<Represented>,
}

impl InfluenceDiagram {
    /// Builds a diagram; a node named `sigma` is the regime node.
    pub fn new<S: AsRef<str>>(nodes: &[S], edges: &[(S, S)]) -> Result<Self> {
        let mut list: Vec<Node> = Vec::new();
        for n in nodes {
            let name = n.as_ref();
            if list.iter().any(|m| m.name == name) {
                return Err(Error::InvalidDiagram(format!("duplicate node `{name}`")));
            }
            let kind = if name == SIGMA {
                NodeKind::Regime
            } else {
                NodeKind::Stochastic
            };
            list.push(Node {
                name: name.to_string(),
                kind,
            });
        }
        let id = |name: &str| {
            list.iter()
                .position(|m| m.name == name)
                .ok_or_else(|| Error::UnknownNode(name.to_string()))
        };
        let mut pairs = Vec::new();
        for (a, b) in edges {
            let (a, b) = (id(a.as_ref())?, id(b.as_ref())?);
            if a == b {
                return Err(Error::InvalidDiagram(format!("self-loop on `{}`", list[a].name)));
            }
            if pairs.contains(&(a, b)) {
                return Err(Error::InvalidDiagram(format!(
                    "duplicate edge {} -> {}",
                    list[a].name, list[b].name
                )));
            }
            if list[b].kind == NodeKind::Regime {
                return Err(Error::InvalidDiagram(
                    "the regime node `sigma` cannot have parents".to_string(),
                ));
            }
            pairs.push((a, b));
        }
        pairs.sort_unstable();
        let n = list.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(a, b) in &pairs {
            parents[b].push(a);
            children[a].push(b);
        }
        let dag = InfluenceDiagram {
            nodes: list,
            edges: pairs,
            parents,
            children,
        };
        if let Some(cycle) = dag.find_cycle() {
            return Err(Error::InvalidDiagram(format!("cycle detected: {}", cycle.join(" -> "))));
        }
        Ok(dag)
    }

    fn find_cycle(&self) -> Option<Vec<String>> {
        // 0 unvisited, 1 on stack, 2 done
        let mut state = vec![0u8; self.nodes.len()];
        let mut stack_path: Vec<usize> = Vec::new();
        fn visit(g: &InfluenceDiagram, v: usize, state: &mut [u8], path: &mut Vec<usize>) -> Option<Vec<usize>> {
            state[v] = 1;
            path.push(v);
            for &c in &g.children[v] {
                if state[c] == 1 {
                    let start = path.iter().position(|&p| p == c).expect("on stack");
                    let mut cycle = path[start..].to_vec();
                    cycle.push(c);
                    return Some(cycle);
                }
                if state[c] == 0 {
                    if let Some(cycle) = visit(g, c, state, path) {
                        return Some(cycle);
                    }
                }
            }
            path.pop();
            state[v] = 2;
            None
        }
        for v in 0..self.nodes.len() {
            if state[v] == 0 {
                if let Some(c) = visit(self, v, &mut state, &mut stack_path) {
                    return Some(c.into_iter().map(|i| self.nodes[i].name.clone()).collect());
                }
            }
        }
        None
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> Vec<(&str, &str)> {
        self.edges
            .iter()
            .map(|&(a, b)| (self.nodes[a].name.as_str(), self.nodes[b].name.as_str()))
            .collect()
    }

    pub fn node_id(&self, name: &str) -> Result<usize> {
        let name = if name == "σ" { SIGMA } else { name };
        self.nodes
            .iter()
            .position(|n| n.name == name)
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    /// Copy with one edge removed.
    pub fn without_edge(&self, from: &str, to: &str) -> Result<Self> {
        let names: Vec<&str> = self.nodes.iter().map(|n| n.name.as_str()).collect();
        let edges: Vec<(&str, &str)> = self
            .edges()
            .into_iter()
            .filter(|&(a, b)| !(a == from && b == to))
            .collect();
        InfluenceDiagram::new(&names, &edges)
    }

    fn ids(&self, names: &[String]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.node_id(n)).collect()
    }

    fn check_disjoint(&self, sets: [&[usize]; 3]) -> Result<()> {
        let mut seen = vec![false; self.nodes.len()];
        for set in sets {
            for &v in set {
                if std::mem::replace(&mut seen[v], true) {
                    return Err(Error::InvalidStatement(format!(
                        "node `{}` appears in more than one set",
                        self.nodes[v].name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Nodes in `set` or with a descendant in `set`.
    fn ancestors(&self, set: &[usize]) -> Vec<bool> {
        let mut mark = vec![false; self.nodes.len()];
        let mut queue: VecDeque<usize> = set.iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            if !std::mem::replace(&mut mark[v], true) {
                queue.extend(&self.parents[v]);
            }
        }
        mark
    }

    /// Reachability along active trails from `x` given `z`.
    /// Returns the predecessor map over (node, direction) states.
    fn active_reach(&self, x: &[usize], z: &[usize]) -> Reach {
        let n = self.nodes.len();
        let mut in_z = vec![false; n];
        for &v in z {
            in_z[v] = true;
        }
        let anc = self.ancestors(z);
        let slot = |d: Dir| if d == Dir::Up { 0 } else { 1 };
        // visited[v][dir] = Some(predecessor) once reached; predecessor None for sources
        let mut visited: Reach = vec![[None, None]; n];
        let mut queue = VecDeque::new();
        for &v in x {
            visited[v][0] = Some(None);
            queue.push_back((v, Dir::Up));
        }
        while let Some((v, dir)) = queue.pop_front() {
            let mut next = Vec::new();
            match dir {
                Dir::Up if !in_z[v] => {
                    next.extend(self.parents[v].iter().map(|&p| (p, Dir::Up)));
                    next.extend(self.children[v].iter().map(|&c| (c, Dir::Down)));
                }
                Dir::Up => {}
                Dir::Down => {
                    if !in_z[v] {
                        next.extend(self.children[v].iter().map(|&c| (c, Dir::Down)));
                    }
                    if anc[v] {
                        next.extend(self.parents[v].iter().map(|&p| (p, Dir::Up)));
                    }
                }
            }
            for (w, d) in next {
                if visited[w][slot(d)].is_none() {
                    visited[w][slot(d)] = Some(Some((v, dir)));
                    queue.push_back((w, d));
                }
            }
        }
        visited
    }

    pub fn d_separated(&self, x: &[String], y: &[String], z: &[String]) -> Result<Separation> {
        let (xi, yi, zi) = (self.ids(x)?, self.ids(y)?, self.ids(z)?);
        self.check_disjoint([&xi, &yi, &zi])?;
        Ok(self.d_separated_ids(&xi, &yi, &zi))
    }

    fn d_separated_ids(&self, x: &[usize], y: &[usize], z: &[usize]) -> Separation {
        let visited = self.active_reach(x, z);
        for &t in y {
            for s in 0..2 {
                if visited[t][s].is_some() {
                    let start = (t, if s == 0 { Dir::Up } else { Dir::Down });
                    return Separation {
                        separated: false,
                        active_path: Some(self.render_path(&visited, start, x, y)),
                    };
                }
            }
        }
        Separation {
            separated: true,
            active_path: None,
        }
    }

    fn render_path(&self, visited: &Reach, end: (usize, Dir), x: &[usize], y: &[usize]) -> String {
        let slot = |d: Dir| if d == Dir::Up { 0 } else { 1 };
        let mut states = vec![end];
        let mut cur = end;
        while let Some(Some(prev)) = visited[cur.0][slot(cur.1)] {
            states.push(prev);
            cur = prev;
        }
        states.reverse();
        // any sub-trail of an active trail is active: keep the part between the last X and the first Y
        let first_y = states.iter().position(|s| y.contains(&s.0)).unwrap_or(states.len() - 1);
        states.truncate(first_y + 1);
        let last_x = states.iter().rposition(|s| x.contains(&s.0)).unwrap_or(0);
        states.drain(..last_x);
        let mut text = self.nodes[states[0].0].name.clone();
        for pair in states.windows(2) {
            // entering `to` from above (Down) means the edge points at it
            let arrow = if pair[1].1 == Dir::Down { "->" } else { "<-" };
            text.push_str(&format!(" {arrow} {}", self.nodes[pair[1].0].name));
        }
        text
    }

    pub fn moral_separated(&self, x: &[String], y: &[String], z: &[String]) -> Result<bool> {
        let (xi, yi, zi) = (self.ids(x)?, self.ids(y)?, self.ids(z)?);
        self.check_disjoint([&xi, &yi, &zi])?;
        Ok(self.moral_separated_ids(&xi, &yi, &zi))
    }

    fn moral_separated_ids(&self, x: &[usize], y: &[usize], z: &[usize]) -> bool {
        let n = self.nodes.len();
        let all: Vec<usize> = x.iter().chain(y).chain(z).copied().collect();
        let keep = self.ancestors(&all);
        let mut adj = vec![BTreeSet::new(); n];
        for v in (0..n).filter(|&v| keep[v]) {
            let ps = &self.parents[v];
            for &p in ps {
                adj[v].insert(p);
                adj[p].insert(v);
            }
            for (i, &a) in ps.iter().enumerate() {
                for &b in &ps[i + 1..] {
                    adj[a].insert(b);
                    adj[b].insert(a);
                }
            }
        }
        let mut blocked = vec![false; n];
        for &v in z {
            blocked[v] = true;
        }
        let mut seen = vec![false; n];
        let mut queue: VecDeque<usize> = x.iter().copied().collect();
        for &v in x {
            seen[v] = true;
        }
        while let Some(v) = queue.pop_front() {
            if y.contains(&v) {
                return false;
            }
            for &w in &adj[v] {
                if !seen[w] && !blocked[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        true
    }

    fn statement_sets(&self, stmt: &CiStatement) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
        if stmt.regime.is_some() {
            return Err(Error::InvalidStatement(format!(
                "`{stmt}`: regime suffixes have no graphical reading"
            )));
        }
        Ok((
            self.ids(&stmt.x_names())?,
            self.ids(&stmt.y_names())?,
            self.ids(&stmt.z_names())?,
        ))
    }

    /// d-separation reading of one statement.
    pub fn implies(&self, stmt: &CiStatement) -> Result<Separation> {
        let (x, y, z) = self.statement_sets(stmt)?;
        if stmt.is_trivial() {
            return Ok(Separation {
                separated: true,
                active_path: None,
            });
        }
        Ok(self.d_separated_ids(&x, &y, &z))
    }

    /// Every statement `X ⫫ Y | Z` over disjoint node sets that d-separation
    /// yields, one orientation per symmetric pair.
    pub fn implied_ci(&self) -> Result<BTreeSet<CiStatement>> {
        let n = self.nodes.len();
        if n > DEFAULT_NODE_CAP {
            return Err(Error::CapExceeded {
                what: "diagram nodes",
                count: n as u128,
                cap: DEFAULT_NODE_CAP as u128,
            });
        }
        let members = |m: usize| -> Vec<usize> { (0..n).filter(|i| m & (1 << i) != 0).collect() };
        let names =
            |m: usize| -> BTreeSet<String> { members(m).into_iter().map(|i| self.nodes[i].name.clone()).collect() };
        let full = (1usize << n) - 1;
        let mut out = BTreeSet::new();
        for xm in 1..=full {
            let rest = full & !xm;
            // every z ⊆ rest, including the empty set
            let mut zm = rest;
            loop {
                let visited = self.active_reach(&members(xm), &members(zm));
                let mut sep = rest & !zm;
                for (v, states) in visited.iter().enumerate() {
                    if states.iter().any(Option::is_some) {
                        sep &= !(1 << v);
                    }
                }
                let mut ym = sep;
                while ym != 0 {
                    let stmt = CiStatement::from_names(&names(xm), &names(ym), &names(zm))?.oriented();
                    out.insert(stmt);
                    ym = (ym - 1) & sep;
                }
                if zm == 0 {
                    break;
                }
                zm = (zm - 1) & rest;
            }
        }
        Ok(out)
    }

    pub fn represents(&self, statements: &[CiStatement]) -> Result<Representation> {
        let mut rows = Vec::new();
        for s in statements {
            rows.push(Represented {
                statement: s.to_string(),
                implied: self.implies(s)?.separated,
            });
        }
        Ok(Representation {
            all_implied: rows.iter().all(|r| r.implied),
            statements: rows,
        })
    }
}

impl fmt::Display for Separation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.active_path {
            None => write!(f, "separated"),
            Some(p) => write!(f, "not separated; active path {p}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dag(nodes: &[&str], edges: &[(&str, &str)]) -> InfluenceDiagram {
        InfluenceDiagram::new(nodes, edges).unwrap()
    }

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn chain_fork_collider() {
        let g = dag(&["A", "B", "C"], &[("A", "B"), ("B", "C")]);
        assert!(g.d_separated(&s(&["A"]), &s(&["C"]), &s(&["B"])).unwrap().separated);
        assert!(!g.d_separated(&s(&["A"]), &s(&["C"]), &[]).unwrap().separated);
        let g = dag(&["A", "B", "C"], &[("A", "C"), ("B", "C")]);
        assert!(g.d_separated(&s(&["A"]), &s(&["B"]), &[]).unwrap().separated);
        let sep = g.d_separated(&s(&["A"]), &s(&["B"]), &s(&["C"])).unwrap();
        assert_eq!(sep.active_path.as_deref(), Some("A -> C <- B"));
    }

    #[test]
    fn collider_opened_by_descendant() {
        let g = dag(&["A", "B", "C", "D"], &[("A", "C"), ("B", "C"), ("C", "D")]);
        assert!(!g.d_separated(&s(&["A"]), &s(&["B"]), &s(&["D"])).unwrap().separated);
        assert!(!g.moral_separated(&s(&["A"]), &s(&["B"]), &s(&["D"])).unwrap());
    }

    #[test]
    fn rejects_cycles_and_bad_edges() {
        let err = InfluenceDiagram::new(&["A", "B"], &[("A", "B"), ("B", "A")]).unwrap_err();
        assert!(err.to_string().contains("cycle"), "{err}");
        assert!(InfluenceDiagram::new(&["A", "B"], &[("A", "B"), ("A", "B")]).is_err());
        assert!(InfluenceDiagram::new(&["A", "sigma"], &[("A", "sigma")]).is_err());
        assert!(matches!(
            InfluenceDiagram::new(&["A"], &[("A", "Q")]),
            Err(Error::UnknownNode(_))
        ));
    }

    #[test]
    fn edgeless_pair_implies_marginal_independence() {
        let g = dag(&["A", "B"], &[]);
        let all = g.implied_ci().unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all.iter().next().unwrap().to_string(), "A _||_ B");
    }
}
