//! Random model generators for property tests.
//!
//! Each profile enforces its conditions constructively:
//!
//! * `Unrestricted`: any valid model, kernels shared or not at random.
//! * `Randomized`: nature kernels shared across regimes; actions in both
//!   regimes read only observed history.
//! * `Irrelevant`: nature kernels shared; `s` actions read only observed
//!   history; observables read past unobservables only on observed
//!   histories that `s` never reaches. `o` actions may read anything.
//!
//! Zero masking puts exact zeros into rows so that null histories occur.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::grecursion::OutcomeFunctional;
use crate::joint::{joint_from_kernels, Joint};
use crate::model::{Kernel, Regime, RegimeKind, RegimeModel, Role, Row, VarId, Variable};
use crate::rational::{int, ratio, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Unrestricted,
    Randomized,
    Irrelevant,
}

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub max_stages: usize,
    pub max_domain: usize,
    /// Probability that a row entry is forced to zero.
    pub zero_rate: f64,
    pub max_configurations: u128,
    pub max_rows: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_stages: 3,
            max_domain: 4,
            zero_rate: 0.25,
            max_configurations: 4096,
            max_rows: 64,
        }
    }
}

fn random_row<R: Rng>(rng: &mut R, size: usize, zero_rate: f64) -> Row {
    loop {
        let weights: Vec<i64> = (0..size)
            .map(|_| {
                if rng.gen_bool(zero_rate) {
                    0
                } else {
                    rng.gen_range(1..=6)
                }
            })
            .collect();
        let total: i64 = weights.iter().sum();
        if total > 0 {
            return Row::Dist(weights.into_iter().map(|w| ratio(w, total)).collect());
        }
    }
}

fn random_kernel<R: Rng>(rng: &mut R, vars: &[Variable], child: VarId, parents: Vec<VarId>, zero_rate: f64) -> Kernel {
    let rows: usize = parents.iter().map(|&p| vars[p].size()).product();
    let rows = (0..rows)
        .map(|_| random_row(rng, vars[child].size(), zero_rate))
        .collect();
    Kernel::new(child, parents, rows)
}

/// Random subset of `candidates`, trimmed until its row count is small.
fn pick_parents<R: Rng>(rng: &mut R, vars: &[Variable], candidates: &[VarId], max_rows: usize) -> Vec<VarId> {
    let mut parents: Vec<VarId> = candidates.iter().copied().filter(|_| rng.gen_bool(0.7)).collect();
    while parents.iter().map(|&p| vars[p].size()).product::<usize>() > max_rows {
        let i = rng.gen_range(0..parents.len());
        parents.remove(i);
    }
    parents
}

fn random_variables<R: Rng>(rng: &mut R, profile: Profile, cfg: &GenConfig) -> Vec<Variable> {
    let need_u = profile != Profile::Unrestricted;
    loop {
        let n = if need_u {
            rng.gen_range(1..=cfg.max_stages.max(1))
        } else {
            rng.gen_range(0..=cfg.max_stages)
        };
        let mut vars = Vec::new();
        let dom = |rng: &mut R| rng.gen_range(2..=cfg.max_domain.max(2));
        for i in 1..=n {
            for j in 0..rng.gen_range(0..=2usize).min(if i == 1 { 2 } else { 1 }) {
                let size = dom(rng);
                vars.push(var(&format!("L{i}{}", suffix(j)), Role::Observable, size));
            }
            let u = if need_u { rng.gen_bool(0.8) } else { rng.gen_bool(0.3) };
            if u {
                let size = dom(rng);
                vars.push(var(&format!("U{i}"), Role::Unobserved, size));
            }
            let size = dom(rng);
            vars.push(var(&format!("A{i}"), Role::Action, size));
        }
        if rng.gen_bool(0.4) {
            let size = dom(rng);
            vars.push(var(&format!("L{}", n + 1), Role::Observable, size));
        }
        let size = dom(rng);
        vars.push(var("Y", Role::Outcome, size));
        if need_u && !vars.iter().any(|v| v.role == Role::Unobserved) {
            continue;
        }
        // shrink domains until the state space fits
        while vars.iter().map(|v| v.size() as u128).product::<u128>() > cfg.max_configurations {
            let big: Vec<usize> = (0..vars.len()).filter(|&i| vars[i].size() > 2).collect();
            let Some(&i) = big.choose(rng) else { break };
            let size = vars[i].size() - 1;
            vars[i] = var(&vars[i].name.clone(), vars[i].role, size);
        }
        if vars.iter().map(|v| v.size() as u128).product::<u128>() <= cfg.max_configurations {
            return vars;
        }
    }
}

fn suffix(j: usize) -> String {
    if j == 0 {
        String::new()
    } else {
        ["b", "c", "d"][j - 1].to_string()
    }
}

fn var(name: &str, role: Role, size: usize) -> Variable {
    Variable::new(name, role, (0..size).map(|v| v.to_string()))
}

/// A random valid model with regimes `o` and `s` under the given profile.
pub fn random_model<R: Rng>(rng: &mut R, profile: Profile, cfg: &GenConfig) -> RegimeModel {
    let vars = random_variables(rng, profile, cfg);
    let observed: Vec<VarId> = (0..vars.len()).filter(|&v| vars[v].role.is_domain()).collect();
    let mut o: Vec<Kernel> = Vec::new();
    let mut s: Vec<Kernel> = Vec::new();
    for v in 0..vars.len() {
        let past: Vec<VarId> = (0..v).collect();
        let observed_past: Vec<VarId> = observed.iter().copied().filter(|&u| u < v).collect();
        match (vars[v].role, profile) {
            (Role::Action, Profile::Unrestricted) => {
                let p = pick_parents(rng, &vars, &past, cfg.max_rows);
                o.push(random_kernel(rng, &vars, v, p, cfg.zero_rate));
                let p = pick_parents(rng, &vars, &past, cfg.max_rows);
                s.push(random_kernel(rng, &vars, v, p, cfg.zero_rate));
            }
            (Role::Action, Profile::Randomized) => {
                for k in [&mut o, &mut s] {
                    let p = pick_parents(rng, &vars, &observed_past, cfg.max_rows);
                    k.push(random_kernel(rng, &vars, v, p, cfg.zero_rate));
                }
            }
            (Role::Action, Profile::Irrelevant) => {
                let p = pick_parents(rng, &vars, &past, cfg.max_rows);
                o.push(random_kernel(rng, &vars, v, p, cfg.zero_rate));
                let p = pick_parents(rng, &vars, &observed_past, cfg.max_rows);
                s.push(random_kernel(rng, &vars, v, p, cfg.zero_rate));
            }
            (Role::Unobserved, _) | (_, Profile::Randomized) => {
                let p = pick_parents(rng, &vars, &past, cfg.max_rows);
                let k = random_kernel(rng, &vars, v, p, cfg.zero_rate);
                o.push(k.clone());
                s.push(k);
            }
            (_, Profile::Unrestricted) => {
                let p = pick_parents(rng, &vars, &past, cfg.max_rows);
                let k = random_kernel(rng, &vars, v, p, cfg.zero_rate);
                o.push(k.clone());
                if rng.gen_bool(0.5) {
                    s.push(k);
                } else {
                    let p = pick_parents(rng, &vars, &past, cfg.max_rows);
                    s.push(random_kernel(rng, &vars, v, p, cfg.zero_rate));
                }
            }
            (_, Profile::Irrelevant) => {
                let k = irrelevant_kernel(rng, &vars, v, &s, cfg);
                o.push(k.clone());
                s.push(k);
            }
        }
    }
    let regimes = vec![
        Regime {
            id: "o".into(),
            kind: RegimeKind::Observational,
            kernels: o,
        },
        Regime {
            id: "s".into(),
            kind: RegimeKind::Interventional,
            kernels: s,
        },
    ];
    RegimeModel::new(vars, regimes).expect("generated models are valid")
}

/// Kernel for an observable that may read unobservables only where the
/// observed history of the current stage has zero mass under `s`.
fn irrelevant_kernel<R: Rng>(rng: &mut R, vars: &[Variable], v: VarId, s_prefix: &[Kernel], cfg: &GenConfig) -> Kernel {
    let stage_start = (0..v)
        .rev()
        .find(|&u| vars[u].role == Role::Action)
        .map_or(0, |a| a + 1);
    // observed past of the block: everything observed before the block
    let block_past: Vec<VarId> = (0..stage_start).filter(|&u| vars[u].role.is_domain()).collect();
    let same_block: Vec<VarId> = (stage_start..v).filter(|&u| vars[u].role.is_domain()).collect();
    let mut observed_parents = block_past.clone();
    observed_parents.extend(&same_block);
    let unobserved: Vec<VarId> = (0..stage_start).filter(|&u| vars[u].role == Role::Unobserved).collect();
    if unobserved.is_empty() || rng.gen_bool(0.2) {
        let p = pick_parents(rng, vars, &observed_parents, cfg.max_rows);
        return random_kernel(rng, vars, v, p, cfg.zero_rate);
    }
    let parents: Vec<VarId> = (0..v)
        .filter(|&u| vars[u].role.is_domain() || unobserved.contains(&u))
        .collect();
    let rows: usize = parents.iter().map(|&p| vars[p].size()).product();
    if rows > cfg.max_rows * 16 {
        let p = pick_parents(rng, vars, &observed_parents, cfg.max_rows);
        return random_kernel(rng, vars, v, p, cfg.zero_rate);
    }
    let refs: Vec<&Kernel> = s_prefix.iter().collect();
    let joint = joint_from_kernels(vars, &refs, u128::MAX).expect("s prefix is fully specified");
    let names: Vec<String> = block_past.iter().map(|&u| vars[u].name.clone()).collect();
    let past_mass: Joint = joint.marginalize(&names).expect("known variables");
    let mut shared_rows: std::collections::HashMap<Vec<usize>, Row> = std::collections::HashMap::new();
    let mut out = Vec::with_capacity(rows);
    for index in 0..rows {
        let mut rest = index;
        let mut config = vec![0usize; parents.len()];
        for (slot, &p) in parents.iter().enumerate().rev() {
            config[slot] = rest % vars[p].size();
            rest /= vars[p].size();
        }
        let value = |u: VarId| config[parents.iter().position(|&p| p == u).expect("parent")];
        let past_cell: Vec<usize> = block_past.iter().map(|&u| value(u)).collect();
        let positive = !num_traits::Zero::is_zero(&past_mass.probs()[past_mass.encode(&past_cell)]);
        if positive {
            let key: Vec<usize> = observed_parents.iter().map(|&u| value(u)).collect();
            let row = shared_rows
                .entry(key)
                .or_insert_with(|| random_row(rng, vars[v].size(), cfg.zero_rate));
            out.push(row.clone());
        } else {
            out.push(random_row(rng, vars[v].size(), cfg.zero_rate));
        }
    }
    Kernel::new(v, parents, out)
}

/// Random loss with small rational values, some negative.
pub fn random_functional<R: Rng>(rng: &mut R, model: &RegimeModel) -> OutcomeFunctional {
    let y = model.var(model.base.outcome());
    let values: Vec<Rational> = (0..y.size())
        .map(|_| ratio(rng.gen_range(-6..=6), rng.gen_range(1..=4)))
        .collect();
    OutcomeFunctional::from_fn(model, |l| values[y.value_index(l).expect("outcome label")].clone())
}

/// A strictly positive prior over the model's regimes.
pub fn random_prior<R: Rng>(rng: &mut R, model: &RegimeModel) -> Vec<(String, Rational)> {
    let weights: Vec<i64> = model.regimes.iter().map(|_| rng.gen_range(1..=9)).collect();
    let total: i64 = weights.iter().sum();
    model
        .regimes
        .iter()
        .zip(weights)
        .map(|(r, w)| (r.id.clone(), ratio(w, total)))
        .collect()
}

/// A random rational in `[-6, 6]`.
pub fn random_rational<R: Rng>(rng: &mut R) -> Rational {
    int(rng.gen_range(-6..=6)) / int(rng.gen_range(1..=4))
}
