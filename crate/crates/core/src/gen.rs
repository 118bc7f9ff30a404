//! Seeded random instances: circuits, table-defined MDPs, CNFs and policies.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;

use crate::bits::{ceil_log2, index_width, signed_width, BitVector};
use crate::circuit::{from_truth_table, Circuit, Gate, Ref};
use crate::error::Result;
use crate::limits::Limits;
use crate::mdp::{BoundedActionMdp, SuccinctMdp};
use crate::policy::{compile_explicit, ExplicitPolicy, StationaryPolicy};
use crate::reductions::{Cnf, Lit};

/// A random netlist over the full basis; operands are drawn from the inputs
/// and the gates built so far.
pub fn random_circuit<R: Rng>(
    rng: &mut R,
    name: &str,
    inputs: usize,
    gates: usize,
    outputs: usize,
) -> Result<Circuit> {
    let mut list = Vec::with_capacity(gates);
    let pick = |rng: &mut R, built: usize| -> Ref {
        let k = rng.random_range(0..inputs + built);
        if k < inputs {
            Ref::Input(k)
        } else {
            Ref::Gate(k - inputs)
        }
    };
    for g in 0..gates {
        let gate = if inputs + g == 0 {
            if rng.random() {
                Gate::Const1
            } else {
                Gate::Const0
            }
        } else {
            match rng.random_range(0..10) {
                0..=2 => Gate::And(pick(rng, g), pick(rng, g)),
                3..=5 => Gate::Or(pick(rng, g), pick(rng, g)),
                6..=7 => Gate::Xor(pick(rng, g), pick(rng, g)),
                8 => Gate::Not(pick(rng, g)),
                _ => {
                    if rng.random() {
                        Gate::Const1
                    } else {
                        Gate::Const0
                    }
                }
            }
        };
        list.push(gate);
    }
    if inputs + gates == 0 {
        list.push(Gate::Const0);
    }
    let total = list.len();
    let outs = (0..outputs).map(|_| pick(rng, total)).collect();
    Circuit::new(name, inputs, list, outs)
}

/// Size parameters of a random table-defined MDP.
#[derive(Debug, Clone, Copy)]
pub struct MdpShape {
    pub num_vars: usize,
    pub actions: usize,
    pub denominator: u64,
    /// Upper bound on the successors of one state under one action.
    pub max_support: usize,
    pub min_reward: i64,
    pub max_reward: i64,
}

impl Default for MdpShape {
    fn default() -> Self {
        MdpShape {
            num_vars: 3,
            actions: 2,
            denominator: 12,
            max_support: 3,
            min_reward: -2,
            max_reward: 4,
        }
    }
}

/// Distinct successors with positive numerators summing to `d`.
fn random_row<R: Rng>(rng: &mut R, states: usize, max_support: usize, d: u64) -> Vec<(u64, u64)> {
    let k = rng.random_range(1..=max_support.min(states).min(d as usize).max(1));
    let targets = sample(rng, states, k).into_vec();
    let mut cuts: Vec<u64> = if k > 1 {
        sample(rng, d as usize - 1, k - 1)
            .into_iter()
            .map(|c| c as u64 + 1)
            .collect()
    } else {
        Vec::new()
    };
    cuts.sort_unstable();
    cuts.push(d);
    let mut prev = 0;
    targets
        .into_iter()
        .zip(cuts)
        .map(|(t, c)| {
            let part = c - prev;
            prev = c;
            (t as u64, part)
        })
        .collect()
}

struct Tables {
    rows: Vec<Vec<Vec<(u64, u64)>>>,
    rewards: Vec<i64>,
}

fn random_tables<R: Rng>(rng: &mut R, shape: &MdpShape) -> Tables {
    let states = 1usize << shape.num_vars;
    let rows = (0..states)
        .map(|_| {
            (0..shape.actions)
                .map(|_| random_row(rng, states, shape.max_support, shape.denominator))
                .collect()
        })
        .collect();
    let rewards = (0..states)
        .map(|_| rng.random_range(shape.min_reward..=shape.max_reward))
        .collect();
    Tables { rows, rewards }
}

fn base_from_tables(name: &str, shape: &MdpShape, t: &Tables, init: u64) -> Result<SuccinctMdp> {
    let n = shape.num_vars;
    let aw = index_width(shape.actions);
    let pw = ceil_log2(shape.denominator + 1).max(1);
    let transition = from_truth_table(&format!("{name}_t"), 2 * n + aw, pw, |v| {
        let a = (v & ((1 << aw) - 1)) as usize;
        let s2 = (v >> aw) & ((1 << n) - 1);
        let s = (v >> (aw + n)) as usize;
        let num = if a < shape.actions {
            t.rows[s][a]
                .iter()
                .find(|(t, _)| *t == s2)
                .map_or(0, |&(_, p)| p)
        } else {
            0
        };
        BitVector::from_u64(num, pw).into_bits()
    })?;
    let rw = signed_width(shape.min_reward.min(0), shape.max_reward.max(0));
    let reward = from_truth_table(&format!("{name}_r"), n, rw, |v| {
        let r = t.rewards[v as usize];
        BitVector::from_u64(r as u64 & ((1u64 << rw) - 1), rw).into_bits()
    })?;
    SuccinctMdp::new(
        name,
        (1..=n).map(|i| format!("v{i}")).collect(),
        BitVector::from_u64(init, n),
        (0..shape.actions).map(|a| format!("act{a}")).collect(),
        transition,
        reward,
        shape.denominator,
    )
}

/// A random MDP whose transition and reward circuits are canonical DNFs of
/// random tables. The initial state is random.
pub fn random_mdp<R: Rng>(rng: &mut R, name: &str, shape: &MdpShape) -> Result<SuccinctMdp> {
    let t = random_tables(rng, shape);
    let init = rng.random_range(0..1u64 << shape.num_vars);
    base_from_tables(name, shape, &t, init)
}

/// As [`random_mdp`], with successor circuits listing each row's support in
/// a random slot order; `shape.max_support` is the branching bound.
pub fn random_bounded_mdp<R: Rng>(
    rng: &mut R,
    name: &str,
    shape: &MdpShape,
) -> Result<BoundedActionMdp> {
    let t = random_tables(rng, shape);
    let init = rng.random_range(0..1u64 << shape.num_vars);
    let base = base_from_tables(name, shape, &t, init)?;
    let n = shape.num_vars;
    let b = shape.max_support;
    let sw = index_width(b);
    let mut circuits = Vec::with_capacity(shape.actions);
    for a in 0..shape.actions {
        // slot order per state: a random placement of the support among B slots
        let placement: Vec<Vec<Option<u64>>> = t
            .rows
            .iter()
            .map(|row| {
                let support: Vec<u64> = row[a].iter().map(|&(s, _)| s).collect();
                let slots = sample(rng, b, support.len()).into_vec();
                let mut out = vec![None; 1 << sw];
                for (s, slot) in support.into_iter().zip(slots) {
                    out[slot] = Some(s);
                }
                out
            })
            .collect();
        let c = from_truth_table(&format!("{name}_succ{a}"), n + sw, n + 1, |v| {
            let slot = (v & ((1 << sw) - 1)) as usize;
            let s = (v >> sw) as usize;
            match placement[s][slot] {
                Some(target) => {
                    let mut bits = vec![true];
                    bits.extend(BitVector::from_u64(target, n).into_bits());
                    bits
                }
                None => vec![false; n + 1],
            }
        })?;
        circuits.push(c);
    }
    BoundedActionMdp::new(base, circuits, b)
}

/// `clauses` clauses of exactly `width` literals; variables may repeat
/// within a clause.
pub fn random_cnf<R: Rng>(
    rng: &mut R,
    num_vars: usize,
    clauses: usize,
    width: usize,
) -> Result<Cnf> {
    let list = (0..clauses)
        .map(|_| {
            (0..width)
                .map(|_| Lit {
                    var: rng.random_range(0..num_vars),
                    positive: rng.random(),
                })
                .collect()
        })
        .collect();
    Cnf::new(num_vars, list)
}

/// Up to `max_clauses` clauses of 1 to `max_width` literals, so that both
/// satisfiable and unsatisfiable formulas turn up.
pub fn random_mixed_cnf<R: Rng>(
    rng: &mut R,
    num_vars: usize,
    max_clauses: usize,
    max_width: usize,
) -> Result<Cnf> {
    let count = rng.random_range(0..=max_clauses);
    let list = (0..count)
        .map(|_| {
            let w = rng.random_range(1..=max_width);
            (0..w)
                .map(|_| Lit {
                    var: rng.random_range(0..num_vars),
                    positive: rng.random(),
                })
                .collect()
        })
        .collect();
    Cnf::new(num_vars, list)
}

pub fn random_explicit_policy<R: Rng>(
    rng: &mut R,
    num_vars: usize,
    actions: usize,
) -> Result<ExplicitPolicy> {
    let map: BTreeMap<BitVector, usize> = BitVector::all(num_vars)
        .map(|s| (s, rng.random_range(0..actions)))
        .collect();
    ExplicitPolicy::new(map, actions)
}

/// A random total policy, compiled to a circuit.
pub fn random_policy<R: Rng>(
    rng: &mut R,
    num_vars: usize,
    actions: usize,
) -> Result<StationaryPolicy> {
    compile_explicit(
        &random_explicit_policy(rng, num_vars, actions)?,
        num_vars,
        &Limits::default(),
    )
}
