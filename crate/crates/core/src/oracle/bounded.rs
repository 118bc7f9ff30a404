use std::collections::{HashMap, HashSet};

use super::{backup, solve_optimal};
use crate::bits::{index_width, BitVector};
use crate::circuit::{CircuitBuilder, Gate, Ref};
use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::mdp::{expand, ExplicitMdp, MdpModel};
use crate::policy::{compile_explicit, ExplicitPolicy, StationaryPolicy};
use crate::rational::Rational;

/// How a bounded-policy query was settled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMethod {
    /// Even the optimal time-dependent policy falls short of `k`.
    UpperBound,
    /// Every map from decision states to actions was evaluated.
    ExplicitMaps,
    /// Circuits were enumerated gate by gate.
    Circuits,
    /// A table meeting `k` compiled to a circuit within the size bound.
    CompiledTable,
}

#[derive(Debug, Clone)]
pub struct BoundedAnswer {
    pub exists: bool,
    pub method: SearchMethod,
    pub witness: Option<StationaryPolicy>,
    pub witness_reward: Option<Rational>,
    /// `V*(s₀, T)` over all policies, an upper bound on any answer.
    pub optimum: Rational,
    /// States reachable with at least one step left.
    pub decision_states: usize,
    /// Distinct decision-state behaviours evaluated.
    pub candidates: usize,
}

struct Scorer<'a> {
    e: &'a ExplicitMdp,
    /// Position of each explicit state among the decision states.
    slot: Vec<Option<usize>>,
    cache: HashMap<Vec<usize>, Rational>,
}

impl Scorer<'_> {
    /// Exact `E(s₀, T)` of the stationary behaviour `choice` (one action per
    /// decision state).
    fn score(&mut self, choice: &[usize]) -> Rational {
        if let Some(v) = self.cache.get(choice) {
            return v.clone();
        }
        let e = self.e;
        let mut values: Vec<Vec<Rational>> = (0..e.num_states())
            .map(|k| vec![Rational::from_integer(e.reward(k).into())])
            .collect();
        for step in 1..=e.horizon() {
            for k in 0..e.num_states() {
                if e.budget(k) >= step {
                    let a = choice[self.slot[k].expect("decision state")];
                    let v = backup(e, &values, k, a, step);
                    values[k].push(v);
                }
            }
        }
        let v = values[e.initial()][e.horizon()].clone();
        self.cache.insert(choice.to_vec(), v.clone());
        v
    }
}

/// Is there a stationary policy circuit of at most `z` gates whose exact
/// expected reward over `horizon` steps from the initial state is at least
/// `k`?
///
/// Only the behaviour on reachable decision states matters, so circuits are
/// compared by their output signatures on those states. When `z` reaches
/// `|A|·2ⁿ` the size bound is treated as vacuous and every decision-state
/// table is admissible. Otherwise circuits are enumerated up to
/// `limits.max_policy_gates` gates; a larger `z` is settled by the exact
/// table optimum when that is below `k`, or by compiling a winning table.
pub fn bounded_policy_exists<M: MdpModel + ?Sized>(
    m: &M,
    horizon: usize,
    z: usize,
    k: &Rational,
    limits: &Limits,
) -> Result<BoundedAnswer> {
    let base = m.base();
    let e = expand(m, base.initial_state(), horizon, limits)?;
    let decisions: Vec<usize> = e.decision_states().collect();
    let optimum = solve_optimal(&e)?.values.row(e.initial())[horizon].clone();
    let mut answer = BoundedAnswer {
        exists: false,
        method: SearchMethod::UpperBound,
        witness: None,
        witness_reward: None,
        optimum,
        decision_states: decisions.len(),
        candidates: 0,
    };
    if answer.optimum < *k {
        return Ok(answer);
    }

    let mut slot = vec![None; e.num_states()];
    for (p, &s) in decisions.iter().enumerate() {
        slot[s] = Some(p);
    }
    let mut scorer = Scorer {
        e: &e,
        slot,
        cache: HashMap::new(),
    };
    let n = base.num_vars();
    let actions = base.action_count();
    let vacuous = n < 64 && (z as u128) >= (actions as u128) << n;

    if !vacuous {
        let cap = z.min(limits.max_policy_gates);
        let found = circuit_search(&e, &decisions, n, actions, cap, k, &mut scorer, limits)?;
        answer.candidates = scorer.cache.len();
        if let Some((policy, reward)) = found {
            answer.exists = true;
            answer.method = SearchMethod::Circuits;
            answer.witness = Some(policy);
            answer.witness_reward = Some(reward);
            return Ok(answer);
        }
        if z <= limits.max_policy_gates {
            answer.method = SearchMethod::Circuits;
            return Ok(answer);
        }
    }

    // Tables over the decision states.
    let count = (actions as u128).checked_pow(decisions.len() as u32);
    if count.is_none_or(|c| c > limits.max_explicit_policies as u128) {
        return Err(Error::LimitExceeded {
            what: format!("{actions}^{} decision-state tables", decisions.len()),
            limit: limits.max_explicit_policies,
        });
    }
    let mut choice = vec![0usize; decisions.len()];
    let mut meets_k = false;
    loop {
        let v = scorer.score(&choice);
        if v >= *k {
            meets_k = true;
            let compiled = compile_table(&e, &decisions, &choice, n, actions, limits)?;
            if vacuous || compiled.circuit().size() <= z {
                answer.exists = true;
                answer.method = if vacuous {
                    SearchMethod::ExplicitMaps
                } else {
                    SearchMethod::CompiledTable
                };
                answer.witness = Some(compiled);
                answer.witness_reward = Some(v);
                break;
            }
        }
        // Odometer, last decision state fastest.
        let mut i = choice.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            choice[i] += 1;
            if choice[i] < actions {
                break;
            }
            choice[i] = 0;
        }
        if choice.iter().all(|&a| a == 0) {
            break;
        }
    }
    answer.candidates = scorer.cache.len();
    if !answer.exists {
        if meets_k {
            return Err(Error::LimitExceeded {
                what: format!(
                    "search for policy circuits of {} to {z} gates",
                    limits.max_policy_gates + 1
                ),
                limit: limits.max_policy_gates,
            });
        }
        answer.method = SearchMethod::ExplicitMaps;
    }
    Ok(answer)
}

fn compile_table(
    e: &ExplicitMdp,
    decisions: &[usize],
    choice: &[usize],
    n: usize,
    actions: usize,
    limits: &Limits,
) -> Result<StationaryPolicy> {
    if n > limits.max_enum_vars {
        return Err(Error::LimitExceeded {
            what: format!("compiling a policy over 2^{n} states"),
            limit: limits.max_enum_vars,
        });
    }
    let mut map: std::collections::BTreeMap<BitVector, usize> =
        BitVector::all(n).map(|s| (s, 0)).collect();
    for (&k, &a) in decisions.iter().zip(choice) {
        map.insert(e.state(k).clone(), a);
    }
    compile_explicit(&ExplicitPolicy::new(map, actions)?, n, limits)
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Const0,
    Const1,
    Not(u64),
    And(u64, u64),
    Or(u64, u64),
    Xor(u64, u64),
}

#[derive(Clone)]
struct Node {
    /// Distinct signatures available, ascending.
    sigs: Vec<u64>,
    /// Gates in order, each with its output signature.
    gates: Vec<(Op, u64)>,
}

/// Breadth-first search over sets of available signatures, one gate per
/// layer. A signature is the truth vector of a wire over the decision
/// states; outputs are tuples of available signatures.
#[allow(clippy::too_many_arguments)]
fn circuit_search(
    e: &ExplicitMdp,
    decisions: &[usize],
    n: usize,
    actions: usize,
    cap: usize,
    k: &Rational,
    scorer: &mut Scorer<'_>,
    limits: &Limits,
) -> Result<Option<(StationaryPolicy, Rational)>> {
    let d = decisions.len();
    if d > 64 {
        return Err(Error::LimitExceeded {
            what: format!("circuit search over {d} decision states"),
            limit: 64,
        });
    }
    let full = if d == 64 { u64::MAX } else { (1u64 << d) - 1 };
    let input_sigs: Vec<u64> = (0..n)
        .map(|v| {
            decisions
                .iter()
                .enumerate()
                .filter(|&(_, &s)| e.state(s).get(v))
                .fold(0u64, |acc, (p, _)| acc | (1 << p))
        })
        .collect();
    let aw = index_width(actions);
    let mut start: Vec<u64> = input_sigs.clone();
    start.sort_unstable();
    start.dedup();

    let mut layer = vec![Node {
        sigs: start.clone(),
        gates: Vec::new(),
    }];
    let mut seen_sets: HashSet<Vec<u64>> = HashSet::from([start]);
    let mut seen_outputs: HashSet<Vec<u64>> = HashSet::new();

    for g in 0..=cap {
        for node in &layer {
            let width = node.sigs.len();
            let mut digits = vec![0usize; aw];
            loop {
                let tuple: Vec<u64> = digits.iter().map(|&i| node.sigs[i]).collect();
                if seen_outputs.insert(tuple.clone()) {
                    if let Some(choice) = decode(&tuple, d, actions) {
                        let v = scorer.score(&choice);
                        if v >= *k {
                            let policy = rebuild(n, actions, &input_sigs, node, &tuple)?;
                            return Ok(Some((policy, v)));
                        }
                    }
                }
                let mut i = aw;
                loop {
                    if i == 0 {
                        break;
                    }
                    i -= 1;
                    digits[i] += 1;
                    if digits[i] < width {
                        break;
                    }
                    digits[i] = 0;
                }
                if digits.iter().all(|&x| x == 0) {
                    break;
                }
            }
        }
        if g == cap {
            break;
        }
        let mut next = Vec::new();
        for node in &layer {
            let s = &node.sigs;
            let mut ops = vec![(Op::Const0, 0), (Op::Const1, full)];
            for (i, &x) in s.iter().enumerate() {
                ops.push((Op::Not(x), !x & full));
                for &y in &s[i + 1..] {
                    ops.push((Op::And(x, y), x & y));
                    ops.push((Op::Or(x, y), x | y));
                    ops.push((Op::Xor(x, y), x ^ y));
                }
            }
            for (op, out) in ops {
                if let Err(pos) = s.binary_search(&out) {
                    let mut sigs = s.clone();
                    sigs.insert(pos, out);
                    if seen_sets.insert(sigs.clone()) {
                        if seen_sets.len() > limits.max_states {
                            return Err(Error::LimitExceeded {
                                what: "signature sets in the policy-circuit search".into(),
                                limit: limits.max_states,
                            });
                        }
                        let mut gates = node.gates.clone();
                        gates.push((op, out));
                        next.push(Node { sigs, gates });
                    }
                }
            }
        }
        layer = next;
    }
    Ok(None)
}

/// Actions per decision state for the MSB-first output signatures, or `None`
/// if some state gets an out-of-range index.
fn decode(tuple: &[u64], d: usize, actions: usize) -> Option<Vec<usize>> {
    (0..d)
        .map(|p| {
            let a = tuple
                .iter()
                .fold(0usize, |acc, &sig| (acc << 1) | ((sig >> p) & 1) as usize);
            (a < actions).then_some(a)
        })
        .collect()
}

fn rebuild(
    n: usize,
    actions: usize,
    input_sigs: &[u64],
    node: &Node,
    outputs: &[u64],
) -> Result<StationaryPolicy> {
    let mut b = CircuitBuilder::new(n);
    let mut wire: HashMap<u64, Ref> = HashMap::new();
    for (v, &sig) in input_sigs.iter().enumerate() {
        wire.entry(sig).or_insert(Ref::Input(v));
    }
    for &(op, out) in &node.gates {
        let gate = match op {
            Op::Const0 => Gate::Const0,
            Op::Const1 => Gate::Const1,
            Op::Not(x) => Gate::Not(wire[&x]),
            Op::And(x, y) => Gate::And(wire[&x], wire[&y]),
            Op::Or(x, y) => Gate::Or(wire[&x], wire[&y]),
            Op::Xor(x, y) => Gate::Xor(wire[&x], wire[&y]),
        };
        let r = b.raw(gate);
        wire.insert(out, r);
    }
    let outs = outputs.iter().map(|s| wire[s]).collect();
    StationaryPolicy::new(b.build("bounded_policy", outs)?, actions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::expected_reward_exact;
    use crate::mdp::tests::coin_mdp;
    use crate::rational::{int, ratio};
    use crate::reductions::{emajsat_to_bounded_policy, Cnf, EmajsatThreshold};

    #[test]
    fn unreachable_threshold_is_refused() {
        let m = coin_mdp(1);
        let a = bounded_policy_exists(&m, 2, 3, &int(4), &Limits::default()).unwrap();
        assert!(!a.exists);
        assert_eq!(a.method, SearchMethod::UpperBound);
    }

    #[test]
    fn coin_needs_a_gate_to_toss_only_on_tails() {
        let m = coin_mdp(1);
        let limits = Limits::default();
        // Without gates the only output is x itself: stay on tails forever.
        let no_gates = bounded_policy_exists(&m, 2, 0, &ratio(1, 2), &limits).unwrap();
        assert!(!no_gates.exists);
        assert_eq!(no_gates.method, SearchMethod::Circuits);
        // Tossing on tails and staying on heads: 0 + 1/2 + 3/4.
        let one_gate = bounded_policy_exists(&m, 2, 1, &ratio(5, 4), &limits).unwrap();
        assert!(one_gate.exists);
        let w = one_gate.witness.unwrap();
        assert!(w.circuit().size() <= 1);
        assert_eq!(
            expected_reward_exact(&m, &w, 2, &limits)
                .unwrap()
                .expected_reward,
            ratio(5, 4)
        );
    }

    #[test]
    fn vacuous_bound_uses_tables() {
        let m = coin_mdp(1);
        let a = bounded_policy_exists(&m, 2, 4, &ratio(5, 4), &Limits::default()).unwrap();
        assert!(a.exists);
        assert_eq!(a.method, SearchMethod::ExplicitMaps);
    }

    #[test]
    fn emajsat_pair_formula() {
        let limits = Limits::default();
        // (x ∨ y) ∧ (¬x ∨ y) forces y; every x sees half its extensions.
        let q = Cnf::from_ints(2, &[&[1, 2], &[-1, 2]]).unwrap();
        let inst = emajsat_to_bounded_policy(&q, EmajsatThreshold::Half).unwrap();
        let k = inst.reward_bound.clone().unwrap();
        let a = bounded_policy_exists(
            &inst.mdp,
            inst.horizon,
            inst.size_bound.unwrap(),
            &k,
            &limits,
        )
        .unwrap();
        assert!(a.exists);
        let w = a.witness.unwrap();
        let r = expected_reward_exact(&inst.mdp, &w, inst.horizon, &limits).unwrap();
        assert!(r.expected_reward >= k);
        // (x) ∧ (¬x): nothing satisfies.
        let q = Cnf::from_ints(2, &[&[1], &[-1]]).unwrap();
        let inst = emajsat_to_bounded_policy(&q, EmajsatThreshold::Half).unwrap();
        let a = bounded_policy_exists(
            &inst.mdp,
            inst.horizon,
            inst.size_bound.unwrap(),
            &ratio(1, 2),
            &limits,
        )
        .unwrap();
        assert!(!a.exists);
    }
}
