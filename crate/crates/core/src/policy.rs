//! Deterministic policies: circuits from states (stationary) or from bounded
//! state histories (history-dependent) to action indices, plus table-backed
//! forms used on explicit MDPs.
//!
//! A history circuit reads `T + 1` state slots followed by the current time
//! `j` on `index_width(T + 1)` bits. Slots after `j` are always zero-filled by
//! the caller, so their circuit inputs can never influence the decision.

use std::collections::{BTreeMap, HashMap};

use crate::bits::{index_width, read_unsigned, BitVector};
use crate::circuit::{from_truth_table, Circuit, CircuitBuilder};
use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::mdp::eval_parts;

/// Any deterministic policy, queried with the history so far.
pub trait Policy {
    fn action_count(&self) -> usize;

    /// Action for history `s₀ … s_j` in a run of `horizon` steps (`j < horizon`).
    fn decide_history(&self, history: &[BitVector], horizon: usize) -> Result<usize>;
}

/// A policy that only looks at the current state and the steps left.
pub trait MarkovPolicy {
    fn markov_action_count(&self) -> usize;

    fn decide_markov(&self, s: &BitVector, steps_to_go: usize) -> Result<usize>;
}

impl<P: MarkovPolicy> Policy for P {
    fn action_count(&self) -> usize {
        self.markov_action_count()
    }

    fn decide_history(&self, history: &[BitVector], horizon: usize) -> Result<usize> {
        let s = history
            .last()
            .ok_or(Error::HistoryTooLong { len: 0, horizon })?;
        let steps_to_go = horizon
            .checked_sub(history.len() - 1)
            .ok_or(Error::HistoryTooLong {
                len: history.len(),
                horizon,
            })?;
        self.decide_markov(s, steps_to_go)
    }
}

fn check_output_width(circuit: &Circuit, action_count: usize) -> Result<()> {
    if action_count == 0 {
        return Err(Error::InvalidModel(
            "a policy needs at least one action".into(),
        ));
    }
    let aw = index_width(action_count);
    if circuit.num_outputs() != aw {
        return Err(Error::WidthMismatch {
            what: format!("action index output of policy circuit '{}'", circuit.name()),
            expected: aw,
            got: circuit.num_outputs(),
        });
    }
    Ok(())
}

fn decode(index: u64, action_count: usize) -> Result<usize> {
    if index >= action_count as u64 {
        return Err(Error::InvalidAction {
            index,
            count: action_count,
        });
    }
    Ok(index as usize)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StationaryPolicy {
    circuit: Circuit,
    action_count: usize,
}

impl StationaryPolicy {
    pub fn new(circuit: Circuit, action_count: usize) -> Result<Self> {
        check_output_width(&circuit, action_count)?;
        Ok(StationaryPolicy {
            circuit,
            action_count,
        })
    }

    /// Always picks `action`.
    pub fn constant(num_vars: usize, action: usize, action_count: usize) -> Result<Self> {
        decode(action as u64, action_count)?;
        let mut b = CircuitBuilder::new(num_vars);
        let out = b.const_word(action as u64, index_width(action_count));
        StationaryPolicy::new(b.build("constant_policy", out)?, action_count)
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn num_vars(&self) -> usize {
        self.circuit.num_inputs()
    }

    pub fn decide(&self, s: &BitVector) -> Result<usize> {
        if s.len() != self.num_vars() {
            return Err(Error::WidthMismatch {
                what: "state given to stationary policy".into(),
                expected: self.num_vars(),
                got: s.len(),
            });
        }
        decode(
            eval_parts(&self.circuit, &[s.bits()], read_unsigned)?,
            self.action_count,
        )
    }
}

impl MarkovPolicy for StationaryPolicy {
    fn markov_action_count(&self) -> usize {
        self.action_count
    }

    fn decide_markov(&self, s: &BitVector, _steps_to_go: usize) -> Result<usize> {
        self.decide(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryPolicy {
    circuit: Circuit,
    action_count: usize,
    horizon: usize,
    num_vars: usize,
}

impl HistoryPolicy {
    pub fn input_width(num_vars: usize, horizon: usize) -> usize {
        (horizon + 1) * num_vars + index_width(horizon + 1)
    }

    pub fn new(
        circuit: Circuit,
        action_count: usize,
        horizon: usize,
        num_vars: usize,
    ) -> Result<Self> {
        check_output_width(&circuit, action_count)?;
        let expected = Self::input_width(num_vars, horizon);
        if circuit.num_inputs() != expected {
            return Err(Error::WidthMismatch {
                what: format!(
                    "inputs of history policy '{}' [T+1 slots | time]",
                    circuit.name()
                ),
                expected,
                got: circuit.num_inputs(),
            });
        }
        Ok(HistoryPolicy {
            circuit,
            action_count,
            horizon,
            num_vars,
        })
    }

    /// Wraps a stationary policy so that it reads the slot at the current time.
    pub fn from_stationary(p: &StationaryPolicy, horizon: usize) -> Result<Self> {
        let n = p.num_vars();
        let tw = index_width(horizon + 1);
        let mut b = CircuitBuilder::new(Self::input_width(n, horizon));
        let time = b.input_word((horizon + 1) * n, tw);
        let aw = index_width(p.action_count);
        let mut cases = Vec::with_capacity(horizon + 1);
        for j in 0..=horizon {
            let slot = b.input_word(j * n, n);
            let at_j = b.eq_const(&time, j as u64);
            cases.push((at_j, b.instantiate(p.circuit(), &slot)));
        }
        let out = b.select_words(&cases, aw);
        HistoryPolicy::new(
            b.build("history_of_stationary", out)?,
            p.action_count,
            horizon,
            n,
        )
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Decision at time `j = history.len() - 1`.
    pub fn decide_h(&self, history: &[BitVector]) -> Result<usize> {
        if history.is_empty() || history.len() > self.horizon + 1 {
            return Err(Error::HistoryTooLong {
                len: history.len(),
                horizon: self.horizon,
            });
        }
        let mut input = Vec::with_capacity(self.circuit.num_inputs());
        for s in history {
            if s.len() != self.num_vars {
                return Err(Error::WidthMismatch {
                    what: "state in history".into(),
                    expected: self.num_vars,
                    got: s.len(),
                });
            }
            input.extend_from_slice(s.bits());
        }
        input.resize((self.horizon + 1) * self.num_vars, false);
        let time = BitVector::from_u64((history.len() - 1) as u64, index_width(self.horizon + 1));
        decode(
            eval_parts(&self.circuit, &[&input, time.bits()], read_unsigned)?,
            self.action_count,
        )
    }
}

impl Policy for HistoryPolicy {
    fn action_count(&self) -> usize {
        self.action_count
    }

    fn decide_history(&self, history: &[BitVector], horizon: usize) -> Result<usize> {
        if horizon > self.horizon {
            return Err(Error::HistoryTooLong {
                len: horizon + 1,
                horizon: self.horizon,
            });
        }
        self.decide_h(history)
    }
}

/// A state-to-action table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplicitPolicy {
    map: BTreeMap<BitVector, usize>,
    action_count: usize,
}

impl ExplicitPolicy {
    pub fn new(map: BTreeMap<BitVector, usize>, action_count: usize) -> Result<Self> {
        for &a in map.values() {
            decode(a as u64, action_count)?;
        }
        Ok(ExplicitPolicy { map, action_count })
    }

    pub fn map(&self) -> &BTreeMap<BitVector, usize> {
        &self.map
    }

    pub fn get(&self, s: &BitVector) -> Option<usize> {
        self.map.get(s).copied()
    }
}

impl MarkovPolicy for ExplicitPolicy {
    fn markov_action_count(&self) -> usize {
        self.action_count
    }

    fn decide_markov(&self, s: &BitVector, _steps_to_go: usize) -> Result<usize> {
        self.get(s)
            .ok_or_else(|| Error::PartialPolicy { state: s.clone() })
    }
}

/// A table keyed by state and steps to go. Optimal finite-horizon behaviour
/// generally depends on both.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TimedPolicy {
    map: HashMap<(BitVector, usize), usize>,
    action_count: usize,
}

impl TimedPolicy {
    pub fn new(action_count: usize) -> Self {
        TimedPolicy {
            map: HashMap::new(),
            action_count,
        }
    }

    pub fn insert(&mut self, s: BitVector, steps_to_go: usize, action: usize) -> Result<()> {
        decode(action as u64, self.action_count)?;
        self.map.insert((s, steps_to_go), action);
        Ok(())
    }

    pub fn get(&self, s: &BitVector, steps_to_go: usize) -> Option<usize> {
        self.map.get(&(s.clone(), steps_to_go)).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl MarkovPolicy for TimedPolicy {
    fn markov_action_count(&self) -> usize {
        self.action_count
    }

    fn decide_markov(&self, s: &BitVector, steps_to_go: usize) -> Result<usize> {
        self.get(s, steps_to_go)
            .ok_or_else(|| Error::PartialPolicy { state: s.clone() })
    }
}

/// Compiles a table that covers all 2ⁿ states into a circuit in canonical
/// DNF form: every output bit is an OR of full-literal minterms.
pub fn compile_explicit(
    p: &ExplicitPolicy,
    num_vars: usize,
    limits: &Limits,
) -> Result<StationaryPolicy> {
    if num_vars > limits.max_enum_vars {
        return Err(Error::LimitExceeded {
            what: format!("compiling an explicit policy over 2^{num_vars} states"),
            limit: limits.max_enum_vars,
        });
    }
    for s in BitVector::all(num_vars) {
        if !p.map.contains_key(&s) {
            return Err(Error::PartialPolicy { state: s });
        }
    }
    let aw = index_width(p.action_count);
    let circuit = from_truth_table("compiled_policy", num_vars, aw, |v| {
        let a = p.map[&BitVector::from_u64(v, num_vars)] as u64;
        BitVector::from_u64(a, aw).into_bits()
    })?;
    StationaryPolicy::new(circuit, p.action_count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::dnf_term_count;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_policy_is_constant() {
        let p = StationaryPolicy::constant(3, 2, 3).unwrap();
        for s in BitVector::all(3) {
            assert_eq!(p.decide(&s).unwrap(), 2);
        }
        assert!(p.circuit().size() <= 2);
    }

    #[test]
    fn out_of_range_index_is_an_error() {
        // Two output bits can name index 3 although only three actions exist.
        let p = StationaryPolicy::new(
            {
                let b = CircuitBuilder::new(1);
                let x = b.input(0);
                b.build("p", vec![x, x]).unwrap()
            },
            3,
        )
        .unwrap();
        assert_eq!(p.decide(&"0".parse().unwrap()).unwrap(), 0);
        assert!(matches!(
            p.decide(&"1".parse().unwrap()),
            Err(Error::InvalidAction { index: 3, count: 3 })
        ));
    }

    #[test]
    fn compile_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for n in 0..=6 {
            let map: BTreeMap<_, _> = BitVector::all(n)
                .map(|s| (s, rng.random_range(0..5)))
                .collect();
            let p = ExplicitPolicy::new(map, 5).unwrap();
            let c = compile_explicit(&p, n, &Limits::default()).unwrap();
            for s in BitVector::all(n) {
                assert_eq!(c.decide(&s).unwrap(), p.get(&s).unwrap());
            }
            for k in 0..c.circuit().num_outputs() {
                assert!(dnf_term_count(c.circuit(), k) <= 1 << n);
            }
        }
    }

    #[test]
    fn partial_map_is_refused() {
        let map = BTreeMap::from([(BitVector::zeros(1), 0)]);
        let p = ExplicitPolicy::new(map, 2).unwrap();
        assert!(matches!(
            compile_explicit(&p, 1, &Limits::default()),
            Err(Error::PartialPolicy { .. })
        ));
    }

    #[test]
    fn history_wrapper_reads_current_slot_only() {
        let b = CircuitBuilder::new(2);
        let x = b.input(0);
        let stationary = StationaryPolicy::new(b.build("first_bit", vec![x]).unwrap(), 2).unwrap();
        let h = HistoryPolicy::from_stationary(&stationary, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let len = rng.random_range(1..=4);
            let hist: Vec<BitVector> = (0..len)
                .map(|_| BitVector::from_u64(rng.random_range(0..4), 2))
                .collect();
            let expected = stationary.decide(hist.last().unwrap()).unwrap();
            assert_eq!(h.decide_h(&hist).unwrap(), expected);
            assert_eq!(
                Policy::decide_history(&stationary, &hist, 3).unwrap(),
                expected
            );
        }
        assert!(h.decide_h(&vec![BitVector::zeros(2); 5]).is_err());
    }
}
