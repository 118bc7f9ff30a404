//! Value functions: the finite-horizon recursion
//! `E(s, 0) = r(s)`, `E(s, i) = r(s) + Σ_{s'} t(s, s', P(s)) · E(s', i − 1)`,
//! value circuits, consistency checks and policy extraction.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::Zero;

use crate::bits::{index_width, read_signed, BitVector};
use crate::circuit::{from_truth_table, Circuit, CircuitBuilder};
use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::mdp::{eval_parts, ExplicitMdp, MdpModel};
use crate::policy::{MarkovPolicy, Policy, TimedPolicy};
use crate::rational::Rational;

/// Anything that answers `E(s, i)`.
pub trait ValueSource {
    fn value(&self, s: &BitVector, steps_to_go: usize) -> Result<Rational>;
}

/// `E(s, i)` for the states of an explicit MDP, with `i` up to each state's
/// remaining budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueTable {
    states: Vec<BitVector>,
    index: HashMap<BitVector, usize>,
    values: Vec<Vec<Rational>>,
}

impl ValueTable {
    /// `values[k]` lists `E(s_k, 0) ..= E(s_k, budget)` for the states of `e`.
    pub(crate) fn from_rows(e: &ExplicitMdp, values: Vec<Vec<Rational>>) -> Self {
        ValueTable {
            states: e.states().to_vec(),
            index: e
                .states()
                .iter()
                .cloned()
                .enumerate()
                .map(|(k, s)| (s, k))
                .collect(),
            values,
        }
    }

    pub fn states(&self) -> &[BitVector] {
        &self.states
    }

    /// `E(s, 0) ..= E(s, budget)` for state index `k`.
    pub fn row(&self, k: usize) -> &[Rational] {
        &self.values[k]
    }

    pub fn get(&self, s: &BitVector, steps_to_go: usize) -> Option<&Rational> {
        self.index
            .get(s)
            .and_then(|&k| self.values[k].get(steps_to_go))
    }

    /// Replaces one entry; used to build deliberately broken tables.
    pub fn set(&mut self, s: &BitVector, steps_to_go: usize, value: Rational) -> Result<()> {
        let missing = || Error::MissingValue {
            state: s.clone(),
            step: steps_to_go,
        };
        let k = *self.index.get(s).ok_or_else(missing)?;
        let slot = self.values[k].get_mut(steps_to_go).ok_or_else(missing)?;
        *slot = value;
        Ok(())
    }
}

impl ValueSource for ValueTable {
    fn value(&self, s: &BitVector, steps_to_go: usize) -> Result<Rational> {
        self.get(s, steps_to_go)
            .cloned()
            .ok_or_else(|| Error::MissingValue {
                state: s.clone(),
                step: steps_to_go,
            })
    }
}

/// Runs the recursion for a Markov policy over every expanded state.
pub fn value_of_policy<P: MarkovPolicy + ?Sized>(e: &ExplicitMdp, p: &P) -> Result<ValueTable> {
    let n = e.num_states();
    let mut values: Vec<Vec<Rational>> = (0..n)
        .map(|k| vec![Rational::from_integer(e.reward(k).into())])
        .collect();
    let d = BigInt::from(e.denominator());
    for step in 1..=e.horizon() {
        for k in 0..n {
            if e.budget(k) < step {
                continue;
            }
            let a = p.decide_markov(e.state(k), step)?;
            let row = e.row(k, a).expect("states with budget left have rows");
            let mut sum = Rational::zero();
            for &(j, num) in row {
                sum += &values[j][step - 1] * BigInt::from(num);
            }
            let v = sum / &d + BigInt::from(e.reward(k));
            values[k].push(v);
        }
    }
    Ok(ValueTable::from_rows(e, values))
}

/// `E(s₀ … s_j, T − j)` for every positive-probability history.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HistoryValueTable {
    pub horizon: usize,
    pub values: BTreeMap<Vec<BitVector>, Rational>,
}

impl HistoryValueTable {
    pub fn get(&self, history: &[BitVector]) -> Option<&Rational> {
        self.values.get(history)
    }
}

/// The history form of the recursion, over the histories the policy
/// reaches with positive probability from the initial state.
pub fn value_of_history_policy<M: MdpModel + ?Sized, P: Policy + ?Sized>(
    m: &M,
    p: &P,
    horizon: usize,
    limits: &Limits,
) -> Result<HistoryValueTable> {
    fn go<M: MdpModel + ?Sized, P: Policy + ?Sized>(
        m: &M,
        p: &P,
        horizon: usize,
        limits: &Limits,
        history: &mut Vec<BitVector>,
        out: &mut BTreeMap<Vec<BitVector>, Rational>,
    ) -> Result<Rational> {
        if out.len() >= limits.max_trajectories {
            return Err(Error::LimitExceeded {
                what: "histories in a history value table".into(),
                limit: limits.max_trajectories,
            });
        }
        let s = history.last().expect("history is non-empty").clone();
        let mut v = Rational::from_integer(m.base().reward(&s)?.into());
        if history.len() <= horizon {
            let a = p.decide_history(history, horizon)?;
            let d = BigInt::from(m.base().prob_denominator());
            let mut sum = Rational::zero();
            for (s2, num) in m.successor_numerators(&s, a, limits)? {
                history.push(s2);
                let sub = go(m, p, horizon, limits, history, out)?;
                history.pop();
                sum += sub * BigInt::from(num);
            }
            v += sum / d;
        }
        out.insert(history.clone(), v.clone());
        Ok(v)
    }
    let mut values = BTreeMap::new();
    let mut history = vec![m.base().initial_state().clone()];
    go(m, p, horizon, limits, &mut history, &mut values)?;
    Ok(HistoryValueTable { horizon, values })
}

/// A value function as a circuit: input `[s | i]` with the step index on
/// `index_width(T + 1)` bits, output a two's-complement numerator over `Dᵥ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueCircuit {
    circuit: Circuit,
    denominator: u64,
    horizon: usize,
}

impl ValueCircuit {
    pub fn step_width(horizon: usize) -> usize {
        index_width(horizon + 1)
    }

    pub fn new(circuit: Circuit, denominator: u64, horizon: usize) -> Result<Self> {
        if denominator == 0 {
            return Err(Error::InvalidModel(
                "value denominator must be positive".into(),
            ));
        }
        let sw = Self::step_width(horizon);
        if circuit.num_inputs() < sw {
            return Err(Error::WidthMismatch {
                what: format!("inputs of value circuit '{}' [s | i]", circuit.name()),
                expected: sw,
                got: circuit.num_inputs(),
            });
        }
        if circuit.num_outputs() == 0 || circuit.num_outputs() > 63 {
            return Err(Error::InvalidModel(format!(
                "value width {} must be within 1..=63",
                circuit.num_outputs()
            )));
        }
        Ok(ValueCircuit {
            circuit,
            denominator,
            horizon,
        })
    }

    /// `E ≡ 0`.
    pub fn zero(num_vars: usize, horizon: usize, width: usize) -> Result<Self> {
        let mut b = CircuitBuilder::new(num_vars + Self::step_width(horizon));
        let zero = b.constant(false);
        ValueCircuit::new(b.build("zero_value", vec![zero; width])?, 1, horizon)
    }

    /// Tabulates `numerator(s, i)` (over `denominator`) into canonical DNF.
    /// Entries with `i > T` are zero.
    pub fn from_fn(
        num_vars: usize,
        horizon: usize,
        denominator: u64,
        width: usize,
        mut numerator: impl FnMut(&BitVector, usize) -> i64,
    ) -> Result<Self> {
        let sw = Self::step_width(horizon);
        let circuit = from_truth_table("value", num_vars + sw, width, |v| {
            let s = BitVector::from_u64(v >> sw, num_vars);
            let i = (v & ((1 << sw) - 1)) as usize;
            let num = if i <= horizon { numerator(&s, i) } else { 0 };
            BitVector::from_u64(num as u64 & ((1u64 << width) - 1), width).into_bits()
        })?;
        ValueCircuit::new(circuit, denominator, horizon)
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_vars(&self) -> usize {
        self.circuit.num_inputs() - Self::step_width(self.horizon)
    }

    pub fn width(&self) -> usize {
        self.circuit.num_outputs()
    }
}

impl ValueSource for ValueCircuit {
    fn value(&self, s: &BitVector, steps_to_go: usize) -> Result<Rational> {
        if steps_to_go > self.horizon {
            return Err(Error::MissingValue {
                state: s.clone(),
                step: steps_to_go,
            });
        }
        if s.len() != self.num_vars() {
            return Err(Error::WidthMismatch {
                what: "state given to value circuit".into(),
                expected: self.num_vars(),
                got: s.len(),
            });
        }
        let step = BitVector::from_u64(steps_to_go as u64, Self::step_width(self.horizon));
        let num = eval_parts(&self.circuit, &[s.bits(), step.bits()], read_signed)?;
        Ok(Rational::new(num.into(), self.denominator.into()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Inconsistency {
    /// `E(s, 0) ≠ r(s)`.
    BaseCase { value: Rational, reward: i64 },
    /// No single action satisfies the recursion at every step.
    NoAction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Consistency<K: Ord> {
    Consistent { witness: BTreeMap<K, usize> },
    Inconsistent { at: K, reason: Inconsistency },
}

impl<K: Ord> Consistency<K> {
    pub fn is_consistent(&self) -> bool {
        matches!(self, Consistency::Consistent { .. })
    }
}

/// `r(s) + Σ_{s' ∈ n_a(s)} t(s, s', a) · E(s', i − 1)`, or `None` when some
/// needed value is absent from a partial source.
fn backup<M: MdpModel + ?Sized>(
    m: &M,
    row: &[(BitVector, u64)],
    reward: i64,
    step: usize,
    e: &dyn ValueSource,
) -> Result<Option<Rational>> {
    let mut sum = Rational::zero();
    for (s2, num) in row {
        match e.value(s2, step - 1) {
            Ok(v) => sum += v * BigInt::from(*num),
            Err(Error::MissingValue { .. }) => return Ok(None),
            Err(err) => return Err(err),
        }
    }
    Ok(Some(
        sum / BigInt::from(m.base().prob_denominator()) + BigInt::from(reward),
    ))
}

/// The first action satisfying the recursion at `s` for every step in
/// `1 ..= max_step`.
fn consistent_action<M: MdpModel + ?Sized>(
    m: &M,
    e: &dyn ValueSource,
    s: &BitVector,
    max_step: usize,
    limits: &Limits,
) -> Result<std::result::Result<usize, Inconsistency>> {
    let reward = m.base().reward(s)?;
    let base = e.value(s, 0)?;
    if base != Rational::from_integer(reward.into()) {
        return Ok(Err(Inconsistency::BaseCase {
            value: base,
            reward,
        }));
    }
    let targets = (1..=max_step)
        .map(|i| e.value(s, i))
        .collect::<Result<Vec<_>>>()?;
    'actions: for a in 0..m.base().action_count() {
        let row = m.successor_numerators(s, a, limits)?;
        for (k, target) in targets.iter().enumerate() {
            match backup(m, &row, reward, k + 1, e)? {
                Some(v) if v == *target => {}
                _ => continue 'actions,
            }
        }
        return Ok(Ok(a));
    }
    Ok(Err(Inconsistency::NoAction))
}

/// Checks a value circuit against every one of the 2ⁿ states in increasing
/// order; the first failing state is reported.
pub fn check_consistency<M: MdpModel + ?Sized>(
    m: &M,
    e: &ValueCircuit,
    limits: &Limits,
) -> Result<Consistency<BitVector>> {
    let n = m.base().num_vars();
    if e.num_vars() != n {
        return Err(Error::WidthMismatch {
            what: "state width of value circuit".into(),
            expected: n,
            got: e.num_vars(),
        });
    }
    if n > limits.max_enum_vars {
        return Err(Error::LimitExceeded {
            what: format!("consistency check over 2^{n} states"),
            limit: limits.max_enum_vars,
        });
    }
    let mut witness = BTreeMap::new();
    for s in BitVector::all(n) {
        match consistent_action(m, e, &s, e.horizon(), limits)? {
            Ok(a) => {
                witness.insert(s, a);
            }
            Err(reason) => return Ok(Consistency::Inconsistent { at: s, reason }),
        }
    }
    Ok(Consistency::Consistent { witness })
}

/// Checks a table over its own states, each up to the steps it covers.
pub fn check_table_consistency<M: MdpModel + ?Sized>(
    m: &M,
    table: &ValueTable,
    limits: &Limits,
) -> Result<Consistency<BitVector>> {
    let mut order: Vec<usize> = (0..table.states.len()).collect();
    order.sort_by(|&a, &b| table.states[a].cmp(&table.states[b]));
    let mut witness = BTreeMap::new();
    for k in order {
        let s = &table.states[k];
        let max_step = table.values[k].len().saturating_sub(1);
        match consistent_action(m, table, s, max_step, limits)? {
            Ok(a) => {
                witness.insert(s.clone(), a);
            }
            Err(reason) => {
                return Ok(Consistency::Inconsistent {
                    at: s.clone(),
                    reason,
                })
            }
        }
    }
    Ok(Consistency::Consistent { witness })
}

/// History form: every history `h = s₀ … s_j` in the table needs
/// `E(h) = r(s_j)` when `j = T`, and otherwise some action with
/// `E(h) = r(s_j) + Σ t(s_j, s', a) · E(h s')`.
pub fn check_history_consistency<M: MdpModel + ?Sized>(
    m: &M,
    table: &HistoryValueTable,
    limits: &Limits,
) -> Result<Consistency<Vec<BitVector>>> {
    let d = BigInt::from(m.base().prob_denominator());
    let mut witness = BTreeMap::new();
    for (h, value) in &table.values {
        let s = h.last().ok_or(Error::HistoryTooLong {
            len: 0,
            horizon: table.horizon,
        })?;
        let reward = m.base().reward(s)?;
        let r = Rational::from_integer(reward.into());
        if h.len() > table.horizon {
            if *value != r {
                return Ok(Consistency::Inconsistent {
                    at: h.clone(),
                    reason: Inconsistency::BaseCase {
                        value: value.clone(),
                        reward,
                    },
                });
            }
            continue;
        }
        let mut found = None;
        'actions: for a in 0..m.base().action_count() {
            let mut sum = Rational::zero();
            let mut extended = h.clone();
            for (s2, num) in m.successor_numerators(s, a, limits)? {
                extended.push(s2);
                let Some(v) = table.values.get(&extended) else {
                    continue 'actions;
                };
                sum += v * BigInt::from(num);
                extended.pop();
            }
            if sum / &d + &r == *value {
                found = Some(a);
                break;
            }
        }
        match found {
            Some(a) => {
                witness.insert(h.clone(), a);
            }
            None => {
                return Ok(Consistency::Inconsistent {
                    at: h.clone(),
                    reason: Inconsistency::NoAction,
                })
            }
        }
    }
    Ok(Consistency::Consistent { witness })
}

/// The first action whose successor-weighted sum of `E(·, i − 1)` equals
/// `E(s, i) − r(s)`. With no steps left every action is equivalent and the
/// first is returned.
pub fn extract_policy<M: MdpModel + ?Sized>(
    m: &M,
    e: &dyn ValueSource,
    s: &BitVector,
    steps_to_go: usize,
    limits: &Limits,
) -> Result<usize> {
    if steps_to_go == 0 {
        return Ok(0);
    }
    let reward = m.base().reward(s)?;
    let target = e.value(s, steps_to_go)?;
    for a in 0..m.base().action_count() {
        let row = m.successor_numerators(s, a, limits)?;
        if backup(m, &row, reward, steps_to_go, e)?.as_ref() == Some(&target) {
            return Ok(a);
        }
    }
    Err(Error::NoConsistentAction {
        state: s.clone(),
        step: steps_to_go,
    })
}

/// Extracts an action for every state and step a table covers.
pub fn extract_timed_policy<M: MdpModel + ?Sized>(
    m: &M,
    table: &ValueTable,
    limits: &Limits,
) -> Result<TimedPolicy> {
    let mut p = TimedPolicy::new(m.base().action_count());
    for (k, s) in table.states.iter().enumerate() {
        for i in 1..table.values[k].len() {
            p.insert(s.clone(), i, extract_policy(m, table, s, i, limits)?)?;
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::expected_reward_exact;
    use crate::mdp::tests::coin_mdp;
    use crate::mdp::{expand, expand_all, SuccinctMdp};
    use crate::policy::{HistoryPolicy, StationaryPolicy};
    use crate::rational::{int, ratio};
    use crate::Gate;
    use crate::Ref;

    /// One state variable fixed at 1, reward 1, single self-loop action.
    fn self_loop() -> SuccinctMdp {
        let mut b = CircuitBuilder::new(3);
        let (s, s2) = (b.input(0), b.input(1));
        let same = b.xnor(s, s2);
        let t = b.build("t", vec![same]).unwrap();
        let r = Circuit::new(
            "r",
            1,
            vec![Gate::Const0, Gate::Const1],
            vec![Ref::Gate(0), Ref::Gate(1)],
        )
        .unwrap();
        SuccinctMdp::new(
            "loop",
            vec!["x".into()],
            "1".parse().unwrap(),
            vec!["stay".into()],
            t,
            r,
            1,
        )
        .unwrap()
    }

    #[test]
    fn self_loop_values_grow_linearly() {
        let m = self_loop();
        let e = expand(&m, m.initial_state(), 6, &Limits::default()).unwrap();
        let p = StationaryPolicy::constant(1, 0, 1).unwrap();
        let table = value_of_policy(&e, &p).unwrap();
        for i in 0..=6 {
            assert_eq!(table.get(m.initial_state(), i), Some(&int(i as i64 + 1)));
        }
    }

    #[test]
    fn table_matches_evaluator_and_is_consistent() {
        let m = coin_mdp(1);
        let limits = Limits::default();
        for a in 0..2 {
            let p = StationaryPolicy::constant(1, a, 2).unwrap();
            let e = expand(&m, m.initial_state(), 3, &limits).unwrap();
            let table = value_of_policy(&e, &p).unwrap();
            let report = expected_reward_exact(&m, &p, 3, &limits).unwrap();
            assert_eq!(
                table.get(m.initial_state(), 3).unwrap(),
                &report.expected_reward
            );
            let c = check_table_consistency(&m, &table, &limits).unwrap();
            assert!(c.is_consistent(), "{c:?}");
            let hp = HistoryPolicy::from_stationary(&p, 3).unwrap();
            let htable = value_of_history_policy(&m, &hp, 3, &limits).unwrap();
            assert_eq!(
                htable.get(&[m.initial_state().clone()]),
                Some(&report.expected_reward)
            );
            assert!(check_history_consistency(&m, &htable, &limits)
                .unwrap()
                .is_consistent());
        }
        let e = expand(&m, m.initial_state(), 1, &limits).unwrap();
        let toss = value_of_policy(&e, &StationaryPolicy::constant(1, 1, 2).unwrap()).unwrap();
        assert_eq!(toss.get(m.initial_state(), 1), Some(&ratio(1, 2)));
    }

    #[test]
    fn broken_base_case_is_rejected() {
        let m = coin_mdp(1);
        let limits = Limits::default();
        let e = expand(&m, m.initial_state(), 2, &limits).unwrap();
        let mut table = value_of_policy(&e, &StationaryPolicy::constant(1, 1, 2).unwrap()).unwrap();
        let mut heads = table.clone();
        table.set(&"0".parse().unwrap(), 0, int(7)).unwrap();
        let c = check_table_consistency(&m, &table, &limits).unwrap();
        assert!(matches!(
            c,
            Consistency::Inconsistent {
                reason: Inconsistency::BaseCase { reward: 0, .. },
                ..
            }
        ));
        // Breaking E(1, 0) first shows up at state 0, whose backups read it.
        heads.set(&"1".parse().unwrap(), 0, int(7)).unwrap();
        let c = check_table_consistency(&m, &heads, &limits).unwrap();
        assert_eq!(
            c,
            Consistency::Inconsistent {
                at: "0".parse().unwrap(),
                reason: Inconsistency::NoAction
            }
        );
    }

    #[test]
    fn circuit_consistency_and_extraction() {
        let m = coin_mdp(1);
        let limits = Limits::default();
        let horizon = 2;
        let e = expand_all(&m, horizon, &limits).unwrap();
        let p = StationaryPolicy::constant(1, 1, 2).unwrap();
        let table = value_of_policy(&e, &p).unwrap();
        // Values are multiples of 1/4 here.
        let vc = ValueCircuit::from_fn(1, horizon, 4, 6, |s, i| {
            let v = table.get(s, i).unwrap() * BigInt::from(4);
            i64::try_from(v.to_integer()).unwrap()
        })
        .unwrap();
        for s in BitVector::all(1) {
            for i in 0..=horizon {
                assert_eq!(&vc.value(&s, i).unwrap(), table.get(&s, i).unwrap());
            }
        }
        match check_consistency(&m, &vc, &limits).unwrap() {
            Consistency::Consistent { witness } => assert_eq!(witness.len(), 2),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            extract_policy(&m, &vc, &BitVector::zeros(1), 2, &limits).unwrap(),
            1
        );

        let zero = ValueCircuit::zero(1, horizon, 2).unwrap();
        let c = check_consistency(&m, &zero, &limits).unwrap();
        assert!(matches!(
            c,
            Consistency::Inconsistent {
                reason: Inconsistency::BaseCase { .. },
                ..
            }
        ));
        let bogus =
            ValueCircuit::from_fn(
                1,
                horizon,
                1,
                4,
                |s, i| if i == 0 { s.to_u64() as i64 } else { 5 },
            )
            .unwrap();
        assert!(matches!(
            extract_policy(&m, &bogus, &BitVector::zeros(1), 1, &limits),
            Err(Error::NoConsistentAction { .. })
        ));
    }
}
