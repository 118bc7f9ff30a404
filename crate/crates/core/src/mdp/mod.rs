//! Succinct and bounded-action MDPs.
//!
//! A succinct MDP keeps its state space implicit: states are assignments to
//! the declared variables, and two circuits define the dynamics.
//!
//! * The transition circuit reads `[s | s' | action index]` and outputs an
//!   unsigned numerator; the probability is that numerator over the MDP's
//!   declared denominator `D`. A single denominator per model keeps every
//!   probability exact, including non-dyadic ones such as `1/(2n)`.
//! * The reward circuit reads `[s]` and outputs a two's-complement integer.
//!
//! Action indices are zero-based, MSB first, on `⌈log₂ |A|⌉` bits (one bit
//! for a single action).
//!
//! A bounded-action MDP adds one successor circuit per action. Its input is
//! `[s | slot index]` and its output `[valid | s']`; the valid slots list
//! exactly the successors with positive probability.

mod explicit;
mod validate;

use std::cell::RefCell;
use std::collections::HashSet;

pub use explicit::{expand, expand_all, expand_from, ExplicitMdp, Row};
pub use validate::{validate, ValidateOptions, ValidationReport, Violation};

use crate::bits::{index_width, read_signed, read_unsigned, BitVector};
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::rational::Rational;

thread_local! {
    static BUFFERS: RefCell<(Vec<bool>, Vec<bool>, Vec<bool>)> = const { RefCell::new((Vec::new(), Vec::new(), Vec::new())) };
}

/// Evaluates `c` on the concatenation of `parts`, reusing per-thread buffers.
pub(crate) fn eval_parts<R>(
    c: &Circuit,
    parts: &[&[bool]],
    read: impl FnOnce(&[bool]) -> R,
) -> Result<R> {
    BUFFERS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (input, scratch, out) = &mut *guard;
        input.clear();
        for p in parts {
            input.extend_from_slice(p);
        }
        c.eval_into(input, scratch, out)?;
        Ok(read(out))
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuccinctMdp {
    name: String,
    vars: Vec<String>,
    initial_state: BitVector,
    actions: Vec<String>,
    transition: Circuit,
    reward: Circuit,
    prob_denominator: u64,
}

impl SuccinctMdp {
    /// Checks every width against the declared variables and actions. The
    /// probability numerator width and reward width are the output widths
    /// of the respective circuits.
    pub fn new(
        name: impl Into<String>,
        vars: Vec<String>,
        initial_state: BitVector,
        actions: Vec<String>,
        transition: Circuit,
        reward: Circuit,
        prob_denominator: u64,
    ) -> Result<Self> {
        let n = vars.len();
        if actions.is_empty() {
            return Err(Error::InvalidModel(
                "an MDP needs at least one action".into(),
            ));
        }
        if prob_denominator == 0 {
            return Err(Error::InvalidModel(
                "probability denominator must be positive".into(),
            ));
        }
        if initial_state.len() != n {
            return Err(Error::WidthMismatch {
                what: "initial state".into(),
                expected: n,
                got: initial_state.len(),
            });
        }
        let aw = index_width(actions.len());
        if transition.num_inputs() != 2 * n + aw {
            return Err(Error::WidthMismatch {
                what: "transition circuit inputs [s | s' | a]".into(),
                expected: 2 * n + aw,
                got: transition.num_inputs(),
            });
        }
        if transition.num_outputs() == 0 || transition.num_outputs() > 63 {
            return Err(Error::InvalidModel(format!(
                "transition numerator width {} must be within 1..=63",
                transition.num_outputs()
            )));
        }
        if reward.num_inputs() != n {
            return Err(Error::WidthMismatch {
                what: "reward circuit inputs [s]".into(),
                expected: n,
                got: reward.num_inputs(),
            });
        }
        if reward.num_outputs() == 0 || reward.num_outputs() > 63 {
            return Err(Error::InvalidModel(format!(
                "reward width {} must be within 1..=63",
                reward.num_outputs()
            )));
        }
        Ok(SuccinctMdp {
            name: name.into(),
            vars,
            initial_state,
            actions,
            transition,
            reward,
            prob_denominator,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn initial_state(&self) -> &BitVector {
        &self.initial_state
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    pub fn action_width(&self) -> usize {
        index_width(self.actions.len())
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn transition_circuit(&self) -> &Circuit {
        &self.transition
    }

    pub fn reward_circuit(&self) -> &Circuit {
        &self.reward
    }

    pub fn prob_denominator(&self) -> u64 {
        self.prob_denominator
    }

    pub fn prob_width(&self) -> usize {
        self.transition.num_outputs()
    }

    pub fn reward_width(&self) -> usize {
        self.reward.num_outputs()
    }

    fn check_state(&self, what: &str, s: &BitVector) -> Result<()> {
        if s.len() != self.num_vars() {
            return Err(Error::WidthMismatch {
                what: what.into(),
                expected: self.num_vars(),
                got: s.len(),
            });
        }
        Ok(())
    }

    fn check_action(&self, a: usize) -> Result<()> {
        if a >= self.action_count() {
            return Err(Error::InvalidAction {
                index: a as u64,
                count: self.action_count(),
            });
        }
        Ok(())
    }

    /// Raw output of the transition circuit, bounded by `D`.
    pub fn transition_numerator(&self, s: &BitVector, s2: &BitVector, a: usize) -> Result<u64> {
        self.check_state("state", s)?;
        self.check_state("successor state", s2)?;
        self.check_action(a)?;
        let action = BitVector::from_u64(a as u64, self.action_width());
        let num = eval_parts(
            &self.transition,
            &[s.bits(), s2.bits(), action.bits()],
            read_unsigned,
        )?;
        if num > self.prob_denominator {
            return Err(Error::NumeratorExceedsDenominator {
                numerator: num,
                denominator: self.prob_denominator,
                state: s.clone(),
                successor: s2.clone(),
                action: a,
            });
        }
        Ok(num)
    }

    pub fn transition_prob(&self, s: &BitVector, s2: &BitVector, a: usize) -> Result<Rational> {
        let num = self.transition_numerator(s, s2, a)?;
        Ok(Rational::new(num.into(), self.prob_denominator.into()))
    }

    pub fn reward(&self, s: &BitVector) -> Result<i64> {
        self.check_state("state", s)?;
        eval_parts(&self.reward, &[s.bits()], read_signed)
    }

    fn enumerate_successors(
        &self,
        s: &BitVector,
        a: usize,
        limits: &Limits,
    ) -> Result<Vec<(BitVector, u64)>> {
        if self.num_vars() > limits.max_enum_vars {
            return Err(Error::LimitExceeded {
                what: format!(
                    "successor enumeration over 2^{} states of '{}' (no successor circuits)",
                    self.num_vars(),
                    self.name
                ),
                limit: limits.max_enum_vars,
            });
        }
        let mut out = Vec::new();
        for s2 in BitVector::all(self.num_vars()) {
            let num = self.transition_numerator(s, &s2, a)?;
            if num > 0 {
                out.push((s2, num));
            }
        }
        Ok(out)
    }

    fn check_row(&self, s: &BitVector, a: usize, row: &[(BitVector, u64)]) -> Result<()> {
        let sum: u64 = row.iter().map(|(_, n)| n).sum();
        if sum != self.prob_denominator {
            return Err(Error::NotNormalized {
                state: s.clone(),
                action: a,
                sum,
                denominator: self.prob_denominator,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundedActionMdp {
    base: SuccinctMdp,
    successor_circuits: Vec<Circuit>,
    max_branching: usize,
}

impl BoundedActionMdp {
    pub fn new(
        base: SuccinctMdp,
        successor_circuits: Vec<Circuit>,
        max_branching: usize,
    ) -> Result<Self> {
        if successor_circuits.len() != base.action_count() {
            return Err(Error::InvalidModel(format!(
                "{} successor circuits for {} actions",
                successor_circuits.len(),
                base.action_count()
            )));
        }
        if max_branching == 0 {
            return Err(Error::InvalidModel(
                "branching bound must be positive".into(),
            ));
        }
        let n = base.num_vars();
        let sw = index_width(max_branching);
        for (a, c) in successor_circuits.iter().enumerate() {
            if c.num_inputs() != n + sw {
                return Err(Error::WidthMismatch {
                    what: format!(
                        "successor circuit of action {} inputs [s | slot]",
                        base.actions()[a]
                    ),
                    expected: n + sw,
                    got: c.num_inputs(),
                });
            }
            if c.num_outputs() != n + 1 {
                return Err(Error::WidthMismatch {
                    what: format!(
                        "successor circuit of action {} outputs [valid | s']",
                        base.actions()[a]
                    ),
                    expected: n + 1,
                    got: c.num_outputs(),
                });
            }
        }
        Ok(BoundedActionMdp {
            base,
            successor_circuits,
            max_branching,
        })
    }

    pub fn base(&self) -> &SuccinctMdp {
        &self.base
    }

    pub fn successor_circuits(&self) -> &[Circuit] {
        &self.successor_circuits
    }

    pub fn max_branching(&self) -> usize {
        self.max_branching
    }

    pub fn slot_width(&self) -> usize {
        index_width(self.max_branching)
    }

    /// The raw slot listing of `n_a(s)`: valid slots in slot order, without
    /// probabilities and without duplicate checks.
    pub fn listed_successors(&self, s: &BitVector, a: usize) -> Result<Vec<BitVector>> {
        self.base.check_state("state", s)?;
        self.base.check_action(a)?;
        let circuit = &self.successor_circuits[a];
        let sw = self.slot_width();
        let mut listed = Vec::new();
        for slot in 0..self.max_branching {
            let slot_bits = BitVector::from_u64(slot as u64, sw);
            let (valid, s2) = eval_parts(circuit, &[s.bits(), slot_bits.bits()], |out| {
                (out[0], BitVector::new(out[1..].to_vec()))
            })?;
            if valid {
                listed.push(s2);
            }
        }
        Ok(listed)
    }
}

/// Anything that can list the positive-probability successors of a state.
pub trait MdpModel {
    fn base(&self) -> &SuccinctMdp;

    /// Successors of `s` under action `a` with their numerators over `D`.
    /// The numerators sum to exactly `D`.
    fn successor_numerators(
        &self,
        s: &BitVector,
        a: usize,
        limits: &Limits,
    ) -> Result<Vec<(BitVector, u64)>>;

    fn successors(
        &self,
        s: &BitVector,
        a: usize,
        limits: &Limits,
    ) -> Result<Vec<(BitVector, Rational)>> {
        let d = self.base().prob_denominator();
        Ok(self
            .successor_numerators(s, a, limits)?
            .into_iter()
            .map(|(s2, n)| (s2, Rational::new(n.into(), d.into())))
            .collect())
    }
}

impl MdpModel for SuccinctMdp {
    fn base(&self) -> &SuccinctMdp {
        self
    }

    fn successor_numerators(
        &self,
        s: &BitVector,
        a: usize,
        limits: &Limits,
    ) -> Result<Vec<(BitVector, u64)>> {
        let row = self.enumerate_successors(s, a, limits)?;
        self.check_row(s, a, &row)?;
        Ok(row)
    }
}

impl MdpModel for BoundedActionMdp {
    fn base(&self) -> &SuccinctMdp {
        &self.base
    }

    fn successor_numerators(
        &self,
        s: &BitVector,
        a: usize,
        _limits: &Limits,
    ) -> Result<Vec<(BitVector, u64)>> {
        let listed = self.listed_successors(s, a)?;
        let mut seen = HashSet::with_capacity(listed.len());
        let mut row = Vec::with_capacity(listed.len());
        for s2 in listed {
            if !seen.insert(s2.clone()) {
                return Err(Error::DuplicateSuccessor {
                    state: s.clone(),
                    action: a,
                    successor: s2,
                });
            }
            let num = self.base.transition_numerator(s, &s2, a)?;
            if num == 0 {
                return Err(Error::InvalidModel(format!(
                    "successor circuit of action {} lists s'={s2} at s={s}, but its probability is 0",
                    self.base.actions()[a]
                )));
            }
            row.push((s2, num));
        }
        self.base.check_row(s, a, &row)?;
        Ok(row)
    }
}

/// Either flavour, as loaded from a manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyMdp {
    Succinct(SuccinctMdp),
    Bounded(BoundedActionMdp),
}

impl AnyMdp {
    pub fn as_bounded(&self) -> Option<&BoundedActionMdp> {
        match self {
            AnyMdp::Bounded(b) => Some(b),
            AnyMdp::Succinct(_) => None,
        }
    }
}

impl MdpModel for AnyMdp {
    fn base(&self) -> &SuccinctMdp {
        match self {
            AnyMdp::Succinct(m) => m,
            AnyMdp::Bounded(m) => m.base(),
        }
    }

    fn successor_numerators(
        &self,
        s: &BitVector,
        a: usize,
        limits: &Limits,
    ) -> Result<Vec<(BitVector, u64)>> {
        match self {
            AnyMdp::Succinct(m) => m.successor_numerators(s, a, limits),
            AnyMdp::Bounded(m) => m.successor_numerators(s, a, limits),
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::circuit::{CircuitBuilder, Gate, Ref};
    use crate::rational::{int, ratio};

    /// One variable, actions {stay, toss}. `stay` keeps the state, `toss`
    /// lands on either value with probability 1/2. Reward 1 on heads (x = 1).
    pub(crate) fn coin_mdp(denominator_scale: u64) -> SuccinctMdp {
        let d = 2 * denominator_scale;
        // inputs: s, s', a
        let mut b = CircuitBuilder::new(3);
        let (s, s2, a) = (b.input(0), b.input(1), b.input(2));
        let same = b.xnor(s, s2);
        let na = b.not(a);
        let stay = b.and(na, same);
        let cases = [(stay, d), (a, d / 2)];
        let out = b.select_const(&cases, 4);
        let t = b.build("coin_t", out).unwrap();
        let r = Circuit::new(
            "coin_r",
            1,
            vec![Gate::Const0],
            vec![Ref::Gate(0), Ref::Input(0)],
        )
        .unwrap();
        SuccinctMdp::new(
            "coin",
            vec!["x".into()],
            BitVector::zeros(1),
            vec!["stay".into(), "toss".into()],
            t,
            r,
            2,
        )
        .unwrap()
    }

    pub(crate) fn identity_mdp() -> SuccinctMdp {
        // Two variables, one action, t = D when s == s'.
        let mut b = CircuitBuilder::new(5);
        let s = b.input_word(0, 2);
        let s2 = b.input_word(2, 2);
        let same = b.eq_words(&s, &s2);
        let t = b.build("id_t", vec![same]).unwrap();
        let r = Circuit::new(
            "id_r",
            2,
            vec![Gate::Const0],
            vec![Ref::Gate(0), Ref::Gate(0)],
        )
        .unwrap();
        SuccinctMdp::new(
            "identity",
            vec!["p".into(), "q".into()],
            "10".parse().unwrap(),
            vec!["noop".into()],
            t,
            r,
            1,
        )
        .unwrap()
    }

    #[test]
    fn identity_dynamics() {
        let m = identity_mdp();
        for s in BitVector::all(2) {
            for s2 in BitVector::all(2) {
                let p = m.transition_prob(&s, &s2, 0).unwrap();
                assert_eq!(p, if s == s2 { int(1) } else { int(0) });
            }
        }
        let succ = m
            .successors(&"01".parse().unwrap(), 0, &Limits::default())
            .unwrap();
        assert_eq!(succ, vec![("01".parse().unwrap(), int(1))]);
        assert_eq!(m.reward(&"11".parse().unwrap()).unwrap(), 0);
    }

    #[test]
    fn coin_toss_enumeration() {
        let m = coin_mdp(1);
        let s = BitVector::zeros(1);
        let succ = m.successors(&s, 1, &Limits::default()).unwrap();
        assert_eq!(succ.len(), 2);
        let total: Rational = succ.iter().map(|(_, p)| p.clone()).sum();
        assert_eq!(total, int(1));
        assert!(succ.iter().all(|(_, p)| *p == ratio(1, 2)));
        assert_eq!(m.reward(&"1".parse().unwrap()).unwrap(), 1);
    }

    #[test]
    fn numerator_above_denominator_is_an_error() {
        let m = coin_mdp(2);
        let s = BitVector::zeros(1);
        assert!(matches!(
            m.transition_prob(&s, &s, 0),
            Err(Error::NumeratorExceedsDenominator {
                numerator: 4,
                denominator: 2,
                ..
            })
        ));
    }

    #[test]
    fn enumeration_limit() {
        let m = coin_mdp(1);
        let limits = Limits {
            max_enum_vars: 0,
            ..Limits::default()
        };
        assert!(matches!(
            m.successors(&BitVector::zeros(1), 0, &limits),
            Err(Error::LimitExceeded { .. })
        ));
    }

    #[test]
    fn width_checks() {
        let m = coin_mdp(1);
        assert!(m
            .transition_prob(&BitVector::zeros(2), &BitVector::zeros(1), 0)
            .is_err());
        assert!(matches!(
            m.transition_prob(&BitVector::zeros(1), &BitVector::zeros(1), 2),
            Err(Error::InvalidAction { index: 2, count: 2 })
        ));
        let bad = SuccinctMdp::new(
            "bad",
            vec!["x".into()],
            BitVector::zeros(1),
            vec!["a".into(), "b".into(), "c".into()],
            m.transition_circuit().clone(),
            m.reward_circuit().clone(),
            2,
        );
        assert!(matches!(bad, Err(Error::WidthMismatch { .. })));
    }
}
