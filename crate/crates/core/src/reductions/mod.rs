//! Instance generators for the SAT-family constructions. Each turns a CNF
//! into an MDP plus the companion objects its decision problem needs (state,
//! action, policy, bounds, value function).

pub mod cnf;
mod majsat;
mod quantified;
mod satnext;
pub mod sequence;
mod unsat;

pub use cnf::{Cnf, Lit};
pub use majsat::majsat_to_eval;
pub use quantified::{emajsat_to_bounded_policy, forallexists_to_valuefn, EmajsatThreshold};
pub use satnext::{sat_to_next_action, SatNextMode};
pub use sequence::SequenceLayout;
pub use unsat::unsat_to_consistency;

use crate::circuit::{CircuitBuilder, Ref, Word};
use crate::mdp::AnyMdp;
use crate::policy::StationaryPolicy;
use crate::rational::Rational;
use crate::value::ValueCircuit;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionKind {
    SatNext,
    Majsat,
    Emajsat,
    UnsatConsistency,
    ForallExists,
}

impl ReductionKind {
    pub fn name(self) -> &'static str {
        match self {
            ReductionKind::SatNext => "satnext",
            ReductionKind::Majsat => "majsat",
            ReductionKind::Emajsat => "emajsat",
            ReductionKind::UnsatConsistency => "unsatcons",
            ReductionKind::ForallExists => "forall",
        }
    }
}

/// Everything one construction emits.
#[derive(Debug, Clone)]
pub struct ReductionInstance {
    pub kind: ReductionKind,
    pub mdp: AnyMdp,
    pub horizon: usize,
    /// Sequence layout, for the sequence-state constructions.
    pub layout: Option<SequenceLayout>,
    /// Query state of a next-action instance.
    pub state: Option<crate::bits::BitVector>,
    /// Query action of a next-action instance.
    pub action: Option<usize>,
    pub policy: Option<StationaryPolicy>,
    pub size_bound: Option<usize>,
    pub reward_bound: Option<Rational>,
    pub value: Option<ValueCircuit>,
    /// How the expected answer is obtained by brute force.
    pub oracle: String,
    /// Departures from the textbook construction, written next to the instance.
    pub notes: Vec<String>,
}

impl ReductionInstance {
    fn new(kind: ReductionKind, mdp: AnyMdp, horizon: usize, oracle: &str) -> Self {
        ReductionInstance {
            kind,
            mdp,
            horizon,
            layout: None,
            state: None,
            action: None,
            policy: None,
            size_bound: None,
            reward_bound: None,
            value: None,
            oracle: oracle.to_string(),
            notes: Vec::new(),
        }
    }
}

/// Splits an element word of a literal alphabet into (variable field, sign bit).
pub(crate) fn literal_fields(word: &[Ref]) -> (&[Ref], Ref) {
    let (var, sign) = word.split_at(word.len() - 1);
    (var, sign[0])
}

/// A policy circuit over sequence states choosing `action_for_len(len)`.
pub(crate) fn length_indexed_policy(
    layout: &SequenceLayout,
    action_count: usize,
    name: &str,
    action_for_len: impl Fn(usize) -> Option<usize>,
) -> crate::error::Result<StationaryPolicy> {
    let mut b = CircuitBuilder::new(layout.num_vars());
    let len: Word = b.input_word(0, layout.len_width());
    let cases: Vec<(Ref, u64)> = (0..=layout.max_len())
        .filter_map(|l| action_for_len(l).map(|a| (l, a)))
        .filter(|&(_, a)| a != 0)
        .map(|(l, a)| (b.eq_const(&len, l as u64), a as u64))
        .collect();
    let out = b.select_const(&cases, crate::bits::index_width(action_count));
    StationaryPolicy::new(b.build(name, out)?, action_count)
}
