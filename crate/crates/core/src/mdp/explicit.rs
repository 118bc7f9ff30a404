use std::collections::{HashMap, VecDeque};

use super::MdpModel;
use crate::bits::BitVector;
use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::rational::Rational;

/// One action's row: successor indices with numerators over the model's `D`.
pub type Row = Vec<(usize, u64)>;

/// The states reachable from `s0` within a horizon, enumerated breadth first.
///
/// `depth(s)` is the fewest steps needed to reach `s`, so with `T` steps in
/// total a state never needs values beyond `budget(s) = T - depth(s)` steps to
/// go. States at depth `T` are frontier states: only their reward matters and
/// their transition rows are not computed.
#[derive(Debug, Clone)]
pub struct ExplicitMdp {
    states: Vec<BitVector>,
    index: HashMap<BitVector, usize>,
    depth: Vec<usize>,
    rewards: Vec<i64>,
    rows: Vec<Option<Vec<Row>>>,
    actions: Vec<String>,
    denominator: u64,
    horizon: usize,
}

pub fn expand<M: MdpModel + ?Sized>(
    m: &M,
    s0: &BitVector,
    horizon: usize,
    limits: &Limits,
) -> Result<ExplicitMdp> {
    expand_from(m, std::slice::from_ref(s0), horizon, limits)
}

/// Expansion seeded with every one of the 2ⁿ states, each at depth 0.
pub fn expand_all<M: MdpModel + ?Sized>(
    m: &M,
    horizon: usize,
    limits: &Limits,
) -> Result<ExplicitMdp> {
    let n = m.base().num_vars();
    if n > limits.max_enum_vars || (1usize << n) > limits.max_states {
        return Err(Error::LimitExceeded {
            what: format!("expansion of all 2^{n} states of '{}'", m.base().name()),
            limit: limits.max_states,
        });
    }
    let seeds: Vec<BitVector> = BitVector::all(n).collect();
    expand_from(m, &seeds, horizon, limits)
}

/// Expansion from several start states at depth 0; the first becomes index 0.
pub fn expand_from<M: MdpModel + ?Sized>(
    m: &M,
    seeds: &[BitVector],
    horizon: usize,
    limits: &Limits,
) -> Result<ExplicitMdp> {
    let base = m.base();
    if seeds.is_empty() {
        return Err(Error::InvalidModel(
            "expansion needs at least one start state".into(),
        ));
    }
    let mut e = ExplicitMdp {
        states: Vec::new(),
        index: HashMap::new(),
        depth: Vec::new(),
        rewards: Vec::new(),
        rows: Vec::new(),
        actions: base.actions().to_vec(),
        denominator: base.prob_denominator(),
        horizon,
    };
    let mut queue = VecDeque::new();
    for s0 in seeds {
        if s0.len() != base.num_vars() {
            return Err(Error::WidthMismatch {
                what: "start state".into(),
                expected: base.num_vars(),
                got: s0.len(),
            });
        }
        if e.index.contains_key(s0) {
            continue;
        }
        if e.states.len() >= limits.max_states {
            return Err(Error::LimitExceeded {
                what: format!("start states of '{}'", base.name()),
                limit: limits.max_states,
            });
        }
        e.index.insert(s0.clone(), e.states.len());
        queue.push_back(e.states.len());
        e.states.push(s0.clone());
        e.depth.push(0);
        e.rewards.push(base.reward(s0)?);
    }
    while let Some(i) = queue.pop_front() {
        if e.depth[i] >= horizon {
            continue;
        }
        let mut action_rows = Vec::with_capacity(e.actions.len());
        for a in 0..e.actions.len() {
            let succ = m.successor_numerators(&e.states[i], a, limits)?;
            let mut row = Vec::with_capacity(succ.len());
            for (s2, num) in succ {
                let j = match e.index.get(&s2) {
                    Some(&j) => j,
                    None => {
                        if e.states.len() >= limits.max_states {
                            return Err(Error::LimitExceeded {
                                what: format!(
                                    "reachable states of '{}' within horizon {horizon}",
                                    base.name()
                                ),
                                limit: limits.max_states,
                            });
                        }
                        let j = e.states.len();
                        e.rewards.push(base.reward(&s2)?);
                        e.index.insert(s2.clone(), j);
                        e.states.push(s2);
                        e.depth.push(e.depth[i] + 1);
                        queue.push_back(j);
                        j
                    }
                };
                row.push((j, num));
            }
            action_rows.push(row);
        }
        if e.rows.len() <= i {
            e.rows.resize(i + 1, None);
        }
        e.rows[i] = Some(action_rows);
    }
    e.rows.resize(e.states.len(), None);
    Ok(e)
}

impl ExplicitMdp {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[BitVector] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &BitVector {
        &self.states[i]
    }

    pub fn index_of(&self, s: &BitVector) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// The (first) start state is always index 0.
    pub fn initial(&self) -> usize {
        0
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn depth(&self, i: usize) -> usize {
        self.depth[i]
    }

    pub fn budget(&self, i: usize) -> usize {
        self.horizon - self.depth[i]
    }

    pub fn reward(&self, i: usize) -> i64 {
        self.rewards[i]
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    /// Successors under action `a`, or `None` for frontier states.
    pub fn row(&self, i: usize, a: usize) -> Option<&Row> {
        self.rows[i].as_ref().map(|rows| &rows[a])
    }

    pub fn is_frontier(&self, i: usize) -> bool {
        self.rows[i].is_none()
    }

    pub fn prob(&self, num: u64) -> Rational {
        Rational::new(num.into(), self.denominator.into())
    }

    /// Exact `p(s, s', a)` for an expanded, non-frontier `s`.
    pub fn transition_prob(&self, i: usize, j: usize, a: usize) -> Option<Rational> {
        let row = self.row(i, a)?;
        let num = row.iter().find(|&&(k, _)| k == j).map_or(0, |&(_, n)| n);
        Some(self.prob(num))
    }

    /// Indices of the states with depth below the horizon, in index order.
    pub fn decision_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.states.len()).filter(|&i| !self.is_frontier(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::tests::{coin_mdp, identity_mdp};
    use crate::rational::{int, ratio};

    #[test]
    fn identity_has_one_state() {
        let m = identity_mdp();
        let e = expand(&m, m.initial_state(), 5, &Limits::default()).unwrap();
        assert_eq!(e.num_states(), 1);
        assert_eq!(e.transition_prob(0, 0, 0), Some(int(1)));
    }

    #[test]
    fn coin_rows_sum_to_one_and_match_succinct_form() {
        let m = coin_mdp(1);
        let e = expand(&m, m.initial_state(), 2, &Limits::default()).unwrap();
        assert_eq!(e.num_states(), 2);
        assert_eq!(e.depth(1), 1);
        for i in e.decision_states() {
            for a in 0..e.action_count() {
                let total: u64 = e.row(i, a).unwrap().iter().map(|(_, n)| n).sum();
                assert_eq!(total, e.denominator());
                for j in 0..e.num_states() {
                    let p = m.transition_prob(e.state(i), e.state(j), a).unwrap();
                    assert_eq!(e.transition_prob(i, j, a).unwrap(), p);
                }
            }
        }
        assert_eq!(e.transition_prob(0, 1, 1), Some(ratio(1, 2)));
    }

    #[test]
    fn frontier_states_have_no_rows() {
        let m = coin_mdp(1);
        let e = expand(&m, m.initial_state(), 1, &Limits::default()).unwrap();
        assert!(!e.is_frontier(0));
        assert!(e.is_frontier(1));
        let e0 = expand(&m, m.initial_state(), 0, &Limits::default()).unwrap();
        assert_eq!(e0.num_states(), 1);
        assert!(e0.is_frontier(0));
    }

    #[test]
    fn state_limit() {
        let m = coin_mdp(1);
        let limits = Limits {
            max_states: 1,
            ..Limits::default()
        };
        assert!(matches!(
            expand(&m, m.initial_state(), 1, &limits),
            Err(Error::LimitExceeded { .. })
        ));
    }
}
