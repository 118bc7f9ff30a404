//! Exhaustive ground truth: finite-horizon backward induction, the
//! next-action question, bounded-size policy search at toy scale, and
//! brute-force SAT-family oracles.

mod bounded;
mod sat;

pub use bounded::{bounded_policy_exists, BoundedAnswer, SearchMethod};
pub use sat::{emajsat_oracle, forall_exists_oracle, model_count, sat_oracle};

use num_bigint::BigInt;
use num_traits::Zero;

use crate::bits::BitVector;
use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::mdp::{expand, ExplicitMdp, MdpModel};
use crate::policy::TimedPolicy;
use crate::rational::Rational;
use crate::reductions::ReductionInstance;
use crate::value::ValueTable;

/// Optimal values and actions of an explicit MDP.
#[derive(Debug, Clone)]
pub struct OptimalSolution {
    /// `V*(s, i)` for every state and every `i` up to its budget.
    pub values: ValueTable,
    /// `optimal[k][i - 1]`: the actions attaining `V*(s_k, i)`, ascending.
    pub optimal: Vec<Vec<Vec<usize>>>,
    /// Lowest-index optimal action at each `(s, i)` with `i ≥ 1`.
    pub greedy: TimedPolicy,
}

impl OptimalSolution {
    pub fn optimal_actions(&self, k: usize, steps_to_go: usize) -> Option<&[usize]> {
        steps_to_go
            .checked_sub(1)
            .and_then(|i| self.optimal.get(k)?.get(i))
            .map(Vec::as_slice)
    }
}

fn backup(e: &ExplicitMdp, values: &[Vec<Rational>], k: usize, a: usize, step: usize) -> Rational {
    let row = e.row(k, a).expect("states with budget left have rows");
    let mut sum = Rational::zero();
    for &(j, num) in row {
        sum += &values[j][step - 1] * BigInt::from(num);
    }
    sum / BigInt::from(e.denominator()) + BigInt::from(e.reward(k))
}

/// Backward induction over every state and step of `e`.
pub fn solve_optimal(e: &ExplicitMdp) -> Result<OptimalSolution> {
    let n = e.num_states();
    let mut values: Vec<Vec<Rational>> = (0..n)
        .map(|k| vec![Rational::from_integer(e.reward(k).into())])
        .collect();
    let mut optimal: Vec<Vec<Vec<usize>>> = vec![Vec::new(); n];
    let mut greedy = TimedPolicy::new(e.action_count());
    for step in 1..=e.horizon() {
        for k in 0..n {
            if e.budget(k) < step {
                continue;
            }
            let q: Vec<Rational> = (0..e.action_count())
                .map(|a| backup(e, &values, k, a, step))
                .collect();
            let best = q.iter().max().expect("at least one action").clone();
            let arg: Vec<usize> = (0..q.len()).filter(|&a| q[a] == best).collect();
            greedy.insert(e.state(k).clone(), step, arg[0])?;
            optimal[k].push(arg);
            values[k].push(best);
        }
    }
    Ok(OptimalSolution {
        values: ValueTable::from_rows(e, values),
        optimal,
        greedy,
    })
}

/// `r(s) + Σ t(s, a, s′)·V(s′, i − 1)` for every action, given a solved table.
pub fn action_values(
    e: &ExplicitMdp,
    solution: &OptimalSolution,
    k: usize,
    steps_to_go: usize,
) -> Result<Vec<Rational>> {
    if steps_to_go == 0 || steps_to_go > e.budget(k) {
        return Err(Error::MissingValue {
            state: e.state(k).clone(),
            step: steps_to_go,
        });
    }
    let rows: Vec<Vec<Rational>> = (0..e.num_states())
        .map(|j| solution.values.row(j).to_vec())
        .collect();
    Ok((0..e.action_count())
        .map(|a| backup(e, &rows, k, a, steps_to_go))
        .collect())
}

/// Result of a next-action query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NextAction {
    /// Actions some optimal policy takes at the state, ascending.
    pub actions: Vec<usize>,
    /// `V*(s, i)`.
    pub value: Rational,
    /// The value of each action followed by optimal play.
    pub action_values: Vec<Rational>,
}

/// The actions an optimal policy may take at `s` with `steps_to_go` steps
/// remaining, solving the MDP restricted to what `s` reaches in that many
/// steps. With no steps left every action qualifies.
pub fn best_next_action<M: MdpModel + ?Sized>(
    m: &M,
    s: &BitVector,
    steps_to_go: usize,
    limits: &Limits,
) -> Result<NextAction> {
    let base = m.base();
    if s.len() != base.num_vars() {
        return Err(Error::InvalidModel(format!(
            "state {s} has {} bits, the model has {} variables",
            s.len(),
            base.num_vars()
        )));
    }
    let e = expand(m, s, steps_to_go, limits)?;
    let solution = solve_optimal(&e)?;
    let value = solution.values.row(0)[steps_to_go].clone();
    if steps_to_go == 0 {
        return Ok(NextAction {
            actions: (0..base.action_count()).collect(),
            action_values: vec![value.clone(); base.action_count()],
            value,
        });
    }
    Ok(NextAction {
        actions: solution
            .optimal_actions(0, steps_to_go)
            .expect("solved")
            .to_vec(),
        action_values: action_values(&e, &solution, 0, steps_to_go)?,
        value,
    })
}

/// Next-action query for a generated instance: the step index follows from
/// the length of the encoded sequence.
pub fn instance_next_action(inst: &ReductionInstance, limits: &Limits) -> Result<NextAction> {
    let (Some(s), Some(layout)) = (&inst.state, &inst.layout) else {
        return Err(Error::Reduction(
            "the instance carries no query state".into(),
        ));
    };
    let len = layout.decode(s)?.len();
    let steps = inst.horizon.checked_sub(len).ok_or(Error::HistoryTooLong {
        len,
        horizon: inst.horizon,
    })?;
    best_next_action(&inst.mdp, s, steps, limits)
}
