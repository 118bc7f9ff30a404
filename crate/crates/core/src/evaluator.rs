//! Expected undiscounted reward of a policy over a finite horizon.
//!
//! The exact evaluator walks the tree of positive-probability trajectories
//! and adds `H(s₀ … s_d) · r(s_d)` for every prefix, depth 0 included. The
//! probability of a depth-`d` prefix is a product of numerators over `D^d`, so
//! each depth is accumulated as a big integer and divided once at the end.

use std::collections::HashMap;
use std::rc::Rc;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitVector;
use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::mdp::MdpModel;
use crate::policy::Policy;
use crate::rational::Rational;

type SuccessorRow = Rc<Vec<(BitVector, u64)>>;

/// Memoized `(s, a) ↦ successors` lookups.
pub(crate) struct SuccessorCache<'a, M: MdpModel + ?Sized> {
    model: &'a M,
    limits: &'a Limits,
    rows: HashMap<(BitVector, usize), SuccessorRow>,
}

impl<'a, M: MdpModel + ?Sized> SuccessorCache<'a, M> {
    pub(crate) fn new(model: &'a M, limits: &'a Limits) -> Self {
        SuccessorCache {
            model,
            limits,
            rows: HashMap::new(),
        }
    }

    pub(crate) fn get(&mut self, s: &BitVector, a: usize) -> Result<SuccessorRow> {
        if let Some(row) = self.rows.get(&(s.clone(), a)) {
            return Ok(row.clone());
        }
        let row = Rc::new(self.model.successor_numerators(s, a, self.limits)?);
        self.rows.insert((s.clone(), a), row.clone());
        Ok(row)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub states: Vec<BitVector>,
    pub probability: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewardReport {
    pub expected_reward: Rational,
    /// Contribution of the prefixes of each length `d = 0 ..= T`.
    pub per_depth: Vec<Rational>,
    /// Number of positive-probability prefixes visited, the empty-step one included.
    pub trajectory_count: usize,
}

fn check_start<M: MdpModel + ?Sized>(m: &M, s0: &BitVector) -> Result<()> {
    if s0 != m.base().initial_state() {
        return Err(Error::NotInitialState);
    }
    Ok(())
}

/// `H(s₀ … s_d)`: the product of the transition probabilities along the
/// sequence, each step taking the policy's action for the history so far.
pub fn history_probability<M: MdpModel + ?Sized, P: Policy + ?Sized>(
    m: &M,
    p: &P,
    states: &[BitVector],
    horizon: usize,
) -> Result<Rational> {
    let Some(s0) = states.first() else {
        return Err(Error::HistoryTooLong { len: 0, horizon });
    };
    check_start(m, s0)?;
    if states.len() > horizon + 1 {
        return Err(Error::HistoryTooLong {
            len: states.len(),
            horizon,
        });
    }
    let base = m.base();
    let mut num = BigInt::one();
    for i in 0..states.len() - 1 {
        let a = p.decide_history(&states[..=i], horizon)?;
        let t = base.transition_numerator(&states[i], &states[i + 1], a)?;
        if t == 0 {
            return Ok(Rational::zero());
        }
        num *= t;
    }
    let den = BigInt::from(base.prob_denominator()).pow((states.len() - 1) as u32);
    Ok(Rational::new(num, den))
}

struct Walker<'a, M: MdpModel + ?Sized, P: Policy + ?Sized> {
    cache: SuccessorCache<'a, M>,
    policy: &'a P,
    horizon: usize,
    max_nodes: usize,
    history: Vec<BitVector>,
    /// Per depth: Σ (product of numerators) · reward.
    sums: Vec<BigInt>,
    nodes: usize,
    collect: Option<Vec<(Vec<BitVector>, BigInt)>>,
}

impl<M: MdpModel + ?Sized, P: Policy + ?Sized> Walker<'_, M, P> {
    fn visit(&mut self, weight: &BigInt) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Err(Error::LimitExceeded {
                what: "trajectory prefixes visited by exact evaluation".into(),
                limit: self.max_nodes,
            });
        }
        let depth = self.history.len() - 1;
        let s = self.history[depth].clone();
        let r = self.cache.model.base().reward(&s)?;
        self.sums[depth] += weight * r;
        if let Some(out) = self.collect.as_mut() {
            out.push((self.history.clone(), weight.clone()));
        }
        if depth == self.horizon {
            return Ok(());
        }
        let a = self.policy.decide_history(&self.history, self.horizon)?;
        let row = self.cache.get(&s, a)?;
        for (s2, num) in row.iter() {
            self.history.push(s2.clone());
            self.visit(&(weight * *num))?;
            self.history.pop();
        }
        Ok(())
    }
}

/// Per-depth numerator sums, nodes visited, and the prefixes with their
/// numerators when collected.
type WalkResult = (Vec<BigInt>, usize, Option<Vec<(Vec<BitVector>, BigInt)>>);

fn walk<M: MdpModel + ?Sized, P: Policy + ?Sized>(
    m: &M,
    p: &P,
    horizon: usize,
    limits: &Limits,
    collect: bool,
) -> Result<WalkResult> {
    let mut w = Walker {
        cache: SuccessorCache::new(m, limits),
        policy: p,
        horizon,
        max_nodes: limits.max_trajectories,
        history: vec![m.base().initial_state().clone()],
        sums: vec![BigInt::zero(); horizon + 1],
        nodes: 0,
        collect: collect.then(Vec::new),
    };
    w.visit(&BigInt::one())?;
    Ok((w.sums, w.nodes, w.collect))
}

/// Exact `R(P) = Σ_d Σ_{s₀…s_d} H(s₀ … s_d) · r(s_d)` over `d = 0 ..= T`.
pub fn expected_reward_exact<M: MdpModel + ?Sized, P: Policy + ?Sized>(
    m: &M,
    p: &P,
    horizon: usize,
    limits: &Limits,
) -> Result<RewardReport> {
    let (sums, nodes, _) = walk(m, p, horizon, limits, false)?;
    let d = BigInt::from(m.base().prob_denominator());
    let per_depth: Vec<Rational> = sums
        .into_iter()
        .enumerate()
        .map(|(depth, num)| Rational::new(num, d.pow(depth as u32)))
        .collect();
    Ok(RewardReport {
        expected_reward: per_depth.iter().sum(),
        per_depth,
        trajectory_count: nodes,
    })
}

/// Every positive-probability prefix `s₀ … s_d`, `d ≤ T`, in depth-first order.
pub fn trajectories<M: MdpModel + ?Sized, P: Policy + ?Sized>(
    m: &M,
    p: &P,
    horizon: usize,
    limits: &Limits,
) -> Result<Vec<Trajectory>> {
    let (_, _, collected) = walk(m, p, horizon, limits, true)?;
    let d = BigInt::from(m.base().prob_denominator());
    Ok(collected
        .unwrap_or_default()
        .into_iter()
        .map(|(states, num)| {
            let den = d.pow((states.len() - 1) as u32);
            Trajectory {
                states,
                probability: Rational::new(num, den),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Monte-Carlo estimate from `samples` independent runs of `T` steps. The
/// random stream is ChaCha8 seeded with `seed`, so results are reproducible.
pub fn expected_reward_mc<M: MdpModel + ?Sized, P: Policy + ?Sized>(
    m: &M,
    p: &P,
    horizon: usize,
    samples: usize,
    seed: u64,
    limits: &Limits,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::InvalidModel(
            "Monte-Carlo estimation needs at least one sample".into(),
        ));
    }
    let base = m.base();
    let d = base.prob_denominator();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cache = SuccessorCache::new(m, limits);
    let mut rewards: HashMap<BitVector, i64> = HashMap::new();
    let mut reward_of = |s: &BitVector| -> Result<i64> {
        if let Some(&r) = rewards.get(s) {
            return Ok(r);
        }
        let r = base.reward(s)?;
        rewards.insert(s.clone(), r);
        Ok(r)
    };
    let (mut sum, mut sum_sq) = (0f64, 0f64);
    let mut history = Vec::with_capacity(horizon + 1);
    for _ in 0..samples {
        history.clear();
        history.push(base.initial_state().clone());
        let mut total = reward_of(&history[0])?;
        for _ in 0..horizon {
            let a = p.decide_history(&history, horizon)?;
            let row = cache.get(history.last().expect("history is non-empty"), a)?;
            let mut u = rng.random_range(0..d);
            let mut next = None;
            for (s2, num) in row.iter() {
                if u < *num {
                    next = Some(s2.clone());
                    break;
                }
                u -= num;
            }
            let s2 = next.expect("successor numerators sum to D");
            total += reward_of(&s2)?;
            history.push(s2);
        }
        let x = total as f64;
        sum += x;
        sum_sq += x * x;
    }
    let n = samples as f64;
    let mean = sum / n;
    let variance = if samples > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_error: (variance / n).sqrt(),
        samples,
    })
}

/// "Reward greater than k".
pub fn exceeds(report: &RewardReport, k: &Rational) -> bool {
    report.expected_reward > *k
}

/// "Reward greater than or equal to k".
pub fn meets(report: &RewardReport, k: &Rational) -> bool {
    report.expected_reward >= *k
}
