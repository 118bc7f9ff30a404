use super::cnf::{Cnf, Lit};
use super::sequence::{Guard, SeqAction, SeqSignals, SequenceLayout, SequenceMdpSpec};
use super::{length_indexed_policy, literal_fields, ReductionInstance, ReductionKind};
use crate::circuit::{CircuitBuilder, Ref, Word};
use crate::error::{Error, Result};
use crate::mdp::AnyMdp;
use crate::rational::ratio;

/// Policy-evaluation instance for MAJSAT.
///
/// States are sequences of at most `n` literals. Action `a_i` appends `x_i` or
/// `¬x_i` with probability 1/2 each. A sequence of length `n` mentioning every
/// variable earns 1 when the interpretation it spells out (`x_i` true iff the
/// literal `x_i` occurs) satisfies `Q`. The emitted policy runs `a_1 … a_n` in
/// order, so its expected reward over horizon `n` is the fraction of models of
/// `Q`; the MAJSAT question is whether that exceeds `k = 1/2`.
pub fn majsat_to_eval(q: &Cnf) -> Result<ReductionInstance> {
    let n = q.num_vars();
    if n == 0 {
        return Err(Error::Reduction(
            "the formula needs at least one variable".into(),
        ));
    }
    let layout = SequenceLayout::new(2 * n, n)?;
    let actions = (0..n)
        .map(|i| SeqAction {
            name: format!("a{}", i + 1),
            guard: Guard::Always,
            outcomes: vec![Lit::pos(i).code(), Lit::neg(i).code()],
        })
        .collect();
    let reward = |b: &mut CircuitBuilder, s: &SeqSignals| -> Word {
        let mut shape = vec![b.eq_const(&s.len, n as u64)];
        for i in 0..n {
            let mentions: Vec<Ref> = s
                .slots
                .iter()
                .map(|slot| {
                    let (var, _) = literal_fields(slot);
                    b.eq_const(var, i as u64)
                })
                .collect();
            shape.push(b.or_all(mentions));
        }
        let values: Vec<Ref> = (0..n)
            .map(|i| {
                let hits: Vec<Ref> = s
                    .slots
                    .iter()
                    .map(|slot| b.eq_const(slot, Lit::pos(i).code()))
                    .collect();
                b.or_all(hits)
            })
            .collect();
        shape.push(q.build(b, &values));
        let bit = b.and_all(shape);
        vec![b.constant(false), bit]
    };
    let spec = SequenceMdpSpec {
        name: "majsat".into(),
        layout: layout.clone(),
        actions,
        reward: &reward,
    };
    let mdp = spec.build("majsat_r")?;
    let policy = length_indexed_policy(&layout, n, "sequential_policy", |len| {
        (len < n).then_some(len)
    })?;

    let mut inst = ReductionInstance::new(
        ReductionKind::Majsat,
        AnyMdp::Bounded(mdp),
        n,
        "expected reward of the sequential policy = model count / 2^n; MAJSAT iff it exceeds 1/2",
    );
    inst.policy = Some(policy);
    inst.reward_bound = Some(ratio(1, 2));
    inst.layout = Some(layout);
    inst.notes.push(format!("horizon T = n = {n}"));
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::expected_reward_exact;
    use crate::limits::Limits;
    use crate::mdp::{expand, MdpModel};
    use crate::policy::Policy;
    use crate::rational::{int, ratio};

    #[test]
    fn tautology_gives_reward_one() {
        let inst = majsat_to_eval(&Cnf::new(3, vec![]).unwrap()).unwrap();
        let r = expected_reward_exact(
            &inst.mdp,
            inst.policy.as_ref().unwrap(),
            inst.horizon,
            &Limits::default(),
        )
        .unwrap();
        assert_eq!(r.expected_reward, int(1));
    }

    #[test]
    fn conjunction_gives_one_quarter() {
        let q = Cnf::from_ints(2, &[&[1], &[2]]).unwrap();
        let inst = majsat_to_eval(&q).unwrap();
        let r = expected_reward_exact(
            &inst.mdp,
            inst.policy.as_ref().unwrap(),
            2,
            &Limits::default(),
        )
        .unwrap();
        assert_eq!(r.expected_reward, ratio(1, 4));
    }

    #[test]
    fn reachable_states_are_short_literal_sequences() {
        let q = Cnf::from_ints(2, &[&[1, 2]]).unwrap();
        let inst = majsat_to_eval(&q).unwrap();
        let layout = inst.layout.as_ref().unwrap();
        let e = expand(
            &inst.mdp,
            inst.mdp.base().initial_state(),
            2,
            &Limits::default(),
        )
        .unwrap();
        // ε; x1, ~x1, x2, ~x2; and all ordered pairs of literals.
        assert_eq!(e.num_states(), 1 + 4 + 16);
        for s in e.states() {
            let seq = layout.decode(s).unwrap();
            assert!(seq.len() <= 2 && seq.iter().all(|&c| c < 4));
        }
        let p = inst.policy.as_ref().unwrap();
        let mut hist = vec![layout.encode(&[]).unwrap()];
        assert_eq!(p.decide_history(&hist, 2).unwrap(), 0);
        hist.push(layout.encode(&[1]).unwrap());
        assert_eq!(p.decide_history(&hist, 2).unwrap(), 1);
    }
}
