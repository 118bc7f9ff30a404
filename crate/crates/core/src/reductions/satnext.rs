use super::cnf::{Cnf, Lit};
use super::sequence::{Guard, SeqAction, SeqSignals, SequenceLayout, SequenceMdpSpec};
use super::{literal_fields, ReductionInstance, ReductionKind};
use crate::circuit::{CircuitBuilder, Ref, Word};
use crate::error::{Error, Result};
use crate::mdp::AnyMdp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatNextMode {
    /// Clause block of `3·|Π|` literals.
    Compact,
    /// Clause block of `3·(2n)³` literals, `Π` repeated to fill it.
    Faithful,
}

/// Next-action instance for satisfiability.
///
/// Alphabet: the `2n` literals (`x_i ↦ 2i`, `¬x_i ↦ 2i + 1`), then `sat = 2n`
/// and `unsat = 2n + 1`. Actions, in order: `A` appends a uniformly random
/// literal while no marker is present; `S` and `U` append their marker; `a_i`
/// appends `x_i` or `¬x_i` with probability 1/2 when exactly one marker is
/// present. A full-length sequence `C · marker · l_1 … l_n` with `|C| = 3m`
/// literals and `l_i ∈ {x_i, ¬x_i}` earns 2 after `unsat`, and after `sat`
/// earns `2^{n+1}` when `l_1 … l_n` satisfies the clauses read from `C`, 1
/// otherwise. Every other state earns 0.
///
/// The horizon equals the maximum length `3m + n + 1`; the query state holds
/// the clause block of `Π`, leaving `n + 1` steps, and the query action is `S`.
pub fn sat_to_next_action(pi: &Cnf, mode: SatNextMode) -> Result<ReductionInstance> {
    pi.check_arity(3)?;
    let n = pi.num_vars();
    if n == 0 {
        return Err(Error::Reduction(
            "the formula needs at least one variable".into(),
        ));
    }
    let m = match mode {
        SatNextMode::Compact => pi.clauses().len(),
        SatNextMode::Faithful => {
            let m = (2 * n).pow(3);
            if pi.is_empty() {
                return Err(Error::Reduction(
                    "faithful mode needs at least one clause to repeat".into(),
                ));
            }
            if pi.clauses().len() > m {
                return Err(Error::Reduction(format!("more than (2n)^3 = {m} clauses")));
            }
            m
        }
    };
    let block: Vec<u64> = pi
        .clauses()
        .iter()
        .cycle()
        .take(m)
        .flat_map(|c| c.iter().map(|l| l.code()))
        .collect();

    let lits = 2 * n as u64;
    let (sat, unsat) = (lits, lits + 1);
    let max_len = 3 * m + n + 1;
    let layout = SequenceLayout::new(2 * n + 2, max_len)?;

    let mut actions = vec![
        SeqAction {
            name: "A".into(),
            guard: Guard::LacksAll(vec![sat, unsat]),
            outcomes: (0..lits).collect(),
        },
        SeqAction {
            name: "S".into(),
            guard: Guard::Always,
            outcomes: vec![sat],
        },
        SeqAction {
            name: "U".into(),
            guard: Guard::Always,
            outcomes: vec![unsat],
        },
    ];
    for i in 0..n {
        actions.push(SeqAction {
            name: format!("a{}", i + 1),
            guard: Guard::ContainsExactlyOne(vec![sat, unsat]),
            outcomes: vec![Lit::pos(i).code(), Lit::neg(i).code()],
        });
    }

    let reward_width = n + 3;
    let reward = move |b: &mut CircuitBuilder, s: &SeqSignals| -> Word {
        let mut shape = vec![b.eq_const(&s.len, max_len as u64)];
        for slot in &s.slots[..3 * m] {
            shape.push(b.lt_const(slot, lits));
        }
        let marker = &s.slots[3 * m];
        let is_sat = b.eq_const(marker, sat);
        let is_unsat = b.eq_const(marker, unsat);
        // Assignment part: slot 3m+1+i must be x_i or ¬x_i.
        let mut negated: Vec<Ref> = Vec::with_capacity(n);
        for i in 0..n {
            let (var, sign) = literal_fields(&s.slots[3 * m + 1 + i]);
            shape.push(b.eq_const(var, i as u64));
            negated.push(sign);
        }
        let well_formed = b.and_all(shape);
        let mut clauses = Vec::with_capacity(m);
        for k in 0..m {
            let mut any = Vec::with_capacity(3);
            for t in 0..3 {
                let (var, sign) = literal_fields(&s.slots[3 * k + t]);
                for (i, &neg_i) in negated.iter().enumerate() {
                    let is_var = b.eq_const(var, i as u64);
                    let agrees = b.xnor(sign, neg_i);
                    any.push(b.and(is_var, agrees));
                }
            }
            clauses.push(b.or_all(any));
        }
        let satisfied = b.and_all(clauses);
        let unsat_case = b.and(well_formed, is_unsat);
        let sat_case = b.and(well_formed, is_sat);
        let hit = b.and(sat_case, satisfied);
        let not_satisfied = b.not(satisfied);
        let miss = b.and(sat_case, not_satisfied);
        b.select_const(
            &[(unsat_case, 2), (miss, 1), (hit, 1 << (n + 1))],
            reward_width,
        )
    };
    let spec = SequenceMdpSpec {
        name: "satnext".into(),
        layout: layout.clone(),
        actions,
        reward: &reward,
    };
    let mdp = spec.build("satnext_r")?;

    let mut inst = ReductionInstance::new(
        ReductionKind::SatNext,
        AnyMdp::Bounded(mdp),
        max_len,
        "S is the best next action at the query state iff the formula is satisfiable (brute-force SAT)",
    );
    inst.state = Some(layout.encode(&block)?);
    inst.action = Some(1);
    inst.layout = Some(layout);
    inst.notes.push(match mode {
        SatNextMode::Compact => format!(
            "compact mode: clause block of 3*|clauses| = {} literals instead of 3*(2n)^3",
            3 * m
        ),
        SatNextMode::Faithful => format!(
            "faithful mode: clause block of 3*(2n)^3 = {} literals",
            3 * m
        ),
    });
    inst.notes.push(format!(
        "horizon = maximum sequence length 3m + n + 1 = {max_len}"
    ));
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limits::Limits;
    use crate::mdp::{validate, MdpModel, ValidateOptions};
    use crate::rational::ratio;

    fn x1_or_x1_or_x1() -> Cnf {
        Cnf::from_ints(1, &[&[1, 1, 1]]).unwrap()
    }

    #[test]
    fn action_a_appends_each_literal_with_probability_one_over_2n() {
        let q = Cnf::from_ints(2, &[&[1, -2, 2]]).unwrap();
        let inst = sat_to_next_action(&q, SatNextMode::Compact).unwrap();
        let layout = inst.layout.as_ref().unwrap();
        let succ = inst
            .mdp
            .successors(&layout.encode(&[]).unwrap(), 0, &Limits::default())
            .unwrap();
        assert_eq!(succ.len(), 4);
        for (s2, p) in succ {
            assert_eq!(p, ratio(1, 4));
            assert_eq!(layout.len_of(&s2), 1);
        }
    }

    #[test]
    fn rewards_follow_the_sequence_shape() {
        let inst = sat_to_next_action(&x1_or_x1_or_x1(), SatNextMode::Compact).unwrap();
        let layout = inst.layout.as_ref().unwrap();
        let base = inst.mdp.as_bounded().unwrap().base();
        let r = |seq: &[u64]| base.reward(&layout.encode(seq).unwrap()).unwrap();
        // x1 = 0, ~x1 = 1, sat = 2, unsat = 3.
        assert_eq!(r(&[0, 0, 0, 3, 0]), 2);
        assert_eq!(r(&[0, 0, 0, 3, 1]), 2);
        assert_eq!(r(&[0, 0, 0, 2, 0]), 4);
        assert_eq!(r(&[0, 0, 0, 2, 1]), 1);
        assert_eq!(r(&[0, 0, 0, 2]), 0);
        assert_eq!(r(&[0, 0, 2, 2, 0]), 0);
        assert_eq!(r(&[]), 0);
    }

    #[test]
    fn faithful_layout_and_validation() {
        let inst = sat_to_next_action(&x1_or_x1_or_x1(), SatNextMode::Faithful).unwrap();
        assert_eq!(inst.horizon, 3 * 8 + 1 + 1);
        let layout = inst.layout.as_ref().unwrap();
        let seq = layout.decode(inst.state.as_ref().unwrap()).unwrap();
        assert_eq!(seq, vec![0; 24]);
        assert!(sat_to_next_action(&Cnf::new(1, vec![]).unwrap(), SatNextMode::Faithful).is_err());

        let compact =
            sat_to_next_action(&Cnf::new(1, vec![]).unwrap(), SatNextMode::Compact).unwrap();
        let report = validate(&compact.mdp, &ValidateOptions::default()).unwrap();
        assert!(
            report.exhaustive && report.is_ok(),
            "{:?}",
            report.violations.first()
        );
        let sampled = validate(&inst.mdp, &ValidateOptions::default()).unwrap();
        assert!(sampled.is_ok(), "{:?}", sampled.violations.first());
    }

    #[test]
    fn clause_arity_is_enforced() {
        let q = Cnf::from_ints(2, &[&[1, 2]]).unwrap();
        assert!(matches!(
            sat_to_next_action(&q, SatNextMode::Compact),
            Err(Error::Reduction(_))
        ));
    }
}
