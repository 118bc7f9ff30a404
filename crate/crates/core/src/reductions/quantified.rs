use super::cnf::{Cnf, Lit};
use super::sequence::{Guard, SeqAction, SeqSignals, SequenceLayout, SequenceMdpSpec};
use super::{length_indexed_policy, literal_fields, ReductionInstance, ReductionKind};
use crate::circuit::{CircuitBuilder, Ref, Word};
use crate::error::{Error, Result};
use crate::mdp::AnyMdp;
use crate::rational::{int, ratio};

/// Threshold emitted with an E-MAJSAT instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmajsatThreshold {
    /// `k = 1/2`: at least half of the extensions satisfy `Q`.
    #[default]
    Half,
    /// `k = 1`, the literal reading of "a policy of reward 1".
    One,
}

/// The MDP shared by the E-MAJSAT and ∀∃ constructions, for `Q` over
/// `X ∪ Y` with `X = {x_1 … x_n}` the first `n` variables and `Y` the rest.
///
/// Actions, in order: `a_1 … a_n` append `y_i` or `¬y_i` at random,
/// `b_1 … b_n` append `x_i`, `c_1 … c_n` append `¬x_i`. A sequence earns 1
/// when it lists one literal per variable in the order `x_1 … x_n, y_1 … y_n`
/// and that interpretation satisfies `Q`.
fn choice_mdp(q: &Cnf, name: &str) -> Result<(AnyMdp, SequenceLayout, usize)> {
    let total = q.num_vars();
    if total == 0 || !total.is_multiple_of(2) {
        return Err(Error::Reduction(format!(
            "need |X| = |Y| >= 1, but the formula has {total} variables"
        )));
    }
    let n = total / 2;
    let layout = SequenceLayout::new(2 * total, total)?;
    let mut actions = Vec::with_capacity(3 * n);
    for i in 0..n {
        actions.push(SeqAction {
            name: format!("a{}", i + 1),
            guard: Guard::Always,
            outcomes: vec![Lit::pos(n + i).code(), Lit::neg(n + i).code()],
        });
    }
    for i in 0..n {
        actions.push(SeqAction {
            name: format!("b{}", i + 1),
            guard: Guard::Always,
            outcomes: vec![Lit::pos(i).code()],
        });
    }
    for i in 0..n {
        actions.push(SeqAction {
            name: format!("c{}", i + 1),
            guard: Guard::Always,
            outcomes: vec![Lit::neg(i).code()],
        });
    }
    let reward = |b: &mut CircuitBuilder, s: &SeqSignals| -> Word {
        let mut shape = vec![b.eq_const(&s.len, total as u64)];
        let mut values = Vec::with_capacity(total);
        for (j, slot) in s.slots.iter().enumerate() {
            let (var, sign) = literal_fields(slot);
            shape.push(b.eq_const(var, j as u64));
            values.push(b.not(sign));
        }
        let values: Vec<Ref> = values;
        shape.push(q.build(b, &values));
        let bit = b.and_all(shape);
        vec![b.constant(false), bit]
    };
    let spec = SequenceMdpSpec {
        name: name.into(),
        layout: layout.clone(),
        actions,
        reward: &reward,
    };
    let mdp = spec.build(&format!("{name}_r"))?;
    Ok((AnyMdp::Bounded(mdp), layout, n))
}

/// Bounded-policy instance for E-MAJSAT. The size bound `z` is the gate count
/// of the emitted reference policy, which sets every `x_i` true (`b_i`) and
/// then draws the `y_i`.
pub fn emajsat_to_bounded_policy(
    q: &Cnf,
    threshold: EmajsatThreshold,
) -> Result<ReductionInstance> {
    let (mdp, layout, n) = choice_mdp(q, "emajsat")?;
    let reference = length_indexed_policy(&layout, 3 * n, "reference_policy", |len| {
        (len < 2 * n).then(|| if len < n { n + len } else { len - n })
    })?;
    let mut inst = ReductionInstance::new(
        ReductionKind::Emajsat,
        mdp,
        2 * n,
        "a policy within z gates reaches reward >= k iff some X-assignment has at least half of its Y-extensions satisfying Q",
    );
    inst.size_bound = Some(reference.circuit().size());
    inst.reward_bound = Some(match threshold {
        EmajsatThreshold::Half => ratio(1, 2),
        EmajsatThreshold::One => int(1),
    });
    inst.notes.push(format!(
        "z = gate count of the reference policy = {}",
        reference.circuit().size()
    ));
    if threshold == EmajsatThreshold::One {
        inst.notes.push("threshold k = 1 (literal reading)".into());
    }
    inst.policy = Some(reference);
    inst.layout = Some(layout);
    Ok(inst)
}

/// Value-function instance for the ∀∃ problem: a consistent value function
/// with `E(ε, 2n) = 1` exists iff some X-assignment has all Y-extensions
/// satisfying `Q`.
pub fn forallexists_to_valuefn(q: &Cnf) -> Result<ReductionInstance> {
    let (mdp, layout, n) = choice_mdp(q, "forall")?;
    let mut inst = ReductionInstance::new(
        ReductionKind::ForallExists,
        mdp,
        2 * n,
        "reward 1 is reachable iff some X-assignment has every Y-extension satisfying Q",
    );
    inst.reward_bound = Some(int(1));
    inst.layout = Some(layout);
    Ok(inst)
}
