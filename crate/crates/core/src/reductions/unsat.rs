use super::cnf::Cnf;
use super::{ReductionInstance, ReductionKind};
use crate::bits::{index_width, BitVector};
use crate::circuit::CircuitBuilder;
use crate::error::{Error, Result};
use crate::mdp::{AnyMdp, BoundedActionMdp, SuccinctMdp};
use crate::value::ValueCircuit;

/// Consistency instance for UNSAT: the state is an interpretation of `Q`'s
/// variables, the single action flips one variable chosen uniformly
/// (`D = n`), and models of `Q` earn 1. The all-zero value function is
/// consistent iff no state earns reward, i.e. iff `Q` is unsatisfiable.
pub fn unsat_to_consistency(q: &Cnf) -> Result<ReductionInstance> {
    let n = q.num_vars();
    if n == 0 {
        return Err(Error::Reduction(
            "the formula needs at least one variable".into(),
        ));
    }
    let horizon = 1;

    let mut b = CircuitBuilder::new(2 * n + 1);
    let s = b.input_word(0, n);
    let s2 = b.input_word(n, n);
    let diff: Vec<_> = s.iter().zip(&s2).map(|(&x, &y)| b.xor(x, y)).collect();
    // Exactly one differing bit: for each position, it alone differs.
    let mut one_hot = Vec::with_capacity(n);
    for k in 0..n {
        let mut parts = vec![diff[k]];
        for (j, &d) in diff.iter().enumerate() {
            if j != k {
                parts.push(b.not(d));
            }
        }
        one_hot.push(b.and_all(parts));
    }
    let flip = b.or_all(one_hot);
    let width = index_width(n + 1);
    let out = b.select_const(&[(flip, 1)], width);
    let t = b.build("flip_t", out)?;

    let mut rb = CircuitBuilder::new(n);
    let vars = rb.input_word(0, n);
    let model = q.build(&mut rb, &vars);
    let zero = rb.constant(false);
    let r = rb.build("models_r", vec![zero, model])?;

    let names = (1..=n).map(|i| format!("x{i}")).collect();
    let base = SuccinctMdp::new(
        "unsatcons",
        names,
        BitVector::zeros(n),
        vec!["flip".into()],
        t,
        r,
        n as u64,
    )?;

    let sw = index_width(n);
    let mut sb = CircuitBuilder::new(n + sw);
    let state = sb.input_word(0, n);
    let slot = sb.input_word(n, sw);
    let valid = sb.lt_const(&slot, n as u64);
    let mut next = Vec::with_capacity(n);
    for (k, &bit) in state.iter().enumerate() {
        let here = sb.eq_const(&slot, k as u64);
        next.push(sb.xor(bit, here));
    }
    let mut outputs = vec![valid];
    outputs.extend(next);
    let succ = sb.build("flip_succ", outputs)?;
    let mdp = BoundedActionMdp::new(base, vec![succ], n)?;

    let mut inst = ReductionInstance::new(
        ReductionKind::UnsatConsistency,
        AnyMdp::Bounded(mdp),
        horizon,
        "E = 0 is consistent iff Q has no model (brute-force model count)",
    );
    inst.value = Some(ValueCircuit::zero(n, horizon, 2)?);
    inst.notes.push(format!("horizon T = {horizon}"));
    Ok(inst)
}
