//! Full-literal DNF canonicalization.
//!
//! Every n-input, m-output circuit is equivalent to m disjunctions of
//! full-literal terms, one term per satisfying assignment of that output, so
//! each output needs at most 2ⁿ terms.

use super::{Circuit, CircuitBuilder, Gate, Ref};
use crate::error::{Error, Result};

/// Widest circuit the canonicalizer will enumerate.
pub const MAX_DNF_INPUTS: usize = 24;

/// Rebuilds `c` as one full-literal DNF per output. An output with no
/// satisfying assignment becomes CONST0; with zero inputs a true output is a
/// single empty term, emitted as CONST1.
pub fn canonical_dnf(c: &Circuit) -> Result<Circuit> {
    let rows = c.truth_table(MAX_DNF_INPUTS)?;
    let minterms: Vec<Vec<u64>> = (0..c.num_outputs())
        .map(|k| {
            rows.iter()
                .enumerate()
                .filter(|(_, row)| row[k])
                .map(|(v, _)| v as u64)
                .collect()
        })
        .collect();
    from_minterms(&format!("{}_dnf", c.name()), c.num_inputs(), &minterms)
}

/// Builds the DNF circuit for explicit per-output minterm lists. Minterm `v`
/// assigns input `i` the bit `(v >> (n-1-i)) & 1`, matching the MSB-first
/// input convention.
pub fn from_minterms(name: &str, num_inputs: usize, minterms: &[Vec<u64>]) -> Result<Circuit> {
    if num_inputs > MAX_DNF_INPUTS {
        return Err(Error::TooManyInputs {
            inputs: num_inputs,
            max: MAX_DNF_INPUTS,
        });
    }
    let mut b = CircuitBuilder::new(num_inputs);
    let mut outputs = Vec::with_capacity(minterms.len());
    for terms in minterms {
        if terms.is_empty() {
            outputs.push(b.raw(Gate::Const0));
            continue;
        }
        if num_inputs == 0 {
            outputs.push(b.raw(Gate::Const1));
            continue;
        }
        let mut term_refs = Vec::with_capacity(terms.len());
        for &v in terms {
            let lits: Vec<Ref> = (0..num_inputs)
                .map(|i| {
                    let positive = (v >> (num_inputs - 1 - i)) & 1 == 1;
                    if positive {
                        Ref::Input(i)
                    } else {
                        b.not(Ref::Input(i))
                    }
                })
                .collect();
            term_refs.push(b.and_all(lits));
        }
        outputs.push(b.or_all(term_refs));
    }
    b.build(name, outputs)
}

/// DNF circuit of an arbitrary function given row by row.
pub fn from_truth_table(
    name: &str,
    num_inputs: usize,
    num_outputs: usize,
    mut f: impl FnMut(u64) -> Vec<bool>,
) -> Result<Circuit> {
    if num_inputs > MAX_DNF_INPUTS {
        return Err(Error::TooManyInputs {
            inputs: num_inputs,
            max: MAX_DNF_INPUTS,
        });
    }
    let mut minterms = vec![Vec::new(); num_outputs];
    for v in 0..(1u64 << num_inputs) {
        let row = f(v);
        assert_eq!(
            row.len(),
            num_outputs,
            "truth-table row has the wrong width"
        );
        for (k, &bit) in row.iter().enumerate() {
            if bit {
                minterms[k].push(v);
            }
        }
    }
    from_minterms(name, num_inputs, &minterms)
}

/// Number of terms feeding output `output` of a DNF-shaped circuit: the
/// leaves of its OR tree, with CONST0 counting as the empty disjunction.
pub fn dnf_term_count(c: &Circuit, output: usize) -> usize {
    fn leaves(c: &Circuit, r: Ref) -> usize {
        match r {
            Ref::Input(_) => 1,
            Ref::Gate(g) => match c.gates()[g] {
                Gate::Or(a, b) => leaves(c, a) + leaves(c, b),
                Gate::Const0 => 0,
                _ => 1,
            },
        }
    }
    leaves(c, c.outputs()[output])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::equivalent;

    fn two_input(gate: Gate) -> Circuit {
        Circuit::new("g", 2, vec![gate], vec![Ref::Gate(0)]).unwrap()
    }

    #[test]
    fn const0_is_empty_disjunction() {
        let c = Circuit::new("z", 2, vec![Gate::Const0], vec![Ref::Gate(0)]).unwrap();
        let d = canonical_dnf(&c).unwrap();
        assert_eq!(d.gates(), &[Gate::Const0]);
        assert_eq!(dnf_term_count(&d, 0), 0);
    }

    #[test]
    fn and_has_one_term() {
        let c = two_input(Gate::And(Ref::Input(0), Ref::Input(1)));
        let d = canonical_dnf(&c).unwrap();
        assert_eq!(dnf_term_count(&d, 0), 1);
        assert!(equivalent(&c, &d, 8).unwrap());
    }

    #[test]
    fn xor_gate_count() {
        // Minterms 01 and 10: NOT i0, NOT i1, two 2-literal ANDs, one OR.
        let c = two_input(Gate::Xor(Ref::Input(0), Ref::Input(1)));
        let d = canonical_dnf(&c).unwrap();
        assert_eq!(dnf_term_count(&d, 0), 2);
        assert_eq!(d.size(), 5);
        assert!(equivalent(&c, &d, 8).unwrap());
    }

    #[test]
    fn zero_input_constants() {
        let one = Circuit::new("one", 0, vec![Gate::Const1], vec![Ref::Gate(0)]).unwrap();
        let d = canonical_dnf(&one).unwrap();
        assert_eq!(d.gates(), &[Gate::Const1]);
        assert_eq!(dnf_term_count(&d, 0), 1);
    }

    #[test]
    fn refuses_wide_circuits() {
        let c = Circuit::new("wide", MAX_DNF_INPUTS + 1, vec![], vec![]).unwrap();
        assert!(matches!(
            canonical_dnf(&c),
            Err(Error::TooManyInputs { .. })
        ));
    }
}
