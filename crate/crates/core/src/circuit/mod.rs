//! Boolean circuits over the basis {AND, OR, NOT, XOR, CONST0, CONST1}.
//!
//! A circuit is a DAG: every gate operand refers to a primary input or to a
//! gate with a strictly smaller id, so acyclicity holds by construction and a
//! single forward pass evaluates it. Circuits are immutable once built and
//! evaluation is pure, so they can be shared freely across threads.

pub mod builder;
pub mod dnf;
pub mod netlist;

use std::fmt;

use crate::bits::BitVector;
use crate::error::{Error, Result};

pub use builder::{CircuitBuilder, Word};
pub use dnf::{canonical_dnf, dnf_term_count, from_minterms, from_truth_table};

/// A signal: either a primary input or the output of a gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ref {
    Input(usize),
    Gate(usize),
}

impl fmt::Display for Ref {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ref::Input(i) => write!(f, "i{i}"),
            Ref::Gate(g) => write!(f, "g{g}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    And(Ref, Ref),
    Or(Ref, Ref),
    Xor(Ref, Ref),
    Not(Ref),
    Const0,
    Const1,
}

impl Gate {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Gate::And(..) => "AND",
            Gate::Or(..) => "OR",
            Gate::Xor(..) => "XOR",
            Gate::Not(_) => "NOT",
            Gate::Const0 => "CONST0",
            Gate::Const1 => "CONST1",
        }
    }

    pub fn operands(&self) -> Vec<Ref> {
        match *self {
            Gate::And(a, b) | Gate::Or(a, b) | Gate::Xor(a, b) => vec![a, b],
            Gate::Not(a) => vec![a],
            Gate::Const0 | Gate::Const1 => vec![],
        }
    }
}

// Flattened gate used by the evaluator: operands index into a value buffer
// holding the inputs followed by the gate outputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    And(u32, u32),
    Or(u32, u32),
    Xor(u32, u32),
    Not(u32),
    Const(bool),
}

#[derive(Clone, PartialEq, Eq)]
pub struct Circuit {
    name: String,
    num_inputs: usize,
    gates: Vec<Gate>,
    outputs: Vec<Ref>,
    ops: Vec<Op>,
    output_slots: Vec<u32>,
}

impl fmt::Debug for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Circuit")
            .field("name", &self.name)
            .field("num_inputs", &self.num_inputs)
            .field("gates", &self.gates.len())
            .field("outputs", &self.outputs.len())
            .finish()
    }
}

impl Circuit {
    /// Builds a circuit, checking that every reference is in range and that
    /// gates only refer to earlier gates.
    pub fn new(
        name: impl Into<String>,
        num_inputs: usize,
        gates: Vec<Gate>,
        outputs: Vec<Ref>,
    ) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::InvalidCircuit(format!(
                "circuit name '{name}' must be a single non-empty token"
            )));
        }
        let slot = |r: Ref, limit: usize| -> Result<u32> {
            match r {
                Ref::Input(i) if i < num_inputs => Ok(i as u32),
                Ref::Gate(g) if g < limit => Ok((num_inputs + g) as u32),
                _ => Err(Error::InvalidCircuit(format!(
                    "reference {r} is out of range (inputs {num_inputs}, gates before {limit})"
                ))),
            }
        };
        let mut ops = Vec::with_capacity(gates.len());
        for (id, gate) in gates.iter().enumerate() {
            let op = match *gate {
                Gate::And(a, b) => Op::And(slot(a, id)?, slot(b, id)?),
                Gate::Or(a, b) => Op::Or(slot(a, id)?, slot(b, id)?),
                Gate::Xor(a, b) => Op::Xor(slot(a, id)?, slot(b, id)?),
                Gate::Not(a) => Op::Not(slot(a, id)?),
                Gate::Const0 => Op::Const(false),
                Gate::Const1 => Op::Const(true),
            };
            ops.push(op);
        }
        let output_slots = outputs
            .iter()
            .map(|&r| slot(r, gates.len()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Circuit {
            name,
            num_inputs,
            gates,
            outputs,
            ops,
            output_slots,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn outputs(&self) -> &[Ref] {
        &self.outputs
    }

    /// Gate count. Inputs and output wiring are free.
    pub fn size(&self) -> usize {
        self.gates.len()
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        Circuit::new(
            name,
            self.num_inputs,
            std::mem::take(&mut self.gates),
            self.outputs,
        )
    }

    pub fn eval(&self, input: &BitVector) -> Result<BitVector> {
        self.eval_bits(input.bits()).map(BitVector::new)
    }

    pub fn eval_bits(&self, input: &[bool]) -> Result<Vec<bool>> {
        let mut scratch = Vec::new();
        let mut out = Vec::new();
        self.eval_into(input, &mut scratch, &mut out)?;
        Ok(out)
    }

    /// Evaluates into caller-owned buffers so hot loops avoid reallocating.
    pub fn eval_into(
        &self,
        input: &[bool],
        scratch: &mut Vec<bool>,
        out: &mut Vec<bool>,
    ) -> Result<()> {
        if input.len() != self.num_inputs {
            return Err(Error::WidthMismatch {
                what: format!("input to circuit '{}'", self.name),
                expected: self.num_inputs,
                got: input.len(),
            });
        }
        scratch.clear();
        scratch.extend_from_slice(input);
        for op in &self.ops {
            let v = match *op {
                Op::And(a, b) => scratch[a as usize] & scratch[b as usize],
                Op::Or(a, b) => scratch[a as usize] | scratch[b as usize],
                Op::Xor(a, b) => scratch[a as usize] ^ scratch[b as usize],
                Op::Not(a) => !scratch[a as usize],
                Op::Const(c) => c,
            };
            scratch.push(v);
        }
        out.clear();
        out.extend(self.output_slots.iter().map(|&s| scratch[s as usize]));
        Ok(())
    }

    /// Output vectors for every input assignment, in increasing numeric order
    /// of the (MSB-first) input.
    pub fn truth_table(&self, max_inputs: usize) -> Result<Vec<Vec<bool>>> {
        if self.num_inputs > max_inputs || self.num_inputs >= 64 {
            return Err(Error::TooManyInputs {
                inputs: self.num_inputs,
                max: max_inputs.min(63),
            });
        }
        let mut scratch = Vec::new();
        let mut rows = Vec::with_capacity(1 << self.num_inputs);
        for input in BitVector::all(self.num_inputs) {
            let mut out = Vec::new();
            self.eval_into(input.bits(), &mut scratch, &mut out)?;
            rows.push(out);
        }
        Ok(rows)
    }
}

/// Exhaustive equivalence: true iff both circuits produce identical outputs
/// on all 2ⁿ inputs. Refuses circuits wider than `max_inputs`.
pub fn equivalent(c1: &Circuit, c2: &Circuit, max_inputs: usize) -> Result<bool> {
    if c1.num_inputs() != c2.num_inputs() {
        return Err(Error::WidthMismatch {
            what: "input count of compared circuits".into(),
            expected: c1.num_inputs(),
            got: c2.num_inputs(),
        });
    }
    if c1.num_outputs() != c2.num_outputs() {
        return Err(Error::WidthMismatch {
            what: "output count of compared circuits".into(),
            expected: c1.num_outputs(),
            got: c2.num_outputs(),
        });
    }
    if c1.num_inputs() > max_inputs || c1.num_inputs() >= 64 {
        return Err(Error::TooManyInputs {
            inputs: c1.num_inputs(),
            max: max_inputs,
        });
    }
    let (mut s1, mut s2, mut o1, mut o2) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for input in BitVector::all(c1.num_inputs()) {
        c1.eval_into(input.bits(), &mut s1, &mut o1)?;
        c2.eval_into(input.bits(), &mut s2, &mut o2)?;
        if o1 != o2 {
            return Ok(false);
        }
    }
    Ok(true)
}
