//! Incremental circuit construction with word-level helpers.
//!
//! Constants are folded through AND/OR/XOR/NOT and NOT gates are shared, so
//! generated circuits stay small without a separate optimization pass.

use std::collections::HashMap;

use super::{Circuit, Gate, Ref};
use crate::error::Result;

/// A multi-bit signal, most significant bit first.
pub type Word = Vec<Ref>;

#[derive(Debug, Clone)]
pub struct CircuitBuilder {
    num_inputs: usize,
    gates: Vec<Gate>,
    const0: Option<Ref>,
    const1: Option<Ref>,
    not_cache: HashMap<Ref, Ref>,
}

impl CircuitBuilder {
    pub fn new(num_inputs: usize) -> Self {
        CircuitBuilder {
            num_inputs,
            gates: Vec::new(),
            const0: None,
            const1: None,
            not_cache: HashMap::new(),
        }
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn input(&self, index: usize) -> Ref {
        assert!(index < self.num_inputs, "input {index} out of range");
        Ref::Input(index)
    }

    /// `width` consecutive inputs starting at `start`, as a word.
    pub fn input_word(&self, start: usize, width: usize) -> Word {
        (start..start + width).map(|i| self.input(i)).collect()
    }

    fn push(&mut self, gate: Gate) -> Ref {
        self.gates.push(gate);
        Ref::Gate(self.gates.len() - 1)
    }

    fn known(&self, r: Ref) -> Option<bool> {
        if Some(r) == self.const0 {
            Some(false)
        } else if Some(r) == self.const1 {
            Some(true)
        } else {
            None
        }
    }

    pub fn constant(&mut self, value: bool) -> Ref {
        let slot = if value { &self.const1 } else { &self.const0 };
        if let Some(r) = *slot {
            return r;
        }
        let r = self.push(if value { Gate::Const1 } else { Gate::Const0 });
        if value {
            self.const1 = Some(r);
        } else {
            self.const0 = Some(r);
        }
        r
    }

    pub fn not(&mut self, a: Ref) -> Ref {
        if let Some(v) = self.known(a) {
            return self.constant(!v);
        }
        if let Some(&r) = self.not_cache.get(&a) {
            return r;
        }
        let r = self.push(Gate::Not(a));
        self.not_cache.insert(a, r);
        self.not_cache.insert(r, a);
        r
    }

    pub fn and(&mut self, a: Ref, b: Ref) -> Ref {
        match (self.known(a), self.known(b)) {
            (Some(false), _) | (_, Some(false)) => self.constant(false),
            (Some(true), _) => b,
            (_, Some(true)) => a,
            _ if a == b => a,
            _ => self.push(Gate::And(a, b)),
        }
    }

    pub fn or(&mut self, a: Ref, b: Ref) -> Ref {
        match (self.known(a), self.known(b)) {
            (Some(true), _) | (_, Some(true)) => self.constant(true),
            (Some(false), _) => b,
            (_, Some(false)) => a,
            _ if a == b => a,
            _ => self.push(Gate::Or(a, b)),
        }
    }

    pub fn xor(&mut self, a: Ref, b: Ref) -> Ref {
        match (self.known(a), self.known(b)) {
            (Some(x), Some(y)) => self.constant(x ^ y),
            (Some(false), _) => b,
            (_, Some(false)) => a,
            (Some(true), _) => self.not(b),
            (_, Some(true)) => self.not(a),
            _ if a == b => self.constant(false),
            _ => self.push(Gate::Xor(a, b)),
        }
    }

    pub fn xnor(&mut self, a: Ref, b: Ref) -> Ref {
        let x = self.xor(a, b);
        self.not(x)
    }

    /// Raw gates without folding; used where the exact gate shape matters.
    pub fn raw(&mut self, gate: Gate) -> Ref {
        self.push(gate)
    }

    /// Left-leaning AND ladder. The empty conjunction is CONST1.
    pub fn and_all(&mut self, refs: impl IntoIterator<Item = Ref>) -> Ref {
        let mut acc: Option<Ref> = None;
        for r in refs {
            acc = Some(match acc {
                None => r,
                Some(a) => self.and(a, r),
            });
        }
        acc.unwrap_or_else(|| self.constant(true))
    }

    /// Left-leaning OR ladder. The empty disjunction is CONST0.
    pub fn or_all(&mut self, refs: impl IntoIterator<Item = Ref>) -> Ref {
        let mut acc: Option<Ref> = None;
        for r in refs {
            acc = Some(match acc {
                None => r,
                Some(a) => self.or(a, r),
            });
        }
        acc.unwrap_or_else(|| self.constant(false))
    }

    pub fn mux(&mut self, select: Ref, when_true: Ref, when_false: Ref) -> Ref {
        let t = self.and(select, when_true);
        let ns = self.not(select);
        let f = self.and(ns, when_false);
        self.or(t, f)
    }

    pub fn mux_word(&mut self, select: Ref, when_true: &[Ref], when_false: &[Ref]) -> Word {
        assert_eq!(when_true.len(), when_false.len());
        when_true
            .iter()
            .zip(when_false)
            .map(|(&t, &f)| self.mux(select, t, f))
            .collect()
    }

    pub fn const_word(&mut self, value: u64, width: usize) -> Word {
        (0..width)
            .map(|k| {
                let shift = width - 1 - k;
                let bit = shift < 64 && (value >> shift) & 1 == 1;
                self.constant(bit)
            })
            .collect()
    }

    pub fn eq_words(&mut self, a: &[Ref], b: &[Ref]) -> Ref {
        assert_eq!(a.len(), b.len(), "compared words differ in width");
        let bits: Vec<Ref> = a.iter().zip(b).map(|(&x, &y)| self.xnor(x, y)).collect();
        self.and_all(bits)
    }

    /// `word == value`; false whenever `value` does not fit in the word.
    pub fn eq_const(&mut self, word: &[Ref], value: u64) -> Ref {
        let width = word.len();
        if width < 64 && value >> width != 0 {
            return self.constant(false);
        }
        let lits: Vec<Ref> = word
            .iter()
            .enumerate()
            .map(|(k, &w)| {
                let shift = width - 1 - k;
                let bit = shift < 64 && (value >> shift) & 1 == 1;
                if bit {
                    w
                } else {
                    self.not(w)
                }
            })
            .collect();
        self.and_all(lits)
    }

    /// Unsigned `word >= value`.
    pub fn ge_const(&mut self, word: &[Ref], value: u64) -> Ref {
        let width = word.len();
        if width < 64 && value >> width != 0 {
            return self.constant(false);
        }
        // Scan from the least significant bit: g holds "suffix >= suffix of value".
        let mut g = self.constant(true);
        for (k, &w) in word.iter().enumerate().rev() {
            let shift = width - 1 - k;
            let bit = shift < 64 && (value >> shift) & 1 == 1;
            g = if bit { self.and(w, g) } else { self.or(w, g) };
        }
        g
    }

    pub fn lt_const(&mut self, word: &[Ref], value: u64) -> Ref {
        let ge = self.ge_const(word, value);
        self.not(ge)
    }

    /// `word + 1`, dropping the final carry.
    pub fn increment(&mut self, word: &[Ref]) -> Word {
        let mut carry = self.constant(true);
        let mut out = vec![carry; word.len()];
        for (k, &w) in word.iter().enumerate().rev() {
            out[k] = self.xor(w, carry);
            carry = self.and(w, carry);
        }
        out
    }

    /// One-hot selection of constant words: each output bit is the OR of the
    /// conditions whose constant has that bit set. Conditions are expected to
    /// be mutually exclusive; when none holds the result is zero.
    pub fn select_const(&mut self, cases: &[(Ref, u64)], width: usize) -> Word {
        (0..width)
            .map(|k| {
                let shift = width - 1 - k;
                let conds: Vec<Ref> = cases
                    .iter()
                    .filter(|(_, v)| shift < 64 && (v >> shift) & 1 == 1)
                    .map(|&(c, _)| c)
                    .collect();
                self.or_all(conds)
            })
            .collect()
    }

    /// One-hot selection of arbitrary words.
    pub fn select_words(&mut self, cases: &[(Ref, Word)], width: usize) -> Word {
        (0..width)
            .map(|k| {
                let terms: Vec<Ref> = cases
                    .iter()
                    .map(|(cond, w)| self.and(*cond, w[k]))
                    .collect();
                self.or_all(terms)
            })
            .collect()
    }

    /// Inlines `circuit` with its inputs wired to `inputs`; returns the refs of
    /// its outputs inside this builder.
    pub fn instantiate(&mut self, circuit: &Circuit, inputs: &[Ref]) -> Word {
        assert_eq!(
            inputs.len(),
            circuit.num_inputs(),
            "instantiation width mismatch"
        );
        let mut map: Vec<Ref> = Vec::with_capacity(circuit.size());
        let resolve = |r: Ref, map: &[Ref]| match r {
            Ref::Input(i) => inputs[i],
            Ref::Gate(g) => map[g],
        };
        for gate in circuit.gates() {
            let r = match *gate {
                Gate::And(a, b) => {
                    let (a, b) = (resolve(a, &map), resolve(b, &map));
                    self.and(a, b)
                }
                Gate::Or(a, b) => {
                    let (a, b) = (resolve(a, &map), resolve(b, &map));
                    self.or(a, b)
                }
                Gate::Xor(a, b) => {
                    let (a, b) = (resolve(a, &map), resolve(b, &map));
                    self.xor(a, b)
                }
                Gate::Not(a) => {
                    let a = resolve(a, &map);
                    self.not(a)
                }
                Gate::Const0 => self.constant(false),
                Gate::Const1 => self.constant(true),
            };
            map.push(r);
        }
        circuit
            .outputs()
            .iter()
            .map(|&r| resolve(r, &map))
            .collect()
    }

    pub fn build(self, name: impl Into<String>, outputs: Vec<Ref>) -> Result<Circuit> {
        Circuit::new(name, self.num_inputs, self.gates, outputs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitVector;

    fn eval_word(c: &Circuit, v: u64) -> u64 {
        c.eval(&BitVector::from_u64(v, c.num_inputs()))
            .unwrap()
            .to_u64()
    }

    #[test]
    fn comparators_match_integer_semantics() {
        for value in 0..10u64 {
            let mut b = CircuitBuilder::new(3);
            let w = b.input_word(0, 3);
            let eq = b.eq_const(&w, value);
            let ge = b.ge_const(&w, value);
            let lt = b.lt_const(&w, value);
            let c = b.build("cmp", vec![eq, ge, lt]).unwrap();
            for x in 0..8u64 {
                let out = c.eval(&BitVector::from_u64(x, 3)).unwrap();
                assert_eq!(
                    out.bits(),
                    &[x == value, x >= value, x < value],
                    "x={x} v={value}"
                );
            }
        }
    }

    #[test]
    fn increment_wraps() {
        let mut b = CircuitBuilder::new(3);
        let w = b.input_word(0, 3);
        let inc = b.increment(&w);
        let c = b.build("inc", inc).unwrap();
        for x in 0..8 {
            assert_eq!(eval_word(&c, x), (x + 1) % 8);
        }
    }

    #[test]
    fn select_const_and_words() {
        let mut b = CircuitBuilder::new(2);
        let w = b.input_word(0, 2);
        let cases: Vec<(Ref, u64)> = (0..4).map(|v| (b.eq_const(&w, v), (v * 5) % 8)).collect();
        let out = b.select_const(&cases, 3);
        let c = b.build("sel", out).unwrap();
        for x in 0..4 {
            assert_eq!(eval_word(&c, x), (x * 5) % 8);
        }

        let mut b = CircuitBuilder::new(3);
        let sel = b.input(0);
        let nsel = b.not(sel);
        let word: Word = vec![b.input(1), b.input(2)];
        let swapped: Word = vec![b.input(2), b.input(1)];
        let out = b.select_words(&[(sel, word), (nsel, swapped)], 2);
        let c = b.build("selw", out).unwrap();
        assert_eq!(eval_word(&c, 0b101), 0b01);
        assert_eq!(eval_word(&c, 0b001), 0b10);
    }

    #[test]
    fn constant_folding_and_not_sharing() {
        let mut b = CircuitBuilder::new(1);
        let x = b.input(0);
        let one = b.constant(true);
        assert_eq!(b.and(x, one), x);
        let n1 = b.not(x);
        let n2 = b.not(x);
        assert_eq!(n1, n2);
        assert_eq!(b.not(n1), x);
        assert_eq!(b.and_all([]), one);
        assert_eq!(b.gate_count(), 2);
    }

    #[test]
    fn instantiate_reproduces_semantics() {
        let mut inner = CircuitBuilder::new(2);
        let (a, bb) = (inner.input(0), inner.input(1));
        let x = inner.xor(a, bb);
        let inner = inner.build("xor", vec![x]).unwrap();

        let mut outer = CircuitBuilder::new(2);
        let ins = vec![outer.input(1), outer.input(0)];
        let out = outer.instantiate(&inner, &ins);
        let c = outer.build("outer", out).unwrap();
        for v in 0..4 {
            assert_eq!(eval_word(&c, v), ((v >> 1) ^ v) & 1);
        }
    }
}
