//! MDPs whose states are bounded sequences over a finite alphabet.
//!
//! A state stores the sequence length in binary followed by `max_len` element
//! slots; slots past the length are zero in every state reachable from the
//! empty sequence. Each action carries a guard and a set of elements. When the
//! guard holds and the sequence is not full, the action appends one element
//! of the set chosen uniformly; otherwise it leaves the state unchanged.

use crate::bits::{ceil_log2, index_width, BitVector};
use crate::circuit::{Circuit, CircuitBuilder, Ref, Word};
use crate::error::{Error, Result};
use crate::mdp::{BoundedActionMdp, SuccinctMdp};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceLayout {
    alphabet_size: usize,
    max_len: usize,
    elem_width: usize,
    len_width: usize,
}

impl SequenceLayout {
    pub fn new(alphabet_size: usize, max_len: usize) -> Result<Self> {
        if alphabet_size == 0 {
            return Err(Error::Reduction("sequence alphabet is empty".into()));
        }
        Ok(SequenceLayout {
            alphabet_size,
            max_len,
            elem_width: ceil_log2(alphabet_size as u64).max(1),
            len_width: index_width(max_len + 1),
        })
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn elem_width(&self) -> usize {
        self.elem_width
    }

    pub fn len_width(&self) -> usize {
        self.len_width
    }

    pub fn num_vars(&self) -> usize {
        self.len_width + self.max_len * self.elem_width
    }

    /// Offset of slot `j`'s first bit.
    pub fn slot_offset(&self, j: usize) -> usize {
        self.len_width + j * self.elem_width
    }

    /// `q0 …` for the length bits, then `v<j>_<b>` for bit `b` of slot `j`.
    pub fn var_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.len_width).map(|i| format!("q{i}")).collect();
        for j in 0..self.max_len {
            for b in 0..self.elem_width {
                names.push(format!("v{j}_{b}"));
            }
        }
        names
    }

    pub fn encode(&self, seq: &[u64]) -> Result<BitVector> {
        if seq.len() > self.max_len {
            return Err(Error::Reduction(format!(
                "sequence of length {} exceeds the maximum {}",
                seq.len(),
                self.max_len
            )));
        }
        let mut bits = BitVector::from_u64(seq.len() as u64, self.len_width).into_bits();
        for &e in seq {
            if e >= self.alphabet_size as u64 {
                return Err(Error::Reduction(format!(
                    "element {e} is outside the alphabet"
                )));
            }
            bits.extend(BitVector::from_u64(e, self.elem_width).into_bits());
        }
        bits.resize(self.num_vars(), false);
        Ok(BitVector::new(bits))
    }

    /// Reads the first `len` slots. Fails on states no sequence encodes.
    pub fn decode(&self, s: &BitVector) -> Result<Vec<u64>> {
        if s.len() != self.num_vars() {
            return Err(Error::WidthMismatch {
                what: "sequence state".into(),
                expected: self.num_vars(),
                got: s.len(),
            });
        }
        let len = s.slice(0, self.len_width).to_u64() as usize;
        if len > self.max_len {
            return Err(Error::Reduction(format!(
                "length field {len} exceeds {}",
                self.max_len
            )));
        }
        let seq: Vec<u64> = (0..len)
            .map(|j| s.slice(self.slot_offset(j), self.elem_width).to_u64())
            .collect();
        if let Some(e) = seq.iter().find(|&&e| e >= self.alphabet_size as u64) {
            return Err(Error::Reduction(format!(
                "slot holds {e}, outside the alphabet"
            )));
        }
        if s.bits()[self.slot_offset(len)..].iter().any(|&b| b) {
            return Err(Error::Reduction(
                "slots past the length are not zero".into(),
            ));
        }
        Ok(seq)
    }

    pub fn len_of(&self, s: &BitVector) -> usize {
        s.slice(0, self.len_width).to_u64() as usize
    }
}

/// Signals describing one sequence state inside a circuit under construction.
pub struct SeqSignals {
    pub len: Word,
    pub slots: Vec<Word>,
    /// `present[j]`: slot `j` lies inside the sequence (`j < len`).
    pub present: Vec<Ref>,
}

impl SeqSignals {
    pub fn read(b: &mut CircuitBuilder, layout: &SequenceLayout, offset: usize) -> Self {
        let len = b.input_word(offset, layout.len_width);
        let slots: Vec<Word> = (0..layout.max_len)
            .map(|j| b.input_word(offset + layout.slot_offset(j), layout.elem_width))
            .collect();
        let present = (0..layout.max_len)
            .map(|j| b.ge_const(&len, j as u64 + 1))
            .collect();
        SeqSignals {
            len,
            slots,
            present,
        }
    }

    /// True iff some present slot holds `e`.
    pub fn contains(&self, b: &mut CircuitBuilder, e: u64) -> Ref {
        let hits: Vec<Ref> = self
            .slots
            .iter()
            .zip(&self.present)
            .map(|(slot, &p)| {
                let eq = b.eq_const(slot, e);
                b.and(p, eq)
            })
            .collect();
        b.or_all(hits)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Guard {
    Always,
    /// None of these elements occurs in the sequence.
    LacksAll(Vec<u64>),
    /// Exactly one of these elements occurs (at least once).
    ContainsExactlyOne(Vec<u64>),
}

impl Guard {
    fn holds(&self, seq: &[u64]) -> bool {
        match self {
            Guard::Always => true,
            Guard::LacksAll(es) => es.iter().all(|e| !seq.contains(e)),
            Guard::ContainsExactlyOne(es) => es.iter().filter(|e| seq.contains(e)).count() == 1,
        }
    }

    fn build(&self, b: &mut CircuitBuilder, s: &SeqSignals) -> Ref {
        match self {
            Guard::Always => b.constant(true),
            Guard::LacksAll(es) => {
                let hits: Vec<Ref> = es.iter().map(|&e| s.contains(b, e)).collect();
                let any = b.or_all(hits);
                b.not(any)
            }
            Guard::ContainsExactlyOne(es) => {
                let hits: Vec<Ref> = es.iter().map(|&e| s.contains(b, e)).collect();
                // Exactly one: the XOR is set and no two are set together.
                let parity = hits.iter().skip(1).fold(
                    hits.first().copied().unwrap_or(b.constant(false)),
                    |acc, &h| b.xor(acc, h),
                );
                let mut pairs = Vec::new();
                for i in 0..hits.len() {
                    for j in i + 1..hits.len() {
                        pairs.push(b.and(hits[i], hits[j]));
                    }
                }
                let any_pair = b.or_all(pairs);
                let none = b.not(any_pair);
                b.and(parity, none)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeqAction {
    pub name: String,
    pub guard: Guard,
    /// Distinct elements, appended with probability `1 / outcomes.len()` each.
    pub outcomes: Vec<u64>,
}

/// Builds the reward circuit from the state signals; returns its output word.
pub type RewardBuilder<'a> = dyn Fn(&mut CircuitBuilder, &SeqSignals) -> Word + 'a;

pub struct SequenceMdpSpec<'a> {
    pub name: String,
    pub layout: SequenceLayout,
    pub actions: Vec<SeqAction>,
    pub reward: &'a RewardBuilder<'a>,
}

impl SequenceMdpSpec<'_> {
    /// The least common multiple of the outcome-set sizes.
    pub fn denominator(&self) -> u64 {
        self.actions
            .iter()
            .map(|a| a.outcomes.len() as u64)
            .fold(1, num_integer::lcm)
    }

    pub fn max_branching(&self) -> usize {
        self.actions
            .iter()
            .map(|a| a.outcomes.len())
            .max()
            .unwrap_or(1)
    }

    /// Plain-code successor semantics, used to cross-check the circuits.
    pub fn step(&self, seq: &[u64], a: usize) -> Vec<Vec<u64>> {
        let act = &self.actions[a];
        if seq.len() >= self.layout.max_len || !act.guard.holds(seq) {
            return vec![seq.to_vec()];
        }
        act.outcomes
            .iter()
            .map(|&e| {
                let mut next = seq.to_vec();
                next.push(e);
                next
            })
            .collect()
    }

    fn check(&self) -> Result<()> {
        if self.actions.is_empty() {
            return Err(Error::Reduction("sequence MDP without actions".into()));
        }
        for a in &self.actions {
            if a.outcomes.is_empty() {
                return Err(Error::Reduction(format!(
                    "action {} has no outcomes",
                    a.name
                )));
            }
            let mut sorted = a.outcomes.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != a.outcomes.len() {
                return Err(Error::Reduction(format!(
                    "action {} repeats an outcome",
                    a.name
                )));
            }
            if sorted
                .iter()
                .any(|&e| e >= self.layout.alphabet_size as u64)
            {
                return Err(Error::Reduction(format!(
                    "action {} appends a non-element",
                    a.name
                )));
            }
        }
        Ok(())
    }

    /// `noop[k]`: action `k` leaves the state unchanged.
    fn noop_signals(&self, b: &mut CircuitBuilder, s: &SeqSignals) -> Vec<Ref> {
        let full = b.ge_const(&s.len, self.layout.max_len as u64);
        self.actions
            .iter()
            .map(|a| {
                let g = a.guard.build(b, s);
                let ng = b.not(g);
                b.or(full, ng)
            })
            .collect()
    }

    fn transition_circuit(&self, d: u64) -> Result<Circuit> {
        let l = &self.layout;
        let n = l.num_vars();
        let aw = index_width(self.actions.len());
        let mut b = CircuitBuilder::new(2 * n + aw);
        let s = SeqSignals::read(&mut b, l, 0);
        let s2 = SeqSignals::read(&mut b, l, n);
        let action = b.input_word(2 * n, aw);

        let s_word = b.input_word(0, n);
        let s2_word = b.input_word(n, n);
        let same = b.eq_words(&s_word, &s2_word);

        // s' = s with one element written at position len and len increased.
        let inc = b.increment(&s.len);
        let len_ok = b.eq_words(&inc, &s2.len);
        let pos: Vec<Ref> = (0..l.max_len)
            .map(|j| b.eq_const(&s.len, j as u64))
            .collect();
        let mut keep = vec![len_ok];
        for (j, &at) in pos.iter().enumerate() {
            let eq = b.eq_words(&s.slots[j], &s2.slots[j]);
            keep.push(b.or(eq, at));
        }
        let appended = b.and_all(keep);
        let cases: Vec<(Ref, Word)> = (0..l.max_len)
            .map(|j| (pos[j], s2.slots[j].clone()))
            .collect();
        let new_elem = b.select_words(&cases, l.elem_width);

        let noop = self.noop_signals(&mut b, &s);
        let mut num_cases = Vec::new();
        for (k, act) in self.actions.iter().enumerate() {
            let is_k = b.eq_const(&action, k as u64);
            let stay = b.and(noop[k], same);
            num_cases.push((b.and(is_k, stay), d));
            let hits: Vec<Ref> = act
                .outcomes
                .iter()
                .map(|&e| b.eq_const(&new_elem, e))
                .collect();
            let any = b.or_all(hits);
            let moves = b.not(noop[k]);
            let grow = b.and_all([is_k, moves, appended, any]);
            num_cases.push((grow, d / act.outcomes.len() as u64));
        }
        let out = b.select_const(&num_cases, ceil_log2(d + 1).max(1));
        b.build(format!("{}_t", self.name), out)
    }

    fn successor_circuit(&self, k: usize, branching: usize) -> Result<Circuit> {
        let l = &self.layout;
        let n = l.num_vars();
        let sw = index_width(branching);
        let act = &self.actions[k];
        let mut b = CircuitBuilder::new(n + sw);
        let s = SeqSignals::read(&mut b, l, 0);
        let slot = b.input_word(n, sw);
        let noop = self.noop_signals(&mut b, &s)[k];
        let first = b.eq_const(&slot, 0);
        let in_range = b.lt_const(&slot, act.outcomes.len() as u64);
        let valid = b.mux(noop, first, in_range);

        let picks: Vec<(Ref, u64)> = act
            .outcomes
            .iter()
            .enumerate()
            .map(|(i, &e)| (b.eq_const(&slot, i as u64), e))
            .collect();
        let elem = b.select_const(&picks, l.elem_width);
        let inc = b.increment(&s.len);
        let mut grown = inc;
        for j in 0..l.max_len {
            let here = b.eq_const(&s.len, j as u64);
            grown.extend(b.mux_word(here, &elem, &s.slots[j]));
        }
        let s_word = b.input_word(0, n);
        let next = b.mux_word(noop, &s_word, &grown);
        let mut outputs = vec![valid];
        outputs.extend(next);
        b.build(format!("{}_succ_{}", self.name, act.name), outputs)
    }

    pub fn build(&self, reward_name: &str) -> Result<BoundedActionMdp> {
        self.check()?;
        let l = &self.layout;
        let d = self.denominator();
        let t = self.transition_circuit(d)?;
        let mut rb = CircuitBuilder::new(l.num_vars());
        let s = SeqSignals::read(&mut rb, l, 0);
        let out = (self.reward)(&mut rb, &s);
        let r = rb.build(reward_name, out)?;
        let base = SuccinctMdp::new(
            self.name.clone(),
            l.var_names(),
            l.encode(&[])?,
            self.actions.iter().map(|a| a.name.clone()).collect(),
            t,
            r,
            d,
        )?;
        let branching = self.max_branching();
        let succ = (0..self.actions.len())
            .map(|k| self.successor_circuit(k, branching))
            .collect::<Result<Vec<_>>>()?;
        BoundedActionMdp::new(base, succ, branching)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limits::Limits;
    use crate::mdp::{validate, AnyMdp, MdpModel, ValidateOptions};
    use crate::rational::Rational;

    fn toy_spec<'a>(reward: &'a RewardBuilder<'a>) -> SequenceMdpSpec<'a> {
        SequenceMdpSpec {
            name: "toy".into(),
            layout: SequenceLayout::new(3, 2).unwrap(),
            actions: vec![
                SeqAction {
                    name: "pick".into(),
                    guard: Guard::LacksAll(vec![2]),
                    outcomes: vec![0, 1],
                },
                SeqAction {
                    name: "stop".into(),
                    guard: Guard::ContainsExactlyOne(vec![0, 1]),
                    outcomes: vec![2],
                },
                SeqAction {
                    name: "any".into(),
                    guard: Guard::Always,
                    outcomes: vec![0, 1, 2],
                },
            ],
            reward,
        }
    }

    #[test]
    fn encode_decode_round_trip() {
        let l = SequenceLayout::new(6, 4).unwrap();
        assert_eq!((l.elem_width(), l.len_width(), l.num_vars()), (3, 3, 15));
        for seq in [vec![], vec![5], vec![0, 1, 2, 3]] {
            assert_eq!(l.decode(&l.encode(&seq).unwrap()).unwrap(), seq);
        }
        assert!(l.encode(&[6]).is_err());
        assert!(l.encode(&[0; 5]).is_err());
        let mut junk = l.encode(&[1]).unwrap();
        junk.set(l.num_vars() - 1, true);
        assert!(l.decode(&junk).is_err());
    }

    #[test]
    fn circuits_match_plain_semantics() {
        let reward = |b: &mut CircuitBuilder, s: &SeqSignals| {
            let full = b.eq_const(&s.len, 2);
            vec![b.constant(false), full]
        };
        let spec = toy_spec(&reward);
        let m = spec.build("toy_r").unwrap();
        assert_eq!(m.base().prob_denominator(), 6);
        let report = validate(&AnyMdp::Bounded(m.clone()), &ValidateOptions::default()).unwrap();
        assert!(
            report.is_ok(),
            "{:?}",
            &report.violations[..report.violations.len().min(3)]
        );

        let l = &spec.layout;
        let mut seqs: Vec<Vec<u64>> = vec![vec![]];
        for a in 0..3 {
            seqs.push(vec![a]);
            for b in 0..3 {
                seqs.push(vec![a, b]);
            }
        }
        for seq in &seqs {
            let s = l.encode(seq).unwrap();
            for a in 0..3 {
                let got = m.successors(&s, a, &Limits::default()).unwrap();
                let expected = spec.step(seq, a);
                assert_eq!(got.len(), expected.len(), "seq {seq:?} action {a}");
                for (s2, p) in got {
                    let next = l.decode(&s2).unwrap();
                    assert!(expected.contains(&next));
                    assert_eq!(p, Rational::new(1.into(), (expected.len() as i64).into()));
                }
            }
            assert_eq!(m.base().reward(&s).unwrap(), i64::from(seq.len() == 2));
        }
    }
}
