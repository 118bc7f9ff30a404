use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use super::{AnyMdp, BoundedActionMdp, SuccinctMdp};
use crate::bits::BitVector;
use crate::error::{Error, Result};
use crate::limits::Limits;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NumeratorExceedsDenominator {
        state: BitVector,
        successor: BitVector,
        action: usize,
        numerator: u64,
    },
    NotNormalized {
        state: BitVector,
        action: usize,
        sum: u64,
    },
    /// `t(s, s', a) > 0` but the successor circuit does not list `s'`.
    MissingSuccessor {
        state: BitVector,
        action: usize,
        successor: BitVector,
    },
    /// Listed by the successor circuit although `t(s, s', a) = 0`.
    ZeroProbabilitySuccessor {
        state: BitVector,
        action: usize,
        successor: BitVector,
    },
    DuplicateSuccessor {
        state: BitVector,
        action: usize,
        successor: BitVector,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NumeratorExceedsDenominator {
                state,
                successor,
                action,
                numerator,
            } => write!(
                f,
                "numerator {numerator} exceeds D at s={state} s'={successor} a={action}"
            ),
            Violation::NotNormalized { state, action, sum } => {
                write!(f, "numerators sum to {sum}, not D, at s={state} a={action}")
            }
            Violation::MissingSuccessor {
                state,
                action,
                successor,
            } => {
                write!(
                    f,
                    "successor circuit omits s'={successor} at s={state} a={action}"
                )
            }
            Violation::ZeroProbabilitySuccessor {
                state,
                action,
                successor,
            } => {
                write!(f, "successor circuit lists zero-probability s'={successor} at s={state} a={action}")
            }
            Violation::DuplicateSuccessor {
                state,
                action,
                successor,
            } => {
                write!(
                    f,
                    "successor circuit lists s'={successor} twice at s={state} a={action}"
                )
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ValidateOptions {
    /// Up to this many variables every state is checked.
    pub max_exhaustive_vars: usize,
    /// Otherwise this many states, reached breadth first from the initial state.
    pub sample_states: usize,
    /// Stop collecting after this many violations.
    pub max_violations: usize,
    /// Successors are found by trying all 2ⁿ candidates only up to this many
    /// variables; beyond it only the successor circuits are consulted.
    pub max_enum_successor_vars: usize,
    pub limits: Limits,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            max_exhaustive_vars: 10,
            sample_states: 256,
            max_violations: 64,
            max_enum_successor_vars: 12,
            limits: Limits::default(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub exhaustive: bool,
    pub checked_pairs: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Checker<'a> {
    base: &'a SuccinctMdp,
    bounded: Option<&'a BoundedActionMdp>,
    enumerate: bool,
    opts: &'a ValidateOptions,
    report: ValidationReport,
}

impl Checker<'_> {
    fn full(&self) -> bool {
        self.report.violations.len() >= self.opts.max_violations
    }

    fn push(&mut self, v: Violation) {
        if !self.full() {
            self.report.violations.push(v);
        }
    }

    fn numerator(&mut self, s: &BitVector, s2: &BitVector, a: usize) -> Result<u64> {
        match self.base.transition_numerator(s, s2, a) {
            Ok(n) => Ok(n),
            Err(Error::NumeratorExceedsDenominator { numerator, .. }) => {
                self.push(Violation::NumeratorExceedsDenominator {
                    state: s.clone(),
                    successor: s2.clone(),
                    action: a,
                    numerator,
                });
                Ok(numerator)
            }
            Err(e) => Err(e),
        }
    }

    /// Checks one `(s, a)` pair and returns the successors it found.
    fn check(&mut self, s: &BitVector, a: usize) -> Result<Vec<BitVector>> {
        self.report.checked_pairs += 1;
        let d = self.base.prob_denominator();
        let mut positive: Vec<BitVector> = Vec::new();
        let mut sum = 0u64;
        if self.enumerate {
            for s2 in BitVector::all(self.base.num_vars()) {
                let num = self.numerator(s, &s2, a)?;
                if num > 0 {
                    sum += num;
                    positive.push(s2);
                }
            }
        }
        if let Some(b) = self.bounded {
            let listed = b.listed_successors(s, a)?;
            let mut seen = HashSet::new();
            let mut listed_sum = 0u64;
            for s2 in &listed {
                if !seen.insert(s2.clone()) {
                    self.push(Violation::DuplicateSuccessor {
                        state: s.clone(),
                        action: a,
                        successor: s2.clone(),
                    });
                    continue;
                }
                let num = self.numerator(s, s2, a)?;
                if num == 0 {
                    self.push(Violation::ZeroProbabilitySuccessor {
                        state: s.clone(),
                        action: a,
                        successor: s2.clone(),
                    });
                }
                listed_sum += num;
            }
            if self.enumerate {
                for s2 in &positive {
                    if !seen.contains(s2) {
                        self.push(Violation::MissingSuccessor {
                            state: s.clone(),
                            action: a,
                            successor: s2.clone(),
                        });
                    }
                }
            } else {
                sum = listed_sum;
                positive = seen.into_iter().collect();
                positive.sort();
            }
        }
        if (self.enumerate || self.bounded.is_some()) && sum != d {
            self.push(Violation::NotNormalized {
                state: s.clone(),
                action: a,
                sum,
            });
        }
        Ok(positive)
    }
}

/// Checks numerator bounds, normalization to `D` and, for bounded-action
/// MDPs, that the successor circuits list exactly the positive-probability
/// successors. Every state is visited when the model is small enough,
/// otherwise a breadth-first sample from the initial state.
pub fn validate(m: &AnyMdp, opts: &ValidateOptions) -> Result<ValidationReport> {
    let (base, bounded) = match m {
        AnyMdp::Succinct(b) => (b, None),
        AnyMdp::Bounded(b) => (b.base(), Some(b)),
    };
    let n = base.num_vars();
    let exhaustive = n <= opts.max_exhaustive_vars;
    let mut checker = Checker {
        base,
        bounded,
        enumerate: n <= opts.max_enum_successor_vars.min(opts.limits.max_enum_vars),
        opts,
        report: ValidationReport {
            exhaustive,
            ..ValidationReport::default()
        },
    };
    let actions = base.action_count();
    if exhaustive {
        for s in BitVector::all(n) {
            for a in 0..actions {
                checker.check(&s, a)?;
                if checker.full() {
                    return Ok(checker.report);
                }
            }
        }
        return Ok(checker.report);
    }
    let mut seen = BTreeSet::from([base.initial_state().clone()]);
    let mut queue = VecDeque::from([base.initial_state().clone()]);
    let mut visited = 0;
    while let Some(s) = queue.pop_front() {
        if visited >= opts.sample_states || checker.full() {
            break;
        }
        visited += 1;
        for a in 0..actions {
            for s2 in checker.check(&s, a)? {
                if seen.insert(s2.clone()) {
                    queue.push_back(s2);
                }
            }
        }
    }
    Ok(checker.report)
}
