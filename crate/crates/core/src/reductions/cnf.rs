use std::fmt;
use std::str::FromStr;

use crate::circuit::{CircuitBuilder, Ref};
use crate::error::{Error, Result};

/// A literal over zero-based variable `var`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit {
    pub var: usize,
    pub positive: bool,
}

impl Lit {
    pub fn pos(var: usize) -> Self {
        Lit {
            var,
            positive: true,
        }
    }

    pub fn neg(var: usize) -> Self {
        Lit {
            var,
            positive: false,
        }
    }

    /// DIMACS form: `var + 1`, negated for negative literals.
    pub fn to_dimacs(self) -> i64 {
        let v = self.var as i64 + 1;
        if self.positive {
            v
        } else {
            -v
        }
    }

    /// Code in a literal alphabet: `2·var` for `x`, `2·var + 1` for `¬x`.
    pub fn code(self) -> u64 {
        2 * self.var as u64 + u64::from(!self.positive)
    }

    pub fn from_code(code: u64) -> Self {
        Lit {
            var: (code / 2) as usize,
            positive: code.is_multiple_of(2),
        }
    }

    pub fn holds(self, assignment: &[bool]) -> bool {
        assignment[self.var] == self.positive
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "x{}", self.var + 1)
        } else {
            write!(f, "~x{}", self.var + 1)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cnf {
    num_vars: usize,
    clauses: Vec<Vec<Lit>>,
}

impl Cnf {
    pub fn new(num_vars: usize, clauses: Vec<Vec<Lit>>) -> Result<Self> {
        for c in &clauses {
            for l in c {
                if l.var >= num_vars {
                    return Err(Error::Cnf {
                        line: 0,
                        message: format!("literal {l} exceeds the {num_vars} declared variables"),
                    });
                }
            }
        }
        Ok(Cnf { num_vars, clauses })
    }

    /// Convenience constructor from DIMACS-style signed integers.
    pub fn from_ints(num_vars: usize, clauses: &[&[i64]]) -> Result<Self> {
        let clauses = clauses
            .iter()
            .map(|c| {
                c.iter()
                    .map(|&v| {
                        if v == 0 {
                            return Err(Error::Cnf {
                                line: 0,
                                message: "0 is not a literal".into(),
                            });
                        }
                        Ok(Lit {
                            var: (v.unsigned_abs() - 1) as usize,
                            positive: v > 0,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Cnf::new(num_vars, clauses)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// `assignment[i]` is the value of variable `i`.
    pub fn evaluate(&self, assignment: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| l.holds(assignment)))
    }

    /// Variable `i` takes bit `i` of `mask`.
    pub fn evaluate_mask(&self, mask: u64) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| ((mask >> l.var) & 1 == 1) == l.positive))
    }

    pub fn check_arity(&self, k: usize) -> Result<()> {
        for (i, c) in self.clauses.iter().enumerate() {
            if c.len() != k {
                return Err(Error::Reduction(format!(
                    "clause {} has {} literals, expected exactly {k}",
                    i + 1,
                    c.len()
                )));
            }
        }
        Ok(())
    }

    /// Q as a circuit over the given variable signals.
    pub fn build(&self, b: &mut CircuitBuilder, vars: &[Ref]) -> Ref {
        assert_eq!(vars.len(), self.num_vars, "one signal per variable");
        let clauses: Vec<Ref> = self
            .clauses
            .iter()
            .map(|c| {
                let lits: Vec<Ref> = c
                    .iter()
                    .map(|l| {
                        if l.positive {
                            vars[l.var]
                        } else {
                            b.not(vars[l.var])
                        }
                    })
                    .collect();
                b.or_all(lits)
            })
            .collect();
        b.and_all(clauses)
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                out.push_str(&l.to_dimacs().to_string());
                out.push(' ');
            }
            out.push_str("0\n");
        }
        out
    }
}

impl FromStr for Cnf {
    type Err = Error;

    /// DIMACS: optional `c` comment lines, a `p cnf <vars> <clauses>` header,
    /// then zero-terminated clauses that may span lines. A `%` line ends input.
    fn from_str(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Cnf { line, message };
        let mut header: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        let mut current: Vec<Lit> = Vec::new();
        let mut last_line = 0;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            last_line = line;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('c') {
                continue;
            }
            if content.starts_with('%') {
                break;
            }
            if content.starts_with('p') {
                if header.is_some() {
                    return Err(err(line, "duplicate header".into()));
                }
                let parts: Vec<&str> = content.split_whitespace().collect();
                let parsed = match parts.as_slice() {
                    ["p", "cnf", v, c] => v.parse().ok().zip(c.parse().ok()),
                    _ => None,
                };
                header =
                    Some(parsed.ok_or_else(|| err(line, format!("malformed header '{content}'")))?);
                continue;
            }
            let (num_vars, _) =
                header.ok_or_else(|| err(line, "clause before 'p cnf' header".into()))?;
            for token in content.split_whitespace() {
                let v: i64 = token
                    .parse()
                    .map_err(|_| err(line, format!("'{token}' is not an integer literal")))?;
                if v == 0 {
                    clauses.push(std::mem::take(&mut current));
                    continue;
                }
                let var = (v.unsigned_abs() - 1) as usize;
                if var >= num_vars {
                    return Err(err(
                        line,
                        format!("literal {v} exceeds the {num_vars} declared variables"),
                    ));
                }
                current.push(Lit {
                    var,
                    positive: v > 0,
                });
            }
        }
        let (num_vars, num_clauses) =
            header.ok_or_else(|| err(last_line, "missing 'p cnf' header".into()))?;
        if !current.is_empty() {
            return Err(err(last_line, "last clause is not terminated by 0".into()));
        }
        if clauses.len() != num_clauses {
            return Err(err(
                last_line,
                format!(
                    "header declares {num_clauses} clauses, found {}",
                    clauses.len()
                ),
            ));
        }
        Cnf::new(num_vars, clauses)
    }
}

impl fmt::Display for Cnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.clauses.is_empty() {
            return write!(f, "true");
        }
        let parts: Vec<String> = self
            .clauses
            .iter()
            .map(|c| {
                let lits: Vec<String> = c.iter().map(Lit::to_string).collect();
                format!("({})", lits.join(" | "))
            })
            .collect();
        write!(f, "{}", parts.join(" & "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitVector;

    #[test]
    fn dimacs_round_trip() {
        let text = "c example\np cnf 3 2\n1 -2 0\n2 3\n-1 0\n";
        let q: Cnf = text.parse().unwrap();
        assert_eq!(q.num_vars(), 3);
        assert_eq!(q.clauses()[1], vec![Lit::pos(1), Lit::pos(2), Lit::neg(0)]);
        assert_eq!(q.to_dimacs().parse::<Cnf>().unwrap(), q);
    }

    #[test]
    fn dimacs_errors_carry_lines() {
        let bad_header = "p cnf x 1\n1 0\n".parse::<Cnf>().unwrap_err();
        assert!(matches!(bad_header, Error::Cnf { line: 1, .. }));
        let range = "p cnf 1 1\n2 0\n".parse::<Cnf>().unwrap_err();
        assert!(matches!(range, Error::Cnf { line: 2, .. }));
        let junk = "p cnf 1 1\n1 a 0\n".parse::<Cnf>().unwrap_err();
        assert!(matches!(junk, Error::Cnf { line: 2, .. }));
        assert!("1 0\n".parse::<Cnf>().is_err());
        assert!("p cnf 1 2\n1 0\n".parse::<Cnf>().is_err());
    }

    #[test]
    fn circuit_agrees_with_evaluation() {
        let q = Cnf::from_ints(3, &[&[1, -2], &[2, 3], &[-1, -3]]).unwrap();
        let mut b = CircuitBuilder::new(3);
        let vars = b.input_word(0, 3);
        let out = q.build(&mut b, &vars);
        let c = b.build("q", vec![out]).unwrap();
        for s in BitVector::all(3) {
            let expected = q.evaluate(s.bits());
            assert_eq!(c.eval(&s).unwrap().bits(), &[expected]);
        }
        let empty = Cnf::new(2, vec![]).unwrap();
        assert!(empty.evaluate(&[false, false]));
    }
}
