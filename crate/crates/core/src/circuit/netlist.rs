//! Line-based ASCII netlists.
//!
//! ```text
//! circuit <name>
//! inputs <k>
//! gate g<j> <KIND> <ref> [<ref>]
//! outputs <ref> <ref> ...
//! ```
//!
//! Refs are `i<idx>` or `g<idx>`. Gate ids must strictly increase; they are
//! renumbered densely on parse, so canonical text has ids 0, 1, 2, ...
//! Everything after `#` is a comment.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{Circuit, Gate, Ref};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("netlist line {line}: {kind}")]
pub struct NetlistError {
    pub line: usize,
    pub kind: NetlistErrorKind,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetlistErrorKind {
    #[error("malformed line: {0}")]
    Malformed(String),
    #[error("gate refers to {0}, which is not defined yet")]
    ForwardReference(String),
    #[error("{kind} takes {expected} operand(s), got {got}")]
    BadArity {
        kind: String,
        expected: usize,
        got: usize,
    },
    #[error("output refers to undefined signal {0}")]
    BadOutputRef(String),
    #[error("unknown gate kind '{0}'")]
    UnknownKind(String),
    #[error("gate id g{got} does not increase past g{previous}")]
    NonIncreasingId { previous: usize, got: usize },
    #[error("input index {0} out of range")]
    InputOutOfRange(usize),
    #[error("missing '{0}' line")]
    Missing(&'static str),
    #[error("duplicate '{0}' line")]
    Duplicate(&'static str),
}

fn err(line: usize, kind: NetlistErrorKind) -> NetlistError {
    NetlistError { line, kind }
}

fn parse_index(token: &str, prefix: char) -> Option<usize> {
    token.strip_prefix(prefix)?.parse().ok()
}

pub fn parse(text: &str) -> Result<Circuit, NetlistError> {
    let mut name: Option<String> = None;
    let mut num_inputs: Option<usize> = None;
    let mut gates: Vec<Gate> = Vec::new();
    // textual gate id -> dense index
    let mut ids: HashMap<usize, usize> = HashMap::new();
    let mut last_id: Option<usize> = None;
    let mut outputs: Option<Vec<Ref>> = None;
    let mut last_line = 0;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match tokens[0] {
            "circuit" => {
                if name.is_some() {
                    return Err(err(line, NetlistErrorKind::Duplicate("circuit")));
                }
                if tokens.len() != 2 {
                    return Err(err(
                        line,
                        NetlistErrorKind::Malformed("expected 'circuit <name>'".into()),
                    ));
                }
                name = Some(tokens[1].to_string());
            }
            "inputs" => {
                if name.is_none() {
                    return Err(err(line, NetlistErrorKind::Missing("circuit")));
                }
                if num_inputs.is_some() {
                    return Err(err(line, NetlistErrorKind::Duplicate("inputs")));
                }
                let k = match tokens.as_slice() {
                    [_, k] => k.parse().ok(),
                    _ => None,
                };
                num_inputs = Some(k.ok_or_else(|| {
                    err(
                        line,
                        NetlistErrorKind::Malformed("expected 'inputs <k>'".into()),
                    )
                })?);
            }
            "gate" => {
                let k = num_inputs.ok_or_else(|| err(line, NetlistErrorKind::Missing("inputs")))?;
                if outputs.is_some() {
                    return Err(err(
                        line,
                        NetlistErrorKind::Malformed("gate after outputs".into()),
                    ));
                }
                if tokens.len() < 3 {
                    return Err(err(
                        line,
                        NetlistErrorKind::Malformed("expected 'gate g<j> <KIND> ...'".into()),
                    ));
                }
                let id = parse_index(tokens[1], 'g').ok_or_else(|| {
                    err(
                        line,
                        NetlistErrorKind::Malformed(format!("bad gate id '{}'", tokens[1])),
                    )
                })?;
                if let Some(prev) = last_id {
                    if id <= prev {
                        return Err(err(
                            line,
                            NetlistErrorKind::NonIncreasingId {
                                previous: prev,
                                got: id,
                            },
                        ));
                    }
                }
                let kind = tokens[2];
                let expected = match kind {
                    "AND" | "OR" | "XOR" => 2,
                    "NOT" => 1,
                    "CONST0" | "CONST1" => 0,
                    other => {
                        return Err(err(line, NetlistErrorKind::UnknownKind(other.to_string())))
                    }
                };
                let operand_tokens = &tokens[3..];
                if operand_tokens.len() != expected {
                    return Err(err(
                        line,
                        NetlistErrorKind::BadArity {
                            kind: kind.to_string(),
                            expected,
                            got: operand_tokens.len(),
                        },
                    ));
                }
                let operands = operand_tokens
                    .iter()
                    .map(|t| resolve(t, k, &ids).map_err(|e| err(line, e)))
                    .collect::<Result<Vec<Ref>, _>>()?;
                let gate = match (kind, operands.as_slice()) {
                    ("AND", &[a, b]) => Gate::And(a, b),
                    ("OR", &[a, b]) => Gate::Or(a, b),
                    ("XOR", &[a, b]) => Gate::Xor(a, b),
                    ("NOT", &[a]) => Gate::Not(a),
                    ("CONST0", []) => Gate::Const0,
                    ("CONST1", []) => Gate::Const1,
                    _ => unreachable!("arity checked above"),
                };
                ids.insert(id, gates.len());
                gates.push(gate);
                last_id = Some(id);
            }
            "outputs" => {
                let k = num_inputs.ok_or_else(|| err(line, NetlistErrorKind::Missing("inputs")))?;
                if outputs.is_some() {
                    return Err(err(line, NetlistErrorKind::Duplicate("outputs")));
                }
                let refs = tokens[1..]
                    .iter()
                    .map(|t| {
                        resolve(t, k, &ids).map_err(|e| match e {
                            NetlistErrorKind::ForwardReference(_)
                            | NetlistErrorKind::InputOutOfRange(_) => {
                                err(line, NetlistErrorKind::BadOutputRef(t.to_string()))
                            }
                            other => err(line, other),
                        })
                    })
                    .collect::<Result<Vec<Ref>, _>>()?;
                outputs = Some(refs);
            }
            other => {
                return Err(err(
                    line,
                    NetlistErrorKind::Malformed(format!("unknown directive '{other}'")),
                ));
            }
        }
    }

    let name = name.ok_or_else(|| err(last_line, NetlistErrorKind::Missing("circuit")))?;
    let num_inputs =
        num_inputs.ok_or_else(|| err(last_line, NetlistErrorKind::Missing("inputs")))?;
    let outputs = outputs.ok_or_else(|| err(last_line, NetlistErrorKind::Missing("outputs")))?;
    Circuit::new(name, num_inputs, gates, outputs)
        .map_err(|e| err(last_line, NetlistErrorKind::Malformed(e.to_string())))
}

fn resolve(
    token: &str,
    num_inputs: usize,
    ids: &HashMap<usize, usize>,
) -> Result<Ref, NetlistErrorKind> {
    if let Some(i) = parse_index(token, 'i') {
        if i < num_inputs {
            Ok(Ref::Input(i))
        } else {
            Err(NetlistErrorKind::InputOutOfRange(i))
        }
    } else if let Some(g) = parse_index(token, 'g') {
        ids.get(&g)
            .map(|&dense| Ref::Gate(dense))
            .ok_or_else(|| NetlistErrorKind::ForwardReference(token.to_string()))
    } else {
        Err(NetlistErrorKind::Malformed(format!(
            "bad reference '{token}'"
        )))
    }
}

/// Canonical text: dense gate ids, one construct per line, trailing newline.
pub fn serialize(c: &Circuit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "circuit {}", c.name());
    let _ = writeln!(out, "inputs {}", c.num_inputs());
    for (j, gate) in c.gates().iter().enumerate() {
        let _ = write!(out, "gate g{j} {}", gate.kind_name());
        for op in gate.operands() {
            let _ = write!(out, " {op}");
        }
        out.push('\n');
    }
    out.push_str("outputs");
    for r in c.outputs() {
        let _ = write!(out, " {r}");
    }
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_serializes_to_three_lines() {
        let c = Circuit::new("identity", 1, vec![], vec![Ref::Input(0)]).unwrap();
        assert_eq!(serialize(&c), "circuit identity\ninputs 1\noutputs i0\n");
    }

    #[test]
    fn forward_reference_is_rejected() {
        let text = "circuit f\ninputs 1\ngate g0 NOT g1\ngate g1 NOT i0\noutputs g1\n";
        let e = parse(text).unwrap_err();
        assert_eq!(e.line, 3);
        assert!(matches!(e.kind, NetlistErrorKind::ForwardReference(_)));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let arity = parse("circuit a\ninputs 2\ngate g0 AND i0\noutputs g0\n").unwrap_err();
        assert_eq!(arity.line, 3);
        assert!(matches!(
            arity.kind,
            NetlistErrorKind::BadArity {
                expected: 2,
                got: 1,
                ..
            }
        ));

        let out = parse("circuit a\ninputs 1\n\noutputs g4\n").unwrap_err();
        assert_eq!(out.line, 4);
        assert!(matches!(out.kind, NetlistErrorKind::BadOutputRef(_)));

        let junk = parse("circuit a\nwires 3\n").unwrap_err();
        assert_eq!(junk.line, 2);

        let order =
            parse("circuit a\ninputs 1\ngate g3 NOT i0\ngate g2 NOT i0\noutputs g3\n").unwrap_err();
        assert!(matches!(
            order.kind,
            NetlistErrorKind::NonIncreasingId {
                previous: 3,
                got: 2
            }
        ));

        let missing = parse("circuit a\ninputs 1\n").unwrap_err();
        assert_eq!(missing.kind, NetlistErrorKind::Missing("outputs"));
    }

    #[test]
    fn comments_and_sparse_ids() {
        let text = "# header\ncircuit c # trailing\ninputs 2\ngate g5 XOR i0 i1\ngate g9 NOT g5\noutputs g9 i1\n";
        let c = parse(text).unwrap();
        assert_eq!(c.size(), 2);
        assert_eq!(c.outputs(), &[Ref::Gate(1), Ref::Input(1)]);
        let canonical = serialize(&c);
        assert_eq!(
            canonical,
            "circuit c\ninputs 2\ngate g0 XOR i0 i1\ngate g1 NOT g0\noutputs g1 i1\n"
        );
        assert_eq!(serialize(&parse(&canonical).unwrap()), canonical);
    }
}
