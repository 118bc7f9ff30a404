//! Text manifests for MDPs, policies, value functions and generated
//! instances. Each manifest is a list of `key value...` lines; circuits live
//! in separate netlist files named relative to the manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::bits::BitVector;
use crate::circuit::{netlist, Circuit};
use crate::error::{Error, Result};
use crate::mdp::{AnyMdp, BoundedActionMdp, SuccinctMdp};
use crate::policy::{HistoryPolicy, Policy, StationaryPolicy};
use crate::rational::{self, Rational};
use crate::reductions::ReductionInstance;
use crate::value::ValueCircuit;

struct Entry {
    line: usize,
    key: String,
    args: Vec<String>,
}

struct Manifest {
    path: PathBuf,
    entries: Vec<Entry>,
}

impl Manifest {
    fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(path, &text))
    }

    fn parse(path: &Path, text: &str) -> Self {
        let entries = text
            .lines()
            .enumerate()
            .filter_map(|(i, raw)| {
                let content = raw.split('#').next().unwrap_or("");
                let mut tokens = content.split_whitespace().map(str::to_string);
                let key = tokens.next()?;
                Some(Entry {
                    line: i + 1,
                    key,
                    args: tokens.collect(),
                })
            })
            .collect();
        Manifest {
            path: path.to_path_buf(),
            entries,
        }
    }

    fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Manifest {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    fn check_keys(&self, allowed: &[&str], repeatable: &[&str]) -> Result<()> {
        let mut seen = BTreeMap::new();
        for e in &self.entries {
            if !allowed.contains(&e.key.as_str()) {
                return Err(self.error(e.line, format!("unknown key '{}'", e.key)));
            }
            if let Some(first) = seen.insert(e.key.clone(), e.line) {
                if !repeatable.contains(&e.key.as_str()) {
                    return Err(self.error(e.line, format!("'{}' repeats line {first}", e.key)));
                }
            }
        }
        Ok(())
    }

    fn find(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.iter().filter(move |e| e.key == key)
    }

    fn require(&self, key: &str) -> Result<&Entry> {
        self.find(key).ok_or_else(|| {
            self.error(
                self.entries.last().map_or(0, |e| e.line),
                format!("missing '{key}' line"),
            )
        })
    }

    fn one_arg(&self, key: &str) -> Result<(usize, &str)> {
        let e = self.require(key)?;
        match e.args.as_slice() {
            [v] => Ok((e.line, v)),
            _ => Err(self.error(e.line, format!("'{key}' takes exactly one value"))),
        }
    }

    fn number<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let (line, v) = self.one_arg(key)?;
        v.parse().map_err(|_| {
            self.error(
                line,
                format!("'{key}' needs a non-negative integer, got '{v}'"),
            )
        })
    }

    fn optional_number<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        if self.find(key).is_some() {
            self.number(key).map(Some)
        } else {
            Ok(None)
        }
    }

    fn circuit(&self, line: usize, file: &str) -> Result<Circuit> {
        let dir = self.path.parent().unwrap_or(Path::new("."));
        let path = dir.join(file);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        netlist::parse(&text).map_err(|e| Error::Manifest {
            path: path.clone(),
            line: e.line,
            message: format!(
                "{} (referenced from {}:{line})",
                e.kind,
                self.path.display()
            ),
        })
    }

    fn circuit_at(&self, key: &str) -> Result<Circuit> {
        let (line, file) = self.one_arg(key)?;
        self.circuit(line, file)
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_circuit(dir: &Path, file: &str, c: &Circuit) -> Result<()> {
    write_file(&dir.join(file), &netlist::serialize(c))
}

/// An MDP read from a manifest, with the horizon if one was declared.
#[derive(Debug, Clone)]
pub struct LoadedMdp {
    pub mdp: AnyMdp,
    pub horizon: Option<usize>,
}

pub fn load_mdp(path: &Path) -> Result<LoadedMdp> {
    let m = Manifest::read(path)?;
    m.check_keys(
        &[
            "mdp",
            "vars",
            "init",
            "actions",
            "prob_denominator",
            "prob_width",
            "reward_width",
            "transition",
            "reward",
            "successor",
            "horizon",
        ],
        &["successor"],
    )?;
    let (_, name) = m.one_arg("mdp")?;
    let vars = m.require("vars")?.args.clone();
    let (init_line, init) = m.one_arg("init")?;
    let init: BitVector = if init == "-" && vars.is_empty() {
        BitVector::zeros(0)
    } else {
        init.parse()
            .map_err(|e: Error| m.error(init_line, e.to_string()))?
    };
    let actions_entry = m.require("actions")?;
    let actions = actions_entry.args.clone();
    let d: u64 = m.number("prob_denominator")?;
    let transition = m.circuit_at("transition")?;
    let reward = m.circuit_at("reward")?;
    for (key, got) in [
        ("prob_width", transition.num_outputs()),
        ("reward_width", reward.num_outputs()),
    ] {
        if let Some(w) = m.optional_number::<usize>(key)? {
            if w != got {
                let line = m.require(key)?.line;
                return Err(m.error(
                    line,
                    format!("{key} {w} disagrees with the circuit's {got} outputs"),
                ));
            }
        }
    }
    let base = SuccinctMdp::new(name, vars, init, actions, transition, reward, d)
        .map_err(|e| m.error(actions_entry.line, e.to_string()))?;

    let successor_lines: Vec<&Entry> = m.all("successor").collect();
    let mdp = if successor_lines.is_empty() {
        AnyMdp::Succinct(base)
    } else {
        let mut circuits: Vec<Option<Circuit>> = vec![None; base.action_count()];
        let mut branching = None;
        for e in &successor_lines {
            let [action, file, kw, b] = e.args.as_slice() else {
                return Err(m.error(e.line, "expected 'successor <action> <file> branching <B>'"));
            };
            if kw != "branching" {
                return Err(m.error(e.line, "expected 'successor <action> <file> branching <B>'"));
            }
            let a = base
                .action_index(action)
                .ok_or_else(|| m.error(e.line, format!("unknown action '{action}'")))?;
            let b: usize = b
                .parse()
                .map_err(|_| m.error(e.line, format!("bad branching bound '{b}'")))?;
            if *branching.get_or_insert(b) != b {
                return Err(m.error(e.line, "all successor lines must share one branching bound"));
            }
            if circuits[a].replace(m.circuit(e.line, file)?).is_some() {
                return Err(m.error(e.line, format!("second successor circuit for '{action}'")));
            }
        }
        let mut list = Vec::with_capacity(circuits.len());
        for (a, c) in circuits.into_iter().enumerate() {
            list.push(c.ok_or_else(|| {
                m.error(
                    successor_lines[0].line,
                    format!("no successor circuit for action '{}'", base.actions()[a]),
                )
            })?);
        }
        let line = successor_lines[0].line;
        AnyMdp::Bounded(
            BoundedActionMdp::new(base, list, branching.unwrap_or(1))
                .map_err(|e| m.error(line, e.to_string()))?,
        )
    };
    Ok(LoadedMdp {
        mdp,
        horizon: m.optional_number("horizon")?,
    })
}

/// Writes `mdp.txt` and its netlists into `dir`; returns the manifest path.
pub fn write_mdp(dir: &Path, mdp: &AnyMdp, horizon: Option<usize>) -> Result<PathBuf> {
    let base = match mdp {
        AnyMdp::Succinct(m) => m,
        AnyMdp::Bounded(m) => m.base(),
    };
    let mut text = String::new();
    let _ = writeln!(text, "mdp {}", base.name());
    let _ = writeln!(text, "vars {}", base.vars().join(" "));
    let init = if base.num_vars() == 0 {
        "-".to_string()
    } else {
        base.initial_state().to_string()
    };
    let _ = writeln!(text, "init {init}");
    let _ = writeln!(text, "actions {}", base.actions().join(" "));
    let _ = writeln!(text, "prob_denominator {}", base.prob_denominator());
    let _ = writeln!(text, "prob_width {}", base.prob_width());
    let _ = writeln!(text, "reward_width {}", base.reward_width());
    let _ = writeln!(text, "transition transition.net");
    let _ = writeln!(text, "reward reward.net");
    write_circuit(dir, "transition.net", base.transition_circuit())?;
    write_circuit(dir, "reward.net", base.reward_circuit())?;
    if let AnyMdp::Bounded(b) = mdp {
        for (a, c) in b.successor_circuits().iter().enumerate() {
            let file = format!("successor_{a}.net");
            let _ = writeln!(
                text,
                "successor {} {file} branching {}",
                base.actions()[a],
                b.max_branching()
            );
            write_circuit(dir, &file, c)?;
        }
    }
    if let Some(t) = horizon {
        let _ = writeln!(text, "horizon {t}");
    }
    let path = dir.join("mdp.txt");
    write_file(&path, &text)?;
    Ok(path)
}

#[derive(Debug, Clone)]
pub enum LoadedPolicy {
    Stationary(StationaryPolicy),
    History(HistoryPolicy),
}

impl LoadedPolicy {
    pub fn as_policy(&self) -> &dyn Policy {
        match self {
            LoadedPolicy::Stationary(p) => p,
            LoadedPolicy::History(p) => p,
        }
    }
}

pub fn load_policy(path: &Path) -> Result<LoadedPolicy> {
    let m = Manifest::read(path)?;
    m.check_keys(&["policy", "kind", "actions", "horizon", "circuit"], &[])?;
    m.one_arg("policy")?;
    let (kind_line, kind) = m.one_arg("kind")?;
    let count: usize = m.number("actions")?;
    let circuit = m.circuit_at("circuit")?;
    let wrap = |e: Error| m.error(kind_line, e.to_string());
    match kind {
        "stationary" => Ok(LoadedPolicy::Stationary(
            StationaryPolicy::new(circuit, count).map_err(wrap)?,
        )),
        "history" => {
            let t: usize = m.number("horizon")?;
            let time = crate::bits::index_width(t + 1);
            let inputs = circuit.num_inputs();
            if inputs < time || !(inputs - time).is_multiple_of(t + 1) {
                return Err(m.error(
                    kind_line,
                    format!("{inputs} inputs do not fit {} slots plus time", t + 1),
                ));
            }
            let n = (inputs - time) / (t + 1);
            Ok(LoadedPolicy::History(
                HistoryPolicy::new(circuit, count, t, n).map_err(wrap)?,
            ))
        }
        other => Err(m.error(
            kind_line,
            format!("kind must be 'stationary' or 'history', got '{other}'"),
        )),
    }
}

/// Writes `<stem>.txt` and `<stem>.net`; returns the manifest path.
pub fn write_policy(dir: &Path, stem: &str, p: &LoadedPolicy) -> Result<PathBuf> {
    let net = format!("{stem}.net");
    let mut text = String::new();
    let (circuit, count) = match p {
        LoadedPolicy::Stationary(s) => (s.circuit(), s.action_count()),
        LoadedPolicy::History(h) => (h.circuit(), h.action_count()),
    };
    let _ = writeln!(text, "policy {}", circuit.name());
    match p {
        LoadedPolicy::Stationary(_) => {
            let _ = writeln!(text, "kind stationary");
            let _ = writeln!(text, "actions {count}");
        }
        LoadedPolicy::History(h) => {
            let _ = writeln!(text, "kind history");
            let _ = writeln!(text, "actions {count}");
            let _ = writeln!(text, "horizon {}", h.horizon());
        }
    }
    let _ = writeln!(text, "circuit {net}");
    write_circuit(dir, &net, circuit)?;
    let path = dir.join(format!("{stem}.txt"));
    write_file(&path, &text)?;
    Ok(path)
}

pub fn load_valuefn(path: &Path) -> Result<ValueCircuit> {
    let m = Manifest::read(path)?;
    m.check_keys(
        &[
            "valuefn",
            "horizon",
            "value_width",
            "value_denominator",
            "circuit",
        ],
        &[],
    )?;
    let (line, _) = m.one_arg("valuefn")?;
    let t: usize = m.number("horizon")?;
    let d: u64 = m.number("value_denominator")?;
    let circuit = m.circuit_at("circuit")?;
    if let Some(w) = m.optional_number::<usize>("value_width")? {
        if w != circuit.num_outputs() {
            let line = m.require("value_width")?.line;
            return Err(m.error(
                line,
                format!(
                    "value_width {w} disagrees with the circuit's {} outputs",
                    circuit.num_outputs()
                ),
            ));
        }
    }
    ValueCircuit::new(circuit, d, t).map_err(|e| m.error(line, e.to_string()))
}

pub fn write_valuefn(dir: &Path, stem: &str, v: &ValueCircuit) -> Result<PathBuf> {
    let net = format!("{stem}.net");
    let mut text = String::new();
    let _ = writeln!(text, "valuefn {}", v.circuit().name());
    let _ = writeln!(text, "horizon {}", v.horizon());
    let _ = writeln!(text, "value_width {}", v.width());
    let _ = writeln!(text, "value_denominator {}", v.denominator());
    let _ = writeln!(text, "circuit {net}");
    write_circuit(dir, &net, v.circuit())?;
    let path = dir.join(format!("{stem}.txt"));
    write_file(&path, &text)?;
    Ok(path)
}

/// The query parameters of a generated instance (`instance.txt`).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InstanceInfo {
    pub kind: String,
    pub horizon: usize,
    pub state: Option<BitVector>,
    pub steps_to_go: Option<usize>,
    pub action: Option<usize>,
    pub size_bound: Option<usize>,
    pub reward_bound: Option<Rational>,
    pub notes: Vec<String>,
}

impl InstanceInfo {
    pub fn of(inst: &ReductionInstance) -> Result<Self> {
        let steps_to_go = match (&inst.state, &inst.layout) {
            (Some(s), Some(layout)) => Some(inst.horizon.saturating_sub(layout.decode(s)?.len())),
            (Some(_), None) => Some(inst.horizon),
            _ => None,
        };
        Ok(InstanceInfo {
            kind: inst.kind.name().to_string(),
            horizon: inst.horizon,
            state: inst.state.clone(),
            steps_to_go,
            action: inst.action,
            size_bound: inst.size_bound,
            reward_bound: inst.reward_bound.clone(),
            notes: inst.notes.clone(),
        })
    }

    pub fn render(&self) -> String {
        let mut text = String::new();
        let _ = writeln!(text, "kind {}", self.kind);
        let _ = writeln!(text, "horizon {}", self.horizon);
        if let Some(s) = &self.state {
            let _ = writeln!(text, "state {s}");
        }
        if let Some(i) = self.steps_to_go {
            let _ = writeln!(text, "steps_to_go {i}");
        }
        if let Some(a) = self.action {
            let _ = writeln!(text, "action {a}");
        }
        if let Some(z) = self.size_bound {
            let _ = writeln!(text, "size_bound {z}");
        }
        if let Some(k) = &self.reward_bound {
            let _ = writeln!(text, "reward_bound {}", rational::fmt(k));
        }
        for note in &self.notes {
            let _ = writeln!(text, "note {note}");
        }
        text
    }

    pub fn load(path: &Path) -> Result<Self> {
        let m = Manifest::read(path)?;
        m.check_keys(
            &[
                "kind",
                "horizon",
                "state",
                "steps_to_go",
                "action",
                "size_bound",
                "reward_bound",
                "note",
            ],
            &["note"],
        )?;
        let (_, kind) = m.one_arg("kind")?;
        let state = match m.find("state") {
            Some(_) => {
                let (line, s) = m.one_arg("state")?;
                Some(s.parse().map_err(|e: Error| m.error(line, e.to_string()))?)
            }
            None => None,
        };
        let reward_bound = match m.find("reward_bound") {
            Some(_) => {
                let (line, k) = m.one_arg("reward_bound")?;
                Some(rational::parse(k).map_err(|e| m.error(line, e.to_string()))?)
            }
            None => None,
        };
        Ok(InstanceInfo {
            kind: kind.to_string(),
            horizon: m.number("horizon")?,
            state,
            steps_to_go: m.optional_number("steps_to_go")?,
            action: m.optional_number("action")?,
            size_bound: m.optional_number("size_bound")?,
            reward_bound,
            notes: m.all("note").map(|e| e.args.join(" ")).collect(),
        })
    }
}

/// Writes a complete instance directory: `mdp.txt`, `instance.txt`,
/// `expected.txt` and, when present, `policy.txt` and `valuefn.txt`.
pub fn write_instance(dir: &Path, inst: &ReductionInstance, expected: &[String]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_mdp(dir, &inst.mdp, Some(inst.horizon))?;
    if let Some(p) = &inst.policy {
        write_policy(dir, "policy", &LoadedPolicy::Stationary(p.clone()))?;
    }
    if let Some(v) = &inst.value {
        write_valuefn(dir, "valuefn", v)?;
    }
    write_file(&dir.join("instance.txt"), &InstanceInfo::of(inst)?.render())?;
    let mut text = expected.join("\n");
    text.push('\n');
    write_file(&dir.join("expected.txt"), &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limits::Limits;
    use crate::mdp::tests::coin_mdp;
    use crate::mdp::MdpModel;
    use crate::reductions::{majsat_to_eval, unsat_to_consistency, Cnf};

    #[test]
    fn succinct_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = AnyMdp::Succinct(coin_mdp(1));
        let path = write_mdp(dir.path(), &m, Some(3)).unwrap();
        let back = load_mdp(&path).unwrap();
        assert_eq!(back.horizon, Some(3));
        let (a, b) = (m.base(), back.mdp.base());
        assert_eq!(a.transition_circuit(), b.transition_circuit());
        assert_eq!(a.actions(), b.actions());
        assert_eq!(a.initial_state(), b.initial_state());
    }

    #[test]
    fn instance_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let inst = majsat_to_eval(&Cnf::from_ints(2, &[&[1, 2]]).unwrap()).unwrap();
        write_instance(dir.path(), &inst, &["reward 3/4".into()]).unwrap();
        let m = load_mdp(&dir.path().join("mdp.txt")).unwrap();
        assert!(m.mdp.as_bounded().is_some());
        let s = m.mdp.base().initial_state().clone();
        let l = Limits::default();
        assert_eq!(
            m.mdp.successors(&s, 1, &l).unwrap(),
            inst.mdp.successors(&s, 1, &l).unwrap()
        );
        let LoadedPolicy::Stationary(p) = load_policy(&dir.path().join("policy.txt")).unwrap()
        else {
            panic!("stationary expected");
        };
        assert_eq!(&p, inst.policy.as_ref().unwrap());
        let info = InstanceInfo::load(&dir.path().join("instance.txt")).unwrap();
        assert_eq!(info, InstanceInfo::of(&inst).unwrap());

        let unsat = unsat_to_consistency(&Cnf::from_ints(1, &[&[1]]).unwrap()).unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        write_instance(dir2.path(), &unsat, &[]).unwrap();
        assert_eq!(
            &load_valuefn(&dir2.path().join("valuefn.txt")).unwrap(),
            unsat.value.as_ref().unwrap()
        );
    }

    #[test]
    fn errors_name_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mdp.txt");
        fs::write(&path, "mdp x\nvars a\nbogus 1\n").unwrap();
        let err = load_mdp(&path).unwrap_err();
        assert!(matches!(err, Error::Manifest { line: 3, .. }), "{err}");
        fs::write(&path, "mdp x\nvars a\ninit 0\nactions go\nprob_denominator 1\ntransition missing.net\nreward r.net\n").unwrap();
        assert!(matches!(load_mdp(&path).unwrap_err(), Error::Io { .. }));
    }
}
