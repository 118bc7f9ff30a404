mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use report::{Emit, Report};
use smdp_core::circuit::{canonical_dnf, dnf_term_count, netlist};
use smdp_core::evaluator::{expected_reward_exact, expected_reward_mc};
use smdp_core::manifest::{
    load_mdp, load_policy, load_valuefn, write_instance, write_policy, InstanceInfo, LoadedPolicy,
};
use smdp_core::mdp::expand;
use smdp_core::oracle::{
    best_next_action, bounded_policy_exists, emajsat_oracle, forall_exists_oracle, model_count,
    sat_oracle, solve_optimal,
};
use smdp_core::rational::{self, Rational};
use smdp_core::reductions::{
    emajsat_to_bounded_policy, forallexists_to_valuefn, majsat_to_eval, sat_to_next_action,
    unsat_to_consistency, Cnf, EmajsatThreshold, ReductionInstance, SatNextMode,
};
use smdp_core::suites::{run_suite, SuiteParams, SUITES};
use smdp_core::value::{
    check_consistency, extract_policy, value_of_history_policy, value_of_policy, Consistency,
    Inconsistency,
};
use smdp_core::{AnyMdp, BitVector, Error, Limits, MdpModel};

#[derive(Parser)]
#[command(
    name = "smdp",
    version,
    about = "Succinct MDPs: generate reduction instances, evaluate policies, check value functions, solve, verify"
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Emit::Text, global = true)]
    emit: Emit,
    /// Ceiling on expanded states; overrides SMDP_LIMIT_STATES.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    limit_states: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GenArgs {
    /// DIMACS CNF file.
    cnf: PathBuf,
    /// Output directory for the instance.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Default)]
struct ModelArgs {
    /// Instance directory written by a gen-* command.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// MDP manifest (defaults to <instance>/mdp.txt).
    #[arg(long)]
    mdp: Option<PathBuf>,
    /// Horizon (defaults to the manifest's).
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Compact,
    Faithful,
}

#[derive(Clone, Copy, ValueEnum)]
enum Threshold {
    Half,
    One,
}

#[derive(Subcommand)]
enum Command {
    /// Next-action instance for SAT.
    GenSatnext {
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long, value_enum, default_value_t = Mode::Compact)]
        mode: Mode,
    },
    /// Policy-evaluation instance for MAJSAT.
    GenMajsat {
        #[command(flatten)]
        gen: GenArgs,
    },
    /// Bounded-policy instance for E-MAJSAT (variables split X | Y in half).
    GenEmajsat {
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long, value_enum, default_value_t = Threshold::Half)]
        threshold: Threshold,
    },
    /// Value-function consistency instance for UNSAT.
    GenUnsatcons {
        #[command(flatten)]
        gen: GenArgs,
    },
    /// Value-function instance for the forall-exists problem.
    GenForall {
        #[command(flatten)]
        gen: GenArgs,
    },
    /// Exact expected reward of a policy.
    Eval {
        #[command(flatten)]
        model: ModelArgs,
        /// Policy manifest (defaults to <instance>/policy.txt).
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Monte-Carlo estimate of the expected reward.
    EvalMc {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Value table E(s, i) of a policy over the reachable states.
    Value {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Is a value-function circuit realized by some policy?
    CheckConsistency {
        #[command(flatten)]
        model: ModelArgs,
        /// Value-function manifest (defaults to <instance>/valuefn.txt).
        #[arg(long)]
        valuefn: Option<PathBuf>,
    },
    /// Actions consistent with a value function.
    ExtractPolicy {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        valuefn: Option<PathBuf>,
        /// Single state to query; all states when omitted.
        #[arg(long)]
        state: Option<String>,
        /// Steps to go for the single query.
        #[arg(long)]
        step: Option<usize>,
    },
    /// Optimal values by backward induction.
    Solve {
        #[command(flatten)]
        model: ModelArgs,
        /// Start state (defaults to the initial state).
        #[arg(long)]
        state: Option<String>,
        /// Print every state's optimal value and actions.
        #[arg(long)]
        table: bool,
    },
    /// Actions some optimal policy takes at a state.
    NextAction {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        state: Option<String>,
        /// Steps to go (defaults to the instance's query or the horizon).
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Is there a policy circuit of at most z gates reaching reward at least k?
    BoundedPolicy {
        #[command(flatten)]
        model: ModelArgs,
        /// Gate bound (defaults to the instance's).
        #[arg(long)]
        z: Option<usize>,
        /// Reward threshold as num/den (defaults to the instance's).
        #[arg(long)]
        k: Option<String>,
        /// Write the witness policy manifest to this directory.
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Canonical full-literal DNF of a netlist.
    Canon {
        netlist: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run a correspondence suite.
    Verify {
        /// One of thm1, thm5, thm6, thm8, thm9, normalization, roundtrip, dnf.
        suite: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        cases: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut limits = Limits::from_env();
    if let Some(n) = cli.limit_states {
        limits.max_states = n as usize;
    }
    match run(&cli, &limits) {
        Ok((report, ok)) => {
            print!("{}", report.render(cli.emit));
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn read_cnf(path: &Path) -> Result<Cnf> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.parse::<Cnf>()
        .with_context(|| format!("parsing {}", path.display()))
}

fn parse_state(s: &str) -> Result<BitVector> {
    s.parse::<BitVector>().map_err(|e| anyhow!("--state: {e}"))
}

struct Loaded {
    mdp: AnyMdp,
    horizon: usize,
    info: Option<InstanceInfo>,
}

impl ModelArgs {
    fn file(&self, explicit: &Option<PathBuf>, default: &str) -> Result<PathBuf> {
        match (explicit, &self.instance) {
            (Some(p), _) => Ok(p.clone()),
            (None, Some(dir)) => Ok(dir.join(default)),
            (None, None) => {
                bail!("pass --instance <dir> or the {default} manifest path explicitly")
            }
        }
    }

    fn load(&self) -> Result<Loaded> {
        let path = self.file(&self.mdp, "mdp.txt")?;
        let loaded = load_mdp(&path)?;
        let info = match &self.instance {
            Some(dir) if dir.join("instance.txt").exists() => {
                Some(InstanceInfo::load(&dir.join("instance.txt"))?)
            }
            _ => None,
        };
        let horizon = self
            .horizon
            .or(loaded.horizon)
            .or(info.as_ref().map(|i| i.horizon))
            .ok_or_else(|| {
                anyhow!(
                    "no horizon: pass --horizon or declare one in {}",
                    path.display()
                )
            })?;
        Ok(Loaded {
            mdp: loaded.mdp,
            horizon,
            info,
        })
    }
}

fn action_names(m: &AnyMdp, actions: &[usize]) -> String {
    let names = m.base().actions();
    actions
        .iter()
        .map(|&a| names[a].as_str())
        .collect::<Vec<_>>()
        .join(",")
}

fn run(cli: &Cli, limits: &Limits) -> Result<(Report, bool)> {
    let mut r = Report::default();
    let mut ok = true;
    match &cli.command {
        Command::GenSatnext { gen, mode } => {
            let q = read_cnf(&gen.cnf)?;
            let mode = match mode {
                Mode::Compact => SatNextMode::Compact,
                Mode::Faithful => SatNextMode::Faithful,
            };
            let inst = sat_to_next_action(&q, mode)?;
            let expected = oracle_lines(|| {
                let sat = sat_oracle(&q, limits)?;
                Ok(vec![
                    format!("satisfiable {}", yes_no(sat)),
                    format!("expected_action {}", if sat { "S" } else { "U" }),
                    format!("query_action_is_next {}", yes_no(sat)),
                ])
            });
            emit_instance(&mut r, gen, &q, &inst, &expected)?;
        }
        Command::GenMajsat { gen } => {
            let q = read_cnf(&gen.cnf)?;
            let inst = majsat_to_eval(&q)?;
            let expected = oracle_lines(|| {
                let count = model_count(&q, limits)?;
                let reward = Rational::new(count.into(), (1u64 << q.num_vars()).into());
                Ok(vec![
                    format!("model_count {count}"),
                    format!("expected_reward {}", rational::fmt(&reward)),
                    "threshold 1/2".to_string(),
                    format!("majsat {}", yes_no(reward > rational::ratio(1, 2))),
                ])
            });
            emit_instance(&mut r, gen, &q, &inst, &expected)?;
        }
        Command::GenEmajsat { gen, threshold } => {
            let q = read_cnf(&gen.cnf)?;
            let t = match threshold {
                Threshold::Half => EmajsatThreshold::Half,
                Threshold::One => EmajsatThreshold::One,
            };
            let inst = emajsat_to_bounded_policy(&q, t)?;
            let expected = oracle_lines(|| {
                let yes = emajsat_oracle(&q, limits)?;
                Ok(vec![
                    format!("emajsat {}", yes_no(yes)),
                    format!("policy_within_bound_exists {}", yes_no(yes)),
                ])
            });
            emit_instance(&mut r, gen, &q, &inst, &expected)?;
        }
        Command::GenUnsatcons { gen } => {
            let q = read_cnf(&gen.cnf)?;
            let inst = unsat_to_consistency(&q)?;
            let expected = oracle_lines(|| {
                let count = model_count(&q, limits)?;
                Ok(vec![
                    format!("model_count {count}"),
                    format!(
                        "expected {}",
                        if count == 0 {
                            "consistent"
                        } else {
                            "inconsistent"
                        }
                    ),
                ])
            });
            emit_instance(&mut r, gen, &q, &inst, &expected)?;
        }
        Command::GenForall { gen } => {
            let q = read_cnf(&gen.cnf)?;
            let inst = forallexists_to_valuefn(&q)?;
            let expected = oracle_lines(|| {
                let yes = forall_exists_oracle(&q, limits)?;
                Ok(vec![
                    format!("forall_exists {}", yes_no(yes)),
                    format!("reward_one_value_function_exists {}", yes_no(yes)),
                ])
            });
            emit_instance(&mut r, gen, &q, &inst, &expected)?;
        }
        Command::Eval { model, policy } => {
            let m = model.load()?;
            let p = load_policy(&model.file(policy, "policy.txt")?)?;
            let report = expected_reward_exact(&m.mdp, p.as_policy(), m.horizon, limits)?;
            r.field("expected_reward", rational::fmt(&report.expected_reward))
                .field("horizon", m.horizon)
                .field("trajectories", report.trajectory_count);
            for (d, v) in report.per_depth.iter().enumerate() {
                r.field(&format!("depth_{d}"), rational::fmt(v));
            }
        }
        Command::EvalMc {
            model,
            policy,
            samples,
            seed,
        } => {
            let m = model.load()?;
            let p = load_policy(&model.file(policy, "policy.txt")?)?;
            let est =
                expected_reward_mc(&m.mdp, p.as_policy(), m.horizon, *samples, *seed, limits)?;
            r.field("estimate", format!("{:.6}", est.mean))
                .field("std_error_monte_carlo", format!("{:.6}", est.std_error))
                .field("samples", est.samples)
                .field("seed", seed)
                .field("horizon", m.horizon);
        }
        Command::Value { model, policy } => {
            let m = model.load()?;
            match load_policy(&model.file(policy, "policy.txt")?)? {
                LoadedPolicy::Stationary(p) => {
                    let e = expand(&m.mdp, m.mdp.base().initial_state(), m.horizon, limits)?;
                    let table = value_of_policy(&e, &p)?;
                    r.field("value", rational::fmt(&table.row(e.initial())[m.horizon]))
                        .field("states", e.num_states());
                    r.columns(&["state", "steps_to_go", "value"]);
                    for (k, s) in table.states().iter().enumerate() {
                        for (i, v) in table.row(k).iter().enumerate() {
                            r.row(vec![s.to_string(), i.to_string(), rational::fmt(v)]);
                        }
                    }
                }
                LoadedPolicy::History(p) => {
                    let table = value_of_history_policy(&m.mdp, &p, m.horizon, limits)?;
                    let root = vec![m.mdp.base().initial_state().clone()];
                    r.field(
                        "value",
                        rational::fmt(table.get(&root).expect("root history")),
                    )
                    .field("histories", table.values.len());
                    r.columns(&["history", "steps_to_go", "value"]);
                    for (h, v) in &table.values {
                        let text = h
                            .iter()
                            .map(ToString::to_string)
                            .collect::<Vec<_>>()
                            .join(",");
                        r.row(vec![
                            text,
                            (m.horizon + 1 - h.len()).to_string(),
                            rational::fmt(v),
                        ]);
                    }
                }
            }
        }
        Command::CheckConsistency { model, valuefn } => {
            let m = model.load()?;
            let v = load_valuefn(&model.file(valuefn, "valuefn.txt")?)?;
            match check_consistency(&m.mdp, &v, limits)? {
                Consistency::Consistent { witness } => {
                    r.field("result", "consistent")
                        .field("states_checked", witness.len());
                }
                Consistency::Inconsistent { at, reason } => {
                    ok = false;
                    r.field("result", "inconsistent")
                        .field("state", &at)
                        .field("reason", describe(&reason));
                }
            }
        }
        Command::ExtractPolicy {
            model,
            valuefn,
            state,
            step,
        } => {
            let m = model.load()?;
            let v = load_valuefn(&model.file(valuefn, "valuefn.txt")?)?;
            let names = m.mdp.base().actions().to_vec();
            let queries: Vec<(BitVector, usize)> = match (state, step) {
                (Some(s), Some(i)) => vec![(parse_state(s)?, *i)],
                (None, None) => {
                    let n = m.mdp.base().num_vars();
                    if n > limits.max_enum_vars {
                        bail!("{n} state variables: pass --state and --step");
                    }
                    BitVector::all(n)
                        .flat_map(|s| (1..=v.horizon()).map(move |i| (s.clone(), i)))
                        .collect()
                }
                _ => bail!("--state and --step go together"),
            };
            r.columns(&["state", "steps_to_go", "action"]);
            for (s, i) in queries {
                match extract_policy(&m.mdp, &v, &s, i, limits) {
                    Ok(a) => {
                        r.row(vec![s.to_string(), i.to_string(), names[a].clone()]);
                    }
                    Err(Error::NoConsistentAction { .. }) => {
                        ok = false;
                        r.row(vec![s.to_string(), i.to_string(), "none".into()]);
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
        Command::Solve {
            model,
            state,
            table,
        } => {
            let m = model.load()?;
            let start = match state {
                Some(s) => parse_state(s)?,
                None => m.mdp.base().initial_state().clone(),
            };
            let e = expand(&m.mdp, &start, m.horizon, limits)?;
            let sol = solve_optimal(&e)?;
            r.field("state", &start)
                .field("steps_to_go", m.horizon)
                .field(
                    "optimal_value",
                    rational::fmt(&sol.values.row(0)[m.horizon]),
                )
                .field(
                    "optimal_actions",
                    sol.optimal_actions(0, m.horizon)
                        .map_or("-".into(), |a| action_names(&m.mdp, a)),
                )
                .field("states", e.num_states());
            if *table {
                r.columns(&["state", "steps_to_go", "value", "optimal_actions"]);
                for k in 0..e.num_states() {
                    for i in 0..=e.budget(k) {
                        let acts = sol
                            .optimal_actions(k, i)
                            .map_or("-".into(), |a| action_names(&m.mdp, a));
                        r.row(vec![
                            e.state(k).to_string(),
                            i.to_string(),
                            rational::fmt(&sol.values.row(k)[i]),
                            acts,
                        ]);
                    }
                }
            }
        }
        Command::NextAction {
            model,
            state,
            steps,
        } => {
            let m = model.load()?;
            let info = m.info.as_ref();
            let s = match (state, info.and_then(|i| i.state.clone())) {
                (Some(s), _) => parse_state(s)?,
                (None, Some(s)) => s,
                (None, None) => m.mdp.base().initial_state().clone(),
            };
            let steps = steps
                .or(if state.is_none() {
                    info.and_then(|i| i.steps_to_go)
                } else {
                    None
                })
                .unwrap_or(m.horizon);
            let ans = best_next_action(&m.mdp, &s, steps, limits)?;
            r.field("state", &s)
                .field("steps_to_go", steps)
                .field("best", action_names(&m.mdp, &ans.actions))
                .field("value", rational::fmt(&ans.value));
            for (a, v) in ans.action_values.iter().enumerate() {
                r.field(
                    &format!("value_{}", m.mdp.base().actions()[a]),
                    rational::fmt(v),
                );
            }
            if let Some(q) = info.and_then(|i| i.action) {
                if state.is_none() {
                    r.field("query_action", &m.mdp.base().actions()[q])
                        .field("query_action_is_next", yes_no(ans.actions.contains(&q)));
                }
            }
        }
        Command::BoundedPolicy {
            model,
            z,
            k,
            witness_out,
        } => {
            let m = model.load()?;
            let info = m.info.as_ref();
            let z = z
                .or(info.and_then(|i| i.size_bound))
                .ok_or_else(|| anyhow!("no gate bound: pass --z"))?;
            let k = match (k, info.and_then(|i| i.reward_bound.clone())) {
                (Some(text), _) => rational::parse(text).map_err(|e| anyhow!("--k: {e}"))?,
                (None, Some(k)) => k,
                (None, None) => bail!("no reward threshold: pass --k"),
            };
            let ans = bounded_policy_exists(&m.mdp, m.horizon, z, &k, limits)?;
            r.field("exists", yes_no(ans.exists))
                .field("z", z)
                .field("k", rational::fmt(&k))
                .field("optimum", rational::fmt(&ans.optimum))
                .field("method", format!("{:?}", ans.method))
                .field("decision_states", ans.decision_states)
                .field("candidates", ans.candidates);
            if let Some(v) = &ans.witness_reward {
                r.field("witness_reward", rational::fmt(v));
            }
            if let (Some(w), Some(dir)) = (&ans.witness, witness_out) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                let path = write_policy(dir, "witness", &LoadedPolicy::Stationary(w.clone()))?;
                r.field("witness_gates", w.circuit().size())
                    .field("written", path.display());
            }
        }
        Command::Canon { netlist: path, out } => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let c = netlist::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
            let d = canonical_dnf(&c)?;
            let serialized = netlist::serialize(&d);
            match out {
                Some(o) => {
                    fs::write(o, &serialized)
                        .with_context(|| format!("writing {}", o.display()))?;
                    r.field("inputs", d.num_inputs()).field("gates", d.size());
                    for k in 0..d.num_outputs() {
                        r.field(&format!("terms_{k}"), dnf_term_count(&d, k));
                    }
                    r.field("written", o.display());
                }
                None => print!("{serialized}"),
            }
        }
        Command::Verify {
            suite,
            n,
            cases,
            seed,
        } => {
            if !SUITES.contains(&suite.as_str()) {
                bail!("unknown suite '{suite}' (known: {})", SUITES.join(", "));
            }
            let params = SuiteParams {
                n: *n,
                cases: *cases,
                seed: *seed,
                limits: limits.clone(),
            };
            let rep = run_suite(suite, &params)?;
            ok = rep.all_pass();
            r.field("suite", suite)
                .field("seed", seed)
                .field("passed", format!("{}/{}", rep.passed(), rep.rows.len()))
                .field("verdict", if ok { "pass" } else { "fail" });
            r.columns(&["id", "expected", "got", "verdict"]);
            for row in rep.rows {
                r.row(vec![
                    row.id,
                    row.expected,
                    row.got,
                    if row.pass { "pass" } else { "FAIL" }.into(),
                ]);
            }
        }
    }
    Ok((r, ok))
}

fn describe(reason: &Inconsistency) -> String {
    match reason {
        Inconsistency::BaseCase { value, reward } => {
            format!("E(s,0) = {} but r(s) = {reward}", rational::fmt(value))
        }
        Inconsistency::NoAction => "no action satisfies the recursion at every step".to_string(),
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Oracle answers for `expected.txt`, or a note when the formula is too big
/// to enumerate.
fn oracle_lines(f: impl FnOnce() -> smdp_core::Result<Vec<String>>) -> Vec<String> {
    match f() {
        Ok(lines) => lines,
        Err(e) => vec![format!("oracle_skipped {e}")],
    }
}

fn emit_instance(
    r: &mut Report,
    gen: &GenArgs,
    q: &Cnf,
    inst: &ReductionInstance,
    expected: &[String],
) -> Result<()> {
    let mut lines = vec![format!("oracle {}", inst.oracle)];
    lines.extend(expected.iter().cloned());
    write_instance(&gen.out, inst, &lines)?;
    fs::write(gen.out.join("formula.cnf"), q.to_dimacs())
        .with_context(|| format!("writing {}", gen.out.display()))?;
    r.field("instance", gen.out.display())
        .field("kind", inst.kind.name())
        .field("variables", inst.mdp.base().num_vars())
        .field("horizon", inst.horizon);
    for line in expected {
        let (k, v) = line.split_once(' ').unwrap_or((line, ""));
        r.field(k, v);
    }
    Ok(())
}
