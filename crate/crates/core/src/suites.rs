//! Correspondence suites: each case builds an instance, asks the library for
//! an answer and compares it with a brute-force oracle.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitVector;
use crate::circuit::{canonical_dnf, dnf_term_count, equivalent, netlist};
use crate::error::{Error, Result};
use crate::evaluator::{expected_reward_exact, trajectories};
use crate::gen::{
    random_bounded_mdp, random_circuit, random_cnf, random_explicit_policy, random_mdp,
    random_mixed_cnf, random_policy, MdpShape,
};
use crate::limits::Limits;
use crate::mdp::{expand, validate, AnyMdp, MdpModel, ValidateOptions};
use crate::oracle::{
    bounded_policy_exists, emajsat_oracle, forall_exists_oracle, instance_next_action, model_count,
    sat_oracle, solve_optimal,
};
use crate::policy::compile_explicit;
use crate::rational::{self, int, Rational};
use crate::reductions::{
    emajsat_to_bounded_policy, forallexists_to_valuefn, majsat_to_eval, sat_to_next_action,
    unsat_to_consistency, Cnf, EmajsatThreshold, Lit, SatNextMode,
};
use crate::value::{
    check_consistency, check_table_consistency, extract_timed_policy, value_of_policy,
};

pub const SUITES: &[&str] = &[
    "thm1",
    "thm5",
    "thm6",
    "thm8",
    "thm9",
    "normalization",
    "roundtrip",
    "dnf",
];

#[derive(Debug, Clone, Default)]
pub struct SuiteParams {
    /// Size parameter; each suite documents its reading and default.
    pub n: Option<usize>,
    /// Number of random cases.
    pub cases: Option<usize>,
    pub seed: u64,
    pub limits: Limits,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseRow {
    pub id: String,
    pub expected: String,
    pub got: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteReport {
    pub suite: String,
    pub rows: Vec<CaseRow>,
}

impl SuiteReport {
    pub fn passed(&self) -> usize {
        self.rows.iter().filter(|r| r.pass).count()
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

fn row(
    id: impl Into<String>,
    expected: impl Into<String>,
    got: impl Into<String>,
    pass: bool,
) -> CaseRow {
    CaseRow {
        id: id.into(),
        expected: expected.into(),
        got: got.into(),
        pass,
    }
}

pub fn run_suite(name: &str, params: &SuiteParams) -> Result<SuiteReport> {
    let rows = match name {
        "thm1" => thm1(params)?,
        "thm5" => thm5(params)?,
        "thm6" => thm6(params)?,
        "thm8" => thm8(params)?,
        "thm9" => thm9(params)?,
        "normalization" => normalization(params)?,
        "roundtrip" => roundtrip(params)?,
        "dnf" => dnf(params)?,
        other => {
            return Err(Error::InvalidModel(format!(
                "unknown suite '{other}' (known: {})",
                SUITES.join(", ")
            )))
        }
    };
    Ok(SuiteReport {
        suite: name.to_string(),
        rows,
    })
}

fn compact_formula(q: &Cnf) -> String {
    if q.is_empty() {
        return "true".into();
    }
    q.clauses()
        .iter()
        .map(|c| {
            format!(
                "({})",
                c.iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("|")
            )
        })
        .collect::<Vec<_>>()
        .join("&")
}

/// Every formula over `n ≤ max_vars` variables made of at most three
/// distinct clauses, each a multiset of three literals.
pub fn satnext_grid(max_vars: usize) -> Vec<Cnf> {
    let mut out = Vec::new();
    for n in 1..=max_vars {
        let lits = 2 * n as u64;
        let mut clauses = Vec::new();
        for a in 0..lits {
            for b in a..lits {
                for c in b..lits {
                    clauses.push(vec![
                        Lit::from_code(a),
                        Lit::from_code(b),
                        Lit::from_code(c),
                    ]);
                }
            }
        }
        let m = clauses.len();
        out.push(Cnf::new(n, vec![]).expect("empty formula"));
        for i in 0..m {
            out.push(Cnf::new(n, vec![clauses[i].clone()]).expect("valid"));
            for j in i + 1..m {
                out.push(Cnf::new(n, vec![clauses[i].clone(), clauses[j].clone()]).expect("valid"));
                for k in j + 1..m {
                    out.push(
                        Cnf::new(
                            n,
                            vec![clauses[i].clone(), clauses[j].clone(), clauses[k].clone()],
                        )
                        .expect("valid"),
                    );
                }
            }
        }
    }
    out
}

/// Random three-literal formulas over exactly `n` variables.
pub fn satnext_random(n: usize, cases: usize, seed: u64) -> Result<Vec<Cnf>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..cases)
        .map(|_| {
            let m = rng.random_range(1..=8);
            random_cnf(&mut rng, n, m, 3)
        })
        .collect()
}

/// Outcome of one next-action case.
#[derive(Debug, Clone)]
pub struct SatNextCheck {
    pub satisfiable: bool,
    pub best: Vec<String>,
    pub s_value: Rational,
    pub u_value: Rational,
    pub pass: bool,
}

pub fn check_satnext(q: &Cnf, limits: &Limits) -> Result<SatNextCheck> {
    let inst = sat_to_next_action(q, SatNextMode::Compact)?;
    let ans = instance_next_action(&inst, limits)?;
    let names = inst.mdp.base().actions();
    let (s, u) = (
        inst.mdp.base().action_index("S").expect("S action"),
        inst.mdp.base().action_index("U").expect("U action"),
    );
    let satisfiable = sat_oracle(q, limits)?;
    let n = q.num_vars() as u32;
    let bound = Rational::new(
        ((1i64 << n) - 1 + (1i64 << (n + 1))).into(),
        (1i64 << n).into(),
    );
    let best: Vec<String> = ans.actions.iter().map(|&a| names[a].clone()).collect();
    let want = if satisfiable { vec![s] } else { vec![u] };
    let pass = ans.actions == want
        && ans.action_values[u] == int(2)
        && (!satisfiable || ans.action_values[s] >= bound);
    Ok(SatNextCheck {
        satisfiable,
        best,
        s_value: ans.action_values[s].clone(),
        u_value: ans.action_values[u].clone(),
        pass,
    })
}

/// `n` bounds the variable count: exhaustive grid up to `min(n, 2)`, then
/// `cases` random formulas over exactly 3 variables when `n ≥ 3`.
/// Defaults: `n = 3`, `cases = 100`.
fn thm1(p: &SuiteParams) -> Result<Vec<CaseRow>> {
    let n = p.n.unwrap_or(3);
    let mut formulas = satnext_grid(n.min(2));
    if n >= 3 {
        formulas.extend(satnext_random(3, p.cases.unwrap_or(100), p.seed)?);
    }
    formulas
        .iter()
        .map(|q| {
            let c = check_satnext(q, &p.limits)?;
            Ok(row(
                format!("n={} {}", q.num_vars(), compact_formula(q)),
                if c.satisfiable { "S" } else { "U" },
                format!(
                    "{{{}}} S={} U={}",
                    c.best.join(","),
                    rational::fmt(&c.s_value),
                    rational::fmt(&c.u_value)
                ),
                c.pass,
            ))
        })
        .collect()
}

/// `cases` random CNFs over 1 to `n` variables. Defaults: `n = 6`, `cases = 50`.
fn thm5(p: &SuiteParams) -> Result<Vec<CaseRow>> {
    let n = p.n.unwrap_or(6).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    (0..p.cases.unwrap_or(50))
        .map(|i| {
            let vars = 1 + i % n;
            let q = random_mixed_cnf(&mut rng, vars, 2 * vars, 3)?;
            let inst = majsat_to_eval(&q)?;
            let policy = inst.policy.as_ref().expect("policy");
            let got =
                expected_reward_exact(&inst.mdp, policy, inst.horizon, &p.limits)?.expected_reward;
            let want = Rational::new(model_count(&q, &p.limits)?.into(), (1u64 << vars).into());
            Ok(row(
                format!("case{i} n={vars}"),
                rational::fmt(&want),
                rational::fmt(&got),
                got == want,
            ))
        })
        .collect()
}

/// The sixteen formulas `(±x1 ∨ ±y1) ∧ (±x1 ∨ ±y1)`.
pub fn emajsat_pair_grid() -> Vec<Cnf> {
    let clauses: Vec<[i64; 2]> = vec![[1, 2], [1, -2], [-1, 2], [-1, -2]];
    let mut out = Vec::new();
    for a in &clauses {
        for b in &clauses {
            out.push(Cnf::from_ints(2, &[a, b]).expect("valid"));
        }
    }
    out
}

/// The fixed grid of `thm6`; `n`, `cases` are ignored.
fn thm6(p: &SuiteParams) -> Result<Vec<CaseRow>> {
    emajsat_pair_grid()
        .iter()
        .map(|q| {
            let inst = emajsat_to_bounded_policy(q, EmajsatThreshold::Half)?;
            let k = inst.reward_bound.clone().expect("threshold");
            let z = inst.size_bound.expect("size bound");
            let ans = bounded_policy_exists(&inst.mdp, inst.horizon, z, &k, &p.limits)?;
            let want = emajsat_oracle(q, &p.limits)?;
            Ok(row(
                format!("{} z={z} k={}", compact_formula(q), rational::fmt(&k)),
                yes_no(want),
                format!("{} ({:?})", yes_no(ans.exists), ans.method),
                ans.exists == want,
            ))
        })
        .collect()
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// `cases` random CNFs over 1 to `n` variables. Defaults: `n = 6`, `cases = 50`.
fn thm8(p: &SuiteParams) -> Result<Vec<CaseRow>> {
    let n = p.n.unwrap_or(6).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    (0..p.cases.unwrap_or(50))
        .map(|i| {
            let vars = 1 + i % n;
            let q = random_mixed_cnf(&mut rng, vars, 3 * vars, 2)?;
            let inst = unsat_to_consistency(&q)?;
            let c = check_consistency(&inst.mdp, inst.value.as_ref().expect("value"), &p.limits)?;
            let want = model_count(&q, &p.limits)? == 0;
            let label = |b: bool| if b { "consistent" } else { "inconsistent" };
            Ok(row(
                format!("case{i} n={vars}"),
                label(want),
                label(c.is_consistent()),
                c.is_consistent() == want,
            ))
        })
        .collect()
}

/// Formulas over `x1, x2, y1, y2`: the empty formula, the 24 two-literal
/// clauses on distinct variables, and every multiset of two such clauses.
pub fn forall_grid() -> Vec<Cnf> {
    let mut clauses = Vec::new();
    for a in 0..4usize {
        for b in a + 1..4 {
            for (sa, sb) in [(true, true), (true, false), (false, true), (false, false)] {
                clauses.push(vec![
                    Lit {
                        var: a,
                        positive: sa,
                    },
                    Lit {
                        var: b,
                        positive: sb,
                    },
                ]);
            }
        }
    }
    let mut out = vec![Cnf::new(4, vec![]).expect("empty")];
    for c in &clauses {
        out.push(Cnf::new(4, vec![c.clone()]).expect("valid"));
    }
    for i in 0..clauses.len() {
        for j in i..clauses.len() {
            out.push(Cnf::new(4, vec![clauses[i].clone(), clauses[j].clone()]).expect("valid"));
        }
    }
    out
}

/// Whether the instance admits a reward-1 policy, certified by the value
/// table of the greedy optimal policy being consistent.
pub fn forall_reward_one(q: &Cnf, limits: &Limits) -> Result<(bool, Rational)> {
    let inst = forallexists_to_valuefn(q)?;
    let e = expand(
        &inst.mdp,
        inst.mdp.base().initial_state(),
        inst.horizon,
        limits,
    )?;
    let sol = solve_optimal(&e)?;
    let best = sol.values.row(e.initial())[inst.horizon].clone();
    let table = value_of_policy(&e, &sol.greedy)?;
    let certified =
        table == sol.values && check_table_consistency(&inst.mdp, &table, limits)?.is_consistent();
    Ok((certified && best == int(1), best))
}

/// The fixed grid of `thm9`; `n`, `cases` are ignored.
fn thm9(p: &SuiteParams) -> Result<Vec<CaseRow>> {
    forall_grid()
        .iter()
        .map(|q| {
            let (got, best) = forall_reward_one(q, &p.limits)?;
            let want = forall_exists_oracle(q, &p.limits)?;
            Ok(row(
                compact_formula(q),
                yes_no(want),
                format!("{} (best {})", yes_no(got), rational::fmt(&best)),
                got == want,
            ))
        })
        .collect()
}

fn small_shape<R: Rng>(rng: &mut R, max_vars: usize, max_support: usize) -> MdpShape {
    MdpShape {
        num_vars: rng.random_range(1..=max_vars),
        actions: rng.random_range(1..=3),
        denominator: [1, 2, 3, 4, 6, 12][rng.random_range(0..6)],
        max_support,
        min_reward: -3,
        max_reward: 5,
    }
}

/// Random MDPs over 1 to `n` variables with random policies: exact
/// evaluation against the value recursion and per-depth normalization.
/// Defaults: `n = 4`, `cases = 50`.
fn normalization(p: &SuiteParams) -> Result<Vec<CaseRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut rows = Vec::new();
    for i in 0..p.cases.unwrap_or(50) {
        let shape = small_shape(&mut rng, p.n.unwrap_or(4), 4);
        let horizon = rng.random_range(0..=4);
        let m = AnyMdp::Succinct(random_mdp(&mut rng, &format!("m{i}"), &shape)?);
        let valid = validate(&m, &ValidateOptions::default())?.is_ok();
        let policy = random_policy(&mut rng, shape.num_vars, shape.actions)?;
        let report = expected_reward_exact(&m, &policy, horizon, &p.limits)?;
        let e = expand(&m, m.base().initial_state(), horizon, &p.limits)?;
        let recursion = value_of_policy(&e, &policy)?.row(e.initial())[horizon].clone();
        let mut mass: BTreeMap<usize, Rational> = BTreeMap::new();
        for t in trajectories(&m, &policy, horizon, &p.limits)? {
            *mass
                .entry(t.states.len() - 1)
                .or_insert_with(rational::zero) += t.probability;
        }
        let normalized = (0..=horizon).all(|d| mass.get(&d) == Some(&int(1)));
        rows.push(row(
            format!(
                "case{i} n={} |A|={} D={} T={horizon}",
                shape.num_vars, shape.actions, shape.denominator
            ),
            format!("valid, mass 1, R={}", rational::fmt(&recursion)),
            format!(
                "{}, mass {}, R={}",
                if valid { "valid" } else { "invalid" },
                if normalized { "1" } else { "off" },
                rational::fmt(&report.expected_reward)
            ),
            valid && normalized && report.expected_reward == recursion,
        ));
    }
    Ok(rows)
}

/// Extraction round trips on random bounded-action MDPs over 1 to `n`
/// variables, plus netlist round trips. Defaults: `n = 4`, `cases = 25`.
fn roundtrip(p: &SuiteParams) -> Result<Vec<CaseRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut rows = Vec::new();
    for i in 0..p.cases.unwrap_or(25) {
        let b = rng.random_range(1..=4);
        let shape = small_shape(&mut rng, p.n.unwrap_or(4), b);
        let horizon = rng.random_range(1..=4);
        let m = random_bounded_mdp(&mut rng, &format!("b{i}"), &shape)?;
        let policy = random_policy(&mut rng, shape.num_vars, shape.actions)?;
        let e = expand(&m, m.base().initial_state(), horizon, &p.limits)?;
        let table = value_of_policy(&e, &policy)?;
        let extracted = extract_timed_policy(&m, &table, &p.limits)?;
        let again = value_of_policy(&e, &extracted)?;
        rows.push(row(
            format!("extract{i} n={} B={b} T={horizon}", shape.num_vars),
            "identical table",
            if again == table {
                "identical table"
            } else {
                "different table"
            },
            again == table,
        ));

        let c = random_circuit(&mut rng, &format!("net{i}"), shape.num_vars + 2, 50, 3)?;
        let back = netlist::parse(&netlist::serialize(&c))?;
        rows.push(row(
            format!("netlist{i}"),
            "equal",
            if back == c { "equal" } else { "different" },
            back == c,
        ));
    }
    Ok(rows)
}

/// Random circuits over 1 to `n` inputs: DNF equivalence and term bound,
/// and compile round trips of random explicit policies.
/// Defaults: `n = 8`, `cases = 100`.
fn dnf(p: &SuiteParams) -> Result<Vec<CaseRow>> {
    let n = p.n.unwrap_or(8).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut rows = Vec::new();
    for i in 0..p.cases.unwrap_or(100) {
        let inputs = 1 + i % n;
        let outputs = rng.random_range(1..=3);
        let gates = rng.random_range(1..=40);
        let c = random_circuit(&mut rng, &format!("c{i}"), inputs, gates, outputs)?;
        let d = canonical_dnf(&c)?;
        let same = equivalent(&c, &d, n)?;
        let max_terms = (0..outputs)
            .map(|k| dnf_term_count(&d, k))
            .max()
            .unwrap_or(0);
        let bounded = max_terms <= 1 << inputs;
        rows.push(row(
            format!("dnf{i} n={inputs}"),
            format!("equivalent, terms <= {}", 1 << inputs),
            format!(
                "{}, terms {max_terms}",
                if same { "equivalent" } else { "different" }
            ),
            same && bounded,
        ));

        let actions = rng.random_range(1..=5);
        let table = random_explicit_policy(&mut rng, inputs, actions)?;
        let compiled = compile_explicit(&table, inputs, &p.limits)?;
        let agrees = BitVector::all(inputs).all(|s| compiled.decide(&s).ok() == table.get(&s));
        rows.push(row(
            format!("compile{i} n={inputs} |A|={actions}"),
            "agrees",
            if agrees { "agrees" } else { "differs" },
            agrees,
        ));
    }
    Ok(rows)
}
