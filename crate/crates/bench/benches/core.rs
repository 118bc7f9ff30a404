use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use smdp_bench::{mdp_with_policy, rng, three_cnf};
use smdp_core::circuit::canonical_dnf;
use smdp_core::evaluator::{expected_reward_exact, expected_reward_mc};
use smdp_core::gen::random_circuit;
use smdp_core::mdp::expand;
use smdp_core::oracle::{instance_next_action, model_count, solve_optimal};
use smdp_core::reductions::{majsat_to_eval, sat_to_next_action, SatNextMode};
use smdp_core::value::value_of_policy;
use smdp_core::Limits;

fn evaluation(c: &mut Criterion) {
    let limits = Limits::default();
    let mut g = c.benchmark_group("evaluate");
    for horizon in [2usize, 4, 6] {
        let (m, p) = mdp_with_policy(4, 3, 0);
        g.bench_with_input(
            BenchmarkId::new("exact_trajectories", horizon),
            &horizon,
            |b, &t| b.iter(|| expected_reward_exact(&m, &p, t, &limits).unwrap()),
        );
        g.bench_with_input(
            BenchmarkId::new("value_recursion", horizon),
            &horizon,
            |b, &t| {
                b.iter(|| {
                    let e = expand(&m, m.initial_state(), t, &limits).unwrap();
                    value_of_policy(&e, &p).unwrap()
                })
            },
        );
    }
    let (m, p) = mdp_with_policy(4, 3, 0);
    g.bench_function("monte_carlo_1000", |b| {
        b.iter(|| expected_reward_mc(&m, &p, 4, 1000, 0, &limits).unwrap())
    });
    g.finish();
}

fn solving(c: &mut Criterion) {
    let limits = Limits::default();
    let mut g = c.benchmark_group("solve");
    for n in [3usize, 5] {
        let (m, _) = mdp_with_policy(n, 3, 1);
        g.bench_with_input(BenchmarkId::new("backward_induction_T4", n), &n, |b, _| {
            b.iter(|| {
                let e = expand(&m, m.initial_state(), 4, &limits).unwrap();
                solve_optimal(&e).unwrap()
            })
        });
    }
    let q = three_cnf(3, 2);
    let inst = sat_to_next_action(&q, SatNextMode::Compact).unwrap();
    g.bench_function("satnext_compact_n3", |b| {
        b.iter(|| instance_next_action(black_box(&inst), &limits).unwrap())
    });
    g.finish();
}

fn reductions(c: &mut Criterion) {
    let limits = Limits::default();
    let mut g = c.benchmark_group("reductions");
    for n in [4usize, 8, 10] {
        let q = three_cnf(n, 3);
        g.bench_with_input(BenchmarkId::new("majsat_build_and_eval", n), &q, |b, q| {
            b.iter(|| {
                let inst = majsat_to_eval(q).unwrap();
                expected_reward_exact(
                    &inst.mdp,
                    inst.policy.as_ref().unwrap(),
                    inst.horizon,
                    &limits,
                )
                .unwrap()
            })
        });
        g.bench_with_input(BenchmarkId::new("model_count", n), &q, |b, q| {
            b.iter(|| model_count(q, &limits).unwrap())
        });
    }
    g.finish();
}

fn circuits(c: &mut Criterion) {
    let mut g = c.benchmark_group("circuits");
    for n in [4usize, 8, 12] {
        let circuit = random_circuit(&mut rng(4), "c", n, 60, 2).unwrap();
        g.bench_with_input(BenchmarkId::new("canonical_dnf", n), &circuit, |b, c| {
            b.iter(|| canonical_dnf(c).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, evaluation, solving, reductions, circuits);
criterion_main!(benches);
