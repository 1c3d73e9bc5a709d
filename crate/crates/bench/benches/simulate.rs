use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use sdcaf_core::env::{Environment, Instance, SpreadPolicy};
use sdcaf_core::policies::{Alg1Params, ArmElimination, ModifiedUcb, DEFAULT_INITIAL_TOLERANCE};
use sdcaf_core::rng::RunSeeds;
use std::hint::black_box;

const HORIZON: usize = 100_000;

fn instance(delay: usize, spread: SpreadPolicy) -> Instance {
    Instance::bernoulli(&[0.8, 0.5, 0.5, 0.3, 0.3], delay, HORIZON, spread).unwrap()
}

fn env_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("env_step");
    group.throughput(Throughput::Elements(HORIZON as u64));
    for spread in [SpreadPolicy::Uniform, SpreadPolicy::Dirichlet { alpha: 1.0 }] {
        for delay in [1, 20] {
            let inst = instance(delay, spread);
            let id = BenchmarkId::new(spread.to_string(), delay);
            group.bench_with_input(id, &inst, |b, inst| {
                b.iter(|| {
                    let seeds = RunSeeds::from_master(1, 0);
                    let mut env = Environment::without_ledger(inst, &seeds).unwrap();
                    let mut acc = 0.0;
                    for t in 0..HORIZON {
                        acc += env.step(t % 5).unwrap();
                    }
                    black_box(acc)
                })
            });
        }
    }
    group.finish();
}

fn policies(c: &mut Criterion) {
    let mut group = c.benchmark_group("policy_run");
    group.throughput(Throughput::Elements(HORIZON as u64));
    group.sample_size(20);
    let inst = instance(20, SpreadPolicy::Uniform);
    group.bench_function("alg1", |b| {
        b.iter(|| {
            let seeds = RunSeeds::from_master(2, 0);
            let mut env = Environment::without_ledger(&inst, &seeds).unwrap();
            let params = Alg1Params::resolve(HORIZON, inst.delay, None, None).unwrap();
            let mut policy = ModifiedUcb::new(params, inst.num_arms());
            policy.run(&mut env).unwrap();
            black_box(policy.state().counts().to_vec())
        })
    });
    group.bench_function("alg2", |b| {
        b.iter(|| {
            let seeds = RunSeeds::from_master(2, 0);
            let mut env = Environment::without_ledger(&inst, &seeds).unwrap();
            let mut policy =
                ArmElimination::new(inst.num_arms(), HORIZON, inst.delay, DEFAULT_INITIAL_TOLERANCE).unwrap();
            policy.run(&mut env).unwrap();
            black_box(policy.state().counts().to_vec())
        })
    });
    group.bench_function("alg1_with_ledger", |b| {
        b.iter(|| {
            let seeds = RunSeeds::from_master(2, 0);
            let mut env = Environment::new(&inst, &seeds).unwrap();
            let params = Alg1Params::resolve(HORIZON, inst.delay, None, None).unwrap();
            let mut policy = ModifiedUcb::new(params, inst.num_arms());
            policy.run(&mut env).unwrap();
            black_box(env.into_ledger())
        })
    });
    group.finish();
}

criterion_group!(benches, env_step, policies);
criterion_main!(benches);
