use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;

use antscape_core::evolve::{evaluate_population, init_population, run_gp, GpConfig};
use antscape_core::program::EvalOptions;
use antscape_core::rng::StreamRng;
use antscape_core::schema::{default_schema, enumerate_schemas};
use antscape_core::{parse_program, BundledTrail, RunResult};

const KOZA: &str = "(if move (prog3 left (prog2 (if move right) (prog2 right (prog2 left right))) (prog2 (if move left) move)))";

fn interpreter(c: &mut Criterion) {
    let trail = BundledTrail::SantaFe.load().unwrap();
    let koza = parse_program(KOZA).unwrap();
    c.bench_function("koza_fast", |b| {
        b.iter(|| RunResult::with_options(black_box(&koza), &trail, EvalOptions::fast(600)).fitness)
    });
    c.bench_function("koza_traced", |b| {
        b.iter(|| {
            let run = RunResult::with_options(black_box(&koza), &trail, EvalOptions::new(600));
            enumerate_schemas(&run).len()
        })
    });

    let config = GpConfig::default();
    let mut rng = StreamRng::seed_from_u64(1);
    let pop = init_population(&config, &mut rng);
    c.bench_function("population_500_eval", |b| {
        b.iter(|| evaluate_population(black_box(&pop), &trail, 600))
    });
    c.bench_function("population_500_default_schemas", |b| {
        b.iter(|| pop.iter().map(|p| default_schema(p).body.len()).sum::<usize>())
    });
}

fn evolution(c: &mut Criterion) {
    let trail = BundledTrail::SantaFe.load().unwrap();
    let mut group = c.benchmark_group("gp");
    group.sample_size(10);
    let config = GpConfig {
        generations: 2,
        success_fitness: 1000,
        ..GpConfig::default()
    };
    group.bench_function("two_generations_pop_500", |b| b.iter(|| run_gp(black_box(&config), &trail)));
    group.finish();
}

criterion_group!(benches, interpreter, evolution);
criterion_main!(benches);
