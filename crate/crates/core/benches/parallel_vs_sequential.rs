use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use frontlab::config::telegraph_medium;
use frontlab::ensemble_random::{run_realization, EnsembleSettings};
use frontlab::front_builder::SolverSettings;
use frontlab::parallel::{map, Execution};
use frontlab::reaction_env::ReactionEnv;
use frontlab::wave_profile::solve_ignition_wave;

fn realizations(c: &mut Criterion) {
    let base = ReactionEnv::constant(0.25, 1.0).unwrap();
    let envs: Vec<ReactionEnv> = (0..8)
        .map(|seed| base.with_amplitude(telegraph_medium(seed)).unwrap())
        .collect();
    let phi = solve_ignition_wave(&|u| envs[0].f_inf(u), 0.25, 1e-8).unwrap();
    let cfg = EnsembleSettings {
        solver: SolverSettings {
            window: 120.0,
            shift_margin: 30.0,
            ..SolverSettings::default()
        },
        burn_in: 5.0,
        profile_half_width: 20.0,
        ..EnsembleSettings::default()
    };
    let horizon = 16.0;
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get());
    let mut group = c.benchmark_group("eight_realizations");
    group.sample_size(10);
    for (label, exec) in [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel { workers }),
    ] {
        group.bench_with_input(BenchmarkId::from_parameter(label), &exec, |b, &exec| {
            b.iter(|| map(exec, &envs, |env| run_realization(env, &phi, horizon, &cfg).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, realizations);
criterion_main!(benches);
