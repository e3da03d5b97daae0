use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use slotgame_bench::all_builtins;
use slotgame_core::game::play_scores;
use slotgame_core::multichannel::{optimize_three_user_two_channel, OptimizerSettings};
use slotgame_core::tournament::Entrant;
use slotgame_core::{
    builtin, parse_strategy, run_tournament, serialize_strategy, simulate_capture,
    solve_capture_table, BuiltinName, CompiledMachine, Horizon, RngStream, StreamId,
    TournamentConfig,
};

fn games(c: &mut Criterion) {
    let four = CompiledMachine::new(&builtin(BuiltinName::FourState)).unwrap();
    let horizon = Horizon::new(100).unwrap();
    let mut group = c.benchmark_group("game");
    group.throughput(Throughput::Elements(100));
    let mut run = 0u64;
    group.bench_function("four_state_self_play_T100", |b| {
        b.iter(|| {
            run += 1;
            let ra = RngStream::new(1, StreamId::new(0, run, 0));
            let rb = RngStream::new(1, StreamId::new(0, run, 1));
            black_box(play_scores(&four, &four, horizon, &ra, &rb))
        })
    });
    group.finish();
}

fn tournament(c: &mut Criterion) {
    let entrants: Vec<Entrant> = all_builtins().into_iter().map(Entrant::from).collect();
    let config = TournamentConfig::new(entrants, Horizon::new(100).unwrap(), 100, 7);
    c.bench_function("tournament_7x7_runs100", |b| {
        b.iter(|| black_box(run_tournament(&config).unwrap()))
    });
}

fn capture(c: &mut Criterion) {
    let mut group = c.benchmark_group("capture");
    for n_max in [7usize, 50] {
        group.bench_with_input(BenchmarkId::new("solve", n_max), &n_max, |b, &n| {
            b.iter(|| black_box(solve_capture_table(n, 1e-9).unwrap()))
        });
    }
    let table = solve_capture_table(7, 1e-9).unwrap();
    group.throughput(Throughput::Elements(10_000));
    group.bench_function("simulate_n7_10k", |b| {
        b.iter(|| black_box(simulate_capture(7, &table, 10_000, 3, 10_000).unwrap()))
    });
    group.finish();
}

fn multichannel(c: &mut Criterion) {
    let coarse = OptimizerSettings {
        grid: 41,
        ..OptimizerSettings::default()
    };
    c.bench_function("optimize_three_user_grid41", |b| {
        b.iter(|| black_box(optimize_three_user_two_channel(coarse)))
    });
}

fn parsing(c: &mut Criterion) {
    let sources: Vec<String> = all_builtins().iter().map(serialize_strategy).collect();
    c.bench_function("parse_builtin_corpus", |b| {
        b.iter(|| {
            for s in &sources {
                black_box(parse_strategy(s).unwrap());
            }
        })
    });
}

criterion_group!(benches, games, tournament, capture, multichannel, parsing);
criterion_main!(benches);
