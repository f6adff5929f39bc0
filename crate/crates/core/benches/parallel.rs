//! Sequential vs rayon fan-out on the workloads the studies parallelize:
//! per-seed initialization sweeps, region grids and short training runs.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nodestab::experiments::{train_student, Dataset, Sequence, Split, TrainConfig};
use nodestab::init::{sii_initialize, verify_linearization};
use nodestab::network::{Activation, NetDims};
use nodestab::parallel::{map_parallel, map_sequential};
use nodestab::solver::{integrate_fixed, ButcherTableau, InputSignal, Trajectory};
use nodestab::stability::stability_poly;
use nodestab::Cplx;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn init_sweep(seed: &u64) -> f64 {
    let dims = NetDims::new(6, 1, vec![64, 64]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
    let sii = sii_initialize(&dims, Activation::Elu, 2, 0.1, true, &mut rng).unwrap();
    verify_linearization(&sii.net, &sii.plan.eigenset).unwrap()
}

fn grid_row(im: &f64) -> f64 {
    (0..2000).map(|i| stability_poly(4, Cplx::new(-3.5 + 4.0 * i as f64 / 2000.0, *im)).unwrap().norm()).sum()
}

fn train_seed(seed: &u64) -> f64 {
    let dims = NetDims::new(2, 0, vec![16]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
    let sii = sii_initialize(&dims, Activation::Elu, 1, 0.1, true, &mut rng).unwrap();
    let decay = |x: &[f64], _: &[f64]| vec![-x[0] + x[1], -x[1]];
    let seq = |x0: [f64; 2]| {
        let t = integrate_fixed(&ButcherTableau::rk4(), &decay, &x0, &InputSignal::none(), 0.1, 30).unwrap();
        Sequence { input: InputSignal::none(), trajectory: Trajectory { times: t.times, states: t.states } }
    };
    let train = Dataset { sequences: vec![seq([1.0, 0.5]), seq([-0.3, 0.8])], dt: 0.1, split: Split::Train };
    let test = Dataset { sequences: vec![seq([0.2, -0.6])], dt: 0.1, split: Split::Test };
    let cfg = TrainConfig { epochs: 10, seed: *seed, ..TrainConfig::default() };
    train_student(sii.net, &train, &test, &cfg).unwrap().min_test_loss
}

fn compare(c: &mut Criterion) {
    let seeds: Vec<u64> = (0..32).collect();
    let rows: Vec<f64> = (0..400).map(|j| -3.5 + 7.0 * j as f64 / 400.0).collect();

    let mut group = c.benchmark_group("init_sweep");
    group.sample_size(10);
    group.bench_with_input(BenchmarkId::new("sequential", seeds.len()), &seeds, |b, s| b.iter(|| map_sequential(s, init_sweep)));
    group.bench_with_input(BenchmarkId::new("parallel", seeds.len()), &seeds, |b, s| b.iter(|| map_parallel(s, init_sweep)));
    group.finish();

    let mut group = c.benchmark_group("region_grid");
    group.bench_with_input(BenchmarkId::new("sequential", rows.len()), &rows, |b, r| b.iter(|| map_sequential(r, grid_row)));
    group.bench_with_input(BenchmarkId::new("parallel", rows.len()), &rows, |b, r| b.iter(|| map_parallel(r, grid_row)));
    group.finish();

    let seeds: Vec<u64> = (0..8).collect();
    let mut group = c.benchmark_group("train_seeds");
    group.sample_size(10);
    group.bench_with_input(BenchmarkId::new("sequential", seeds.len()), &seeds, |b, s| b.iter(|| map_sequential(s, train_seed)));
    group.bench_with_input(BenchmarkId::new("parallel", seeds.len()), &seeds, |b, s| b.iter(|| map_parallel(s, train_seed)));
    group.finish();
}

criterion_group!(benches, compare);
criterion_main!(benches);
