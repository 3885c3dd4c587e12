use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use irs_core::channel::{build_statistics, GaussianCsiModel};
use irs_core::rate::{ergodic_rate_mc, DesignObjective, RobustMrt};
use irs_core::rng::{Purpose, StreamFactory};
use irs_core::scenario::fig3_preset;
use irs_core::ssca::{self, SolverConfig};
use irs_core::validation::random_phases;
use irs_core::{mrt_equivalent_beamformer, ChannelStatistics};

fn stats(irs_cols: usize) -> ChannelStatistics {
    let mut cfg = fig3_preset();
    cfg.irs_grid.cols = irs_cols;
    build_statistics(&cfg).unwrap()
}

fn kernels(c: &mut Criterion) {
    let s = stats(8);
    let mut rng = StreamFactory::new(1, Purpose::Validation).sequential();
    let model = GaussianCsiModel::from_statistics(&s);
    let sample = model.sample(&mut rng, false);
    let v = random_phases(&mut rng, s.irs_elements);
    let objective = DesignObjective::from_statistics(&s);

    c.bench_function("mrt_beamformer", |b| {
        b.iter(|| mrt_equivalent_beamformer(black_box(&v), black_box(&sample)).unwrap())
    });
    c.bench_function("objective_gradient", |b| {
        b.iter(|| objective.gradient(black_box(v.values()), black_box(&sample)))
    });
    c.bench_function("mc_rate_200", |b| {
        let streams = StreamFactory::new(2, Purpose::Evaluation);
        b.iter(|| ergodic_rate_mc(&v, &RobustMrt, &s, 200, &streams).unwrap())
    });
}

fn solver_scaling(c: &mut Criterion) {
    let mut group = c.benchmark_group("ssca_20_iterations");
    let cfg = SolverConfig {
        iterations: 20,
        probe_every: 0,
        ..SolverConfig::default()
    };
    for cols in [4, 8, 16] {
        let s = stats(cols);
        let objective = DesignObjective::from_statistics(&s);
        let model = GaussianCsiModel::from_statistics(&s);
        group.bench_with_input(BenchmarkId::from_parameter(8 * cols), &cols, |b, _| {
            b.iter(|| ssca::run(&cfg, &objective, &model).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, kernels, solver_scaling);
criterion_main!(benches);
