use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use poag_game::par::Exec;
use poag_solvers::{optimal_value, SolveOptions};

fn enumeration(c: &mut Criterion) {
    let games = [("node-scheduling", poag_examples::node_scheduling()), ("cuda-3", poag_examples::cuda_versions(3))];
    let mut group = c.benchmark_group("optimal_value");
    group.sample_size(10);
    for (name, g) in &games {
        for (mode, exec) in [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)] {
            let opts = SolveOptions { exec, ..SolveOptions::default() };
            group.bench_with_input(BenchmarkId::new(*name, mode), g, |b, g| b.iter(|| optimal_value(g, &opts).unwrap()));
        }
    }
    group.finish();
}

criterion_group!(benches, enumeration);
criterion_main!(benches);
