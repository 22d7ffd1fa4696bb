use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use dhomog_core::exec::Execution;
use dhomog_core::flowrule::{linspace, sweep, FlowRule, SweepSetup};
use dhomog_core::macro1d::{solve_macro, MacroProblem};
use dhomog_core::micro2d::{build_kernel, level_range, normal_velocity, Grid2D, LevelSetField2D, ObstacleField2D};
use dhomog_core::params::MaterialParams;
use dhomog_core::strain::StrainField1D;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bench_sweep(c: &mut Criterion) {
    let mut setup = SweepSetup::protocol();
    setup.sim.total_time = 20.0;
    let ns: Vec<usize> = (1..=8).collect();
    let taus = linspace(0.0, 9.0, 8);
    let mut group = c.benchmark_group("sweep_8x8");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| sweep(&ns, &taus, &setup, exec).unwrap()));
    }
    group.finish();
}

fn bench_macro(c: &mut Criterion) {
    let mut group = c.benchmark_group("macro_case_a");
    group.sample_size(10);
    for nodes in [1024, 4096] {
        let initial = StrainField1D::periodic_from_fn(nodes, 0.0, 1.0, -1.0, |x| {
            -x + 0.5 * (2.0 * std::f64::consts::PI * x).sin() / (2.0 * std::f64::consts::PI)
        })
        .unwrap();
        let problem = MacroProblem::new(initial, FlowRule::CaseA { mu_bar: 1.0 }, 1.0, 1.0, 0.002);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, nodes), &problem, |b, p| {
                b.iter(|| solve_macro(p, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_velocity_2d(c: &mut Criterion) {
    let mut group = c.benchmark_group("normal_velocity_2d");
    group.sample_size(20);
    let params = MaterialParams::unit();
    for n in [128, 256] {
        let grid = Grid2D::new(n, n, 0.5).unwrap();
        let center = 0.5 * grid.length_x();
        let field = LevelSetField2D::from_fn(grid, |x, y| {
            let r = ((x - center).powi(2) + (y - center).powi(2)).sqrt();
            0.45 * ((0.25 * grid.length_x() - r) / 1.5).tanh()
        })
        .unwrap();
        let obstacles = ObstacleField2D::constant(grid, 0.5);
        let kernel = build_kernel(&params, 2.0, grid, Execution::Sequential).unwrap();
        let range = level_range(&field, 1.0);
        for (name, exec) in MODES {
            let k = kernel.clone().with_execution(exec);
            group.bench_with_input(BenchmarkId::new(name, n), &field, |b, f| {
                b.iter(|| normal_velocity(f, &obstacles, &k, range, 1.0).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_sweep, bench_macro, bench_velocity_2d);
criterion_main!(benches);
