use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use fock_ladder::channel::ChannelSpec;
use fock_ladder::experiments::{conjecture_scan_with, ladder_verify, standard_grid, ConjectureOptions};
use fock_ladder::majorization::DEFAULT_TOL;
use fock_ladder::numeric::max_abs_diff;
use fock_ladder::par::Exec;
use fock_ladder::transition::{grid_recurrence, row_multinomial, row_series, DEFAULT_TAIL_TOL};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn ladder_sweep(c: &mut Criterion) {
    let grid = standard_grid();
    let mut group = c.benchmark_group("ladder_sweep");
    group.sample_size(10);
    for i_max in [10usize, 30] {
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, i_max), &i_max, |b, &i_max| {
                b.iter(|| {
                    let passed = exec
                        .map(&grid, |spec| {
                            ladder_verify(spec, i_max, DEFAULT_TOL).map(|r| r.pass).unwrap_or(false)
                        })
                        .into_iter()
                        .filter(|p| *p)
                        .count();
                    black_box(passed)
                })
            });
        }
    }
    group.finish();
}

fn oracle_triangle(c: &mut Criterion) {
    let grid = standard_grid();
    let i_max = 20;
    let mut group = c.benchmark_group("oracle_triangle");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| {
                let worst = exec
                    .map(&grid, |spec| {
                        let params = spec.params();
                        let g = grid_recurrence(&params, i_max, DEFAULT_TAIL_TOL).expect("grid");
                        exec.map_range(0..i_max + 1, |i| {
                            let m = row_multinomial(&params, i, g.n_max).expect("row");
                            let s = row_series(&params, i, g.n_max);
                            max_abs_diff(g.row(i), &m).max(max_abs_diff(&m, &s))
                        })
                        .into_iter()
                        .fold(0.0, f64::max)
                    })
                    .into_iter()
                    .fold(0.0, f64::max);
                black_box(worst)
            })
        });
    }
    group.finish();
}

fn conjecture(c: &mut Criterion) {
    let spec = ChannelSpec::lossy(0.7, 0.5).expect("spec");
    let mut group = c.benchmark_group("conjecture_scan");
    group.sample_size(10);
    for length in [6usize, 8] {
        for (name, exec) in MODES {
            let opts = ConjectureOptions {
                length,
                exec,
                ..Default::default()
            };
            group.bench_with_input(BenchmarkId::new(name, length), &opts, |b, opts| {
                b.iter(|| black_box(conjecture_scan_with(&spec, opts).expect("scan").pass))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, ladder_sweep, oracle_triangle, conjecture);
criterion_main!(benches);
