use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use retail_sim::model::Horizon;
use retail_sim::stats::*;
use retail_sim::*;

fn one_week(mut c: DepartmentConfig) -> DepartmentConfig {
    c.horizon = Horizon::weeks(1, c.horizon.trading_day_minutes()).unwrap();
    c
}

fn replication(c: &mut Criterion) {
    let mut group = c.benchmark_group("replication_week");
    group.sample_size(20);
    for config in [
        one_week(DepartmentConfig::shipped_atv()),
        one_week(DepartmentConfig::shipped_ww()),
    ] {
        let staffing = config.staffing;
        group.bench_function(config.department.clone(), |b| {
            b.iter(|| run_replication(&config, &staffing, black_box(17)).unwrap())
        });
    }
    let config = one_week(DepartmentConfig::shipped_atv());
    group.bench_function("A&TV checked", |b| {
        b.iter(|| {
            let options = RunOptions {
                check_invariants: true,
                ..Default::default()
            };
            run_replication_with(&config, &config.staffing, black_box(17), options).unwrap()
        })
    });
    group.finish();
}

fn statistics(c: &mut Criterion) {
    c.bench_function("f_upper_tail", |b| {
        b.iter(|| f_upper_tail(black_box(3.2), 4.0, 190.0).unwrap())
    });
    c.bench_function("studentized_range_upper_tail", |b| {
        b.iter(|| studentized_range_upper_tail(black_box(3.9), 5, 190.0).unwrap())
    });
    c.bench_function("studentized_range_critical", |b| {
        b.iter(|| studentized_range_critical(black_box(0.05), 5, 190.0).unwrap())
    });
    let cells: Vec<Vec<Vec<f64>>> = (0..2)
        .map(|i| {
            (0..5)
                .map(|j| {
                    (0..20)
                        .map(|r| ((i * 97 + j * 31 + r * 7) % 23) as f64)
                        .collect()
                })
                .collect()
        })
        .collect();
    let table = BalancedTable::new(&cells).unwrap();
    c.bench_function("anova_two_way_2x5x20", |b| {
        b.iter(|| anova_two_way(black_box(&table)).unwrap())
    });
    let groups: Vec<&[f64]> = table.cells().collect();
    c.bench_function("levene_2x5x20", |b| {
        b.iter(|| levene_test(black_box(&groups)).unwrap())
    });
}

criterion_group!(benches, replication, statistics);
criterion_main!(benches);
