use std::hint::black_box;

use apiary_core::flora::{
    quality_field_with, FloralResource, ForagingParams, Landscape, Raster, ResourceKind,
};
use apiary_core::sim::{run_batch, Scenario};
use apiary_core::Execution;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn resource(id: u32) -> FloralResource {
    FloralResource {
        id,
        name: String::new(),
        kind: ResourceKind::Nectar,
        quantum: 200.0 + 10.0 * id as f64,
        density: 30.0,
        flow: 1e-4,
        flowers_per_trip: 100.0,
        visit_time: 2.0,
        dimension: Default::default(),
        area: 1e4,
        distance: None,
        bloom: None,
    }
}

/// `n` square patches scattered deterministically over a `size`² grid.
fn landscape(size: usize, n: u32) -> (Landscape, Vec<FloralResource>) {
    let ids = Raster::from_fn(size, size, |r, c| {
        (1..=n)
            .find(|&k| {
                let k = k as usize;
                let (pr, pc) = ((k * 7919) % size, (k * 104_729) % size);
                r.abs_diff(pr) < 4 && c.abs_diff(pc) < 4
            })
            .unwrap_or(0)
    });
    let land = Landscape::new(ids, 20.0, [size / 2, size / 2]).unwrap();
    (land, (1..=n).map(resource).collect())
}

fn quality_fields(c: &mut Criterion) {
    let p = ForagingParams::default();
    let mut group = c.benchmark_group("quality_field");
    group.sample_size(20);
    for size in [256, 512] {
        let (land, res) = landscape(size, 8);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, size), &size, |b, _| {
                b.iter(|| quality_field_with(black_box(&land), &res, &p, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn scenario_batches(c: &mut Criterion) {
    let base = Scenario::builtin();
    let batch: Vec<Scenario> = (0..16)
        .map(|i| {
            let mut s = base.clone();
            s.horizon = 120;
            s.laying.queen_rate = 1000.0 + 50.0 * i as f64;
            s
        })
        .collect();
    let mut group = c.benchmark_group("run_batch");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| run_batch(black_box(&batch), exec)));
    }
    group.finish();
}

criterion_group!(benches, quality_fields, scenario_batches);
criterion_main!(benches);
