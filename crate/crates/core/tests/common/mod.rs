#![allow(dead_code)]

use apiary_core::flora::{
    Dimension, FloralResource, ForagingParams, Landscape, Raster, ResourceId, ResourceKind,
};
use apiary_core::market::{AffineEfficiency, NectarOption};
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn nectar(id: ResourceId, quantum: f64, density: f64) -> FloralResource {
    FloralResource {
        id,
        name: format!("n{id}"),
        kind: ResourceKind::Nectar,
        quantum,
        density,
        flow: 1.0e-4,
        flowers_per_trip: 100.0,
        visit_time: 2.0,
        dimension: Dimension::Surface,
        area: 10_000.0,
        distance: None,
        bloom: None,
    }
}

pub fn random_resource<R: Rng>(rng: &mut R, id: ResourceId, kind: ResourceKind) -> FloralResource {
    let (quantum, flow) = match kind {
        ResourceKind::Nectar => (rng.random_range(100.0..400.0), rng.random_range(1e-5..2e-4)),
        ResourceKind::Pollen => (rng.random_range(0.005..0.03), rng.random_range(1e-9..1e-7)),
    };
    FloralResource {
        id,
        name: format!("r{id}"),
        kind,
        quantum,
        density: rng.random_range(1.0..200.0),
        flow,
        flowers_per_trip: rng.random_range(20.0..150.0),
        visit_time: rng.random_range(0.5..5.0),
        dimension: if rng.random_bool(0.5) {
            Dimension::Surface
        } else {
            Dimension::Volume
        },
        area: rng.random_range(1.0e3..1.0e5),
        distance: Some(rng.random_range(50.0..5000.0)),
        bloom: None,
    }
}

/// A square raster with 1 to `max_patches` rectangular nectar patches, ids
/// 1.. in order, each with its own resource.
pub fn random_landscape<R: Rng>(
    rng: &mut R,
    size: usize,
    max_patches: usize,
    cell_size: f64,
) -> (Landscape, Vec<FloralResource>) {
    let n = rng.random_range(1..=max_patches);
    let mut ids = Raster::filled(size, size, 0u32);
    let mut resources = Vec::new();
    for k in 0..n {
        let id = k as ResourceId + 1;
        let (h, w) = (
            rng.random_range(1..=size / 4),
            rng.random_range(1..=size / 4),
        );
        let (r0, c0) = (
            rng.random_range(0..=size - h),
            rng.random_range(0..=size - w),
        );
        for r in r0..r0 + h {
            for c in c0..c0 + w {
                *ids.get_mut(r, c) = id;
            }
        }
        resources.push(nectar(
            id,
            rng.random_range(200.0..400.0),
            rng.random_range(5.0..100.0),
        ));
    }
    // later patches may cover earlier ones completely
    let present = ids
        .values()
        .iter()
        .copied()
        .collect::<std::collections::BTreeSet<_>>();
    resources.retain(|r| present.contains(&r.id));
    let landscape = Landscape::new(ids, cell_size, [size / 2, size / 2]).unwrap();
    (landscape, resources)
}

/// `max over nectar cells y of (I(y) − |x − y|/d_max)` by exhaustive search.
pub fn brute_quality(
    landscape: &Landscape,
    resources: &[FloralResource],
    p: &ForagingParams,
) -> Raster<f64> {
    let ids = &landscape.ids;
    let sources: Vec<(usize, usize, f64)> = ids
        .cells()
        .filter(|(_, _, id)| **id != 0)
        .map(|(r, c, id)| {
            let res = resources.iter().find(|x| x.id == *id).unwrap();
            (r, c, apiary_core::flora::intrinsic_quality(res, p).unwrap())
        })
        .collect();
    Raster::from_fn(ids.rows(), ids.cols(), |r, c| {
        sources
            .iter()
            .map(|&(sr, sc, q)| {
                let dr = r as f64 - sr as f64;
                let dc = c as f64 - sc as f64;
                q - (dr * dr + dc * dc).sqrt() * landscape.cell_size / p.d_max
            })
            .fold(f64::NEG_INFINITY, f64::max)
    })
}

pub fn line(id: ResourceId, slope: f64, intercept: f64, capacity: f64) -> AffineEfficiency {
    AffineEfficiency {
        id,
        slope,
        intercept,
        capacity,
        cycle: 1000.0,
    }
}

pub fn random_lines<R: Rng>(rng: &mut R, n: usize) -> Vec<AffineEfficiency> {
    (0..n)
        .map(|i| {
            line(
                i as ResourceId + 1,
                rng.random_range(0.01..0.5),
                -rng.random_range(0.0..0.2),
                rng.random_range(1.0..100.0),
            )
        })
        .collect()
}

pub fn nectar_option(id: ResourceId, efficiency: f64, capacity: f64) -> NectarOption {
    NectarOption {
        id,
        quality: efficiency / 10.0,
        efficiency,
        capacity,
    }
}

/// Capacity-weighted value of the lowest positive lines that absorb
/// `demand` bees when they go to the best lines first, found by filling
/// sorted values. Zero when positive capacity falls short of demand.
pub fn greedy_cut(lines: &[AffineEfficiency], demand: f64, tau: f64) -> f64 {
    let mut values: Vec<(f64, f64)> = lines
        .iter()
        .map(|l| (l.value(tau), l.capacity))
        .filter(|(v, _)| *v > 0.0)
        .collect();
    values.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut left = demand;
    for (v, cap) in values {
        if cap >= left {
            return v;
        }
        left -= cap;
    }
    0.0
}
