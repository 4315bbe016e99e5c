//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use possfuse_core::prelude::*;
use rand::Rng;

pub fn space(n: usize) -> Arc<StateSpace> {
    StateSpace::indexed(n).unwrap()
}

/// Values in [0, 1] with roughly one in five set to zero.
pub fn dense_fn<R: Rng>(rng: &mut R, space: &Arc<StateSpace>) -> BoundFn {
    let values = (0..space.len())
        .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() })
        .collect();
    BoundFn::dense(space, values).unwrap()
}

/// Dense function with sup norm exactly one.
pub fn unit_fn<R: Rng>(rng: &mut R, space: &Arc<StateSpace>) -> BoundFn {
    let mut values: Vec<f64> = (0..space.len())
        .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() })
        .collect();
    let peak = rng.random_range(0..space.len());
    values[peak] = 1.0;
    BoundFn::dense(space, values).unwrap()
}

pub fn nonempty_mask<R: Rng>(rng: &mut R, space: &Arc<StateSpace>) -> SubsetMask {
    SubsetMask::from_bits(space, rng.random_range(1u64..1 << space.len()))
}

pub fn probability<R: Rng>(rng: &mut R, space: &Arc<StateSpace>) -> DiscreteProbability {
    let w = (0..space.len()).map(|_| rng.random::<f64>() + 1e-3).collect();
    DiscreteProbability::from_unnormalized(space, w).unwrap()
}

pub fn partition<R: Rng>(rng: &mut R, space: &Arc<StateSpace>) -> (Vec<SubsetMask>, Vec<f64>) {
    let n = space.len();
    let k = rng.random_range(1..=n);
    let mut label: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
    // shuffle block assignment
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        label.swap(i, j);
    }
    let blocks: Vec<_> = (0..k)
        .map(|b| SubsetMask::from_indices(space, (0..n).filter(|&i| label[i] == b)).unwrap())
        .collect();
    let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let rest: f64 = weights[1..].iter().sum();
    weights[0] = 1.0 - rest;
    (blocks, weights)
}

pub fn mass_function<R: Rng>(rng: &mut R, space: &Arc<StateSpace>, max_focal: usize) -> MassFunction {
    let n = space.len();
    let want = rng.random_range(1..=max_focal.min((1 << n) - 1));
    let mut sets: Vec<u64> = Vec::new();
    while sets.len() < want {
        let bits = rng.random_range(1u64..1 << n);
        if !sets.contains(&bits) {
            sets.push(bits);
        }
    }
    let raw: Vec<f64> = sets.iter().map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    let focal = sets
        .iter()
        .zip(&raw)
        .map(|(&b, w)| (SubsetMask::from_bits(space, b), w / total))
        .collect();
    MassFunction::new(space, focal).unwrap()
}

/// Mixture of up to `max_parts` parts, each a dense function, an indicator,
/// a partition constraint or a plausibility, with random part weights.
pub fn constraint<R: Rng>(rng: &mut R, space: &Arc<StateSpace>, max_parts: usize) -> Constraint {
    let parts = rng.random_range(1..=max_parts);
    let mut components = Vec::new();
    for _ in 0..parts {
        let scale = rng.random_range(0.05..1.5);
        match rng.random_range(0..4) {
            0 => components.push((scale, dense_fn(rng, space))),
            1 => components.push((scale, BoundFn::indicator(&nonempty_mask(rng, space)))),
            2 => {
                let (blocks, w) = partition(rng, space);
                let c = Constraint::from_partition(&blocks, &w).unwrap();
                components.extend(c.components().iter().map(|c| (scale * c.weight, c.function.clone())));
            }
            _ => {
                let c = Constraint::from_mass_function(&mass_function(rng, space, 5));
                components.extend(c.components().iter().map(|c| (scale * c.weight, c.function.clone())));
            }
        }
    }
    Constraint::new(space, components).unwrap()
}

/// Canonical mixture of up to `max_components` unit-norm dense functions.
/// Weights are multiples of 2⁻¹⁰ so that they sum to one exactly.
pub fn canonical<R: Rng>(rng: &mut R, space: &Arc<StateSpace>, max_components: usize) -> Constraint {
    let k = rng.random_range(1..=max_components);
    let mut ticks = vec![1u32; k];
    for _ in 0..(1024 - k) {
        ticks[rng.random_range(0..k)] += 1;
    }
    let components = ticks
        .iter()
        .map(|&t| (t as f64 / 1024.0, unit_fn(rng, space)))
        .collect();
    Constraint::new(space, components).unwrap()
}

/// A random total map; surjective when asked (needs `|domain| ≥ |codomain|`).
pub fn point_map<R: Rng>(
    rng: &mut R,
    domain: &Arc<StateSpace>,
    codomain: &Arc<StateSpace>,
    surjective: bool,
) -> PointMap {
    let (n, m) = (domain.len(), codomain.len());
    let mut table: Vec<usize> = (0..n).map(|_| rng.random_range(0..m)).collect();
    if surjective {
        assert!(n >= m);
        for (y, slot) in table.iter_mut().take(m).enumerate() {
            *slot = y;
        }
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            table.swap(i, j);
        }
    }
    PointMap::new(domain, codomain, table).unwrap()
}

/// Every subset of the space, as masks.
pub fn all_subsets(space: &Arc<StateSpace>) -> Vec<SubsetMask> {
    (0u64..1 << space.len())
        .map(|b| SubsetMask::from_bits(space, b))
        .collect()
}
