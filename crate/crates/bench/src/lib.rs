//! Seeded instance generators shared by the benchmarks.

use ndarray::{Array2, Array3};
use otecon::{CostMatrix, DiscreteMeasure, Sample1D, SurplusBasis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random probability vector with weights bounded away from zero.
pub fn probability(rng: &mut ChaCha8Rng, n: usize) -> DiscreteMeasure {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = w.iter().sum();
    DiscreteMeasure::new(w.into_iter().map(|v| v / total).collect()).unwrap()
}

/// `n` uniform points in the unit cube of dimension `d`.
pub fn cloud(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| rng.random_range(0.0..1.0))
}

/// Transport instance between two random clouds with squared Euclidean cost.
pub fn transport(seed: u64, m: usize, n: usize, d: usize) -> (DiscreteMeasure, DiscreteMeasure, CostMatrix) {
    let mut r = rng(seed);
    let (x, y) = (cloud(&mut r, m, d), cloud(&mut r, n, d));
    let cost = CostMatrix::squared_euclidean(x.view(), y.view()).unwrap();
    (probability(&mut r, m), probability(&mut r, n), cost)
}

pub fn sample(rng: &mut ChaCha8Rng, n: usize) -> Sample1D {
    Sample1D::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

pub fn surplus(rng: &mut ChaCha8Rng, nx: usize, ny: usize) -> CostMatrix {
    CostMatrix::new(Array2::from_shape_fn((nx, ny), |_| rng.random_range(-2.0..2.0))).unwrap()
}

pub fn basis(rng: &mut ChaCha8Rng, nx: usize, ny: usize, k: usize) -> SurplusBasis {
    SurplusBasis::new(Array3::from_shape_fn((nx, ny, k), |_| rng.random_range(-1.0..1.0))).unwrap()
}
