//! Shared fixtures for the benchmarks.

use cdd_core::rng::SplitMix64;
use cdd_core::{generate, Point3, ShapeKind, ShapeSpec};

/// `n` points uniform in `[-1, 1]^3`.
pub fn uniform_cloud(n: usize, seed: u64) -> Vec<Point3> {
    let mut rng = SplitMix64::new(seed);
    (0..n)
        .map(|_| [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)])
        .collect()
}

/// `n` points on the unit sphere.
pub fn sphere(n: usize, seed: u64) -> Vec<Point3> {
    generate(&ShapeSpec::new(ShapeKind::Sphere, n, seed))
        .expect("positive count")
        .into_points()
}
