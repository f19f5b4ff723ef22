//! Point-cloud value type, synthetic shapes, and half-space cropping.

mod io;

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::rng::SplitMix64;

pub use io::{format_xyz, parse_ply, parse_xyz, read_ply, read_points, read_xyz, write_xyz};

pub type Point3 = [f64; 3];

const TORUS_MAJOR: f64 = 0.7;
const TORUS_MINOR: f64 = 0.3;

/// A non-empty, ordered set of finite 3D points.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("point cloud must contain at least one point"));
        }
        if let Some(i) = points.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(invalid(format!("point {i} has a non-finite coordinate")));
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point3> {
        self.points.iter()
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.points
    }

    /// Bitwise equality of all coordinates (distinguishes `0.0` from `-0.0`).
    pub fn bitwise_eq(&self, other: &PointCloud) -> bool {
        self.len() == other.len()
            && self
                .iter()
                .zip(other.iter())
                .all(|(a, b)| a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()))
    }
}

impl AsRef<[Point3]> for PointCloud {
    fn as_ref(&self) -> &[Point3] {
        &self.points
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Sphere,
    Cube,
    Torus,
}

impl ShapeKind {
    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Sphere => "sphere",
            ShapeKind::Cube => "cube",
            ShapeKind::Torus => "torus",
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sphere" => Ok(ShapeKind::Sphere),
            "cube" => Ok(ShapeKind::Cube),
            "torus" => Ok(ShapeKind::Torus),
            _ => Err(format!("unknown shape '{s}'; expected sphere, cube or torus")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub count: usize,
    pub seed: u64,
}

impl ShapeSpec {
    pub fn new(kind: ShapeKind, count: usize, seed: u64) -> Self {
        Self { kind, count, seed }
    }
}

/// Samples `spec.count` points uniformly on the surface of the requested shape.
///
/// * sphere: unit sphere, normalized isotropic Gaussian triples.
/// * cube: surface of `[-1, 1]^3`; a face is picked uniformly (all faces have
///   equal area), then the two free coordinates are uniform in `[-1, 1)`.
/// * torus: major radius 0.7, minor radius 0.3 around the z axis; angles are
///   rejection-sampled with acceptance `(R + r cos v) / (R + r)` so that the
///   density is uniform in surface area.
pub fn generate(spec: &ShapeSpec) -> Result<PointCloud> {
    if spec.count == 0 {
        return Err(invalid("shape point count must be at least 1"));
    }
    let mut rng = SplitMix64::new(spec.seed);
    let points = (0..spec.count)
        .map(|_| match spec.kind {
            ShapeKind::Sphere => sphere_point(&mut rng),
            ShapeKind::Cube => cube_point(&mut rng),
            ShapeKind::Torus => torus_point(&mut rng),
        })
        .collect();
    PointCloud::new(points)
}

fn sphere_point(rng: &mut SplitMix64) -> Point3 {
    loop {
        let v = [rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian()];
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm > 1e-12 {
            return [v[0] / norm, v[1] / norm, v[2] / norm];
        }
    }
}

fn cube_point(rng: &mut SplitMix64) -> Point3 {
    let face = rng.next_index(6);
    let axis = face / 2;
    let sign = if face.is_multiple_of(2) { -1.0 } else { 1.0 };
    let mut p = [0.0; 3];
    p[axis] = sign;
    p[(axis + 1) % 3] = rng.uniform(-1.0, 1.0);
    p[(axis + 2) % 3] = rng.uniform(-1.0, 1.0);
    p
}

fn torus_point(rng: &mut SplitMix64) -> Point3 {
    loop {
        let u = TAU * rng.next_f64();
        let v = TAU * rng.next_f64();
        let accept = rng.next_f64();
        let ring = TORUS_MAJOR + TORUS_MINOR * v.cos();
        if accept * (TORUS_MAJOR + TORUS_MINOR) <= ring {
            return [ring * u.cos(), ring * u.sin(), TORUS_MINOR * v.sin()];
        }
    }
}

/// Half-space crop parameters. The direction is normalized on construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CropSpec {
    direction: Point3,
    keep_ratio: f64,
}

impl CropSpec {
    pub fn new(direction: Point3, keep_ratio: f64) -> Result<Self> {
        let norm = (direction[0] * direction[0] + direction[1] * direction[1] + direction[2] * direction[2]).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(invalid("crop direction must be a finite non-zero vector"));
        }
        if !(keep_ratio > 0.0 && keep_ratio <= 1.0) {
            return Err(invalid(format!("keep ratio {keep_ratio} is outside (0, 1]")));
        }
        Ok(Self {
            direction: [direction[0] / norm, direction[1] / norm, direction[2] / norm],
            keep_ratio,
        })
    }

    pub fn direction(&self) -> Point3 {
        self.direction
    }

    pub fn keep_ratio(&self) -> f64 {
        self.keep_ratio
    }

    /// `ceil(keep_ratio * n)`, at least 1 and at most `n`.
    pub fn kept_count(&self, n: usize) -> usize {
        ((self.keep_ratio * n as f64).ceil() as usize).clamp(1, n)
    }
}

/// Keeps the `ceil(keep_ratio * n)` points with the smallest projection onto
/// the crop direction. Kept points retain their original relative order.
pub fn crop(pc: &PointCloud, spec: &CropSpec) -> PointCloud {
    let d = spec.direction;
    let proj: Vec<f64> = pc.iter().map(|p| p[0] * d[0] + p[1] * d[1] + p[2] * d[2]).collect();
    let mut order: Vec<usize> = (0..pc.len()).collect();
    order.sort_by(|&a, &b| proj[a].total_cmp(&proj[b]).then(a.cmp(&b)));
    let mut kept = order[..spec.kept_count(pc.len())].to_vec();
    kept.sort_unstable();
    PointCloud {
        points: kept.into_iter().map(|i| pc.points[i]).collect(),
    }
}
