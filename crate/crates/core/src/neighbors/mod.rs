//! Exact nearest-neighbor assignment between two point sets.
//!
//! Distances are always evaluated as `sqrt((dx*dx + dy*dy) + dz*dz)` so the
//! brute-force scan and the kd-tree produce bitwise-identical values. Ties are
//! broken by the smallest target index.

mod kdtree;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::pointcloud::Point3;

pub use kdtree::KdTree;

#[inline]
pub fn distance(a: &Point3, b: &Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    ((dx * dx + dy * dy) + dz * dz).sqrt()
}

/// Distance to, and index of, the closest target point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Nearest {
    pub distance: f64,
    pub index: usize,
}

impl Nearest {
    pub(crate) const NONE: Nearest = Nearest {
        distance: f64::INFINITY,
        index: usize::MAX,
    };

    #[inline]
    pub(crate) fn offer(&mut self, distance: f64, index: usize) {
        if distance < self.distance || (distance == self.distance && index < self.index) {
            self.distance = distance;
            self.index = index;
        }
    }
}

/// Nearest target for every source point (`forward`) and nearest source for
/// every target point (`backward`).
#[derive(Clone, Debug, PartialEq)]
pub struct NearestAssignment {
    pub forward: Vec<Nearest>,
    pub backward: Vec<Nearest>,
}

impl NearestAssignment {
    /// Every forward and backward distance, forward first.
    pub fn distances(&self) -> impl Iterator<Item = f64> + '_ {
        self.forward.iter().chain(&self.backward).map(|n| n.distance)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Search {
    Brute,
    #[default]
    KdTree,
}

fn check_non_empty(source: &[Point3], target: &[Point3]) -> Result<()> {
    if source.is_empty() || target.is_empty() {
        return Err(invalid("nearest-neighbor assignment needs two non-empty point sets"));
    }
    Ok(())
}

pub fn nearest_brute(query: &Point3, target: &[Point3]) -> Nearest {
    let mut best = Nearest::NONE;
    for (i, t) in target.iter().enumerate() {
        best.offer(distance(query, t), i);
    }
    best
}

/// Exhaustive scan in both directions.
pub fn assign_brute(source: &[Point3], target: &[Point3]) -> Result<NearestAssignment> {
    check_non_empty(source, target)?;
    Ok(NearestAssignment {
        forward: source.par_iter().map(|q| nearest_brute(q, target)).collect(),
        backward: target.par_iter().map(|q| nearest_brute(q, source)).collect(),
    })
}

/// Same contract as [`assign_brute`], answered with one kd-tree per side.
pub fn assign_kdtree(source: &[Point3], target: &[Point3]) -> Result<NearestAssignment> {
    check_non_empty(source, target)?;
    let (target_tree, source_tree) = rayon::join(|| KdTree::build(target), || KdTree::build(source));
    Ok(NearestAssignment {
        forward: target_tree.nearest_all(source),
        backward: source_tree.nearest_all(target),
    })
}

pub fn assign(source: &[Point3], target: &[Point3], search: Search) -> Result<NearestAssignment> {
    match search {
        Search::Brute => assign_brute(source, target),
        Search::KdTree => assign_kdtree(source, target),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_points(rng: &mut SplitMix64, n: usize) -> Vec<Point3> {
        (0..n)
            .map(|_| [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)])
            .collect()
    }

    #[test]
    fn hand_enumerated_assignment() {
        let a = assign_brute(&[[0.0, 0.0, 0.0]], &[[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(a.forward, vec![Nearest { distance: 0.0, index: 1 }]);
        assert_eq!(
            a.backward,
            vec![Nearest { distance: 1.0, index: 0 }, Nearest { distance: 0.0, index: 0 }]
        );
    }

    #[test]
    fn self_assignment_is_identity() {
        let mut rng = SplitMix64::new(3);
        let x = random_points(&mut rng, 100);
        for a in [assign_brute(&x, &x).unwrap(), assign_kdtree(&x, &x).unwrap()] {
            for (i, n) in a.forward.iter().chain(&a.backward).enumerate() {
                assert_eq!(n.distance, 0.0);
                assert_eq!(n.index, i % 100);
            }
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let target = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]];
        let a = assign_brute(&[[0.0, 0.0, 0.0]], &target).unwrap();
        assert_eq!(a.forward[0], Nearest { distance: 1.0, index: 0 });
        let b = assign_kdtree(&[[0.0, 0.0, 0.0]], &target).unwrap();
        assert_eq!(b.forward[0], Nearest { distance: 1.0, index: 0 });
    }

    #[test]
    fn empty_inputs_are_rejected() {
        assert!(assign_brute(&[], &[[0.0; 3]]).is_err());
        assert!(assign_kdtree(&[[0.0; 3]], &[]).is_err());
    }

    #[test]
    fn kdtree_matches_brute_force() {
        let mut rng = SplitMix64::new(11);
        let s = random_points(&mut rng, 1000);
        let t = random_points(&mut rng, 1000);
        let brute = assign_brute(&s, &t).unwrap();
        let tree = assign_kdtree(&s, &t).unwrap();
        assert_eq!(brute, tree);
    }

    #[test]
    fn single_points() {
        let s = [[0.25, -1.0, 3.0]];
        let t = [[1.0, 2.0, -0.5]];
        assert_eq!(assign_brute(&s, &t).unwrap(), assign_kdtree(&s, &t).unwrap());
    }

    #[test]
    fn duplicated_targets() {
        let mut rng = SplitMix64::new(17);
        let base = random_points(&mut rng, 50);
        // every target point appears four times, interleaved
        let target: Vec<Point3> = (0..4).flat_map(|_| base.iter().copied()).collect();
        let source = random_points(&mut rng, 300);
        let brute = assign_brute(&source, &target).unwrap();
        let tree = assign_kdtree(&source, &target).unwrap();
        for (b, k) in brute.forward.iter().zip(&tree.forward) {
            assert_eq!(b.distance, k.distance);
            assert_eq!(target[k.index], target[b.index]);
            assert!(k.index < 50, "lowest duplicate should win");
        }
    }
}
