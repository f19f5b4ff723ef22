use rayon::prelude::*;

use super::{distance, Nearest};
use crate::pointcloud::Point3;

const LEAF_SIZE: usize = 16;

#[derive(Debug)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Static kd-tree: median split on the widest bounding-box axis, leaves of at
/// most 16 points. Queries are exact and agree bitwise with a brute-force scan,
/// including the lowest-index tie-break.
#[derive(Debug)]
pub struct KdTree<'a> {
    points: &'a [Point3],
    indices: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a> KdTree<'a> {
    pub fn build(points: &'a [Point3]) -> Self {
        let mut tree = KdTree {
            points,
            indices: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            tree.build_node(0, points.len());
        }
        tree
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { start, end });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.indices[start..end] {
            for a in 0..3 {
                lo[a] = lo[a].min(self.points[i][a]);
                hi[a] = hi[a].max(self.points[i][a]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])).then(b.cmp(&a)))
            .unwrap();
        if hi[axis] - lo[axis] == 0.0 {
            // all points coincide
            return id;
        }
        let mid = (end - start) / 2;
        let points = self.points;
        self.indices[start..end].select_nth_unstable_by(mid, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b))
        });
        let value = points[self.indices[start + mid]][axis];
        let left = self.build_node(start, start + mid);
        let right = self.build_node(start + mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn nearest(&self, query: &Point3) -> Nearest {
        let mut best = Nearest::NONE;
        if !self.nodes.is_empty() {
            self.search(0, query, &mut best);
        }
        best
    }

    pub fn nearest_all(&self, queries: &[Point3]) -> Vec<Nearest> {
        queries.par_iter().map(|q| self.nearest(q)).collect()
    }

    fn search(&self, node: usize, query: &Point3, best: &mut Nearest) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.indices[start..end] {
                    best.offer(distance(query, &self.points[i]), i);
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, query, best);
                // Every far-side distance is >= sqrt(diff^2) under the fixed
                // evaluation order, so `<=` keeps exact ties reachable.
                if (diff * diff).sqrt() <= best.distance {
                    self.search(far, query, best);
                }
            }
        }
    }
}
