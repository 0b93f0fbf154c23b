//! Exact nearest-neighbor search over 3D point sets.
//!
//! Small sets are scanned linearly; larger ones go through a bucketed k-d
//! tree. Both paths compute distances with [`squared_distance`] and break
//! ties towards the smallest point index, so results are bit-identical to a
//! linear scan.

use crate::geometry::Vec3;

/// Below this many points a linear scan is used instead of the tree.
pub const BRUTE_FORCE_BELOW: usize = 64;

const LEAF_SIZE: usize = 8;

#[inline]
pub fn squared_distance(a: &Vec3, b: &Vec3) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub squared_distance: f64,
}

impl Neighbor {
    pub fn distance(&self) -> f64 {
        self.squared_distance.sqrt()
    }

    #[inline]
    fn improves_on(&self, other: &Neighbor) -> bool {
        self.squared_distance < other.squared_distance
            || (self.squared_distance == other.squared_distance && self.index < other.index)
    }
}

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

#[derive(Debug)]
pub struct NearestNeighbors<'a> {
    points: &'a [Vec3],
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a> NearestNeighbors<'a> {
    pub fn new(points: &'a [Vec3]) -> Self {
        let mut index = NearestNeighbors {
            points,
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if points.len() >= BRUTE_FORCE_BELOW {
            index.build(0, points.len());
        }
        index
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let axis = self.widest_axis(start, end);
        let mid = start + (end - start) / 2;
        let points = self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis])
        });
        let value = points[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    fn widest_axis(&self, start: usize, end: usize) -> usize {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            let p = &self.points[i];
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0)
    }

    /// Nearest point to `query`. Returns `None` only for an empty set.
    pub fn nearest(&self, query: &Vec3) -> Option<Neighbor> {
        if self.points.is_empty() {
            return None;
        }
        if self.nodes.is_empty() {
            return Some(brute_force_nearest(self.points, query));
        }
        let mut best = Neighbor {
            index: usize::MAX,
            squared_distance: f64::INFINITY,
        };
        self.search(0, query, &mut best);
        Some(best)
    }

    fn search(&self, node: usize, query: &Vec3, best: &mut Neighbor) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let candidate = Neighbor {
                        index: i,
                        squared_distance: squared_distance(&self.points[i], query),
                    };
                    if candidate.improves_on(best) {
                        *best = candidate;
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[axis] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, query, best);
                // Ties must still be visited so the smallest index wins.
                if diff * diff <= best.squared_distance {
                    self.search(far, query, best);
                }
            }
        }
    }
}

/// Linear scan, first minimum wins.
pub fn brute_force_nearest(points: &[Vec3], query: &Vec3) -> Neighbor {
    let mut best = Neighbor {
        index: usize::MAX,
        squared_distance: f64::INFINITY,
    };
    for (i, p) in points.iter().enumerate() {
        let d = squared_distance(p, query);
        if d < best.squared_distance {
            best = Neighbor {
                index: i,
                squared_distance: d,
            };
        }
    }
    best
}
