//! Exact nearest-neighbour queries over a static point set.
//!
//! Ties are broken by the smaller point index so query results never depend
//! on traversal order.

use super::rotation::Vec3;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vec3>,
    order: Vec<usize>,
    split_axis: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub dist_sq: f64,
}

impl Neighbor {
    fn better_than(&self, other: &Neighbor) -> bool {
        self.dist_sq < other.dist_sq || (self.dist_sq == other.dist_sq && self.index < other.index)
    }
}

impl KdTree {
    pub fn new(points: &[Vec3]) -> Self {
        let mut tree = KdTree {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            split_axis: vec![0; points.len()],
        };
        tree.build(0, points.len());
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> &Vec3 {
        &self.points[index]
    }

    fn build(&mut self, lo: usize, hi: usize) {
        if hi - lo <= LEAF_SIZE {
            return;
        }
        let mut min = Vec3::repeat(f64::INFINITY);
        let mut max = Vec3::repeat(f64::NEG_INFINITY);
        for &i in &self.order[lo..hi] {
            min = min.inf(&self.points[i]);
            max = max.sup(&self.points[i]);
        }
        let axis = (max - min).imax();
        let mid = (lo + hi) / 2;
        let points = &self.points;
        self.order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b))
        });
        self.split_axis[mid] = axis as u8;
        self.build(lo, mid);
        self.build(mid + 1, hi);
    }

    /// Nearest point to `q`; `None` on an empty tree.
    pub fn nearest(&self, q: &Vec3) -> Option<Neighbor> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = Neighbor {
            index: usize::MAX,
            dist_sq: f64::INFINITY,
        };
        self.nearest_in(q, 0, self.points.len(), &mut best);
        Some(best)
    }

    fn nearest_in(&self, q: &Vec3, lo: usize, hi: usize, best: &mut Neighbor) {
        if hi - lo <= LEAF_SIZE {
            for &i in &self.order[lo..hi] {
                let cand = Neighbor {
                    index: i,
                    dist_sq: (self.points[i] - q).norm_squared(),
                };
                if cand.better_than(best) {
                    *best = cand;
                }
            }
            return;
        }
        let mid = (lo + hi) / 2;
        let i = self.order[mid];
        let axis = self.split_axis[mid] as usize;
        let cand = Neighbor {
            index: i,
            dist_sq: (self.points[i] - q).norm_squared(),
        };
        if cand.better_than(best) {
            *best = cand;
        }
        let diff = q[axis] - self.points[i][axis];
        let (first, second) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.nearest_in(q, first.0, first.1, best);
        if diff * diff <= best.dist_sq {
            self.nearest_in(q, second.0, second.1, best);
        }
    }

    /// The `k` nearest points sorted by distance (then index).
    pub fn knn(&self, q: &Vec3, k: usize) -> Vec<Neighbor> {
        let mut heap = Vec::with_capacity(k + 1);
        if k > 0 && !self.points.is_empty() {
            self.knn_in(q, k, 0, self.points.len(), &mut heap);
        }
        heap
    }

    fn offer(heap: &mut Vec<Neighbor>, k: usize, cand: Neighbor) {
        if heap.len() == k && !cand.better_than(&heap[k - 1]) {
            return;
        }
        let pos = heap.partition_point(|n| n.better_than(&cand));
        heap.insert(pos, cand);
        heap.truncate(k);
    }

    fn knn_in(&self, q: &Vec3, k: usize, lo: usize, hi: usize, heap: &mut Vec<Neighbor>) {
        if hi - lo <= LEAF_SIZE {
            for &i in &self.order[lo..hi] {
                let dist_sq = (self.points[i] - q).norm_squared();
                Self::offer(heap, k, Neighbor { index: i, dist_sq });
            }
            return;
        }
        let mid = (lo + hi) / 2;
        let i = self.order[mid];
        let axis = self.split_axis[mid] as usize;
        let dist_sq = (self.points[i] - q).norm_squared();
        Self::offer(heap, k, Neighbor { index: i, dist_sq });
        let diff = q[axis] - self.points[i][axis];
        let (first, second) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.knn_in(q, k, first.0, first.1, heap);
        if heap.len() < k || diff * diff <= heap[heap.len() - 1].dist_sq {
            self.knn_in(q, k, second.0, second.1, heap);
        }
    }

    /// Indices of all points within `radius` of `q`, in ascending index order.
    pub fn within_radius(&self, q: &Vec3, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if !self.points.is_empty() {
            self.radius_in(q, radius * radius, 0, self.points.len(), &mut out);
        }
        out.sort_unstable();
        out
    }

    fn radius_in(&self, q: &Vec3, r2: f64, lo: usize, hi: usize, out: &mut Vec<usize>) {
        if hi - lo <= LEAF_SIZE {
            out.extend(
                self.order[lo..hi]
                    .iter()
                    .copied()
                    .filter(|&i| (self.points[i] - q).norm_squared() <= r2),
            );
            return;
        }
        let mid = (lo + hi) / 2;
        let i = self.order[mid];
        let axis = self.split_axis[mid] as usize;
        if (self.points[i] - q).norm_squared() <= r2 {
            out.push(i);
        }
        let diff = q[axis] - self.points[i][axis];
        if diff < 0.0 || diff * diff <= r2 {
            self.radius_in(q, r2, lo, mid, out);
        }
        if diff >= 0.0 || diff * diff <= r2 {
            self.radius_in(q, r2, mid + 1, hi, out);
        }
    }
}
