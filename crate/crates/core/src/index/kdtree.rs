// Static 2-d tree stored as a permutation of point indices. The subtree over
// `order[lo..hi]` is split at `mid = (lo + hi) / 2`; everything left of mid
// is <= the pivot on the split axis, everything right is >=.

use super::{dist_l1, dist_sq, Candidate, NearestSet, PRUNE_SLACK};
use crate::neighborhood::NeighborhoodSpec;

const LEAF: usize = 8;

#[derive(Debug, Clone)]
pub(crate) struct KdTree {
    order: Vec<usize>,
    /// Split axis per subtree midpoint, indexed like `order`.
    axis: Vec<u8>,
}

impl KdTree {
    pub fn build(points: &[[f64; 2]]) -> Self {
        let mut tree = KdTree {
            order: (0..points.len()).collect(),
            axis: vec![0; points.len()],
        };
        tree.split(points, 0, points.len());
        tree
    }

    fn split(&mut self, points: &[[f64; 2]], lo: usize, hi: usize) {
        if hi - lo <= LEAF {
            return;
        }
        // split on the wider extent
        let (mut min, mut max) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for &i in &self.order[lo..hi] {
            for a in 0..2 {
                min[a] = min[a].min(points[i][a]);
                max[a] = max[a].max(points[i][a]);
            }
        }
        let axis = usize::from(max[1] - min[1] > max[0] - min[0]);
        let mid = (lo + hi) / 2;
        self.order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis])
        });
        self.axis[mid] = axis as u8;
        self.split(points, lo, mid);
        self.split(points, mid + 1, hi);
    }

    pub fn query(
        &self,
        points: &[[f64; 2]],
        ranks: &[u32],
        focal: usize,
        spec: &NeighborhoodSpec,
        out: &mut Vec<usize>,
    ) {
        let q = points[focal];
        let n = self.order.len();
        match *spec {
            NeighborhoodSpec::Euclidean { radius } => {
                let r2 = radius * radius;
                let reach = radius * (1.0 + PRUNE_SLACK);
                self.radial(points, q, reach, 0, n, out, &|p| dist_sq(p, q) <= r2);
            }
            NeighborhoodSpec::Manhattan { radius } => {
                let reach = radius * (1.0 + PRUNE_SLACK);
                self.radial(points, q, reach, 0, n, out, &|p| dist_l1(p, q) <= radius);
            }
            NeighborhoodSpec::Knn { k } => {
                let mut nearest = NearestSet::new(k - 1);
                self.knn(points, ranks, focal, 0, n, &mut nearest);
                out.extend(nearest.into_indices());
                out.push(focal);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn radial(
        &self,
        points: &[[f64; 2]],
        q: [f64; 2],
        reach: f64,
        lo: usize,
        hi: usize,
        out: &mut Vec<usize>,
        inside: &dyn Fn([f64; 2]) -> bool,
    ) {
        if hi - lo <= LEAF {
            out.extend(
                self.order[lo..hi]
                    .iter()
                    .copied()
                    .filter(|&i| inside(points[i])),
            );
            return;
        }
        let mid = (lo + hi) / 2;
        let pivot = self.order[mid];
        let axis = self.axis[mid] as usize;
        if inside(points[pivot]) {
            out.push(pivot);
        }
        let diff = q[axis] - points[pivot][axis];
        if diff <= reach {
            self.radial(points, q, reach, lo, mid, out, inside);
        }
        if -diff <= reach {
            self.radial(points, q, reach, mid + 1, hi, out, inside);
        }
    }

    fn knn(
        &self,
        points: &[[f64; 2]],
        ranks: &[u32],
        focal: usize,
        lo: usize,
        hi: usize,
        nearest: &mut NearestSet,
    ) {
        let q = points[focal];
        let mut offer = |i: usize| {
            if i != focal {
                nearest.offer(Candidate {
                    dist_sq: dist_sq(points[i], q),
                    rank: ranks[i],
                    index: i,
                });
            }
        };
        if hi - lo <= LEAF {
            for &i in &self.order[lo..hi] {
                offer(i);
            }
            return;
        }
        let mid = (lo + hi) / 2;
        let pivot = self.order[mid];
        offer(pivot);
        let axis = self.axis[mid] as usize;
        let diff = q[axis] - points[pivot][axis];
        let (near, far) = if diff <= 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.knn(points, ranks, focal, near.0, near.1, nearest);
        let prune = match nearest.worst() {
            Some(worst) => diff * diff > worst * (1.0 + PRUNE_SLACK),
            None => false,
        };
        if !prune {
            self.knn(points, ranks, focal, far.0, far.1, nearest);
        }
    }
}
