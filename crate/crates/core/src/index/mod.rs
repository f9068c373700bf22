//! Window retrieval: Euclidean radius, Manhattan radius and KNN queries.
//!
//! Three interchangeable backends answer the same queries with identical
//! member sets. Radial boundaries are inclusive. KNN ties at the cut-off
//! distance are broken by ascending node id.

mod grid;
mod kdtree;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SpatialSocialNetwork;
use crate::neighborhood::{NeighborhoodSpec, WindowMembership};

use grid::Grid;
use kdtree::KdTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    #[default]
    Grid,
    KdTree,
    BruteForce,
}

/// Relative slack applied when pruning cells or subtrees, so candidates
/// whose rounded distance lands on the boundary are still examined.
pub(crate) const PRUNE_SLACK: f64 = 1e-9;

#[inline]
pub(crate) fn dist_sq(p: [f64; 2], q: [f64; 2]) -> f64 {
    let dx = p[0] - q[0];
    let dy = p[1] - q[1];
    dx * dx + dy * dy
}

#[inline]
pub(crate) fn dist_l1(p: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - q[0]).abs() + (p[1] - q[1]).abs()
}

/// Ordering key for KNN candidates: squared distance, then tie rank.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Candidate {
    pub dist_sq: f64,
    pub rank: u32,
    pub index: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.rank.cmp(&other.rank))
    }
}

/// Bounded max-heap keeping the `cap` smallest candidates.
pub(crate) struct NearestSet {
    cap: usize,
    heap: BinaryHeap<Candidate>,
}

impl NearestSet {
    pub fn new(cap: usize) -> Self {
        NearestSet {
            cap,
            heap: BinaryHeap::with_capacity(cap + 1),
        }
    }

    pub fn offer(&mut self, c: Candidate) {
        if self.heap.len() < self.cap {
            self.heap.push(c);
        } else if let Some(top) = self.heap.peek() {
            if c < *top {
                self.heap.pop();
                self.heap.push(c);
            }
        }
    }

    pub fn is_full(&self) -> bool {
        self.heap.len() >= self.cap
    }

    /// Squared distance of the current worst kept candidate.
    pub fn worst(&self) -> Option<f64> {
        if self.is_full() {
            self.heap.peek().map(|c| c.dist_sq)
        } else {
            None
        }
    }

    pub fn into_indices(self) -> impl Iterator<Item = usize> {
        self.heap.into_iter().map(|c| c.index)
    }
}

#[derive(Debug, Clone)]
enum Inner {
    Grid(Grid),
    KdTree(KdTree),
    BruteForce,
}

/// Immutable point index over a fixed set of planar points.
#[derive(Debug, Clone)]
pub struct PointIndex {
    points: Vec<[f64; 2]>,
    ranks: Vec<u32>,
    inner: Inner,
}

impl PointIndex {
    /// Indexes the network's nodes; KNN ties are broken by node id.
    pub fn build(net: &SpatialSocialNetwork, backend: Backend) -> Self {
        let mut order: Vec<usize> = (0..net.node_count()).collect();
        order.sort_by(|&a, &b| net.node(a).id.cmp(&net.node(b).id));
        let mut ranks = vec![0u32; order.len()];
        for (rank, &i) in order.iter().enumerate() {
            ranks[i] = rank as u32;
        }
        Self::with_ranks(net.points(), ranks, backend)
    }

    /// Indexes bare points; KNN ties are broken by point position.
    pub fn from_points(points: Vec<[f64; 2]>, backend: Backend) -> Self {
        let ranks = (0..points.len() as u32).collect();
        Self::with_ranks(points, ranks, backend)
    }

    fn with_ranks(points: Vec<[f64; 2]>, ranks: Vec<u32>, backend: Backend) -> Self {
        let inner = match backend {
            Backend::Grid => Inner::Grid(Grid::build(&points)),
            Backend::KdTree => Inner::KdTree(KdTree::build(&points)),
            Backend::BruteForce => Inner::BruteForce,
        };
        PointIndex {
            points,
            ranks,
            inner,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn backend(&self) -> Backend {
        match self.inner {
            Inner::Grid(_) => Backend::Grid,
            Inner::KdTree(_) => Backend::KdTree,
            Inner::BruteForce => Backend::BruteForce,
        }
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn query(&self, focal: usize, spec: &NeighborhoodSpec) -> Result<WindowMembership> {
        let mut members = Vec::new();
        self.query_into(focal, spec, &mut members)?;
        Ok(WindowMembership { focal, members })
    }

    pub fn query_radius_euclidean(&self, focal: usize, radius: f64) -> Result<WindowMembership> {
        self.query(focal, &NeighborhoodSpec::euclidean(radius)?)
    }

    pub fn query_radius_manhattan(&self, focal: usize, radius: f64) -> Result<WindowMembership> {
        self.query(focal, &NeighborhoodSpec::manhattan(radius)?)
    }

    pub fn query_knn(&self, focal: usize, k: usize) -> Result<WindowMembership> {
        self.query(focal, &NeighborhoodSpec::knn(k)?)
    }

    /// Writes the sorted member indices of `focal`'s window into `out`.
    pub(crate) fn query_into(
        &self,
        focal: usize,
        spec: &NeighborhoodSpec,
        out: &mut Vec<usize>,
    ) -> Result<()> {
        if focal >= self.points.len() {
            return Err(Error::UnknownNode(focal));
        }
        spec.validate()?;
        out.clear();
        if let NeighborhoodSpec::Knn { k } = *spec {
            if k > self.points.len() {
                return Err(Error::InsufficientNodes {
                    k,
                    n: self.points.len(),
                });
            }
        }
        match &self.inner {
            Inner::Grid(grid) => grid.query(&self.points, &self.ranks, focal, spec, out),
            Inner::KdTree(tree) => tree.query(&self.points, &self.ranks, focal, spec, out),
            Inner::BruteForce => {
                let window = oracle_query(&self.points, &self.ranks, focal, spec)?;
                *out = window.members;
                return Ok(());
            }
        }
        out.sort_unstable();
        Ok(())
    }
}

/// Exhaustive O(n) window query used as the reference answer.
///
/// `keys` breaks KNN distance ties (smaller key wins) and must hold one
/// distinct key per point.
pub fn oracle_query<K: Ord>(
    points: &[[f64; 2]],
    keys: &[K],
    focal: usize,
    spec: &NeighborhoodSpec,
) -> Result<WindowMembership> {
    if focal >= points.len() {
        return Err(Error::UnknownNode(focal));
    }
    spec.validate()?;
    let q = points[focal];
    let mut members: Vec<usize> = match *spec {
        NeighborhoodSpec::Euclidean { radius } => (0..points.len())
            .filter(|&i| {
                let dx = points[i][0] - q[0];
                let dy = points[i][1] - q[1];
                i == focal || dx * dx + dy * dy <= radius * radius
            })
            .collect(),
        NeighborhoodSpec::Manhattan { radius } => (0..points.len())
            .filter(|&i| {
                i == focal || (points[i][0] - q[0]).abs() + (points[i][1] - q[1]).abs() <= radius
            })
            .collect(),
        NeighborhoodSpec::Knn { k } => {
            if k > points.len() {
                return Err(Error::InsufficientNodes { k, n: points.len() });
            }
            let mut others: Vec<(f64, &K, usize)> = (0..points.len())
                .filter(|&i| i != focal)
                .map(|i| {
                    let dx = points[i][0] - q[0];
                    let dy = points[i][1] - q[1];
                    (dx * dx + dy * dy, &keys[i], i)
                })
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
            others.truncate(k - 1);
            let mut m: Vec<usize> = others.into_iter().map(|(_, _, i)| i).collect();
            m.push(focal);
            m
        }
    };
    members.sort_unstable();
    Ok(WindowMembership { focal, members })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NodeRecord;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    const BACKENDS: [Backend; 3] = [Backend::Grid, Backend::KdTree, Backend::BruteForce];

    // A(0,0) B(300,0) C(0,400) D(2000,0) E(300,300)
    fn five() -> SpatialSocialNetwork {
        let nodes = vec![
            NodeRecord::new("A", 0.0, 0.0),
            NodeRecord::new("B", 300.0, 0.0),
            NodeRecord::new("C", 0.0, 400.0),
            NodeRecord::new("D", 2000.0, 0.0),
            NodeRecord::new("E", 300.0, 300.0),
        ];
        SpatialSocialNetwork::build(nodes, &[]).unwrap()
    }

    fn ids(net: &SpatialSocialNetwork, w: &WindowMembership) -> String {
        w.members.iter().map(|&i| net.node(i).id.as_str()).collect()
    }

    #[test]
    fn euclidean_examples() {
        let net = five();
        for backend in BACKENDS {
            let idx = PointIndex::build(&net, backend);
            assert_eq!(
                ids(&net, &idx.query_radius_euclidean(0, 500.0).unwrap()),
                "ABCE"
            );
            assert_eq!(ids(&net, &idx.query_radius_euclidean(0, 1.0).unwrap()), "A");
            assert_eq!(
                ids(&net, &idx.query_radius_euclidean(0, 2000.0).unwrap()),
                "ABCDE"
            );
            assert_eq!(
                ids(&net, &idx.query_radius_euclidean(0, 1999.999).unwrap()),
                "ABCE"
            );
        }
    }

    #[test]
    fn manhattan_examples() {
        let net = five();
        for backend in BACKENDS {
            let idx = PointIndex::build(&net, backend);
            assert_eq!(
                ids(&net, &idx.query_radius_manhattan(0, 500.0).unwrap()),
                "ABC"
            );
            assert_eq!(
                ids(&net, &idx.query_radius_manhattan(0, 600.0).unwrap()),
                "ABCE"
            );
            assert_eq!(
                ids(&net, &idx.query_radius_manhattan(3, 1000.0).unwrap()),
                "D"
            );
        }
    }

    #[test]
    fn knn_examples() {
        let net = five();
        for backend in BACKENDS {
            let idx = PointIndex::build(&net, backend);
            assert_eq!(ids(&net, &idx.query_knn(0, 3).unwrap()), "ABC");
            assert_eq!(ids(&net, &idx.query_knn(0, 5).unwrap()), "ABCDE");
            assert!(matches!(
                idx.query_knn(0, 6),
                Err(Error::InsufficientNodes { k: 6, n: 5 })
            ));
            assert!(matches!(idx.query_knn(9, 2), Err(Error::UnknownNode(9))));
        }
    }

    #[test]
    fn oracle_reproduces_examples() {
        let net = five();
        let pts = net.points();
        let keys: Vec<&str> = net.nodes().iter().map(|n| n.id.as_str()).collect();
        let q = |spec: &str| {
            let w = oracle_query(&pts, &keys, 0, &spec.parse().unwrap()).unwrap();
            ids(&net, &w)
        };
        assert_eq!(q("kind=euclidean,r=500"), "ABCE");
        assert_eq!(q("kind=euclidean,r=1"), "A");
        assert_eq!(q("kind=euclidean,r=2000"), "ABCDE");
        assert_eq!(q("kind=manhattan,r=500"), "ABC");
        assert_eq!(q("kind=manhattan,r=600"), "ABCE");
        assert_eq!(q("kind=knn,k=3"), "ABC");
        assert_eq!(q("kind=knn,k=5"), "ABCDE");
    }

    #[test]
    fn knn_ties_break_by_id() {
        // Four nodes equidistant from the focal; ids deliberately out of
        // insertion order.
        let nodes = vec![
            NodeRecord::new("m", 0.0, 0.0),
            NodeRecord::new("z", 10.0, 0.0),
            NodeRecord::new("b", -10.0, 0.0),
            NodeRecord::new("y", 0.0, 10.0),
            NodeRecord::new("c", 0.0, -10.0),
        ];
        let net = SpatialSocialNetwork::build(nodes, &[]).unwrap();
        for backend in BACKENDS {
            let idx = PointIndex::build(&net, backend);
            assert_eq!(ids(&net, &idx.query_knn(0, 3).unwrap()), "mbc");
        }
    }

    #[test]
    fn colocated_points() {
        let pts = vec![[1.0, 1.0]; 6];
        for backend in BACKENDS {
            let idx = PointIndex::from_points(pts.clone(), backend);
            assert_eq!(idx.query_knn(3, 3).unwrap().members, vec![0, 1, 3]);
            assert_eq!(idx.query_radius_euclidean(2, 0.5).unwrap().m(), 6);
        }
    }

    #[test]
    fn collinear_points() {
        let pts: Vec<[f64; 2]> = (0..50).map(|i| [i as f64 * 10.0, 7.0]).collect();
        for backend in BACKENDS {
            let idx = PointIndex::from_points(pts.clone(), backend);
            assert_eq!(
                idx.query_radius_manhattan(10, 20.0).unwrap().members,
                vec![8, 9, 10, 11, 12]
            );
            assert_eq!(idx.query_knn(0, 4).unwrap().members, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn backends_agree_on_clustered_data() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut pts = Vec::new();
        for _ in 0..300 {
            pts.push([rng.gen_range(0.0..10_000.0), rng.gen_range(0.0..500.0)]);
        }
        for _ in 0..100 {
            // snapped coordinates produce many exact distance ties
            pts.push([
                (rng.gen_range(0..20) * 50) as f64,
                (rng.gen_range(0..20) * 50) as f64,
            ]);
        }
        let keys: Vec<usize> = (0..pts.len()).collect();
        let grid = PointIndex::from_points(pts.clone(), Backend::Grid);
        let tree = PointIndex::from_points(pts.clone(), Backend::KdTree);
        for focal in (0..pts.len()).step_by(7) {
            for spec in [
                NeighborhoodSpec::Euclidean { radius: 150.0 },
                NeighborhoodSpec::Manhattan { radius: 100.0 },
                NeighborhoodSpec::Knn { k: 9 },
                NeighborhoodSpec::Knn { k: 40 },
            ] {
                let want = oracle_query(&pts, &keys, focal, &spec).unwrap();
                assert_eq!(grid.query(focal, &spec).unwrap(), want);
                assert_eq!(tree.query(focal, &spec).unwrap(), want);
            }
        }
    }

    fn arb_points() -> impl Strategy<Value = Vec<[f64; 2]>> {
        proptest::collection::vec((-500i32..500, -500i32..500), 2..120).prop_map(|v| {
            v.into_iter()
                .map(|(x, y)| [x as f64 * 3.0, y as f64 * 3.0])
                .collect()
        })
    }

    proptest! {
        #[test]
        fn radius_monotone_and_contained(
            pts in arb_points(),
            focal_seed in any::<usize>(),
            r1 in 1.0f64..800.0,
            extra in 0.0f64..800.0,
        ) {
            let focal = focal_seed % pts.len();
            let idx = PointIndex::from_points(pts, Backend::Grid);
            let r2 = r1 + extra;
            for make in [NeighborhoodSpec::euclidean, NeighborhoodSpec::manhattan] {
                let small = idx.query(focal, &make(r1).unwrap()).unwrap();
                let large = idx.query(focal, &make(r2).unwrap()).unwrap();
                prop_assert!(small.members.iter().all(|m| large.contains(*m)));
                prop_assert!(small.contains(focal));
            }
            let l1 = idx.query_radius_manhattan(focal, r1).unwrap();
            let l2 = idx.query_radius_euclidean(focal, r1).unwrap();
            prop_assert!(l1.members.iter().all(|m| l2.contains(*m)));
        }

        #[test]
        fn knn_cardinality_exact(pts in arb_points(), focal_seed in any::<usize>(), k_seed in any::<usize>()) {
            let focal = focal_seed % pts.len();
            let k = 2 + k_seed % (pts.len() - 1);
            let keys: Vec<usize> = (0..pts.len()).collect();
            let want = oracle_query(&pts, &keys, focal, &NeighborhoodSpec::Knn { k }).unwrap();
            prop_assert_eq!(want.m(), k);
            for backend in [Backend::Grid, Backend::KdTree] {
                let idx = PointIndex::from_points(pts.clone(), backend);
                prop_assert_eq!(&idx.query_knn(focal, k).unwrap(), &want);
            }
        }
    }
}
