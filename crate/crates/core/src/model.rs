//! Geolocated nodes, undirected ties between them, and whole-network measures.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: String,
    /// Projected easting in meters.
    pub x: f64,
    /// Projected northing in meters.
    pub y: f64,
    pub label: Option<String>,
}

impl NodeRecord {
    pub fn new(id: impl Into<String>, x: f64, y: f64) -> Self {
        NodeRecord {
            id: id.into(),
            x,
            y,
            label: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub a: String,
    pub b: String,
}

impl EdgeRecord {
    pub fn new(a: impl Into<String>, b: impl Into<String>) -> Self {
        EdgeRecord {
            a: a.into(),
            b: b.into(),
        }
    }
}

/// Network density of `nodes` nodes joined by `edges` undirected edges:
/// observed edges over the `nodes * (nodes - 1) / 2` possible ones.
///
/// Defined as 0 when fewer than two nodes are present.
pub fn density(edges: u64, nodes: usize) -> f64 {
    if nodes < 2 {
        return 0.0;
    }
    let potential = (nodes as u64) * (nodes as u64 - 1) / 2;
    edges as f64 / potential as f64
}

/// Number of unordered node triples among `nodes` nodes.
pub fn triples(nodes: usize) -> u64 {
    if nodes < 3 {
        return 0;
    }
    let n = nodes as u128;
    (n * (n - 1) * (n - 2) / 6) as u64
}

pub(crate) fn row_start(i: u64, n: u64) -> u64 {
    i * (2 * n - i - 1) / 2
}

/// Maps a position in the row-major list of pairs `i < j` back to the pair.
pub(crate) fn pair_at(t: u64, n: u64) -> (usize, usize) {
    let b = (2 * n - 1) as f64;
    let guess = ((b - (b * b - 8.0 * t as f64).max(0.0).sqrt()) / 2.0).floor();
    let mut i = (guess.max(0.0) as u64).min(n - 2);
    while i > 0 && row_start(i, n) > t {
        i -= 1;
    }
    while i + 1 < n - 1 && row_start(i + 1, n) <= t {
        i += 1;
    }
    let j = t - row_start(i, n) + i + 1;
    (i as usize, j as usize)
}

/// A simple undirected graph whose nodes carry planar coordinates.
///
/// Nodes are addressed internally by their position in the input order.
/// Edges are stored once as `(lo, hi)` index pairs and mirrored into a
/// sorted adjacency list. The node table is reference counted so rewired
/// copies share it.
#[derive(Debug, Clone)]
pub struct SpatialSocialNetwork {
    nodes: Arc<[NodeRecord]>,
    lookup: Arc<HashMap<String, usize>>,
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    duplicate_edges: usize,
}

impl SpatialSocialNetwork {
    /// Validates the records and builds the adjacency structure.
    ///
    /// Repeated unordered pairs are collapsed into a single edge and counted
    /// in [`duplicate_edges`](Self::duplicate_edges).
    pub fn build(nodes: Vec<NodeRecord>, edges: &[EdgeRecord]) -> Result<Self> {
        let mut lookup = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if !node.x.is_finite() || !node.y.is_finite() {
                return Err(Error::NonFiniteCoordinate {
                    id: node.id.clone(),
                });
            }
            if lookup.insert(node.id.clone(), i).is_some() {
                return Err(Error::DuplicateNodeId(node.id.clone()));
            }
        }

        let mut pairs = Vec::with_capacity(edges.len());
        for (position, edge) in edges.iter().enumerate() {
            let resolve = |id: &String| {
                lookup.get(id).copied().ok_or_else(|| Error::DanglingEdge {
                    position,
                    id: id.clone(),
                })
            };
            let a = resolve(&edge.a)?;
            let b = resolve(&edge.b)?;
            if a == b {
                return Err(Error::SelfLoop {
                    position,
                    id: edge.a.clone(),
                });
            }
            pairs.push((a.min(b), a.max(b)));
        }
        pairs.sort_unstable();
        let before = pairs.len();
        pairs.dedup();
        let duplicate_edges = before - pairs.len();
        if duplicate_edges > 0 {
            log::warn!("collapsed {duplicate_edges} duplicate edge(s)");
        }

        let mut net = Self::from_parts(nodes.into(), Arc::new(lookup), pairs);
        net.duplicate_edges = duplicate_edges;
        Ok(net)
    }

    /// Builds a network sharing this one's node table but with a new edge set.
    ///
    /// `pairs` must hold distinct `(lo, hi)` pairs with `lo < hi < n`.
    pub(crate) fn with_edge_pairs(&self, mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        debug_assert!(pairs.windows(2).all(|w| w[0] != w[1]));
        debug_assert!(pairs.iter().all(|&(a, b)| a < b && b < self.nodes.len()));
        Self::from_parts(self.nodes.clone(), self.lookup.clone(), pairs)
    }

    fn from_parts(
        nodes: Arc<[NodeRecord]>,
        lookup: Arc<HashMap<String, usize>>,
        edges: Vec<(usize, usize)>,
    ) -> Self {
        let n = nodes.len();
        let mut degree = vec![0usize; n];
        for &(a, b) in &edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut targets = vec![0usize; offsets[n]];
        // Edges are sorted by (lo, hi), so writing both directions in this
        // order leaves every adjacency list sorted.
        for &(a, b) in &edges {
            targets[fill[b]] = a;
            fill[b] += 1;
        }
        for &(a, b) in &edges {
            targets[fill[a]] = b;
            fill[a] += 1;
        }
        for i in 0..n {
            debug_assert!(targets[offsets[i]..offsets[i + 1]]
                .windows(2)
                .all(|w| w[0] < w[1]));
        }
        SpatialSocialNetwork {
            nodes,
            lookup,
            edges,
            offsets,
            targets,
            duplicate_edges: 0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> &NodeRecord {
        &self.nodes[index]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    /// Canonical `(lo, hi)` index pairs in ascending order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbor indices of `index`.
    pub fn neighbors(&self, index: usize) -> &[usize] {
        &self.targets[self.offsets[index]..self.offsets[index + 1]]
    }

    pub fn degree(&self, index: usize) -> usize {
        self.offsets[index + 1] - self.offsets[index]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.node_count()).map(|i| self.degree(i)).collect()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let (probe, other) = if self.degree(a) <= self.degree(b) {
            (a, b)
        } else {
            (b, a)
        };
        self.neighbors(probe).binary_search(&other).is_ok()
    }

    /// Number of repeated unordered pairs dropped during [`build`](Self::build).
    pub fn duplicate_edges(&self) -> usize {
        self.duplicate_edges
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        self.nodes.iter().map(|n| [n.x, n.y]).collect()
    }

    /// Density of the whole network, `2e / (n (n - 1))`.
    pub fn global_density(&self) -> Result<f64> {
        if self.node_count() < 2 {
            return Err(Error::DegenerateNetwork {
                nodes: self.node_count(),
                required: 2,
            });
        }
        Ok(density(self.edge_count() as u64, self.node_count()))
    }

    /// Mean node degree, `2e / n`. Zero for an empty network.
    pub fn average_degree(&self) -> f64 {
        if self.nodes.is_empty() {
            return 0.0;
        }
        2.0 * self.edge_count() as f64 / self.node_count() as f64
    }

    /// Records describing this network; feeding them back to
    /// [`build`](Self::build) reproduces it.
    pub fn to_records(&self) -> (Vec<NodeRecord>, Vec<EdgeRecord>) {
        let edges = self
            .edges
            .iter()
            .map(|&(a, b)| EdgeRecord::new(self.nodes[a].id.clone(), self.nodes[b].id.clone()))
            .collect();
        (self.nodes.to_vec(), edges)
    }

    /// SHA-256 over the node table and the canonical edge list.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for node in self.nodes.iter() {
            hasher.update(node.id.as_bytes());
            hasher.update([0]);
            hasher.update(node.x.to_bits().to_le_bytes());
            hasher.update(node.y.to_bits().to_le_bytes());
        }
        hasher.update([0xff]);
        for &(a, b) in &self.edges {
            hasher.update((a as u64).to_le_bytes());
            hasher.update((b as u64).to_le_bytes());
        }
        hex(&hasher.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
