//! Random geometric test networks with planted, densely tied clusters.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::config::{parse_numbers, FlatConfig};
use crate::error::{Error, Result};
use crate::model::{pair_at, EdgeRecord, NodeRecord, SpatialSocialNetwork};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedCluster {
    pub center: [f64; 2],
    pub radius: f64,
    pub nodes: usize,
    /// Probability of a tie between two nodes of this cluster.
    pub edge_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub background_nodes: usize,
    /// `[min_x, min_y, max_x, max_y]` in meters.
    pub bbox: [f64; 4],
    /// Tie probability for every pair not inside the same planted cluster.
    pub background_p: f64,
    /// When set, the background probability of a pair at distance `d` is
    /// `background_p * exp(-d / decay)`.
    pub background_decay: Option<f64>,
    pub clusters: Vec<PlantedCluster>,
    pub seed: u64,
}

/// Label given to nodes of the `i`-th planted cluster.
pub fn cluster_label(i: usize) -> String {
    format!("cluster-{i}")
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidConfig(format!(
            "{what} must lie in [0, 1], got {p}"
        )));
    }
    Ok(())
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let [x0, y0, x1, y1] = self.bbox;
        if !self.bbox.iter().all(|v| v.is_finite()) || x1 < x0 || y1 < y0 {
            return Err(Error::InvalidConfig(format!(
                "bad bounding box {:?}",
                self.bbox
            )));
        }
        check_probability(self.background_p, "background_p")?;
        if let Some(decay) = self.background_decay {
            if !(decay.is_finite() && decay > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "background_decay must be positive, got {decay}"
                )));
            }
        }
        for (i, c) in self.clusters.iter().enumerate() {
            check_probability(c.edge_probability, &format!("cluster {i} edge probability"))?;
            if !(c.radius.is_finite() && c.radius >= 0.0) || !c.center.iter().all(|v| v.is_finite())
            {
                return Err(Error::InvalidConfig(format!(
                    "cluster {i} has a bad center or radius"
                )));
            }
        }
        Ok(())
    }

    /// Reads the flat config format:
    ///
    /// ```text
    /// background_nodes = 500
    /// bbox = 0, 0, 30000, 30000
    /// background_p = 0.005
    /// background_decay = 2000          # optional
    /// cluster = 15000, 15000, 300, 12, 0.8   # x, y, radius, nodes, p; repeatable
    /// seed = 42
    /// ```
    pub fn from_config(cfg: &FlatConfig) -> Result<Self> {
        cfg.check_keys(&[
            "background_nodes",
            "bbox",
            "background_p",
            "background_decay",
            "cluster",
            "seed",
        ])?;
        let bbox = match cfg.get("bbox")? {
            Some(entry) => {
                let v = parse_numbers(entry, 4)?;
                [v[0], v[1], v[2], v[3]]
            }
            None => return Err(Error::InvalidConfig("missing `bbox`".into())),
        };
        let clusters = cfg
            .all("cluster")
            .map(|entry| {
                let v = parse_numbers(entry, 5)?;
                if v[3] < 0.0 || v[3].fract() != 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "line {}: cluster node count must be a whole number",
                        entry.line
                    )));
                }
                Ok(PlantedCluster {
                    center: [v[0], v[1]],
                    radius: v[2],
                    nodes: v[3] as usize,
                    edge_probability: v[4],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = SyntheticSpec {
            background_nodes: cfg.require("background_nodes")?,
            bbox,
            background_p: cfg.parse_value("background_p")?.unwrap_or(0.0),
            background_decay: cfg.parse_value("background_decay")?,
            clusters,
            seed: cfg.require("seed")?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_config(&FlatConfig::read(path)?)
    }
}

/// Builds the network described by `spec`; a pure function of `spec`.
///
/// Nodes are numbered `n000000, n000001, ...`: background nodes first
/// (uniform in the bounding box), then each cluster's nodes (uniform in its
/// disk, labelled via [`cluster_label`]).
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SpatialSocialNetwork> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let [x0, y0, x1, y1] = spec.bbox;
    let mut nodes = Vec::new();
    let mut group: Vec<Option<usize>> = Vec::new();
    let uniform = |lo: f64, hi: f64, rng: &mut ChaCha8Rng| {
        if hi > lo {
            rng.gen_range(lo..hi)
        } else {
            lo
        }
    };
    for _ in 0..spec.background_nodes {
        let (x, y) = (uniform(x0, x1, &mut rng), uniform(y0, y1, &mut rng));
        nodes.push(NodeRecord::new(format!("n{:06}", nodes.len()), x, y));
        group.push(None);
    }
    for (c, cluster) in spec.clusters.iter().enumerate() {
        for _ in 0..cluster.nodes {
            let r = cluster.radius * rng.gen::<f64>().sqrt();
            let theta = 2.0 * PI * rng.gen::<f64>();
            let mut node = NodeRecord::new(
                format!("n{:06}", nodes.len()),
                cluster.center[0] + r * theta.cos(),
                cluster.center[1] + r * theta.sin(),
            );
            node.label = Some(cluster_label(c));
            nodes.push(node);
            group.push(Some(c));
        }
    }

    let n = nodes.len();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let same_cluster = |a: usize, b: usize| group[a].is_some() && group[a] == group[b];

    if spec.background_p > 0.0 && n >= 2 {
        match spec.background_decay {
            None => {
                // Skip between successes instead of testing all n^2/2 pairs.
                let total = (n as u64) * (n as u64 - 1) / 2;
                let mut t = 0u64;
                if spec.background_p >= 1.0 {
                    pairs.extend((0..total).map(|t| pair_at(t, n as u64)));
                } else {
                    let gap = Geometric::new(spec.background_p)
                        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
                    loop {
                        t = t.saturating_add(gap.sample(&mut rng));
                        if t >= total {
                            break;
                        }
                        pairs.push(pair_at(t, n as u64));
                        t += 1;
                    }
                }
                pairs.retain(|&(a, b)| !same_cluster(a, b));
            }
            Some(decay) => {
                for a in 0..n {
                    for b in a + 1..n {
                        if same_cluster(a, b) {
                            continue;
                        }
                        let d = ((nodes[a].x - nodes[b].x).powi(2)
                            + (nodes[a].y - nodes[b].y).powi(2))
                        .sqrt();
                        if rng.gen_bool(spec.background_p * (-d / decay).exp()) {
                            pairs.push((a, b));
                        }
                    }
                }
            }
        }
    }

    for (c, cluster) in spec.clusters.iter().enumerate() {
        let members: Vec<usize> = (0..n).filter(|&i| group[i] == Some(c)).collect();
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                if rng.gen_bool(cluster.edge_probability) {
                    pairs.push((a, b));
                }
            }
        }
    }

    let edges: Vec<EdgeRecord> = pairs
        .iter()
        .map(|&(a, b)| EdgeRecord::new(nodes[a].id.clone(), nodes[b].id.clone()))
        .collect();
    SpatialSocialNetwork::build(nodes, &edges)
}
