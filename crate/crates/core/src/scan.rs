//! EdgeScan, NDScan and triad scans over every node of a network.
//!
//! For each focal node the window is retrieved once and all statistics are
//! computed from it: the number of edges with both endpoints inside, the
//! density of the induced subgraph, and optionally the number of closed
//! triangles and the share of member triples they represent.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::PointIndex;
use crate::model::{density, triples, SpatialSocialNetwork};
use crate::neighborhood::NeighborhoodSpec;
use crate::parallel::map_indexed;

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatKind {
    EdgeCount,
    Density,
    Triads,
    Transitivity,
}

impl StatKind {
    pub const ALL: [StatKind; 4] = [
        StatKind::EdgeCount,
        StatKind::Density,
        StatKind::Triads,
        StatKind::Transitivity,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StatKind::EdgeCount => "edge_count",
            StatKind::Density => "density",
            StatKind::Triads => "triads",
            StatKind::Transitivity => "transitivity",
        }
    }

    pub fn needs_triads(&self) -> bool {
        matches!(self, StatKind::Triads | StatKind::Transitivity)
    }
}

impl fmt::Display for StatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StatKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "edgescan" | "edge_count" | "edges" => Ok(StatKind::EdgeCount),
            "ndscan" | "density" => Ok(StatKind::Density),
            "triads" | "triangles" => Ok(StatKind::Triads),
            "transitivity" => Ok(StatKind::Transitivity),
            other => Err(Error::InvalidConfig(format!("unknown statistic `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanValue {
    pub focal: usize,
    /// Window cardinality, focal node included.
    pub m: usize,
    pub edge_count: u64,
    pub density: f64,
    pub triads: Option<u64>,
    pub transitivity: Option<f64>,
}

impl ScanValue {
    pub fn get(&self, kind: StatKind) -> Option<f64> {
        match kind {
            StatKind::EdgeCount => Some(self.edge_count as f64),
            StatKind::Density => Some(self.density),
            StatKind::Triads => self.triads.map(|t| t as f64),
            StatKind::Transitivity => self.transitivity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// [`SpatialSocialNetwork::fingerprint`] of the scanned network.
    pub network: String,
    pub spec: String,
    pub engine_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub spec: NeighborhoodSpec,
    /// One value per network node, in node order.
    pub values: Vec<ScanValue>,
    pub provenance: Provenance,
}

impl ScanResult {
    pub fn has(&self, kind: StatKind) -> bool {
        !kind.needs_triads() || self.values.iter().all(|v| v.triads.is_some())
    }

    /// Per-node values of one statistic, in node order.
    pub fn column(&self, kind: StatKind) -> Result<Vec<f64>> {
        self.values
            .iter()
            .map(|v| v.get(kind).ok_or(Error::MissingStatistic(kind.name())))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanOptions {
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    /// Also count triangles (costlier than edges alone).
    pub triads: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            workers: 0,
            triads: true,
        }
    }
}

/// Reusable per-worker buffers for window evaluation.
pub(crate) struct WindowScratch {
    in_window: Vec<u32>,
    window_epoch: u32,
    linked: Vec<u32>,
    linked_epoch: u32,
    pub members: Vec<usize>,
}

impl WindowScratch {
    pub fn new(n: usize) -> Self {
        WindowScratch {
            in_window: vec![0; n],
            window_epoch: 0,
            linked: vec![0; n],
            linked_epoch: 0,
            members: Vec::new(),
        }
    }

    fn bump(marks: &mut [u32], epoch: &mut u32) -> u32 {
        if *epoch == u32::MAX {
            marks.fill(0);
            *epoch = 0;
        }
        *epoch += 1;
        *epoch
    }
}

/// Edges and (optionally) triangles of the subgraph of `net` induced by
/// `members`.
pub(crate) fn window_counts(
    net: &SpatialSocialNetwork,
    members: &[usize],
    scratch: &mut WindowScratch,
    with_triads: bool,
) -> (u64, Option<u64>) {
    let epoch = WindowScratch::bump(&mut scratch.in_window, &mut scratch.window_epoch);
    for &u in members {
        scratch.in_window[u] = epoch;
    }
    let mut edges = 0u64;
    for &u in members {
        edges += net
            .neighbors(u)
            .iter()
            .filter(|&&v| v > u && scratch.in_window[v] == epoch)
            .count() as u64;
    }
    if !with_triads || edges < 3 {
        return (edges, with_triads.then_some(0));
    }

    // Count each triangle u < v < w once: mark u's in-window higher
    // neighbors, then look for marked nodes among v's higher neighbors.
    let mut triads = 0u64;
    for &u in members {
        let lepoch = WindowScratch::bump(&mut scratch.linked, &mut scratch.linked_epoch);
        let mut any = false;
        for &v in net.neighbors(u) {
            if v > u && scratch.in_window[v] == epoch {
                scratch.linked[v] = lepoch;
                any = true;
            }
        }
        if !any {
            continue;
        }
        for &v in net.neighbors(u) {
            if v > u && scratch.linked[v] == lepoch {
                triads += net
                    .neighbors(v)
                    .iter()
                    .filter(|&&w| w > v && scratch.linked[w] == lepoch)
                    .count() as u64;
            }
        }
    }
    (edges, Some(triads))
}

pub(crate) fn make_value(focal: usize, m: usize, edges: u64, triads: Option<u64>) -> ScanValue {
    ScanValue {
        focal,
        m,
        edge_count: edges,
        density: density(edges, m),
        triads,
        transitivity: triads.map(|t| {
            let possible = triples(m);
            if possible == 0 {
                0.0
            } else {
                t as f64 / possible as f64
            }
        }),
    }
}

pub(crate) fn check_inputs(
    net: &SpatialSocialNetwork,
    index: &PointIndex,
    spec: &NeighborhoodSpec,
) -> Result<()> {
    spec.validate()?;
    if index.len() != net.node_count() {
        return Err(Error::IndexMismatch {
            index: index.len(),
            network: net.node_count(),
        });
    }
    if let NeighborhoodSpec::Knn { k } = *spec {
        if k > net.node_count() {
            return Err(Error::SpecMismatch {
                spec: spec.to_string(),
                n: net.node_count(),
            });
        }
    }
    Ok(())
}

/// Window memberships of every node, in node order.
pub fn memberships(
    index: &PointIndex,
    spec: &NeighborhoodSpec,
    workers: usize,
) -> Result<Vec<Vec<usize>>> {
    map_indexed(index.len(), workers, Vec::new, |buf, focal| {
        index.query_into(focal, spec, buf)?;
        Ok(buf.clone())
    })
}

/// Scans every node of `net` with `spec`.
pub fn scan(
    net: &SpatialSocialNetwork,
    index: &PointIndex,
    spec: &NeighborhoodSpec,
    options: &ScanOptions,
) -> Result<ScanResult> {
    check_inputs(net, index, spec)?;
    let n = net.node_count();
    let values = map_indexed(
        n,
        options.workers,
        || WindowScratch::new(n),
        |scratch, focal| {
            let mut members = std::mem::take(&mut scratch.members);
            index.query_into(focal, spec, &mut members)?;
            let (edges, triads) = window_counts(net, &members, scratch, options.triads);
            let value = make_value(focal, members.len(), edges, triads);
            scratch.members = members;
            Ok(value)
        },
    )?;
    Ok(ScanResult {
        spec: *spec,
        values,
        provenance: Provenance {
            network: net.fingerprint(),
            spec: spec.to_string(),
            engine_version: ENGINE_VERSION.to_string(),
        },
    })
}

/// EdgeScan (and the density that comes with it) without triangle counting.
pub fn edge_scan(
    net: &SpatialSocialNetwork,
    index: &PointIndex,
    spec: &NeighborhoodSpec,
) -> Result<ScanResult> {
    scan(
        net,
        index,
        spec,
        &ScanOptions {
            triads: false,
            ..Default::default()
        },
    )
}

/// NDScan; same pass as [`edge_scan`].
pub fn nd_scan(
    net: &SpatialSocialNetwork,
    index: &PointIndex,
    spec: &NeighborhoodSpec,
) -> Result<ScanResult> {
    edge_scan(net, index, spec)
}

/// Full scan including local triangle counts and transitivity.
pub fn triad_scan(
    net: &SpatialSocialNetwork,
    index: &PointIndex,
    spec: &NeighborhoodSpec,
) -> Result<ScanResult> {
    scan(net, index, spec, &ScanOptions::default())
}

/// Runs one scan per spec. A failing spec is recorded in place and the
/// remaining specs still run. Duplicate specs produce duplicate results.
pub fn run_scan_suite(
    net: &SpatialSocialNetwork,
    index: &PointIndex,
    specs: &[NeighborhoodSpec],
    options: &ScanOptions,
) -> Result<Vec<Result<ScanResult>>> {
    if specs.is_empty() {
        return Err(Error::EmptySpecList);
    }
    Ok(specs
        .iter()
        .map(|spec| scan(net, index, spec, options).inspect_err(|e| log::error!("{spec}: {e}")))
        .collect())
}

/// Total triangle count of the network and its share of all node triples.
pub fn global_triads(net: &SpatialSocialNetwork) -> Result<(u64, f64)> {
    let n = net.node_count();
    if n < 3 {
        return Err(Error::DegenerateNetwork {
            nodes: n,
            required: 3,
        });
    }
    let mut count = 0u64;
    for &(u, v) in net.edges() {
        let (a, b) = (net.neighbors(u), net.neighbors(v));
        let (mut i, mut j) = (
            a.partition_point(|&w| w <= v),
            b.partition_point(|&w| w <= v),
        );
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    Ok((count, count as f64 / triples(n) as f64))
}
