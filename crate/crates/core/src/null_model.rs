//! Monte Carlo significance of scan values against rewired networks.
//!
//! Node positions stay fixed, so every focal window is computed once and
//! reused; only the edges are randomized. Two null models are offered:
//! uniform placement of the same number of edges over all node pairs, and
//! degree-preserving double-edge swaps.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::PointIndex;
use crate::model::{pair_at, SpatialSocialNetwork};
use crate::neighborhood::NeighborhoodSpec;
use crate::parallel::map_indexed;
use crate::scan::{check_inputs, make_value, memberships, window_counts, StatKind, WindowScratch};

/// Accepted swaps per edge in a configuration-model replicate.
pub const SWAPS_PER_EDGE: usize = 10;
/// Attempt budget per required swap before giving up on a graph that
/// admits few or no valid swaps.
const ATTEMPTS_PER_SWAP: usize = 100;
/// Replicates evaluated per parallel batch.
const BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NullModel {
    /// Same edge count, pairs drawn uniformly without replacement.
    Uniform,
    /// Same degree sequence, randomized by double-edge swaps.
    Configuration,
}

impl fmt::Display for NullModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NullModel::Uniform => "uniform",
            NullModel::Configuration => "configuration",
        })
    }
}

impl FromStr for NullModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(NullModel::Uniform),
            "configuration" => Ok(NullModel::Configuration),
            other => Err(Error::InvalidConfig(format!(
                "unknown null model `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NullEnsembleSpec {
    pub model: NullModel,
    pub replicates: usize,
    pub seed: u64,
}

/// RNG for one replicate: stream `replicate` of the ChaCha generator keyed
/// by `seed`, so replicates are independent of evaluation order.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

pub fn rewire_uniform(net: &SpatialSocialNetwork, seed: u64) -> Result<SpatialSocialNetwork> {
    rewire_uniform_with(net, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Places the network's `e` edges uniformly at random, without replacement,
/// among all `n (n - 1) / 2` node pairs.
pub fn rewire_uniform_with<R: Rng + ?Sized>(
    net: &SpatialSocialNetwork,
    rng: &mut R,
) -> Result<SpatialSocialNetwork> {
    let n = net.node_count();
    if n < 2 {
        return Err(Error::DegenerateNetwork {
            nodes: n,
            required: 2,
        });
    }
    let pairs = (n as u64) * (n as u64 - 1) / 2;
    let e = net.edge_count();
    if e as u64 > pairs {
        return Err(Error::TooManyEdges {
            edges: e,
            pairs: pairs as usize,
        });
    }
    let chosen = index::sample(rng, pairs as usize, e)
        .into_iter()
        .map(|t| pair_at(t as u64, n as u64))
        .collect();
    Ok(net.with_edge_pairs(chosen))
}

pub fn rewire_configuration(net: &SpatialSocialNetwork, seed: u64) -> Result<SpatialSocialNetwork> {
    rewire_configuration_with(net, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Degree-preserving randomization by double-edge swaps: edges `a-b`,
/// `c-d` become `a-d`, `c-b`, rejecting swaps that would create a
/// self-loop or a repeated edge. Runs until `SWAPS_PER_EDGE * e` swaps are
/// accepted or the attempt budget is spent.
pub fn rewire_configuration_with<R: Rng + ?Sized>(
    net: &SpatialSocialNetwork,
    rng: &mut R,
) -> Result<SpatialSocialNetwork> {
    let mut edges: Vec<(usize, usize)> = net.edges().to_vec();
    let e = edges.len();
    if e < 2 {
        return Ok(net.with_edge_pairs(edges));
    }
    let mut present: HashSet<(usize, usize)> = edges.iter().copied().collect();
    let target = SWAPS_PER_EDGE * e;
    let budget = ATTEMPTS_PER_SWAP * target;
    let mut accepted = 0;
    let canon = |x: usize, y: usize| (x.min(y), x.max(y));
    for _ in 0..budget {
        if accepted == target {
            break;
        }
        let i = rng.gen_range(0..e);
        let mut j = rng.gen_range(0..e - 1);
        if j >= i {
            j += 1;
        }
        let (a, b) = edges[i];
        let (mut c, mut d) = edges[j];
        if rng.gen::<bool>() {
            std::mem::swap(&mut c, &mut d);
        }
        if a == d || c == b {
            continue;
        }
        let (first, second) = (canon(a, d), canon(c, b));
        if present.contains(&first) || present.contains(&second) {
            continue;
        }
        present.remove(&edges[i]);
        present.remove(&edges[j]);
        present.insert(first);
        present.insert(second);
        edges[i] = first;
        edges[j] = second;
        accepted += 1;
    }
    if accepted < target {
        log::debug!("configuration rewiring stopped after {accepted}/{target} swaps");
    }
    Ok(net.with_edge_pairs(edges))
}

pub fn rewire_with<R: Rng + ?Sized>(
    net: &SpatialSocialNetwork,
    model: NullModel,
    rng: &mut R,
) -> Result<SpatialSocialNetwork> {
    match model {
        NullModel::Uniform => rewire_uniform_with(net, rng),
        NullModel::Configuration => rewire_configuration_with(net, rng),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSignificance {
    pub node: usize,
    pub observed: f64,
    pub null_mean: f64,
    pub null_sd: f64,
    /// `(1 + #{replicates >= observed}) / (1 + replicates)`.
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceReport {
    pub spec: NeighborhoodSpec,
    pub statistic: StatKind,
    pub ensemble: NullEnsembleSpec,
    pub nodes: Vec<NodeSignificance>,
}

fn window_stat(
    net: &SpatialSocialNetwork,
    focal: usize,
    members: &[usize],
    scratch: &mut WindowScratch,
    statistic: StatKind,
) -> f64 {
    let (edges, triads) = window_counts(net, members, scratch, statistic.needs_triads());
    make_value(focal, members.len(), edges, triads)
        .get(statistic)
        .expect("triads computed when required")
}

/// One-sided (high) empirical p-value of every node's scan value.
pub fn significance(
    net: &SpatialSocialNetwork,
    index: &PointIndex,
    spec: &NeighborhoodSpec,
    statistic: StatKind,
    ensemble: &NullEnsembleSpec,
    workers: usize,
) -> Result<SignificanceReport> {
    check_inputs(net, index, spec)?;
    if ensemble.replicates == 0 {
        return Err(Error::NoReplicates);
    }
    let n = net.node_count();
    let windows = memberships(index, spec, workers)?;
    let mut scratch = WindowScratch::new(n);
    let observed: Vec<f64> = (0..n)
        .map(|i| window_stat(net, i, &windows[i], &mut scratch, statistic))
        .collect();

    let mut exceed = vec![0u64; n];
    let mut mean = vec![0.0f64; n];
    let mut m2 = vec![0.0f64; n];
    let mut seen = 0u64;
    let mut start = 0;
    while start < ensemble.replicates {
        let batch = BATCH.min(ensemble.replicates - start);
        let draws = map_indexed(
            batch,
            workers,
            || WindowScratch::new(n),
            |scratch, offset| {
                let mut rng = replicate_rng(ensemble.seed, (start + offset) as u64);
                let null = rewire_with(net, ensemble.model, &mut rng)?;
                Ok((0..n)
                    .map(|i| window_stat(&null, i, &windows[i], scratch, statistic))
                    .collect::<Vec<f64>>())
            },
        )?;
        // fold in replicate order
        for draw in draws {
            seen += 1;
            for i in 0..n {
                let v = draw[i];
                if v >= observed[i] {
                    exceed[i] += 1;
                }
                let delta = v - mean[i];
                mean[i] += delta / seen as f64;
                m2[i] += delta * (v - mean[i]);
            }
        }
        start += batch;
    }

    let reps = ensemble.replicates as f64;
    let nodes = (0..n)
        .map(|i| NodeSignificance {
            node: i,
            observed: observed[i],
            null_mean: mean[i],
            null_sd: (m2[i] / reps).max(0.0).sqrt(),
            p_value: (1.0 + exceed[i] as f64) / (1.0 + reps),
        })
        .collect();
    Ok(SignificanceReport {
        spec: *spec,
        statistic,
        ensemble: *ensemble,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::Backend;
    use crate::model::{row_start, EdgeRecord, NodeRecord};

    fn net_from(coords: &[(f64, f64)], pairs: &[(usize, usize)]) -> SpatialSocialNetwork {
        let nodes = coords
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| NodeRecord::new(format!("n{i:02}"), x, y))
            .collect();
        let edges: Vec<EdgeRecord> = pairs
            .iter()
            .map(|&(a, b)| EdgeRecord::new(format!("n{a:02}"), format!("n{b:02}")))
            .collect();
        SpatialSocialNetwork::build(nodes, &edges).unwrap()
    }

    fn line(n: usize) -> Vec<(f64, f64)> {
        (0..n).map(|i| (i as f64 * 100.0, 0.0)).collect()
    }

    #[test]
    fn pair_decoding_is_exhaustive() {
        for n in 2..40u64 {
            let mut t = 0;
            for i in 0..n {
                for j in i + 1..n {
                    assert_eq!(pair_at(t, n), (i as usize, j as usize));
                    t += 1;
                }
            }
        }
        // large n spot checks
        let n = 100_000u64;
        let last = n * (n - 1) / 2 - 1;
        assert_eq!(pair_at(last, n), (99_998, 99_999));
        assert_eq!(pair_at(row_start(54_321, n), n), (54_321, 54_322));
        assert_eq!(pair_at(row_start(54_321, n) - 1, n), (54_320, 99_999));
    }

    #[test]
    fn uniform_two_nodes_forced() {
        let net = net_from(&line(2), &[(0, 1)]);
        for seed in 0..20 {
            let r = rewire_uniform(&net, seed).unwrap();
            assert_eq!(r.edges(), &[(0, 1)]);
        }
        let single = net_from(&line(1), &[]);
        assert!(matches!(
            rewire_uniform(&single, 0),
            Err(Error::DegenerateNetwork { .. })
        ));
    }

    #[test]
    fn uniform_preserves_edge_count() {
        let net = net_from(
            &line(12),
            &[(0, 1), (2, 3), (4, 5), (1, 7), (3, 9), (10, 11)],
        );
        for seed in 0..50 {
            let r = rewire_uniform(&net, seed).unwrap();
            assert_eq!(r.edge_count(), 6);
            assert_eq!(r.nodes(), net.nodes());
        }
    }

    #[test]
    fn uniform_pair_frequencies_binomial() {
        // n = 10, e = 5: each of the 45 pairs appears with probability 5/45.
        let net = net_from(&line(10), &[(0, 1), (2, 3), (4, 5), (6, 7), (8, 9)]);
        let reps = 10_000u64;
        let mut counts = vec![0u64; 45];
        for r in 0..reps {
            let null = rewire_uniform_with(&net, &mut replicate_rng(99, r)).unwrap();
            for &(a, b) in null.edges() {
                counts[(row_start(a as u64, 10) + (b - a - 1) as u64) as usize] += 1;
            }
        }
        let p = 5.0 / 45.0;
        let expect = reps as f64 * p;
        let sigma = (reps as f64 * p * (1.0 - p)).sqrt();
        for (pair, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - expect).abs() <= 3.0 * sigma,
                "pair {pair}: {c} vs {expect:.1}"
            );
        }
    }

    #[test]
    fn configuration_path_and_forced_cases() {
        let path = net_from(&line(3), &[(0, 1), (1, 2)]);
        let tri = net_from(&line(3), &[(0, 1), (1, 2), (0, 2)]);
        let star = net_from(&line(5), &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        for seed in 0..10 {
            assert_eq!(
                rewire_configuration(&path, seed).unwrap().degrees(),
                vec![1, 2, 1]
            );
            assert_eq!(
                rewire_configuration(&tri, seed).unwrap().edges(),
                tri.edges()
            );
            let s = rewire_configuration(&star, seed).unwrap();
            assert_eq!(s.degrees(), star.degrees());
            assert_eq!(s.edges(), star.edges());
        }
    }

    #[test]
    fn configuration_preserves_degrees_and_mixes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let coords = line(60);
        let mut pairs = HashSet::new();
        while pairs.len() < 150 {
            let a = rng.gen_range(0..60);
            let b = rng.gen_range(0..60);
            if a != b {
                pairs.insert((a.min(b), a.max(b)));
            }
        }
        let pairs: Vec<_> = pairs.into_iter().collect();
        let net = net_from(&coords, &pairs);
        let mut changed = false;
        for seed in 0..5 {
            let r = rewire_configuration(&net, seed).unwrap();
            assert_eq!(r.degrees(), net.degrees());
            assert_eq!(r.edge_count(), net.edge_count());
            changed |= r.edges() != net.edges();
        }
        assert!(changed);
    }

    #[test]
    fn zero_observed_has_p_one() {
        let net = net_from(&line(6), &[(0, 5), (1, 4)]);
        let idx = PointIndex::build(&net, Backend::Grid);
        let ens = NullEnsembleSpec {
            model: NullModel::Uniform,
            replicates: 99,
            seed: 3,
        };
        let spec = NeighborhoodSpec::Euclidean { radius: 10.0 };
        let rep = significance(&net, &idx, &spec, StatKind::EdgeCount, &ens, 1).unwrap();
        for node in &rep.nodes {
            assert_eq!(node.observed, 0.0);
            assert_eq!(node.p_value, 1.0);
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let coords: Vec<(f64, f64)> = (0..40)
            .map(|_| (rng.gen_range(0.0..2000.0), rng.gen_range(0.0..2000.0)))
            .collect();
        let pairs: Vec<(usize, usize)> = (0..39)
            .map(|i| (i, (i * 7 + 3) % 40))
            .filter(|(a, b)| a != b)
            .collect();
        let dedup: HashSet<_> = pairs.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        let mut pairs: Vec<_> = dedup.into_iter().collect();
        pairs.sort();
        let net = net_from(&coords, &pairs);
        let idx = PointIndex::build(&net, Backend::KdTree);
        let spec = NeighborhoodSpec::Knn { k: 6 };
        for model in [NullModel::Uniform, NullModel::Configuration] {
            let ens = NullEnsembleSpec {
                model,
                replicates: 150,
                seed: 42,
            };
            let a = significance(&net, &idx, &spec, StatKind::Density, &ens, 1).unwrap();
            let b = significance(&net, &idx, &spec, StatKind::Density, &ens, 3).unwrap();
            let c = significance(&net, &idx, &spec, StatKind::Density, &ens, 0).unwrap();
            assert_eq!(a, b);
            assert_eq!(a, c);
            assert!(a.nodes.iter().all(|s| s.p_value > 0.0 && s.p_value <= 1.0));
        }
    }

    #[test]
    fn memberships_stable_under_rewiring() {
        let net = net_from(&line(15), &[(0, 1), (1, 2), (5, 9), (3, 14)]);
        let spec = NeighborhoodSpec::Manhattan { radius: 250.0 };
        let idx = PointIndex::build(&net, Backend::Grid);
        let once = memberships(&idx, &spec, 1).unwrap();
        for r in 0..5 {
            let null = rewire_with(&net, NullModel::Uniform, &mut replicate_rng(1, r)).unwrap();
            let again = memberships(&PointIndex::build(&null, Backend::Grid), &spec, 1).unwrap();
            assert_eq!(once, again);
        }
    }

    #[test]
    fn planted_clique_is_significant() {
        // 8-node clique packed in the middle of 60 sparse nodes
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut coords: Vec<(f64, f64)> = (0..60)
            .map(|_| (rng.gen_range(0.0..20_000.0), rng.gen_range(0.0..20_000.0)))
            .collect();
        for i in 0..8 {
            coords.push((10_000.0 + i as f64 * 20.0, 10_000.0));
        }
        let mut pairs = Vec::new();
        for a in 60..68 {
            for b in a + 1..68 {
                pairs.push((a, b));
            }
        }
        pairs.extend([(0, 1), (2, 30), (5, 50)]);
        let net = net_from(&coords, &pairs);
        let idx = PointIndex::build(&net, Backend::Grid);
        let ens = NullEnsembleSpec {
            model: NullModel::Uniform,
            replicates: 999,
            seed: 7,
        };
        let rep = significance(
            &net,
            &idx,
            &NeighborhoodSpec::Euclidean { radius: 500.0 },
            StatKind::Density,
            &ens,
            0,
        )
        .unwrap();
        for node in &rep.nodes[60..] {
            assert!(node.p_value <= 0.01, "{node:?}");
        }
        assert!(matches!(
            significance(
                &net,
                &idx,
                &NeighborhoodSpec::Knn { k: 3 },
                StatKind::Density,
                &NullEnsembleSpec {
                    replicates: 0,
                    ..ens
                },
                1
            ),
            Err(Error::NoReplicates)
        ));
    }
}
