//! How scan outcomes move with the window definition.
//!
//! Summaries per spec, per-node variance across a set of specs, and sweep
//! curves over a continuous range of window sizes. Variances and standard
//! deviations are population (divide-by-n) quantities throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::PointIndex;
use crate::model::SpatialSocialNetwork;
use crate::neighborhood::{NeighborhoodSpec, SpecKind};
use crate::scan::{scan, ScanOptions, ScanResult, StatKind};

/// Population mean and variance; `(0, 0)` for an empty slice.
pub fn mean_var(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Population mean and standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let (mean, var) = mean_var(values);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecSummary {
    pub spec: NeighborhoodSpec,
    pub statistic: StatKind,
    pub mean: f64,
    pub st_dev: f64,
    pub zero_count: usize,
    pub zero_fraction: f64,
}

fn same_network(results: &[ScanResult]) -> Result<()> {
    let first = &results[0];
    if results.iter().any(|r| {
        r.provenance.network != first.provenance.network || r.values.len() != first.values.len()
    }) {
        return Err(Error::MixedNetworks);
    }
    Ok(())
}

/// One row per (spec, statistic) for every statistic each result carries.
pub fn summarize(results: &[ScanResult]) -> Result<Vec<SpecSummary>> {
    if results.is_empty() {
        return Err(Error::EmptySpecList);
    }
    same_network(results)?;
    let mut rows = Vec::new();
    for result in results {
        for kind in StatKind::ALL {
            if !result.has(kind) {
                continue;
            }
            let column = result.column(kind)?;
            let (mean, st_dev) = mean_sd(&column);
            let zero_count = column.iter().filter(|&&v| v == 0.0).count();
            rows.push(SpecSummary {
                spec: result.spec,
                statistic: kind,
                mean,
                st_dev,
                zero_count,
                zero_fraction: if column.is_empty() {
                    0.0
                } else {
                    zero_count as f64 / column.len() as f64
                },
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeVariance {
    pub node: usize,
    pub statistic: StatKind,
    pub variance: f64,
    /// One value per supplied result, in the order supplied.
    pub values: Vec<f64>,
}

/// Variance of each node's value of `kind` across the supplied specs.
///
/// Values are summed in sorted order so the variance does not depend on
/// the order of `results`.
pub fn node_variance(results: &[ScanResult], kind: StatKind) -> Result<Vec<NodeVariance>> {
    if results.len() < 2 {
        return Err(Error::TooFewSpecs {
            required: 2,
            got: results.len(),
        });
    }
    same_network(results)?;
    let columns = results
        .iter()
        .map(|r| r.column(kind))
        .collect::<Result<Vec<_>>>()?;
    let n = columns[0].len();
    Ok((0..n)
        .map(|node| {
            let values: Vec<f64> = columns.iter().map(|c| c[node]).collect();
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let (_, variance) = mean_var(&sorted);
            NodeVariance {
                node,
                statistic: kind,
                variance,
                values,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub param: f64,
    pub mean: f64,
    pub st_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub kind: SpecKind,
    pub statistic: StatKind,
    pub points: Vec<SweepPoint>,
}

/// Scans once per parameter value (radius in meters, or k) and records the
/// mean and spread of `statistic` across all nodes.
pub fn sweep(
    net: &SpatialSocialNetwork,
    index: &PointIndex,
    kind: SpecKind,
    params: &[f64],
    statistic: StatKind,
    workers: usize,
) -> Result<SweepCurve> {
    if params.is_empty() {
        return Err(Error::EmptyParams);
    }
    if params.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::UnorderedParams);
    }
    let options = ScanOptions {
        workers,
        triads: statistic.needs_triads(),
    };
    let mut points = Vec::with_capacity(params.len());
    for &param in params {
        let spec = kind.with_param(param)?;
        let result = scan(net, index, &spec, &options)?;
        let (mean, st_dev) = mean_sd(&result.column(statistic)?);
        points.push(SweepPoint {
            param,
            mean,
            st_dev,
        });
    }
    Ok(SweepCurve {
        kind,
        statistic,
        points,
    })
}

/// Evenly spaced parameter ladder `from, from + step, ...` up to `to`
/// inclusive (within half a step of rounding).
pub fn ladder(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || !from.is_finite() || !to.is_finite() || to < from {
        return Err(Error::InvalidConfig(format!(
            "bad sweep range from={from} to={to} step={step}"
        )));
    }
    let count = ((to - from) / step + 0.5).floor() as usize + 1;
    Ok((0..count).map(|i| from + i as f64 * step).collect())
}
