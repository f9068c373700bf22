//! Focal window definitions and the membership sets they produce.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecKind {
    Euclidean,
    Manhattan,
    Knn,
}

impl SpecKind {
    /// Builds a spec of this kind from a numeric parameter (radius in meters
    /// or window cardinality).
    pub fn with_param(self, value: f64) -> Result<NeighborhoodSpec> {
        match self {
            SpecKind::Euclidean => NeighborhoodSpec::euclidean(value),
            SpecKind::Manhattan => NeighborhoodSpec::manhattan(value),
            SpecKind::Knn => {
                if value.fract() != 0.0 || value < 0.0 {
                    return Err(Error::InvalidSpec(format!(
                        "k must be an integer, got {value}"
                    )));
                }
                NeighborhoodSpec::knn(value as usize)
            }
        }
    }
}

impl fmt::Display for SpecKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpecKind::Euclidean => "euclidean",
            SpecKind::Manhattan => "manhattan",
            SpecKind::Knn => "knn",
        })
    }
}

impl FromStr for SpecKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euclidean" => Ok(SpecKind::Euclidean),
            "manhattan" => Ok(SpecKind::Manhattan),
            "knn" => Ok(SpecKind::Knn),
            other => Err(Error::InvalidSpec(format!("unknown kind `{other}`"))),
        }
    }
}

/// A moving-window definition.
///
/// Radial windows hold the focal node and every node within `radius` meters
/// (boundary inclusive). A KNN window holds exactly `k` nodes: the focal node
/// and its `k - 1` nearest other nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NeighborhoodSpec {
    Euclidean { radius: f64 },
    Manhattan { radius: f64 },
    Knn { k: usize },
}

impl NeighborhoodSpec {
    pub fn euclidean(radius: f64) -> Result<Self> {
        let spec = NeighborhoodSpec::Euclidean { radius };
        spec.validate()?;
        Ok(spec)
    }

    pub fn manhattan(radius: f64) -> Result<Self> {
        let spec = NeighborhoodSpec::Manhattan { radius };
        spec.validate()?;
        Ok(spec)
    }

    pub fn knn(k: usize) -> Result<Self> {
        let spec = NeighborhoodSpec::Knn { k };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NeighborhoodSpec::Euclidean { radius } | NeighborhoodSpec::Manhattan { radius } => {
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "radius must be positive and finite, got {radius}"
                    )));
                }
            }
            NeighborhoodSpec::Knn { k } => {
                if k < 2 {
                    return Err(Error::InvalidSpec(format!("k must be at least 2, got {k}")));
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> SpecKind {
        match self {
            NeighborhoodSpec::Euclidean { .. } => SpecKind::Euclidean,
            NeighborhoodSpec::Manhattan { .. } => SpecKind::Manhattan,
            NeighborhoodSpec::Knn { .. } => SpecKind::Knn,
        }
    }

    /// Radius in meters or window cardinality.
    pub fn param(&self) -> f64 {
        match *self {
            NeighborhoodSpec::Euclidean { radius } | NeighborhoodSpec::Manhattan { radius } => {
                radius
            }
            NeighborhoodSpec::Knn { k } => k as f64,
        }
    }

    /// The nine reference configurations: Euclidean and Manhattan radii of
    /// 0.5, 1 and 2 km, and KNN windows of 10, 15 and 20 nodes.
    pub fn reference_set() -> Vec<NeighborhoodSpec> {
        let mut specs = Vec::with_capacity(9);
        for r in [500.0, 1000.0, 2000.0] {
            specs.push(NeighborhoodSpec::Euclidean { radius: r });
        }
        for r in [500.0, 1000.0, 2000.0] {
            specs.push(NeighborhoodSpec::Manhattan { radius: r });
        }
        for k in [10, 15, 20] {
            specs.push(NeighborhoodSpec::Knn { k });
        }
        specs
    }
}

impl fmt::Display for NeighborhoodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            NeighborhoodSpec::Euclidean { radius } => write!(f, "kind=euclidean,r={radius}"),
            NeighborhoodSpec::Manhattan { radius } => write!(f, "kind=manhattan,r={radius}"),
            NeighborhoodSpec::Knn { k } => write!(f, "kind=knn,k={k}"),
        }
    }
}

/// Parses `kind=euclidean,r=1000`, `kind=manhattan,m=500` or `kind=knn,k=10`.
/// Manhattan accepts either `r` or `m` for its radius.
impl FromStr for NeighborhoodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut kind = None;
        let mut radius = None;
        let mut k = None;
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidSpec(format!("expected key=value, got `{part}`")))?;
            let value = value.trim();
            match key.trim() {
                "kind" => kind = Some(value.parse::<SpecKind>()?),
                "r" | "m" => {
                    radius = Some(
                        value
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidSpec(format!("bad radius `{value}`")))?,
                    )
                }
                "k" => {
                    k = Some(
                        value
                            .parse::<usize>()
                            .map_err(|_| Error::InvalidSpec(format!("bad k `{value}`")))?,
                    )
                }
                other => return Err(Error::InvalidSpec(format!("unknown key `{other}`"))),
            }
        }
        let kind = kind.ok_or_else(|| Error::InvalidSpec(format!("missing kind in `{s}`")))?;
        match (kind, radius, k) {
            (SpecKind::Euclidean, Some(r), None) => NeighborhoodSpec::euclidean(r),
            (SpecKind::Manhattan, Some(r), None) => NeighborhoodSpec::manhattan(r),
            (SpecKind::Knn, None, Some(k)) => NeighborhoodSpec::knn(k),
            _ => Err(Error::InvalidSpec(format!(
                "`{s}`: {kind} takes exactly one of {}",
                if kind == SpecKind::Knn { "k" } else { "r/m" }
            ))),
        }
    }
}

/// Nodes falling inside one focal window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowMembership {
    pub focal: usize,
    /// Ascending node indices; always contains `focal`.
    pub members: Vec<usize>,
}

impl WindowMembership {
    pub fn m(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.members.binary_search(&node).is_ok()
    }
}
