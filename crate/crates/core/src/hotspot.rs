//! Getis-Ord Gi* hot spots over grid cell counts or per-node values, and
//! the cell-level overlap between two hot spot surfaces.
//!
//! Weights are binary: unit `j` is a neighbor of unit `i` when their
//! Euclidean distance is at most the search radius, `i` itself included.
//! With `n` units, global mean `X` and population standard deviation `S`,
//!
//! ```text
//! Gi* = sum_j w_ij (x_j - X) / (S * sqrt((n * sum_j w_ij^2 - (sum_j w_ij)^2) / (n - 1)))
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{Backend, PointIndex};
use crate::model::SpatialSocialNetwork;
use crate::neighborhood::NeighborhoodSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Lower-left corner in meters.
    pub origin: [f64; 2],
    pub cell_size: f64,
    pub cols: usize,
    pub rows: usize,
}

impl GridSpec {
    pub fn new(origin: [f64; 2], cell_size: f64, cols: usize, rows: usize) -> Result<Self> {
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "cell size must be positive, got {cell_size}"
            )));
        }
        if cols == 0 || rows == 0 {
            return Err(Error::InvalidGrid("grid needs at least one cell".into()));
        }
        if !origin.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(GridSpec {
            origin,
            cell_size,
            cols,
            rows,
        })
    }

    /// Smallest grid with origin on a multiple of `cell_size` that holds
    /// every point.
    pub fn covering(points: &[[f64; 2]], cell_size: f64) -> Result<Self> {
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "cell size must be positive, got {cell_size}"
            )));
        }
        if points.is_empty() {
            return GridSpec::new([0.0, 0.0], cell_size, 1, 1);
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let origin = [
            (lo[0] / cell_size).floor() * cell_size,
            (lo[1] / cell_size).floor() * cell_size,
        ];
        let cols = ((hi[0] - origin[0]) / cell_size).floor() as usize + 1;
        let rows = ((hi[1] - origin[1]) / cell_size).floor() as usize + 1;
        GridSpec::new(origin, cell_size, cols, rows)
    }

    pub fn cell_count(&self) -> usize {
        self.cols * self.rows
    }

    /// Half-open binning: a point on an interior boundary belongs to the
    /// higher-index cell.
    pub fn cell_of(&self, p: [f64; 2]) -> Option<(usize, usize)> {
        let c = ((p[0] - self.origin[0]) / self.cell_size).floor();
        let r = ((p[1] - self.origin[1]) / self.cell_size).floor();
        if c >= 0.0 && r >= 0.0 && (c as usize) < self.cols && (r as usize) < self.rows {
            Some((c as usize, r as usize))
        } else {
            None
        }
    }

    /// Row-major cell index.
    pub fn cell_index(&self, col: usize, row: usize) -> usize {
        row * self.cols + col
    }

    pub fn cell_position(&self, index: usize) -> (usize, usize) {
        (index % self.cols, index / self.cols)
    }

    pub fn cell_center(&self, index: usize) -> [f64; 2] {
        let (c, r) = self.cell_position(index);
        [
            self.origin[0] + (c as f64 + 0.5) * self.cell_size,
            self.origin[1] + (r as f64 + 0.5) * self.cell_size,
        ]
    }

    /// Closed ring of the cell outline, counter-clockwise.
    pub fn cell_ring(&self, index: usize) -> [[f64; 2]; 5] {
        let (c, r) = self.cell_position(index);
        let x0 = self.origin[0] + c as f64 * self.cell_size;
        let y0 = self.origin[1] + r as f64 * self.cell_size;
        let (x1, y1) = (x0 + self.cell_size, y0 + self.cell_size);
        [[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCounts {
    pub grid: GridSpec,
    /// Row-major node counts.
    pub counts: Vec<u64>,
}

impl GridCounts {
    pub fn get(&self, col: usize, row: usize) -> u64 {
        self.counts[self.grid.cell_index(col, row)]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

pub fn grid_counts(net: &SpatialSocialNetwork, grid: &GridSpec) -> Result<GridCounts> {
    let mut counts = vec![0u64; grid.cell_count()];
    for node in net.nodes() {
        let (c, r) = grid
            .cell_of([node.x, node.y])
            .ok_or_else(|| Error::NodeOutsideGrid {
                id: node.id.clone(),
                x: node.x,
                y: node.y,
            })?;
        counts[grid.cell_index(c, r)] += 1;
    }
    Ok(GridCounts {
        grid: *grid,
        counts,
    })
}

/// Two-tailed normal confidence bands for |z|.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Confidence {
    None,
    P90,
    P95,
    P99,
}

impl Confidence {
    pub const LEVELS: [Confidence; 3] = [Confidence::P90, Confidence::P95, Confidence::P99];

    pub fn from_z(z: f64) -> Self {
        let a = z.abs();
        if a >= 2.576 {
            Confidence::P99
        } else if a >= 1.960 {
            Confidence::P95
        } else if a >= 1.645 {
            Confidence::P90
        } else {
            Confidence::None
        }
    }

    pub fn percent(&self) -> u32 {
        match self {
            Confidence::None => 0,
            Confidence::P90 => 90,
            Confidence::P95 => 95,
            Confidence::P99 => 99,
        }
    }
}

/// Hot spot at `level` or better: positive z beyond the level's threshold.
pub fn is_hot(z: f64, level: Confidence) -> bool {
    z > 0.0 && Confidence::from_z(z) >= level
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GiStarSurface {
    pub radius: f64,
    pub coords: Vec<[f64; 2]>,
    pub z: Vec<f64>,
    pub confidence: Vec<Confidence>,
}

/// Gi* z-score of every unit. Units whose neighborhood covers every unit
/// get z = 0 (numerator and denominator both vanish).
pub fn gi_star(coords: &[[f64; 2]], values: &[f64], radius: f64) -> Result<GiStarSurface> {
    assert_eq!(coords.len(), values.len(), "one value per unit");
    let n = values.len();
    if n < 2 {
        return Err(Error::TooFewUnits(n));
    }
    let spec = NeighborhoodSpec::euclidean(radius)?;
    if values.iter().all(|&v| v == values[0]) {
        return Err(Error::ZeroVariance);
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let s = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf).sqrt();
    if s.is_nan() || s <= 0.0 {
        return Err(Error::ZeroVariance);
    }

    let index = PointIndex::from_points(coords.to_vec(), Backend::Grid);
    let mut members = Vec::new();
    let mut z = Vec::with_capacity(n);
    for i in 0..n {
        index.query_into(i, &spec, &mut members)?;
        let w = members.len() as f64;
        let num: f64 = members.iter().map(|&j| values[j] - mean).sum();
        let den = s * ((nf * w - w * w) / (nf - 1.0)).sqrt();
        z.push(if den > 0.0 { num / den } else { 0.0 });
    }
    let confidence = z.iter().map(|&v| Confidence::from_z(v)).collect();
    Ok(GiStarSurface {
        radius,
        coords: coords.to_vec(),
        z,
        confidence,
    })
}

/// Cell-level z-scores; `None` for cells that received no unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSurface {
    pub grid: GridSpec,
    pub radius: f64,
    pub z: Vec<Option<f64>>,
}

impl CellSurface {
    pub fn hot_cells(&self, level: Confidence) -> Vec<usize> {
        self.z
            .iter()
            .enumerate()
            .filter(|(_, z)| z.is_some_and(|z| is_hot(z, level)))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Gi* over all grid cells, using the node count of each cell as its value
/// and the cell center as its location.
pub fn gi_star_counts(counts: &GridCounts, radius: f64) -> Result<CellSurface> {
    let grid = counts.grid;
    let coords: Vec<[f64; 2]> = (0..grid.cell_count())
        .map(|i| grid.cell_center(i))
        .collect();
    let values: Vec<f64> = counts.counts.iter().map(|&c| c as f64).collect();
    let surface = gi_star(&coords, &values, radius)?;
    Ok(CellSurface {
        grid,
        radius,
        z: surface.z.into_iter().map(Some).collect(),
    })
}

/// Collapses a point surface onto `grid`, keeping the maximum z per cell.
pub fn reduce_to_cells(surface: &GiStarSurface, grid: &GridSpec) -> Result<CellSurface> {
    let mut z: Vec<Option<f64>> = vec![None; grid.cell_count()];
    for (i, (&p, &v)) in surface.coords.iter().zip(&surface.z).enumerate() {
        let (c, r) = grid.cell_of(p).ok_or_else(|| Error::NodeOutsideGrid {
            id: format!("unit {i}"),
            x: p[0],
            y: p[1],
        })?;
        let slot = &mut z[grid.cell_index(c, r)];
        *slot = Some(slot.map_or(v, |cur: f64| cur.max(v)));
    }
    Ok(CellSurface {
        grid: *grid,
        radius: surface.radius,
        z,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelOverlap {
    pub level: Confidence,
    pub a_only: usize,
    pub b_only: usize,
    pub both: usize,
    pub neither: usize,
}

impl LevelOverlap {
    /// Share of hot cells (in either surface) that are hot in both; 1 when
    /// neither surface has a hot cell.
    pub fn overlap(&self) -> f64 {
        let union = self.a_only + self.b_only + self.both;
        if union == 0 {
            1.0
        } else {
            self.both as f64 / union as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub grid: GridSpec,
    pub levels: Vec<LevelOverlap>,
}

/// Per-cell contingency of hot spots in `a` versus `b` at 90/95/99%.
pub fn compare_hotspots(a: &CellSurface, b: &CellSurface) -> Result<OverlapReport> {
    if a.grid != b.grid || a.z.len() != b.z.len() {
        return Err(Error::GridMismatch);
    }
    let levels = Confidence::LEVELS
        .iter()
        .map(|&level| {
            let mut o = LevelOverlap {
                level,
                a_only: 0,
                b_only: 0,
                both: 0,
                neither: 0,
            };
            for (za, zb) in a.z.iter().zip(&b.z) {
                let ha = za.is_some_and(|z| is_hot(z, level));
                let hb = zb.is_some_and(|z| is_hot(z, level));
                match (ha, hb) {
                    (true, true) => o.both += 1,
                    (true, false) => o.a_only += 1,
                    (false, true) => o.b_only += 1,
                    (false, false) => o.neither += 1,
                }
            }
            o
        })
        .collect();
    Ok(OverlapReport {
        grid: a.grid,
        levels,
    })
}
