// Uniform bucket grid. Points are binned by floor((p - origin) / cell)
// clamped to the grid, stored cell-major.

use super::{dist_l1, dist_sq, Candidate, NearestSet, PRUNE_SLACK};
use crate::neighborhood::NeighborhoodSpec;

const POINTS_PER_CELL: f64 = 2.0;

#[derive(Debug, Clone)]
pub(crate) struct Grid {
    origin: [f64; 2],
    cell: f64,
    cols: usize,
    rows: usize,
    starts: Vec<usize>,
    items: Vec<usize>,
}

impl Grid {
    pub fn build(points: &[[f64; 2]]) -> Self {
        let n = points.len();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        if n == 0 {
            lo = [0.0; 2];
            hi = [0.0; 2];
        }
        let (w, h) = (hi[0] - lo[0], hi[1] - lo[1]);
        let target_cells = (n as f64 / POINTS_PER_CELL).max(1.0);
        let mut cell = if w > 0.0 && h > 0.0 {
            (w * h / target_cells).sqrt()
        } else {
            w.max(h) / target_cells
        };
        if !(cell.is_finite() && cell > 0.0) {
            cell = 1.0;
        }
        let max_cells = 4 * n + 16;
        let dims = |cell: f64| {
            (
                (w / cell).floor() as usize + 1,
                (h / cell).floor() as usize + 1,
            )
        };
        let (mut cols, mut rows) = dims(cell);
        while cols.saturating_mul(rows) > max_cells {
            cell *= 1.5;
            (cols, rows) = dims(cell);
        }

        let mut grid = Grid {
            origin: lo,
            cell,
            cols,
            rows,
            starts: Vec::new(),
            items: Vec::new(),
        };
        let cell_ids: Vec<usize> = points
            .iter()
            .map(|&p| {
                let (c, r) = grid.cell_of(p);
                r * cols + c
            })
            .collect();
        let mut starts = vec![0usize; cols * rows + 1];
        for &c in &cell_ids {
            starts[c + 1] += 1;
        }
        for i in 1..starts.len() {
            starts[i] += starts[i - 1];
        }
        let mut fill = starts.clone();
        let mut items = vec![0usize; n];
        for (i, &c) in cell_ids.iter().enumerate() {
            items[fill[c]] = i;
            fill[c] += 1;
        }
        grid.starts = starts;
        grid.items = items;
        grid
    }

    fn axis_cell(&self, v: f64, axis: usize, len: usize) -> usize {
        let f = ((v - self.origin[axis]) / self.cell).floor();
        if f <= 0.0 {
            0
        } else if f >= (len - 1) as f64 {
            len - 1
        } else {
            f as usize
        }
    }

    fn cell_of(&self, p: [f64; 2]) -> (usize, usize) {
        (
            self.axis_cell(p[0], 0, self.cols),
            self.axis_cell(p[1], 1, self.rows),
        )
    }

    fn bucket(&self, c: usize, r: usize) -> &[usize] {
        let id = r * self.cols + c;
        &self.items[self.starts[id]..self.starts[id + 1]]
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
        match *spec {
            NeighborhoodSpec::Euclidean { radius } => {
                let r2 = radius * radius;
                self.radial(q, radius, out, |p| dist_sq(p, q) <= r2, points);
            }
            NeighborhoodSpec::Manhattan { radius } => {
                self.radial(q, radius, out, |p| dist_l1(p, q) <= radius, points);
            }
            NeighborhoodSpec::Knn { k } => self.knn(points, ranks, focal, k, out),
        }
    }

    fn radial(
        &self,
        q: [f64; 2],
        radius: f64,
        out: &mut Vec<usize>,
        inside: impl Fn([f64; 2]) -> bool,
        points: &[[f64; 2]],
    ) {
        let reach = radius * (1.0 + PRUNE_SLACK);
        let c0 = self.axis_cell(q[0] - reach, 0, self.cols);
        let c1 = self.axis_cell(q[0] + reach, 0, self.cols);
        let r0 = self.axis_cell(q[1] - reach, 1, self.rows);
        let r1 = self.axis_cell(q[1] + reach, 1, self.rows);
        for r in r0..=r1 {
            for c in c0..=c1 {
                out.extend(
                    self.bucket(c, r)
                        .iter()
                        .copied()
                        .filter(|&i| inside(points[i])),
                );
            }
        }
    }

    fn knn(
        &self,
        points: &[[f64; 2]],
        ranks: &[u32],
        focal: usize,
        k: usize,
        out: &mut Vec<usize>,
    ) {
        let q = points[focal];
        let (fc, fr) = self.cell_of(q);
        let mut nearest = NearestSet::new(k - 1);
        let mut ring = 0usize;
        loop {
            let c_lo = fc as isize - ring as isize;
            let c_hi = fc + ring;
            let r_lo = fr as isize - ring as isize;
            let r_hi = fr + ring;
            for r in r_lo.max(0) as usize..=r_hi.min(self.rows - 1) {
                let on_row_edge = r as isize == r_lo || r == r_hi;
                let mut visit = |c: usize| {
                    for &i in self.bucket(c, r) {
                        if i != focal {
                            nearest.offer(Candidate {
                                dist_sq: dist_sq(points[i], q),
                                rank: ranks[i],
                                index: i,
                            });
                        }
                    }
                };
                if on_row_edge {
                    for c in c_lo.max(0) as usize..=c_hi.min(self.cols - 1) {
                        visit(c);
                    }
                } else {
                    if c_lo >= 0 {
                        visit(c_lo as usize);
                    }
                    if c_hi < self.cols && c_hi as isize != c_lo {
                        visit(c_hi);
                    }
                }
            }

            // Distance from q to the nearest side of the visited block that
            // still has cells beyond it.
            let mut gap = f64::INFINITY;
            if c_lo > 0 {
                gap = gap.min(q[0] - (self.origin[0] + c_lo as f64 * self.cell));
            }
            if c_hi + 1 < self.cols {
                gap = gap.min(self.origin[0] + (c_hi + 1) as f64 * self.cell - q[0]);
            }
            if r_lo > 0 {
                gap = gap.min(q[1] - (self.origin[1] + r_lo as f64 * self.cell));
            }
            if r_hi + 1 < self.rows {
                gap = gap.min(self.origin[1] + (r_hi + 1) as f64 * self.cell - q[1]);
            }
            if gap == f64::INFINITY {
                break;
            }
            if let Some(worst) = nearest.worst() {
                if gap > 0.0 && worst < gap * gap * (1.0 - PRUNE_SLACK) {
                    break;
                }
            }
            ring += 1;
        }
        out.extend(nearest.into_indices());
        out.push(focal);
    }
}
