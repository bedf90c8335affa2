//! Uniform cell-centered grids on boxes in one or two space dimensions,
//! grid functions, and time-indexed trajectories of grid functions.

use std::sync::Arc;

use crate::error::{LabError, Result};

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    /// The symmetric interval `[-bound, bound]`.
    pub fn symmetric(bound: f64) -> Self {
        let b = bound.abs();
        Interval { lo: -b, hi: b }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, u: f64, slack: f64) -> bool {
        u >= self.lo - slack && u <= self.hi + slack
    }

    /// Errors when `u` lies further than `slack` outside the interval.
    pub fn check(&self, u: f64, slack: f64) -> Result<()> {
        if self.contains(u, slack) {
            Ok(())
        } else {
            Err(LabError::OutOfRange {
                value: u,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }

    /// `n` equally spaced points covering the interval, endpoints included.
    pub fn sample(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        let n = n.max(2);
        (0..n).map(move |k| self.lo + self.width() * k as f64 / (n - 1) as f64)
    }
}

/// Space grid of `Ω` together with the time horizon `T` of `Ω_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    cells: Vec<usize>,
    extent: Vec<Interval>,
    time_horizon: f64,
}

impl Grid {
    pub fn new(cells: Vec<usize>, extent: Vec<Interval>, time_horizon: f64) -> Result<Self> {
        if cells.is_empty() || cells.len() > 2 {
            return Err(LabError::config(
                "grid.cells",
                format!("dimension must be 1 or 2, got {}", cells.len()),
            ));
        }
        if extent.len() != cells.len() {
            return Err(LabError::config(
                "grid.extent",
                "one interval per axis is required",
            ));
        }
        if cells.contains(&0) {
            return Err(LabError::config(
                "grid.cells",
                "cell counts must be positive",
            ));
        }
        if extent
            .iter()
            .any(|e| !(e.hi > e.lo) || !e.lo.is_finite() || !e.hi.is_finite())
        {
            return Err(LabError::config("grid.extent", "each axis needs lo < hi"));
        }
        if !(time_horizon > 0.0) || !time_horizon.is_finite() {
            return Err(LabError::config("grid.time_horizon", "must be positive"));
        }
        Ok(Grid {
            cells,
            extent,
            time_horizon,
        })
    }

    /// Unit interval (0,1) with `n` cells.
    pub fn unit_1d(n: usize, time_horizon: f64) -> Result<Self> {
        Grid::new(vec![n], vec![Interval::new(0.0, 1.0)], time_horizon)
    }

    /// Unit square with `n x n` cells.
    pub fn unit_2d(n: usize, time_horizon: f64) -> Result<Self> {
        Grid::new(
            vec![n, n],
            vec![Interval::new(0.0, 1.0), Interval::new(0.0, 1.0)],
            time_horizon,
        )
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn extent(&self) -> &[Interval] {
        &self.extent
    }

    pub fn time_horizon(&self) -> f64 {
        self.time_horizon
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extent[axis].width() / self.cells[axis] as f64
    }

    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        self.extent.iter().map(Interval::width).product()
    }

    /// Index stride along `axis` in row-major order (axis 0 slowest).
    pub fn stride(&self, axis: usize) -> usize {
        self.cells[axis + 1..].iter().product()
    }

    /// Multi-index of a flat cell index.
    pub fn unflatten(&self, mut idx: usize) -> [usize; 2] {
        let mut out = [0usize; 2];
        for axis in (0..self.dim()).rev() {
            out[axis] = idx % self.cells[axis];
            idx /= self.cells[axis];
        }
        out
    }

    pub fn center(&self, axis: usize, i: usize) -> f64 {
        self.extent[axis].lo + (i as f64 + 0.5) * self.spacing(axis)
    }

    /// Coordinates of the center of a flat cell index.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let m = self.unflatten(idx);
        let mut p = [0.0; 2];
        for (axis, slot) in p.iter_mut().enumerate().take(self.dim()) {
            *slot = self.center(axis, m[axis]);
        }
        p
    }

    /// Distance from a cell center to the nearest boundary face.
    pub fn boundary_distance(&self, idx: usize) -> f64 {
        let p = self.point(idx);
        (0..self.dim())
            .map(|a| (p[a] - self.extent[a].lo).min(self.extent[a].hi - p[a]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Neighbor of `idx` along `axis` in direction `dir` (`-1` or `+1`);
    /// `None` when the neighbor is a ghost cell outside the domain.
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, dir: isize) -> Option<usize> {
        let stride = self.stride(axis);
        let i = (idx / stride) % self.cells[axis];
        if dir < 0 {
            (i > 0).then(|| idx - stride)
        } else {
            (i + 1 < self.cells[axis]).then(|| idx + stride)
        }
    }
}

/// Grid function: one value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::LatticeMismatch(format!(
                "field has {} values, grid has {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(LabError::LatticeMismatch(format!(
                "non-finite field value {v}"
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Field {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Samples `f` at the cell centers.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Field { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        sup_abs(&self.values)
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }
}

pub(crate) fn sup_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Sequence of snapshots `u^ε(·, t_n)` over `Ω_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTrajectory {
    grid: Arc<Grid>,
    epsilon: f64,
    times: Vec<f64>,
    snapshots: Vec<Vec<f64>>,
}

impl FieldTrajectory {
    pub fn new(
        grid: Arc<Grid>,
        epsilon: f64,
        times: Vec<f64>,
        snapshots: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if times.len() != snapshots.len() || times.is_empty() {
            return Err(LabError::LatticeMismatch(format!(
                "{} times for {} snapshots",
                times.len(),
                snapshots.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(LabError::LatticeMismatch(
                "first snapshot must be at t = 0".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::LatticeMismatch(
                "snapshot times must be strictly increasing".into(),
            ));
        }
        if let Some(s) = snapshots.iter().find(|s| s.len() != grid.len()) {
            return Err(LabError::LatticeMismatch(format!(
                "snapshot has {} values, grid has {} cells",
                s.len(),
                grid.len()
            )));
        }
        if !(epsilon >= 0.0) {
            return Err(LabError::LatticeMismatch(format!(
                "epsilon {epsilon} must be >= 0"
            )));
        }
        Ok(FieldTrajectory {
            grid,
            epsilon,
            times,
            snapshots,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn snapshot(&self, n: usize) -> &[f64] {
        &self.snapshots[n]
    }

    pub fn snapshots(&self) -> &[Vec<f64>] {
        &self.snapshots
    }

    pub fn field(&self, n: usize) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.snapshots[n].clone(),
        }
    }

    pub fn last(&self) -> &[f64] {
        self.snapshots.last().expect("trajectory is never empty")
    }

    /// Uniform snapshot spacing, or an error if the lattice is not uniform.
    pub fn snapshot_spacing(&self) -> Result<f64> {
        if self.len() < 2 {
            return Err(LabError::TooFewSnapshots {
                need: 2,
                got: self.len(),
            });
        }
        let dt = self.times[self.len() - 1] / (self.len() - 1) as f64;
        let uniform = self
            .times
            .iter()
            .enumerate()
            .all(|(n, &t)| (t - n as f64 * dt).abs() <= 1e-9 * dt.max(1.0));
        if uniform {
            Ok(dt)
        } else {
            Err(LabError::LatticeMismatch(
                "snapshot times are not uniform".into(),
            ))
        }
    }

    /// Largest `‖u(·,t)‖_∞` over all snapshots.
    pub fn max_abs(&self) -> f64 {
        self.snapshots
            .iter()
            .map(|s| sup_abs(s))
            .fold(0.0, f64::max)
    }

    /// Errors unless `other` shares this trajectory's grid and snapshot times.
    pub fn check_same_lattice(&self, other: &FieldTrajectory) -> Result<()> {
        if self.grid != other.grid {
            return Err(LabError::LatticeMismatch("grids differ".into()));
        }
        if self.times.len() != other.times.len()
            || self
                .times
                .iter()
                .zip(&other.times)
                .any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
        {
            return Err(LabError::LatticeMismatch("snapshot times differ".into()));
        }
        Ok(())
    }
}

/// Uniformly spaced snapshot times `t_n = n T / (count - 1)`.
pub fn snapshot_times(time_horizon: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count)
        .map(|n| {
            if n + 1 == count {
                time_horizon
            } else {
                time_horizon * n as f64 / (count - 1) as f64
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_centers() {
        let g = Grid::unit_1d(4, 1.0).unwrap();
        assert_eq!(g.spacing(0), 0.25);
        assert_eq!(g.center(0, 0), 0.125);
        assert_eq!(g.center(0, 3), 0.875);
        assert!((0..4).all(|i| g.boundary_distance(i) > 0.0));
    }

    #[test]
    fn row_major_neighbors_in_2d() {
        let g = Grid::new(
            vec![3, 4],
            vec![Interval::new(0.0, 3.0), Interval::new(0.0, 1.0)],
            1.0,
        )
        .unwrap();
        assert_eq!(g.stride(0), 4);
        assert_eq!(g.stride(1), 1);
        // cell (1, 2)
        let idx = 6;
        assert_eq!(g.unflatten(idx), [1, 2]);
        assert_eq!(g.neighbor(idx, 0, -1), Some(2));
        assert_eq!(g.neighbor(idx, 0, 1), Some(10));
        assert_eq!(g.neighbor(idx, 1, 1), Some(7));
        assert_eq!(g.neighbor(3, 1, 1), None);
        assert_eq!(g.neighbor(1, 0, -1), None);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(vec![], vec![], 1.0).is_err());
        assert!(Grid::new(vec![0], vec![Interval::new(0.0, 1.0)], 1.0).is_err());
        assert!(Grid::new(vec![4], vec![Interval::new(0.0, 1.0)], 0.0).is_err());
        assert!(Grid::new(vec![2, 2, 2], vec![Interval::new(0.0, 1.0); 3], 1.0).is_err());
    }

    #[test]
    fn trajectory_invariants() {
        let g = Arc::new(Grid::unit_1d(2, 1.0).unwrap());
        let ok = FieldTrajectory::new(g.clone(), 0.1, vec![0.0, 1.0], vec![vec![0.0; 2]; 2]);
        assert!(ok.is_ok());
        let bad = FieldTrajectory::new(g.clone(), 0.1, vec![0.0, 0.0], vec![vec![0.0; 2]; 2]);
        assert!(bad.is_err());
        let late = FieldTrajectory::new(g, 0.1, vec![0.5, 1.0], vec![vec![0.0; 2]; 2]);
        assert!(late.is_err());
    }

    #[test]
    fn snapshot_times_hit_horizon() {
        let t = snapshot_times(0.5, 64);
        assert_eq!(t.len(), 64);
        assert_eq!(t[0], 0.0);
        assert_eq!(*t.last().unwrap(), 0.5);
    }
}
