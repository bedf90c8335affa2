use crate::error::{LabError, Result};
use crate::grid::Grid;

/// Partition of the (time, space) lattice into coarse boxes. The window is
/// given as cells per spatial axis followed by snapshots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowLattice {
    cells: Vec<usize>,
    steps: usize,
    window: Vec<usize>,
}

impl WindowLattice {
    pub fn new(grid: &Grid, steps: usize, window: &[usize]) -> Result<Self> {
        let dim = grid.dim();
        if window.len() != dim + 1 {
            return Err(LabError::LatticeMismatch(format!(
                "window needs {} entries, got {}",
                dim + 1,
                window.len()
            )));
        }
        for (axis, (&w, &n)) in window
            .iter()
            .zip(grid.cells().iter().chain([&steps]))
            .enumerate()
        {
            if w == 0 || n % w != 0 {
                return Err(LabError::LatticeMismatch(format!(
                    "window {w} does not divide {n} along axis {axis}"
                )));
            }
        }
        Ok(WindowLattice {
            cells: grid.cells().to_vec(),
            steps,
            window: window.to_vec(),
        })
    }

    pub fn window(&self) -> &[usize] {
        &self.window
    }

    fn per_axis(&self) -> Vec<usize> {
        self.cells
            .iter()
            .zip(&self.window)
            .map(|(n, w)| n / w)
            .collect()
    }

    pub fn count(&self) -> usize {
        self.per_axis().iter().product::<usize>() * (self.steps / self.window[self.cells.len()])
    }

    /// Points per window.
    pub fn size(&self) -> usize {
        self.window.iter().product()
    }

    /// Window containing time row `n` and cell `idx`.
    pub fn assign(&self, n: usize, idx: usize) -> usize {
        let per = self.per_axis();
        let mut w = n / self.window[self.cells.len()];
        let mut rest = idx;
        let mut spatial = vec![0; self.cells.len()];
        for axis in (0..self.cells.len()).rev() {
            spatial[axis] = (rest % self.cells[axis]) / self.window[axis];
            rest /= self.cells[axis];
        }
        for axis in 0..self.cells.len() {
            w = w * per[axis] + spatial[axis];
        }
        w
    }

    /// Window averages of `value(n, idx)` over all time rows and cells.
    pub fn averages(&self, mut value: impl FnMut(usize, usize) -> f64) -> Vec<f64> {
        let mut sums = vec![0.0; self.count()];
        let m: usize = self.cells.iter().product();
        for n in 0..self.steps {
            for idx in 0..m {
                sums[self.assign(n, idx)] += value(n, idx);
            }
        }
        let size = self.size() as f64;
        sums.iter_mut().for_each(|s| *s /= size);
        sums
    }
}
