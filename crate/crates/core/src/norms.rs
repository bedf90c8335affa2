//! Discrete norms over `Ω` and `Ω_T`.

use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::grid::{Field, FieldTrajectory, Grid};
use crate::poisson::{PoissonAxis, PoissonBox, PoissonMethod};

/// How the time index of a [`SpaceTimeField`] is laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeLattice {
    /// Values at snapshot times `t_0 … t_{S−1}`; trapezoid weights, and the
    /// first and last rows sit on the `t = 0, T` faces.
    Nodes,
    /// Values on the `S` intervals between snapshot times (midpoint weights).
    Cells,
}

/// Space-time array `g(x_i, t_n)`, time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: Arc<Grid>,
    dt: f64,
    lattice: TimeLattice,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl SpaceTimeField {
    pub fn new(grid: Arc<Grid>, dt: f64, lattice: TimeLattice, values: Vec<f64>) -> Result<Self> {
        let m = grid.len();
        if values.is_empty() || !values.len().is_multiple_of(m) {
            return Err(LabError::LatticeMismatch(format!(
                "{} values do not tile a grid of {m} cells",
                values.len()
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(LabError::LatticeMismatch(format!(
                "time spacing {dt} must be positive"
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::LatticeMismatch(format!(
                "non-finite entry at index {pos}"
            )));
        }
        Ok(SpaceTimeField {
            grid,
            dt,
            lattice,
            values,
        })
    }

    pub fn zeros(grid: Arc<Grid>, steps: usize, dt: f64, lattice: TimeLattice) -> Self {
        let len = grid.len() * steps;
        SpaceTimeField {
            grid,
            dt,
            lattice,
            values: vec![0.0; len],
        }
    }

    /// Samples `g(x, t)`; node lattices sample at `n·dt`, cell lattices at
    /// `(n + ½)·dt`.
    pub fn from_fn(
        grid: Arc<Grid>,
        steps: usize,
        dt: f64,
        lattice: TimeLattice,
        g: impl Fn([f64; 2], f64) -> f64,
    ) -> Self {
        let offset = match lattice {
            TimeLattice::Nodes => 0.0,
            TimeLattice::Cells => 0.5,
        };
        let m = grid.len();
        let mut values = Vec::with_capacity(m * steps);
        for n in 0..steps {
            let t = (n as f64 + offset) * dt;
            values.extend((0..m).map(|i| g(grid.point(i), t)));
        }
        SpaceTimeField {
            grid,
            dt,
            lattice,
            values,
        }
    }

    /// The snapshots of a uniform trajectory as a node-lattice field.
    pub fn from_trajectory(traj: &FieldTrajectory) -> Result<Self> {
        let dt = traj.snapshot_spacing()?;
        let values = traj.snapshots().concat();
        SpaceTimeField::new(traj.grid().clone(), dt, TimeLattice::Nodes, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn lattice(&self) -> TimeLattice {
        self.lattice
    }

    pub fn steps(&self) -> usize {
        self.values.len() / self.grid.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn slice(&self, n: usize) -> &[f64] {
        let m = self.grid.len();
        &self.values[n * m..(n + 1) * m]
    }

    /// Quadrature weight of time row `n`.
    pub fn time_weight(&self, n: usize) -> f64 {
        match self.lattice {
            TimeLattice::Cells => self.dt,
            TimeLattice::Nodes => {
                let s = self.steps();
                if s == 1 {
                    self.dt
                } else if n == 0 || n + 1 == s {
                    0.5 * self.dt
                } else {
                    self.dt
                }
            }
        }
    }

    /// `h^d · dt`.
    pub fn cell_volume(&self) -> f64 {
        self.grid.cell_volume() * self.dt
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    pub fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_lattice(other)?;
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a = op(*a, *b);
        }
        Ok(out)
    }

    pub fn check_same_lattice(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid
            || self.lattice != other.lattice
            || self.values.len() != other.values.len()
            || (self.dt - other.dt).abs() > 1e-12 * self.dt
        {
            return Err(LabError::LatticeMismatch(
                "space-time fields differ in shape".into(),
            ));
        }
        Ok(())
    }

    /// Poisson box for the zero-boundary problem on `Ω_T`, plus the range of
    /// time rows that are unknowns.
    fn poisson_box(&self) -> (PoissonBox, std::ops::Range<usize>) {
        let s = self.steps();
        let (time_axis, rows) = match self.lattice {
            TimeLattice::Nodes => (
                PoissonAxis::nodes(s.saturating_sub(2), self.dt),
                1..s.saturating_sub(1),
            ),
            TimeLattice::Cells => (PoissonAxis::cells(s, self.dt), 0..s),
        };
        let mut axes = vec![time_axis];
        for axis in 0..self.grid.dim() {
            axes.push(PoissonAxis::cells(
                self.grid.cells()[axis],
                self.grid.spacing(axis),
            ));
        }
        (PoissonBox::new(axes), rows)
    }
}

pub fn lp_norm(field: &SpaceTimeField, p: Norm) -> f64 {
    let cell = field.grid.cell_volume();
    match p {
        Norm::Linf => crate::grid::sup_abs(&field.values),
        Norm::L1 => {
            (0..field.steps())
                .map(|n| field.time_weight(n) * field.slice(n).iter().map(|v| v.abs()).sum::<f64>())
                .sum::<f64>()
                * cell
        }
        Norm::L2 => ((0..field.steps())
            .map(|n| field.time_weight(n) * field.slice(n).iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            * cell)
            .sqrt(),
    }
}

/// Norm of a single spatial field with cell-volume weights.
pub fn field_norm(field: &Field, p: Norm) -> f64 {
    let cell = field.grid().cell_volume();
    let v = field.values();
    match p {
        Norm::Linf => crate::grid::sup_abs(v),
        Norm::L1 => v.iter().map(|x| x.abs()).sum::<f64>() * cell,
        Norm::L2 => (v.iter().map(|x| x * x).sum::<f64>() * cell).sqrt(),
    }
}

/// Anisotropic total variation: one-sided difference magnitudes along each
/// axis, times `cell_volume / h_axis`.
pub fn total_variation(field: &Field) -> f64 {
    let grid = field.grid();
    let v = field.values();
    let mut tv = 0.0;
    for axis in 0..grid.dim() {
        let stride = grid.stride(axis);
        let n = grid.cells()[axis];
        let mut s = 0.0;
        for (idx, &c) in v.iter().enumerate() {
            if (idx / stride) % n + 1 < n {
                s += (v[idx + stride] - c).abs();
            }
        }
        tv += s * grid.cell_volume() / grid.spacing(axis);
    }
    tv
}

/// The `M(Ω_T)` surrogate: the `L¹(Ω_T)` norm.
pub fn measure_norm(field: &SpaceTimeField) -> f64 {
    lp_norm(field, Norm::L1)
}

/// `‖g‖_{H⁻¹(Ω_T)} = ‖∇φ‖_{L²}` where `−Δφ = g`, `φ = 0` on `∂Ω_T`.
pub fn h_minus_one_norm(g: &SpaceTimeField) -> Result<f64> {
    h_minus_one_norm_with(g, PoissonMethod::Spectral)
}

pub fn h_minus_one_norm_with(g: &SpaceTimeField, method: PoissonMethod) -> Result<f64> {
    let phi = h_minus_one_potential(g, method)?;
    let (b, _) = g.poisson_box();
    Ok(b.gradient_norm_sq(&phi).sqrt())
}

/// The Riesz potential `φ` on the interior time rows (time-major).
pub fn h_minus_one_potential(g: &SpaceTimeField, method: PoissonMethod) -> Result<Vec<f64>> {
    let (b, rows) = g.poisson_box();
    if b.is_empty() {
        return Ok(Vec::new());
    }
    let m = g.grid.len();
    let rhs = &g.values[rows.start * m..rows.end * m];
    b.solve(rhs, method)
}

/// `⟨g, φ⟩` for `φ` given on the interior time rows, plus `‖∇φ‖`.
pub fn pairing_with_potential(g: &SpaceTimeField, phi: &[f64]) -> (f64, f64) {
    let (b, rows) = g.poisson_box();
    let m = g.grid.len();
    let rhs = &g.values[rows.start * m..rows.end * m];
    (b.inner(rhs, phi), b.gradient_norm_sq(phi).sqrt())
}

/// Number of interior unknowns of the space-time Poisson problem.
pub fn potential_len(g: &SpaceTimeField) -> usize {
    g.poisson_box().0.len()
}

/// Spatial `H⁻¹(Ω)` norm of a single field.
pub fn h_minus_one_norm_spatial(field: &Field) -> Result<f64> {
    let grid = field.grid();
    let axes = (0..grid.dim())
        .map(|a| PoissonAxis::cells(grid.cells()[a], grid.spacing(a)))
        .collect();
    let b = PoissonBox::new(axes);
    let phi = b.solve(field.values(), PoissonMethod::Spectral)?;
    Ok(b.gradient_norm_sq(&phi).sqrt())
}

/// `Σ_j ‖∂_j u‖²_{L²(Ω_T)}` from face differences, walls held at zero as in
/// the scheme; trapezoid weights in time.
pub fn gradient_energy(traj: &FieldTrajectory) -> Result<f64> {
    let grid = traj.grid().clone();
    let m = grid.len();
    let mut values = vec![0.0; traj.len() * m];
    for n in 0..traj.len() {
        let u = traj.snapshot(n);
        for axis in 0..grid.dim() {
            let stride = grid.stride(axis);
            let cells = grid.cells()[axis];
            let h = grid.spacing(axis);
            for idx in 0..m {
                // face to the right of each cell, plus the left wall face
                let i = (idx / stride) % cells;
                let r = if i + 1 < cells { u[idx + stride] } else { 0.0 };
                let mut sq = ((r - u[idx]) / h).powi(2);
                if i == 0 {
                    sq += (u[idx] / h).powi(2);
                }
                values[n * m + idx] += sq;
            }
        }
    }
    let dt = if traj.len() > 1 {
        traj.snapshot_spacing()?
    } else {
        1.0
    };
    Ok(lp_norm(
        &SpaceTimeField::new(grid, dt, TimeLattice::Nodes, values)?,
        Norm::L1,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_field(n: usize, steps: usize, g: impl Fn([f64; 2], f64) -> f64) -> SpaceTimeField {
        let grid = Arc::new(Grid::unit_1d(n, 1.0).unwrap());
        SpaceTimeField::from_fn(grid, steps, 1.0 / (steps - 1) as f64, TimeLattice::Nodes, g)
    }

    #[test]
    fn constant_one_has_unit_norms() {
        let g = unit_field(50, 17, |_, _| 1.0);
        for p in [Norm::L1, Norm::L2, Norm::Linf] {
            assert!((lp_norm(&g, p) - 1.0).abs() < 1e-12);
        }
        let z = unit_field(50, 17, |_, _| 0.0);
        assert_eq!(lp_norm(&z, Norm::L2), 0.0);
        assert_eq!(h_minus_one_norm(&z).unwrap(), 0.0);
    }

    #[test]
    fn sine_l2_norm() {
        let g = unit_field(200, 64, |x, _| (PI * x[0]).sin());
        let v = lp_norm(&g, Norm::L2);
        assert!((v - 0.5_f64.sqrt()).abs() < 0.02 * 0.5_f64.sqrt(), "{v}");
    }

    #[test]
    fn cell_lattice_weights() {
        let grid = Arc::new(Grid::unit_1d(10, 1.0).unwrap());
        let g = SpaceTimeField::from_fn(grid, 4, 0.25, TimeLattice::Cells, |_, _| 2.0);
        assert!((lp_norm(&g, Norm::L1) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn spatial_h_minus_one_of_sine() {
        let grid = Arc::new(Grid::unit_1d(400, 1.0).unwrap());
        let f = Field::from_fn(grid, |x| (PI * x[0]).sin());
        let v = h_minus_one_norm_spatial(&f).unwrap();
        let expect = 1.0 / (2.0_f64.sqrt() * PI);
        assert!((v - expect).abs() < 0.01 * expect, "{v}");
    }

    #[test]
    fn h_minus_one_is_homogeneous() {
        let g = unit_field(40, 12, |x, t| (3.0 * x[0]).cos() * t);
        let a = h_minus_one_norm(&g).unwrap();
        let b = h_minus_one_norm(&g.scaled(2.0)).unwrap();
        assert!((b - 2.0 * a).abs() <= 1e-12 * b);
    }

    #[test]
    fn measure_norm_aliases_l1() {
        let g = unit_field(30, 9, |x, t| -(x[0] * t + 0.1));
        assert_eq!(measure_norm(&g), lp_norm(&g, Norm::L1));
        let integral: f64 = (0..g.steps())
            .map(|n| g.time_weight(n) * g.slice(n).iter().sum::<f64>())
            .sum::<f64>()
            * g.grid().cell_volume();
        assert!((measure_norm(&g) + integral).abs() < 1e-14);
    }

    #[test]
    fn gradient_energy_of_a_ramp() {
        let grid = Arc::new(Grid::unit_1d(400, 1.0).unwrap());
        let snaps = vec![
            (0..400)
                .map(|i| (std::f64::consts::PI * (i as f64 + 0.5) / 400.0).sin())
                .collect();
            3
        ];
        let traj = FieldTrajectory::new(grid, 0.0, vec![0.0, 0.5, 1.0], snaps).unwrap();
        // ∫₀¹ (π cos πx)² dx = π²/2 for every time
        let e = gradient_energy(&traj).unwrap();
        assert!((e - PI * PI / 2.0).abs() < 0.01 * PI * PI / 2.0, "{e}");
    }

    #[test]
    fn total_variation_basics() {
        let grid = Arc::new(Grid::unit_1d(20, 1.0).unwrap());
        assert_eq!(total_variation(&Field::from_fn(grid.clone(), |_| 3.0)), 0.0);
        let step = Field::from_fn(grid, |x| if x[0] > 0.5 { 1.0 } else { 0.0 });
        assert!((total_variation(&step) - 1.0).abs() < 1e-12);
        let grid2 = Arc::new(Grid::unit_2d(10, 1.0).unwrap());
        let ramp = Field::from_fn(grid2, |x| x[0]);
        // ∫∫|∂_x x| = 1 up to the half-cell end effect
        assert!((total_variation(&ramp) - 0.9).abs() < 1e-12);
    }
}
