//! Compactly supported initial data and its regularization by convolution
//! with the standard bump mollifier.

use std::sync::Arc;

use crate::config::{DataPreset, InitialDataConfig};
use crate::error::{LabError, Result};
use crate::grid::{Field, Grid};
use crate::norms::total_variation;

/// Discrete standard mollifier `ρ_w(z) = C w^{-d} exp(−1/(1−|z/w|²))` on
/// the lattice offsets of a grid, normalized to unit discrete mass.
#[derive(Debug, Clone)]
pub struct MollifierKernel {
    width: f64,
    cell_volume: f64,
    dim: usize,
    /// (offset per axis, density value)
    taps: Vec<([isize; 2], f64)>,
    unnormalized_mass: f64,
}

fn bump_profile(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

impl MollifierKernel {
    pub fn new(width: f64, grid: &Grid) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(LabError::config(
                "ladder.mollifier_width",
                "must be positive",
            ));
        }
        let dim = grid.dim();
        let h: Vec<f64> = (0..dim).map(|a| grid.spacing(a)).collect();
        let reach: Vec<isize> = h.iter().map(|hj| (width / hj).ceil() as isize).collect();
        let cell_volume = grid.cell_volume();
        let mut taps = Vec::new();
        let ry = if dim == 2 { reach[1] } else { 0 };
        for i in -reach[0]..=reach[0] {
            for j in -ry..=ry {
                let zx = i as f64 * h[0] / width;
                let zy = if dim == 2 {
                    j as f64 * h[1] / width
                } else {
                    0.0
                };
                let v = bump_profile(zx * zx + zy * zy);
                if v > 0.0 {
                    taps.push(([i, j], v));
                }
            }
        }
        if taps.is_empty() {
            // narrower than one cell: the identity
            taps.push(([0, 0], 1.0));
        }
        let unnormalized_mass: f64 = taps.iter().map(|t| t.1).sum::<f64>() * cell_volume;
        for t in &mut taps {
            t.1 /= unnormalized_mass;
        }
        Ok(MollifierKernel {
            width,
            cell_volume,
            dim,
            taps,
            unnormalized_mass,
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn taps(&self) -> impl Iterator<Item = ([isize; 2], f64)> + '_ {
        self.taps.iter().copied()
    }

    /// Discrete mass of the profile before normalization.
    pub fn unnormalized_mass(&self) -> f64 {
        self.unnormalized_mass
    }

    /// Largest tap offset in physical units.
    pub fn support_radius(&self, grid: &Grid) -> f64 {
        self.taps
            .iter()
            .map(|(o, _)| {
                (0..self.dim)
                    .map(|a| (o[a] as f64 * grid.spacing(a)).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Discrete integral `Σ ρ_k h^d` of the kernel.
pub fn kernel_mass(kernel: &MollifierKernel) -> f64 {
    kernel.taps.iter().map(|t| t.1).sum::<f64>() * kernel.cell_volume
}

/// Sampled `u₀` with its support margin and norms.
#[derive(Debug, Clone)]
pub struct InitialData {
    field: Field,
    support_margin: f64,
    sup_norm: f64,
    tv: f64,
}

impl InitialData {
    /// Wraps sampled data, checking that it vanishes within `support_margin`
    /// of the boundary.
    pub fn new(field: Field, support_margin: f64) -> Result<Self> {
        let grid = field.grid().clone();
        for (cell, &v) in field.values().iter().enumerate() {
            if v != 0.0 && grid.boundary_distance(cell) < support_margin {
                return Err(LabError::SupportMargin {
                    margin: support_margin,
                    value: v.abs(),
                    cell,
                });
            }
        }
        let sup_norm = field.sup_norm();
        let tv = total_variation(&field);
        Ok(InitialData {
            field,
            support_margin,
            sup_norm,
            tv,
        })
    }

    /// Samples a configured preset at the cell centers.
    pub fn from_config(config: &InitialDataConfig, grid: Arc<Grid>) -> Result<Self> {
        let dim = grid.dim();
        let bump = move |center: Vec<f64>, width: f64, amplitude: f64| {
            move |p: [f64; 2]| {
                let r2: f64 = (0..dim).map(|a| ((p[a] - center[a]) / width).powi(2)).sum();
                if r2 < 1.0 {
                    amplitude * (1.0 - r2).powi(3)
                } else {
                    0.0
                }
            }
        };
        let field = match config.preset {
            DataPreset::Bump => Field::from_fn(
                grid,
                bump(config.center.clone(), config.width, config.amplitude),
            ),
            DataPreset::Box => {
                let c = config.center.clone();
                let (w, a) = (config.width, config.amplitude);
                Field::from_fn(grid, move |p| {
                    if (0..dim).all(|ax| (p[ax] - c[ax]).abs() < w) {
                        a
                    } else {
                        0.0
                    }
                })
            }
            DataPreset::Twobump => {
                let first = bump(config.center.clone(), config.width, config.amplitude);
                let second = bump(
                    config.center2.clone().ok_or_else(|| {
                        LabError::config("initial_data.center2", "required for twobump")
                    })?,
                    config.width2.unwrap_or(config.width),
                    config.amplitude2.unwrap_or(config.amplitude),
                );
                Field::from_fn(grid, move |p| first(p) + second(p))
            }
        };
        InitialData::new(field, config.support_margin)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.field.grid()
    }

    pub fn support_margin(&self) -> f64 {
        self.support_margin
    }

    /// `‖u₀‖_∞`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// `TV_Ω(u₀)`.
    pub fn tv(&self) -> f64 {
        self.tv
    }
}

/// `u₀ ∗ ρ_w` on the grid. The kernel must be narrower than the support
/// margin, so the result stays compactly supported inside `Ω`.
pub fn mollify(data: &InitialData, kernel: &MollifierKernel) -> Result<Field> {
    if kernel.width >= data.support_margin {
        return Err(LabError::MollifierTooWide {
            width: kernel.width,
            margin: data.support_margin,
        });
    }
    let grid = data.grid().clone();
    let n = grid.cells().to_vec();
    let (nx, ny) = (n[0] as isize, if n.len() == 2 { n[1] as isize } else { 1 });
    let src = data.field.values();
    let vol = kernel.cell_volume;
    let mut out = vec![0.0; src.len()];
    for i in 0..nx {
        for j in 0..ny {
            let mut acc = 0.0;
            for (o, w) in &kernel.taps {
                let (si, sj) = (i - o[0], j - o[1]);
                // outside Ω the data vanishes by the margin precondition
                if si < 0 || si >= nx || sj < 0 || sj >= ny {
                    continue;
                }
                acc += w * src[(si * ny + sj) as usize];
            }
            out[(i * ny + j) as usize] = acc * vol;
        }
    }
    Field::new(grid, out)
}

/// Discrete `‖Δu‖_{L¹}` with zero ghost values.
pub fn laplacian_l1(field: &Field) -> f64 {
    let grid = field.grid();
    let u = field.values();
    let mut total = 0.0;
    for idx in 0..u.len() {
        let mut lap = 0.0;
        for axis in 0..grid.dim() {
            let h = grid.spacing(axis);
            let l = grid.neighbor(idx, axis, -1).map_or(0.0, |k| u[k]);
            let r = grid.neighbor(idx, axis, 1).map_or(0.0, |k| u[k]);
            lap += (l - 2.0 * u[idx] + r) / (h * h);
        }
        total += lap.abs();
    }
    total * grid.cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::InitialDataConfig;

    fn grid1(n: usize) -> Arc<Grid> {
        Arc::new(Grid::unit_1d(n, 1.0).unwrap())
    }

    fn config(preset: DataPreset, width: f64) -> InitialDataConfig {
        InitialDataConfig {
            preset,
            center: vec![0.5],
            width,
            amplitude: 1.0,
            center2: None,
            width2: None,
            amplitude2: None,
            support_margin: 0.1,
        }
    }

    #[test]
    fn kernel_mass_is_one() {
        let g = grid1(400);
        for w in [0.1, 0.05, 0.02, 0.001] {
            let k = MollifierKernel::new(w, &g).unwrap();
            assert!((kernel_mass(&k) - 1.0).abs() < 1e-12, "width {w}");
            assert!(k.unnormalized_mass() > 0.0);
            assert!(k.taps().all(|(_, v)| v >= 0.0));
            assert!(k.support_radius(&g) < w || w < g.spacing(0));
        }
        let g2 = Arc::new(Grid::unit_2d(64, 1.0).unwrap());
        let k = MollifierKernel::new(0.1, &g2).unwrap();
        assert!((kernel_mass(&k) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = grid1(100);
        let data = InitialData::new(Field::zeros(g.clone()), 0.2).unwrap();
        let k = MollifierKernel::new(0.1, &g).unwrap();
        assert!(mollify(&data, &k)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn triangular_bump_max_does_not_grow() {
        let g = grid1(400);
        let field = Field::from_fn(g.clone(), |p| (1.0 - (p[0] - 0.5).abs() / 0.2).max(0.0));
        let data = InitialData::new(field, 0.25).unwrap();
        assert_eq!(data.sup_norm(), data.field().sup_norm());
        for w in [0.2, 0.1, 0.02] {
            let k = MollifierKernel::new(w, &g).unwrap();
            let m = mollify(&data, &k).unwrap();
            assert!(m.sup_norm() <= 1.0);
        }
    }

    #[test]
    fn kernel_wider_than_margin_is_rejected() {
        let g = grid1(100);
        let data = InitialData::from_config(&config(DataPreset::Bump, 0.3), g.clone()).unwrap();
        let k = MollifierKernel::new(0.15, &g).unwrap();
        assert!(matches!(
            mollify(&data, &k),
            Err(LabError::MollifierTooWide { .. })
        ));
    }

    #[test]
    fn data_inside_margin_is_rejected() {
        let g = grid1(100);
        let mut c = config(DataPreset::Box, 0.45);
        c.support_margin = 0.1;
        assert!(matches!(
            InitialData::from_config(&c, g),
            Err(LabError::SupportMargin { .. })
        ));
    }

    #[test]
    fn box_tv_counts_both_jumps() {
        let g = grid1(400);
        let data = InitialData::from_config(&config(DataPreset::Box, 0.2), g).unwrap();
        assert!((data.tv() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mollified_box_keeps_tv_and_support() {
        let g = grid1(400);
        let data = InitialData::from_config(&config(DataPreset::Box, 0.2), g.clone()).unwrap();
        let k = MollifierKernel::new(0.05, &g).unwrap();
        let m = mollify(&data, &k).unwrap();
        assert!(total_variation(&m) <= data.tv() * (1.0 + 10.0 * g.spacing(0)));
        // support grows by at most the kernel width
        for (i, &v) in m.values().iter().enumerate() {
            if (g.center(0, i) - 0.5).abs() > 0.2 + 0.05 {
                assert_eq!(v, 0.0);
            }
        }
        assert!((m.integral() - data.field().integral()).abs() < 1e-12);
    }

    #[test]
    fn twobump_in_two_dimensions() {
        let g = Arc::new(Grid::unit_2d(32, 1.0).unwrap());
        let c = InitialDataConfig {
            preset: DataPreset::Twobump,
            center: vec![0.3, 0.3],
            width: 0.1,
            amplitude: 1.0,
            center2: Some(vec![0.7, 0.7]),
            width2: Some(0.1),
            amplitude2: Some(-0.5),
            support_margin: 0.15,
        };
        let data = InitialData::from_config(&c, g).unwrap();
        let v = data.field().values();
        assert!(v.iter().any(|&x| x > 0.5));
        assert!(v.iter().any(|&x| x < -0.2));
    }

    #[test]
    fn laplacian_of_linear_interior_profile_vanishes() {
        let g = grid1(10);
        let f = Field::new(g, vec![0.0, 0.0, 1.0, 2.0, 3.0, 2.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        // kinks at cells 1, 4 and 7 only
        let l = laplacian_l1(&f);
        let h: f64 = 0.1;
        assert!((l - (1.0 + 2.0 + 1.0) / (h * h) * h).abs() < 1e-9);
    }
}
