//! Numerical div-curl test: does the window average of `G·H` match the
//! product of window averages?

use crate::compactness::windows::WindowLattice;
use crate::error::{LabError, Result};
use crate::grid::FieldTrajectory;
use crate::norms::{SpaceTimeField, TimeLattice};
use crate::quadrature::AntiderivativeTable;

/// `max_w |avg_w(G·H) − avg_w(G)·avg_w(H)|`. The window lists cells per
/// spatial axis, then time rows.
pub fn div_curl_test(
    g: [&SpaceTimeField; 2],
    h: [&SpaceTimeField; 2],
    window: &[usize],
) -> Result<f64> {
    for f in [g[1], h[0], h[1]] {
        g[0].check_same_lattice(f)?;
    }
    let lattice = WindowLattice::new(g[0].grid(), g[0].steps(), window)?;
    let m = g[0].grid().len();
    let at = |f: &SpaceTimeField, n: usize, i: usize| f.values()[n * m + i];
    let dot =
        lattice.averages(|n, i| at(g[0], n, i) * at(h[0], n, i) + at(g[1], n, i) * at(h[1], n, i));
    let avg: Vec<Vec<f64>> = [g[0], g[1], h[0], h[1]]
        .iter()
        .map(|f| lattice.averages(|n, i| at(f, n, i)))
        .collect();
    Ok((0..lattice.count())
        .map(|w| (dot[w] - avg[0][w] * avg[2][w] - avg[1][w] * avg[3][w]).abs())
        .fold(0.0, f64::max))
}

/// Tartar's pairs for a 1-D trajectory: `G = (u, f(u))` and
/// `H = (g(u), −f(u))`, `g' = (f')²`, as node-lattice fields.
pub fn tartar_pairs(
    traj: &FieldTrajectory,
    flux: &crate::flux::FluxSpec,
    g_table: &AntiderivativeTable,
) -> Result<([SpaceTimeField; 2], [SpaceTimeField; 2])> {
    if traj.grid().dim() != 1 {
        return Err(LabError::Unsupported(
            "Tartar pairs are built for d = 1".into(),
        ));
    }
    let dt = traj.snapshot_spacing()?;
    let c = flux.component(0);
    let u: Vec<f64> = traj.snapshots().concat();
    let f: Vec<f64> = u.iter().map(|&v| c.value(v)).collect();
    let g: Vec<f64> = u.iter().map(|&v| g_table.eval(v)).collect();
    let neg_f: Vec<f64> = f.iter().map(|v| -v).collect();
    let grid = traj.grid().clone();
    let make = |v: Vec<f64>| SpaceTimeField::new(grid.clone(), dt, TimeLattice::Nodes, v);
    Ok(([make(u)?, make(f)?], [make(g)?, make(neg_f)?]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::sync::Arc;

    fn field(f: impl Fn(f64, f64) -> f64) -> SpaceTimeField {
        let grid = Arc::new(Grid::unit_1d(256, 1.0).unwrap());
        SpaceTimeField::from_fn(grid, 16, 1.0 / 15.0, TimeLattice::Nodes, move |x, t| {
            f(x[0], t)
        })
    }

    #[test]
    fn constants_have_no_deviation() {
        let a = field(|_, _| 0.3);
        let b = field(|_, _| -2.0);
        assert!(div_curl_test([&a, &b], [&b, &a], &[32, 4]).unwrap() < 1e-15);
    }

    #[test]
    fn orthogonal_oscillations_pass_and_aligned_ones_fail() {
        let n = 64.0 * std::f64::consts::PI;
        let s = field(move |x, _| (n * x).sin());
        let zero = field(|_, _| 0.0);
        let orth = div_curl_test([&s, &zero], [&zero, &s], &[64, 4]).unwrap();
        assert!(orth < 1e-12);
        let aligned = div_curl_test([&s, &zero], [&s, &zero], &[64, 4]).unwrap();
        assert!((0.4..=0.5 + 1e-12).contains(&aligned), "{aligned}");
    }

    #[test]
    fn lattice_mismatch_is_rejected() {
        let a = field(|_, _| 1.0);
        let grid = Arc::new(Grid::unit_1d(128, 1.0).unwrap());
        let b = SpaceTimeField::zeros(grid, 16, 1.0 / 15.0, TimeLattice::Nodes);
        assert!(div_curl_test([&a, &a], [&a, &b], &[32, 4]).is_err());
    }
}
