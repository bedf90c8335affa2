//! Independent oracles shared by the integration tests and the acceptance
//! binary. Nothing here calls into the code under test except to build
//! inputs.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use viscolab::config::Integrator;
use viscolab::flux::{FluxComponent, FluxSpec, ViscosityModel, ViscositySpec};
use viscolab::grid::{snapshot_times, Field, FieldTrajectory, Grid, Interval};
use viscolab::solver::ViscousScheme;

pub fn scenario_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

pub fn scenario_text(name: &str) -> String {
    std::fs::read_to_string(scenario_path(name)).expect("shipped scenario")
}

/// Heat-kernel spread of a Gaussian, translated at `speed`:
/// `sqrt(s0/s) exp(−(x − c − a t)² / 4s)`, `s = s0 + ε t`.
pub fn moving_gaussian(x: f64, t: f64, eps: f64, s0: f64, center: f64, speed: f64) -> f64 {
    let s = s0 + eps * t;
    (s0 / s).sqrt() * (-(x - center - speed * t).powi(2) / (4.0 * s)).exp()
}

/// `e^{−επ²t} sin(πx)`.
pub fn heat_sine(x: f64, t: f64, eps: f64) -> f64 {
    (-eps * PI * PI * t).exp() * (PI * x).sin()
}

/// Viscous solve on the unit interval with `B ≡ 1`.
pub fn solve_unit_1d(
    n: usize,
    horizon: f64,
    snapshots: usize,
    component: FluxComponent,
    eps: f64,
    integrator: Integrator,
    u0: impl Fn(f64) -> f64,
) -> FieldTrajectory {
    let grid = Arc::new(Grid::unit_1d(n, horizon).unwrap());
    let field = Field::from_fn(grid.clone(), |p| u0(p[0]));
    let bound = field.sup_norm().max(1e-300);
    let flux = FluxSpec::new(vec![component], Interval::symmetric(bound)).unwrap();
    let visc = ViscositySpec::new(ViscosityModel::Constant { b: 1.0 }).unwrap();
    let scheme = ViscousScheme::new(grid, &flux, visc, eps, integrator, 1e-10);
    let times = snapshot_times(horizon, snapshots);
    scheme.integrate(field, &times, 0.4).unwrap().0
}

/// Cell averages of `fine` over blocks of `factor` cells (1-D).
pub fn restrict(fine: &[f64], factor: usize) -> Vec<f64> {
    fine.chunks(factor)
        .map(|c| c.iter().sum::<f64>() / factor as f64)
        .collect()
}

pub fn l1_against(values: &[f64], h: f64, exact: impl Fn(usize) -> f64) -> f64 {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| (v - exact(i)).abs())
        .sum::<f64>()
        * h
}

pub fn max_against(values: &[f64], exact: impl Fn(usize) -> f64) -> f64 {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| (v - exact(i)).abs())
        .fold(0.0, f64::max)
}

/// Observed orders `log2(e_k / e_{k+1})` for a halving sequence.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Least-squares slope of `ln y` against `ln x`, written out independently
/// of the library's rate fit.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / n, sy / n);
    let mut num = 0.0;
    let mut den = 0.0;
    for &(x, y) in points {
        num += (x.ln() - mx) * (y.ln() - my);
        den += (x.ln() - mx).powi(2);
    }
    num / den
}

/// Total variation of a 1-D profile with zero values outside.
pub fn tv_with_walls(values: &[f64]) -> f64 {
    let mut tv = values.first().map_or(0.0, |v| v.abs()) + values.last().map_or(0.0, |v| v.abs());
    for w in values.windows(2) {
        tv += (w[1] - w[0]).abs();
    }
    tv
}

/// Exact Burgers solution from box data `1` on `(a, b)`, `0` elsewhere,
/// before the fan catches the shock (`t < 2 (b − a)`).
pub fn burgers_box(x: f64, t: f64, a: f64, b: f64) -> f64 {
    let shock = b + 0.5 * t;
    if x <= a || x >= shock {
        0.0
    } else if x < a + t {
        (x - a) / t
    } else {
        1.0
    }
}
