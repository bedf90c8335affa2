//! Inviscid reference: Godunov scheme with ghost value 0 at `∂Ω`, Strang
//! splitting in 2-D, and exact Riemann solutions for convex fluxes.

use crate::config::ScenarioConfig;
use crate::error::{LabError, Result};
use crate::flux::{FluxComponent, FluxSpec, ViscositySpec, RANGE_SLACK};
use crate::grid::{sup_abs, FieldTrajectory, Interval};
use crate::solver::{march, stable_dt, ScenarioSetup, SchemeState, MAX_PRINCIPLE_SLACK};

/// Godunov flux: `min f` on `[uL, uR]` if `uL ≤ uR`, else `max f` on
/// `[uR, uL]`.
pub fn godunov_face_flux(u_left: f64, u_right: f64, flux: &FluxSpec, axis: usize) -> Result<f64> {
    if axis >= flux.dim() {
        return Err(LabError::BadAxis {
            axis,
            dim: flux.dim(),
        });
    }
    flux.interval().check(u_left, RANGE_SLACK)?;
    flux.interval().check(u_right, RANGE_SLACK)?;
    Ok(godunov_unchecked(flux, axis, u_left, u_right))
}

#[inline]
fn godunov_unchecked(flux: &FluxSpec, axis: usize, a: f64, b: f64) -> f64 {
    let c = flux.component(axis);
    let (fa, fb) = (c.value(a), c.value(b));
    let inside = |y: f64| y > a.min(b) && y < a.max(b);
    if a <= b {
        flux.critical_points(axis)
            .iter()
            .filter(|&&y| inside(y))
            .fold(fa.min(fb), |m, &y| m.min(c.value(y)))
    } else {
        flux.critical_points(axis)
            .iter()
            .filter(|&&y| inside(y))
            .fold(fa.max(fb), |m, &y| m.max(c.value(y)))
    }
}

/// One conservative Godunov sweep along `axis`.
fn sweep(flux: &FluxSpec, grid: &crate::grid::Grid, axis: usize, u: &mut [f64], dt: f64) {
    let stride = grid.stride(axis);
    let n = grid.cells()[axis];
    let ratio = dt / grid.spacing(axis);
    let old = u.to_vec();
    for (idx, &c) in old.iter().enumerate() {
        let i = (idx / stride) % n;
        let left = if i > 0 { old[idx - stride] } else { 0.0 };
        let right = if i + 1 < n { old[idx + stride] } else { 0.0 };
        let fl = godunov_unchecked(flux, axis, left, c);
        let fr = godunov_unchecked(flux, axis, c, right);
        u[idx] = c - ratio * (fr - fl);
    }
}

/// Entropy solution surrogate on the scenario's grid and snapshot times,
/// started from the unmollified `u₀`.
pub fn solve_reference(scenario: &ScenarioConfig) -> Result<FieldTrajectory> {
    reference_from_setup(&ScenarioSetup::new(scenario)?)
}

pub fn reference_from_setup(setup: &ScenarioSetup) -> Result<FieldTrajectory> {
    let grid = setup.grid.clone();
    let flux = &setup.flux;
    let bound = setup.data.sup_norm();
    // ε = 0 leaves only the convective restriction
    let unit = ViscositySpec::new(crate::flux::ViscosityModel::Constant { b: 1.0 })?;
    let dt = stable_dt(&grid, flux, &unit, 0.0, setup.config.scheme.cfl);
    let mut state = SchemeState::new(setup.data.field(), 0.0);
    let snapshots = march(&mut state, &setup.times, dt, |s, tau| {
        if grid.dim() == 1 {
            sweep(flux, &grid, 0, &mut s.values, tau);
        } else {
            sweep(flux, &grid, 0, &mut s.values, 0.5 * tau);
            sweep(flux, &grid, 1, &mut s.values, tau);
            sweep(flux, &grid, 0, &mut s.values, 0.5 * tau);
        }
        s.time += tau;
        s.steps += 1;
        let max = sup_abs(&s.values);
        s.max_seen = s.max_seen.max(max);
        if max > bound + MAX_PRINCIPLE_SLACK {
            return Err(LabError::MaximumPrinciple { max, bound });
        }
        Ok(())
    })?;
    FieldTrajectory::new(grid, 0.0, setup.times.clone(), snapshots)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveKind {
    Constant,
    Shock,
    Rarefaction,
}

/// Self-similar solution of a Riemann problem for a convex flux.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannSolution {
    pub u_left: f64,
    pub u_right: f64,
    pub kind: WaveKind,
    /// Shock speed twice, or the fan's edge speeds.
    pub speeds: (f64, f64),
    component: FluxComponent,
}

impl RiemannSolution {
    pub fn new(u_left: f64, u_right: f64, component: FluxComponent) -> Result<Self> {
        if u_left == u_right {
            return Ok(RiemannSolution {
                u_left,
                u_right,
                kind: WaveKind::Constant,
                speeds: (0.0, 0.0),
                component,
            });
        }
        let range = Interval::new(u_left.min(u_right), u_left.max(u_right));
        if !component.is_convex_on(range) {
            return Err(LabError::Unsupported(format!(
                "exact Riemann solution needs a convex flux; {} is not convex on [{}, {}]",
                component.name(),
                range.lo,
                range.hi
            )));
        }
        let (dl, dr) = (component.derivative(u_left), component.derivative(u_right));
        let (kind, speeds) = if dl >= dr {
            let s = (component.value(u_left) - component.value(u_right)) / (u_left - u_right);
            (WaveKind::Shock, (s, s))
        } else {
            (WaveKind::Rarefaction, (dl, dr))
        };
        Ok(RiemannSolution {
            u_left,
            u_right,
            kind,
            speeds,
            component,
        })
    }

    /// Value at `ξ = x / t`.
    pub fn eval(&self, xi: f64) -> f64 {
        match self.kind {
            WaveKind::Constant => self.u_left,
            WaveKind::Shock => {
                if xi < self.speeds.0 {
                    self.u_left
                } else {
                    self.u_right
                }
            }
            WaveKind::Rarefaction => {
                if xi <= self.speeds.0 {
                    self.u_left
                } else if xi >= self.speeds.1 {
                    self.u_right
                } else {
                    // f' is increasing on the fan: invert by bisection
                    let (mut a, mut b) = (self.u_left, self.u_right);
                    for _ in 0..200 {
                        let m = 0.5 * (a + b);
                        if self.component.derivative(m) < xi {
                            a = m;
                        } else {
                            b = m;
                        }
                        if (b - a).abs() <= 1e-15 * (1.0 + m.abs()) {
                            break;
                        }
                    }
                    0.5 * (a + b)
                }
            }
        }
    }
}

pub fn riemann_exact(u_left: f64, u_right: f64, component: FluxComponent, xi: f64) -> Result<f64> {
    Ok(RiemannSolution::new(u_left, u_right, component)?.eval(xi))
}
