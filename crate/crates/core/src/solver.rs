//! Explicit finite-volume solver for `u_t + ∇·f(u) = ε∇·(B(u)∇u)` with
//! homogeneous Dirichlet data.

use std::sync::Arc;

use crate::config::{Integrator, ScenarioConfig};
use crate::error::{LabError, Result};
use crate::flux::{FluxSpec, ViscositySpec, RANGE_SLACK};
use crate::grid::{snapshot_times, sup_abs, Field, FieldTrajectory, Grid, Interval};
use crate::mollifier::{mollify, InitialData, MollifierKernel};
use crate::quadrature::AntiderivativeTable;

/// Slack on the discrete maximum principle checked after every step.
pub const MAX_PRINCIPLE_SLACK: f64 = 1e-8;

/// Everything derived from a validated config that the solvers share.
#[derive(Debug, Clone)]
pub struct ScenarioSetup {
    pub config: ScenarioConfig,
    pub grid: Arc<Grid>,
    pub data: InitialData,
    pub flux: FluxSpec,
    pub viscosity: ViscositySpec,
    pub times: Vec<f64>,
}

impl ScenarioSetup {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        let grid = config.build_grid()?;
        let data = InitialData::from_config(&config.initial_data, grid.clone())?;
        let interval = Interval::symmetric(data.sup_norm());
        let flux = FluxSpec::new(config.flux.components.clone(), interval)?;
        let viscosity = ViscositySpec::new(config.viscosity)?;
        let times = snapshot_times(config.time_horizon(), config.grid.snapshots);
        Ok(ScenarioSetup {
            config: config.clone(),
            grid,
            data,
            flux,
            viscosity,
            times,
        })
    }

    /// The invariant interval `I = [−‖u₀‖_∞, ‖u₀‖_∞]`.
    pub fn interval(&self) -> Interval {
        self.flux.interval()
    }

    /// `u_{0ε} = u₀ ∗ ρ_w` with the configured width for `epsilon`.
    pub fn mollified(&self, epsilon: f64) -> Result<Field> {
        let kernel = MollifierKernel::new(self.config.mollifier_width(epsilon), &self.grid)?;
        mollify(&self.data, &kernel)
    }

    pub fn solve_viscous(&self, epsilon: f64) -> Result<(FieldTrajectory, SolveStats)> {
        let initial = self.mollified(epsilon)?;
        let scheme = ViscousScheme::new(
            self.grid.clone(),
            &self.flux,
            self.viscosity,
            epsilon,
            self.config.scheme.integrator,
            self.config.scheme.quadrature_tol,
        );
        scheme.integrate(initial, &self.times, self.config.scheme.cfl)
    }
}

/// Builds the scenario and integrates one ladder member.
pub fn solve_viscous(scenario: &ScenarioConfig, epsilon: f64) -> Result<FieldTrajectory> {
    Ok(ScenarioSetup::new(scenario)?.solve_viscous(epsilon)?.0)
}

/// Counters of a finished solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub steps: usize,
    pub dt: f64,
    pub max_seen: f64,
    pub bound: f64,
}

/// `cfl · min(min_j h_j / L, min_j h_j² / (2 d ε sup B))`, dropping whichever
/// term is absent. Infinite when both are.
pub fn stable_dt(
    grid: &Grid,
    flux: &FluxSpec,
    visc: &ViscositySpec,
    epsilon: f64,
    cfl: f64,
) -> f64 {
    let h = (0..grid.dim())
        .map(|a| grid.spacing(a))
        .fold(f64::INFINITY, f64::min);
    let mut dt = f64::INFINITY;
    let lip = flux.lipschitz_bound();
    if lip > 0.0 {
        dt = dt.min(h / lip);
    }
    if epsilon > 0.0 {
        dt = dt.min(h * h / (2.0 * grid.dim() as f64 * epsilon * visc.upper_bound()));
    }
    cfl * dt
}

/// Tabulated splitting `f = f(0) + P + N`, `P' = max(f', 0)`,
/// `N' = min(f', 0)`, per axis.
#[derive(Debug, Clone)]
pub struct EngquistOsher {
    interval: Interval,
    f0: Vec<f64>,
    positive: Vec<AntiderivativeTable>,
    negative: Vec<AntiderivativeTable>,
}

impl EngquistOsher {
    pub fn new(flux: &FluxSpec, tol: f64) -> Self {
        let interval = flux.interval();
        let mut f0 = Vec::new();
        let mut positive = Vec::new();
        let mut negative = Vec::new();
        for c in flux.components() {
            f0.push(c.value(0.0));
            positive.push(AntiderivativeTable::build(
                move |s| c.derivative(s).max(0.0),
                interval,
                tol,
            ));
            negative.push(AntiderivativeTable::build(
                move |s| c.derivative(s).min(0.0),
                interval,
                tol,
            ));
        }
        EngquistOsher {
            interval,
            f0,
            positive,
            negative,
        }
    }

    /// `F(uL, uR)` without range checks.
    #[inline]
    pub fn flux_unchecked(&self, axis: usize, u_left: f64, u_right: f64) -> f64 {
        self.f0[axis] + self.positive[axis].eval(u_left) + self.negative[axis].eval(u_right)
    }
}

/// Engquist–Osher numerical flux across a face normal to `axis`.
pub fn convective_face_flux(
    u_left: f64,
    u_right: f64,
    eo: &EngquistOsher,
    axis: usize,
) -> Result<f64> {
    if axis >= eo.f0.len() {
        return Err(LabError::BadAxis {
            axis,
            dim: eo.f0.len(),
        });
    }
    eo.interval.check(u_left, RANGE_SLACK)?;
    eo.interval.check(u_right, RANGE_SLACK)?;
    Ok(eo.flux_unchecked(axis, u_left, u_right))
}

/// `ε B((uL+uR)/2) (uR − uL)/h`.
#[inline]
pub fn diffusive_face_flux(
    u_left: f64,
    u_right: f64,
    visc: &ViscositySpec,
    epsilon: f64,
    h: f64,
) -> f64 {
    if epsilon == 0.0 {
        return 0.0;
    }
    epsilon * visc.value(0.5 * (u_left + u_right)) * (u_right - u_left) / h
}

/// State carried between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeState {
    pub values: Vec<f64>,
    pub time: f64,
    pub epsilon: f64,
    pub steps: usize,
    pub max_seen: f64,
}

impl SchemeState {
    pub fn new(initial: &Field, epsilon: f64) -> Self {
        SchemeState {
            values: initial.values().to_vec(),
            time: 0.0,
            epsilon,
            steps: 0,
            max_seen: initial.sup_norm(),
        }
    }
}

/// Discrete operator of the viscous problem on one grid.
#[derive(Debug, Clone)]
pub struct ViscousScheme {
    grid: Arc<Grid>,
    flux: FluxSpec,
    eo: EngquistOsher,
    viscosity: ViscositySpec,
    epsilon: f64,
    integrator: Integrator,
}

impl ViscousScheme {
    pub fn new(
        grid: Arc<Grid>,
        flux: &FluxSpec,
        viscosity: ViscositySpec,
        epsilon: f64,
        integrator: Integrator,
        quadrature_tol: f64,
    ) -> Self {
        ViscousScheme {
            grid,
            flux: flux.clone(),
            eo: EngquistOsher::new(flux, quadrature_tol),
            viscosity,
            epsilon,
            integrator,
        }
    }

    pub fn engquist_osher(&self) -> &EngquistOsher {
        &self.eo
    }

    fn face(&self, axis: usize, h: f64, a: f64, b: f64) -> f64 {
        self.eo.flux_unchecked(axis, a, b)
            - diffusive_face_flux(a, b, &self.viscosity, self.epsilon, h)
    }

    /// Semi-discrete right-hand side `−Σ_j (F_{j,+} − F_{j,−}) / h_j`.
    pub fn rhs(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for axis in 0..self.grid.dim() {
            let stride = self.grid.stride(axis);
            let n = self.grid.cells()[axis];
            let h = self.grid.spacing(axis);
            let inv_h = 1.0 / h;
            for idx in 0..u.len() {
                let i = (idx / stride) % n;
                let c = u[idx];
                if i == 0 {
                    out[idx] += self.face(axis, h, 0.0, c) * inv_h;
                }
                let right = if i + 1 < n { u[idx + stride] } else { 0.0 };
                let f = self.face(axis, h, c, right) * inv_h;
                out[idx] -= f;
                if i + 1 < n {
                    out[idx + stride] += f;
                }
            }
        }
    }

    /// Net inflow through `∂Ω` per unit time, `Σ` over boundary faces of the
    /// total face flux times face area.
    pub fn boundary_inflow(&self, u: &[f64]) -> f64 {
        let mut total = 0.0;
        for axis in 0..self.grid.dim() {
            let stride = self.grid.stride(axis);
            let n = self.grid.cells()[axis];
            let h = self.grid.spacing(axis);
            let area = self.grid.cell_volume() / h;
            for (idx, &c) in u.iter().enumerate() {
                let i = (idx / stride) % n;
                if i == 0 {
                    total += self.face(axis, h, 0.0, c) * area;
                }
                if i + 1 == n {
                    total -= self.face(axis, h, c, 0.0) * area;
                }
            }
        }
        total
    }

    /// Advances `state` by `dt`, enforcing the maximum principle against
    /// `bound`.
    pub fn step(&self, state: &mut SchemeState, dt: f64, bound: f64) -> Result<()> {
        let len = state.values.len();
        let mut k = vec![0.0; len];
        self.rhs(&state.values, &mut k);
        match self.integrator {
            Integrator::Euler => {
                for (u, d) in state.values.iter_mut().zip(&k) {
                    *u += dt * d;
                }
            }
            Integrator::Heun => {
                let stage: Vec<f64> = state
                    .values
                    .iter()
                    .zip(&k)
                    .map(|(u, d)| u + dt * d)
                    .collect();
                self.rhs(&stage, &mut k);
                for ((u, s), d) in state.values.iter_mut().zip(&stage).zip(&k) {
                    *u = 0.5 * (*u + s + dt * d);
                }
            }
        }
        state.time += dt;
        state.steps += 1;
        let max = sup_abs(&state.values);
        state.max_seen = state.max_seen.max(max);
        if !(max <= bound + MAX_PRINCIPLE_SLACK) {
            return Err(LabError::MaximumPrinciple { max, bound });
        }
        Ok(())
    }

    /// Integrates from `initial` and records the state at each of `times`.
    pub fn integrate(
        &self,
        initial: Field,
        times: &[f64],
        cfl: f64,
    ) -> Result<(FieldTrajectory, SolveStats)> {
        let bound = initial.sup_norm();
        let dt = stable_dt(&self.grid, &self.flux, &self.viscosity, self.epsilon, cfl);
        let mut state = SchemeState::new(&initial, self.epsilon);
        let snapshots = march(&mut state, times, dt, |s, tau| self.step(s, tau, bound))?;
        let stats = SolveStats {
            steps: state.steps,
            dt,
            max_seen: state.max_seen,
            bound,
        };
        let traj =
            FieldTrajectory::new(self.grid.clone(), self.epsilon, times.to_vec(), snapshots)?;
        Ok((traj, stats))
    }
}

/// Steps `state` through the snapshot times with steps of at most `dt`,
/// shortening the last step before each snapshot so it lands exactly.
pub(crate) fn march(
    state: &mut SchemeState,
    times: &[f64],
    dt: f64,
    mut advance: impl FnMut(&mut SchemeState, f64) -> Result<()>,
) -> Result<Vec<Vec<f64>>> {
    let mut snapshots = vec![state.values.clone()];
    for &target in &times[1..] {
        loop {
            let remaining = target - state.time;
            let lands = dt >= remaining * (1.0 - 1e-12);
            let tau = if lands { remaining } else { dt };
            let (step, time) = (state.steps, state.time);
            advance(state, tau).map_err(|e| LabError::Step {
                step,
                time,
                source: Box::new(e),
            })?;
            if lands {
                state.time = target;
                break;
            }
        }
        snapshots.push(state.values.clone());
    }
    Ok(snapshots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::{FluxComponent, ViscosityModel};

    fn burgers(bound: f64) -> FluxSpec {
        FluxSpec::new(vec![FluxComponent::Burgers], Interval::symmetric(bound)).unwrap()
    }

    fn constant_b(b: f64) -> ViscositySpec {
        ViscositySpec::new(ViscosityModel::Constant { b }).unwrap()
    }

    #[test]
    fn stable_dt_examples() {
        let grid = Grid::unit_1d(100, 1.0).unwrap();
        let flux = burgers(1.0);
        let v = constant_b(1.0);
        assert!((stable_dt(&grid, &flux, &v, 0.01, 0.4) - 0.002).abs() < 1e-15);
        assert!((stable_dt(&grid, &flux, &v, 0.0, 0.4) - 0.004).abs() < 1e-15);
        let still = FluxSpec::new(
            vec![FluxComponent::Linear { speed: 0.0 }],
            Interval::symmetric(1.0),
        )
        .unwrap();
        assert!((stable_dt(&grid, &still, &v, 0.01, 0.4) - 0.4 * 1e-4 / 0.02).abs() < 1e-15);
    }

    #[test]
    fn engquist_osher_examples() {
        let eo = EngquistOsher::new(&burgers(1.0), 1e-10);
        assert!((convective_face_flux(1.0, 0.0, &eo, 0).unwrap() - 0.5).abs() < 1e-10);
        assert!(convective_face_flux(-1.0, 1.0, &eo, 0).unwrap().abs() < 1e-10);
        for c in [-0.7, 0.0, 0.3, 1.0] {
            assert!((convective_face_flux(c, c, &eo, 0).unwrap() - 0.5 * c * c).abs() < 1e-10);
        }
        assert!(convective_face_flux(1.5, 0.0, &eo, 0).is_err());
        assert!(convective_face_flux(0.0, 0.0, &eo, 1).is_err());
    }

    #[test]
    fn diffusive_flux_examples() {
        let one = constant_b(1.0);
        assert_eq!(diffusive_face_flux(0.3, 0.3, &one, 0.1, 0.1), 0.0);
        assert!((diffusive_face_flux(0.0, 0.2, &one, 0.1, 0.1) - 0.2).abs() < 1e-15);
        let quad = ViscositySpec::new(ViscosityModel::Quadratic { cap: 2.0 }).unwrap();
        assert!((diffusive_face_flux(0.0, 1.0, &quad, 1.0, 1.0) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let grid = Arc::new(Grid::unit_1d(50, 1.0).unwrap());
        let scheme = ViscousScheme::new(
            grid.clone(),
            &burgers(1.0),
            constant_b(1.0),
            0.1,
            Integrator::Euler,
            1e-8,
        );
        let mut s = SchemeState::new(&Field::zeros(grid), 0.1);
        scheme.step(&mut s, 1e-4, 0.0).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mass_change_equals_boundary_flux() {
        let grid = Arc::new(Grid::unit_1d(200, 1.0).unwrap());
        let u0 = Field::from_fn(grid.clone(), |x| {
            let z = (x[0] - 0.5) / 0.3;
            if z.abs() < 1.0 {
                (1.0 - z * z).powi(3)
            } else {
                0.0
            }
        });
        let scheme = ViscousScheme::new(
            grid.clone(),
            &burgers(1.0),
            constant_b(1.0),
            0.05,
            Integrator::Euler,
            1e-8,
        );
        let mut s = SchemeState::new(&u0, 0.05);
        let dt = 1e-4;
        let inflow = scheme.boundary_inflow(&s.values);
        scheme.step(&mut s, dt, 1.0).unwrap();
        let change =
            (s.values.iter().sum::<f64>() - u0.values().iter().sum::<f64>()) * grid.cell_volume();
        assert!((change - dt * inflow).abs() < 1e-14);
    }

    #[test]
    fn maximum_principle_violation_is_reported() {
        let grid = Arc::new(Grid::unit_1d(20, 1.0).unwrap());
        let u0 = Field::from_fn(grid.clone(), |x| {
            if (x[0] - 0.5).abs() < 0.2 {
                1.0
            } else {
                0.0
            }
        });
        let scheme = ViscousScheme::new(
            grid.clone(),
            &burgers(1.0),
            constant_b(1.0),
            1.0,
            Integrator::Euler,
            1e-8,
        );
        // far beyond the diffusive limit the explicit update overshoots
        let err = scheme.integrate(u0, &[0.0, 0.5], 50.0).unwrap_err();
        match err {
            LabError::Step { source, .. } => {
                assert!(matches!(*source, LabError::MaximumPrinciple { .. }))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn snapshots_land_on_requested_times() {
        let grid = Arc::new(Grid::unit_1d(40, 0.3).unwrap());
        let u0 = Field::from_fn(grid.clone(), |x| (std::f64::consts::PI * x[0]).sin());
        let scheme = ViscousScheme::new(
            grid,
            &burgers(1.0),
            constant_b(1.0),
            0.01,
            Integrator::Heun,
            1e-8,
        );
        let times = snapshot_times(0.3, 7);
        let (traj, stats) = scheme.integrate(u0, &times, 0.4).unwrap();
        assert_eq!(traj.times(), &times[..]);
        assert!(stats.max_seen <= 1.0 + 1e-10);
    }
}
