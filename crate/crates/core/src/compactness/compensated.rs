//! The 2-D quadratic `F₁₁F₂₂ − F₁₂²` and the function
//! `D(w) = (F₁₁(w)−F₁₁(c))(F₂₂(w)−F₂₂(c)) − (F₁₂(w)−F₁₂(c))²`.

use crate::compactness::windows::WindowLattice;
use crate::error::{LabError, Result};
use crate::flux::FluxSpec;
use crate::grid::{FieldTrajectory, Interval};
use crate::norms::{SpaceTimeField, TimeLattice};
use crate::quadrature::AntiderivativeTable;

/// Tolerance of the bisection in [`choose_c`].
pub const INVERSE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct CompensatedQuad {
    pub f11: AntiderivativeTable,
    pub f12: AntiderivativeTable,
    pub f22: AntiderivativeTable,
}

impl CompensatedQuad {
    /// Tables of `∫₀^λ (f₁')²`, `∫₀^λ f₁'f₂'`, `∫₀^λ (f₂')²` on `I`.
    pub fn new(flux: &FluxSpec, tol: f64) -> Result<Self> {
        if flux.dim() != 2 {
            return Err(LabError::Unsupported(format!(
                "the compensated quadratic needs two flux components, got {}",
                flux.dim()
            )));
        }
        let (a, b) = (*flux.component(0), *flux.component(1));
        let i = flux.interval();
        Ok(CompensatedQuad {
            f11: AntiderivativeTable::build(move |s| a.derivative(s).powi(2), i, tol),
            f12: AntiderivativeTable::build(move |s| a.derivative(s) * b.derivative(s), i, tol),
            f22: AntiderivativeTable::build(move |s| b.derivative(s).powi(2), i, tol),
        })
    }

    pub fn interval(&self) -> Interval {
        self.f11.interval()
    }

    #[inline]
    pub fn d(&self, w: f64, c: f64) -> f64 {
        let a = self.f11.eval(w) - self.f11.eval(c);
        let b = self.f22.eval(w) - self.f22.eval(c);
        let x = self.f12.eval(w) - self.f12.eval(c);
        a * b - x * x
    }
}

/// Window averages of `F₁₁(u)`, spread back over each window's points.
pub fn weak_limit_f11(
    traj: &FieldTrajectory,
    quad: &CompensatedQuad,
    window: &[usize],
) -> Result<SpaceTimeField> {
    let lattice = WindowLattice::new(traj.grid(), traj.len(), window)?;
    let avg = lattice.averages(|n, i| quad.f11.eval(traj.snapshot(n)[i]));
    let m = traj.grid().len();
    let mut values = Vec::with_capacity(traj.len() * m);
    for n in 0..traj.len() {
        values.extend((0..m).map(|i| avg[lattice.assign(n, i)]));
    }
    SpaceTimeField::new(
        traj.grid().clone(),
        traj.snapshot_spacing()?,
        TimeLattice::Nodes,
        values,
    )
}

/// `c = F₁₁⁻¹(F̄₁₁)` pointwise. Targets outside the range of `F₁₁` on `I`
/// are clamped to an endpoint and counted.
pub fn choose_c(f11_bar: &SpaceTimeField, quad: &CompensatedQuad) -> (SpaceTimeField, usize) {
    let mut clamped = 0;
    let mut out = f11_bar.clone();
    for v in out.values_mut() {
        let (c, hit) = quad.f11.inverse(*v, INVERSE_TOL);
        if hit {
            clamped += 1;
        }
        *v = c;
    }
    if clamped > 0 {
        log::warn!("choose_c clamped {clamped} targets to the ends of I");
    }
    (out, clamped)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompensatedSummary {
    /// Space-time average of `D(u)` (trapezoid in time).
    pub mean: f64,
    /// Smallest pointwise value.
    pub min: f64,
}

/// Average and minimum of `D(u^ε(x,t))` against a fixed `c` field.
pub fn compensated_d(
    traj: &FieldTrajectory,
    quad: &CompensatedQuad,
    c: &SpaceTimeField,
) -> Result<CompensatedSummary> {
    if traj.grid().dim() != 2 {
        return Err(LabError::Unsupported(format!(
            "compensated D needs d = 2, got d = {}",
            traj.grid().dim()
        )));
    }
    let u = SpaceTimeField::from_trajectory(traj)?;
    u.check_same_lattice(c)?;
    let m = traj.grid().len();
    let mut min = f64::INFINITY;
    let mut total = 0.0;
    let mut weight = 0.0;
    for n in 0..u.steps() {
        let w = u.time_weight(n);
        let mut row = 0.0;
        for i in 0..m {
            let d = quad.d(u.values()[n * m + i], c.values()[n * m + i]);
            min = min.min(d);
            row += d;
        }
        total += w * row;
        weight += w * m as f64;
    }
    Ok(CompensatedSummary {
        mean: total / weight,
        min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::FluxComponent;
    use crate::grid::{snapshot_times, Grid};
    use std::sync::Arc;

    fn quad() -> CompensatedQuad {
        let flux = FluxSpec::new(
            vec![FluxComponent::Burgers, FluxComponent::Linear { speed: 1.0 }],
            Interval::symmetric(1.0),
        )
        .unwrap();
        CompensatedQuad::new(&flux, 1e-12).unwrap()
    }

    #[test]
    fn d_of_burgers_linear_pair() {
        let q = quad();
        assert!((q.d(1.0, 0.0) - 1.0 / 12.0).abs() < 1e-12);
        assert_eq!(q.d(0.4, 0.4), 0.0);
    }

    #[test]
    fn d_is_nonnegative_on_a_sample_grid() {
        let q = quad();
        for w in Interval::symmetric(1.0).sample(41) {
            for c in Interval::symmetric(1.0).sample(41) {
                assert!(q.d(w, c) >= -1e-12);
            }
        }
    }

    #[test]
    fn choose_c_inverts_f11() {
        let q = quad();
        let grid = Arc::new(Grid::unit_2d(2, 1.0).unwrap());
        let targets = SpaceTimeField::new(
            grid,
            0.5,
            TimeLattice::Nodes,
            vec![
                1.0 / 3.0,
                0.0,
                0.01,
                0.02,
                0.05,
                0.1,
                0.2,
                0.3,
                5.0,
                -5.0,
                0.0,
                0.0,
            ],
        )
        .unwrap();
        let (c, clamped) = choose_c(&targets, &q);
        let v = c.values();
        assert!((v[0] - 1.0).abs() < 1e-9);
        assert!(v[1].abs() < 1e-3);
        assert!(v[2..8].windows(2).all(|p| p[1] > p[0]));
        assert_eq!(clamped, 2);
    }

    #[test]
    fn constant_state_gives_zero_d() {
        let q = quad();
        let grid = Arc::new(Grid::unit_2d(4, 1.0).unwrap());
        let times = snapshot_times(1.0, 4);
        let traj = FieldTrajectory::new(grid, 0.1, times, vec![vec![0.6; 16]; 4]).unwrap();
        let bar = weak_limit_f11(&traj, &q, &[2, 2, 2]).unwrap();
        let (c, _) = choose_c(&bar, &q);
        let s = compensated_d(&traj, &q, &c).unwrap();
        assert!(s.mean.abs() < 1e-12);
        assert!(s.min >= -1e-12);
    }

    #[test]
    fn one_dimensional_input_is_rejected() {
        let flux = FluxSpec::new(vec![FluxComponent::Burgers], Interval::symmetric(1.0)).unwrap();
        assert!(CompensatedQuad::new(&flux, 1e-8).is_err());
    }
}
