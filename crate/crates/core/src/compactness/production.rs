//! Entropy production `∂_t η(u) + ∇·q(u)` and its split into the parts
//! `A = ε∇·(B ∇η(u))` and `M = −ε B η''(u) |∇u|²`.

use crate::entropy::EntropyPair;
use crate::error::{LabError, Result};
use crate::flux::{ViscositySpec, RANGE_SLACK};
use crate::grid::FieldTrajectory;
use crate::norms::{h_minus_one_norm, lp_norm, measure_norm, Norm, SpaceTimeField, TimeLattice};

#[derive(Debug, Clone)]
pub struct EntropyProductionSplit {
    pub epsilon: f64,
    pub a: SpaceTimeField,
    pub m: SpaceTimeField,
    pub h1_norm_a: f64,
    pub measure_norm_m: f64,
}

fn check_range(traj: &FieldTrajectory, pair: &EntropyPair) -> Result<()> {
    let i = pair.interval();
    let max = traj.max_abs();
    i.check(max, RANGE_SLACK)?;
    i.check(-max, RANGE_SLACK)
}

/// Discrete `∂_t η(u) + Σ_j ∂_j q_j(u)` on the snapshot nodes: centered
/// differences (one-sided at `t = 0, T`), zero Dirichlet ghosts in space.
pub fn entropy_production_total(
    traj: &FieldTrajectory,
    pair: &EntropyPair,
) -> Result<SpaceTimeField> {
    let s = traj.len();
    if s < 3 {
        return Err(LabError::TooFewSnapshots { need: 3, got: s });
    }
    check_range(traj, pair)?;
    let dt = traj.snapshot_spacing()?;
    let grid = traj.grid().clone();
    let m = grid.len();
    let eta: Vec<Vec<f64>> = traj
        .snapshots()
        .iter()
        .map(|u| u.iter().map(|&v| pair.eta(v)).collect())
        .collect();
    let mut out = vec![0.0; s * m];
    for n in 0..s {
        let row = &mut out[n * m..(n + 1) * m];
        let (lo, hi, span) = if n == 0 {
            (0, 1, dt)
        } else if n + 1 == s {
            (s - 2, s - 1, dt)
        } else {
            (n - 1, n + 1, 2.0 * dt)
        };
        for (i, r) in row.iter_mut().enumerate() {
            *r = (eta[hi][i] - eta[lo][i]) / span;
        }
        let u = traj.snapshot(n);
        for axis in 0..grid.dim() {
            let table = pair.q_table(axis);
            let q: Vec<f64> = u.iter().map(|&v| table.eval(v)).collect();
            let q0 = table.eval(0.0);
            let stride = grid.stride(axis);
            let cells = grid.cells()[axis];
            let h = grid.spacing(axis);
            for (idx, r) in row.iter_mut().enumerate() {
                let i = (idx / stride) % cells;
                let left = if i > 0 { q[idx - stride] } else { q0 };
                let right = if i + 1 < cells { q[idx + stride] } else { q0 };
                *r += (right - left) / (2.0 * h);
            }
        }
    }
    SpaceTimeField::new(grid, dt, TimeLattice::Nodes, out)
}

/// `A` from face differences of `η(u)` weighted by `B` at face means, `M`
/// from squared centered gradients; both on the snapshot nodes.
pub fn decompose_production(
    traj: &FieldTrajectory,
    pair: &EntropyPair,
    visc: &ViscositySpec,
    epsilon: f64,
) -> Result<EntropyProductionSplit> {
    let (a, m) = production_parts(traj, pair, visc, epsilon)?;
    let h1_norm_a = h_minus_one_norm(&a)?;
    let measure_norm_m = measure_norm(&m);
    Ok(EntropyProductionSplit {
        epsilon,
        a,
        m,
        h1_norm_a,
        measure_norm_m,
    })
}

/// The fields `A` and `M` without their norms.
pub fn production_parts(
    traj: &FieldTrajectory,
    pair: &EntropyPair,
    visc: &ViscositySpec,
    epsilon: f64,
) -> Result<(SpaceTimeField, SpaceTimeField)> {
    check_range(traj, pair)?;
    let dt = traj.snapshot_spacing()?;
    let grid = traj.grid().clone();
    let cells = grid.len();
    let s = traj.len();
    let eta0 = pair.eta(0.0);
    let mut a = vec![0.0; s * cells];
    let mut m = vec![0.0; s * cells];
    for n in 0..s {
        let u = traj.snapshot(n);
        let eta: Vec<f64> = u.iter().map(|&v| pair.eta(v)).collect();
        for axis in 0..grid.dim() {
            let stride = grid.stride(axis);
            let len = grid.cells()[axis];
            let h = grid.spacing(axis);
            for idx in 0..cells {
                let i = (idx / stride) % len;
                let (ul, el) = if i > 0 {
                    (u[idx - stride], eta[idx - stride])
                } else {
                    (0.0, eta0)
                };
                let (ur, er) = if i + 1 < len {
                    (u[idx + stride], eta[idx + stride])
                } else {
                    (0.0, eta0)
                };
                let c = u[idx];
                let flux_r = visc.value(0.5 * (c + ur)) * (er - eta[idx]);
                let flux_l = visc.value(0.5 * (ul + c)) * (eta[idx] - el);
                a[n * cells + idx] += epsilon * (flux_r - flux_l) / (h * h);
                let grad = (ur - ul) / (2.0 * h);
                m[n * cells + idx] -= epsilon * visc.value(c) * pair.eta_second(c) * grad * grad;
            }
        }
    }
    Ok((
        SpaceTimeField::new(grid.clone(), dt, TimeLattice::Nodes, a)?,
        SpaceTimeField::new(grid, dt, TimeLattice::Nodes, m)?,
    ))
}

/// `‖∂_t u‖_{L¹(Ω_T)}` from forward differences between snapshots.
pub fn time_derivative_l1(traj: &FieldTrajectory) -> Result<f64> {
    if traj.len() < 2 {
        return Err(LabError::TooFewSnapshots {
            need: 2,
            got: traj.len(),
        });
    }
    let dt = traj.snapshot_spacing()?;
    let grid = traj.grid().clone();
    let mut values = Vec::with_capacity((traj.len() - 1) * grid.len());
    for w in traj.snapshots().windows(2) {
        values.extend(w[1].iter().zip(&w[0]).map(|(b, a)| (b - a) / dt));
    }
    let field = SpaceTimeField::new(grid, dt, TimeLattice::Cells, values)?;
    Ok(lp_norm(&field, Norm::L1))
}
