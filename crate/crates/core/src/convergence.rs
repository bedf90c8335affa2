//! Distances between trajectories and log-log rate fits along the ladder.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::FieldTrajectory;
use crate::norms::{lp_norm, Norm, SpaceTimeField, TimeLattice};

/// `‖a − b‖_{L¹(Ω_T)}` with trapezoid weights in time.
pub fn l1_distance(a: &FieldTrajectory, b: &FieldTrajectory) -> Result<f64> {
    a.check_same_lattice(b)?;
    let values: Vec<f64> = a
        .snapshots()
        .iter()
        .zip(b.snapshots())
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q))
        .collect();
    let dt = if a.len() > 1 {
        a.snapshot_spacing()?
    } else {
        1.0
    };
    let field = SpaceTimeField::new(a.grid().clone(), dt, TimeLattice::Nodes, values)?;
    Ok(lp_norm(&field, Norm::L1))
}

/// Result of a least-squares fit of `ln(error)` against `ln(ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateFit {
    Fitted {
        rate: f64,
        residual: f64,
    },
    /// Some error was `≤ 0`; no fit is attempted.
    ExactConvergence,
}

impl RateFit {
    pub fn rate(&self) -> Option<f64> {
        match self {
            RateFit::Fitted { rate, .. } => Some(*rate),
            RateFit::ExactConvergence => None,
        }
    }

    pub fn residual(&self) -> Option<f64> {
        match self {
            RateFit::Fitted { residual, .. } => Some(*residual),
            RateFit::ExactConvergence => None,
        }
    }
}

/// Slope and max absolute residual of the fit through `(ε, error)` pairs.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(LabError::TooFewPoints(points.len()));
    }
    if points.iter().any(|&(_, e)| !(e > 0.0)) {
        return Ok(RateFit::ExactConvergence);
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let rate = sxy / sxx;
    let intercept = my - rate * mx;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - rate * x).abs())
        .fold(0.0, f64::max);
    Ok(RateFit::Fitted { rate, residual })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub epsilons: Vec<f64>,
    /// `‖u^ε − u‖_{L¹(Ω_T)}` against the reference.
    pub errors: Vec<f64>,
    /// `‖u^{ε_k} − u^{ε_{k+1}}‖_{L¹(Ω_T)}`.
    pub cauchy: Vec<f64>,
    pub error_fit: Option<RateFit>,
    pub cauchy_fit: Option<RateFit>,
    pub errors_decreasing: bool,
}

impl ConvergenceReport {
    /// Ladder members must be ordered by decreasing `ε`.
    pub fn build(members: &[&FieldTrajectory], reference: &FieldTrajectory) -> Result<Self> {
        let epsilons: Vec<f64> = members.iter().map(|t| t.epsilon()).collect();
        let errors = members
            .iter()
            .map(|t| l1_distance(t, reference))
            .collect::<Result<Vec<_>>>()?;
        let cauchy = members
            .windows(2)
            .map(|w| l1_distance(w[0], w[1]))
            .collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(f64, f64)> = epsilons
            .iter()
            .copied()
            .zip(errors.iter().copied())
            .collect();
        let cauchy_pairs: Vec<(f64, f64)> = epsilons
            .iter()
            .copied()
            .zip(cauchy.iter().copied())
            .collect();
        Ok(ConvergenceReport {
            error_fit: fit_rate(&pairs).ok(),
            cauchy_fit: fit_rate(&cauchy_pairs).ok(),
            errors_decreasing: errors.windows(2).all(|w| w[1] < w[0]),
            epsilons,
            errors,
            cauchy,
        })
    }

    /// Human-readable block for the run log.
    pub fn summary(&self) -> String {
        let mut s = String::from("epsilon        L1 error      Cauchy\n");
        for (k, (e, err)) in self.epsilons.iter().zip(&self.errors).enumerate() {
            let c = self
                .cauchy
                .get(k)
                .map(|c| format!("{c:.6e}"))
                .unwrap_or_default();
            s.push_str(&format!("{e:<14} {err:.6e}  {c}\n"));
        }
        let fmt = |f: &Option<RateFit>| match f {
            Some(RateFit::Fitted { rate, residual }) => {
                format!("{rate:.4} (residual {residual:.3})")
            }
            Some(RateFit::ExactConvergence) => "exact".into(),
            None => "n/a".into(),
        };
        s.push_str(&format!("reference rate {}\n", fmt(&self.error_fit)));
        s.push_str(&format!("Cauchy rate    {}\n", fmt(&self.cauchy_fit)));
        s
    }
}
