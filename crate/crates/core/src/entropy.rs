//! Convex entropies `η` and their entropy fluxes `q_j`, where
//! `q_j(u) = ∫₀^u η'(s) f_j'(s) ds` is tabulated by adaptive quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::flux::{FluxSpec, RANGE_SLACK};
use crate::grid::Interval;
use crate::quadrature::{AntiderivativeTable, TABLE_NODES};

/// Default smoothing width of the Kruzkov entropies.
pub const DEFAULT_KRUZKOV_SMOOTHING: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "lowercase")]
pub enum EntropyPreset {
    /// `u²/2`
    Quadratic,
    /// `u`
    Identity,
    /// `√((u−k)² + δ²) − δ`, a C² stand-in for `|u − k|`.
    Kruzkov { k: f64, smoothing: f64 },
    /// `Σ c_n uⁿ`
    Polynomial { coefficients: Vec<f64> },
}

impl EntropyPreset {
    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        match self {
            EntropyPreset::Quadratic => 0.5 * u * u,
            EntropyPreset::Identity => u,
            EntropyPreset::Kruzkov { k, smoothing } => {
                let d = u - k;
                (d * d + smoothing * smoothing).sqrt() - smoothing
            }
            EntropyPreset::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * u + c)
            }
        }
    }

    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        match self {
            EntropyPreset::Quadratic => u,
            EntropyPreset::Identity => 1.0,
            EntropyPreset::Kruzkov { k, smoothing } => {
                let d = u - k;
                d / (d * d + smoothing * smoothing).sqrt()
            }
            EntropyPreset::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (n, c)| acc * u + n as f64 * c),
        }
    }

    #[inline]
    pub fn second_derivative(&self, u: f64) -> f64 {
        match self {
            EntropyPreset::Quadratic => 1.0,
            EntropyPreset::Identity => 0.0,
            EntropyPreset::Kruzkov { k, smoothing } => {
                let d = u - k;
                let s2 = smoothing * smoothing;
                s2 / (d * d + s2).powf(1.5)
            }
            EntropyPreset::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(2)
                .rev()
                .fold(0.0, |acc, (n, c)| acc * u + (n * (n - 1)) as f64 * c),
        }
    }

    /// Stable identifier used in reports.
    pub fn id(&self) -> String {
        match self {
            EntropyPreset::Quadratic => "quadratic".into(),
            EntropyPreset::Identity => "identity".into(),
            EntropyPreset::Kruzkov { k, .. } => format!("kruzkov_k={k:.4}"),
            EntropyPreset::Polynomial { coefficients } => {
                let c: Vec<String> = coefficients.iter().map(|c| c.to_string()).collect();
                format!("poly[{}]", c.join(";"))
            }
        }
    }

    /// `sup_{y∈I} |η''(y)|`, sampled on the table nodes plus the Kruzkov peak.
    pub fn second_derivative_sup(&self, interval: Interval) -> f64 {
        let mut sup = interval
            .sample(TABLE_NODES)
            .map(|y| self.second_derivative(y).abs())
            .fold(0.0, f64::max);
        if let EntropyPreset::Kruzkov { k, .. } = self {
            let peak = k.clamp(interval.lo, interval.hi);
            sup = sup.max(self.second_derivative(peak).abs());
        }
        sup
    }

    /// `sup_{y∈I} |η'(y)|`.
    pub fn derivative_sup(&self, interval: Interval) -> f64 {
        interval
            .sample(TABLE_NODES)
            .map(|y| self.derivative(y).abs())
            .fold(0.0, f64::max)
    }
}

/// `count` smoothed Kruzkov entropies with `k` uniformly spaced over `I`,
/// endpoints included.
pub fn kruzkov_family(interval: Interval, count: usize, smoothing: f64) -> Vec<EntropyPreset> {
    if count == 1 {
        return vec![EntropyPreset::Kruzkov {
            k: 0.5 * (interval.lo + interval.hi),
            smoothing,
        }];
    }
    (0..count)
        .map(|m| EntropyPreset::Kruzkov {
            k: interval.lo + interval.width() * m as f64 / (count - 1) as f64,
            smoothing,
        })
        .collect()
}

/// `(η, q)` with one entropy-flux table per spatial axis.
#[derive(Debug, Clone)]
pub struct EntropyPair {
    preset: EntropyPreset,
    fluxes: Vec<AntiderivativeTable>,
    flux_derivatives: Vec<crate::flux::FluxComponent>,
    interval: Interval,
    quadrature_tol: f64,
}

impl EntropyPair {
    pub fn preset(&self) -> &EntropyPreset {
        &self.preset
    }

    pub fn id(&self) -> String {
        self.preset.id()
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn quadrature_tol(&self) -> f64 {
        self.quadrature_tol
    }

    pub fn dim(&self) -> usize {
        self.fluxes.len()
    }

    #[inline]
    pub fn eta(&self, u: f64) -> f64 {
        self.preset.value(u)
    }

    #[inline]
    pub fn eta_prime(&self, u: f64) -> f64 {
        self.preset.derivative(u)
    }

    #[inline]
    pub fn eta_second(&self, u: f64) -> f64 {
        self.preset.second_derivative(u)
    }

    /// Entropy flux `q_axis(u)`; `u` must lie in `I`.
    pub fn q(&self, axis: usize, u: f64) -> Result<f64> {
        self.interval.check(u, RANGE_SLACK)?;
        Ok(self.fluxes[axis].eval(u))
    }

    pub fn q_table(&self, axis: usize) -> &AntiderivativeTable {
        &self.fluxes[axis]
    }

    /// Largest `|q_j'(y) − η'(y) f_j'(y)|` over interior table nodes, with
    /// `q_j'` taken from centered differences of the table.
    pub fn consistency_defect(&self, axis: usize) -> f64 {
        let c = self.flux_derivatives[axis];
        self.fluxes[axis].max_centered_defect(|y| self.preset.derivative(y) * c.derivative(y))
    }

    /// How far the worst table node exceeds its admissible defect (the
    /// quadrature tolerance plus the local truncation error of centered
    /// differences). Non-positive means the table passes.
    pub fn consistency_excess(&self, axis: usize) -> f64 {
        let c = self.flux_derivatives[axis];
        self.fluxes[axis].max_centered_excess(
            |y| self.preset.derivative(y) * c.derivative(y),
            self.quadrature_tol,
        )
    }
}

/// Builds `(η, q)` for a convex entropy preset. Non-convex presets
/// (`η'' < −tol` somewhere on `I`) are rejected.
pub fn make_entropy_pair(preset: EntropyPreset, flux: &FluxSpec, tol: f64) -> Result<EntropyPair> {
    if !(tol > 0.0) {
        return Err(LabError::config(
            "scheme.quadrature_tol",
            "must be positive",
        ));
    }
    if let EntropyPreset::Kruzkov { smoothing, .. } = preset {
        if !(smoothing > 0.0) {
            return Err(LabError::config(
                "scheme.kruzkov_smoothing",
                "must be positive",
            ));
        }
    }
    let interval = flux.interval();
    if interval
        .sample(TABLE_NODES)
        .any(|y| preset.second_derivative(y) < -tol)
    {
        return Err(LabError::NonConvexEntropy(preset.id()));
    }
    let fluxes = flux
        .components()
        .iter()
        .map(|c| {
            let p = preset.clone();
            let c = *c;
            AntiderivativeTable::build(move |s| p.derivative(s) * c.derivative(s), interval, tol)
        })
        .collect();
    Ok(EntropyPair {
        preset,
        fluxes,
        flux_derivatives: flux.components().to_vec(),
        interval,
        quadrature_tol: tol,
    })
}
