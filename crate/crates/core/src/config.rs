//! Scenario configuration: a TOML file describing the domain, flux,
//! viscosity, initial data, viscosity ladder, and scheme knobs.
//!
//! Only `grid.cells`, `grid.time_horizon`, `flux.components`,
//! `initial_data.preset`, `initial_data.support_margin` and
//! `ladder.epsilons` are required; every other key has a default that is
//! written back into the resolved config recorded with each run.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::flux::{FluxComponent, ViscosityModel};
use crate::grid::{Grid, Interval};

pub const DEFAULT_CFL: f64 = 0.4;
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-8;
pub const DEFAULT_SNAPSHOTS: usize = 64;
pub const DEFAULT_WINDOW: usize = 8;
pub const DEFAULT_BINS: usize = 32;
pub const DEFAULT_KRUZKOV_COUNT: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    /// Forward Euler.
    #[default]
    Euler,
    /// Two-stage Heun (strong-stability-preserving RK2).
    Heun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub cells: Vec<usize>,
    #[serde(default)]
    pub extent: Vec<[f64; 2]>,
    pub time_horizon: f64,
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxConfig {
    pub components: Vec<FluxComponent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataPreset {
    /// `A (1 − |z|²)³` for `|z| < 1`, `z = (x − center)/width`.
    Bump,
    /// `A` on the box `|x − center|_∞ < width`.
    Box,
    /// Sum of two bumps.
    Twobump,
}

impl DataPreset {
    pub const NAMES: [&'static str; 3] = ["bump", "box", "twobump"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDataConfig {
    pub preset: DataPreset,
    #[serde(default)]
    pub center: Vec<f64>,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center2: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude2: Option<f64>,
    /// Distance from the support of `u₀` to the boundary.
    pub support_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    pub epsilons: Vec<f64>,
    /// Fixed mollifier width; when absent each member uses its own `ε`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mollifier_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_tol")]
    pub quadrature_tol: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default = "default_smoothing")]
    pub kruzkov_smoothing: f64,
    #[serde(default = "default_kruzkov_count")]
    pub kruzkov_count: usize,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            cfl: DEFAULT_CFL,
            quadrature_tol: DEFAULT_QUADRATURE_TOL,
            integrator: Integrator::Euler,
            kruzkov_smoothing: crate::entropy::DEFAULT_KRUZKOV_SMOOTHING,
            kruzkov_count: DEFAULT_KRUZKOV_COUNT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Window in cells per spatial axis, then snapshots.
    #[serde(default)]
    pub window: Vec<usize>,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Times at which `plotdata` writes profiles; defaults to `0, T/2, T`.
    #[serde(default)]
    pub profile_times: Vec<f64>,
}

/// Fully validated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub grid: GridConfig,
    pub flux: FluxConfig,
    #[serde(default = "default_viscosity")]
    pub viscosity: ViscosityModel,
    pub initial_data: InitialDataConfig,
    pub ladder: LadderConfig,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default = "default_diagnostics")]
    pub diagnostics: DiagnosticsConfig,
}

fn default_snapshots() -> usize {
    DEFAULT_SNAPSHOTS
}
fn default_width() -> f64 {
    0.25
}
fn default_amplitude() -> f64 {
    1.0
}
fn default_cfl() -> f64 {
    DEFAULT_CFL
}
fn default_tol() -> f64 {
    DEFAULT_QUADRATURE_TOL
}
fn default_smoothing() -> f64 {
    crate::entropy::DEFAULT_KRUZKOV_SMOOTHING
}
fn default_kruzkov_count() -> usize {
    DEFAULT_KRUZKOV_COUNT
}
fn default_bins() -> usize {
    DEFAULT_BINS
}
fn default_name() -> String {
    "scenario".into()
}
fn default_output() -> PathBuf {
    PathBuf::from("runs/scenario")
}
fn default_viscosity() -> ViscosityModel {
    ViscosityModel::Constant { b: 1.0 }
}
fn default_diagnostics() -> DiagnosticsConfig {
    DiagnosticsConfig {
        window: Vec::new(),
        bins: DEFAULT_BINS,
        profile_times: Vec::new(),
    }
}

impl ScenarioConfig {
    pub fn dim(&self) -> usize {
        self.grid.cells.len()
    }

    pub fn time_horizon(&self) -> f64 {
        self.grid.time_horizon
    }

    pub fn build_grid(&self) -> Result<Arc<Grid>> {
        let extent = self
            .grid
            .extent
            .iter()
            .map(|e| Interval { lo: e[0], hi: e[1] })
            .collect();
        Grid::new(self.grid.cells.clone(), extent, self.grid.time_horizon).map(Arc::new)
    }

    /// Mollifier width used for ladder member `epsilon`.
    pub fn mollifier_width(&self, epsilon: f64) -> f64 {
        self.ladder.mollifier_width.unwrap_or(epsilon)
    }

    pub fn largest_mollifier_width(&self) -> f64 {
        self.ladder
            .epsilons
            .iter()
            .map(|&e| self.mollifier_width(e))
            .fold(0.0, f64::max)
    }

    /// The resolved TOML text.
    pub fn render(&self) -> String {
        toml::to_string(self).expect("scenario config always serializes")
    }

    fn fill_defaults(&mut self) {
        let dim = self.grid.cells.len();
        if self.grid.extent.is_empty() {
            self.grid.extent = vec![[0.0, 1.0]; dim];
        }
        if self.initial_data.center.is_empty() {
            self.initial_data.center = self
                .grid
                .extent
                .iter()
                .map(|e| 0.5 * (e[0] + e[1]))
                .collect();
        }
        if self.initial_data.preset == DataPreset::Twobump {
            let d = &mut self.initial_data;
            if d.center2.is_none() {
                // mirror of the first center through the domain midpoint
                d.center2 = Some(
                    d.center
                        .iter()
                        .zip(&self.grid.extent)
                        .map(|(c, e)| e[0] + e[1] - c)
                        .collect(),
                );
            }
            d.width2.get_or_insert(d.width);
            d.amplitude2.get_or_insert(d.amplitude);
        }
        if self.diagnostics.window.is_empty() {
            self.diagnostics.window = vec![DEFAULT_WINDOW; dim + 1];
        }
        if self.diagnostics.profile_times.is_empty() {
            let t = self.grid.time_horizon;
            self.diagnostics.profile_times = vec![0.0, 0.5 * t, t];
        }
    }

    fn validate(&self) -> Result<()> {
        let dim = self.grid.cells.len();
        self.build_grid()?;
        if self.grid.snapshots < 3 {
            return Err(LabError::config(
                "grid.snapshots",
                "at least 3 snapshots are needed",
            ));
        }
        if self.flux.components.len() != dim {
            return Err(LabError::config(
                "flux.components",
                format!(
                    "need one component per axis ({dim}), got {}",
                    self.flux.components.len()
                ),
            ));
        }
        crate::flux::ViscositySpec::new(self.viscosity)?;

        let eps = &self.ladder.epsilons;
        if eps.is_empty() {
            return Err(LabError::config(
                "ladder.epsilons",
                "epsilon ladder must not be empty",
            ));
        }
        if eps.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(LabError::config(
                "ladder.epsilons",
                "epsilon ladder must be positive",
            ));
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(LabError::config(
                "ladder.epsilons",
                "epsilon ladder must be strictly decreasing",
            ));
        }
        if let Some(w) = self.ladder.mollifier_width {
            if !(w > 0.0) {
                return Err(LabError::config(
                    "ladder.mollifier_width",
                    "must be positive",
                ));
            }
        }

        let data = &self.initial_data;
        if data.center.len() != dim {
            return Err(LabError::config(
                "initial_data.center",
                "one coordinate per axis",
            ));
        }
        if let Some(c2) = &data.center2 {
            if c2.len() != dim {
                return Err(LabError::config(
                    "initial_data.center2",
                    "one coordinate per axis",
                ));
            }
        }
        if !(data.width > 0.0) || data.width2.is_some_and(|w| !(w > 0.0)) {
            return Err(LabError::config("initial_data.width", "must be positive"));
        }
        if !data.amplitude.is_finite() {
            return Err(LabError::config("initial_data.amplitude", "must be finite"));
        }
        if !(data.support_margin > 0.0) {
            return Err(LabError::config(
                "initial_data.support_margin",
                "must be positive",
            ));
        }
        let widest = self.largest_mollifier_width();
        if data.support_margin <= widest {
            let key = if self.ladder.mollifier_width.is_some() {
                "ladder.mollifier_width"
            } else {
                "ladder.epsilons"
            };
            return Err(LabError::config(
                "initial_data.support_margin",
                format!(
                    "support margin {} must exceed the largest mollifier width {} ({key})",
                    data.support_margin, widest
                ),
            ));
        }

        let s = &self.scheme;
        if !(s.cfl > 0.0 && s.cfl < 1.0) {
            return Err(LabError::config(
                "scheme.cfl",
                "CFL number must lie in (0, 1)",
            ));
        }
        if !(s.quadrature_tol > 0.0) {
            return Err(LabError::config(
                "scheme.quadrature_tol",
                "must be positive",
            ));
        }
        if !(s.kruzkov_smoothing > 0.0) {
            return Err(LabError::config(
                "scheme.kruzkov_smoothing",
                "must be positive",
            ));
        }
        if s.kruzkov_count == 0 {
            return Err(LabError::config("scheme.kruzkov_count", "must be positive"));
        }

        let d = &self.diagnostics;
        if d.window.len() != dim + 1 || d.window.contains(&0) {
            return Err(LabError::config(
                "diagnostics.window",
                format!(
                    "need {} positive entries (cells per axis, then snapshots)",
                    dim + 1
                ),
            ));
        }
        for (axis, (&w, &n)) in d.window.iter().zip(&self.grid.cells).enumerate() {
            if n % w != 0 {
                return Err(LabError::config(
                    "diagnostics.window",
                    format!("window {w} does not divide {n} cells on axis {axis}"),
                ));
            }
        }
        if !self.grid.snapshots.is_multiple_of(d.window[dim]) {
            return Err(LabError::config(
                "diagnostics.window",
                format!(
                    "window {} does not divide {} snapshots",
                    d.window[dim], self.grid.snapshots
                ),
            ));
        }
        if d.bins == 0 {
            return Err(LabError::config("diagnostics.bins", "must be positive"));
        }
        if d.profile_times
            .iter()
            .any(|t| !(*t >= 0.0 && *t <= self.grid.time_horizon))
        {
            return Err(LabError::config(
                "diagnostics.profile_times",
                "must lie in [0, T]",
            ));
        }
        Ok(())
    }
}

/// Parses, fills defaults and validates a scenario.
pub fn build_scenario(config_text: &str) -> Result<ScenarioConfig> {
    let mut config: ScenarioConfig = toml::from_str(config_text).map_err(|e| {
        LabError::config(
            e.span()
                .map(|s| describe_span(config_text, s))
                .unwrap_or_else(|| "<document>".into()),
            e.message().to_string(),
        )
    })?;
    config.fill_defaults();
    config.validate()?;
    Ok(config)
}

fn describe_span(text: &str, span: std::ops::Range<usize>) -> String {
    let line = text[..span.start.min(text.len())].lines().count().max(1);
    let snippet = text
        .get(span)
        .unwrap_or("")
        .lines()
        .next()
        .unwrap_or("")
        .trim();
    format!("line {line}: {snippet}")
}
