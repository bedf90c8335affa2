//! Flux components `f_j` and viscosity coefficients `B`, both with the
//! derivatives the schemes need supplied in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::Interval;
use crate::quadrature::TABLE_NODES;

/// Tolerance for arguments slightly outside the invariant interval.
pub const RANGE_SLACK: f64 = 1e-8;

/// One flux component `f_j : ℝ → ℝ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "lowercase")]
pub enum FluxComponent {
    /// `u²/2`
    Burgers,
    /// `a·u`
    Linear { speed: f64 },
    /// `∫₀^u arctan(s) ds = u·arctan(u) − ln(1+u²)/2`
    Arctan,
    /// `u³/3`, non-convex on intervals containing 0.
    Cubic,
}

impl FluxComponent {
    pub const NAMES: [&'static str; 4] = ["burgers", "linear", "arctan", "cubic"];

    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        match *self {
            FluxComponent::Burgers => 0.5 * u * u,
            FluxComponent::Linear { speed } => speed * u,
            FluxComponent::Arctan => u * u.atan() - 0.5 * u.mul_add(u, 1.0).ln(),
            FluxComponent::Cubic => u * u * u / 3.0,
        }
    }

    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        match *self {
            FluxComponent::Burgers => u,
            FluxComponent::Linear { speed } => speed,
            FluxComponent::Arctan => u.atan(),
            FluxComponent::Cubic => u * u,
        }
    }

    #[inline]
    pub fn second_derivative(&self, u: f64) -> f64 {
        match *self {
            FluxComponent::Burgers => 1.0,
            FluxComponent::Linear { .. } => 0.0,
            FluxComponent::Arctan => 1.0 / u.mul_add(u, 1.0),
            FluxComponent::Cubic => 2.0 * u,
        }
    }

    /// Whether `f'' ≥ 0` on the whole interval.
    pub fn is_convex_on(&self, interval: Interval) -> bool {
        interval
            .sample(TABLE_NODES)
            .all(|y| self.second_derivative(y) >= 0.0)
    }

    pub fn name(&self) -> &'static str {
        match self {
            FluxComponent::Burgers => "burgers",
            FluxComponent::Linear { .. } => "linear",
            FluxComponent::Arctan => "arctan",
            FluxComponent::Cubic => "cubic",
        }
    }
}

/// The flux vector `f = (f_1, …, f_d)` restricted to the invariant interval
/// `I = [−‖u₀‖_∞, ‖u₀‖_∞]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxSpec {
    components: Vec<FluxComponent>,
    interval: Interval,
    lipschitz_bound: f64,
    critical_points: Vec<Vec<f64>>,
}

impl FluxSpec {
    pub fn new(components: Vec<FluxComponent>, interval: Interval) -> Result<Self> {
        if components.is_empty() {
            return Err(LabError::config(
                "flux.components",
                "at least one component",
            ));
        }
        let mut lipschitz_bound = 0.0_f64;
        for c in &components {
            for y in interval.sample(TABLE_NODES + 1) {
                let (f, df, d2f) = (c.value(y), c.derivative(y), c.second_derivative(y));
                if !(f.is_finite() && df.is_finite() && d2f.is_finite()) {
                    return Err(LabError::config(
                        "flux.components",
                        format!("{} is not finite at {y}", c.name()),
                    ));
                }
                lipschitz_bound = lipschitz_bound.max(df.abs());
            }
        }
        let critical_points = components
            .iter()
            .map(|c| derivative_sign_changes(c, interval))
            .collect();
        Ok(FluxSpec {
            components,
            interval,
            lipschitz_bound,
            critical_points,
        })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[FluxComponent] {
        &self.components
    }

    pub fn component(&self, axis: usize) -> &FluxComponent {
        &self.components[axis]
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    /// `sup_{y∈I} max_j |f_j'(y)|`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz_bound
    }

    /// Interior extrema of `f_axis` on `I` (sign changes of `f'`).
    pub fn critical_points(&self, axis: usize) -> &[f64] {
        &self.critical_points[axis]
    }

    /// `(f_j(u), f_j'(u), f_j''(u))`; `u` is not clamped.
    pub fn eval(&self, axis: usize, u: f64) -> Result<(f64, f64, f64)> {
        let c = self.components.get(axis).ok_or(LabError::BadAxis {
            axis,
            dim: self.dim(),
        })?;
        self.interval.check(u, RANGE_SLACK)?;
        Ok((c.value(u), c.derivative(u), c.second_derivative(u)))
    }
}

/// Free-function form of [`FluxSpec::eval`].
pub fn flux_eval(spec: &FluxSpec, axis: usize, u: f64) -> Result<(f64, f64, f64)> {
    spec.eval(axis, u)
}

/// Roots of `f'` where it changes sign, located on the table nodes of the
/// interval and refined by bisection.
fn derivative_sign_changes(c: &FluxComponent, interval: Interval) -> Vec<f64> {
    if interval.width() == 0.0 {
        return Vec::new();
    }
    let nodes: Vec<f64> = interval.sample(TABLE_NODES).collect();
    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &y in &nodes {
        let d = c.derivative(y);
        if d == 0.0 {
            continue;
        }
        if let Some((py, pd)) = prev {
            if pd.signum() != d.signum() {
                let (mut a, mut b) = (py, y);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    if c.derivative(m).signum() == pd.signum() {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                out.push(0.5 * (a + b));
            }
        }
        prev = Some((y, d));
    }
    out
}

/// Viscosity coefficient `B` in `ε ∇·(B(u) ∇u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "lowercase")]
pub enum ViscosityModel {
    /// `B ≡ b`
    Constant { b: f64 },
    /// `1 + u²`, frozen at `1 + cap²` for `|u| > cap`.
    Quadratic { cap: f64 },
    /// `r + exp(−u²)`
    Gaussian { r: f64 },
}

impl ViscosityModel {
    pub const NAMES: [&'static str; 3] = ["constant", "quadratic", "gaussian"];

    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        match *self {
            ViscosityModel::Constant { b } => b,
            ViscosityModel::Quadratic { cap } => 1.0 + (u * u).min(cap * cap),
            ViscosityModel::Gaussian { r } => r + (-u * u).exp(),
        }
    }

    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        match *self {
            ViscosityModel::Constant { .. } => 0.0,
            ViscosityModel::Quadratic { cap } => {
                if u.abs() < cap {
                    2.0 * u
                } else {
                    0.0
                }
            }
            ViscosityModel::Gaussian { .. } => -2.0 * u * (-u * u).exp(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ViscosityModel::Constant { .. } => "constant",
            ViscosityModel::Quadratic { .. } => "quadratic",
            ViscosityModel::Gaussian { .. } => "gaussian",
        }
    }

    /// Declared `(r, sup B)` over the real line.
    fn bounds(&self) -> Result<(f64, f64)> {
        match *self {
            ViscosityModel::Constant { b } if b > 0.0 && b.is_finite() => Ok((b, b)),
            ViscosityModel::Constant { .. } => Err(LabError::config(
                "viscosity.b",
                "must be a positive finite number",
            )),
            ViscosityModel::Quadratic { cap } if cap >= 0.0 && cap.is_finite() => {
                Ok((1.0, 1.0 + cap * cap))
            }
            ViscosityModel::Quadratic { .. } => {
                Err(LabError::config("viscosity.cap", "must be nonnegative"))
            }
            ViscosityModel::Gaussian { r } if r > 0.0 && r.is_finite() => Ok((r, r + 1.0)),
            ViscosityModel::Gaussian { .. } => Err(LabError::config(
                "viscosity.r",
                "must be a positive finite number",
            )),
        }
    }
}

/// `B` with its declared bounds `r ≤ B ≤ upper_bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscositySpec {
    model: ViscosityModel,
    lower_bound: f64,
    upper_bound: f64,
}

impl ViscositySpec {
    pub fn new(model: ViscosityModel) -> Result<Self> {
        let (lower_bound, upper_bound) = model.bounds()?;
        Ok(ViscositySpec {
            model,
            lower_bound,
            upper_bound,
        })
    }

    pub fn model(&self) -> ViscosityModel {
        self.model
    }

    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        self.model.value(u)
    }

    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        self.model.derivative(u)
    }

    /// `r > 0`.
    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    /// `‖B‖_∞`.
    pub fn upper_bound(&self) -> f64 {
        self.upper_bound
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-14
    }

    #[test]
    fn burgers_values() {
        let spec = FluxSpec::new(vec![FluxComponent::Burgers], Interval::symmetric(2.0)).unwrap();
        assert_eq!(spec.eval(0, 2.0).unwrap(), (2.0, 2.0, 1.0));
        assert_eq!(spec.eval(0, 0.0).unwrap(), (0.0, 0.0, 1.0));
        assert_eq!(spec.lipschitz_bound(), 2.0);
    }

    #[test]
    fn linear_values() {
        let spec = FluxSpec::new(
            vec![FluxComponent::Linear { speed: 0.7 }],
            Interval::symmetric(1.0),
        )
        .unwrap();
        let (f, df, d2f) = spec.eval(0, 0.3).unwrap();
        assert!(close(f, 0.21));
        assert_eq!(df, 0.7);
        assert_eq!(d2f, 0.0);
    }

    #[test]
    fn out_of_range_and_bad_axis() {
        let spec = FluxSpec::new(vec![FluxComponent::Burgers], Interval::symmetric(1.0)).unwrap();
        assert!(spec.eval(0, 1.0 + 0.5e-8).is_ok());
        assert!(matches!(
            spec.eval(0, 1.0 + 1e-7),
            Err(LabError::OutOfRange { .. })
        ));
        assert!(matches!(spec.eval(1, 0.0), Err(LabError::BadAxis { .. })));
    }

    #[test]
    fn arctan_flux_derivatives_match_finite_differences() {
        let c = FluxComponent::Arctan;
        for &u in &[-0.9, -0.1, 0.0, 0.4, 1.3] {
            let h = 1e-5;
            let fd = (c.value(u + h) - c.value(u - h)) / (2.0 * h);
            assert!((fd - c.derivative(u)).abs() < 1e-9);
            let fd2 = (c.derivative(u + h) - c.derivative(u - h)) / (2.0 * h);
            assert!((fd2 - c.second_derivative(u)).abs() < 1e-9);
        }
    }

    #[test]
    fn critical_points_of_presets() {
        let i = Interval::symmetric(1.0);
        let spec = FluxSpec::new(
            vec![FluxComponent::Burgers, FluxComponent::Linear { speed: 0.5 }],
            i,
        )
        .unwrap();
        assert_eq!(spec.critical_points(0).len(), 1);
        assert!(spec.critical_points(0)[0].abs() < 1e-14);
        assert!(spec.critical_points(1).is_empty());
        let cubic = FluxSpec::new(vec![FluxComponent::Cubic], i).unwrap();
        assert!(cubic.critical_points(0).is_empty());
        assert!(!FluxComponent::Cubic.is_convex_on(i));
        assert!(FluxComponent::Arctan.is_convex_on(i));
    }

    #[test]
    fn lipschitz_bound_dominates_samples() {
        let i = Interval::symmetric(1.5);
        let spec = FluxSpec::new(vec![FluxComponent::Arctan, FluxComponent::Burgers], i).unwrap();
        for y in i.sample(1001) {
            for c in spec.components() {
                assert!(c.derivative(y).abs() <= spec.lipschitz_bound());
            }
        }
    }

    #[test]
    fn viscosity_bounds_hold_on_samples() {
        let i = Interval::symmetric(1.0);
        for model in [
            ViscosityModel::Constant { b: 0.5 },
            ViscosityModel::Quadratic { cap: 1.0 },
            ViscosityModel::Gaussian { r: 0.2 },
        ] {
            let spec = ViscositySpec::new(model).unwrap();
            for y in Interval::symmetric(3.0).sample(601) {
                let b = spec.value(y);
                assert!(
                    spec.lower_bound() <= b && b <= spec.upper_bound(),
                    "{model:?} at {y}"
                );
            }
            for y in i.sample(101) {
                let h = 1e-6;
                if (y.abs() - 1.0).abs() > 2.0 * h {
                    let fd = (spec.value(y + h) - spec.value(y - h)) / (2.0 * h);
                    assert!((fd - spec.derivative(y)).abs() < 1e-6);
                }
            }
        }
        assert!(ViscositySpec::new(ViscosityModel::Constant { b: 0.0 }).is_err());
        assert!(ViscositySpec::new(ViscosityModel::Gaussian { r: -1.0 }).is_err());
    }

    #[test]
    fn quadratic_viscosity_truncates() {
        let m = ViscosityModel::Quadratic { cap: 1.0 };
        assert_eq!(m.value(0.5), 1.25);
        assert_eq!(m.value(3.0), 2.0);
        assert_eq!(m.derivative(3.0), 0.0);
    }
}
