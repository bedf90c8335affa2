//! Adaptive quadrature and tabulated antiderivatives.

use crate::grid::Interval;

/// Number of nodes in every antiderivative table.
pub const TABLE_NODES: usize = 4096;

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Antiderivative `G(u) = ∫₀^u g(s) ds` tabulated on [`TABLE_NODES`] uniform
/// nodes of an interval. Evaluation uses cubic Hermite interpolation with the
/// integrand itself as the nodal slope.
#[derive(Debug, Clone)]
pub struct AntiderivativeTable {
    interval: Interval,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl AntiderivativeTable {
    /// Builds the table; the accumulated quadrature error is at most `tol`.
    pub fn build(g: impl Fn(f64) -> f64, interval: Interval, tol: f64) -> Self {
        let n = TABLE_NODES;
        let step = interval.width() / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|k| interval.lo + step * k as f64).collect();
        let slopes: Vec<f64> = nodes.iter().map(|&y| g(y)).collect();
        if step == 0.0 {
            return AntiderivativeTable {
                interval,
                step,
                values: vec![0.0; n],
                slopes,
            };
        }
        // Each cell gets a share of the budget; the anchor integral to 0 gets the rest.
        let cell_tol = 0.5 * tol / (n - 1) as f64;
        let mut values = Vec::with_capacity(n);
        let mut acc = 0.0;
        values.push(0.0);
        for w in nodes.windows(2) {
            acc += adaptive_simpson(&g, w[0], w[1], cell_tol);
            values.push(acc);
        }
        // shift so that G(0) = 0
        let origin = 0.0_f64.clamp(interval.lo, interval.hi);
        let k0 = (((origin - interval.lo) / step).floor() as usize).min(n - 1);
        let offset = values[k0] + adaptive_simpson(&g, nodes[k0], origin, 0.5 * tol);
        for v in &mut values {
            *v -= offset;
        }
        AntiderivativeTable {
            interval,
            step,
            values,
            slopes,
        }
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn node(&self, k: usize) -> f64 {
        self.interval.lo + self.step * k as f64
    }

    pub fn node_values(&self) -> &[f64] {
        &self.values
    }

    pub fn node_slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Interpolated value; arguments outside the interval are clamped, so
    /// callers check range first.
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        if self.step == 0.0 {
            return self.values[0];
        }
        let n = self.values.len();
        let s = ((u - self.interval.lo) / self.step).clamp(0.0, (n - 1) as f64);
        let k = (s.floor() as usize).min(n - 2);
        let t = s - k as f64;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slopes[k] * self.step, self.slopes[k + 1] * self.step);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    /// Derivative of the interpolant.
    pub fn derivative(&self, u: f64) -> f64 {
        if self.step == 0.0 {
            return self.slopes[0];
        }
        let n = self.values.len();
        let s = ((u - self.interval.lo) / self.step).clamp(0.0, (n - 1) as f64);
        let k = (s.floor() as usize).min(n - 2);
        let t = s - k as f64;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slopes[k] * self.step, self.slopes[k + 1] * self.step);
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / self.step
    }

    /// Inverse of a nondecreasing table by binary search over the nodes
    /// followed by bisection of the interpolant to `tol`. Targets outside
    /// the range are clamped; the flag reports whether that happened.
    pub fn inverse(&self, target: f64, tol: f64) -> (f64, bool) {
        let n = self.values.len();
        if self.step == 0.0 {
            return (self.interval.lo, target != self.values[0]);
        }
        if target <= self.values[0] {
            return (self.interval.lo, target < self.values[0]);
        }
        if target >= self.values[n - 1] {
            return (self.interval.hi, target > self.values[n - 1]);
        }
        let k = self
            .values
            .partition_point(|&v| v <= target)
            .saturating_sub(1);
        let mut a = self.node(k);
        let mut b = self.node((k + 1).min(n - 1));
        while b - a > tol {
            let m = 0.5 * (a + b);
            if self.eval(m) <= target {
                a = m;
            } else {
                b = m;
            }
        }
        (0.5 * (a + b), false)
    }

    /// Largest deviation of centered node differences of the table from the
    /// supplied derivative, over interior nodes.
    pub fn max_centered_defect(&self, derivative: impl Fn(f64) -> f64) -> f64 {
        if self.step == 0.0 {
            return 0.0;
        }
        (1..self.values.len() - 1)
            .map(|k| {
                let fd = (self.values[k + 1] - self.values[k - 1]) / (2.0 * self.step);
                (fd - derivative(self.node(k))).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest excess of the centered-difference defect over its per-node
    /// budget `tol + step²/6 · max|g''|`, the max taken over the stencil
    /// `[y_{k−1}, y_{k+1}]` from second differences of `g` at spacing
    /// `step/8`. Non-positive means every node is within budget.
    pub fn max_centered_excess(&self, g: impl Fn(f64) -> f64, tol: f64) -> f64 {
        if self.step == 0.0 {
            return f64::NEG_INFINITY;
        }
        let fine = self.step / 8.0;
        (1..self.values.len() - 1)
            .map(|k| {
                let y = self.node(k);
                let fd = (self.values[k + 1] - self.values[k - 1]) / (2.0 * self.step);
                let defect = (fd - g(y)).abs();
                let g2 = (-16..=16)
                    .map(|j| {
                        let x = y + j as f64 * fine;
                        ((g(x + fine) - 2.0 * g(x) + g(x - fine)) / (fine * fine)).abs()
                    })
                    .fold(0.0, f64::max);
                defect - (tol + self.step * self.step / 6.0 * g2)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_on_cubics() {
        let v = adaptive_simpson(&|x: f64| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12);
        assert!((v - 0.0).abs() < 1e-12);
        let v = adaptive_simpson(&|x: f64| x * x, 0.0, 1.0, 1e-12);
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn simpson_handles_kinks() {
        let v = adaptive_simpson(&|x: f64| x.abs(), -1.0, 2.0, 1e-10);
        assert!((v - 2.5).abs() < 1e-9);
    }

    #[test]
    fn table_reproduces_cubic_antiderivative() {
        let t = AntiderivativeTable::build(|s| s * s, Interval::symmetric(1.0), 1e-10);
        for &u in &[-1.0, -0.3, 0.0, 0.123_456, 1.0] {
            assert!((t.eval(u) - u * u * u / 3.0).abs() < 1e-12, "u = {u}");
        }
        assert!((t.eval(0.0)).abs() < 1e-15);
    }

    #[test]
    fn table_inverse_of_monotone_cubic() {
        let t = AntiderivativeTable::build(|s| s * s, Interval::symmetric(1.0), 1e-12);
        let (c, clamped) = t.inverse(1.0 / 3.0, 1e-10);
        assert!(!clamped);
        assert!((c - 1.0).abs() < 1e-9);
        let (c, _) = t.inverse(0.0, 1e-10);
        assert!(c.abs() < 1e-3, "c = {c}");
        let (c, clamped) = t.inverse(5.0, 1e-10);
        assert!(clamped);
        assert_eq!(c, 1.0);
    }

    #[test]
    fn degenerate_interval_is_constant_zero() {
        let t = AntiderivativeTable::build(|s| s + 1.0, Interval::symmetric(0.0), 1e-8);
        assert_eq!(t.eval(0.0), 0.0);
        assert_eq!(t.eval(3.0), 0.0);
    }
}
