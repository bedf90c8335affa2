//! Discrete Dirichlet Poisson problems `−Δφ = g` on boxes of dimension up
//! to three, with second-order stencils.
//!
//! Each axis is either cell-centered (unknowns at cell centers, zero value
//! on the boundary faces, realized by odd reflection into ghost cells) or
//! nodal (unknowns at interior nodes, zero value at the two end nodes). Both
//! discretizations are diagonalized by sine bases, so the direct solver
//! applies separable dense sine transforms along each axis. A matrix-free
//! conjugate-gradient solver for the same operator is kept as an
//! independent route.

use crate::error::{LabError, Result};

/// Relative residual every solve must reach.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    Cell,
    Node,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonAxis {
    /// Number of unknowns along the axis.
    pub n: usize,
    pub spacing: f64,
    pub kind: AxisKind,
}

impl PoissonAxis {
    pub fn cells(n: usize, spacing: f64) -> Self {
        PoissonAxis {
            n,
            spacing,
            kind: AxisKind::Cell,
        }
    }

    /// `n` interior nodes; the boundary nodes carry the zero value.
    pub fn nodes(n: usize, spacing: f64) -> Self {
        PoissonAxis {
            n,
            spacing,
            kind: AxisKind::Node,
        }
    }

    /// Orthonormal eigenvectors (column `k` stored at `[i * n + k]`) and
    /// eigenvalues of the 1-D negative Laplacian.
    fn eigensystem(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let h2 = self.spacing * self.spacing;
        let pi = std::f64::consts::PI;
        let mut vecs = vec![0.0; n * n];
        let mut vals = vec![0.0; n];
        for k in 0..n {
            let (theta, shift, denom) = match self.kind {
                AxisKind::Cell => ((k + 1) as f64 * pi / n as f64, 0.5, 2.0 * n as f64),
                AxisKind::Node => (
                    (k + 1) as f64 * pi / (n + 1) as f64,
                    1.0,
                    2.0 * (n + 1) as f64,
                ),
            };
            let s = ((k + 1) as f64 * pi / denom).sin();
            vals[k] = 4.0 / h2 * s * s;
            let mut norm2 = 0.0;
            for i in 0..n {
                let v = (theta * (i as f64 + shift)).sin();
                vecs[i * n + k] = v;
                norm2 += v * v;
            }
            let inv = 1.0 / norm2.sqrt();
            for i in 0..n {
                vecs[i * n + k] *= inv;
            }
        }
        (vecs, vals)
    }
}

/// Tensor-product box of Poisson axes; arrays are row-major with axis 0
/// slowest.
#[derive(Debug, Clone)]
pub struct PoissonBox {
    axes: Vec<PoissonAxis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoissonMethod {
    /// Separable sine-transform direct solve.
    Spectral,
    /// Matrix-free conjugate gradients with an iteration cap.
    ConjugateGradient { max_iterations: usize },
}

impl PoissonBox {
    pub fn new(axes: Vec<PoissonAxis>) -> Self {
        assert!(!axes.is_empty() && axes.len() <= 3);
        PoissonBox { axes }
    }

    pub fn axes(&self) -> &[PoissonAxis] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing).product()
    }

    fn stride(&self, axis: usize) -> usize {
        self.axes[axis + 1..].iter().map(|a| a.n).product()
    }

    /// `−Δu` with the homogeneous boundary conditions of each axis.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        for (axis, ax) in self.axes.iter().enumerate() {
            let stride = self.stride(axis);
            let n = ax.n;
            let inv_h2 = 1.0 / (ax.spacing * ax.spacing);
            for (idx, o) in out.iter_mut().enumerate() {
                let i = (idx / stride) % n;
                let c = u[idx];
                let ghost = match ax.kind {
                    AxisKind::Cell => -c,
                    AxisKind::Node => 0.0,
                };
                let l = if i > 0 { u[idx - stride] } else { ghost };
                let r = if i + 1 < n { u[idx + stride] } else { ghost };
                *o += (2.0 * c - l - r) * inv_h2;
            }
        }
        out
    }

    /// Squared discrete `L²` norm of the gradient, consistent with
    /// [`Self::apply`]: `‖∇u‖² = ⟨−Δu, u⟩` with cell-volume weights.
    pub fn gradient_norm_sq(&self, u: &[f64]) -> f64 {
        let mut total = 0.0;
        for (axis, ax) in self.axes.iter().enumerate() {
            let stride = self.stride(axis);
            let n = ax.n;
            let inv_h2 = 1.0 / (ax.spacing * ax.spacing);
            let mut s = 0.0;
            for (idx, &c) in u.iter().enumerate() {
                let i = (idx / stride) % n;
                if i + 1 < n {
                    let d = u[idx + stride] - c;
                    s += d * d;
                }
                let boundary = i == 0 || i + 1 == n;
                if boundary {
                    let copies = if n == 1 { 2.0 } else { 1.0 };
                    // cell faces: jump 2c over a half cell, nodal ends: jump c
                    s += copies
                        * match ax.kind {
                            AxisKind::Cell => 2.0 * c * c,
                            AxisKind::Node => c * c,
                        };
                }
            }
            total += s * inv_h2;
        }
        total * self.cell_volume()
    }

    /// Weighted inner product `Σ a b · volume`.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * self.cell_volume()
    }

    pub fn relative_residual(&self, rhs: &[f64], phi: &[f64]) -> f64 {
        let norm = l2(rhs);
        if norm == 0.0 {
            return l2(&self.apply(phi));
        }
        let a = self.apply(phi);
        let r: f64 = rhs
            .iter()
            .zip(&a)
            .map(|(g, x)| (g - x) * (g - x))
            .sum::<f64>()
            .sqrt();
        r / norm
    }

    pub fn solve(&self, rhs: &[f64], method: PoissonMethod) -> Result<Vec<f64>> {
        assert_eq!(rhs.len(), self.len());
        match method {
            PoissonMethod::Spectral => self.solve_spectral(rhs),
            PoissonMethod::ConjugateGradient { max_iterations } => {
                self.solve_cg(rhs, max_iterations)
            }
        }
    }

    fn solve_spectral(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.iter().all(|&g| g == 0.0) {
            return Ok(vec![0.0; rhs.len()]);
        }
        let systems: Vec<_> = self.axes.iter().map(PoissonAxis::eigensystem).collect();
        let once = |g: &[f64]| {
            let mut c = g.to_vec();
            for (axis, (vecs, _)) in systems.iter().enumerate() {
                self.transform(&mut c, axis, vecs, true);
            }
            for (idx, v) in c.iter_mut().enumerate() {
                let mut lambda = 0.0;
                let mut rest = idx;
                for axis in (0..self.axes.len()).rev() {
                    let n = self.axes[axis].n;
                    lambda += systems[axis].1[rest % n];
                    rest /= n;
                }
                *v /= lambda;
            }
            for (axis, (vecs, _)) in systems.iter().enumerate() {
                self.transform(&mut c, axis, vecs, false);
            }
            c
        };
        let mut phi = once(rhs);
        // iterative refinement absorbs transform round-off amplified by the
        // condition number
        let mut residual = self.relative_residual(rhs, &phi);
        let mut sweeps = 0;
        while residual > RESIDUAL_TOL && sweeps < 3 {
            let a = self.apply(&phi);
            let r: Vec<f64> = rhs.iter().zip(&a).map(|(g, x)| g - x).collect();
            let correction = once(&r);
            for (p, c) in phi.iter_mut().zip(&correction) {
                *p += c;
            }
            residual = self.relative_residual(rhs, &phi);
            sweeps += 1;
        }
        if residual > RESIDUAL_TOL {
            return Err(LabError::PoissonNonConvergence {
                iterations: sweeps,
                residual,
            });
        }
        Ok(phi)
    }

    /// Applies `Vᵀ` (forward) or `V` (inverse) along one axis.
    fn transform(&self, data: &mut [f64], axis: usize, vecs: &[f64], forward: bool) {
        let n = self.axes[axis].n;
        let stride = self.stride(axis);
        let outer = data.len() / (n * stride);
        let mut line = vec![0.0; n];
        let mut out = vec![0.0; n];
        for o in 0..outer {
            for r in 0..stride {
                let base = o * n * stride + r;
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + i * stride];
                }
                if forward {
                    out.iter_mut().for_each(|x| *x = 0.0);
                    for (i, &li) in line.iter().enumerate() {
                        let row = &vecs[i * n..(i + 1) * n];
                        for (x, v) in out.iter_mut().zip(row) {
                            *x += v * li;
                        }
                    }
                } else {
                    for (i, x) in out.iter_mut().enumerate() {
                        let row = &vecs[i * n..(i + 1) * n];
                        *x = row.iter().zip(&line).map(|(v, c)| v * c).sum();
                    }
                }
                for (i, &v) in out.iter().enumerate() {
                    data[base + i * stride] = v;
                }
            }
        }
    }

    fn solve_cg(&self, rhs: &[f64], max_iterations: usize) -> Result<Vec<f64>> {
        let n = rhs.len();
        let norm_rhs = l2(rhs);
        let mut x = vec![0.0; n];
        if norm_rhs == 0.0 {
            return Ok(x);
        }
        let mut r = rhs.to_vec();
        let mut p = r.clone();
        let mut rr: f64 = r.iter().map(|v| v * v).sum();
        let target = RESIDUAL_TOL * 0.5 * norm_rhs;
        for it in 0..max_iterations {
            if rr.sqrt() <= target {
                let residual = self.relative_residual(rhs, &x);
                if residual <= RESIDUAL_TOL {
                    return Ok(x);
                }
                // recompute the true residual and keep iterating
                let a = self.apply(&x);
                r = rhs.iter().zip(&a).map(|(g, v)| g - v).collect();
                p = r.clone();
                rr = r.iter().map(|v| v * v).sum();
                log::debug!("cg restart at iteration {it}");
            }
            let ap = self.apply(&p);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            let alpha = rr / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_new: f64 = r.iter().map(|v| v * v).sum();
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        let residual = self.relative_residual(rhs, &x);
        if residual <= RESIDUAL_TOL {
            Ok(x)
        } else {
            Err(LabError::PoissonNonConvergence {
                iterations: max_iterations,
                residual,
            })
        }
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
