//! Vanishing-viscosity laboratory for scalar conservation laws.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compactness;
pub mod config;
pub mod convergence;
pub mod entropy;
pub mod error;
pub mod flux;
pub mod grid;
pub mod harness;
pub mod mollifier;
pub mod norms;
pub mod persist;
pub mod poisson;
pub mod quadrature;
pub mod reference;
pub mod solver;
