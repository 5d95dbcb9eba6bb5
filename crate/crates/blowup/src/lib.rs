//! Approximate Type II blow-up solutions of the focusing energy-critical wave equation
//! `□u = |u|^{p−1}u` in dimensions 4 and 5, together with the numerics needed to check them:
//! log-power series and Frobenius solvers, closed-form profiles, the renormalization
//! iteration on light-cone grids, spectral data of the linearized operator, the Fourier-side
//! parametrix, and a radial finite-difference simulator.

// `!(x > 0.0)` is used on purpose so that NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod frobenius;
pub mod nlw_sim;
pub mod par;
pub mod parametrix;
pub mod profiles;
pub mod renorm;
pub mod series_core;
pub mod spectral;
