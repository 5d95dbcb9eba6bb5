//! The renormalization iteration on light-cone grids.
//!
//! Starting from `u₀`, odd steps solve `(tλ)²𝓛v = t²e⁰` in `R` with `t` frozen and even steps
//! solve the self-similar wave equation `t²(−∂_tt + ∂_rr + (d−1)/r ∂_r)v = −t²ẽ⁰` in the
//! variable `a = r/t`, where `ẽ⁰` is the main term of the previous error projected onto
//! `t^s q(a) log(R)^l`. Errors are never formed as `F(u) − □u` by direct subtraction along
//! the pipeline: each new error is assembled from the previous one, the part the correction
//! was built to cancel, and the exact nonlinear increment, which avoids the `(tλ)^{2+N}`
//! cancellation a direct evaluation would suffer.
//!
//! All error fields store `t²e`.

mod even;
mod fit;
mod odd;
mod pipeline;
mod residual;

pub use even::{even_step, project_main_term, solve_even_system, EvenForcing, EvenProfile, EvenStep, Projection};
pub use fit::{fit_decay_exponent, select_m, DecayFit, MSelection, Quantity, RegionSelector};
pub use odd::{odd_step, E0Forcing, RadialForcing, ZeroForcing};
pub use pipeline::{approximate_solution, approximate_solution_on, Approximation, K_MAX};
pub use residual::{increment, increment_beyond_linear, power_nonlinearity, residual};

use crate::frobenius::FrobeniusError;
use crate::profiles::{BlowupConstants, ProfileError};
use crate::series_core::Jet2;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenormError {
    #[error("odd step failed on time slice {slice}: {source}")]
    SliceFailure { slice: usize, source: FrobeniusError },
    #[error("hypergeometric system failed: {0}")]
    HypergeomFailure(FrobeniusError),
    #[error("projection found no usable nodes ({0})")]
    ProjectionFailed(String),
    #[error("decay fit needs ≥ 6 slices spanning a decade of tλ, got {slices} spanning {span:.2} decades")]
    InsufficientSlices { slices: usize, span: f64 },
    #[error("requested {k} iterations, at most {k_max} are supported")]
    TooManyIterations { k: usize, k_max: usize },
    #[error("expansion radius check failed: {0}")]
    SeriesRadius(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Cone regions of the five-dimensional analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// `R ≤ m(tλ)^{2/3}`: `u₀` dominates `v₁`.
    Origin,
    Middle,
    /// `R ≥ 2(tλ)^{2/3+ε}`: the cut-off of the even step equals one.
    Tip,
}

/// Product grid of `a = r/t` nodes and time slices; node `(i, j)` sits at `R = a_i t_j λ(t_j)`.
#[derive(Debug, Clone)]
pub struct ConeGrid {
    pub a_nodes: Vec<f64>,
    pub t_nodes: Vec<f64>,
    pub delta_a: f64,
    pub m: f64,
    consts: BlowupConstants,
}

impl ConeGrid {
    /// `n_t` slices geometric in `(t₀/32, t₀]`; `n_a` nodes, 5/8 of them log-spaced from
    /// `10⁻³/(tλ)_max` to `1/2`, the rest clustered towards `1 − δ_a`.
    pub fn new(c: &BlowupConstants, n_a: usize, n_t: usize, delta_a: f64, m: f64) -> Self {
        let t0 = c.t0();
        let mut t_nodes: Vec<f64> = (0..n_t).map(|j| t0 * 32f64.powf(-(j as f64) / n_t as f64)).collect();
        t_nodes.reverse();
        let a_min = 1e-3 / c.t_lambda(t_nodes[0]);
        let n_log = (n_a * 5 / 8).max(2);
        let n_hi = n_a - n_log;
        let mut a_nodes: Vec<f64> = (0..n_log).map(|i| a_min * (0.5 / a_min).powf(i as f64 / n_log as f64)).collect();
        let top = 1.0 - delta_a;
        for k in 0..n_hi {
            let th = std::f64::consts::FRAC_PI_2 * (k + 1) as f64 / n_hi as f64;
            a_nodes.push(0.5 + (top - 0.5) * th.sin());
        }
        Self { a_nodes, t_nodes, delta_a, m, consts: c.clone() }
    }

    /// The default grid: 256 a-nodes, 12 slices, `δ_a = 10⁻⁴`.
    pub fn default_for(c: &BlowupConstants, m: f64) -> Self {
        Self::new(c, 256, 12, 1e-4, m)
    }

    pub fn consts(&self) -> &BlowupConstants {
        &self.consts
    }

    pub fn n_a(&self) -> usize {
        self.a_nodes.len()
    }

    pub fn n_t(&self) -> usize {
        self.t_nodes.len()
    }

    pub fn len(&self) -> usize {
        self.n_a() * self.n_t()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of node `(i, j)`.
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.n_a() + i
    }

    pub fn t_lambda(&self, j: usize) -> f64 {
        self.consts.t_lambda(self.t_nodes[j])
    }

    pub fn r_big(&self, i: usize, j: usize) -> f64 {
        self.a_nodes[i] * self.t_lambda(j)
    }

    pub fn region(&self, i: usize, j: usize) -> Region {
        let tl = self.t_lambda(j);
        let r = self.r_big(i, j);
        if r >= 2.0 * tl.powf(2.0 / 3.0 + self.consts.eps()) {
            Region::Tip
        } else if r <= self.m * tl.powf(2.0 / 3.0) {
            Region::Origin
        } else {
            Region::Middle
        }
    }
}

/// What a field holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// An approximate solution `u_k`.
    Solution,
    /// A correction `v_k`.
    Correction,
    /// An error `t²e_k`.
    Error,
}

/// Jets of one object sampled on a cone grid.
#[derive(Debug, Clone)]
pub struct ProfileField {
    pub grid: Arc<ConeGrid>,
    pub jets: Vec<Jet2>,
    pub kind: FieldKind,
    pub k: usize,
    /// `α` in the reference size `λ^{(d−2)/2}(tλ)^{−α}`.
    pub smallness_ref: f64,
}

impl ProfileField {
    pub fn zeros(grid: Arc<ConeGrid>, kind: FieldKind, k: usize) -> Self {
        let n = grid.len();
        Self { grid, jets: vec![Jet2::default(); n], kind, k, smallness_ref: 0.0 }
    }

    pub fn from_fn(grid: Arc<ConeGrid>, kind: FieldKind, k: usize, f: impl Fn(usize, usize) -> Jet2 + Sync + Send) -> Self {
        let n_a = grid.n_a();
        let jets = crate::par::map_range(grid.len(), |n| f(n % n_a, n / n_a));
        Self { grid, jets, kind, k, smallness_ref: 0.0 }
    }

    pub fn at(&self, i: usize, j: usize) -> &Jet2 {
        &self.jets[self.grid.idx(i, j)]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.at(i, j).u
    }

    pub fn is_finite(&self) -> bool {
        self.jets.iter().all(Jet2::is_finite)
    }

    /// Node-wise sum, keeping `self`'s metadata.
    pub fn plus(&self, other: &ProfileField) -> ProfileField {
        let jets = self.jets.iter().zip(&other.jets).map(|(a, b)| *a + *b).collect();
        ProfileField { jets, ..self.clone() }
    }

    /// Minimum of `value/λ^q` over the grid.
    pub fn min_normalized(&self) -> f64 {
        let g = &self.grid;
        let c = g.consts();
        let mut lo = f64::INFINITY;
        for j in 0..g.n_t() {
            let norm = c.lambda(g.t_nodes[j]).powf(c.q());
            for i in 0..g.n_a() {
                lo = lo.min(self.value(i, j) / norm);
            }
        }
        lo
    }
}
