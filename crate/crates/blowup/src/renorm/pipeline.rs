use super::even::{even_step, project_main_term, Projection};
use super::fit::{fit_decay_exponent, select_m, DecayFit, Quantity, RegionSelector};
use super::odd::{odd_step, E0Forcing};
use super::residual::{increment, increment_beyond_linear, power_nonlinearity};
use super::{ConeGrid, FieldKind, ProfileField, RenormError};
use crate::profiles::{u0_e0, BlowupConstants};
use crate::series_core::Jet2;
use std::sync::Arc;

/// Largest number of renormalization steps implemented.
pub const K_MAX: usize = 2;

/// `u₀, …, u_K`, the corrections and the errors `t²e_k`, with per-step diagnostics.
#[derive(Debug, Clone)]
pub struct Approximation {
    pub grid: Arc<ConeGrid>,
    pub u: Vec<ProfileField>,
    /// `v[k−1] = v_k`.
    pub v: Vec<ProfileField>,
    pub e: Vec<ProfileField>,
    /// Decay fit of each `e_k` on [`Approximation::region`], when enough slices are populated.
    pub fits: Vec<Option<DecayFit>>,
    /// `min u_k/λ^{(d−2)/2}` over the grid.
    pub min_u: Vec<f64>,
    pub projection: Option<Projection>,
}

impl Approximation {
    /// The region the construction improves: the tip (d = 5) or `R ≤ 1` (d = 4).
    pub fn region(&self) -> RegionSelector {
        region_for(self.grid.consts())
    }

    /// Gain in the decay exponent from `e_from` to `e_to`.
    pub fn improvement(&self, from: usize, to: usize) -> Option<f64> {
        Some(self.fits.get(from)?.as_ref()?.exponent - self.fits.get(to)?.as_ref()?.exponent)
    }
}

fn region_for(c: &BlowupConstants) -> RegionSelector {
    if c.d() == 5 {
        RegionSelector::Tip
    } else {
        RegionSelector::RBelow(1.0)
    }
}

/// Runs `k` steps on the default grid; the origin constant `m` comes from [`select_m`] for d = 5.
pub fn approximate_solution(c: &BlowupConstants, k: usize) -> Result<Approximation, RenormError> {
    let m = if c.d() == 5 { select_m(c)?.m } else { 1.0 };
    approximate_solution_on(ConeGrid::default_for(c, m), k)
}

/// Runs `k ≤ 2` steps on a given grid.
pub fn approximate_solution_on(grid: ConeGrid, k: usize) -> Result<Approximation, RenormError> {
    if k > K_MAX {
        return Err(RenormError::TooManyIterations { k, k_max: K_MAX });
    }
    let grid = Arc::new(grid);
    let c = grid.consts().clone();
    let p = c.p();
    let pairs = crate::par::map_range(grid.len(), |n| {
        let (i, j) = (n % grid.n_a(), n / grid.n_a());
        u0_e0(&c, grid.r_big(i, j), grid.t_nodes[j])
    });
    let (j0, je): (Vec<Jet2>, Vec<Jet2>) = pairs.into_iter().unzip();
    let u0 = ProfileField { grid: grid.clone(), jets: j0, kind: FieldKind::Solution, k: 0, smallness_ref: 0.0 };
    let e0 = ProfileField { grid: grid.clone(), jets: je, kind: FieldKind::Error, k: 0, smallness_ref: 0.0 };
    let mut out = Approximation { grid: grid.clone(), u: vec![u0], v: vec![], e: vec![e0], fits: vec![], min_u: vec![], projection: None };

    if k >= 1 {
        // the whole of e₀ is removed: t²e₁ = t²N_{u₀}(v₁) − t²∂_tt v₁
        let v1 = odd_step(&E0Forcing::new(&c), &grid, 1)?;
        let u0 = &out.u[0];
        let e1 = ProfileField::from_fn(grid.clone(), FieldKind::Error, 1, |i, j| {
            let t = grid.t_nodes[j];
            let (u, v) = (u0.at(i, j), v1.at(i, j));
            Jet2 { u: t * t * (increment_beyond_linear(u.u, v.u, p) - v.u_tt), ..Jet2::default() }
        });
        let u1 = ProfileField { kind: FieldKind::Solution, k: 1, ..u0.plus(&v1) };
        out.u.push(u1);
        out.v.push(v1);
        out.e.push(ProfileField { smallness_ref: 2.0, ..e1 });
    }

    if k >= 2 {
        let (e1, v1) = (&out.e[1], &out.v[0]);
        let target = if c.d() == 4 {
            // v₁³ does not decay in R; it stays in the error
            ProfileField::from_fn(grid.clone(), FieldKind::Error, 1, |i, j| {
                let t = grid.t_nodes[j];
                Jet2 { u: e1.value(i, j) - t * t * power_nonlinearity(v1.value(i, j), p), ..Jet2::default() }
            })
        } else {
            e1.clone()
        };
        let proj = project_main_term(&target)?;
        let step = even_step(&proj.forcing, &grid, 2)?;
        let u1 = &out.u[1];
        let v2 = step.v;
        let e2 = ProfileField::from_fn(grid.clone(), FieldKind::Error, 2, |i, j| {
            let t = grid.t_nodes[j];
            let n = grid.idx(i, j);
            let inc = increment(u1.jets[n].u, v2.jets[n].u, p);
            Jet2 { u: e1.jets[n].u + t * t * inc - step.box_v[n], ..Jet2::default() }
        });
        let u2 = ProfileField { kind: FieldKind::Solution, k: 2, ..u1.plus(&v2) };
        let gain = if c.d() == 5 { 2.0 / 3.0 - 2.0 * c.eps() } else { 0.0 };
        out.u.push(u2);
        out.v.push(v2);
        out.e.push(ProfileField { smallness_ref: 2.0 + gain, ..e2 });
        out.projection = Some(proj);
    }

    let sel = region_for(&c);
    out.fits = out.e.iter().map(|e| fit_decay_exponent(e, sel, Quantity::Normalized).ok()).collect();
    out.min_u = out.u.iter().map(ProfileField::min_normalized).collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::{residual, Region};
    use super::*;

    #[test]
    fn too_many_iterations() {
        let c = BlowupConstants::new(5, 6.0).unwrap();
        assert!(matches!(approximate_solution(&c, 3), Err(RenormError::TooManyIterations { .. })));
    }

    #[test]
    fn k1_is_u0_plus_v1() {
        let c = BlowupConstants::new(5, 6.0).unwrap();
        let g = ConeGrid::new(&c, 64, 12, 1e-4, 0.25);
        let ap = approximate_solution_on(g, 1).unwrap();
        assert_eq!(ap.u.len(), 2);
        for n in 0..ap.grid.len() {
            let (u0, v1, u1) = (ap.u[0].jets[n], ap.v[0].jets[n], ap.u[1].jets[n]);
            assert_eq!(u1, u0 + v1);
        }
        assert!(ap.projection.is_none());
    }

    #[test]
    fn telescoped_errors_match_direct_residuals_at_moderate_scale() {
        for (d, nu) in [(5, 6.0), (4, 3.0)] {
            let c = BlowupConstants::new(d, nu).unwrap().with_t0(2f64.powf(-1.0 / nu)).unwrap();
            let m = if d == 5 { 0.25 } else { 1.0 };
            let ap = approximate_solution_on(ConeGrid::new(&c, 128, 12, 1e-4, m), 2).unwrap();
            for k in 1..=2 {
                let direct = residual(&ap.u[k]);
                let g = &ap.grid;
                for j in 0..g.n_t() {
                    let tl = g.t_lambda(j);
                    if tl > 1e2 {
                        continue;
                    }
                    let norm = c.lambda(g.t_nodes[j]).powf(c.q());
                    for i in 0..g.n_a() {
                        let (a, b) = (ap.e[k].value(i, j) / norm, direct.value(i, j) / norm);
                        assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()), "d={d} k={k} τ={tl} R={}: {a} vs {b}", g.r_big(i, j));
                    }
                }
            }
        }
    }

    #[test]
    fn d5_tip_decay_improves_and_u2_is_positive() {
        let c = BlowupConstants::new(5, 6.0).unwrap();
        let ap = approximate_solution(&c, 2).unwrap();
        let proj = ap.projection.as_ref().unwrap();
        assert!((proj.forcing.q_at(0, 0.5) + c.c2()).abs() < 1e-6 * c.c2(), "q₀ = {}", proj.forcing.q_at(0, 0.5));
        let f1 = ap.fits[1].as_ref().unwrap();
        assert!((f1.exponent + 2.0).abs() < 0.1, "e₁ exponent {}", f1.exponent);
        let gain = ap.improvement(1, 2).unwrap();
        assert!(gain >= 2.0 / 3.0 - 2.0 * c.eps() - 0.1, "gain {gain}");
        assert!(ap.min_u[2] > 0.0);
        // v₂ lives where its cut-off is on
        let g = &ap.grid;
        for j in 0..g.n_t() {
            for i in 0..g.n_a() {
                if g.region(i, j) == Region::Origin {
                    assert_eq!(ap.v[1].value(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn d4_log_coefficient_and_origin_decay() {
        let c = BlowupConstants::new(4, 3.0).unwrap();
        let ap = approximate_solution(&c, 2).unwrap();
        let sig = c.s();
        let q1 = ap.projection.as_ref().unwrap().forcing.q_at(1, 0.5);
        let expected = -sig * (sig - 1.0) * c.c1();
        assert!((q1 - expected).abs() < 1e-3 * expected.abs(), "q₁ = {q1}, expected {expected}");
        let gain = ap.improvement(0, 2).unwrap();
        assert!((gain - 2.0).abs() <= 0.2, "gain {gain}");
    }
}
