use super::{ProfileField, Region, RenormError};
use crate::profiles::BlowupConstants;
use crate::series_core::LogPowerSeries;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Which nodes of each slice a fit looks at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegionSelector {
    Origin,
    Middle,
    Tip,
    /// `R ≤ bound`.
    RBelow(f64),
    All,
}

/// What is measured per slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// `sup |value| / λ^{(d−2)/2}`.
    Normalized,
    /// `sup |value|`.
    Raw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    /// Slope of `log sup` against `log tλ`.
    pub exponent: f64,
    pub r2: f64,
    pub slices: usize,
}

/// Least squares `rows · coef ≈ ys` by SVD; returns the coefficients and the rms residual.
pub(crate) fn lstsq(rows: &[Vec<f64>], ys: &[f64]) -> (Vec<f64>, f64) {
    let (n, m) = (rows.len(), rows[0].len());
    let a = DMatrix::from_fn(n, m, |i, j| rows[i][j]);
    let b = DVector::from_column_slice(ys);
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&b, 1e-14).unwrap_or_else(|_| DVector::zeros(m));
    let r = &a * &x - b;
    (x.iter().copied().collect(), (r.norm_squared() / n as f64).sqrt())
}

fn selected(field: &ProfileField, sel: RegionSelector, i: usize, j: usize) -> bool {
    let g = &field.grid;
    match sel {
        RegionSelector::Origin => g.region(i, j) == Region::Origin,
        RegionSelector::Middle => g.region(i, j) == Region::Middle,
        RegionSelector::Tip => g.region(i, j) == Region::Tip,
        RegionSelector::RBelow(b) => g.r_big(i, j) <= b,
        RegionSelector::All => true,
    }
}

/// Fits `sup_{region} |field| ∼ (tλ)^{exponent}` across slices.
pub fn fit_decay_exponent(field: &ProfileField, sel: RegionSelector, quantity: Quantity) -> Result<DecayFit, RenormError> {
    let g = &field.grid;
    let c = g.consts();
    let mut pts = Vec::new();
    for j in 0..g.n_t() {
        let t = g.t_nodes[j];
        let norm = match quantity {
            Quantity::Normalized => c.lambda(t).powf(c.q()),
            Quantity::Raw => 1.0,
        };
        let sup = (0..g.n_a())
            .filter(|&i| selected(field, sel, i, j))
            .map(|i| field.value(i, j).abs())
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
        if let Some(sup) = sup {
            if sup > 0.0 && sup.is_finite() {
                pts.push((g.t_lambda(j).ln(), (sup / norm).ln()));
            }
        }
    }
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let span = if pts.is_empty() { 0.0 } else { (hi - lo) / std::f64::consts::LN_10 };
    if pts.len() < 6 || span < 1.0 {
        return Err(RenormError::InsufficientSlices { slices: pts.len(), span });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(DecayFit { exponent: slope, r2, slices: pts.len() })
}

/// Result of choosing the origin-region constant `m`.
#[derive(Debug, Clone)]
pub struct MSelection {
    pub m: f64,
    /// `w₀(y)` in `v₁/u₀ = R³(tλ)^{−2}(w₀(1/R) + R^{−3}w₁(1/R) log R)`.
    pub w0: LogPowerSeries,
    /// `w₁(y)`, including its nonzero constant term.
    pub w1: LogPowerSeries,
    /// `y³w₁(y)`, the coefficient series of `log R` before division by `y³`.
    pub w1_times_y3: LogPowerSeries,
    /// Wiener norms `‖w₀‖, ‖w₁‖` on `|y| ≤ (2√15)^{−1}`.
    pub norms: [f64; 2],
}

/// Largest dyadic `m` with `2m³ max_j (1 + ‖w_j‖) ≤ 1/2`, the norms taken on `|y| ≤ (2√15)^{−1}`.
pub fn select_m(c: &BlowupConstants) -> Result<MSelection, RenormError> {
    if c.d() != 5 {
        return Err(RenormError::SeriesRadius(format!("the origin constant is defined for d = 5, got d = {}", c.d())));
    }
    let prof = c.v1_profile()?;
    let far = prof.far();
    let radius = far.particular.radius;
    let r = 1.0 / (2.0 * 15f64.sqrt());
    if r >= radius {
        return Err(RenormError::SeriesRadius(format!("norm radius {r} ≥ expansion radius {radius}")));
    }
    let (a, b) = far.split();
    let n = a.len();
    // 15^{−3/2}(1+15y²)^{3/2} = Σ binom(3/2, j) 15^{j−3/2} y^{2j}
    let mut pre = vec![0.0; n];
    let mut bin = 1.0;
    for j in 0..n.div_ceil(2) {
        pre[2 * j] = bin * 15f64.powf(j as f64 - 1.5);
        bin *= (1.5 - j as f64) / (j as f64 + 1.0);
    }
    let mul = |x: &[f64]| -> Vec<f64> { (0..n).map(|k| (0..=k).map(|i| pre[i] * x[k - i]).sum()).collect() };
    let w0c = mul(&a);
    // log z = −log R
    let y3w1: Vec<f64> = mul(&b).into_iter().map(|v| -v).collect();
    let w1c: Vec<f64> = y3w1.iter().skip(3).copied().collect();
    let mk = |cs: Vec<f64>| LogPowerSeries::new(Complex64::new(0.0, 0.0), 0.0, vec![cs], radius);
    let (w0, w1, w1y3) = (mk(w0c), mk(w1c), mk(y3w1));
    let err = |e: crate::series_core::SeriesError| RenormError::SeriesRadius(e.to_string());
    let norms = [w0.wiener_norm(0, r).map_err(err)?, w1.wiener_norm(0, r).map_err(err)?];
    let worst = 1.0 + norms[0].max(norms[1]);
    let mut m = 1.0;
    while 2.0 * m * m * m * worst > 0.5 {
        m *= 0.5;
    }
    Ok(MSelection { m, w0, w1, w1_times_y3: w1y3, norms })
}

#[cfg(test)]
mod tests {
    use super::super::{ConeGrid, FieldKind};
    use super::*;
    use crate::profiles::{u0_e0, v1};
    use crate::series_core::Jet2;
    use std::sync::Arc;

    #[test]
    fn synthetic_power_law_is_recovered() {
        let c = BlowupConstants::new(5, 6.0).unwrap();
        let g = Arc::new(ConeGrid::default_for(&c, 0.25));
        let f = ProfileField::from_fn(g.clone(), FieldKind::Error, 1, |i, j| {
            let t = g.t_nodes[j];
            Jet2 { u: c.lambda(t).powf(c.q()) * g.t_lambda(j).powi(-2) * (1.0 + g.a_nodes[i]), ..Jet2::default() }
        });
        let fit = fit_decay_exponent(&f, RegionSelector::All, Quantity::Normalized).unwrap();
        assert!((fit.exponent + 2.0).abs() < 1e-6 && fit.r2 > 1.0 - 1e-12);
    }

    #[test]
    fn too_few_slices_is_an_error() {
        let c = BlowupConstants::new(5, 6.0).unwrap();
        let g = Arc::new(ConeGrid::new(&c, 16, 4, 1e-4, 0.25));
        let f = ProfileField::from_fn(g.clone(), FieldKind::Error, 1, |_, _| Jet2 { u: 1.0, ..Jet2::default() });
        assert!(matches!(fit_decay_exponent(&f, RegionSelector::All, Quantity::Raw), Err(RenormError::InsufficientSlices { .. })));
    }

    #[test]
    fn lstsq_solves_consistent_systems() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64, (i * i) as f64]).collect();
        let ys: Vec<f64> = (0..10).map(|i| 2.0 - 3.0 * i as f64 + 0.5 * (i * i) as f64).collect();
        let (x, r) = lstsq(&rows, &ys);
        assert!((x[0] - 2.0).abs() < 1e-10 && (x[1] + 3.0).abs() < 1e-10 && (x[2] - 0.5).abs() < 1e-10 && r < 1e-10);
    }

    #[test]
    fn m_is_maximal_and_the_origin_region_is_dominated_by_u0() {
        let c = BlowupConstants::new(5, 6.0).unwrap();
        let sel = select_m(&c).unwrap();
        let worst = 1.0 + sel.norms[0].max(sel.norms[1]);
        assert!(2.0 * sel.m.powi(3) * worst <= 0.5);
        assert!(2.0 * (2.0 * sel.m).powi(3) * worst > 0.5);
        // the log part enters at order y³
        for k in 0..3 {
            assert!(sel.w1_times_y3.coeff(0, k).abs() <= 1e-9, "coefficient {k}");
        }
        assert!(sel.w1.coeff(0, 0).abs() > 1e-3);
        let g = ConeGrid::default_for(&c, sel.m);
        for j in 0..g.n_t() {
            let t = g.t_nodes[j];
            for i in 0..g.n_a() {
                if g.region(i, j) == Region::Origin {
                    let r = g.r_big(i, j);
                    let u0 = u0_e0(&c, r, t).0.u;
                    let v = c.lambda(t).powf(c.q()) * g.t_lambda(j).powi(-2) * v1(&c, r).unwrap().u;
                    assert!(u0.abs() >= 2.0 * v.abs(), "R={r}");
                }
            }
        }
    }

    #[test]
    fn w0_reproduces_the_ratio_at_large_r() {
        let c = BlowupConstants::new(5, 6.0).unwrap();
        let sel = select_m(&c).unwrap();
        for r in [20.0, 50.0, 200.0] {
            let y = 1.0 / r;
            let w = crate::profiles::ground_state(5, r).u;
            let ratio = v1(&c, r).unwrap().u / w / r.powi(3);
            let series = sel.w0.eval(y) + y.powi(3) * sel.w1.eval(y) * r.ln();
            assert!((ratio - series).abs() <= 1e-8 * ratio.abs(), "R={r}: {ratio} vs {series}");
        }
    }
}
