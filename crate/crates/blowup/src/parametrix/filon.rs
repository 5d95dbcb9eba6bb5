//! Filon quadrature for `∫ g(s) e^{iωs} ds` with smooth, non-oscillatory `g`: on each panel `g`
//! is replaced by its Legendre interpolant at Gauss nodes, whose products with `e^{iθt}` integrate
//! exactly to `2 i^k j_k(θ)`. Panels only need to resolve `g`, never the oscillation.

use gauss_quad::GaussLegendre;

pub(crate) struct FilonRule {
    /// Gauss–Legendre nodes and weights on `[−1, 1]`.
    pub nodes: Vec<f64>,
    /// `coef[k][i]`: Legendre coefficient `c_k` of the interpolant is `Σ_i coef[k][i] g_i`.
    coef: Vec<Vec<f64>>,
}

impl FilonRule {
    pub fn new(n: usize) -> Self {
        let rule = GaussLegendre::new(n).expect("valid Legendre rule");
        let mut pairs = rule.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let coef = (0..n).map(|k| pairs.iter().map(|&(t, w)| (k as f64 + 0.5) * w * legendre(k, t)).collect()).collect();
        Self { nodes, coef }
    }

    /// `(∫_a^b g(s) sin(ωs)/ω ds, ∫_a^b g(s) cos(ωs) ds)` from `g` at the mapped nodes
    /// `(a + b)/2 + (b − a)/2 · t_i`. The first integral stays exact as `ω → 0`.
    pub fn panel(&self, a: f64, b: f64, omega: f64, g: &[f64]) -> (f64, f64) {
        let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
        let theta = omega * r;
        let j = spherical_bessel(self.nodes.len(), theta);
        let (sm, cm) = (omega * m).sin_cos();
        // sin(ωm)/ω without cancellation at small ω
        let sinc_m = if (omega * m).abs() < 1e-8 { m } else { sm / omega };
        let (mut s_int, mut c_int) = (0.0, 0.0);
        for (k, row) in self.coef.iter().enumerate() {
            let ck: f64 = row.iter().zip(g).map(|(a, b)| a * b).sum();
            // ∫P_k(t)e^{iθt}dt = 2i^k j_k(θ); e^{iωs} = e^{iωm}e^{iθt}
            match k % 4 {
                0 => {
                    s_int += ck * 2.0 * j[k] * sinc_m;
                    c_int += ck * 2.0 * j[k] * cm;
                }
                1 => {
                    s_int += ck * 2.0 * j_over(k, theta, &j) * r * cm;
                    c_int -= ck * 2.0 * j[k] * sm;
                }
                2 => {
                    s_int -= ck * 2.0 * j[k] * sinc_m;
                    c_int -= ck * 2.0 * j[k] * cm;
                }
                _ => {
                    s_int -= ck * 2.0 * j_over(k, theta, &j) * r * cm;
                    c_int += ck * 2.0 * j[k] * sm;
                }
            }
        }
        (r * s_int, r * c_int)
    }
}

/// `j_k(θ)/θ` for odd `k`, finite at `θ = 0`.
fn j_over(k: usize, theta: f64, j: &[f64]) -> f64 {
    match (theta == 0.0, k) {
        (false, _) => j[k] / theta,
        (true, 1) => 1.0 / 3.0,
        (true, _) => 0.0,
    }
}

pub(crate) fn legendre(k: usize, t: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, t);
    if k == 0 {
        return p0;
    }
    for n in 1..k {
        let nf = n as f64;
        let p2 = ((2.0 * nf + 1.0) * t * p1 - nf * p0) / (nf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `j_0(θ), …, j_{n−1}(θ)` for `θ ≥ 0`: power series for `θ < 1`, upward recurrence for
/// `θ ≥ n`, and Miller's downward recurrence normalized by `Σ(2k+1)j_k² = 1` in between.
pub(crate) fn spherical_bessel(n: usize, theta: f64) -> Vec<f64> {
    let mut j = vec![0.0; n];
    if theta < 1.0 {
        // j_k(θ) = θ^k Σ_m (−θ²/2)^m / (m! (2k+2m+1)!!)
        let mut lead = 1.0;
        for (k, jk) in j.iter_mut().enumerate() {
            if k > 0 {
                lead *= theta / (2 * k + 1) as f64;
            }
            let (mut term, mut sum) = (lead, lead);
            for m in 1..30 {
                term *= -0.5 * theta * theta / (m as f64 * (2 * k + 2 * m + 1) as f64);
                sum += term;
                if term.abs() < 1e-17 * sum.abs() {
                    break;
                }
            }
            *jk = sum;
        }
        return j;
    }
    let (s, c) = theta.sin_cos();
    if theta >= n as f64 {
        j[0] = s / theta;
        if n > 1 {
            j[1] = s / (theta * theta) - c / theta;
        }
        for k in 1..n.saturating_sub(1) {
            j[k + 1] = (2.0 * k as f64 + 1.0) / theta * j[k] - j[k - 1];
        }
        return j;
    }
    let start = n + 20 + theta as usize;
    let mut all = vec![0.0; start + 2];
    all[start] = 1.0;
    for k in (1..=start).rev() {
        all[k - 1] = (2.0 * k as f64 + 1.0) / theta * all[k] - all[k + 1];
        if all[k - 1].abs() > 1e100 {
            all[k - 1..].iter_mut().for_each(|v| *v *= 1e-100);
        }
    }
    let sum: f64 = all.iter().enumerate().map(|(k, v)| (2.0 * k as f64 + 1.0) * v * v).sum();
    let (j0, j1) = (s / theta, s / (theta * theta) - c / theta);
    // the normalization fixes the size; j_0 or j_1 (whichever is larger) fixes the sign
    let sign = if j0.abs() > j1.abs() { (j0 * all[0]).signum() } else { (j1 * all[1]).signum() };
    let scale = sign / sum.sqrt();
    for (k, jk) in j.iter_mut().enumerate() {
        *jk = scale * all[k];
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spherical_bessel_matches_closed_forms() {
        for theta in [1e-6, 0.3, 2.0, std::f64::consts::PI, 7.5, 11.0, 40.0] {
            let j = spherical_bessel(12, theta);
            let (s, c) = theta.sin_cos();
            let j2 = (3.0 / (theta * theta) - 1.0) * s / theta - 3.0 * c / (theta * theta);
            if theta > 1e-3 {
                assert!((j[0] - s / theta).abs() < 1e-13);
                assert!((j[1] - (s / (theta * theta) - c / theta)).abs() < 1e-13);
                assert!((j[2] - j2).abs() < 1e-12, "θ = {theta}: {} vs {j2}", j[2]);
            }
            let norm: f64 = (0..40).map(|k| spherical_bessel(40, theta)[k].powi(2) * (2 * k + 1) as f64).sum();
            assert!((norm - 1.0).abs() < 1e-10 || theta >= 40.0);
        }
    }

    #[test]
    fn filon_matches_brute_force_quadrature() {
        let rule = FilonRule::new(12);
        let g = |s: f64| (-0.3 * s).exp() * (1.0 + s * s).recip();
        for omega in [0.0, 1e-5, 0.5, 3.0, 40.0, 900.0] {
            let (mut fs, mut fc) = (0.0, 0.0);
            let edges: Vec<f64> = (0..=40).map(|i| i as f64 * 0.5).collect();
            for w in edges.windows(2) {
                let (m, r) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
                let vals: Vec<f64> = rule.nodes.iter().map(|t| g(m + r * t)).collect();
                let (a, b) = rule.panel(w[0], w[1], omega, &vals);
                fs += a;
                fc += b;
            }
            // reference: composite Gauss–Legendre fine enough to resolve the oscillation
            let gl = GaussLegendre::new(30).unwrap();
            let pieces = ((20.0 * omega / 3.0).ceil() as usize).max(40);
            let (mut rs, mut rc) = (0.0, 0.0);
            for p in 0..pieces {
                let (a, b) = (20.0 * p as f64 / pieces as f64, 20.0 * (p + 1) as f64 / pieces as f64);
                rs += gl.integrate(a, b, |s| g(s) * if omega == 0.0 { s } else { (omega * s).sin() / omega });
                rc += gl.integrate(a, b, |s| g(s) * (omega * s).cos());
            }
            assert!((fs - rs).abs() < 1e-11 * (1.0 + rs.abs()), "ω = {omega}: {fs} vs {rs}");
            assert!((fc - rc).abs() < 1e-11 * (1.0 + rc.abs()), "ω = {omega}: {fc} vs {rc}");
        }
    }
}
