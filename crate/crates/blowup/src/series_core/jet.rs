use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value and first two derivatives of a radial profile at one point.
///
/// `u_r`, `u_rr` are derivatives in the profile's own radial variable (the rescaled `R = λ(t) r`
/// for blow-up profiles); `u_t`, `u_tt` are time derivatives taken at fixed physical radius.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub u: f64,
    pub u_r: f64,
    pub u_rr: f64,
    pub u_t: f64,
    pub u_tt: f64,
}

impl Jet2 {
    /// A jet with only radial channels; time channels are zero.
    pub fn radial(u: f64, u_r: f64, u_rr: f64) -> Self {
        Self { u, u_r, u_rr, u_t: 0.0, u_tt: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        [self.u, self.u_r, self.u_rr, self.u_t, self.u_tt].iter().all(|x| x.is_finite())
    }

    /// Reads a jet off a bivariate jet in physical `(r, t)`, with `R = λ r`.
    pub fn from_physical(b: &Bijet, lambda: f64) -> Self {
        Self { u: b.v, u_r: b.dx / lambda, u_rr: b.dxx / (lambda * lambda), u_t: b.dy, u_tt: b.dyy }
    }

    /// Radial Laplacian `∂_RR + (d−1)/R ∂_R` in the jet's own radial variable;
    /// at `R = 0` uses the regular limit `d ∂_RR`.
    pub fn radial_laplacian(&self, d: usize, r: f64) -> f64 {
        if r == 0.0 {
            d as f64 * self.u_rr
        } else {
            self.u_rr + (d as f64 - 1.0) / r * self.u_r
        }
    }

    /// `□u = ∂_tt u − Δu` where the jet's radial variable is `R = λ r`.
    pub fn dalembertian(&self, d: usize, lambda: f64, r_big: f64) -> f64 {
        self.u_tt - lambda * lambda * self.radial_laplacian(d, r_big)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { u: s * self.u, u_r: s * self.u_r, u_rr: s * self.u_rr, u_t: s * self.u_t, u_tt: s * self.u_tt }
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 { u: self.u + o.u, u_r: self.u_r + o.u_r, u_rr: self.u_rr + o.u_rr, u_t: self.u_t + o.u_t, u_tt: self.u_tt + o.u_tt }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        self + o.scale(-1.0)
    }
}

/// Second-order jet of a function of two variables `(x, y)`:
/// value, gradient and Hessian, propagated exactly through arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Bijet {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl Bijet {
    pub const fn constant(v: f64) -> Self {
        Self { v, dx: 0.0, dy: 0.0, dxx: 0.0, dxy: 0.0, dyy: 0.0 }
    }

    pub const fn var_x(x: f64) -> Self {
        Self { v: x, dx: 1.0, dy: 0.0, dxx: 0.0, dxy: 0.0, dyy: 0.0 }
    }

    pub const fn var_y(y: f64) -> Self {
        Self { v: y, dx: 0.0, dy: 1.0, dxx: 0.0, dxy: 0.0, dyy: 0.0 }
    }

    /// Univariate jet in `x` from value and two derivatives.
    pub const fn univariate(v: f64, d1: f64, d2: f64) -> Self {
        Self { v, dx: d1, dy: 0.0, dxx: d2, dxy: 0.0, dyy: 0.0 }
    }

    /// Chain rule for `g = f(self)` given `f(v), f'(v), f''(v)`.
    pub fn apply(&self, f0: f64, f1: f64, f2: f64) -> Self {
        Self {
            v: f0,
            dx: f1 * self.dx,
            dy: f1 * self.dy,
            dxx: f2 * self.dx * self.dx + f1 * self.dxx,
            dxy: f2 * self.dx * self.dy + f1 * self.dxy,
            dyy: f2 * self.dy * self.dy + f1 * self.dyy,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { v: s * self.v, dx: s * self.dx, dy: s * self.dy, dxx: s * self.dxx, dxy: s * self.dxy, dyy: s * self.dyy }
    }

    pub fn powf(&self, p: f64) -> Self {
        let v = self.v;
        if p == 0.0 {
            return Self::constant(1.0);
        }
        let f0 = v.powf(p);
        let f1 = p * v.powf(p - 1.0);
        let f2 = p * (p - 1.0) * v.powf(p - 2.0);
        self.apply(f0, f1, f2)
    }

    pub fn powi(&self, n: i32) -> Self {
        let v = self.v;
        match n {
            0 => Self::constant(1.0),
            1 => *self,
            _ => {
                let nf = n as f64;
                self.apply(v.powi(n), nf * v.powi(n - 1), nf * (nf - 1.0) * v.powi(n - 2))
            }
        }
    }

    pub fn sqrt(&self) -> Self {
        let s = self.v.sqrt();
        self.apply(s, 0.5 / s, -0.25 / (s * self.v))
    }

    pub fn exp(&self) -> Self {
        let e = self.v.exp();
        self.apply(e, e, e)
    }

    pub fn ln(&self) -> Self {
        let v = self.v;
        self.apply(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    pub fn ln_1p(&self) -> Self {
        let w = 1.0 + self.v;
        self.apply(self.v.ln_1p(), 1.0 / w, -1.0 / (w * w))
    }

    pub fn atan(&self) -> Self {
        let v = self.v;
        let q = 1.0 / (1.0 + v * v);
        self.apply(v.atan(), q, -2.0 * v * q * q)
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.apply(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.apply(c, -s, -c)
    }

    pub fn recip(&self) -> Self {
        let v = self.v;
        self.apply(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    /// `|u|^{p−1} u`, the focusing power nonlinearity.
    pub fn signed_pow(&self, p: f64) -> Self {
        let v = self.v;
        let a = v.abs();
        if a == 0.0 {
            // p > 2 in every dimension used here, so f'(0) = f''(0) = 0.
            return Self::constant(0.0);
        }
        let f0 = a.powf(p - 1.0) * v;
        let f1 = p * a.powf(p - 1.0);
        let f2 = p * (p - 1.0) * a.powf(p - 2.0) * v.signum();
        self.apply(f0, f1, f2)
    }

    /// Composes an outer jet `h(X, Y)` (derivatives w.r.t. `X`, `Y`) with inner maps
    /// `X(x, y)`, `Y(x, y)`, giving the jet of `h(X(x,y), Y(x,y))` in `(x, y)`.
    pub fn compose2(h: &Bijet, xm: &Bijet, ym: &Bijet) -> Bijet {
        let dx = h.dx * xm.dx + h.dy * ym.dx;
        let dy = h.dx * xm.dy + h.dy * ym.dy;
        let dxx = h.dxx * xm.dx * xm.dx + 2.0 * h.dxy * xm.dx * ym.dx + h.dyy * ym.dx * ym.dx + h.dx * xm.dxx + h.dy * ym.dxx;
        let dxy = h.dxx * xm.dx * xm.dy + h.dxy * (xm.dx * ym.dy + xm.dy * ym.dx) + h.dyy * ym.dx * ym.dy + h.dx * xm.dxy + h.dy * ym.dxy;
        let dyy = h.dxx * xm.dy * xm.dy + 2.0 * h.dxy * xm.dy * ym.dy + h.dyy * ym.dy * ym.dy + h.dx * xm.dyy + h.dy * ym.dyy;
        Bijet { v: h.v, dx, dy, dxx, dxy, dyy }
    }

    pub fn is_finite(&self) -> bool {
        [self.v, self.dx, self.dy, self.dxx, self.dxy, self.dyy].iter().all(|x| x.is_finite())
    }
}

impl Add for Bijet {
    type Output = Bijet;
    fn add(self, o: Bijet) -> Bijet {
        Bijet {
            v: self.v + o.v,
            dx: self.dx + o.dx,
            dy: self.dy + o.dy,
            dxx: self.dxx + o.dxx,
            dxy: self.dxy + o.dxy,
            dyy: self.dyy + o.dyy,
        }
    }
}

impl Sub for Bijet {
    type Output = Bijet;
    fn sub(self, o: Bijet) -> Bijet {
        Bijet {
            v: self.v - o.v,
            dx: self.dx - o.dx,
            dy: self.dy - o.dy,
            dxx: self.dxx - o.dxx,
            dxy: self.dxy - o.dxy,
            dyy: self.dyy - o.dyy,
        }
    }
}

impl Neg for Bijet {
    type Output = Bijet;
    fn neg(self) -> Bijet {
        self.scale(-1.0)
    }
}

impl Mul for Bijet {
    type Output = Bijet;
    fn mul(self, o: Bijet) -> Bijet {
        Bijet {
            v: self.v * o.v,
            dx: self.dx * o.v + self.v * o.dx,
            dy: self.dy * o.v + self.v * o.dy,
            dxx: self.dxx * o.v + 2.0 * self.dx * o.dx + self.v * o.dxx,
            dxy: self.dxy * o.v + self.dx * o.dy + self.dy * o.dx + self.v * o.dxy,
            dyy: self.dyy * o.v + 2.0 * self.dy * o.dy + self.v * o.dyy,
        }
    }
}

impl Div for Bijet {
    type Output = Bijet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Bijet) -> Bijet {
        self * o.recip()
    }
}

impl Add<f64> for Bijet {
    type Output = Bijet;
    fn add(mut self, c: f64) -> Bijet {
        self.v += c;
        self
    }
}

impl Sub<f64> for Bijet {
    type Output = Bijet;
    fn sub(mut self, c: f64) -> Bijet {
        self.v -= c;
        self
    }
}

impl Mul<f64> for Bijet {
    type Output = Bijet;
    fn mul(self, c: f64) -> Bijet {
        self.scale(c)
    }
}

impl Div<f64> for Bijet {
    type Output = Bijet;
    fn div(self, c: f64) -> Bijet {
        self.scale(1.0 / c)
    }
}

impl Mul<Bijet> for f64 {
    type Output = Bijet;
    fn mul(self, b: Bijet) -> Bijet {
        b.scale(self)
    }
}

impl Add<Bijet> for f64 {
    type Output = Bijet;
    fn add(self, b: Bijet) -> Bijet {
        b + self
    }
}

impl Sub<Bijet> for f64 {
    type Output = Bijet;
    fn sub(self, b: Bijet) -> Bijet {
        (-b) + self
    }
}
