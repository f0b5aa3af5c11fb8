//! Truncated bivariate Taylor jets.
//!
//! A [`Jet`] of order `n` stores the Taylor coefficients `c[a,b]` of a
//! function of `(x, y)` about a base point for all `a + b <= n`, so that
//! `f(x0 + dx, y0 + dy) = sum c[a,b] dx^a dy^b + O(|d|^(n+1))`.
//! Arithmetic is exact on truncated polynomials, which gives derivatives of
//! composite expressions without finite differences.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;

/// Largest supported order.
pub const MAX_ORDER: usize = 6;
const CAP: usize = (MAX_ORDER + 1) * (MAX_ORDER + 2) / 2;

const fn tables() -> ([u8; CAP], [u8; CAP]) {
    let mut pa = [0u8; CAP];
    let mut pb = [0u8; CAP];
    let mut d = 0;
    let mut k = 0;
    while d <= MAX_ORDER {
        let mut b = 0;
        while b <= d {
            pa[k] = (d - b) as u8;
            pb[k] = b as u8;
            k += 1;
            b += 1;
        }
        d += 1;
    }
    (pa, pb)
}

const POWS: ([u8; CAP], [u8; CAP]) = tables();

/// Flat index of the monomial `dx^a dy^b`.
#[inline]
pub const fn idx(a: usize, b: usize) -> usize {
    let d = a + b;
    d * (d + 1) / 2 + b
}

/// Number of coefficients of a jet of order `n`.
#[inline]
pub const fn len(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

const FACT: [f64; MAX_ORDER + 2] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    order: usize,
    c: [f64; CAP],
}

impl Jet {
    pub fn constant(v: f64, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut c = [0.0; CAP];
        c[0] = v;
        Jet { order, c }
    }

    pub fn zero(order: usize) -> Self {
        Self::constant(0.0, order)
    }

    /// The coordinate function `x` about `x0`.
    pub fn var_x(x0: f64, order: usize) -> Self {
        let mut j = Self::constant(x0, order);
        if order > 0 {
            j.c[idx(1, 0)] = 1.0;
        }
        j
    }

    /// The coordinate function `y` about `y0`.
    pub fn var_y(y0: f64, order: usize) -> Self {
        let mut j = Self::constant(y0, order);
        if order > 0 {
            j.c[idx(0, 1)] = 1.0;
        }
        j
    }

    /// Builds a jet from partial derivatives `d[idx(a,b)] = d^a_x d^b_y f`.
    pub fn from_partials(order: usize, d: &[f64]) -> Self {
        let mut j = Self::zero(order);
        for k in 0..len(order) {
            let (a, b) = (POWS.0[k] as usize, POWS.1[k] as usize);
            j.c[k] = d[k] / (FACT[a] * FACT[b]);
        }
        j
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    #[inline]
    pub fn coeff(&self, a: usize, b: usize) -> f64 {
        if a + b > self.order {
            0.0
        } else {
            self.c[idx(a, b)]
        }
    }

    #[inline]
    pub fn set_coeff(&mut self, a: usize, b: usize, v: f64) {
        debug_assert!(a + b <= self.order);
        self.c[idx(a, b)] = v;
    }

    /// `d^a_x d^b_y f` at the base point.
    pub fn partial(&self, a: usize, b: usize) -> f64 {
        self.coeff(a, b) * FACT[a] * FACT[b]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c[..len(self.order)]
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        let mut c = [0.0; CAP];
        c[..len(order)].copy_from_slice(&self.c[..len(order)]);
        Jet { order, c }
    }

    /// Partial derivative in x; the result has order one lower.
    pub fn dx(&self) -> Self {
        assert!(self.order > 0, "cannot differentiate an order-0 jet");
        let order = self.order - 1;
        let mut r = Self::zero(order);
        for k in 0..len(order) {
            let (a, b) = (POWS.0[k] as usize, POWS.1[k] as usize);
            r.c[k] = (a + 1) as f64 * self.c[idx(a + 1, b)];
        }
        r
    }

    /// Partial derivative in y; the result has order one lower.
    pub fn dy(&self) -> Self {
        assert!(self.order > 0, "cannot differentiate an order-0 jet");
        let order = self.order - 1;
        let mut r = Self::zero(order);
        for k in 0..len(order) {
            let (a, b) = (POWS.0[k] as usize, POWS.1[k] as usize);
            r.c[k] = (b + 1) as f64 * self.c[idx(a, b + 1)];
        }
        r
    }

    /// Partial derivative along coordinate `i` (0 = x, 1 = y).
    pub fn d(&self, i: usize) -> Self {
        if i == 0 {
            self.dx()
        } else {
            self.dy()
        }
    }

    /// Evaluates the Taylor polynomial at an offset.
    pub fn eval_offset(&self, dx: f64, dy: f64) -> f64 {
        let mut s = 0.0;
        for k in 0..len(self.order) {
            let (a, b) = (POWS.0[k] as i32, POWS.1[k] as i32);
            s += self.c[k] * dx.powi(a) * dy.powi(b);
        }
        s
    }

    /// `f(self)` given `derivs[k] = f^(k)(self.value())` for `k <= order`.
    pub fn compose(&self, derivs: &[f64]) -> Self {
        let n = self.order;
        let mut delta = *self;
        delta.c[0] = 0.0;
        let mut r = Self::constant(derivs[n] / FACT[n], n);
        for k in (0..n).rev() {
            r = r * delta;
            r.c[0] += derivs[k] / FACT[k];
        }
        r
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose(&[e; MAX_ORDER + 1])
    }

    pub fn ln(&self) -> Self {
        let u = self.value();
        let mut d = [0.0; MAX_ORDER + 1];
        d[0] = u.ln();
        let mut p = 1.0 / u;
        for (k, dk) in d.iter_mut().enumerate().skip(1) {
            *dk = p;
            p *= -(k as f64) / u;
        }
        self.compose(&d)
    }

    /// `self^p` for real `p`; requires a positive value unless `p` is integral.
    pub fn powf(&self, p: f64) -> Self {
        let u = self.value();
        let mut d = [0.0; MAX_ORDER + 1];
        let mut coef = 1.0;
        for (k, dk) in d.iter_mut().enumerate().take(self.order + 1) {
            *dk = coef * u.powf(p - k as f64);
            coef *= p - k as f64;
        }
        self.compose(&d)
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn recip(&self) -> Self {
        let u = self.value();
        let mut d = [0.0; MAX_ORDER + 1];
        let mut p = 1.0 / u;
        for (k, dk) in d.iter_mut().enumerate() {
            *dk = p;
            p *= -((k + 1) as f64) / u;
        }
        self.compose(&d)
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let cyc = [s, c, -s, -c];
        let d: [f64; MAX_ORDER + 1] = std::array::from_fn(|k| cyc[k % 4]);
        self.compose(&d)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let cyc = [c, -s, -c, s];
        let d: [f64; MAX_ORDER + 1] = std::array::from_fn(|k| cyc[k % 4]);
        self.compose(&d)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut r = *self;
        for v in r.c[..len(self.order)].iter_mut() {
            *v *= s;
        }
        r
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(self, o: Jet) -> Jet {
        let order = self.order.min(o.order);
        let mut r = Jet::zero(order);
        for k in 0..len(order) {
            r.c[k] = self.c[k] + o.c[k];
        }
        r
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(self, o: Jet) -> Jet {
        let order = self.order.min(o.order);
        let mut r = Jet::zero(order);
        for k in 0..len(order) {
            r.c[k] = self.c[k] - o.c[k];
        }
        r
    }
}

impl Mul for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, o: Jet) -> Jet {
        let order = self.order.min(o.order);
        let mut r = Jet::zero(order);
        if order == 0 {
            r.c[0] = self.c[0] * o.c[0];
            return r;
        }
        for i in 0..len(order) {
            let ci = self.c[i];
            if ci == 0.0 {
                continue;
            }
            let (ai, bi) = (POWS.0[i] as usize, POWS.1[i] as usize);
            let rest = order - ai - bi;
            for j in 0..len(rest) {
                let (aj, bj) = (POWS.0[j] as usize, POWS.1[j] as usize);
                r.c[idx(ai + aj, bi + bj)] += ci * o.c[j];
            }
        }
        r
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, v: f64) -> Jet {
        self.c[0] += v;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, v: f64) -> Jet {
        self.c[0] -= v;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, v: f64) -> Jet {
        self.scale(v)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, j: Jet) -> Jet {
        j.scale(self)
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, o: Jet) {
        *self = *self + o;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, o: Jet) {
        *self = *self - o;
    }
}

impl MulAssign<f64> for Jet {
    fn mul_assign(&mut self, v: f64) {
        *self = self.scale(v);
    }
}

/// Complex-valued jet `re + i im`, used to push points through Mobius maps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CJet {
    pub re: Jet,
    pub im: Jet,
}

impl CJet {
    /// The identity map `z = x + iy` about `z0`.
    pub fn point(z0: Complex64, order: usize) -> Self {
        CJet {
            re: Jet::var_x(z0.re, order),
            im: Jet::var_y(z0.im, order),
        }
    }

    pub fn constant(z: Complex64, order: usize) -> Self {
        CJet {
            re: Jet::constant(z.re, order),
            im: Jet::constant(z.im, order),
        }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }

    pub fn order(&self) -> usize {
        self.re.order().min(self.im.order())
    }

    pub fn norm_sqr(&self) -> Jet {
        self.re * self.re + self.im * self.im
    }

    pub fn conj(&self) -> Self {
        CJet {
            re: self.re,
            im: -self.im,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        CJet {
            re: self.re.scale(s),
            im: self.im.scale(s),
        }
    }

    pub fn mul_c(&self, z: Complex64) -> Self {
        CJet {
            re: self.re * z.re - self.im * z.im,
            im: self.re * z.im + self.im * z.re,
        }
    }

    pub fn add_c(&self, z: Complex64) -> Self {
        CJet {
            re: self.re + z.re,
            im: self.im + z.im,
        }
    }

    pub fn recip(&self) -> Self {
        let n = self.norm_sqr().recip();
        CJet {
            re: self.re * n,
            im: -(self.im * n),
        }
    }

    pub fn exp(&self) -> Self {
        let m = self.re.exp();
        CJet {
            re: m * self.im.cos(),
            im: m * self.im.sin(),
        }
    }

    /// `(a z + b) / (c z + d)`.
    pub fn mobius(&self, a: f64, b: f64, c: f64, d: f64) -> Self {
        let num = CJet {
            re: self.re * a + b,
            im: self.im * a,
        };
        let den = CJet {
            re: self.re * c + d,
            im: self.im * c,
        };
        num * den.recip()
    }
}

impl Add for CJet {
    type Output = CJet;
    fn add(self, o: CJet) -> CJet {
        CJet {
            re: self.re + o.re,
            im: self.im + o.im,
        }
    }
}

impl Sub for CJet {
    type Output = CJet;
    fn sub(self, o: CJet) -> CJet {
        CJet {
            re: self.re - o.re,
            im: self.im - o.im,
        }
    }
}

impl Mul for CJet {
    type Output = CJet;
    fn mul(self, o: CJet) -> CJet {
        CJet {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
}

impl Div for CJet {
    type Output = CJet;
    fn div(self, o: CJet) -> CJet {
        self * o.recip()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn index_layout() {
        assert_eq!(idx(0, 0), 0);
        assert_eq!(idx(1, 0), 1);
        assert_eq!(idx(0, 1), 2);
        assert_eq!(idx(2, 0), 3);
        assert_eq!(idx(0, MAX_ORDER), CAP - 1);
        for k in 0..CAP {
            assert_eq!(idx(POWS.0[k] as usize, POWS.1[k] as usize), k);
        }
    }

    #[test]
    fn product_rule_on_polynomials() {
        let x = Jet::var_x(0.3, 4);
        let y = Jet::var_y(1.7, 4);
        let f = x * x * y + y * y * y;
        assert_relative_eq!(f.partial(1, 0), 2.0 * 0.3 * 1.7, epsilon = 1e-14);
        assert_relative_eq!(f.partial(0, 1), 0.09 + 3.0 * 1.7 * 1.7, epsilon = 1e-14);
        assert_relative_eq!(f.partial(2, 1), 2.0, epsilon = 1e-14);
        assert_relative_eq!(f.partial(0, 3), 6.0, epsilon = 1e-14);
        assert_eq!(f.partial(1, 3), 0.0);
    }

    #[test]
    fn exp_of_product() {
        // f = exp(x y): f_xy = exp(xy)(1 + xy)
        let (x0, y0) = (0.4, -0.7);
        let f = (Jet::var_x(x0, 3) * Jet::var_y(y0, 3)).exp();
        let e = (x0 * y0).exp();
        assert_relative_eq!(f.partial(1, 1), e * (1.0 + x0 * y0), epsilon = 1e-13);
        assert_relative_eq!(f.partial(2, 0), e * y0 * y0, epsilon = 1e-13);
        assert_relative_eq!(f.partial(2, 1), e * (2.0 * y0 + x0 * y0 * y0), epsilon = 1e-13);
    }

    #[test]
    fn derivative_drops_order() {
        let f = Jet::var_y(2.0, 3).recip();
        let g = f.dy();
        assert_eq!(g.order(), 2);
        assert_relative_eq!(g.value(), -0.25, epsilon = 1e-15);
        assert_relative_eq!(g.partial(0, 1), 2.0 / 8.0, epsilon = 1e-15);
    }

    #[test]
    fn mobius_derivative_matches_closed_form() {
        let z0 = Complex64::new(0.3, 1.2);
        let (a, b, c, d) = (2.0, 1.0, 1.0, 1.0);
        let w = CJet::point(z0, 2).mobius(a, b, c, d);
        let den = c * z0 + d;
        let dw = 1.0 / (den * den);
        assert_relative_eq!(w.re.partial(1, 0), dw.re, epsilon = 1e-14);
        assert_relative_eq!(w.im.partial(1, 0), dw.im, epsilon = 1e-14);
        // Cauchy-Riemann
        assert_relative_eq!(w.re.partial(1, 0), w.im.partial(0, 1), epsilon = 1e-14);
        assert_relative_eq!(w.re.partial(0, 1), -w.im.partial(1, 0), epsilon = 1e-14);
    }

    #[test]
    fn from_partials_round_trip() {
        let f = (Jet::var_x(0.1, 5) + Jet::var_y(0.9, 5) * 2.0).sin();
        let d: Vec<f64> = (0..len(5))
            .map(|k| f.partial(POWS.0[k] as usize, POWS.1[k] as usize))
            .collect();
        let g = Jet::from_partials(5, &d);
        for k in 0..len(5) {
            assert_relative_eq!(f.c[k], g.c[k], epsilon = 1e-14);
        }
    }

    #[test]
    fn taylor_polynomial_matches_function() {
        let f = |x: f64, y: f64| (x * x + 3.0 * y).sqrt() * (x - y).cos();
        let (x0, y0) = (0.5, 1.5);
        let jf = (Jet::var_x(x0, 6) * Jet::var_x(x0, 6) + Jet::var_y(y0, 6) * 3.0).sqrt()
            * (Jet::var_x(x0, 6) - Jet::var_y(y0, 6)).cos();
        let h = 1e-2;
        let err = (jf.eval_offset(h, -h) - f(x0 + h, y0 - h)).abs();
        assert!(err < 1e-13, "{err}");
    }
}
