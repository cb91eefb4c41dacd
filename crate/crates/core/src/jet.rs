//! Truncated bivariate Taylor arithmetic.
//!
//! A [`Jet`] holds the Taylor coefficients of a scalar function of two
//! parameters `(u, v)` around a base point, up to total degree three. Surface
//! maps written against `Jet` deliver exact first, second and third partials
//! without finite differencing, which is what the second fundamental form, the
//! Codazzi-type identities and the Brioschi curvature need.
//!
//! Each jet carries the highest degree it is valid to. Differentiation lowers
//! it by one, and binary operations keep the minimum of their operands.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Highest total degree tracked.
pub const MAX_ORDER: u8 = 3;
const LEN: usize = 10;

const fn idx(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

const MONOMIALS: [(usize, usize); LEN] =
    [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)];

const fn product_table() -> [(u8, u8, u8, u8); 35] {
    let mut out = [(0u8, 0u8, 0u8, 0u8); 35];
    let mut n = 0;
    let mut a = 0;
    while a < LEN {
        let mut b = 0;
        while b < LEN {
            let (ia, ja) = MONOMIALS[a];
            let (ib, jb) = MONOMIALS[b];
            let d = ia + ja + ib + jb;
            if d <= 3 {
                out[n] = (a as u8, b as u8, idx(ia + ib, ja + jb) as u8, d as u8);
                n += 1;
            }
            b += 1;
        }
        a += 1;
    }
    out
}

const PRODUCTS: [(u8, u8, u8, u8); 35] = product_table();

#[derive(Clone, Copy, PartialEq)]
pub struct Jet {
    order: u8,
    c: [f64; LEN],
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet").field("order", &self.order).field("coeffs", &&self.c[..]).finish()
    }
}

impl Default for Jet {
    fn default() -> Self {
        Jet::constant(0.0)
    }
}

impl From<f64> for Jet {
    fn from(x: f64) -> Self {
        Jet::constant(x)
    }
}

impl Jet {
    pub fn constant(x: f64) -> Self {
        let mut c = [0.0; LEN];
        c[0] = x;
        Jet { order: MAX_ORDER, c }
    }

    /// The coordinate function `u` expanded at `u0`.
    pub fn var_u(u0: f64) -> Self {
        let mut j = Jet::constant(u0);
        j.c[1] = 1.0;
        j
    }

    /// The coordinate function `v` expanded at `v0`.
    pub fn var_v(v0: f64) -> Self {
        let mut j = Jet::constant(v0);
        j.c[2] = 1.0;
        j
    }

    /// Builds a jet from partial derivatives `d[(i, j)] = ∂^{i+j} f / ∂u^i ∂v^j`.
    pub fn from_partials(order: u8, partial: impl Fn(usize, usize) -> f64) -> Self {
        let mut c = [0.0; LEN];
        for (k, &(i, j)) in MONOMIALS.iter().enumerate() {
            if i + j <= order as usize {
                c[k] = partial(i, j) / (factorial(i) * factorial(j));
            }
        }
        Jet { order: order.min(MAX_ORDER), c }
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Partial derivative `∂^{i+j} f / ∂u^i ∂v^j` at the base point.
    pub fn partial(&self, i: usize, j: usize) -> f64 {
        if i + j > self.order as usize {
            return f64::NAN;
        }
        self.c[idx(i, j)] * factorial(i) * factorial(j)
    }

    pub fn d_u(&self) -> f64 {
        self.partial(1, 0)
    }

    pub fn d_v(&self) -> f64 {
        self.partial(0, 1)
    }

    pub fn with_order(mut self, order: u8) -> Self {
        self.order = self.order.min(order);
        self.truncate();
        self
    }

    fn truncate(&mut self) {
        for (k, &(i, j)) in MONOMIALS.iter().enumerate() {
            if i + j > self.order as usize {
                self.c[k] = 0.0;
            }
        }
    }

    /// Derivative jet with respect to `u`.
    pub fn du(&self) -> Self {
        self.derivative(true)
    }

    /// Derivative jet with respect to `v`.
    pub fn dv(&self) -> Self {
        self.derivative(false)
    }

    fn derivative(&self, along_u: bool) -> Self {
        let mut c = [0.0; LEN];
        if self.order == 0 {
            c[0] = f64::NAN;
            return Jet { order: 0, c };
        }
        for (k, &(i, j)) in MONOMIALS.iter().enumerate() {
            let (p, q, m) = if along_u { (i.wrapping_sub(1), j, i) } else { (i, j.wrapping_sub(1), j) };
            if m >= 1 && p + q < self.order as usize {
                c[idx(p, q)] = m as f64 * self.c[k];
            }
        }
        Jet { order: self.order - 1, c }
    }

    /// Antiderivative in `u` vanishing at the base point. Only meaningful for
    /// jets independent of `v`, which is how the profile ODE uses it.
    pub fn integrate_u(&self) -> Self {
        let mut c = [0.0; LEN];
        let order = (self.order + 1).min(MAX_ORDER);
        for (k, &(i, j)) in MONOMIALS.iter().enumerate() {
            if i + j + 1 <= order as usize {
                c[idx(i + 1, j)] = self.c[k] / (i + 1) as f64;
            }
        }
        Jet { order, c }
    }

    /// Evaluates the truncated polynomial at an offset `(du, dv)`.
    pub fn eval_offset(&self, du: f64, dv: f64) -> f64 {
        MONOMIALS
            .iter()
            .enumerate()
            .filter(|(_, &(i, j))| i + j <= self.order as usize)
            .map(|(k, &(i, j))| self.c[k] * du.powi(i as i32) * dv.powi(j as i32))
            .sum()
    }

    /// Substitutes jets for the local offsets: returns `self(du, dv)` where
    /// `du`, `dv` must vanish at their base point.
    pub fn compose(&self, du: Jet, dv: Jet) -> Jet {
        let mut pu = [Jet::constant(1.0); 4];
        let mut pv = [Jet::constant(1.0); 4];
        for k in 1..4 {
            pu[k] = pu[k - 1] * du;
            pv[k] = pv[k - 1] * dv;
        }
        let mut out = Jet::constant(0.0);
        for (k, &(i, j)) in MONOMIALS.iter().enumerate() {
            if i + j <= self.order as usize && self.c[k] != 0.0 {
                out += pu[i] * pv[j] * self.c[k];
            }
        }
        let order = self.order.min(du.order).min(dv.order);
        out.with_order(order)
    }

    /// Composes with a univariate Taylor polynomial
    /// `t[0] + t[1] δ + t[2] δ² + t[3] δ³`, `δ = self - self.value()`.
    pub fn apply_taylor(&self, t: [f64; 4]) -> Jet {
        let mut delta = *self;
        delta.c[0] = 0.0;
        let mut acc = Jet::constant(t[3]).with_order(self.order);
        for k in (0..3).rev() {
            acc = acc * delta + t[k];
        }
        acc.with_order(self.order)
    }

    /// Composes with a univariate function given its derivatives
    /// `[f, f', f'', f''']` at `self.value()`.
    pub fn apply(&self, d: [f64; 4]) -> Jet {
        self.apply_taylor([d[0], d[1], d[2] / 2.0, d[3] / 6.0])
    }

    pub fn sqrt(self) -> Jet {
        let x = self.value();
        let s = x.sqrt();
        self.apply([s, 0.5 / s, -0.25 / (s * x), 0.375 / (s * x * x)])
    }

    pub fn recip(self) -> Jet {
        let x = self.value();
        let r = 1.0 / x;
        self.apply([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }

    pub fn sin(self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.apply([s, c, -s, -c])
    }

    pub fn cos(self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.apply([c, -s, -c, s])
    }

    pub fn sinh(self) -> Jet {
        let x = self.value();
        let (s, c) = (x.sinh(), x.cosh());
        self.apply([s, c, s, c])
    }

    pub fn cosh(self) -> Jet {
        let x = self.value();
        let (s, c) = (x.sinh(), x.cosh());
        self.apply([c, s, c, s])
    }

    pub fn exp(self) -> Jet {
        let e = self.value().exp();
        self.apply([e, e, e, e])
    }

    pub fn atan(self) -> Jet {
        let x = self.value();
        let q = 1.0 / (1.0 + x * x);
        self.apply([x.atan(), q, -2.0 * x * q * q, (6.0 * x * x - 2.0) * q * q * q])
    }

    pub fn powi(self, n: i32) -> Jet {
        match n {
            0 => Jet::constant(1.0).with_order(self.order),
            1 => self,
            2 => self * self,
            3 => self * self * self,
            _ => {
                let x = self.value();
                let nf = n as f64;
                self.apply([
                    x.powi(n),
                    nf * x.powi(n - 1),
                    nf * (nf - 1.0) * x.powi(n - 2),
                    nf * (nf - 1.0) * (nf - 2.0) * x.powi(n - 3),
                ])
            }
        }
    }

    /// Angle `atan2(y, x)` with the branch fixed by the base point.
    pub fn atan2(y: Jet, x: Jet) -> Jet {
        let (y0, x0) = (y.value(), x.value());
        let theta0 = y0.atan2(x0);
        // rotate so the base direction lies on the positive axis
        let cross = y * x0 - x * y0;
        let dot = x * x0 + y * y0;
        let ratio = cross / dot;
        let mut incr = ratio.atan();
        incr.c[0] = 0.0;
        incr + theta0
    }
}

fn factorial(n: usize) -> f64 {
    match n {
        0 | 1 => 1.0,
        2 => 2.0,
        3 => 6.0,
        _ => (1..=n).map(|k| k as f64).product(),
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let mut c = [0.0; LEN];
        for k in 0..LEN {
            c[k] = self.c[k] + rhs.c[k];
        }
        let mut out = Jet { order: self.order.min(rhs.order), c };
        out.truncate();
        out
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for x in self.c.iter_mut() {
            *x = -*x;
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut c = [0.0; LEN];
        for &(a, b, o, d) in PRODUCTS.iter() {
            if d <= order {
                c[o as usize] += self.c[a as usize] * rhs.c[b as usize];
            }
        }
        Jet { order, c }
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        for x in self.c.iter_mut() {
            *x *= rhs;
        }
        self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self * (1.0 / rhs)
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        rhs + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        -rhs + self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs * self
    }
}

impl Div<Jet> for f64 {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        rhs.recip() * self
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = *self - rhs;
    }
}

impl MulAssign<f64> for Jet {
    fn mul_assign(&mut self, rhs: f64) {
        *self = *self * rhs;
    }
}

/// Ambient vectors with jet components. The fourth slot is zero in the
/// Euclidean model.
pub type JetVec = [Jet; 4];

pub fn jv_zero() -> JetVec {
    [Jet::constant(0.0); 4]
}

pub fn jv_add(a: &JetVec, b: &JetVec) -> JetVec {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

pub fn jv_sub(a: &JetVec, b: &JetVec) -> JetVec {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

pub fn jv_scale(a: &JetVec, s: Jet) -> JetVec {
    [a[0] * s, a[1] * s, a[2] * s, a[3] * s]
}

pub fn jv_scale_f(a: &JetVec, s: f64) -> JetVec {
    [a[0] * s, a[1] * s, a[2] * s, a[3] * s]
}

pub fn jv_du(a: &JetVec) -> JetVec {
    [a[0].du(), a[1].du(), a[2].du(), a[3].du()]
}

pub fn jv_dv(a: &JetVec) -> JetVec {
    [a[0].dv(), a[1].dv(), a[2].dv(), a[3].dv()]
}

pub fn jv_value(a: &JetVec) -> nalgebra::Vector4<f64> {
    nalgebra::Vector4::new(a[0].value(), a[1].value(), a[2].value(), a[3].value())
}

pub fn jv_const(a: &nalgebra::Vector4<f64>) -> JetVec {
    [Jet::constant(a[0]), Jet::constant(a[1]), Jet::constant(a[2]), Jet::constant(a[3])]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(u: f64, v: f64) -> (Jet, Jet) {
        (Jet::var_u(u), Jet::var_v(v))
    }

    #[test]
    fn product_partials_match_closed_form() {
        let (u, v) = at(0.3, -0.7);
        let f = u * u * v + v.sin() * u;
        // f = u^2 v + u sin v
        assert!((f.value() - (0.09 * -0.7 + 0.3 * (-0.7f64).sin())).abs() < 1e-15);
        assert!((f.partial(1, 0) - (2.0 * 0.3 * -0.7 + (-0.7f64).sin())).abs() < 1e-14);
        assert!((f.partial(1, 1) - (2.0 * 0.3 + (-0.7f64).cos())).abs() < 1e-14);
        assert!((f.partial(0, 2) - (-0.3 * (-0.7f64).sin())).abs() < 1e-14);
        assert!((f.partial(2, 1) - 2.0).abs() < 1e-14);
        assert!((f.partial(1, 2) + (-0.7f64).sin()).abs() < 1e-14);
        assert!((f.partial(0, 3) + 0.3 * (-0.7f64).cos()).abs() < 1e-14);
    }

    #[test]
    fn derivative_lowers_order() {
        let (u, v) = at(1.0, 2.0);
        let f = (u * v).exp();
        let fu = f.du();
        assert_eq!(fu.order(), 2);
        assert!((fu.value() - 2.0 * 2f64.exp()).abs() < 1e-12);
        assert!((fu.partial(0, 1) - f.partial(1, 1)).abs() < 1e-12);
        assert!(fu.du().du().du().value().is_nan());
    }

    #[test]
    fn quotient_and_sqrt_agree_with_finite_differences() {
        let g = |u: f64, v: f64| (1.0 + u * u + 0.5 * v * v).sqrt() / (2.0 + u * v);
        let (u, v) = at(0.4, 0.9);
        let j = (1.0 + u * u + v * v * 0.5).sqrt() / (2.0 + u * v);
        let h = 1e-4;
        let fd_uv =
            (g(0.4 + h, 0.9 + h) - g(0.4 + h, 0.9 - h) - g(0.4 - h, 0.9 + h) + g(0.4 - h, 0.9 - h)) / (4.0 * h * h);
        assert!((j.partial(1, 1) - fd_uv).abs() < 1e-6);
        let fd_uu = (g(0.4 + h, 0.9) - 2.0 * g(0.4, 0.9) + g(0.4 - h, 0.9)) / (h * h);
        assert!((j.partial(2, 0) - fd_uu).abs() < 1e-6);
    }

    #[test]
    fn atan2_is_branch_consistent() {
        let (u, v) = at(-1.0, 1e-3);
        let t = Jet::atan2(v, u);
        assert!((t.value() - (1e-3f64).atan2(-1.0)).abs() < 1e-15);
        // d/dv atan2(v,u) = u / (u^2+v^2)
        assert!((t.d_v() - (-1.0 / (1.0 + 1e-6))).abs() < 1e-12);
    }

    #[test]
    fn compose_reproduces_polynomial() {
        let (u, v) = at(0.2, 0.1);
        let f = u * u * u + u * v * 3.0 - v;
        let s = Jet::var_u(0.0);
        let t = Jet::var_u(0.0) * 2.0;
        // f(0.2 + s, 0.1 + 2s) along a line
        let line = f.compose(s, t);
        let direct = |s: f64| {
            let (a, b) = (0.2 + s, 0.1 + 2.0 * s);
            a * a * a + 3.0 * a * b - b
        };
        let h = 1e-3;
        let fd2 = (direct(h) - 2.0 * direct(0.0) + direct(-h)) / (h * h);
        assert!((line.partial(2, 0) - fd2).abs() < 1e-6);
    }
}
