use std::fmt;

use super::SurfaceMap;
use crate::jet::{Jet, JetVec};
use crate::spaceform::Ambient;

/// Wraps a plain position function and supplies second-order jets by
/// fourth-order centered differences.
pub struct FiniteDifferenceMap<F> {
    f: F,
    step: f64,
}

impl<F> FiniteDifferenceMap<F>
where
    F: Fn(f64, f64) -> Ambient + Send + Sync,
{
    /// `scale` is the characteristic length of the parameter domain.
    pub fn new(f: F, scale: f64) -> Self {
        FiniteDifferenceMap { f, step: 1e-4 * scale }
    }
}

impl<F> fmt::Debug for FiniteDifferenceMap<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteDifferenceMap").field("step", &self.step).finish()
    }
}

const D1: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
const D2: [(f64, f64); 5] = [(-2.0, -1.0), (-1.0, 16.0), (0.0, -30.0), (1.0, 16.0), (2.0, -1.0)];

impl<F> SurfaceMap for FiniteDifferenceMap<F>
where
    F: Fn(f64, f64) -> Ambient + Send + Sync,
{
    fn eval(&self, u: Jet, v: Jet) -> JetVec {
        let (u0, v0) = (u.value(), v.value());
        let h = self.step;
        let at = |a: f64, b: f64| (self.f)(u0 + a * h, v0 + b * h);
        let f0 = at(0.0, 0.0);
        let mut fu = Ambient::zeros();
        let mut fv = Ambient::zeros();
        for &(k, w) in &D1 {
            fu += at(k, 0.0) * w;
            fv += at(0.0, k) * w;
        }
        fu /= 12.0 * h;
        fv /= 12.0 * h;
        let mut fuu = Ambient::zeros();
        let mut fvv = Ambient::zeros();
        for &(k, w) in &D2 {
            fuu += at(k, 0.0) * w;
            fvv += at(0.0, k) * w;
        }
        fuu /= 12.0 * h * h;
        fvv /= 12.0 * h * h;
        let mut fuv = Ambient::zeros();
        for &(a, wa) in &D1 {
            for &(b, wb) in &D1 {
                fuv += at(a, b) * (wa * wb);
            }
        }
        fuv /= 144.0 * h * h;

        let du = u - u0;
        let dv = v - v0;
        let mut out = [Jet::constant(0.0); 4];
        for (k, slot) in out.iter_mut().enumerate() {
            let local = Jet::from_partials(2, |i, j| match (i, j) {
                (0, 0) => f0[k],
                (1, 0) => fu[k],
                (0, 1) => fv[k],
                (2, 0) => fuu[k],
                (1, 1) => fuv[k],
                _ => fvv[k],
            });
            *slot = local.compose(du, dv);
        }
        out
    }
}
