//! Space-form models `M³(c)` and their elementary geometry.
//!
//! The Euclidean model is ℝ³ (stored as 4-vectors with a zero last slot),
//! the sphere `𝕊³(c)` sits in Euclidean ℝ⁴ with `|x|² = 1/c`, and hyperbolic
//! space `ℍ³(c)` is the upper sheet `⟨x,x⟩ = 1/c, x₄ > 0` of Minkowski ℝ⁴₁.
//! Geodesic balls are centered at [`SpaceForm::origin`].

use std::f64::consts::FRAC_PI_2;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::Vector4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Jet, JetVec};

pub type Ambient = Vector4<f64>;

const TAYLOR_CUTOFF: f64 = 1e-8;

/// Generalized sine `sn_c(ρ)`.
pub fn sn(c: f64, rho: f64) -> f64 {
    if c.abs() < TAYLOR_CUTOFF {
        let r2 = rho * rho;
        rho * (1.0 - c * r2 / 6.0 + c * c * r2 * r2 / 120.0 - c * c * c * r2 * r2 * r2 / 5040.0)
    } else if c > 0.0 {
        let k = c.sqrt();
        (rho * k).sin() / k
    } else {
        let k = (-c).sqrt();
        (rho * k).sinh() / k
    }
}

/// Generalized cosine `cn_c(ρ) = sn_c'(ρ)`.
pub fn cn(c: f64, rho: f64) -> f64 {
    if c.abs() < TAYLOR_CUTOFF {
        let r2 = rho * rho;
        1.0 - c * r2 / 2.0 + c * c * r2 * r2 / 24.0 - c * c * c * r2 * r2 * r2 / 720.0
    } else if c > 0.0 {
        (rho * c.sqrt()).cos()
    } else {
        (rho * (-c).sqrt()).cosh()
    }
}

/// Inverse of `cn_c` on the branch `ρ ≥ 0`.
pub(crate) fn acn(c: f64, value: f64) -> f64 {
    if c > 0.0 {
        value.clamp(-1.0, 1.0).acos() / c.sqrt()
    } else if c < 0.0 {
        value.max(1.0).acosh() / (-c).sqrt()
    } else {
        f64::NAN
    }
}

/// `C(y) = cos√y` and `S(y) = sin√y/√y` (continued analytically to `y < 0`)
/// with their first three derivatives. `cn_c(ρ) = C(cρ²)`, `sn_c(ρ) = ρ S(cρ²)`.
pub(crate) fn cos_sinc_derivs(y: f64) -> ([f64; 4], [f64; 4]) {
    if y.abs() < 0.5 {
        let mut cd = [0.0; 4];
        let mut sd = [0.0; 4];
        // C(y) = Σ (-y)^k/(2k)!, S(y) = Σ (-y)^k/(2k+1)!
        let mut fact2k = 1.0; // (2k)!
        for k in 0..30usize {
            if k > 0 {
                fact2k *= (2 * k - 1) as f64 * (2 * k) as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let ck = sign / fact2k;
            let sk = sign / (fact2k * (2 * k + 1) as f64);
            for m in 0..4usize {
                if k >= m {
                    let falling: f64 = (0..m).map(|i| (k - i) as f64).product();
                    let p = y.powi((k - m) as i32);
                    cd[m] += ck * falling * p;
                    sd[m] += sk * falling * p;
                }
            }
        }
        (cd, sd)
    } else {
        let (c0, s0) = if y > 0.0 {
            let r = y.sqrt();
            (r.cos(), r.sin() / r)
        } else {
            let r = (-y).sqrt();
            (r.cosh(), r.sinh() / r)
        };
        let c1 = -s0 / 2.0;
        let s1 = (c0 - s0) / (2.0 * y);
        let c2 = -s1 / 2.0;
        let s2 = (c1 - 3.0 * s1) / (2.0 * y);
        let c3 = -s2 / 2.0;
        let s3 = (c2 - 5.0 * s2) / (2.0 * y);
        ([c0, c1, c2, c3], [s0, s1, s2, s3])
    }
}

pub(crate) trait Field:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
}
impl<T> Field for T where T: Copy + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Neg<Output = T> {}

fn det3<T: Field>(m: [[T; 3]; 3]) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Euclidean cross product of the first three slots.
pub(crate) fn cross3<T: Field>(a: &[T; 4], b: &[T; 4], zero: T) -> [T; 4] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0], zero]
}

/// Cofactor vector `C_i = det(a, b, d, e_i)` (columns), lowered index.
pub(crate) fn cofactor4<T: Field>(a: &[T; 4], b: &[T; 4], d: &[T; 4]) -> [T; 4] {
    let mut out = [a[0]; 4];
    for (i, slot) in out.iter_mut().enumerate() {
        let rows: Vec<usize> = (0..4).filter(|&r| r != i).collect();
        let m = [
            [a[rows[0]], b[rows[0]], d[rows[0]]],
            [a[rows[1]], b[rows[1]], d[rows[1]]],
            [a[rows[2]], b[rows[2]], d[rows[2]]],
        ];
        // expansion along the last column, row i (0-based), column 3
        let minor = det3(m);
        *slot = if (i + 3) % 2 == 0 { minor } else { -minor };
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceForm {
    c: f64,
}

impl SpaceForm {
    pub fn new(c: f64) -> Self {
        SpaceForm { c }
    }

    pub fn euclidean() -> Self {
        SpaceForm { c: 0.0 }
    }

    pub fn curvature(&self) -> f64 {
        self.c
    }

    pub fn is_flat(&self) -> bool {
        self.c == 0.0
    }

    pub fn model_dim(&self) -> usize {
        if self.is_flat() {
            3
        } else {
            4
        }
    }

    pub fn signature(&self) -> Vec<f64> {
        match self.model_dim() {
            3 => vec![1.0; 3],
            _ if self.c > 0.0 => vec![1.0; 4],
            _ => vec![1.0, 1.0, 1.0, -1.0],
        }
    }

    fn sig4(&self) -> f64 {
        if self.c < 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    /// Signed inner product on model-dimension slices.
    pub fn ambient_inner(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        let n = self.model_dim();
        for w in [u, v] {
            if w.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: w.len() });
            }
        }
        Ok(self.signature().iter().zip(u.iter().zip(v)).map(|(s, (a, b))| s * a * b).sum())
    }

    pub fn inner(&self, u: &Ambient, v: &Ambient) -> f64 {
        u[0] * v[0] + u[1] * v[1] + u[2] * v[2] + self.sig4() * u[3] * v[3]
    }

    pub fn norm(&self, u: &Ambient) -> f64 {
        self.inner(u, u).max(0.0).sqrt()
    }

    pub(crate) fn inner_jet(&self, u: &JetVec, v: &JetVec) -> Jet {
        let s = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
        if self.is_flat() {
            s
        } else {
            s + u[3] * v[3] * self.sig4()
        }
    }

    /// Metric-adapted generalized cross product on model-dimension slices:
    /// the vector `w` with `⟨w, z⟩ = det(vectors…, z)` for every `z`.
    pub fn cross_product(&self, vectors: &[Vec<f64>]) -> Result<Vec<f64>> {
        let n = self.model_dim();
        if vectors.len() != n - 1 {
            return Err(Error::CrossProductArity { dim: n, expected: n - 1, found: vectors.len() });
        }
        let mut pads = Vec::with_capacity(vectors.len());
        for v in vectors {
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: v.len() });
            }
            let mut a = [0.0; 4];
            a[..n].copy_from_slice(v);
            pads.push(a);
        }
        let w =
            if n == 3 { cross3(&pads[0], &pads[1], 0.0) } else { self.raise(cofactor4(&pads[0], &pads[1], &pads[2])) };
        Ok(w[..n].to_vec())
    }

    fn raise<T: Field>(&self, mut w: [T; 4]) -> [T; 4] {
        if self.c < 0.0 {
            w[3] = -w[3];
        }
        w
    }

    /// Triple cross product `a ∧ b ∧ d` in the four-dimensional models.
    pub fn cross4(&self, a: &Ambient, b: &Ambient, d: &Ambient) -> Ambient {
        let w = self.raise(cofactor4(&arr(a), &arr(b), &arr(d)));
        Ambient::from(w)
    }

    pub(crate) fn cross4_jet(&self, a: &JetVec, b: &JetVec, d: &JetVec) -> JetVec {
        self.raise(cofactor4(a, b, d))
    }

    /// Surface normal direction (unnormalized) from position and partials.
    /// Agrees with `X_u × X_v` in the flat model and with its limit as `c → 0`.
    pub(crate) fn normal_direction_jet(&self, x: &JetVec, xu: &JetVec, xv: &JetVec) -> JetVec {
        if self.is_flat() {
            cross3(xu, xv, Jet::constant(0.0))
        } else {
            let w = self.cross4_jet(xu, xv, x);
            let s = self.c.abs().sqrt();
            [-w[0] * s, -w[1] * s, -w[2] * s, -w[3] * s]
        }
    }

    /// Center of geodesic balls: the origin of ℝ³ or the pole `e₄/√|c|`.
    pub fn origin(&self) -> Ambient {
        if self.is_flat() {
            Ambient::zeros()
        } else {
            Ambient::new(0.0, 0.0, 0.0, 1.0 / self.c.abs().sqrt())
        }
    }

    /// Deviation of `x` from the model quadric (zero for valid points).
    pub fn model_residual(&self, x: &Ambient) -> f64 {
        if self.is_flat() {
            x[3].abs()
        } else {
            let r = (self.inner(x, x) - 1.0 / self.c).abs() * self.c.abs();
            if self.c < 0.0 && x[3] <= 0.0 {
                f64::INFINITY
            } else {
                r
            }
        }
    }

    /// Geodesic exponential `exp_x(v)` for `v` tangent to the model at `x`.
    pub fn exp(&self, x: &Ambient, v: &Ambient) -> Ambient {
        let len2 = self.inner(v, v);
        let (cd, sd) = cos_sinc_derivs(self.c * len2);
        if self.is_flat() {
            x + v
        } else {
            x * cd[0] + v * sd[0]
        }
    }

    /// Jet version of [`SpaceForm::exp`].
    pub(crate) fn exp_jet(&self, x: &JetVec, v: &JetVec) -> JetVec {
        if self.is_flat() {
            return [x[0] + v[0], x[1] + v[1], x[2] + v[2], x[3] + v[3]];
        }
        let y = self.inner_jet(v, v) * self.c;
        let (cd, sd) = cos_sinc_derivs(y.value());
        let cjet = y.apply(cd);
        let sjet = y.apply(sd);
        [x[0] * cjet + v[0] * sjet, x[1] * cjet + v[1] * sjet, x[2] * cjet + v[2] * sjet, x[3] * cjet + v[3] * sjet]
    }

    /// `d/dt exp_x(t v)` evaluated at `t`.
    pub(crate) fn exp_velocity_jet(&self, x: &JetVec, v: &JetVec, t: f64) -> JetVec {
        if self.is_flat() {
            return *v;
        }
        // d/dt [C(c t²|v|²) x + t S(c t²|v|²) v]
        let l2 = self.inner_jet(v, v);
        let y = l2 * (self.c * t * t);
        let (cd, sd) = cos_sinc_derivs(y.value());
        let c1 = y.apply([cd[1], cd[2], cd[3], 0.0]).with_order(y.order().min(2));
        let s0 = y.apply(sd);
        let s1 = y.apply([sd[1], sd[2], sd[3], 0.0]).with_order(y.order().min(2));
        let dy = l2 * (2.0 * self.c * t);
        let ax = c1 * dy;
        let av = s0 + s1 * dy * t;
        [x[0] * ax + v[0] * av, x[1] * ax + v[1] * av, x[2] * ax + v[2] * av, x[3] * ax + v[3] * av]
    }

    /// Geodesic distance from [`SpaceForm::origin`].
    pub fn distance_from_origin(&self, x: &Ambient) -> f64 {
        if self.is_flat() {
            x.xyz().norm()
        } else {
            let cnd = self.c * self.inner(x, &self.origin());
            acn(self.c, cnd)
        }
    }

    /// Point at geodesic distance `rho` from the origin in the unit direction `dir ∈ ℝ³`.
    pub fn point_at(&self, rho: f64, dir: [f64; 3]) -> Ambient {
        let s = sn(self.c, rho);
        let o = self.origin();
        let base = Ambient::new(s * dir[0], s * dir[1], s * dir[2], 0.0);
        if self.is_flat() {
            base
        } else {
            base + o * cn(self.c, rho)
        }
    }

    /// Outward unit normal at `x` of the geodesic sphere through `x` around `center`.
    pub fn sphere_outward_normal(&self, center: &Ambient, x: &Ambient) -> Ambient {
        let v = if self.is_flat() {
            x - center
        } else {
            // tangent at x pointing away from the center
            let toward = center - x * (self.inner(center, x) / self.inner(x, x));
            -toward
        };
        v / self.norm(&v)
    }

    /// Radius below which geodesic balls are convex.
    pub fn convexity_radius(&self) -> f64 {
        if self.c > 0.0 {
            FRAC_PI_2 / self.c.sqrt()
        } else {
            f64::INFINITY
        }
    }

    pub fn ball_geometry(&self, radius: f64) -> Result<BallGeometry> {
        let limit = self.convexity_radius();
        if !(radius > 0.0 && radius < limit) {
            return Err(Error::NonConvexBall { radius, limit });
        }
        let ratio = cn(self.c, radius) / sn(self.c, radius);
        Ok(BallGeometry { radius, boundary_second_fundamental: -ratio, boundary_geodesic_curvature: ratio })
    }
}

fn arr(a: &Ambient) -> [f64; 4] {
    [a[0], a[1], a[2], a[3]]
}

/// Boundary data of a geodesic ball `B_R` centered at the model origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallGeometry {
    pub radius: f64,
    /// Second fundamental form of `∂B_R` w.r.t. its outward normal, on unit vectors.
    pub boundary_second_fundamental: f64,
    /// Geodesic curvature of a free-boundary curve on `∂B_R`.
    pub boundary_geodesic_curvature: f64,
}

/// Slab between the planes `x₃ = lower` and `x₃ = upper` in ℝ³.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlabGeometry {
    pub lower: f64,
    pub upper: f64,
}
