use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::jet::{jv_du, jv_dv, jv_scale, jv_value, Jet, JetVec};
use crate::spaceform::{Ambient, SpaceForm};

/// Jets of the first and second order geometry at a parameter point.
///
/// The position carries three orders, so the normal and the metric carry two
/// and the second fundamental form one. That is enough for Christoffel
/// symbols, the Brioschi curvature, `L₁` of the position and the normal, and
/// the gradient of `H₂`.
#[derive(Clone, Debug)]
pub struct GeometryJets {
    pub sf: SpaceForm,
    pub point: [f64; 2],
    pub x: JetVec,
    pub xu: JetVec,
    pub xv: JetVec,
    pub eta: JetVec,
    /// `E, F, G`.
    pub g: [Jet; 3],
    /// `L, M, N` with respect to `eta`.
    pub ii: [Jet; 3],
}

impl GeometryJets {
    pub fn new(sf: SpaceForm, x: JetVec, orientation: f64, point: [f64; 2]) -> Result<Self> {
        let xu = jv_du(&x);
        let xv = jv_dv(&x);
        let g = [sf.inner_jet(&xu, &xu), sf.inner_jet(&xu, &xv), sf.inner_jet(&xv, &xv)];
        let det = g[0].value() * g[2].value() - g[1].value().powi(2);
        let scale = g[0].value() * g[2].value();
        if !(det > 1e-14 * scale) || !det.is_finite() {
            return Err(Error::NonImmersion { u: point[0], v: point[1] });
        }
        let n = sf.normal_direction_jet(&x, &xu, &xv);
        let len = sf.inner_jet(&n, &n).sqrt();
        let eta = jv_scale(&n, len.recip() * orientation);
        let (xuu, xuv, xvv) = (jv_du(&xu), jv_dv(&xu), jv_dv(&xv));
        let ii = [sf.inner_jet(&xuu, &eta), sf.inner_jet(&xuv, &eta), sf.inner_jet(&xvv, &eta)];
        Ok(GeometryJets { sf, point, x, xu, xv, eta, g, ii })
    }

    pub fn metric(&self) -> Matrix2<f64> {
        let [e, f, g] = self.g.map(|j| j.value());
        Matrix2::new(e, f, f, g)
    }

    pub fn metric_inverse(&self) -> Matrix2<f64> {
        let [e, f, g] = self.g.map(|j| j.value());
        let det = e * g - f * f;
        Matrix2::new(g, -f, -f, e) / det
    }

    pub fn second_fundamental(&self) -> Matrix2<f64> {
        let [l, m, n] = self.ii.map(|j| j.value());
        Matrix2::new(l, m, m, n)
    }

    /// `H₂ = det II / det g` as a jet.
    pub fn h2_jet(&self) -> Jet {
        let [e, f, g] = self.g;
        let [l, m, n] = self.ii;
        (l * n - m * m) / (e * g - f * f)
    }

    /// `H₁ = tr(g⁻¹ II)/2` as a jet.
    pub fn h1_jet(&self) -> Jet {
        let [e, f, g] = self.g;
        let [l, m, n] = self.ii;
        (e * n - f * m * 2.0 + g * l) / ((e * g - f * f) * 2.0)
    }

    /// Christoffel symbols `Γ[k][i][j]` of the induced metric.
    pub fn christoffel(&self) -> [[[f64; 2]; 2]; 2] {
        // dg[l][i][j] = ∂_l g_ij
        let comp = |j: &Jet, l: usize| if l == 0 { j.d_u() } else { j.d_v() };
        let mut dg = [[[0.0; 2]; 2]; 2];
        for l in 0..2 {
            dg[l][0][0] = comp(&self.g[0], l);
            dg[l][0][1] = comp(&self.g[1], l);
            dg[l][1][0] = dg[l][0][1];
            dg[l][1][1] = comp(&self.g[2], l);
        }
        let gi = self.metric_inverse();
        let mut gamma = [[[0.0; 2]; 2]; 2];
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let mut s = 0.0;
                    for l in 0..2 {
                        s += gi[(k, l)] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                    }
                    gamma[k][i][j] = 0.5 * s;
                }
            }
        }
        gamma
    }

    /// Coordinate form `T^{ij}` of the Newton tensor, so that `L₁f = T^{ij} Hess_ij f`.
    pub fn newton_coordinates(&self) -> Matrix2<f64> {
        let gi = self.metric_inverse();
        let h1 = self.h1_jet().value();
        gi * (2.0 * h1) - gi * self.second_fundamental() * gi
    }

    /// Coordinate Hessian `∂_ij f − Γ^k_ij ∂_k f` of a jet.
    pub fn hessian(&self, f: &Jet) -> Matrix2<f64> {
        let gamma = self.christoffel();
        let d = [f.d_u(), f.d_v()];
        let second = [[f.partial(2, 0), f.partial(1, 1)], [f.partial(1, 1), f.partial(0, 2)]];
        let mut h = Matrix2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                h[(i, j)] = second[i][j] - gamma[0][i][j] * d[0] - gamma[1][i][j] * d[1];
            }
        }
        h
    }

    /// `L₁f = tr(P₁ Hess f)`.
    pub fn l1(&self, f: &Jet) -> f64 {
        self.newton_coordinates().component_mul(&self.hessian(f)).sum()
    }

    /// `L₁` applied to each ambient coordinate.
    pub fn l1_vec(&self, f: &JetVec) -> Ambient {
        Ambient::new(self.l1(&f[0]), self.l1(&f[1]), self.l1(&f[2]), self.l1(&f[3]))
    }

    /// `Δf = g^{ij} Hess_ij f`.
    pub fn laplacian(&self, f: &Jet) -> f64 {
        self.metric_inverse().component_mul(&self.hessian(f)).sum()
    }

    /// Ambient representative of the surface gradient of `f`.
    pub fn gradient(&self, f: &Jet) -> Ambient {
        let c = self.metric_inverse() * Vector2::new(f.d_u(), f.d_v());
        jv_value(&self.xu) * c[0] + jv_value(&self.xv) * c[1]
    }

    /// Gaussian curvature from the metric alone (Brioschi formula).
    pub fn intrinsic_curvature(&self) -> f64 {
        let [e, f, g] = self.g;
        let (ev, ee, ff, gg) = (e.value(), e, f.value(), g.value());
        let (e_u, e_v) = (ee.d_u(), ee.d_v());
        let (f_u, f_v) = (f.d_u(), f.d_v());
        let (g_u, g_v) = (g.d_u(), g.d_v());
        let e_vv = ee.partial(0, 2);
        let f_uv = f.partial(1, 1);
        let g_uu = g.partial(2, 0);
        let m1 = nalgebra::Matrix3::new(
            -0.5 * e_vv + f_uv - 0.5 * g_uu,
            0.5 * e_u,
            f_u - 0.5 * e_v,
            f_v - 0.5 * g_u,
            ev,
            ff,
            0.5 * g_v,
            ff,
            gg,
        );
        let m2 = nalgebra::Matrix3::new(0.0, 0.5 * e_v, 0.5 * g_u, 0.5 * e_v, ev, ff, 0.5 * g_u, ff, gg);
        let w = ev * gg - ff * ff;
        (m1.determinant() - m2.determinant()) / (w * w)
    }

    /// Coordinatewise residuals of `L₁φ = 2H₂η − 2cH₁φ` and
    /// `L₁η = −2H₁H₂η + 2cH₂φ − ∇H₂` (maximum absolute component).
    pub fn newton_residuals(&self) -> [f64; 2] {
        let c = self.sf.curvature();
        let x = jv_value(&self.x);
        let eta = jv_value(&self.eta);
        let h1 = self.h1_jet().value();
        let h2j = self.h2_jet();
        let h2 = h2j.value();
        let r1 = self.l1_vec(&self.x) - (eta * (2.0 * h2) - x * (2.0 * c * h1));
        let r2 = self.l1_vec(&self.eta) + eta * (2.0 * h1 * h2) - x * (2.0 * c * h2) + self.gradient(&h2j);
        [r1.amax(), r2.amax()]
    }

    /// Pointwise summary.
    pub fn surface_jet(&self) -> SurfaceJet {
        let g = self.metric();
        let ii = self.second_fundamental();
        let gi = self.metric_inverse();
        let shape = gi * ii;
        // Gram–Schmidt frame, as coefficient columns in the (X_u, X_v) basis
        let e1 = Vector2::new(1.0 / g[(0, 0)].sqrt(), 0.0);
        let mut e2 = Vector2::new(-g[(0, 1)] / g[(0, 0)], 1.0);
        e2 /= (e2.transpose() * g * e2)[(0, 0)].sqrt();
        let frame = Matrix2::from_columns(&[e1, e2]);
        let a_on = frame.transpose() * ii * frame;
        let a_on = (a_on + a_on.transpose()) * 0.5;
        let (k1, k2, angle) = sym_eigen(&a_on);
        let h1 = 0.5 * (k1 + k2);
        let h2 = a_on.determinant();
        let newton = Matrix2::identity() * (2.0 * h1) - a_on;
        let dir = frame * Vector2::new(angle.cos(), angle.sin());
        SurfaceJet {
            point: self.point,
            position: jv_value(&self.x),
            normal: jv_value(&self.eta),
            tangent_u: jv_value(&self.xu),
            tangent_v: jv_value(&self.xv),
            metric: g,
            second_fundamental: ii,
            shape,
            frame,
            shape_orthonormal: a_on,
            kappa1: k1,
            kappa2: k2,
            h1,
            h2,
            newton,
            umbilicity_defect: k1 - k2,
            principal_direction: [dir[0], dir[1]],
            area_element: g.determinant().sqrt(),
        }
    }
}

/// Eigenvalues `λ₁ ≥ λ₂` of a symmetric 2×2 matrix and the angle of the `λ₁` eigenvector.
pub(crate) fn sym_eigen(a: &Matrix2<f64>) -> (f64, f64, f64) {
    let m = 0.5 * (a[(0, 0)] + a[(1, 1)]);
    let h = 0.5 * (a[(0, 0)] - a[(1, 1)]);
    let b = 0.5 * (a[(0, 1)] + a[(1, 0)]);
    let disc = h.hypot(b);
    let angle = 0.5 * b.atan2(h);
    (m + disc, m - disc, angle)
}

/// Second order data of an immersion at one point.
#[derive(Clone, Debug)]
pub struct SurfaceJet {
    pub point: [f64; 2],
    pub position: Ambient,
    pub normal: Ambient,
    pub tangent_u: Ambient,
    pub tangent_v: Ambient,
    pub metric: Matrix2<f64>,
    pub second_fundamental: Matrix2<f64>,
    /// Weingarten operator `g⁻¹ II` acting on coordinate vectors.
    pub shape: Matrix2<f64>,
    /// Columns are the coordinate coefficients of an orthonormal tangent frame.
    pub frame: Matrix2<f64>,
    /// Shape operator in the orthonormal frame.
    pub shape_orthonormal: Matrix2<f64>,
    pub kappa1: f64,
    pub kappa2: f64,
    pub h1: f64,
    pub h2: f64,
    /// `P₁ = 2H₁ I − A` in the orthonormal frame.
    pub newton: Matrix2<f64>,
    pub umbilicity_defect: f64,
    /// Coordinate coefficients of a unit `κ₁` direction.
    pub principal_direction: [f64; 2],
    pub area_element: f64,
}

impl SurfaceJet {
    /// Gaussian curvature via the Gauss equation.
    pub fn gauss_curvature(&self, c: f64) -> f64 {
        self.h2 + c
    }

    pub fn newton_coordinates(&self) -> Matrix2<f64> {
        self.frame * self.newton * self.frame.transpose()
    }

    pub fn newton_min_eigenvalue(&self) -> f64 {
        sym_eigen(&self.newton).1
    }
}

/// `(|tr P₁ − 2H₁|, |tr(P₁A) − 2H₂|, |tr(P₁A²) − 2H₁H₂|)`.
pub fn verify_newton_identities(jet: &SurfaceJet) -> [f64; 3] {
    let a = jet.shape_orthonormal;
    let p = jet.newton;
    [
        (p.trace() - 2.0 * jet.h1).abs(),
        ((p * a).trace() - 2.0 * jet.h2).abs(),
        ((p * a * a).trace() - 2.0 * jet.h1 * jet.h2).abs(),
    ]
}
