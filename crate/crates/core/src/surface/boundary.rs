use nalgebra::{Matrix2, Vector2};

use super::{DomainBoundary, GeometryJets};
use crate::jet::{jv_du, jv_dv, jv_value};
use crate::spaceform::Ambient;

/// Geometry of the boundary curve of a patch at one point.
#[derive(Clone, Debug)]
pub struct BoundaryJet {
    pub point: [f64; 2],
    pub position: Ambient,
    pub normal: Ambient,
    /// Outward unit conormal `ν`.
    pub conormal: Ambient,
    /// Unit tangent `T` of the boundary curve.
    pub tangent: Ambient,
    /// Coordinate coefficients of `ν` and `T`.
    pub conormal_coeffs: [f64; 2],
    pub tangent_coeffs: [f64; 2],
    /// Geodesic curvature of the boundary, positive when it bends toward the surface.
    pub geodesic_curvature: f64,
    pub ii_nu_nu: f64,
    pub ii_nu_t: f64,
    /// `|P₁ν|` as a vector norm.
    pub newton_conormal_norm: f64,
    /// `P₁ν` as an ambient vector.
    pub newton_conormal_vector: Ambient,
    pub h1: f64,
    pub component: usize,
}

impl BoundaryJet {
    pub(crate) fn new(gj: &GeometryJets, curve: &DomainBoundary) -> Self {
        let g = gj.metric();
        let ii = gj.second_fundamental();
        let sf = gj.sf;
        let vel = Vector2::new(curve.velocity[0], curve.velocity[1]);
        let speed = (vel.transpose() * g * vel)[(0, 0)].sqrt();
        let t = vel / speed;
        let n = Vector2::new(curve.outward[0], curve.outward[1]);
        let mut nu = n - t * (n.transpose() * g * t)[(0, 0)];
        nu /= (nu.transpose() * g * nu)[(0, 0)].sqrt();

        let xu = jv_value(&gj.xu);
        let xv = jv_value(&gj.xv);
        let xuu = jv_value(&jv_du(&gj.xu));
        let xuv = jv_value(&jv_dv(&gj.xu));
        let xvv = jv_value(&jv_dv(&gj.xv));
        let (a, b) = (vel[0], vel[1]);
        let accel = xuu * (a * a)
            + xuv * (2.0 * a * b)
            + xvv * (b * b)
            + xu * curve.acceleration[0]
            + xv * curve.acceleration[1];
        let nu_amb = xu * nu[0] + xv * nu[1];
        let kg = -sf.inner(&accel, &nu_amb) / (speed * speed);

        let h1 = gj.h1_jet().value();
        let p1 = Matrix2::identity() * (2.0 * h1) - gj.metric_inverse() * ii;
        let pnu = p1 * nu;
        BoundaryJet {
            point: gj.point,
            position: jv_value(&gj.x),
            normal: jv_value(&gj.eta),
            conormal: nu_amb,
            tangent: xu * t[0] + xv * t[1],
            conormal_coeffs: [nu[0], nu[1]],
            tangent_coeffs: [t[0], t[1]],
            geodesic_curvature: kg,
            ii_nu_nu: (nu.transpose() * ii * nu)[(0, 0)],
            ii_nu_t: (nu.transpose() * ii * t)[(0, 0)],
            newton_conormal_norm: (pnu.transpose() * g * pnu)[(0, 0)].max(0.0).sqrt(),
            newton_conormal_vector: xu * pnu[0] + xv * pnu[1],
            h1,
            component: curve.component,
        }
    }

    /// `⟨P₁ν, ν⟩ = 2H₁ − II(ν,ν)`.
    pub fn newton_conormal(&self) -> f64 {
        2.0 * self.h1 - self.ii_nu_nu
    }
}
