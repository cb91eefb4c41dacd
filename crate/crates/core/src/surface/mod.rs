//! Parametric surface patches in a space form and their pointwise geometry.

mod boundary;
pub mod catalog;
mod fd;
mod geometry;
pub mod rotational;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Jet, JetVec};
use crate::spaceform::{Ambient, SpaceForm};

pub use boundary::BoundaryJet;
pub use fd::FiniteDifferenceMap;
pub use geometry::{verify_newton_identities, GeometryJets, SurfaceJet};

/// A position map evaluated on jets of the parameters.
///
/// Implementations receive `u` and `v` as jets expanded at the query point and
/// return the four ambient coordinates (the fourth is zero in ℝ³).
pub trait SurfaceMap: Send + Sync + fmt::Debug {
    fn eval(&self, u: Jet, v: Jet) -> JetVec;
}

/// Planar parameter region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Domain {
    Disk { center: [f64; 2], radius: f64 },
    Annulus { center: [f64; 2], inner: f64, outer: f64 },
    Rectangle { u: [f64; 2], v: [f64; 2] },
}

/// Local data of the boundary curve of a [`Domain`] through a point.
#[derive(Clone, Copy, Debug)]
pub struct DomainBoundary {
    /// Velocity of a parametrization of the boundary curve.
    pub velocity: [f64; 2],
    /// Acceleration of the same parametrization.
    pub acceleration: [f64; 2],
    /// Outward unit normal in the parameter plane.
    pub outward: [f64; 2],
    /// Index of the boundary component (outer circle 0, inner circle 1; rectangle sides 0..4).
    pub component: usize,
}

impl Domain {
    pub fn disk(radius: f64) -> Self {
        Domain::Disk { center: [0.0, 0.0], radius }
    }

    /// Characteristic length of the domain.
    pub fn scale(&self) -> f64 {
        match *self {
            Domain::Disk { radius, .. } => radius,
            Domain::Annulus { outer, .. } => outer,
            Domain::Rectangle { u, v } => (u[1] - u[0]).max(v[1] - v[0]),
        }
    }

    fn tol(&self) -> f64 {
        1e-9 * self.scale()
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let t = self.tol();
        match *self {
            Domain::Disk { center, radius } => dist(p, center) <= radius + t,
            Domain::Annulus { center, inner, outer } => {
                let r = dist(p, center);
                r >= inner - t && r <= outer + t
            }
            Domain::Rectangle { u, v } => p[0] >= u[0] - t && p[0] <= u[1] + t && p[1] >= v[0] - t && p[1] <= v[1] + t,
        }
    }

    pub fn on_boundary(&self, p: [f64; 2]) -> bool {
        self.boundary_at(p).is_ok() || matches!(self.boundary_at(p), Err(Error::DomainCorner { .. }))
    }

    /// Boundary curve data at `p`, which must lie on the boundary.
    pub fn boundary_at(&self, p: [f64; 2]) -> Result<DomainBoundary> {
        let t = 1e-7 * self.scale();
        let circle = |center: [f64; 2], sign: f64, component: usize| {
            let d = [p[0] - center[0], p[1] - center[1]];
            let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
            DomainBoundary {
                velocity: [-d[1], d[0]],
                acceleration: [-d[0], -d[1]],
                outward: [sign * d[0] / r, sign * d[1] / r],
                component,
            }
        };
        match *self {
            Domain::Disk { center, radius } => {
                if (dist(p, center) - radius).abs() <= t {
                    return Ok(circle(center, 1.0, 0));
                }
            }
            Domain::Annulus { center, inner, outer } => {
                let r = dist(p, center);
                if (r - outer).abs() <= t {
                    return Ok(circle(center, 1.0, 0));
                }
                if (r - inner).abs() <= t {
                    return Ok(circle(center, -1.0, 1));
                }
            }
            Domain::Rectangle { u, v } => {
                let sides = [
                    ((p[1] - v[0]).abs() <= t, [1.0, 0.0], [0.0, -1.0]),
                    ((p[0] - u[1]).abs() <= t, [0.0, 1.0], [1.0, 0.0]),
                    ((p[1] - v[1]).abs() <= t, [-1.0, 0.0], [0.0, 1.0]),
                    ((p[0] - u[0]).abs() <= t, [0.0, -1.0], [-1.0, 0.0]),
                ];
                let hits: Vec<usize> = (0..4).filter(|&k| sides[k].0).collect();
                match hits.len() {
                    0 => {}
                    1 => {
                        let (_, vel, out) = sides[hits[0]];
                        return Ok(DomainBoundary {
                            velocity: vel,
                            acceleration: [0.0, 0.0],
                            outward: out,
                            component: hits[0],
                        });
                    }
                    _ => return Err(Error::DomainCorner { u: p[0], v: p[1] }),
                }
            }
        }
        Err(Error::InvalidArgument(format!("({}, {}) is not on the domain boundary", p[0], p[1])))
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// An immersion `φ: D → M³(c)` of a planar domain.
#[derive(Clone)]
pub struct ParametricPatch {
    sf: SpaceForm,
    domain: Domain,
    map: Arc<dyn SurfaceMap>,
    orientation: f64,
    label: String,
}

impl fmt::Debug for ParametricPatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricPatch")
            .field("c", &self.sf.curvature())
            .field("domain", &self.domain)
            .field("orientation", &self.orientation)
            .field("label", &self.label)
            .finish()
    }
}

impl ParametricPatch {
    pub fn new(sf: SpaceForm, domain: Domain, map: Arc<dyn SurfaceMap>, label: impl Into<String>) -> Self {
        ParametricPatch { sf, domain, map, orientation: 1.0, label: label.into() }
    }

    pub fn space_form(&self) -> SpaceForm {
        self.sf
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn map(&self) -> &Arc<dyn SurfaceMap> {
        &self.map
    }

    pub fn with_orientation(mut self, sign: f64) -> Self {
        self.orientation = if sign < 0.0 { -1.0 } else { 1.0 };
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn flipped(self) -> Self {
        let s = -self.orientation;
        self.with_orientation(s)
    }

    pub fn position(&self, u: f64, v: f64) -> Ambient {
        let x = self.map.eval(Jet::constant(u), Jet::constant(v));
        Ambient::new(x[0].value(), x[1].value(), x[2].value(), x[3].value())
    }

    /// Position jet at `(u, v)` without domain checks.
    pub fn position_jet(&self, u: f64, v: f64) -> JetVec {
        self.map.eval(Jet::var_u(u), Jet::var_v(v))
    }

    /// Jets of the position, normal, metric and second fundamental form.
    pub fn geometry_jets(&self, u: f64, v: f64) -> Result<GeometryJets> {
        if !self.domain.contains([u, v]) {
            return Err(Error::OutsideDomain { u, v });
        }
        GeometryJets::new(self.sf, self.position_jet(u, v), self.orientation, [u, v])
    }

    pub fn evaluate_jet(&self, p: [f64; 2]) -> Result<SurfaceJet> {
        Ok(self.geometry_jets(p[0], p[1])?.surface_jet())
    }

    pub fn evaluate_boundary_jet(&self, p: [f64; 2]) -> Result<BoundaryJet> {
        let curve = self.domain.boundary_at(p)?;
        let gj = self.geometry_jets(p[0], p[1])?;
        Ok(BoundaryJet::new(&gj, &curve))
    }

    /// Regular grid of sample points inside the domain, including boundary points.
    pub fn sample_points(&self, n: usize) -> Vec<[f64; 2]> {
        let n = n.max(2);
        let mut pts = Vec::new();
        let (lo, hi) = match self.domain {
            Domain::Disk { center, radius } | Domain::Annulus { center, outer: radius, .. } => {
                ([center[0] - radius, center[1] - radius], [center[0] + radius, center[1] + radius])
            }
            Domain::Rectangle { u, v } => ([u[0], v[0]], [u[1], v[1]]),
        };
        for i in 0..n {
            for j in 0..n {
                let a = i as f64 / (n - 1) as f64;
                let b = j as f64 / (n - 1) as f64;
                let p = [lo[0] + a * (hi[0] - lo[0]), lo[1] + b * (hi[1] - lo[1])];
                if self.domain.contains(p) {
                    pts.push(p);
                }
            }
        }
        pts
    }

    /// Largest deviation of sampled positions from the model quadric.
    pub fn model_deviation(&self, n: usize) -> f64 {
        self.sample_points(n).iter().map(|p| self.sf.model_residual(&self.position(p[0], p[1]))).fold(0.0, f64::max)
    }
}

/// Chooses the orientation making `κ₂ > 0` (hence `P₁ ≻ 0`) on a sample grid.
pub fn orient_for_positivity(patch: &ParametricPatch) -> Result<ParametricPatch> {
    let mut sign = None;
    for p in patch.sample_points(9) {
        let jet = patch.evaluate_jet(p)?;
        if jet.h2 <= 0.0 {
            return Err(Error::NoPositiveOrientation { h2: jet.h2, u: p[0], v: p[1] });
        }
        let s = if jet.h1 > 0.0 { 1.0 } else { -1.0 };
        match sign {
            None => sign = Some(s),
            Some(prev) if prev != s => {
                return Err(Error::Inadmissible("mean curvature changes sign although H2 > 0".into()))
            }
            _ => {}
        }
    }
    let s = sign.ok_or_else(|| Error::InvalidArgument("empty sample grid".into()))?;
    Ok(patch.clone().with_orientation(patch.orientation() * s))
}

#[cfg(test)]
mod checks;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_membership_and_boundary() {
        let d = Domain::disk(2.0);
        assert!(d.contains([1.0, 1.0]));
        assert!(!d.contains([2.0, 1.0]));
        let b = d.boundary_at([0.0, 2.0]).unwrap();
        assert_eq!(b.outward, [0.0, 1.0]);
        let a = Domain::Annulus { center: [0.0, 0.0], inner: 1.0, outer: 2.0 };
        assert!(!a.contains([0.5, 0.0]));
        assert_eq!(a.boundary_at([1.0, 0.0]).unwrap().outward, [-1.0, 0.0]);
        assert_eq!(a.boundary_at([1.0, 0.0]).unwrap().component, 1);
        let r = Domain::Rectangle { u: [0.0, 1.0], v: [0.0, 1.0] };
        assert!(matches!(r.boundary_at([1.0, 1.0]), Err(Error::DomainCorner { .. })));
        assert_eq!(r.boundary_at([1.0, 0.5]).unwrap().outward, [1.0, 0.0]);
        assert!(r.boundary_at([0.5, 0.5]).is_err());
    }

    #[test]
    fn domain_parses_from_json() {
        let d: Domain = serde_json::from_str(r#"{"kind":"disk","center":[0,0],"radius":1.5}"#).unwrap();
        assert_eq!(d, Domain::disk(1.5));
        assert!(serde_json::from_str::<Domain>(r#"{"kind":"disk","radius":1}"#).is_err());
    }
}
