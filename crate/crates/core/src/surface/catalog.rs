//! Built-in surface families.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{orient_for_positivity, Domain, ParametricPatch, SurfaceMap};
use crate::error::{Error, Result};
use crate::jet::{Jet, JetVec};
use crate::spaceform::{acn, cn, sn, Ambient, SpaceForm};

/// Inverse stereographic direction `(2w, 1 − |w|²)/(1 + |w|²)` in a frame.
fn stereo(u: Jet, v: Jet) -> [Jet; 3] {
    let r2 = u * u + v * v;
    let q = (r2 + 1.0).recip();
    [u * q * 2.0, v * q * 2.0, (1.0 - r2) * q]
}

/// Geodesic sphere `w ↦ exp_C(r e(w))` with `e(w)` the stereographic direction in
/// the orthonormal tangent frame `t` at `C`.
#[derive(Debug)]
struct GeodesicSphereMap {
    sf: SpaceForm,
    center: Ambient,
    radius: f64,
    frame: [Ambient; 3],
}

impl SurfaceMap for GeodesicSphereMap {
    fn eval(&self, u: Jet, v: Jet) -> JetVec {
        let s = stereo(u, v);
        let c = self.sf.curvature();
        let (a, b) = if self.sf.is_flat() { (1.0, self.radius) } else { (cn(c, self.radius), sn(c, self.radius)) };
        let mut out = [Jet::constant(0.0); 4];
        for (k, slot) in out.iter_mut().enumerate() {
            let dir = s[0] * self.frame[0][k] + s[1] * self.frame[1][k] + s[2] * self.frame[2][k];
            *slot = dir * b + self.center[k] * a;
        }
        out
    }
}

/// Geometry of a geodesic-sphere cap centered on the `x₃` axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapGeometry {
    /// Distance from the ball center to the sphere center.
    pub center_distance: f64,
    pub radius: f64,
    /// Angle at the sphere center between the axis towards the ball center and the boundary.
    pub half_angle: f64,
}

/// Cap of the geodesic sphere of radius `r` around the point at distance `d`
/// from the origin on the `x₃` axis, of angular radius `half_angle`, facing the origin.
pub fn sphere_cap(sf: SpaceForm, d: f64, r: f64, half_angle: f64, label: &str) -> Result<ParametricPatch> {
    if !(r > 0.0) || !(half_angle > 0.0 && half_angle < std::f64::consts::PI) || !(d >= 0.0) {
        return Err(Error::Inadmissible(format!("cap with d={d}, r={r}, half-angle={half_angle}")));
    }
    let c = sf.curvature();
    if c > 0.0 && r >= sf.convexity_radius() {
        return Err(Error::Inadmissible(format!("sphere radius {r} not below π/(2√c)")));
    }
    let center = sf.point_at(d, [0.0, 0.0, 1.0]);
    let e3 = Ambient::new(0.0, 0.0, 1.0, 0.0);
    let t3 = if sf.is_flat() { -e3 } else { sf.origin() * (c * sn(c, d)) - e3 * cn(c, d) };
    let frame = [Ambient::new(1.0, 0.0, 0.0, 0.0), Ambient::new(0.0, 1.0, 0.0, 0.0), t3];
    let map = GeodesicSphereMap { sf, center, radius: r, frame };
    let patch = ParametricPatch::new(sf, Domain::disk((half_angle / 2.0).tan()), Arc::new(map), label);
    orient_for_positivity(&patch)
}

/// Capillary geometry of a sphere of radius `r` meeting `∂B_R` at contact angle `θ`.
pub fn capillary_cap_geometry(sf: SpaceForm, ball_radius: f64, r: f64, theta: f64) -> Result<CapGeometry> {
    let ball = sf.ball_geometry(ball_radius)?;
    let big_r = ball.radius;
    let c = sf.curvature();
    if !(theta > 0.0 && theta < std::f64::consts::PI) {
        return Err(Error::Inadmissible(format!("contact angle {theta} outside (0, π)")));
    }
    if !(r > 0.0) || (c > 0.0 && r >= sf.convexity_radius()) {
        return Err(Error::Inadmissible(format!("cap sphere radius {r}")));
    }
    // the angle at the contact point between the directions to both centers is π − θ
    let (d, cos_beta) = if sf.is_flat() {
        let d2 = big_r * big_r + r * r + 2.0 * big_r * r * theta.cos();
        let d = d2.max(0.0).sqrt();
        (d, (d2 + r * r - big_r * big_r) / (2.0 * d * r))
    } else {
        let cnd = cn(c, big_r) * cn(c, r) - c * sn(c, big_r) * sn(c, r) * theta.cos();
        if c > 0.0 && cnd.abs() > 1.0 {
            return Err(Error::Inadmissible("no sphere with these radii and angle".into()));
        }
        let d = acn(c, cnd);
        (d, (cn(c, big_r) - cnd * cn(c, r)) / (c * sn(c, d) * sn(c, r)))
    };
    if !(d > 1e-12) || !(cos_beta.abs() < 1.0) {
        return Err(Error::Inadmissible(format!("sphere of radius {r} does not cut ∂B_{big_r} at angle {theta}")));
    }
    Ok(CapGeometry { center_distance: d, radius: r, half_angle: cos_beta.acos() })
}

/// Capillary umbilical cap in the geodesic ball `B_R` with contact angle `θ`.
pub fn capillary_cap(sf: SpaceForm, ball_radius: f64, r: f64, theta: f64) -> Result<ParametricPatch> {
    let geo = capillary_cap_geometry(sf, ball_radius, r, theta)?;
    sphere_cap(sf, geo.center_distance, r, geo.half_angle, "capillary-cap")
}

/// Free-boundary umbilical cap in `B_R`: the sphere of radius `r` meeting `∂B_R` orthogonally.
pub fn cap_in_ball(sf: SpaceForm, ball_radius: f64, r: f64) -> Result<ParametricPatch> {
    let geo = capillary_cap_geometry(sf, ball_radius, r, FRAC_PI_2)?;
    sphere_cap(sf, geo.center_distance, r, geo.half_angle, "cap-in-ball")
}

/// Lower hemisphere of the Euclidean sphere of radius `radius` centered on the plane `x₃ = 0`.
pub fn hemisphere(radius: f64) -> Result<ParametricPatch> {
    sphere_cap(SpaceForm::euclidean(), 0.0, radius, FRAC_PI_2, "hemisphere")
}

#[derive(Debug)]
struct EllipsoidMap {
    axes: [f64; 3],
    lower: bool,
}

impl SurfaceMap for EllipsoidMap {
    fn eval(&self, u: Jet, v: Jet) -> JetVec {
        let s = stereo(u, v);
        let z = if self.lower { -self.axes[2] } else { self.axes[2] };
        [s[0] * self.axes[0], s[1] * self.axes[1], s[2] * z, Jet::constant(0.0)]
    }
}

/// Triaxial ellipsoid in ℝ³ covered by two stereographic patches over the unit disk,
/// split along the equator `x₃ = 0`; the lower one is the mirror image of the
/// upper. Both are oriented by the inward normal.
pub fn ellipsoid(a: f64, b: f64, c: f64) -> Result<[ParametricPatch; 2]> {
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return Err(Error::Inadmissible(format!("ellipsoid axes ({a}, {b}, {c})")));
    }
    let make = |lower: bool| {
        let p = ParametricPatch::new(
            SpaceForm::euclidean(),
            Domain::disk(1.0),
            Arc::new(EllipsoidMap { axes: [a, b, c], lower }),
            if lower { "ellipsoid-lower" } else { "ellipsoid-upper" },
        );
        orient_for_positivity(&p)
    };
    Ok([make(false)?, make(true)?])
}

/// Polynomial graph `x₃ = Σ a·uⁱvʲ` over a domain in ℝ³.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialGraph {
    /// Terms `[i, j, a]`.
    pub terms: Vec<(u32, u32, f64)>,
}

impl SurfaceMap for PolynomialGraph {
    fn eval(&self, u: Jet, v: Jet) -> JetVec {
        let mut z = Jet::constant(0.0);
        for &(i, j, a) in &self.terms {
            z += u.powi(i as i32) * v.powi(j as i32) * a;
        }
        [u, v, z, Jet::constant(0.0)]
    }
}

pub fn graph(poly: PolynomialGraph, domain: Domain, label: &str) -> ParametricPatch {
    ParametricPatch::new(SpaceForm::euclidean(), domain, Arc::new(poly), label)
}

/// Flat disk of the given radius in the plane `x₃ = 0`.
pub fn flat_disk(radius: f64) -> ParametricPatch {
    graph(PolynomialGraph { terms: vec![] }, Domain::disk(radius), "flat-disk")
}

/// Monkey saddle `x₃ = Re((u + iv)³)` over the unit disk.
pub fn monkey_saddle() -> ParametricPatch {
    graph(PolynomialGraph { terms: vec![(3, 0, 1.0), (1, 2, -3.0)] }, Domain::disk(1.0), "monkey-saddle")
}

/// Lifts a patch in ℝ³ to the model of `M³(c)` by `y ↦ (y, √(1/c − |y|²))`
/// (`c > 0`) or `y ↦ (y, √(|y|² − 1/c))` (`c < 0`).
#[derive(Debug)]
struct LiftedMap {
    c: f64,
    inner: Arc<dyn SurfaceMap>,
}

impl SurfaceMap for LiftedMap {
    fn eval(&self, u: Jet, v: Jet) -> JetVec {
        let y = self.inner.eval(u, v);
        let r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
        let w = if self.c > 0.0 { (1.0 / self.c - r2).sqrt() } else { (r2 - 1.0 / self.c).sqrt() };
        [y[0], y[1], y[2], w]
    }
}

pub fn lifted(sf: SpaceForm, patch: &ParametricPatch) -> ParametricPatch {
    if sf.is_flat() {
        return patch.clone();
    }
    let map = LiftedMap { c: sf.curvature(), inner: patch.map().clone() };
    ParametricPatch::new(sf, *patch.domain(), Arc::new(map), format!("{}-lifted", patch.label()))
        .with_orientation(patch.orientation())
}

/// Unit sphere with radius modulated by `1 + ε Re(w³)`: a non-umbilical
/// surface whose boundary is not a line of curvature.
#[derive(Debug)]
struct BumpySphereMap {
    eps: f64,
}

impl SurfaceMap for BumpySphereMap {
    fn eval(&self, u: Jet, v: Jet) -> JetVec {
        let s = stereo(u, v);
        let m = (u * u * u - u * v * v * 3.0) * self.eps + 1.0;
        [s[0] * m, s[1] * m, s[2] * m, Jet::constant(0.0)]
    }
}

pub fn bumpy_sphere(eps: f64, domain_radius: f64) -> Result<ParametricPatch> {
    let p = ParametricPatch::new(
        SpaceForm::euclidean(),
        Domain::disk(domain_radius),
        Arc::new(BumpySphereMap { eps }),
        "bumpy-sphere",
    );
    orient_for_positivity(&p)
}
