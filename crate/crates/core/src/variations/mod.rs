//! Variations of immersions, the enclosed volume and the functional `F₁,θ`,
//! with finite-difference audits of their derivative formulas.

mod quadrature;

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::discretize::{AssembledOperators, AssemblyConfig, SupportGeometry, SurfaceMesh};
use crate::error::{Error, Result};
use crate::jet::{jv_add, jv_scale, jv_scale_f, jv_sub, jv_value, Jet, JetVec};
use crate::spaceform::{Ambient, SpaceForm};
use crate::surface::{BoundaryJet, GeometryJets, ParametricPatch, SurfaceMap};

pub use quadrature::{boundary_rule, domain_rule, gauss_legendre};

/// A scalar field on the parameter domain, evaluated on jets.
pub type ScalarField = Arc<dyn Fn(Jet, Jet) -> Jet + Send + Sync>;
/// Coefficients `(a, b)` of the tangent field `a φ_u + b φ_v`.
pub type TangentField = Arc<dyn Fn(Jet, Jet) -> [Jet; 2] + Send + Sync>;

/// Radial nodes per domain rule; angular nodes are twice this.
pub const DEFAULT_QUADRATURE: usize = 40;
const TIME_NODES: usize = 6;

/// Second-order term `t²/2 (κη − |ξ|² x / R²)` keeping the boundary on a
/// ball (or, without the ball term, on a slab) to second order.
#[derive(Clone, Copy, Debug, PartialEq)]
struct SecondOrder {
    ball_radius: Option<f64>,
    kappa: f64,
}

/// The family `Φ(p, t) = exp_φ(p)(t ξ(p))` with `ξ = fη + T`, or in ℝ³ the
/// admissible correction of `φ + tξ` produced by [`VariationSpec::admissible`].
#[derive(Clone)]
pub struct VariationSpec {
    patch: ParametricPatch,
    support: ScalarField,
    offset: f64,
    tangential: Option<TangentField>,
    second_order: Option<SecondOrder>,
    /// Half-width of the time window.
    pub epsilon: f64,
    /// Radial node count of the domain quadrature.
    pub quadrature: usize,
}

impl fmt::Debug for VariationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VariationSpec")
            .field("patch", &self.patch)
            .field("offset", &self.offset)
            .field("tangential", &self.tangential.is_some())
            .field("second_order", &self.second_order)
            .field("epsilon", &self.epsilon)
            .finish()
    }
}

impl VariationSpec {
    /// Normal variation with support function `f`.
    pub fn normal(patch: ParametricPatch, f: impl Fn(Jet, Jet) -> Jet + Send + Sync + 'static) -> Self {
        let epsilon = 1e-2 * patch.domain().scale();
        VariationSpec {
            patch,
            support: Arc::new(f),
            offset: 0.0,
            tangential: None,
            second_order: None,
            epsilon,
            quadrature: DEFAULT_QUADRATURE,
        }
    }

    pub fn constant(patch: ParametricPatch, value: f64) -> Self {
        Self::normal(patch, move |_, _| Jet::constant(value))
    }

    /// Purely tangential variation.
    pub fn tangential(patch: ParametricPatch, field: impl Fn(Jet, Jet) -> [Jet; 2] + Send + Sync + 'static) -> Self {
        Self::normal(patch, |_, _| Jet::constant(0.0)).with_tangential(field)
    }

    pub fn with_tangential(mut self, field: impl Fn(Jet, Jet) -> [Jet; 2] + Send + Sync + 'static) -> Self {
        self.tangential = Some(Arc::new(field));
        self
    }

    pub fn with_quadrature(mut self, n: usize) -> Self {
        self.quadrature = n.max(2);
        self
    }

    pub fn patch(&self) -> &ParametricPatch {
        &self.patch
    }

    pub fn space_form(&self) -> SpaceForm {
        self.patch.space_form()
    }

    pub fn is_normal(&self) -> bool {
        self.tangential.is_none()
    }

    /// Jet of the support function `f = ⟨ξ, η⟩` at `t = 0`.
    pub fn support_jet(&self, u: Jet, v: Jet) -> Jet {
        (self.support)(u, v) - self.offset
    }

    pub fn support_value(&self, p: [f64; 2]) -> f64 {
        self.support_jet(Jet::constant(p[0]), Jet::constant(p[1])).value()
    }

    /// Support function sampled at mesh vertices.
    pub fn support_on_mesh(&self, mesh: &SurfaceMesh) -> Vec<f64> {
        mesh.params.iter().map(|&p| self.support_value(p)).collect()
    }

    /// Subtracts the mean of `f`, making the variation volume-preserving to first order.
    pub fn mean_zero(mut self) -> Result<Self> {
        let int = surface_integral(&self.patch, self.quadrature, |p| self.support_value(p))?;
        let area = surface_integral(&self.patch, self.quadrature, |_| 1.0)?;
        self.offset += int / area;
        Ok(self)
    }

    /// Position and velocity jets of `Φ(·, t)` at `p`, in the variables of `p`.
    fn family_at(&self, p: [f64; 2], t: f64) -> Result<(JetVec, JetVec)> {
        let sf = self.space_form();
        let gj = GeometryJets::new(sf, self.patch.position_jet(p[0], p[1]), self.patch.orientation(), p)?;
        let (u, v) = (Jet::var_u(p[0]), Jet::var_v(p[1]));
        let mut xi = jv_scale(&gj.eta, self.support_jet(u, v));
        if let Some(field) = &self.tangential {
            let [a, b] = field(u, v);
            xi = jv_add(&xi, &jv_add(&jv_scale(&gj.xu, a), &jv_scale(&gj.xv, b)));
        }
        Ok(match self.second_order {
            None if sf.is_flat() => (jv_add(&gj.x, &jv_scale_f(&xi, t)), xi),
            None => (sf.exp_jet(&gj.x, &jv_scale_f(&xi, t)), sf.exp_velocity_jet(&gj.x, &xi, t)),
            Some(so) => {
                let mut acc = jv_scale_f(&gj.eta, so.kappa);
                if let Some(r) = so.ball_radius {
                    let xi2 = sf.inner_jet(&xi, &xi);
                    acc = jv_sub(&acc, &jv_scale(&gj.x, xi2 / (r * r)));
                }
                let pos = jv_add(&jv_add(&gj.x, &jv_scale_f(&xi, t)), &jv_scale_f(&acc, 0.5 * t * t));
                (pos, jv_add(&xi, &jv_scale_f(&acc, t)))
            }
        })
    }

    /// Geometry of `Σ_t` at `p` and the velocity `ξ_t = ∂Φ/∂t`.
    pub fn sample(&self, p: [f64; 2], t: f64) -> Result<(GeometryJets, Ambient)> {
        let (pos, vel) = self.family_at(p, t)?;
        let gj = GeometryJets::new(self.space_form(), pos, self.patch.orientation(), p)?;
        Ok((gj, jv_value(&vel)))
    }

    /// The immersion `φ_t` as a patch over the same domain.
    pub fn surface_at(&self, t: f64) -> ParametricPatch {
        let map = VariedMap { spec: self.clone(), t };
        ParametricPatch::new(
            self.space_form(),
            *self.patch.domain(),
            Arc::new(map),
            format!("{}@t={t}", self.patch.label()),
        )
        .with_orientation(self.patch.orientation())
    }

    /// Adds the second-order term that keeps `∂Σ_t` on the support and
    /// makes `V″(0) = 0`. Requires ℝ³, a normal variation and free boundary.
    pub fn admissible(mut self, cfg: &AssemblyConfig) -> Result<Self> {
        if !self.space_form().is_flat() {
            return Err(Error::Unsupported("admissible families are built in ℝ³ only".into()));
        }
        if !self.is_normal() || !cfg.is_free_boundary() {
            return Err(Error::Unsupported("admissible families need a normal variation with free boundary".into()));
        }
        let ball_radius = match cfg.support {
            SupportGeometry::Ball(b) => Some(b.radius),
            SupportGeometry::Slab(_) => None,
            SupportGeometry::None => {
                return Err(Error::MissingSupport("an admissible family needs a ball or slab support".into()))
            }
        };
        self.second_order = Some(SecondOrder { ball_radius, kappa: 0.0 });
        let h = 1e-3 * self.patch.domain().scale();
        let v2 = (enclosed_volume(&self, h)? + enclosed_volume(&self, -h)?) / (h * h);
        let area = surface_integral(&self.patch, self.quadrature, |_| 1.0)?;
        self.second_order = Some(SecondOrder { ball_radius, kappa: -v2 / area });
        Ok(self)
    }
}

#[derive(Debug)]
struct VariedMap {
    spec: VariationSpec,
    t: f64,
}

impl SurfaceMap for VariedMap {
    fn eval(&self, u: Jet, v: Jet) -> JetVec {
        let p = [u.value(), v.value()];
        match self.spec.family_at(p, self.t) {
            Ok((pos, _)) => pos.map(|x| x.compose(u - p[0], v - p[1])),
            Err(_) => [Jet::constant(f64::NAN); 4],
        }
    }
}

/// `∫_Σ g dμ` by the tensor rule on the parameter domain.
pub fn surface_integral(patch: &ParametricPatch, n: usize, g: impl Fn([f64; 2]) -> f64 + Sync) -> Result<f64> {
    let terms: Vec<f64> = domain_rule(patch.domain(), n)
        .par_iter()
        .map(|&(p, w)| {
            let gj = patch.geometry_jets(p[0], p[1])?;
            Ok(w * gj.metric().determinant().sqrt() * g(p))
        })
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum())
}

/// `V(t) = ∫_{Σ×[0,t]} Φ*dμ_M`, signed so that `V′(0) = ∫ f dμ`: positive
/// when the surface moves along its normal `η`.
pub fn enclosed_volume(var: &VariationSpec, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let sf = var.space_form();
    let times = gauss_legendre(TIME_NODES, 0.0, t);
    let terms: Vec<f64> = domain_rule(var.patch.domain(), var.quadrature)
        .par_iter()
        .map(|&(p, w)| {
            let mut acc = 0.0;
            for &(s, ws) in &times {
                let (gj, vel) = var.sample(p, s)?;
                acc += ws * sf.inner(&jv_value(&gj.eta), &vel) * gj.metric().determinant().sqrt();
            }
            Ok(w * acc)
        })
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum())
}

/// Outward normal of the support at `x` and the distance of `x` from it.
fn support_normal(sf: SpaceForm, support: &SupportGeometry, x: &Ambient) -> Option<(Ambient, f64)> {
    match support {
        SupportGeometry::Ball(b) => {
            let o = sf.origin();
            Some((sf.sphere_outward_normal(&o, x), (sf.distance_from_origin(x) - b.radius).abs()))
        }
        SupportGeometry::Slab(s) => {
            let (up, down) = ((x[2] - s.upper).abs(), (x[2] - s.lower).abs());
            let e3 = Ambient::new(0.0, 0.0, 1.0, 0.0);
            Some(if up <= down { (e3, up) } else { (-e3, down) })
        }
        SupportGeometry::None => None,
    }
}

/// `F₁,θ[Σ_t]` and the largest distance of `∂Σ_t` from the support.
pub fn functional_value(var: &VariationSpec, cfg: &AssemblyConfig, t: f64) -> Result<(f64, f64)> {
    let sf = var.space_form();
    let interior: Vec<f64> = domain_rule(var.patch.domain(), var.quadrature)
        .par_iter()
        .map(|&(p, w)| {
            let (gj, vel) = var.sample(p, t)?;
            let flux = sf.inner(&jv_value(&gj.eta), &vel);
            Ok(-w * gj.h2_jet().value() * flux * gj.metric().determinant().sqrt())
        })
        .collect::<Result<_>>()?;
    let cos = if cfg.is_free_boundary() { 0.0 } else { cfg.theta.cos() };
    let domain = *var.patch.domain();
    let boundary: Vec<(f64, f64)> = boundary_rule(&domain, 2 * var.quadrature)
        .par_iter()
        .map(|&(p, w)| {
            let (gj, vel) = var.sample(p, t)?;
            let curve = domain.boundary_at(p)?;
            let bj = BoundaryJet::new(&gj, &curve);
            let speed = sf.norm(&(jv_value(&gj.xu) * curve.velocity[0] + jv_value(&gj.xv) * curve.velocity[1]));
            let normal = support_normal(sf, &cfg.support, &bj.position);
            let mut field = bj.newton_conormal_vector;
            if cos != 0.0 {
                let (nbar, _) = normal.ok_or_else(|| {
                    Error::MissingSupport("a capillary boundary term needs a ball or slab support".into())
                })?;
                field -= nbar * (bj.newton_conormal_norm * cos);
            }
            Ok((w * speed * sf.inner(&vel, &field), normal.map_or(0.0, |n| n.1)))
        })
        .collect::<Result<_>>()?;
    let deviation = boundary.iter().fold(0.0f64, |m, b| m.max(b.1));
    Ok((interior.iter().sum::<f64>() + boundary.iter().map(|b| b.0).sum::<f64>(), deviation))
}

/// Samples of `F₁,θ`, `V` and `H₂` along a variation.
#[derive(Clone, Debug, Serialize)]
pub struct FunctionalTrace {
    pub t: Vec<f64>,
    pub functional: Vec<f64>,
    pub volume: Vec<f64>,
    /// `H₂` of `Σ_t` at [`FunctionalTrace::sample_points`], one row per `t`.
    pub h2_samples: Vec<Vec<f64>>,
    pub sample_points: Vec<[f64; 2]>,
    /// Largest distance of `∂Σ_t` from the support (zero without support).
    pub boundary_deviation: Vec<f64>,
}

impl FunctionalTrace {
    /// Columns `t,F,V`.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "t,F,V")?;
        for i in 0..self.t.len() {
            writeln!(w, "{:.6e},{:.15e},{:.15e}", self.t[i], self.functional[i], self.volume[i])?;
        }
        Ok(())
    }
}

/// Evaluates the trace on `times`, adding `t = 0` when missing. Samples are
/// sorted by `t`.
pub fn functional_trace(var: &VariationSpec, cfg: &AssemblyConfig, times: &[f64]) -> Result<FunctionalTrace> {
    let mut t: Vec<f64> = times.to_vec();
    if !t.contains(&0.0) {
        t.push(0.0);
    }
    t.sort_by(f64::total_cmp);
    t.dedup();
    let sample_points: Vec<[f64; 2]> = domain_rule(var.patch.domain(), 2).into_iter().map(|p| p.0).collect();
    let rows: Vec<(f64, f64, f64, Vec<f64>)> = t
        .iter()
        .map(|&s| {
            let (f, dev) = functional_value(var, cfg, s)?;
            let v = enclosed_volume(var, s)?;
            let h2 = sample_points
                .iter()
                .map(|&p| Ok(var.sample(p, s)?.0.h2_jet().value()))
                .collect::<Result<Vec<f64>>>()?;
            Ok((f, v, dev, h2))
        })
        .collect::<Result<_>>()?;
    Ok(FunctionalTrace {
        t,
        functional: rows.iter().map(|r| r.0).collect(),
        volume: rows.iter().map(|r| r.1).collect(),
        boundary_deviation: rows.iter().map(|r| r.2).collect(),
        h2_samples: rows.into_iter().map(|r| r.3).collect(),
        sample_points,
    })
}

/// One sample of the `H₂′` audit.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct H2Sample {
    pub point: [f64; 2],
    pub finite_difference: f64,
    /// `L₁f + 2H₁H₂f + 2cH₁f + ξᵀ(H₂)` at `t = 0`.
    pub predicted: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct H2DerivativeAudit {
    pub samples: Vec<H2Sample>,
    pub max_abs_error: f64,
    /// `max_abs_error` over the largest predicted magnitude (zero when both vanish).
    pub max_relative_error: f64,
}

/// Compares the central difference of `H₂(t)` at fixed parameters with the
/// variation formula evaluated from analytic jets.
pub fn h2_derivative_audit(var: &VariationSpec, points: &[[f64; 2]], h: f64) -> Result<H2DerivativeAudit> {
    let c = var.space_form().curvature();
    let samples: Vec<H2Sample> = points
        .par_iter()
        .map(|&p| {
            let plus = var.sample(p, h)?.0.h2_jet().value();
            let minus = var.sample(p, -h)?.0.h2_jet().value();
            let gj = var.patch.geometry_jets(p[0], p[1])?;
            let (u, v) = (Jet::var_u(p[0]), Jet::var_v(p[1]));
            let f = var.support_jet(u, v);
            let h1 = gj.h1_jet().value();
            let h2 = gj.h2_jet();
            let mut predicted = gj.l1(&f) + 2.0 * h1 * (h2.value() + c) * f.value();
            if let Some(field) = &var.tangential {
                let [a, b] = field(u, v);
                predicted += a.value() * h2.d_u() + b.value() * h2.d_v();
            }
            Ok(H2Sample { point: p, finite_difference: (plus - minus) / (2.0 * h), predicted })
        })
        .collect::<Result<_>>()?;
    let max_abs_error = samples.iter().fold(0.0f64, |m, s| m.max((s.finite_difference - s.predicted).abs()));
    let scale = samples.iter().fold(0.0f64, |m, s| m.max(s.predicted.abs()));
    let max_relative_error = if max_abs_error == 0.0 { 0.0 } else { max_abs_error / scale };
    Ok(H2DerivativeAudit { samples, max_abs_error, max_relative_error })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct VolumeAudit {
    pub finite_difference: f64,
    /// `∫ f dμ`.
    pub integral: f64,
    pub relative_error: f64,
}

/// `V′(0)` by central difference against `∫ f dμ`.
pub fn volume_derivative_audit(var: &VariationSpec, h: f64) -> Result<VolumeAudit> {
    let fd = (enclosed_volume(var, h)? - enclosed_volume(var, -h)?) / (2.0 * h);
    let integral = surface_integral(&var.patch, var.quadrature, |p| var.support_value(p))?;
    let relative_error = relative(fd, integral);
    Ok(VolumeAudit { finite_difference: fd, integral, relative_error })
}

/// Result of comparing `d/dt F₁,θ[Σ_t]` at `t = 0` with the index form.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SecondVariationAudit {
    /// `(F(h) − F(−h)) / 2h` along the admissible, volume-preserving family.
    pub finite_difference: f64,
    /// `I₁,θ(f, f)` from the assembled operators.
    pub index_form: f64,
    pub relative_error: f64,
    /// `V″(0)` of the corrected family; zero up to discretization.
    pub volume_second_derivative: f64,
    /// Largest distance of `∂Σ_{±h}` from the support.
    pub boundary_deviation: f64,
}

/// Second-variation audit on a ball or slab support in ℝ³ with free boundary.
/// `f` must have mean zero (see [`VariationSpec::mean_zero`]).
pub fn second_variation_audit(
    var: &VariationSpec,
    mesh: &SurfaceMesh,
    ops: &AssembledOperators,
    h: f64,
) -> Result<SecondVariationAudit> {
    let cfg = ops.config;
    let scale = var.patch.sample_points(9).iter().fold(0.0f64, |m, &p| m.max(var.support_value(p).abs()));
    if scale == 0.0 {
        return Ok(SecondVariationAudit {
            finite_difference: 0.0,
            index_form: 0.0,
            relative_error: 0.0,
            volume_second_derivative: 0.0,
            boundary_deviation: 0.0,
        });
    }
    let mean = surface_integral(&var.patch, var.quadrature, |p| var.support_value(p))?
        / surface_integral(&var.patch, var.quadrature, |_| 1.0)?;
    if mean.abs() > 1e-8 * scale {
        return Err(Error::InvalidArgument(format!("support function has mean {mean:e}, expected zero")));
    }
    let family = var.clone().admissible(&cfg)?;
    let (fp, dp) = functional_value(&family, &cfg, h)?;
    let (fm, dm) = functional_value(&family, &cfg, -h)?;
    let finite_difference = (fp - fm) / (2.0 * h);
    let f = var.support_on_mesh(mesh);
    let index_form = ops.index_form(&f, &f)?;
    let v2 = (enclosed_volume(&family, h)? + enclosed_volume(&family, -h)?) / (h * h);
    Ok(SecondVariationAudit {
        finite_difference,
        index_form,
        relative_error: relative(finite_difference, index_form),
        volume_second_derivative: v2,
        boundary_deviation: dp.max(dm),
    })
}

fn relative(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        0.0
    } else {
        d / a.abs().max(b.abs())
    }
}
