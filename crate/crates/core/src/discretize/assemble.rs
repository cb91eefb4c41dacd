use std::f64::consts::FRAC_PI_2;

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SurfaceMesh;
use crate::error::{Error, Result};
use crate::spaceform::{BallGeometry, SlabGeometry, SpaceForm};
use crate::sparse::CsrMatrix;
use crate::surface::BoundaryJet;

/// The support `∂Ω` on which the boundary of the surface rests.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SupportGeometry {
    Ball(BallGeometry),
    Slab(SlabGeometry),
    /// No support: the boundary term is dropped (natural Neumann condition).
    None,
}

impl SupportGeometry {
    /// `(II_∂Ω)_η̄(ν̄, ν̄)`; the support is totally umbilical in both cases.
    pub fn second_fundamental(&self) -> Option<f64> {
        match self {
            SupportGeometry::Ball(b) => Some(b.boundary_second_fundamental),
            SupportGeometry::Slab(_) => Some(0.0),
            SupportGeometry::None => None,
        }
    }
}

/// Replacement for the Newton tensor, for audits against scalar operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TensorChoice {
    #[default]
    Newton,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssemblyConfig {
    /// Contact angle in `(0, π)`.
    pub theta: f64,
    pub support: SupportGeometry,
    /// 1: vertex (lumped) rule, 2: edge-midpoint rule exact for quadratics.
    #[serde(default = "default_order")]
    pub quadrature_order: u8,
    /// Refuse to assemble when `P₁` is not positive definite at some vertex.
    #[serde(default)]
    pub require_definite: bool,
    #[serde(default)]
    pub tensor: TensorChoice,
    /// Multiplies the potential `q = 2H₁(H₂ + c)`.
    #[serde(default = "one")]
    pub potential_scale: f64,
    /// Added to `α_θ` at every boundary vertex.
    #[serde(default)]
    pub robin_shift: f64,
    /// Replace `|P₁ν|` by one in the boundary weight.
    #[serde(default)]
    pub unit_boundary_weight: bool,
}

fn default_order() -> u8 {
    2
}

fn one() -> f64 {
    1.0
}

impl AssemblyConfig {
    pub fn free_boundary(support: SupportGeometry) -> Self {
        AssemblyConfig {
            theta: FRAC_PI_2,
            support,
            quadrature_order: 2,
            require_definite: false,
            tensor: TensorChoice::Newton,
            potential_scale: 1.0,
            robin_shift: 0.0,
            unit_boundary_weight: false,
        }
    }

    pub fn is_free_boundary(&self) -> bool {
        (self.theta - FRAC_PI_2).abs() < 1e-15
    }

    fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < std::f64::consts::PI) {
            return Err(Error::InvalidArgument(format!("contact angle {} outside (0, π)", self.theta)));
        }
        if !(1..=2).contains(&self.quadrature_order) {
            return Err(Error::Unsupported(format!("quadrature order {}", self.quadrature_order)));
        }
        Ok(())
    }
}

/// `α_θ = csc θ (II_∂Ω)(ν̄,ν̄) − cot θ II_Σ(ν,ν)`.
pub fn robin_coefficient(cfg: &AssemblyConfig, bjet: &BoundaryJet) -> Result<f64> {
    cfg.validate()?;
    let ii_support = cfg
        .support
        .second_fundamental()
        .ok_or_else(|| Error::MissingSupport("the Robin coefficient needs a ball or slab support".into()))?;
    let cot = if cfg.is_free_boundary() { 0.0 } else { cfg.theta.cos() / cfg.theta.sin() };
    Ok(ii_support / cfg.theta.sin() - cot * bjet.ii_nu_nu)
}

/// Sparse forms of the 1-index form `I(f,f) = fᵀ(K − Q + B)f`.
#[derive(Clone, Debug)]
pub struct AssembledOperators {
    /// `∫⟨P₁∇u, ∇v⟩`.
    pub stiffness: CsrMatrix,
    /// `∫uv`.
    pub mass: CsrMatrix,
    /// `∫ q uv` with `q = 2H₁(H₂ + c)`.
    pub potential: CsrMatrix,
    /// `∮ |P₁ν| α_θ uv`.
    pub boundary: CsrMatrix,
    /// `(vertex, α_θ)` for every boundary vertex.
    pub alpha_values: Vec<(usize, f64)>,
    /// `P₁ ≻ 0` at every vertex.
    pub p1_definite: bool,
    pub min_newton_eigenvalue: f64,
    /// Vertex attaining `min_newton_eigenvalue`.
    pub min_newton_vertex: usize,
    /// Longest mesh edge, in ambient distance.
    pub mesh_size: f64,
    /// Largest `|II(ν,T)|` on the boundary: zero when `ν` is principal, which is
    /// when `|P₁ν|` is the eigenvalue the index form presumes.
    pub conormal_principal_defect: f64,
    /// `K − Q + B`.
    pub system: CsrMatrix,
    pub config: AssemblyConfig,
}

impl AssembledOperators {
    pub fn dim(&self) -> usize {
        self.mass.dim()
    }

    /// `I₁,θ(f₁, f₂) = f₁ᵀ(K − Q + B)f₂`.
    pub fn index_form(&self, f1: &[f64], f2: &[f64]) -> Result<f64> {
        let n = self.dim();
        for f in [f1, f2] {
            if f.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: f.len() });
            }
        }
        Ok(self.system.bilinear(f1, f2))
    }

    /// `∫ f dμ`.
    pub fn integral(&self, f: &[f64]) -> f64 {
        let ones = vec![1.0; self.dim()];
        self.mass.bilinear(&ones, f)
    }

    pub fn area(&self) -> f64 {
        self.integral(&vec![1.0; self.dim()])
    }

    /// Boundary length `∮ 1` with unit weight.
    pub fn boundary_length(mesh: &SurfaceMesh) -> f64 {
        mesh.boundary_edges.iter().map(|e| mesh.chord(e[0], e[1])).sum()
    }
}

/// Gradients of the three barycentric basis functions of a parameter triangle.
fn basis_gradients(p: [[f64; 2]; 3]) -> ([Vector2<f64>; 3], f64) {
    let (a, b, c) = (p[0], p[1], p[2]);
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let g = |q: [f64; 2], r: [f64; 2]| Vector2::new(q[1] - r[1], r[0] - q[0]) / det;
    ([g(b, c), g(c, a), g(a, b)], 0.5 * det.abs())
}

/// `∫ u φ_a φ_b` for one element, with `density = u √g` given at the vertices.
/// Order 1 lumps at the vertices; otherwise edge midpoints with linear interpolation.
fn mass_entry(order: u8, t: [usize; 3], a: usize, b: usize, area: f64, density: &[f64]) -> f64 {
    if order == 1 {
        return if a == b { area / 3.0 * density[t[a]] } else { 0.0 };
    }
    let mut m = 0.0;
    for e in 0..3 {
        let (i, j) = (e, (e + 1) % 3);
        let phi = |x: usize| if x == i || x == j { 0.5 } else { 0.0 };
        m += phi(a) * phi(b) * area / 3.0 * 0.5 * (density[t[i]] + density[t[j]]);
    }
    m
}

/// `∫ w uv dμ` for a vertex weight `w`, with the same quadrature as the mass matrix.
pub fn weighted_mass(mesh: &SurfaceMesh, weight: &[f64], quadrature_order: u8) -> Result<CsrMatrix> {
    let n = mesh.vertex_count();
    if weight.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: weight.len() });
    }
    let density: Vec<f64> = mesh.jets.iter().zip(weight).map(|(j, w)| j.area_element * w).collect();
    let triplets: Vec<(usize, usize, f64)> = mesh
        .triangles
        .par_iter()
        .flat_map_iter(|t| {
            let (_, area) = basis_gradients(t.map(|k| mesh.params[k]));
            let density = &density;
            (0..9).map(move |ab| {
                let (a, b) = (ab / 3, ab % 3);
                (t[a], t[b], mass_entry(quadrature_order, *t, a, b, area, density))
            })
        })
        .collect();
    Ok(CsrMatrix::from_triplets(n, &triplets))
}

/// Assembles the operators with piecewise-linear elements in parameter space.
///
/// The element tensor is the mean of the vertex values of `T √g`, where `T`
/// is the coordinate form of `P₁`. Mass and potential use the edge-midpoint
/// rule with linearly interpolated densities; boundary terms use two-point
/// Gauss on each boundary edge with chord length as arclength.
pub fn assemble(mesh: &SurfaceMesh, sf: SpaceForm, cfg: &AssemblyConfig) -> Result<AssembledOperators> {
    cfg.validate()?;
    let n = mesh.vertex_count();
    let c = sf.curvature();
    let mut min_eig = f64::INFINITY;
    let mut worst_vertex = 0;
    for (v, j) in mesh.jets.iter().enumerate() {
        let e = j.newton_min_eigenvalue();
        if e < min_eig {
            min_eig = e;
            worst_vertex = v;
        }
    }
    let p1_definite = min_eig > 0.0;
    if cfg.require_definite && !p1_definite {
        return Err(Error::IndefiniteNewtonTensor { vertex: worst_vertex, min_eig });
    }

    let tensor: Vec<Matrix2<f64>> = mesh
        .jets
        .iter()
        .map(|j| {
            let t = match cfg.tensor {
                TensorChoice::Newton => j.newton_coordinates(),
                TensorChoice::Identity => j.metric.try_inverse().unwrap_or_else(Matrix2::zeros),
            };
            t * j.area_element
        })
        .collect();
    let density: Vec<f64> = mesh.jets.iter().map(|j| j.area_element).collect();
    let dq: Vec<f64> =
        mesh.jets.iter().map(|j| j.area_element * cfg.potential_scale * 2.0 * j.h1 * (j.h2 + c)).collect();

    let locals: Vec<[(usize, usize, f64, f64, f64); 9]> = mesh
        .triangles
        .par_iter()
        .map(|t| {
            let p = t.map(|k| mesh.params[k]);
            let (grads, area) = basis_gradients(p);
            let tmean = (tensor[t[0]] + tensor[t[1]] + tensor[t[2]]) / 3.0;
            let mut out = [(0, 0, 0.0, 0.0, 0.0); 9];
            for a in 0..3 {
                for b in 0..3 {
                    let k = area * (grads[a].transpose() * tmean * grads[b])[(0, 0)];
                    let m = mass_entry(cfg.quadrature_order, *t, a, b, area, &density);
                    let qq = mass_entry(cfg.quadrature_order, *t, a, b, area, &dq);
                    out[3 * a + b] = (t[a], t[b], k, m, qq);
                }
            }
            out
        })
        .collect();
    let mut tk = Vec::with_capacity(9 * locals.len());
    let mut tm = Vec::with_capacity(9 * locals.len());
    let mut tq = Vec::with_capacity(9 * locals.len());
    for l in &locals {
        for &(i, j, k, m, qq) in l {
            tk.push((i, j, k));
            tm.push((i, j, m));
            tq.push((i, j, qq));
        }
    }

    let mut alpha_values = Vec::new();
    let mut weight = vec![0.0; n];
    let mut defect: f64 = 0.0;
    for v in 0..n {
        if let Some(b) = &mesh.boundary_jets[v] {
            defect = defect.max(b.ii_nu_t.abs());
            if cfg.support != SupportGeometry::None {
                let alpha = robin_coefficient(cfg, b)? + cfg.robin_shift;
                alpha_values.push((v, alpha));
                let norm = match (cfg.unit_boundary_weight, cfg.tensor) {
                    (true, _) | (_, TensorChoice::Identity) => 1.0,
                    _ => b.newton_conormal_norm,
                };
                weight[v] = norm * alpha;
            }
        }
    }
    let mut tb = Vec::new();
    if cfg.support != SupportGeometry::None {
        let gp = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
        for e in &mesh.boundary_edges {
            let (a, b) = (e[0], e[1]);
            let len = mesh.chord(a, b);
            let mut local = [[0.0; 2]; 2];
            for &s in &gp {
                let phi = [1.0 - s, s];
                let w = phi[0] * weight[a] + phi[1] * weight[b];
                for x in 0..2 {
                    for y in 0..2 {
                        local[x][y] += 0.5 * len * w * phi[x] * phi[y];
                    }
                }
            }
            let idx = [a, b];
            for x in 0..2 {
                for y in 0..2 {
                    tb.push((idx[x], idx[y], local[x][y]));
                }
            }
        }
    }
    let stiffness = CsrMatrix::from_triplets(n, &tk);
    let mass = CsrMatrix::from_triplets(n, &tm);
    let potential = CsrMatrix::from_triplets(n, &tq);
    let boundary = CsrMatrix::from_triplets(n, &tb);
    let system = CsrMatrix::linear_combination(&[(1.0, &stiffness), (-1.0, &potential), (1.0, &boundary)]);
    Ok(AssembledOperators {
        stiffness,
        mass,
        potential,
        boundary,
        alpha_values,
        p1_definite,
        min_newton_eigenvalue: min_eig,
        min_newton_vertex: worst_vertex,
        mesh_size: mesh.max_edge_length(),
        conormal_principal_defect: defect,
        system,
        config: *cfg,
    })
}
