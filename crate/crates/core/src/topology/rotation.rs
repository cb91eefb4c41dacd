use serde::{Deserialize, Serialize};

use crate::discretize::{
    assemble, weighted_mass, AssembledOperators, AssemblyConfig, SupportGeometry, SurfaceMesh, TensorChoice,
};
use crate::error::{Error, Result};
use crate::jet::{Jet, JetVec};
use crate::spaceform::{Ambient, SpaceForm};
use crate::sparse::{conjugate_gradient, dot, CsrMatrix};
use crate::stability::robin_residual;
use crate::surface::{GeometryJets, ParametricPatch};

/// Which Killing field generates the test function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum RotationKind {
    /// Rotation about the line through the ball center with direction `axis`.
    /// In `S³` and `H³` this fixes `e₄` as well.
    Ball { axis: [f64; 3] },
    /// Rotation about the vertical line through `center`; Euclidean only.
    Slab { center: [f64; 2] },
}

impl RotationKind {
    fn check(&self, sf: SpaceForm) -> Result<()> {
        match self {
            RotationKind::Slab { .. } if !sf.is_flat() => {
                Err(Error::InvalidArgument(format!("slab test functions need c = 0, got c = {}", sf.curvature())))
            }
            RotationKind::Ball { axis } if !(axis[0].hypot(axis[1]).hypot(axis[2]) > 0.0) => {
                Err(Error::InvalidArgument("rotation axis must be nonzero".into()))
            }
            _ => Ok(()),
        }
    }
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn unit(a: [f64; 3]) -> [f64; 3] {
    let n = a[0].hypot(a[1]).hypot(a[2]);
    a.map(|x| x / n)
}

/// Test function at one point: `⟨φ ∧ a, η⟩` for the Euclidean ball,
/// `⟨φ ∧ a ∧ e₄, η⟩` in `S³`/`H³`, and `⟨(φ − c) ∧ e₃, η⟩` for the slab.
pub fn rotation_value(sf: SpaceForm, kind: RotationKind, x: &Ambient, eta: &Ambient) -> f64 {
    match kind {
        RotationKind::Ball { axis } if !sf.is_flat() => {
            let a = unit(axis);
            let a4 = Ambient::new(a[0], a[1], a[2], 0.0);
            sf.inner(&sf.cross4(x, &a4, &Ambient::new(0.0, 0.0, 0.0, 1.0)), eta)
        }
        RotationKind::Ball { axis } => {
            let y = cross3([x[0], x[1], x[2]], unit(axis));
            y[0] * eta[0] + y[1] * eta[1] + y[2] * eta[2]
        }
        RotationKind::Slab { center } => {
            let y = cross3([x[0] - center[0], x[1] - center[1], x[2]], [0.0, 0.0, 1.0]);
            y[0] * eta[0] + y[1] * eta[1] + y[2] * eta[2]
        }
    }
}

/// The same function as a jet, for pointwise derivatives. Uses the Killing
/// field `x ↦ a × x` on the spatial part, which agrees with the wedge forms
/// up to sign.
fn rotation_jet(kind: RotationKind, x: &JetVec, eta: &JetVec) -> Jet {
    let (a, shift) = match kind {
        RotationKind::Ball { axis } => (unit(axis), [0.0, 0.0]),
        RotationKind::Slab { center } => ([0.0, 0.0, 1.0], center),
    };
    let p = [x[0] - shift[0], x[1] - shift[1], x[2]];
    let y = [p[1] * a[2] - p[2] * a[1], p[2] * a[0] - p[0] * a[2], p[0] * a[1] - p[1] * a[0]];
    y[0] * eta[0] + y[1] * eta[1] + y[2] * eta[2]
}

/// Vertex values of the rotation test function.
pub fn rotation_test_function(mesh: &SurfaceMesh, sf: SpaceForm, kind: RotationKind) -> Result<Vec<f64>> {
    kind.check(sf)?;
    if (mesh.patch.space_form().curvature() - sf.curvature()).abs() > 0.0 {
        return Err(Error::InvalidArgument("space form differs from the mesh's".into()));
    }
    Ok(mesh.jets.iter().map(|j| rotation_value(sf, kind, &j.position, &j.normal)).collect())
}

/// Spatial part of `η(p₀)` at the vertex `p₀` closest to the ball center: the
/// axis the rigidity argument pivots about.
pub fn pivot_axis(mesh: &SurfaceMesh) -> [f64; 3] {
    let sf = mesh.patch.space_form();
    let p0 = (0..mesh.vertex_count())
        .min_by(|&a, &b| {
            let d = |v: usize| sf.distance_from_origin(&mesh.positions[v]);
            d(a).total_cmp(&d(b))
        })
        .unwrap_or(0);
    let n = mesh.jets[p0].normal;
    unit([n[0], n[1], n[2]])
}

/// Pointwise strong residuals `[L₁f + 2H₁(H₂+c)f, L₁f + 2(H₁H₂+c)f]` of the
/// test function from analytic jets. The first potential is the one of the
/// index form; the second is the one written for the hyperbolic sketch. They
/// coincide when `c = 0`.
pub fn strong_pde_residual(patch: &ParametricPatch, kind: RotationKind, p: [f64; 2]) -> Result<[f64; 2]> {
    let sf = patch.space_form();
    kind.check(sf)?;
    let gj: GeometryJets = patch.geometry_jets(p[0], p[1])?;
    let f = rotation_jet(kind, &gj.x, &gj.eta);
    let l1 = gj.l1(&f);
    let (h1, h2) = (gj.h1_jet().value(), gj.h2_jet().value());
    let c = sf.curvature();
    let fv = f.value();
    Ok([l1 + 2.0 * h1 * (h2 + c) * fv, l1 + 2.0 * (h1 * h2 + c) * fv])
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PdeResidual {
    /// `‖(K − Q)f‖` in the dual of `H¹₀`, relative to `‖f‖_{H¹}`, with
    /// `q = 2H₁(H₂ + c)`.
    pub interior: f64,
    /// Same with `q = 2(H₁H₂ + c)`.
    pub interior_alternative: f64,
    /// Max `|∂f/∂ν + α f|` on the boundary with `‖f‖∞ = 1`.
    pub boundary: f64,
}

/// Weak-form residuals of a candidate test function. The interior part pairs
/// `(K − Q)f` against test functions vanishing on the boundary; the boundary
/// part uses the Robin coefficients of `ops`, which are `−cn/sn` for a free
/// boundary in a ball and zero for a slab.
pub fn test_function_pde_residual(mesh: &SurfaceMesh, ops: &AssembledOperators, f: &[f64]) -> Result<PdeResidual> {
    let n = ops.dim();
    if f.len() != n || mesh.vertex_count() != n {
        return Err(Error::DimensionMismatch { expected: n, found: f.len() });
    }
    let fmax = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if fmax == 0.0 {
        return Ok(PdeResidual { interior: 0.0, interior_alternative: 0.0, boundary: 0.0 });
    }
    let f: Vec<f64> = f.iter().map(|v| v / fmax).collect();
    let sf = mesh.patch.space_form();
    let c = sf.curvature();

    let h1_cfg = AssemblyConfig {
        tensor: TensorChoice::Identity,
        support: SupportGeometry::None,
        require_definite: false,
        ..ops.config
    };
    let lb = assemble(mesh, sf, &h1_cfg)?;
    let h1_matrix = CsrMatrix::linear_combination(&[(1.0, &lb.stiffness), (1.0, &lb.mass)]);
    let interior_block = {
        let t: Vec<(usize, usize, f64)> = h1_matrix
            .triplets()
            .into_iter()
            .filter(|&(i, j, _)| !mesh.is_boundary(i) && !mesh.is_boundary(j))
            .chain(mesh.boundary_vertices().into_iter().map(|v| (v, v, 1.0)))
            .collect();
        CsrMatrix::from_triplets(n, &t)
    };
    let f_norm = h1_matrix.bilinear(&f, &f).sqrt();
    let dual_norm = |q: &CsrMatrix| -> Result<f64> {
        let kq = CsrMatrix::linear_combination(&[(1.0, &ops.stiffness), (-1.0, q)]);
        let mut r = kq.mul_vec(&f);
        for v in mesh.boundary_vertices() {
            r[v] = 0.0;
        }
        let z = conjugate_gradient(&interior_block, &r, 1e-10, 20 * n + 100)?;
        Ok(dot(&r, &z).max(0.0).sqrt() / f_norm)
    };
    let interior = dual_norm(&ops.potential)?;
    let alt_weight: Vec<f64> = mesh.jets.iter().map(|j| ops.config.potential_scale * 2.0 * (j.h1 * j.h2 + c)).collect();
    let interior_alternative = dual_norm(&weighted_mass(mesh, &alt_weight, ops.config.quadrature_order)?)?;
    let boundary = robin_residual(ops, mesh, &f)?;
    Ok(PdeResidual { interior, interior_alternative, boundary })
}
