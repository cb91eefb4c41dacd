//! Spectrum of the index form, stability verdicts and Jacobi-field residuals.

mod eigen;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::discretize::{AssembledOperators, SurfaceMesh, TensorChoice};
use crate::error::{Error, Result};

pub use eigen::{solve_pencil, solve_spectrum, Spectrum, MAX_ITERATIONS, SOLVER_TOLERANCE};

/// Sign of the index form on mean-zero functions and on all functions.
#[derive(Clone, Debug, Serialize)]
pub struct StabilityVerdict {
    pub lambda_min_constrained: f64,
    pub lambda_min_full: f64,
    pub stable: bool,
    pub strongly_stable: bool,
    pub tolerance: f64,
    /// Computed full-space eigenvalues below `-tolerance`.
    pub negative_full: usize,
}

/// `10⁻³ · max(|λ₁|, |λ₂|, h²)` from the two lowest full-space eigenvalues.
pub fn default_tolerance(ops: &AssembledOperators, full: &Spectrum) -> f64 {
    let scale = full.eigenvalues.iter().take(2).fold(ops.mesh_size * ops.mesh_size, |s, l| s.max(l.abs()));
    1e-3 * scale
}

/// Decides 1-stability and strong 1-stability. `tol` defaults to [`default_tolerance`].
pub fn stability_verdict(ops: &AssembledOperators, tol: Option<f64>) -> Result<StabilityVerdict> {
    if !ops.p1_definite && ops.config.tensor == TensorChoice::Newton {
        return Err(Error::IndefiniteNewtonTensor {
            vertex: ops.min_newton_vertex,
            min_eig: ops.min_newton_eigenvalue,
        });
    }
    let full = solve_spectrum(ops, 2.min(ops.dim()), false)?;
    let constrained = solve_spectrum(ops, 1, true)?;
    let tolerance = tol.unwrap_or_else(|| default_tolerance(ops, &full));
    let lambda_min_constrained = constrained.lowest();
    let lambda_min_full = full.lowest();
    Ok(StabilityVerdict {
        lambda_min_constrained,
        lambda_min_full,
        stable: lambda_min_constrained >= -tolerance,
        strongly_stable: lambda_min_full >= -tolerance,
        tolerance,
        negative_full: full.negative_count(tolerance),
    })
}

/// Distance of `f` from solving `T₁f = const` with `∂f/∂ν + α_θ f = 0`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct JacobiResidual {
    /// Variance of the discrete `T₁f` over interior vertices, `f` scaled to `‖f‖∞ = 1`.
    pub interior_deviation: f64,
    /// Max of `|∂f/∂ν + α_θ f|` over boundary vertices, same scaling.
    pub boundary_residual: f64,
    /// Mean of the discrete `T₁f` over interior vertices.
    pub interior_mean: f64,
}

/// Jacobi-field residuals of a vertex function. The interior operator is
/// `(K − Q)f` divided by lumped mass; the conormal derivative comes from a
/// local quadratic least-squares fit in parameter space.
pub fn jacobi_residual(ops: &AssembledOperators, mesh: &SurfaceMesh, f: &[f64]) -> Result<JacobiResidual> {
    let n = ops.dim();
    if f.len() != n || mesh.vertex_count() != n {
        return Err(Error::DimensionMismatch { expected: n, found: f.len() });
    }
    let fmax = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if fmax == 0.0 {
        return Ok(JacobiResidual { interior_deviation: 0.0, boundary_residual: 0.0, interior_mean: 0.0 });
    }
    let f: Vec<f64> = f.iter().map(|v| v / fmax).collect();

    let kq = crate::sparse::CsrMatrix::linear_combination(&[(1.0, &ops.stiffness), (-1.0, &ops.potential)]);
    let g = kq.mul_vec(&f);
    let lumped = ops.mass.mul_vec(&vec![1.0; n]);
    let t1: Vec<f64> = (0..n).filter(|&v| !mesh.is_boundary(v)).map(|v| g[v] / lumped[v]).collect();
    let (mean, variance) = if t1.is_empty() {
        (0.0, 0.0)
    } else {
        let mean = t1.iter().sum::<f64>() / t1.len() as f64;
        (mean, t1.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / t1.len() as f64)
    };

    let boundary_residual = robin_residual(ops, mesh, &f)?;
    Ok(JacobiResidual { interior_deviation: variance, boundary_residual, interior_mean: mean })
}

/// Max of `|∂f/∂ν + α_θ f|` over boundary vertices, unscaled. Vertices without
/// a Robin coefficient (no support) get the Neumann condition.
pub fn robin_residual(ops: &AssembledOperators, mesh: &SurfaceMesh, f: &[f64]) -> Result<f64> {
    let n = ops.dim();
    if f.len() != n || mesh.vertex_count() != n {
        return Err(Error::DimensionMismatch { expected: n, found: f.len() });
    }
    let alpha: std::collections::HashMap<usize, f64> = ops.alpha_values.iter().copied().collect();
    let adjacency = adjacency(mesh);
    let mut worst: f64 = 0.0;
    for v in 0..n {
        let Some(b) = &mesh.boundary_jets[v] else { continue };
        let grad = local_gradient(mesh, &adjacency, f, v)?;
        let dnu = grad[0] * b.conormal_coeffs[0] + grad[1] * b.conormal_coeffs[1];
        let a = alpha.get(&v).copied().unwrap_or(0.0);
        worst = worst.max((dnu + a * f[v]).abs());
    }
    Ok(worst)
}

pub(crate) fn adjacency(mesh: &SurfaceMesh) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); mesh.vertex_count()];
    for t in &mesh.triangles {
        for a in 0..3 {
            for b in 0..3 {
                if a != b && !adj[t[a]].contains(&t[b]) {
                    adj[t[a]].push(t[b]);
                }
            }
        }
    }
    adj
}

/// Parameter gradient of `f` at `v` from a quadratic fit over the two-ring.
fn local_gradient(mesh: &SurfaceMesh, adj: &[Vec<usize>], f: &[f64], v: usize) -> Result<[f64; 2]> {
    let mut ring: Vec<usize> = adj[v].clone();
    for &w in &adj[v] {
        for &x in &adj[w] {
            if x != v && !ring.contains(&x) {
                ring.push(x);
            }
        }
    }
    ring.sort_unstable();
    if ring.len() < 5 {
        return Err(Error::InvalidArgument(format!("vertex {v} has too few neighbours for a quadratic fit")));
    }
    let p0 = mesh.params[v];
    let h = ring.iter().map(|&w| (mesh.params[w][0] - p0[0]).hypot(mesh.params[w][1] - p0[1])).fold(0.0f64, f64::max);
    // Unknowns: f_u, f_v, f_uu, f_uv, f_vv in scaled coordinates; f(v) is pinned.
    let a = DMatrix::from_fn(ring.len(), 5, |i, j| {
        let du = (mesh.params[ring[i]][0] - p0[0]) / h;
        let dv = (mesh.params[ring[i]][1] - p0[1]) / h;
        [du, dv, 0.5 * du * du, du * dv, 0.5 * dv * dv][j]
    });
    let rhs = DVector::from_fn(ring.len(), |i, _| f[ring[i]] - f[v]);
    let sol = a
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::InvalidArgument(format!("least-squares fit failed: {e}")))?;
    Ok([sol[0] / h, sol[1] / h])
}
