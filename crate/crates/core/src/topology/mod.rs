//! Umbilics, nodal sets, Gauss–Bonnet bookkeeping and the rotation test
//! functions behind the rigidity arguments.

mod gauss_bonnet;
mod nodal;
mod rotation;
mod umbilic;

use std::io::{self, Write};

use serde::Serialize;

use crate::discretize::SurfaceMesh;

pub use gauss_bonnet::{
    gauss_bonnet_audit, genus_inequality, theorem2_hypothesis_check, GaussBonnetAudit, GenusInequality,
    HypothesisCheck, RegionAudit,
};
pub use nodal::{
    balanced_cutoff, default_zero_tolerance, nodal_graph, BalancedCutoff, BranchPoint, NodalDomain, NodalGraph,
    NodalPoint, NodalSite, Polyline, ZERO_FRACTION,
};
pub use rotation::{
    pivot_axis, rotation_test_function, rotation_value, strong_pde_residual, test_function_pde_residual, PdeResidual,
    RotationKind,
};
pub use umbilic::{umbilic_locus, Umbilic, UmbilicReport};

/// Largest `|II(ν, T)|` over boundary vertices; zero exactly when the conormal
/// is a principal direction along the whole boundary.
pub fn boundary_principal_direction_check(mesh: &SurfaceMesh) -> f64 {
    mesh.boundary_jets.iter().flatten().fold(0.0, |m, b| m.max(b.ii_nu_t.abs()))
}

/// Pretty JSON with a trailing newline.
pub fn write_json(value: &impl Serialize, mut w: impl Write) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)
}

#[cfg(test)]
mod tests;
