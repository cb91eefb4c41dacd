//! Triangulation and finite-element assembly of the index form.

mod assemble;
mod mesh;

pub use assemble::{
    assemble, robin_coefficient, weighted_mass, AssembledOperators, AssemblyConfig, SupportGeometry, TensorChoice,
};
pub use mesh::{mesh_patch, SurfaceMesh};
