//! Uniform rectangular meshes and the piecewise-constant DG operators.

mod dg;
mod mesh;

pub use dg::{
    assemble_operators, upwind_derivative, AssemblyParams, BoundaryCondition, DgOperators,
};
pub use mesh::SpatialMesh;
