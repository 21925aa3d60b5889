//! Linear Lagrange finite elements on a [`TetMesh`]: operator and load
//! assembly, quadrature and Dirichlet elimination.
//!
//! Assembly loops run over tetrahedra in mesh order. Per-element work that
//! calls back into user integrands is evaluated in parallel, but scattering
//! into global arrays is sequential, so results are bit-identical for any
//! thread count.

mod assemble;
mod dirichlet;
mod quadrature;
mod space;

use thiserror::Error;

pub use assemble::{
    assemble_interface_load, assemble_load, assemble_load_qp, assemble_mass, assemble_stiffness,
    assemble_weighted_mass,
};
pub use dirichlet::{apply_dirichlet, AssembledSystem, DofLayout};
pub use quadrature::QuadratureRule;
pub use space::{P1Space, RegionFilter};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("the mesh has no interface triangles; the interface load is undefined")]
    EmptyInterface,
    #[error("Dirichlet data: {0}")]
    Dirichlet(String),
}
