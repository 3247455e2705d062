//! Assembly of P1 Lagrange finite element matrices on 2D triangular meshes.
//!
//! Four global assembly strategies are provided for the mass, weighted mass,
//! stiffness and linear elasticity stiffness matrices:
//!
//! | strategy    | how the global matrix is built                                   |
//! |-------------|------------------------------------------------------------------|
//! | `Classical` | entry-by-entry insertion into a compressed sparse column matrix  |
//! | `OptV0`     | per-element dense block insertion into the same structure        |
//! | `OptV1`     | element loop filling preallocated triplet arrays, one conversion |
//! | `OptV2`     | loop-free batched index and value arrays, one conversion         |
//!
//! The first two pay for shifting the CSC storage on every fresh entry and
//! scale quadratically with the mesh size; the triplet-based ones are linear.

pub mod assembly;
pub mod bench;
pub mod elements;
mod error;
pub mod mesh;
pub mod sparse;

pub use assembly::{assemble, Coefficients, MatrixKind, Strategy, WeightField};
pub use elements::{ElasticParams, ElementMatrix};
pub use error::{Error, Result};
pub use mesh::Mesh;
pub use sparse::{CscMatrix, DenseMatrix};
