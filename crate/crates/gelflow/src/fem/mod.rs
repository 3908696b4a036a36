//! Lagrange elements, quadrature and assembly.
//!
//! Displacements use continuous quadratic elements with interleaved
//! components; pressures and the volume-change function use continuous
//! linear elements whose dofs coincide with mesh vertices.

pub mod assembly;
pub mod basis;
pub mod dofmap;
pub mod quadrature;

pub use assembly::*;
pub use basis::{eval_basis, BasisEval, ElementGeometry, ElementKind, Tabulation};
pub use dofmap::{DofMap, FeField, SpaceKind};
pub use quadrature::{edge_rule, triangle_rule, QuadratureRule};
