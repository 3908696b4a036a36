//! Finite element simulation of polymer gel swelling.
//!
//! The gel is modelled by a displacement `u`, a pseudo-pressure `p~` and a
//! volume-change function `q = div u`. Each time step solves a generalized
//! Stokes problem for `(u, p~)` with Taylor-Hood elements and a diffusion
//! problem for `q` with linear elements, in either order.
//!
//! Module map:
//! - [`params`]: material constants, conserved quantities, loads, initial data
//! - [`mesh`]: triangulations, generators, refinement, text format
//! - [`fem`]: quadrature, basis functions, dof maps and assembly
//! - [`linsolve`]: sparse storage and direct solves
//! - [`scheme`]: the time stepper and its diagnostics
//! - [`verify`]: manufactured solutions and convergence studies
//! - [`io`]: configuration files, VTK and CSV output

// Index loops read more naturally in the dense kernels.
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod fem;
pub mod io;
pub mod linsolve;
pub mod mesh;
pub mod params;
pub mod scheme;
pub mod verify;

pub use error::{RunError, ConfigError, FemError, MeshError, ParamError, SchemeError, SolveError};
