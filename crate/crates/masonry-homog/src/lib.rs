//! Numerical homogenization of masonry-like microstructures.
//!
//! Periodic assemblies of linearly elastic blocks joined by cohesive,
//! unilateral interfaces admit an effective description through a unit-cell
//! problem. This crate computes the resulting energy densities and derived
//! objects numerically:
//!
//! - [`tensors`]: symmetric strain tensors in 1D/2D and anisotropic energy
//!   norms;
//! - [`cones`]: jump cones at interfaces, finitely generated matrix cones,
//!   projections and proximal kernels;
//! - [`microgeometry`]: periodic unit-cell meshes (chain, stack bond,
//!   running bond);
//! - [`cellsolver`]: the ADMM solver for the cohesive density `f_hom` and
//!   the dry-masonry density `g_hom`;
//! - [`density`]: strain-space sweeps, the recession function, tensile-cone
//!   detection and growth audits;
//! - [`macroeval`]: evaluation of the homogenized functional on macroscopic
//!   fields with explicit cracks;
//! - [`harness`]: finite-size block assemblies compared against the
//!   homogenized prediction;
//! - [`cache`]: content-addressed memoization of cell solves.
//!
//! The `masonry-homog` binary exposes the same functionality as
//! subcommands; the `examples/` directory holds one runnable example per
//! capability.

pub mod cache;
pub mod cellsolver;
pub mod cones;
pub mod config;
pub mod density;
pub mod error;
pub mod harness;
pub mod io;
pub mod macroeval;
pub mod microgeometry;
pub mod tensors;

pub use cellsolver::{solve_density, solve_dry, CellProblem, CellSolution, SolverParams};
pub use cones::{jump_prox, membership, project_cone, project_polar, ConeSpec, JumpCone};
pub use error::{Error, Result};
pub use microgeometry::{
    build_chain_1d, build_running_bond, build_stack_bond, GeometrySpec, UnitCellMesh,
};
pub use tensors::{sym_dyad, ElasticityOperator, ElasticitySpec, SymTensor};
