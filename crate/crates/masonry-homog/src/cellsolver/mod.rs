//! Discrete cell problem for the homogenized energy densities.
//!
//! The cohesive density minimizes
//! `1/2 int_Y ||xi + E(u~)||_A^2 + int_B |jump(u~)|` over Y-periodic
//! perturbations `u~` whose interface jumps obey the unilateral cone; the
//! dry-masonry density drops the surface term. Perturbations are discretized
//! by per-block affine fields (optionally refined to continuous piecewise
//! linear fields inside each block), and the resulting convex program is
//! solved by ADMM with a prefactorized quadratic subproblem and the
//! per-quadrature-point jump prox.

mod admm;
mod assemble;
pub mod reference;

pub use assemble::{CellAssembly, PinMode, QuadPoint};

use crate::cones::JumpCone;
use crate::error::Result;
use crate::microgeometry::GeometrySpec;
use crate::tensors::{ElasticitySpec, SymTensor};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// ADMM solver parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SolverParams {
    /// Initial penalty; estimated from the bulk form when absent.
    pub rho0: Option<f64>,
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub max_iter: usize,
    /// Residual-balancing check interval (iterations).
    pub adapt_interval: usize,
    /// Multiplicative penalty adaptation factor.
    pub adapt_factor: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            rho0: None,
            tol_primal: 1e-9,
            tol_dual: 1e-9,
            max_iter: 50_000,
            adapt_interval: 50,
            adapt_factor: 2.0,
        }
    }
}

/// Full description of one cell problem; doubles as the canonical config
/// and cache-key payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellProblem {
    pub geometry: GeometrySpec,
    pub elasticity: ElasticitySpec,
    pub cone: JumpCone,
    /// Macroscopic strain.
    pub xi: SymTensor,
    /// `false` solves the dry-masonry problem (no surface term).
    pub include_surface: bool,
    /// Multiplier on the surface integrand; used to solve scaled problems
    /// `f(t xi) = t^2 f_[1/t](xi)` without leaving the unit strain range.
    pub surface_scale: f64,
    /// Per-block subdivision level (0 = block-affine trial fields).
    pub refinement: usize,
    pub params: SolverParams,
}

impl CellProblem {
    pub fn new(geometry: GeometrySpec, cone: JumpCone, xi: SymTensor) -> Self {
        CellProblem {
            geometry,
            elasticity: ElasticitySpec::identity(),
            cone,
            xi,
            include_surface: true,
            surface_scale: 1.0,
            refinement: 0,
            params: SolverParams::default(),
        }
    }

    /// Canonical JSON used for cache keys and config echoes.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("cell problem serializes")
    }

    /// Assemble and solve this problem.
    pub fn solve(&self) -> Result<CellSolution> {
        let mesh = Arc::new(self.geometry.build()?);
        let a_op = self.elasticity.build(mesh.dim)?;
        let assembly = CellAssembly::build(mesh, a_op, self.refinement, PinMode::GaugeBlock0)?;
        admm::solve(
            &assembly,
            self.cone,
            &self.xi,
            self.include_surface,
            self.surface_scale,
            &self.params,
        )
    }

    /// Solve against a prebuilt assembly (sweep drivers reuse the
    /// factorization across strains).
    pub fn solve_with(&self, assembly: &CellAssembly) -> Result<CellSolution> {
        admm::solve(
            assembly,
            self.cone,
            &self.xi,
            self.include_surface,
            self.surface_scale,
            &self.params,
        )
    }
}

/// Solve a problem on a prebuilt assembly with explicit surface handling;
/// used by sweep drivers and the finite-size experiment rig.
pub fn solve_assembled(
    assembly: &CellAssembly,
    cone: JumpCone,
    xi: &SymTensor,
    include_surface: bool,
    surface_scale: f64,
    params: &SolverParams,
) -> Result<CellSolution> {
    admm::solve(assembly, cone, xi, include_surface, surface_scale, params)
}

/// Solve the cohesive cell problem (surface term on).
pub fn solve_density(problem: &CellProblem) -> Result<CellSolution> {
    let mut p = problem.clone();
    p.include_surface = true;
    p.solve()
}

/// Solve the dry-masonry cell problem (surface term dropped).
pub fn solve_dry(problem: &CellProblem) -> Result<CellSolution> {
    let mut p = problem.clone();
    p.include_surface = false;
    p.solve()
}

/// Jump value at one facet quadrature point of the solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JumpSample {
    pub facet: usize,
    pub point: [f64; 2],
    pub weight: f64,
    pub normal: [f64; 2],
    pub jump: [f64; 2],
}

/// Minimizer data and diagnostics of one cell solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellSolution {
    pub format_version: u32,
    /// Energy density (bulk + surface).
    pub value: f64,
    pub bulk_part: f64,
    pub surface_part: f64,
    /// Surface integral recomputed with facet segments split at sign
    /// changes of the normal jump (refined meshes only; postprocessing).
    pub surface_refined: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// `value` minus a duality-gap estimate.
    pub certified_lower_bound: f64,
    /// Per-block trial-field coefficients of the perturbation.
    pub block_dofs: Vec<Vec<f64>>,
    /// Cone-admissible consensus jumps at the quadrature points.
    pub jumps: Vec<JumpSample>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn chain_problem(xi: f64) -> CellProblem {
        CellProblem::new(GeometrySpec::Chain1d, JumpCone::Opening, SymTensor::scalar(xi))
    }

    #[test]
    fn chain_assembly_dimensions() {
        // one block, affine dofs (t, C), translation pinned -> 1 free dof
        let mesh = Arc::new(GeometrySpec::Chain1d.build().unwrap());
        let a = crate::tensors::ElasticityOperator::identity(1);
        let asm = CellAssembly::build(mesh, a, 0, PinMode::GaugeBlock0).unwrap();
        assert_eq!(asm.ndofs(), 1);
        assert_eq!(asm.quad().len(), 1);
    }

    #[test]
    fn chain_zero_strain_has_zero_minimum() {
        let sol = chain_problem(0.0).solve().unwrap();
        assert!(sol.converged);
        assert!(sol.value.abs() < 1e-10);
        assert!(sol.bulk_part >= 0.0 && sol.surface_part >= 0.0);
    }

    #[test]
    fn chain_wrap_jump_vanishes_for_zero_perturbation() {
        // with u~ = 0 the wrap jump is zero and the bulk strain is xi
        let mesh = Arc::new(GeometrySpec::Chain1d.build().unwrap());
        let a = crate::tensors::ElasticityOperator::identity(1);
        let asm = CellAssembly::build(mesh, a, 0, PinMode::GaugeBlock0).unwrap();
        let x = nalgebra::DVector::zeros(asm.ndofs());
        let jumps = asm.jumps_of(&x);
        assert!(jumps.norm() == 0.0);
        let xi = SymTensor::scalar(0.7);
        assert_relative_eq!(asm.bulk_energy(&x, &xi), 0.5 * 0.49, max_relative = 1e-14);
    }

    #[test]
    fn stack_bond_dof_count() {
        // 4 blocks x 6 affine dofs - 2 pinned translations
        let mesh = Arc::new(GeometrySpec::StackBond { nx: 2, ny: 2 }.build().unwrap());
        let a = crate::tensors::ElasticityOperator::identity(2);
        let asm = CellAssembly::build(mesh, a, 0, PinMode::GaugeBlock0).unwrap();
        assert_eq!(asm.ndofs(), 4 * 6 - 2);
    }

    #[test]
    fn chain_density_matches_closed_form() {
        // quadratic branch, cracking branch and compression
        for (xi, expected) in [(0.5, 0.125), (2.0, 1.5), (-3.0, 4.5)] {
            let sol = chain_problem(xi).solve().unwrap();
            assert!(sol.converged, "xi = {xi} did not converge");
            assert_relative_eq!(sol.value, expected, epsilon = 1e-7);
        }
    }

    #[test]
    fn chain_density_energy_split() {
        let sol = chain_problem(2.0).solve().unwrap();
        assert_relative_eq!(sol.bulk_part, 0.5, epsilon = 1e-6);
        assert_relative_eq!(sol.surface_part, 1.0, epsilon = 1e-6);
        let sol = chain_problem(-3.0).solve().unwrap();
        assert!(sol.surface_part < 1e-8);
    }

    #[test]
    fn chain_dry_values() {
        let mut p = chain_problem(1.0);
        p.include_surface = false;
        assert!(p.solve().unwrap().value < 1e-8);
        let mut p = chain_problem(-1.0);
        p.include_surface = false;
        assert_relative_eq!(p.solve().unwrap().value, 0.5, epsilon = 1e-7);
        let mut p = chain_problem(0.0);
        p.include_surface = false;
        assert!(p.solve().unwrap().value.abs() < 1e-10);
    }

    #[test]
    fn value_equals_bulk_plus_surface_and_gap_contract() {
        for xi in [-2.0, 0.3, 1.4] {
            let p = chain_problem(xi);
            let sol = p.solve().unwrap();
            assert_relative_eq!(sol.value, sol.bulk_part + sol.surface_part, epsilon = 1e-12);
            assert!(sol.value - sol.certified_lower_bound <= 10.0 * p.params.tol_primal);
        }
    }

    #[test]
    fn stored_jumps_are_admissible() {
        let p = CellProblem::new(
            GeometrySpec::StackBond { nx: 2, ny: 2 },
            JumpCone::Opening,
            SymTensor::from_entries_2d(1.5, -0.2, 0.4),
        );
        let sol = p.solve().unwrap();
        for j in &sol.jumps {
            assert!(JumpCone::Opening.admits(2, j.normal, j.jump, 1e-7));
        }
    }

    #[test]
    fn upper_bound_by_affine_test_function() {
        // f(xi) <= 1/2 ||xi||^2 for every xi
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 0.8]);
        for (xx, yy, xy) in [(1.0, 0.5, -0.3), (-2.0, 1.0, 0.7), (0.1, -0.1, 0.0)] {
            let xi = SymTensor::from_entries_2d(xx, yy, xy);
            let mut p = CellProblem::new(
                GeometrySpec::StackBond { nx: 2, ny: 2 },
                JumpCone::NonInterpenetration,
                xi,
            );
            p.elasticity = ElasticitySpec::Matrix(
                (0..3).map(|i| (0..3).map(|j| m[(i, j)]).collect()).collect(),
            );
            let a = p.elasticity.build(2).unwrap();
            let sol = p.solve().unwrap();
            let half_norm2 = 0.5 * a.energy_norm(&xi).powi(2);
            assert!(sol.value <= half_norm2 + 1e-7);
            // lower growth: f >= min(sqrt(alpha), 1) |xi| - 1/2
            let c = a.alpha().sqrt().min(1.0);
            assert!(sol.value >= c * xi.norm() - 0.5 - 1e-7);
        }
    }

    #[test]
    fn k0_perp_attains_elastic_energy() {
        // uniaxial compression is orthogonal to the opening cone
        let xi = SymTensor::from_entries_2d(-1.3, -0.4, 0.0);
        let p = CellProblem::new(
            GeometrySpec::StackBond { nx: 2, ny: 2 },
            JumpCone::Opening,
            xi,
        );
        let sol = p.solve().unwrap();
        assert_relative_eq!(sol.value, 0.5 * xi.norm().powi(2), max_relative = 1e-6);
    }

    #[test]
    fn refinement_does_not_increase_energy() {
        // the refined trial space contains the block-affine fields
        let xi = SymTensor::from_entries_2d(1.0, 0.2, 0.3);
        let mut p = CellProblem::new(
            GeometrySpec::StackBond { nx: 2, ny: 2 },
            JumpCone::Opening,
            xi,
        );
        let v0 = p.solve().unwrap().value;
        p.refinement = 1;
        let v1 = p.solve().unwrap().value;
        assert!(v1 <= v0 + 1e-7, "refined value {v1} above affine value {v0}");
    }

    #[test]
    fn refinement_keeps_1d_closed_form() {
        // the 1D minimizer is affine per block, so refinement changes nothing
        for (xi, expected) in [(0.5, 0.125), (2.0, 1.5)] {
            let mut p = chain_problem(xi);
            p.refinement = 2;
            let sol = p.solve().unwrap();
            assert_relative_eq!(sol.value, expected, epsilon = 1e-7);
        }
    }

    #[test]
    fn g_hom_is_two_homogeneous() {
        let xi = SymTensor::from_entries_2d(-0.8, 0.3, 0.25);
        let mut p = CellProblem::new(
            GeometrySpec::StackBond { nx: 2, ny: 2 },
            JumpCone::Opening,
            xi,
        );
        p.include_surface = false;
        let g1 = p.solve().unwrap().value;
        for t in [2.0, 3.0] {
            let mut pt = p.clone();
            pt.xi = xi.scale(t);
            let gt = pt.solve().unwrap().value;
            assert_relative_eq!(gt, t * t * g1, max_relative = 1e-6);
        }
    }

    #[test]
    fn noninterpenetration_shear_uses_sliding() {
        // pure shear with frictionless contact slides instead of paying the
        // full elastic energy once the shear is large enough
        let xi = SymTensor::from_entries_2d(0.0, 0.0, 2.0);
        let p = CellProblem::new(
            GeometrySpec::StackBond { nx: 1, ny: 1 },
            JumpCone::NonInterpenetration,
            xi,
        );
        let sol = p.solve().unwrap();
        let elastic = 0.5 * xi.norm().powi(2);
        assert!(sol.value < elastic - 0.1, "sliding should beat {elastic}, got {}", sol.value);
    }
}
