//! ADMM iteration for the assembled cell problem.
//!
//! Splitting: consensus variable `z` per jump quadrature point, prox of the
//! weighted norm plus cone indicator in the z-step, prefactorized SPD solve
//! in the block-dof step, scaled dual update with residual balancing.

use super::assemble::CellAssembly;
use super::{CellSolution, JumpSample, SolverParams};
use crate::cones::{jump_prox, JumpCone};
use crate::error::{Error, Result};
use crate::tensors::SymTensor;
use nalgebra::DVector;

pub fn solve(
    assembly: &CellAssembly,
    cone: JumpCone,
    xi: &SymTensor,
    include_surface: bool,
    surface_scale: f64,
    params: &SolverParams,
) -> Result<CellSolution> {
    let dim = assembly.dim();
    if xi.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: xi.dim(),
        });
    }
    let nq = assembly.quad().len();
    let m = dim * nq;
    let h_lin = assembly.bulk_linear(xi);

    let mut rho = params.rho0.unwrap_or_else(|| assembly.rho_scale()).max(1e-12);
    let mut factor = assembly.factor(rho)?;

    let mut x = DVector::zeros(assembly.ndofs());
    let mut z = DVector::zeros(m);
    let mut u = DVector::zeros(m);
    let mut z_prev = z.clone();

    let mut iterations = 0usize;
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut gap = f64::INFINITY;
    let mut converged = false;
    let mut value = 0.0;
    let mut bulk = 0.0;
    let mut surface = 0.0;

    let weight_of = |q: usize| -> f64 {
        if include_surface {
            assembly.quad()[q].weight * surface_scale
        } else {
            0.0
        }
    };

    for it in 0..params.max_iter {
        iterations = it + 1;

        // x-step: (H + rho J^T J) x = -h + rho J^T (z - u)
        let rhs = assembly.jump_matrix().transpose() * ((&z - &u) * rho) - &h_lin;
        x = factor.solve(&rhs);

        let jx = assembly.jumps_of(&x);

        // z-step: prox per quadrature point
        z_prev.copy_from(&z);
        for q in 0..nq {
            let qp = &assembly.quad()[q];
            let mut v = [0.0; 2];
            for c in 0..dim {
                v[c] = jx[q * dim + c] + u[q * dim + c];
            }
            let p = jump_prox(cone, dim, qp.normal, v, weight_of(q) / rho);
            for c in 0..dim {
                z[q * dim + c] = p[c];
            }
        }

        // dual update
        let r_vec = &jx - &z;
        u += &r_vec;

        primal = r_vec.norm();
        dual = rho * (assembly.jump_matrix().transpose() * (&z - &z_prev)).norm();
        if !primal.is_finite() || !dual.is_finite() {
            return Err(Error::NumericalBreakdown(format!(
                "non-finite residuals at iteration {iterations} (rho = {rho:.3e})"
            )));
        }

        bulk = assembly.bulk_energy(&x, xi);
        surface = (0..nq).map(|q| weight_of(q) * chunk_norm(&z, q, dim)).sum();
        value = bulk + surface;
        // duality-gap estimate from the scaled dual variable y = rho u
        let y_dot_r = rho * u.dot(&r_vec);
        gap = y_dot_r.abs() + x.norm() * dual;

        if primal <= params.tol_primal
            && dual <= params.tol_dual
            && gap <= 10.0 * params.tol_primal.max(params.tol_dual)
        {
            converged = true;
            break;
        }

        // residual balancing
        if params.adapt_interval > 0
            && (it + 1) % params.adapt_interval == 0
            && it + 1 < params.max_iter
        {
            let f = params.adapt_factor;
            if primal > 10.0 * dual && rho < 1e8 * assembly.rho_scale() {
                rho *= f;
                u /= f;
                factor = assembly.factor(rho)?;
            } else if dual > 10.0 * primal && rho > 1e-8 * assembly.rho_scale() {
                rho /= f;
                u *= f;
                factor = assembly.factor(rho)?;
            }
        }
    }

    // Postprocessing refinement of the surface integral: split facet
    // segments where the normal jump of the field changes sign.
    let surface_refined = if include_surface && assembly.refinement() >= 1 && dim == 2 {
        Some(sign_split_surface(assembly, &x, surface_scale))
    } else {
        None
    };

    let jumps = assembly
        .quad()
        .iter()
        .enumerate()
        .map(|(q, qp)| JumpSample {
            facet: qp.facet,
            point: qp.point,
            weight: qp.weight,
            normal: qp.normal,
            jump: [
                z[q * dim],
                if dim == 2 { z[q * dim + 1] } else { 0.0 },
            ],
        })
        .collect();

    Ok(CellSolution {
        format_version: 1,
        value,
        bulk_part: bulk,
        surface_part: surface,
        surface_refined,
        converged,
        iterations,
        primal_residual: primal,
        dual_residual: dual,
        certified_lower_bound: value - gap,
        block_dofs: assembly.block_dofs_of(&x),
        jumps,
    })
}

fn chunk_norm(z: &DVector<f64>, q: usize, dim: usize) -> f64 {
    match dim {
        1 => z[q].abs(),
        _ => (z[2 * q] * z[2 * q] + z[2 * q + 1] * z[2 * q + 1]).sqrt(),
    }
}

/// Surface integral of `|jump|` with facet segments split at sign changes
/// of the normal jump, integrated by two-point Gauss on each piece. The
/// jump of the discrete field is affine along every segment.
fn sign_split_surface(assembly: &CellAssembly, x: &DVector<f64>, surface_scale: f64) -> f64 {
    const INV_SQRT3: f64 = 0.577_350_269_189_625_8;
    let mut total = 0.0;
    for seg in assembly.segments() {
        let facet = &assembly.mesh().facets[seg.facet];
        let ja = assembly.jump_at(x, facet, seg.a);
        let jb = assembly.jump_at(x, facet, seg.b);
        let na = ja[0] * facet.normal[0] + ja[1] * facet.normal[1];
        let nb = jb[0] * facet.normal[0] + jb[1] * facet.normal[1];
        let mut cuts = vec![0.0, 1.0];
        if na * nb < 0.0 {
            cuts.insert(1, na / (na - nb));
        }
        let len = ((seg.b[0] - seg.a[0]).powi(2) + (seg.b[1] - seg.a[1]).powi(2)).sqrt();
        for win in cuts.windows(2) {
            let (t0, t1) = (win[0], win[1]);
            let mid = 0.5 * (t0 + t1);
            let half = 0.5 * (t1 - t0);
            for s in [mid - half * INV_SQRT3, mid + half * INV_SQRT3] {
                let p = [
                    seg.a[0] + s * (seg.b[0] - seg.a[0]),
                    seg.a[1] + s * (seg.b[1] - seg.a[1]),
                ];
                let j = assembly.jump_at(x, facet, p);
                total += surface_scale * half * len * (j[0] * j[0] + j[1] * j[1]).sqrt();
            }
        }
    }
    total
}
