//! Finite-size experiment rig: assemble the energy on explicit N x N block
//! assemblies of the domain (microstructure scale 1/N), minimize under
//! affine boundary data, and compare the per-N minimum energy densities
//! against the cell-problem prediction as N grows.
//!
//! Boundary data is imposed by hard constraint on the blocks touching the
//! domain boundary: their mean displacement is pinned to the affine datum
//! (the strain degrees stay free, so the N = 1 experiment coincides with
//! the cell problem up to gauge).

use crate::cache::SolveCache;
use crate::cellsolver::{solve_assembled, CellAssembly, PinMode};
use crate::density::ProblemTemplate;
use crate::error::{Error, Result};
use crate::microgeometry::{Facet, UnitCellMesh};
use crate::tensors::SymTensor;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Configuration of one scaling experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpsilonExperiment {
    pub template: ProblemTemplate,
    /// Affine boundary datum.
    pub xi: SymTensor,
    /// Increasing assembly sizes; epsilon = 1/N.
    pub n_ladder: Vec<usize>,
}

/// Per-N result row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GammaRow {
    pub n: usize,
    pub epsilon: f64,
    pub energy: f64,
    pub gap_to_fhom: f64,
    pub converged: bool,
}

/// Sweep output: per-N energies and the reference cell value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GammaTable {
    pub format_version: u32,
    pub f_hom: f64,
    pub rows: Vec<GammaRow>,
}

/// Tile the base unit cell into an `N^dim` assembly on the unit torus.
///
/// Every base facet spawns one copy per cell; side shifts are recomputed so
/// that copies crossing the assembly boundary become wrap facets of the big
/// torus. Facet measures scale by `N^(1-dim)` (point interfaces in 1D keep
/// unit counting measure).
pub fn tile_mesh(base: &UnitCellMesh, n: usize) -> UnitCellMesh {
    assert!(n >= 1);
    let dim = base.dim;
    let nf = 1.0 / n as f64;
    let cells: Vec<[i64; 2]> = if dim == 1 {
        (0..n as i64).map(|i| [i, 0]).collect()
    } else {
        (0..n as i64)
            .flat_map(|j| (0..n as i64).map(move |i| [i, j]))
            .collect()
    };
    let cell_index = |c: [i64; 2]| -> usize { (c[1] * n as i64 + c[0]) as usize };
    let nb = base.blocks.len();
    let vol_scale = nf.powi(dim as i32);
    let area_scale = nf.powi(dim as i32 - 1);

    let mut blocks = Vec::with_capacity(cells.len() * nb);
    for &c in &cells {
        for b in &base.blocks {
            let shift = [c[0] as f64, c[1] as f64];
            let scale_pt = |p: [f64; 2]| [(p[0] + shift[0]) * nf, (p[1] + shift[1]) * nf];
            let mut blk = b.clone();
            blk.id = cell_index(c) * nb + b.id;
            blk.lo = scale_pt(b.lo);
            blk.hi = scale_pt(b.hi);
            blk.centroid = scale_pt(b.centroid);
            blk.measure = b.measure * vol_scale;
            if dim == 1 {
                blk.lo[1] = 0.0;
                blk.hi[1] = 0.0;
                blk.centroid[1] = 0.0;
            }
            blocks.push(blk);
        }
    }

    let mut facets = Vec::with_capacity(cells.len() * base.facets.len());
    for &c in &cells {
        for f in &base.facets {
            let shift = [c[0] as f64, c[1] as f64];
            let scale_pt = |p: [f64; 2]| {
                let mut q = [(p[0] + shift[0]) * nf, (p[1] + shift[1]) * nf];
                if dim == 1 {
                    q[1] = 0.0;
                }
                q
            };
            let side = |s: &crate::microgeometry::FacetSide| {
                // the adjacent block instance is the copy in cell c - k,
                // wrapped onto the torus with big-lattice shift -Q
                let mut cw = [0i64; 2];
                let mut q = [0i32; 2];
                for d in 0..2 {
                    let m = c[d] - s.shift[d] as i64;
                    let nn = n as i64;
                    let mut wrapped = m % nn;
                    if wrapped < 0 {
                        wrapped += nn;
                    }
                    cw[d] = wrapped;
                    q[d] = ((m - wrapped) / nn) as i32;
                }
                if dim == 1 {
                    cw[1] = 0;
                    q[1] = 0;
                }
                crate::microgeometry::FacetSide {
                    block: cell_index(cw) * nb + s.block,
                    shift: [-q[0], -q[1]],
                }
            };
            let left = side(&f.left);
            let right = side(&f.right);
            let wrap = left.shift != right.shift;
            facets.push(Facet {
                id: 0,
                left,
                right,
                normal: f.normal,
                a: scale_pt(f.a),
                b: scale_pt(f.b),
                midpoint: scale_pt(f.midpoint),
                measure: f.measure * area_scale,
                wrap,
            });
        }
    }
    for (id, f) in facets.iter_mut().enumerate() {
        f.id = id;
    }
    let periodic_pairs = facets
        .iter()
        .filter(|f| f.wrap)
        .map(|f| (f.id, f.id))
        .collect();
    UnitCellMesh {
        dim,
        blocks,
        facets,
        periodic_pairs,
    }
}

/// Block instances adjacent to a wrap facet of the assembly torus, i.e.
/// the blocks touching the domain boundary.
pub fn boundary_blocks(mesh: &UnitCellMesh) -> Vec<usize> {
    let mut flags = vec![false; mesh.blocks.len()];
    for f in &mesh.facets {
        if f.wrap {
            flags[f.left.block] = true;
            flags[f.right.block] = true;
        }
    }
    (0..mesh.blocks.len()).filter(|&b| flags[b]).collect()
}

/// Run the scaling sweep: per-N minimum energy density against the cell
/// value, solved in parallel and gathered in ladder order.
pub fn run_sweep(exp: &EpsilonExperiment, cache: &SolveCache) -> Result<GammaTable> {
    if exp.n_ladder.is_empty() {
        return Err(Error::InvalidInput("empty N ladder".into()));
    }
    if exp.n_ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("N ladder must be increasing".into()));
    }
    if exp.template.refinement != 0 {
        return Err(Error::InvalidInput(
            "the scaling experiment uses block-affine fields (refinement 0)".into(),
        ));
    }
    let f_hom = cache.get_or_solve(&exp.template.problem(exp.xi))?.value;
    let base = exp.template.geometry.build()?;
    let a_op = exp.template.elasticity.build(base.dim)?;

    let rows: Vec<GammaRow> = exp
        .n_ladder
        .par_iter()
        .map(|&n| -> Result<GammaRow> {
            let mesh = Arc::new(tile_mesh(&base, n));
            let pins = boundary_blocks(&mesh);
            let assembly = CellAssembly::build(mesh, a_op.clone(), 0, PinMode::PinnedBlocks(pins))?;
            let sol = solve_assembled(
                &assembly,
                exp.template.cone,
                &exp.xi,
                true,
                1.0,
                &exp.template.params,
            )?;
            Ok(GammaRow {
                n,
                epsilon: 1.0 / n as f64,
                energy: sol.value,
                gap_to_fhom: sol.value - f_hom,
                converged: sol.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(GammaTable {
        format_version: 1,
        f_hom,
        rows,
    })
}
