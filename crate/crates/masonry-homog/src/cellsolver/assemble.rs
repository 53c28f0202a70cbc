//! Discretization of the cell problem: block trial fields, bulk quadratic
//! form and the linear jump operator.
//!
//! At refinement 0 each block carries an affine field `t + C (x - c)` (full
//! gradient, so tangential sliding modes are representable). Refinement
//! level `r >= 1` subdivides each block into a conforming grid of `2^r`
//! pieces per side with a continuous piecewise-linear field inside the
//! block and independent traces across interfaces. Global translations are
//! the only zero modes of bulk-plus-jump energy; they are removed by
//! pinning one block (or, for boundary-value experiments, the prescribed
//! set of blocks).

use crate::error::{Error, Result};
use crate::microgeometry::{Facet, UnitCellMesh};
use crate::tensors::{sym_components, ElasticityOperator, SymTensor};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;
const INV_SQRT3: f64 = 0.577_350_269_189_625_8;

/// Rigid-mode handling: gauge-fix one block, pin the translation degrees
/// of freedom of a prescribed block set (hard boundary data), or leave all
/// degrees free (energy evaluation only; the subproblem matrix is then
/// singular).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PinMode {
    GaugeBlock0,
    PinnedBlocks(Vec<usize>),
    None,
}

/// Facet quadrature point used by the surface term.
#[derive(Debug, Clone)]
pub struct QuadPoint {
    pub facet: usize,
    pub point: [f64; 2],
    pub weight: f64,
    pub normal: [f64; 2],
}

/// One facet segment between trace breakpoints (postprocessing unit).
#[derive(Debug, Clone)]
pub struct FacetSegment {
    pub facet: usize,
    pub a: [f64; 2],
    pub b: [f64; 2],
}

/// Assembled cell problem: quadratic bulk form (reduced by pinning), jump
/// operator and quadrature metadata. Immutable and shareable across solves;
/// Cholesky factors are cached per penalty value.
pub struct CellAssembly {
    dim: usize,
    mesh: Arc<UnitCellMesh>,
    a_op: ElasticityOperator,
    refinement: usize,
    block_offset: Vec<usize>,
    block_ndofs: Vec<usize>,
    nd_full: usize,
    dof_map: Vec<Option<usize>>,
    ndofs: usize,
    /// Bulk Hessian `sum_e meas S^T A S` in reduced coordinates.
    h: DMatrix<f64>,
    /// Linear bulk coupling: gradient offset is `w * xi_mandel`.
    w: DMatrix<f64>,
    /// Jump operator, `dim` rows per quadrature point.
    j: DMatrix<f64>,
    jtj: DMatrix<f64>,
    quad: Vec<QuadPoint>,
    segments: Vec<FacetSegment>,
    rho_scale: f64,
    /// Orthonormal basis of the quadrature-invisible modes (zero bulk
    /// energy and zero jumps at every quadrature point). Penalized in the
    /// subproblem matrix; the discrete objective does not see them.
    null_modes: DMatrix<f64>,
    factors: Mutex<HashMap<u64, Arc<Cholesky<f64, Dyn>>>>,
}

impl CellAssembly {
    pub fn build(
        mesh: Arc<UnitCellMesh>,
        a_op: ElasticityOperator,
        refinement: usize,
        pin: PinMode,
    ) -> Result<Self> {
        let dim = mesh.dim;
        if a_op.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: a_op.dim(),
            });
        }
        if refinement > 6 {
            return Err(Error::InvalidInput(
                "refinement levels above 6 are not supported".into(),
            ));
        }
        if matches!(pin, PinMode::PinnedBlocks(_)) && refinement > 0 {
            return Err(Error::InvalidInput(
                "hard boundary data requires block-affine fields (refinement 0)".into(),
            ));
        }

        let nsub = 1usize << refinement;
        let per_block = |_b: usize| -> usize {
            if refinement == 0 {
                dim + dim * dim
            } else if dim == 1 {
                nsub + 1
            } else {
                2 * (nsub + 1) * (nsub + 1)
            }
        };

        let nb = mesh.blocks.len();
        let mut block_offset = Vec::with_capacity(nb);
        let mut block_ndofs = Vec::with_capacity(nb);
        let mut nd_full = 0usize;
        for b in 0..nb {
            block_offset.push(nd_full);
            let n = per_block(b);
            block_ndofs.push(n);
            nd_full += n;
        }

        // Pinned full-dof set.
        let mut pinned = vec![false; nd_full];
        match &pin {
            PinMode::GaugeBlock0 => {
                for c in 0..dim {
                    pinned[block_offset[0] + c] = true;
                }
            }
            PinMode::PinnedBlocks(set) => {
                for &b in set {
                    if b >= nb {
                        return Err(Error::InvalidInput(format!("pinned block {b} out of range")));
                    }
                    for c in 0..dim {
                        pinned[block_offset[b] + c] = true;
                    }
                }
                if set.is_empty() {
                    for c in 0..dim {
                        pinned[block_offset[0] + c] = true;
                    }
                }
            }
            PinMode::None => {}
        }
        let mut dof_map = vec![None; nd_full];
        let mut ndofs = 0usize;
        for i in 0..nd_full {
            if !pinned[i] {
                dof_map[i] = Some(ndofs);
                ndofs += 1;
            }
        }

        let v = sym_components(dim);
        let mut h = DMatrix::zeros(ndofs, ndofs);
        let mut w = DMatrix::zeros(ndofs, v);
        let a_m = a_op.matrix().clone();

        // Bulk form: loop over integration elements of every block.
        for block in &mesh.blocks {
            let nloc = block_ndofs[block.id];
            let off = block_offset[block.id];
            for (meas, s) in
                bulk_elements(dim, refinement, nsub, block.lo, block.hi, block.centroid, nloc)
            {
                let sas = s.transpose() * &a_m * &s * meas;
                let sa = s.transpose() * &a_m * meas;
                for i in 0..nloc {
                    let Some(gi) = dof_map[off + i] else { continue };
                    for j in 0..nloc {
                        if let Some(gj) = dof_map[off + j] {
                            h[(gi, gj)] += sas[(i, j)];
                        }
                    }
                    for k in 0..v {
                        w[(gi, k)] += sa[(i, k)];
                    }
                }
            }
        }

        // Facet quadrature and jump operator.
        let mut quad: Vec<QuadPoint> = Vec::new();
        let mut segments: Vec<FacetSegment> = Vec::new();
        for facet in &mesh.facets {
            let segs = facet_segments(&mesh, facet, dim, refinement, nsub);
            for (a, b) in segs {
                segments.push(FacetSegment { facet: facet.id, a, b });
                for (p, wgt) in segment_quadrature(dim, refinement, a, b) {
                    quad.push(QuadPoint {
                        facet: facet.id,
                        point: p,
                        weight: wgt,
                        normal: facet.normal,
                    });
                }
            }
        }

        let mut j = DMatrix::zeros(dim * quad.len(), ndofs);
        for (q, qp) in quad.iter().enumerate() {
            let facet = &mesh.facets[qp.facet];
            for (side, sign) in [(&facet.right, 1.0), (&facet.left, -1.0)] {
                let block = &mesh.blocks[side.block];
                let p = facet.side_point(side, qp.point);
                let triplets = trace_triplets(
                    dim,
                    refinement,
                    nsub,
                    block.lo,
                    block.hi,
                    block.centroid,
                    p,
                );
                let off = block_offset[side.block];
                for (loc, comp, coeff) in triplets {
                    if let Some(g) = dof_map[off + loc] {
                        j[(q * dim + comp, g)] += sign * coeff;
                    }
                }
            }
        }
        let jtj = j.transpose() * &j;

        // Penalty scale: mean Rayleigh quotient of the bulk form along the
        // jump rows.
        let mut acc = 0.0;
        let mut cnt = 0usize;
        for r in 0..j.nrows() {
            let row = j.row(r).transpose();
            let nn = row.dot(&row);
            if nn > 1e-14 {
                let hr = &h * &row;
                acc += row.dot(&hr) / nn;
                cnt += 1;
            }
        }
        let rho_scale = if cnt > 0 && acc > 1e-12 * cnt as f64 {
            acc / cnt as f64
        } else {
            1.0
        };

        // Reject meshes with blocks that touch no interface.
        let mut touched = vec![false; nb];
        for f in &mesh.facets {
            touched[f.left.block] = true;
            touched[f.right.block] = true;
        }
        if let Some(b) = touched.iter().position(|t| !t) {
            return Err(Error::Geometry(format!("floating block detected (block {b})")));
        }

        // Quadrature-invisible gauge modes: eigenvectors of H + c J^T J with
        // (numerically) zero eigenvalue. Example: checkerboards of per-block
        // rotations on even stack bonds, whose affine jumps vanish at the
        // facet midpoints. Bulk energy, constraints and surface term are all
        // invariant along these directions.
        let k_bal = &h + &jtj * rho_scale;
        let eig = k_bal.clone().symmetric_eigen();
        let lam_max = eig.eigenvalues.amax().max(1e-300);
        let mut null_cols: Vec<usize> = Vec::new();
        for (i, lam) in eig.eigenvalues.iter().enumerate() {
            if lam.abs() <= 1e-10 * lam_max {
                null_cols.push(i);
            }
        }
        let null_modes = if null_cols.is_empty() {
            DMatrix::zeros(ndofs, 0)
        } else {
            eig.eigenvectors.select_columns(null_cols.iter())
        };

        Ok(CellAssembly {
            dim,
            mesh,
            a_op,
            refinement,
            block_offset,
            block_ndofs,
            nd_full,
            dof_map,
            ndofs,
            h,
            w,
            j,
            jtj,
            quad,
            segments,
            rho_scale,
            null_modes,
            factors: Mutex::new(HashMap::new()),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ndofs(&self) -> usize {
        self.ndofs
    }

    pub fn mesh(&self) -> &UnitCellMesh {
        &self.mesh
    }

    pub fn a_op(&self) -> &ElasticityOperator {
        &self.a_op
    }

    pub fn refinement(&self) -> usize {
        self.refinement
    }

    pub fn quad(&self) -> &[QuadPoint] {
        &self.quad
    }

    pub fn segments(&self) -> &[FacetSegment] {
        &self.segments
    }

    pub fn jump_matrix(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn bulk_hessian(&self) -> &DMatrix<f64> {
        &self.h
    }

    /// Gradient offset of the bulk form for a given macroscopic strain.
    pub fn bulk_linear(&self, xi: &SymTensor) -> DVector<f64> {
        &self.w * DVector::from_column_slice(xi.mandel())
    }

    /// Default ADMM penalty for this assembly.
    pub fn rho_scale(&self) -> f64 {
        self.rho_scale
    }

    /// Exact bulk energy `1/2 sum_e meas ||xi + S x||_A^2`.
    pub fn bulk_energy(&self, x: &DVector<f64>, xi: &SymTensor) -> f64 {
        let xi_v = DVector::from_column_slice(xi.mandel());
        let quad = 0.5 * x.dot(&(&self.h * x));
        let lin = x.dot(&(&self.w * &xi_v));
        let cst = 0.5 * self.a_op.inner(xi, xi);
        (quad + lin + cst).max(0.0)
    }

    /// Jump vectors at all quadrature points, stacked.
    pub fn jumps_of(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.j * x
    }

    /// Jump of the discrete field at an arbitrary facet point.
    pub fn jump_at(&self, x: &DVector<f64>, facet: &Facet, point: [f64; 2]) -> [f64; 2] {
        let nsub = 1usize << self.refinement;
        let mut out = [0.0; 2];
        for (side, sign) in [(&facet.right, 1.0), (&facet.left, -1.0)] {
            let block = &self.mesh.blocks[side.block];
            let p = facet.side_point(side, point);
            let triplets = trace_triplets(
                self.dim,
                self.refinement,
                nsub,
                block.lo,
                block.hi,
                block.centroid,
                p,
            );
            let off = self.block_offset[side.block];
            for (loc, comp, coeff) in triplets {
                if let Some(g) = self.dof_map[off + loc] {
                    out[comp] += sign * coeff * x[g];
                }
            }
        }
        out
    }

    /// Per-block coefficient vectors (pinned entries restored as zeros).
    pub fn block_dofs_of(&self, x: &DVector<f64>) -> Vec<Vec<f64>> {
        let mut full = vec![0.0; self.nd_full];
        for (i, m) in self.dof_map.iter().enumerate() {
            if let Some(g) = m {
                full[i] = x[*g];
            }
        }
        self.mesh
            .blocks
            .iter()
            .map(|b| {
                let off = self.block_offset[b.id];
                full[off..off + self.block_ndofs[b.id]].to_vec()
            })
            .collect()
    }

    /// Cholesky factor of `H + rho J^T J` (plus the gauge-mode penalty),
    /// cached per penalty value.
    pub fn factor(&self, rho: f64) -> Result<Arc<Cholesky<f64, Dyn>>> {
        let key = rho.to_bits();
        if let Some(f) = self.factors.lock().unwrap().get(&key) {
            return Ok(f.clone());
        }
        let mut k = &self.h + &self.jtj * rho;
        if self.null_modes.ncols() > 0 {
            let sigma = self.rho_scale.max(rho);
            k += &self.null_modes * self.null_modes.transpose() * sigma;
        }
        let chol = Cholesky::new(k).ok_or_else(|| {
            Error::Geometry(
                "singular system after pinning (floating block or degenerate mesh)".into(),
            )
        })?;
        let arc = Arc::new(chol);
        self.factors.lock().unwrap().insert(key, arc.clone());
        Ok(arc)
    }
}

/// Integration elements of one block: `(measure, S)` with `S` mapping local
/// dofs to Mandel strain components.
fn bulk_elements(
    dim: usize,
    refinement: usize,
    nsub: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    centroid: [f64; 2],
    nloc: usize,
) -> Vec<(f64, DMatrix<f64>)> {
    let v = sym_components(dim);
    let mut out = Vec::new();
    if refinement == 0 {
        let meas = if dim == 1 {
            hi[0] - lo[0]
        } else {
            (hi[0] - lo[0]) * (hi[1] - lo[1])
        };
        let _ = centroid;
        let mut s = DMatrix::zeros(v, nloc);
        if dim == 1 {
            // dofs [t, C]
            s[(0, 1)] = 1.0;
        } else {
            // dofs [tx, ty, C00, C01, C10, C11]
            s[(0, 2)] = 1.0;
            s[(1, 5)] = 1.0;
            s[(2, 3)] = INV_SQRT2;
            s[(2, 4)] = INV_SQRT2;
        }
        out.push((meas, s));
    } else if dim == 1 {
        let hstep = (hi[0] - lo[0]) / nsub as f64;
        for k in 0..nsub {
            let mut s = DMatrix::zeros(v, nloc);
            s[(0, k)] = -1.0 / hstep;
            s[(0, k + 1)] = 1.0 / hstep;
            out.push((hstep, s));
        }
    } else {
        let hx = (hi[0] - lo[0]) / nsub as f64;
        let hy = (hi[1] - lo[1]) / nsub as f64;
        let vid = |i: usize, jj: usize| jj * (nsub + 1) + i;
        for cj in 0..nsub {
            for ci in 0..nsub {
                let v00 = vid(ci, cj);
                let v10 = vid(ci + 1, cj);
                let v01 = vid(ci, cj + 1);
                let v11 = vid(ci + 1, cj + 1);
                // two triangles per cell, diagonal v00-v11
                for tri in [[v00, v10, v11], [v00, v11, v01]] {
                    let pts: Vec<[f64; 2]> = tri
                        .iter()
                        .map(|&vv| {
                            let i = vv % (nsub + 1);
                            let jj = vv / (nsub + 1);
                            [lo[0] + i as f64 * hx, lo[1] + jj as f64 * hy]
                        })
                        .collect();
                    let d1 = [pts[1][0] - pts[0][0], pts[1][1] - pts[0][1]];
                    let d2 = [pts[2][0] - pts[0][0], pts[2][1] - pts[0][1]];
                    let det = d1[0] * d2[1] - d1[1] * d2[0];
                    let area = 0.5 * det.abs();
                    let g1 = [d2[1] / det, -d2[0] / det];
                    let g2 = [-d1[1] / det, d1[0] / det];
                    let g0 = [-g1[0] - g2[0], -g1[1] - g2[1]];
                    let grads = [g0, g1, g2];
                    let mut s = DMatrix::zeros(v, nloc);
                    for (k, &vv) in tri.iter().enumerate() {
                        let gx = grads[k][0];
                        let gy = grads[k][1];
                        s[(0, 2 * vv)] += gx;
                        s[(1, 2 * vv + 1)] += gy;
                        s[(2, 2 * vv)] += gy * INV_SQRT2;
                        s[(2, 2 * vv + 1)] += gx * INV_SQRT2;
                    }
                    out.push((area, s));
                }
            }
        }
    }
    out
}

/// Trace of the block field at a point of its closure, as
/// `(local dof, displacement component, coefficient)` triplets.
fn trace_triplets(
    dim: usize,
    refinement: usize,
    nsub: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    centroid: [f64; 2],
    p: [f64; 2],
) -> Vec<(usize, usize, f64)> {
    if refinement == 0 {
        let dx = p[0] - centroid[0];
        if dim == 1 {
            return vec![(0, 0, 1.0), (1, 0, dx)];
        }
        let dy = p[1] - centroid[1];
        return vec![
            (0, 0, 1.0),
            (2, 0, dx),
            (3, 0, dy),
            (1, 1, 1.0),
            (4, 1, dx),
            (5, 1, dy),
        ];
    }
    if dim == 1 {
        let hstep = (hi[0] - lo[0]) / nsub as f64;
        let t = ((p[0] - lo[0]) / hstep).clamp(0.0, nsub as f64);
        let k = (t.floor() as usize).min(nsub - 1);
        let th = t - k as f64;
        return vec![(k, 0, 1.0 - th), (k + 1, 0, th)];
    }
    let hx = (hi[0] - lo[0]) / nsub as f64;
    let hy = (hi[1] - lo[1]) / nsub as f64;
    let tx = ((p[0] - lo[0]) / hx).clamp(0.0, nsub as f64);
    let ty = ((p[1] - lo[1]) / hy).clamp(0.0, nsub as f64);
    let ci = (tx.floor() as usize).min(nsub - 1);
    let cj = (ty.floor() as usize).min(nsub - 1);
    let xl = tx - ci as f64;
    let yl = ty - cj as f64;
    let vid = |i: usize, jj: usize| jj * (nsub + 1) + i;
    let (v00, v10, v01, v11) = (
        vid(ci, cj),
        vid(ci + 1, cj),
        vid(ci, cj + 1),
        vid(ci + 1, cj + 1),
    );
    // barycentric weights on the triangle containing (xl, yl)
    let weights: Vec<(usize, f64)> = if xl >= yl {
        vec![(v00, 1.0 - xl), (v10, xl - yl), (v11, yl)]
    } else {
        vec![(v00, 1.0 - yl), (v01, yl - xl), (v11, xl)]
    };
    let mut out = Vec::with_capacity(6);
    for (vv, wgt) in weights {
        if wgt.abs() > 1e-15 {
            out.push((2 * vv, 0, wgt));
            out.push((2 * vv + 1, 1, wgt));
        }
    }
    out
}

/// Split a facet at the trace breakpoints of both adjacent blocks.
fn facet_segments(
    mesh: &UnitCellMesh,
    facet: &Facet,
    dim: usize,
    refinement: usize,
    nsub: usize,
) -> Vec<([f64; 2], [f64; 2])> {
    if dim == 1 || refinement == 0 {
        return vec![(facet.a, facet.b)];
    }
    // axis along which the facet extends
    let axis = if (facet.a[0] - facet.b[0]).abs() < 1e-12 { 1 } else { 0 };
    let (s0, s1) = (facet.a[axis], facet.b[axis]);
    let mut stations = vec![s0, s1];
    for side in [&facet.left, &facet.right] {
        let block = &mesh.blocks[side.block];
        let step = (block.hi[axis] - block.lo[axis]) / nsub as f64;
        for k in 0..=nsub {
            let st = block.lo[axis] + k as f64 * step - side.shift[axis] as f64;
            if st > s0 + 1e-12 && st < s1 - 1e-12 {
                stations.push(st);
            }
        }
    }
    stations.sort_by(|a, b| a.partial_cmp(b).unwrap());
    stations.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut segs = Vec::with_capacity(stations.len() - 1);
    for win in stations.windows(2) {
        let mut a = facet.a;
        let mut b = facet.b;
        a[axis] = win[0];
        b[axis] = win[1];
        segs.push((a, b));
    }
    segs
}

/// Quadrature on one facet segment: midpoint at refinement 0, two-point
/// Gauss at refinement >= 1. Point facets (1D) carry their full measure.
fn segment_quadrature(
    dim: usize,
    refinement: usize,
    a: [f64; 2],
    b: [f64; 2],
) -> Vec<([f64; 2], f64)> {
    if dim == 1 {
        return vec![(a, 1.0)];
    }
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    if refinement == 0 {
        return vec![(mid, len)];
    }
    let half = [0.5 * (b[0] - a[0]), 0.5 * (b[1] - a[1])];
    let off = INV_SQRT3;
    vec![
        ([mid[0] - off * half[0], mid[1] - off * half[1]], 0.5 * len),
        ([mid[0] + off * half[0], mid[1] + off * half[1]], 0.5 * len),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microgeometry::GeometrySpec;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn jump_operator_satisfies_divergence_identity() {
        // sum_b meas_b sym(C_b) + sum_q w_q jump_q (.) nu_q = 0 for periodic
        // perturbations, at every refinement level
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        for spec in [
            GeometrySpec::Chain1d,
            GeometrySpec::StackBond { nx: 2, ny: 2 },
            GeometrySpec::RunningBond { nx: 2, ny: 2, offset: 0.5 },
        ] {
            for refinement in [0usize, 1, 2] {
                let mesh = Arc::new(spec.build().unwrap());
                let dim = mesh.dim;
                let a = ElasticityOperator::identity(dim);
                let asm =
                    CellAssembly::build(mesh.clone(), a, refinement, PinMode::GaugeBlock0)
                        .unwrap();
                let x = DVector::from_fn(asm.ndofs(), |_, _| rng.gen_range(-1.0..1.0));
                // strain average from the bulk form: d/dxi of bulk at xi=0 is W^T x
                let avg = asm.w.transpose() * &x;
                let jumps = asm.jumps_of(&x);
                let mut total = SymTensor::from_mandel(dim, avg.as_slice()).unwrap();
                for (q, qp) in asm.quad().iter().enumerate() {
                    let j = [jumps[q * dim], if dim == 2 { jumps[q * dim + 1] } else { 0.0 }];
                    let js =
                        crate::tensors::sym_dyad(&j[..dim], &qp.normal[..dim]).unwrap();
                    total = total.add(&js.scale(qp.weight));
                }
                assert!(
                    total.norm() < 1e-10,
                    "identity violated for {spec:?} refinement {refinement}: {}",
                    total.norm()
                );
            }
        }
    }

    #[test]
    fn refined_block_contains_affine_fields() {
        // an affine field interpolated at the vertices reproduces its own
        // strain in every triangle
        let mesh = Arc::new(GeometrySpec::StackBond { nx: 1, ny: 1 }.build().unwrap());
        let a = ElasticityOperator::identity(2);
        let asm = CellAssembly::build(mesh.clone(), a, 2, PinMode::GaugeBlock0).unwrap();
        // u(x) = C (x - c) with C = [[0.3, -0.2], [0.5, 0.1]]
        let c = [[0.3, -0.2], [0.5, 0.1]];
        let block = &mesh.blocks[0];
        let nsub = 4;
        let mut full = vec![0.0; 2 * (nsub + 1) * (nsub + 1)];
        for jj in 0..=nsub {
            for i in 0..=nsub {
                let p = [
                    block.lo[0] + i as f64 * 0.25,
                    block.lo[1] + jj as f64 * 0.25,
                ];
                let d = [p[0] - block.centroid[0], p[1] - block.centroid[1]];
                let vv = jj * (nsub + 1) + i;
                full[2 * vv] = c[0][0] * d[0] + c[0][1] * d[1];
                full[2 * vv + 1] = c[1][0] * d[0] + c[1][1] * d[1];
            }
        }
        // reduce (vertex 0 is pinned; shift so the pinned vertex is exact)
        let shift = [full[0], full[1]];
        let mut x = DVector::zeros(asm.ndofs());
        let mut g = 0usize;
        for (i, val) in full.iter().enumerate() {
            if i < 2 {
                continue;
            }
            x[g] = val - shift[i % 2];
            g += 1;
        }
        let sym = SymTensor::from_entries_2d(c[0][0], c[1][1], 0.5 * (c[0][1] + c[1][0]));
        let e = asm.bulk_energy(&x, &SymTensor::zero(2));
        assert_relative_eq!(e, 0.5 * sym.norm().powi(2), max_relative = 1e-10);
    }

    #[test]
    fn refinement_splits_facets_at_grid_stations() {
        let mesh = Arc::new(GeometrySpec::StackBond { nx: 2, ny: 2 }.build().unwrap());
        let a = ElasticityOperator::identity(2);
        let asm0 = CellAssembly::build(mesh.clone(), a.clone(), 0, PinMode::GaugeBlock0).unwrap();
        let asm1 = CellAssembly::build(mesh.clone(), a, 1, PinMode::GaugeBlock0).unwrap();
        assert_eq!(asm0.quad().len(), 8);
        // level 1: each of the 8 facets splits into 2 segments with 2 Gauss
        // points each
        assert_eq!(asm1.quad().len(), 32);
        let total0: f64 = asm0.quad().iter().map(|q| q.weight).sum();
        let total1: f64 = asm1.quad().iter().map(|q| q.weight).sum();
        assert_relative_eq!(total0, total1, max_relative = 1e-12);
    }
}
