//! Periodic unit-cell meshes: polygonal blocks tiling Y = (0,1)^dim,
//! interface facets with oriented normals, and the periodic identification
//! of boundary facets.
//!
//! Blocks are stored as rectangles in "unfolded" coordinates (a block may
//! extend past 1 when a brick row wraps around the cell). Each facet carries
//! a lattice shift per side: a point `p` on the facet maps into a side's
//! block frame as `p + shift`. Interior facets have zero shifts; facets that
//! cross the cell boundary carry a nonzero relative shift and are their own
//! periodic partner (the facet is stored once and identified with itself
//! across the cell).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

const GEOM_TOL: f64 = 1e-12;

/// Polygonal (rectangular) block of the tiling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Block {
    pub id: usize,
    /// Unfolded rectangle corners; `hi` may exceed 1 for wrapping bricks.
    /// In 1D the y-extent is degenerate (`lo[1] == hi[1] == 0`).
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub centroid: [f64; 2],
    pub measure: f64,
}

/// One side of a facet: the adjacent block and the lattice shift mapping
/// facet coordinates into that block's unfolded frame.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FacetSide {
    pub block: usize,
    pub shift: [i32; 2],
}

/// Interface facet separating exactly two blocks (possibly the same block
/// across the periodic wrap).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Facet {
    pub id: usize,
    pub left: FacetSide,
    pub right: FacetSide,
    /// Unit normal oriented from `left` to `right`.
    pub normal: [f64; 2],
    /// Endpoints of the facet segment; coincide in 1D (a point facet).
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub midpoint: [f64; 2],
    pub measure: f64,
    /// True when the two sides differ by a lattice shift (periodic facet).
    pub wrap: bool,
}

impl Facet {
    /// Facet point mapped into the frame of one side's block.
    pub fn side_point(&self, side: &FacetSide, p: [f64; 2]) -> [f64; 2] {
        [p[0] + side.shift[0] as f64, p[1] + side.shift[1] as f64]
    }

    /// Relative lattice shift `right - left`; nonzero exactly on wrap facets.
    pub fn relative_shift(&self) -> [i32; 2] {
        [
            self.right.shift[0] - self.left.shift[0],
            self.right.shift[1] - self.left.shift[1],
        ]
    }
}

/// Periodic unit-cell mesh.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitCellMesh {
    pub dim: usize,
    pub blocks: Vec<Block>,
    pub facets: Vec<Facet>,
    /// Identification of boundary facets across Y. Wrap facets are stored
    /// once, so each is paired with itself.
    pub periodic_pairs: Vec<(usize, usize)>,
}

impl UnitCellMesh {
    pub fn total_block_measure(&self) -> f64 {
        self.blocks.iter().map(|b| b.measure).sum()
    }

    pub fn total_facet_measure(&self) -> f64 {
        self.facets.iter().map(|f| f.measure).sum()
    }
}

/// One-dimensional chain: a single unit block with one periodic interface
/// at the integer points.
pub fn build_chain_1d() -> UnitCellMesh {
    let block = Block {
        id: 0,
        lo: [0.0, 0.0],
        hi: [1.0, 0.0],
        centroid: [0.5, 0.0],
        measure: 1.0,
    };
    let facet = Facet {
        id: 0,
        left: FacetSide { block: 0, shift: [1, 0] },
        right: FacetSide { block: 0, shift: [0, 0] },
        normal: [1.0, 0.0],
        a: [0.0, 0.0],
        b: [0.0, 0.0],
        midpoint: [0.0, 0.0],
        measure: 1.0,
        wrap: true,
    };
    UnitCellMesh {
        dim: 1,
        blocks: vec![block],
        facets: vec![facet],
        periodic_pairs: vec![(0, 0)],
    }
}

/// Stack bond: `nx * ny` rectangular blocks with aligned joints.
pub fn build_stack_bond(nx: usize, ny: usize) -> Result<UnitCellMesh> {
    build_rows(nx, ny, 0.0)
}

/// Running bond: brick rows shifted by `offset` (in units of the brick
/// width `1/nx`) per row. Requires `offset * nx` integer so that the joints
/// stay compatible with the periodic cell; `offset = 0` degenerates to the
/// stack bond.
pub fn build_running_bond(nx: usize, ny: usize, offset: f64) -> Result<UnitCellMesh> {
    if !(0.0..1.0).contains(&offset) {
        return Err(Error::InvalidInput(format!(
            "running-bond offset must lie in [0, 1), got {offset}"
        )));
    }
    let k = offset * nx as f64;
    if (k - k.round()).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "running-bond offset {offset} incompatible with periodicity: offset * nx = {k} is not an integer"
        )));
    }
    build_rows(nx, ny, offset)
}

fn fold(x: f64) -> f64 {
    let mut y = x % 1.0;
    if y < 0.0 {
        y += 1.0;
    }
    if (y - 1.0).abs() < GEOM_TOL {
        y = 0.0;
    }
    y
}

/// Row-based brick tiling shared by the stack and running bonds.
fn build_rows(nx: usize, ny: usize, offset: f64) -> Result<UnitCellMesh> {
    if nx < 1 || ny < 1 {
        return Err(Error::InvalidInput(format!(
            "block counts must be at least 1, got {nx}x{ny}"
        )));
    }
    let w = 1.0 / nx as f64;
    let h = 1.0 / ny as f64;
    // Per-row origin of the brick pattern, reduced modulo one brick width.
    let row_start: Vec<f64> = (0..ny)
        .map(|j| (j as f64 * offset * w) % w)
        .collect();

    let mut blocks = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x0 = row_start[j] + i as f64 * w;
            let y0 = j as f64 * h;
            blocks.push(Block {
                id: j * nx + i,
                lo: [x0, y0],
                hi: [x0 + w, y0 + h],
                centroid: [x0 + 0.5 * w, y0 + 0.5 * h],
                measure: w * h,
            });
        }
    }

    // Block of `row` whose interval contains [xa, xb] after an integer
    // shift; returns the side descriptor.
    let find_block = |row: usize, xa: f64, xb: f64, yshift: i32| -> Result<FacetSide> {
        for i in 0..nx {
            let b = &blocks[row * nx + i];
            for kx in -1..=1i32 {
                let lo = b.lo[0] - kx as f64;
                let hi = b.hi[0] - kx as f64;
                if xa >= lo - GEOM_TOL && xb <= hi + GEOM_TOL {
                    return Ok(FacetSide {
                        block: b.id,
                        shift: [kx, yshift],
                    });
                }
            }
        }
        Err(Error::Geometry(format!(
            "no block of row {row} covers segment [{xa}, {xb}]"
        )))
    };

    let mut facets = Vec::new();

    // Vertical facets: one per block left edge, spanning the row height.
    for j in 0..ny {
        for i in 0..nx {
            let right_block = &blocks[j * nx + i];
            let x = right_block.lo[0];
            // Block of the same row whose right edge meets x (mod 1).
            let mut left_side = None;
            for i2 in 0..nx {
                let cand = &blocks[j * nx + i2];
                for kx in 0..=1i32 {
                    if (cand.hi[0] - (x + kx as f64)).abs() < GEOM_TOL {
                        left_side = Some(FacetSide {
                            block: cand.id,
                            shift: [kx, 0],
                        });
                    }
                }
            }
            let left = left_side.ok_or_else(|| {
                Error::Geometry(format!("no left neighbour at joint x = {x} in row {j}"))
            })?;
            let (ya, yb) = (j as f64 * h, (j + 1) as f64 * h);
            let right = FacetSide { block: right_block.id, shift: [0, 0] };
            let wrap = left.shift != right.shift;
            facets.push(Facet {
                id: 0,
                left,
                right,
                normal: [1.0, 0.0],
                a: [x, ya],
                b: [x, yb],
                midpoint: [x, 0.5 * (ya + yb)],
                measure: h,
                wrap,
            });
        }
    }

    // Horizontal facets: the interface at each row's bottom edge, split at
    // the union of both rows' joints (T-junctions refine the facet list so
    // each piece separates exactly two blocks).
    for j in 0..ny {
        let y = j as f64 * h;
        let row_above = j;
        let (row_below, yshift_below) = if j == 0 { (ny - 1, 1) } else { (j - 1, 0) };
        let mut points: Vec<f64> = Vec::new();
        for row in [row_above, row_below] {
            for i in 0..nx {
                points.push(fold(row_start[row] + i as f64 * w));
            }
        }
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        points.dedup_by(|a, b| (*a - *b).abs() < GEOM_TOL);
        let m = points.len();
        for k in 0..m {
            let xa = points[k];
            let xb = if k + 1 < m { points[k + 1] } else { points[0] + 1.0 };
            let left = find_block(row_below, xa, xb, yshift_below)?;
            let right = find_block(row_above, xa, xb, 0)?;
            let wrap = left.shift != right.shift;
            facets.push(Facet {
                id: 0,
                left,
                right,
                normal: [0.0, 1.0],
                a: [xa, y],
                b: [xb, y],
                midpoint: [0.5 * (xa + xb), y],
                measure: xb - xa,
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

    Ok(UnitCellMesh {
        dim: 2,
        blocks,
        facets,
        periodic_pairs,
    })
}

/// Serializable description of a unit-cell geometry.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeometrySpec {
    Chain1d,
    StackBond { nx: usize, ny: usize },
    RunningBond { nx: usize, ny: usize, offset: f64 },
}

impl GeometrySpec {
    pub fn dim(&self) -> usize {
        match self {
            GeometrySpec::Chain1d => 1,
            _ => 2,
        }
    }

    pub fn build(&self) -> Result<UnitCellMesh> {
        match self {
            GeometrySpec::Chain1d => Ok(build_chain_1d()),
            GeometrySpec::StackBond { nx, ny } => build_stack_bond(*nx, *ny),
            GeometrySpec::RunningBond { nx, ny, offset } => build_running_bond(*nx, *ny, *offset),
        }
    }

    /// Parse a compact CLI string: `chain`, `stack:NXxNY` or
    /// `running:NXxNY:OFFSET`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let parse_grid = |g: &str| -> Result<(usize, usize)> {
            let (a, b) = g
                .split_once('x')
                .ok_or_else(|| Error::InvalidInput(format!("expected NXxNY, got '{g}'")))?;
            Ok((
                a.parse()
                    .map_err(|_| Error::InvalidInput(format!("bad block count '{a}'")))?,
                b.parse()
                    .map_err(|_| Error::InvalidInput(format!("bad block count '{b}'")))?,
            ))
        };
        match parts.as_slice() {
            ["chain"] => Ok(GeometrySpec::Chain1d),
            ["stack", grid] => {
                let (nx, ny) = parse_grid(grid)?;
                Ok(GeometrySpec::StackBond { nx, ny })
            }
            ["running", grid, off] => {
                let (nx, ny) = parse_grid(grid)?;
                let offset: f64 = off
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad offset '{off}'")))?;
                Ok(GeometrySpec::RunningBond { nx, ny, offset })
            }
            _ => Err(Error::InvalidInput(format!(
                "unknown geometry '{s}' (expected chain, stack:NXxNY or running:NXxNY:OFFSET)"
            ))),
        }
    }
}

impl std::fmt::Display for GeometrySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GeometrySpec::Chain1d => write!(f, "chain"),
            GeometrySpec::StackBond { nx, ny } => write!(f, "stack:{nx}x{ny}"),
            GeometrySpec::RunningBond { nx, ny, offset } => {
                write!(f, "running:{nx}x{ny}:{offset}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chain_1d_structure() {
        let mesh = build_chain_1d();
        assert_eq!(mesh.blocks.len(), 1);
        assert_eq!(mesh.facets.len(), 1);
        assert_relative_eq!(mesh.blocks[0].measure, 1.0);
        assert_relative_eq!(mesh.facets[0].measure, 1.0);
        assert_eq!(mesh.facets[0].normal, [1.0, 0.0]);
        // single facet is its own periodic partner
        assert_eq!(mesh.periodic_pairs, vec![(0, 0)]);
    }

    #[test]
    fn stack_bond_1x1() {
        let mesh = build_stack_bond(1, 1).unwrap();
        assert_eq!(mesh.blocks.len(), 1);
        assert_eq!(mesh.facets.len(), 2);
        assert!(mesh.facets.iter().all(|f| f.wrap));
    }

    #[test]
    fn stack_bond_2x2_counts() {
        let mesh = build_stack_bond(2, 2).unwrap();
        assert_eq!(mesh.blocks.len(), 4);
        assert_eq!(mesh.facets.len(), 8);
        let wrap = mesh.facets.iter().filter(|f| f.wrap).count();
        assert_eq!(wrap, 4);
        assert_relative_eq!(mesh.total_facet_measure(), 4.0, max_relative = 1e-12);
    }

    #[test]
    fn running_bond_2x2_half_counts() {
        // Hand drawing, rows shifted half a brick (absolute shift 1/4):
        // row 0 joints {0, 1/2}, row 1 joints {1/4, 3/4}; 4 vertical facets
        // of length 1/2 and each horizontal interface splits into 4 pieces
        // of length 1/4, giving 12 facets total.
        let mesh = build_running_bond(2, 2, 0.5).unwrap();
        assert_eq!(mesh.blocks.len(), 4);
        assert_eq!(mesh.facets.len(), 12);
        assert_relative_eq!(mesh.total_facet_measure(), 4.0, max_relative = 1e-12);
        for b in &mesh.blocks {
            assert_relative_eq!(b.measure, 0.25, max_relative = 1e-12);
        }
    }

    #[test]
    fn running_bond_zero_offset_matches_stack() {
        let a = build_stack_bond(3, 2).unwrap();
        let b = build_running_bond(3, 2, 0.0).unwrap();
        assert_eq!(a.facets.len(), b.facets.len());
        for (fa, fb) in a.facets.iter().zip(&b.facets) {
            assert_eq!(fa.left.block, fb.left.block);
            assert_eq!(fa.right.block, fb.right.block);
            assert_eq!(fa.left.shift, fb.left.shift);
            assert_relative_eq!(fa.measure, fb.measure, max_relative = 1e-12);
        }
    }

    #[test]
    fn running_bond_rejects_incompatible_offset() {
        assert!(build_running_bond(2, 2, 0.3).is_err());
        assert!(build_running_bond(1, 2, 0.5).is_err());
    }

    #[test]
    fn measure_closure_all_builders() {
        let meshes = vec![
            build_chain_1d(),
            build_stack_bond(1, 1).unwrap(),
            build_stack_bond(2, 2).unwrap(),
            build_stack_bond(3, 1).unwrap(),
            build_stack_bond(2, 4).unwrap(),
            build_running_bond(2, 2, 0.5).unwrap(),
            build_running_bond(4, 3, 0.25).unwrap(),
            build_running_bond(3, 2, 2.0 / 3.0 - 1e-16).unwrap_or_else(|_| {
                build_running_bond(3, 2, 1.0 / 3.0).unwrap()
            }),
        ];
        for mesh in meshes {
            assert!((mesh.total_block_measure() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn facet_invariants_all_builders() {
        for mesh in [
            build_chain_1d(),
            build_stack_bond(2, 2).unwrap(),
            build_running_bond(4, 3, 0.25).unwrap(),
        ] {
            for f in &mesh.facets {
                let n = (f.normal[0] * f.normal[0] + f.normal[1] * f.normal[1]).sqrt();
                assert_relative_eq!(n, 1.0, max_relative = 1e-12);
                assert_eq!(f.wrap, f.relative_shift() != [0, 0]);
                // each side's frame contains the facet
                for side in [&f.left, &f.right] {
                    let block = &mesh.blocks[side.block];
                    for p in [f.a, f.b] {
                        let q = f.side_point(side, p);
                        for d in 0..mesh.dim {
                            assert!(q[d] >= block.lo[d] - 1e-9 && q[d] <= block.hi[d] + 1e-9);
                        }
                    }
                }
            }
            // the pairing is a (trivial) involution over wrap facets
            for &(a, b) in &mesh.periodic_pairs {
                assert_eq!(a, b);
                assert!(mesh.facets[a].wrap);
            }
            let wrap_count = mesh.facets.iter().filter(|f| f.wrap).count();
            assert_eq!(wrap_count, mesh.periodic_pairs.len());
        }
    }

    /// Discrete divergence identity: for any per-block affine periodic
    /// perturbation, the volume integral of its strain plus the facet
    /// integral of jump (.) nu vanishes.
    #[test]
    fn discrete_divergence_identity() {
        use crate::tensors::sym_dyad;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for mesh in [
            build_chain_1d(),
            build_stack_bond(1, 1).unwrap(),
            build_stack_bond(2, 3).unwrap(),
            build_running_bond(2, 2, 0.5).unwrap(),
            build_running_bond(4, 2, 0.25).unwrap(),
        ] {
            let dim = mesh.dim;
            // random affine field per block: u_b(x) = t_b + C_b (x - c_b)
            let fields: Vec<([f64; 2], [[f64; 2]; 2])> = mesh
                .blocks
                .iter()
                .map(|_| {
                    (
                        [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                        [
                            [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                            [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                        ],
                    )
                })
                .collect();
            let eval = |block: usize, p: [f64; 2]| -> [f64; 2] {
                let (t, c) = &fields[block];
                let d = [
                    p[0] - mesh.blocks[block].centroid[0],
                    p[1] - mesh.blocks[block].centroid[1],
                ];
                [
                    t[0] + c[0][0] * d[0] + c[0][1] * d[1],
                    t[1] + c[1][0] * d[0] + c[1][1] * d[1],
                ]
            };
            let mut total = crate::tensors::SymTensor::zero(dim);
            for b in &mesh.blocks {
                let c = &fields[b.id].1;
                let strain = match dim {
                    1 => crate::tensors::SymTensor::scalar(c[0][0]),
                    _ => crate::tensors::SymTensor::from_entries_2d(
                        c[0][0],
                        c[1][1],
                        0.5 * (c[0][1] + c[1][0]),
                    ),
                };
                total = total.add(&strain.scale(b.measure));
            }
            for f in &mesh.facets {
                // midpoint rule: exact for the affine integrand jump (.) nu
                let pl = f.side_point(&f.left, f.midpoint);
                let pr = f.side_point(&f.right, f.midpoint);
                let ul = eval(f.left.block, pl);
                let ur = eval(f.right.block, pr);
                let jump = [ur[0] - ul[0], ur[1] - ul[1]];
                let js = sym_dyad(&jump[..dim], &f.normal[..dim]).unwrap();
                total = total.add(&js.scale(f.measure));
            }
            assert!(
                total.norm() <= 1e-12,
                "divergence identity violated: |residual| = {}",
                total.norm()
            );
        }
    }

    #[test]
    fn geometry_spec_parse_roundtrip() {
        for s in ["chain", "stack:2x2", "running:4x3:0.25"] {
            let g = GeometrySpec::parse(s).unwrap();
            assert_eq!(g.to_string(), s);
            g.build().unwrap();
        }
        assert!(GeometrySpec::parse("hex:2").is_err());
    }
}
