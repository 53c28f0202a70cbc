//! Evaluation of the homogenized functional on macroscopic piecewise-affine
//! displacement fields with explicit crack segments: a bulk integral of the
//! homogenized density plus a singular integral weighting crack openings by
//! the recession function, gated by the admissibility of every crack strain
//! against the homogenized tensile cone.

use crate::cache::SolveCache;
use crate::cellsolver::SolverParams;
use crate::cones::{project_polar, ConeSpec};
use crate::density::{analytic_1d, estimate_recession, ProblemTemplate};
use crate::error::{Error, Result};
use crate::io::pairwise_sum;
use crate::tensors::{sym_dyad, SymTensor};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Piecewise-affine displacement on an interval partition (1D) or a
/// triangulation (2D), with explicit crack segments.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "dim")]
pub enum MacroField {
    #[serde(rename = "1")]
    OneD(MacroField1d),
    #[serde(rename = "2")]
    TwoD(MacroField2d),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Element1d {
    pub x0: f64,
    pub x1: f64,
    /// Displacement at `x0`.
    pub u0: f64,
    pub slope: f64,
}

impl Element1d {
    fn eval(&self, x: f64) -> f64 {
        self.u0 + self.slope * (x - self.x0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Crack1d {
    pub x: f64,
    /// Jump `u(x+) - u(x-)`.
    pub jump: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MacroField1d {
    /// Contiguous, sorted partition of the domain interval.
    pub elements: Vec<Element1d>,
    pub cracks: Vec<Crack1d>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Element2d {
    pub vertices: [[f64; 2]; 3],
    /// Affine displacement `u(x) = offset + grad x` (row-major gradient).
    pub offset: [f64; 2],
    pub grad: [[f64; 2]; 2],
}

impl Element2d {
    fn eval(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.offset[0] + self.grad[0][0] * p[0] + self.grad[0][1] * p[1],
            self.offset[1] + self.grad[1][0] * p[0] + self.grad[1][1] * p[1],
        ]
    }

    fn area(&self) -> f64 {
        let [p0, p1, p2] = self.vertices;
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])).abs()
    }

    fn strain(&self) -> SymTensor {
        SymTensor::from_entries_2d(
            self.grad[0][0],
            self.grad[1][1],
            0.5 * (self.grad[0][1] + self.grad[1][0]),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Crack2d {
    pub a: [f64; 2],
    pub b: [f64; 2],
    /// Unit normal pointing from the `left` element into the `right` one.
    pub normal: [f64; 2],
    /// Jump `u_right - u_left`, constant along the segment.
    pub jump: [f64; 2],
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MacroField2d {
    pub elements: Vec<Element2d>,
    pub cracks: Vec<Crack2d>,
}

const TRACE_TOL: f64 = 1e-10;

impl MacroField {
    pub fn dim(&self) -> usize {
        match self {
            MacroField::OneD(_) => 1,
            MacroField::TwoD(_) => 2,
        }
    }

    /// Structural consistency: element displacements and crack jumps agree,
    /// and traces are continuous wherever no crack is declared.
    pub fn validate(&self) -> Result<()> {
        match self {
            MacroField::OneD(f) => {
                if f.elements.is_empty() {
                    return Err(Error::InvalidInput("field has no elements".into()));
                }
                for w in f.elements.windows(2) {
                    if (w[0].x1 - w[1].x0).abs() > 1e-12 {
                        return Err(Error::InvalidInput(format!(
                            "element partition has a gap at x = {}",
                            w[0].x1
                        )));
                    }
                }
                for w in f.elements.windows(2) {
                    let x = w[0].x1;
                    let trace_jump = w[1].eval(x) - w[0].eval(x);
                    let declared = f
                        .cracks
                        .iter()
                        .find(|c| (c.x - x).abs() < 1e-12)
                        .map_or(0.0, |c| c.jump);
                    if (trace_jump - declared).abs() > TRACE_TOL * (1.0 + declared.abs()) {
                        return Err(Error::InvalidInput(format!(
                            "trace difference {trace_jump} at x = {x} does not match the declared jump {declared}"
                        )));
                    }
                }
                Ok(())
            }
            MacroField::TwoD(f) => {
                for (i, c) in f.cracks.iter().enumerate() {
                    if c.left >= f.elements.len() || c.right >= f.elements.len() {
                        return Err(Error::InvalidInput(format!(
                            "crack {i} references a missing element"
                        )));
                    }
                    let n = (c.normal[0] * c.normal[0] + c.normal[1] * c.normal[1]).sqrt();
                    if (n - 1.0).abs() > 1e-9 {
                        return Err(Error::InvalidInput(format!(
                            "crack {i} normal is not unit length"
                        )));
                    }
                    let mid = [0.5 * (c.a[0] + c.b[0]), 0.5 * (c.a[1] + c.b[1])];
                    for p in [c.a, c.b, mid] {
                        let ul = f.elements[c.left].eval(p);
                        let ur = f.elements[c.right].eval(p);
                        let d = [ur[0] - ul[0] - c.jump[0], ur[1] - ul[1] - c.jump[1]];
                        let scale = 1.0
                            + (c.jump[0] * c.jump[0] + c.jump[1] * c.jump[1]).sqrt();
                        if (d[0] * d[0] + d[1] * d[1]).sqrt() > TRACE_TOL * scale {
                            return Err(Error::InvalidInput(format!(
                                "crack {i}: stored jump does not match the trace difference at {p:?}"
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Crack strains `jump (.) nu` with their measures.
    fn crack_strains(&self) -> Vec<(f64, SymTensor)> {
        match self {
            MacroField::OneD(f) => f
                .cracks
                .iter()
                .map(|c| (1.0, SymTensor::scalar(c.jump)))
                .collect(),
            MacroField::TwoD(f) => f
                .cracks
                .iter()
                .map(|c| {
                    let len =
                        ((c.b[0] - c.a[0]).powi(2) + (c.b[1] - c.a[1]).powi(2)).sqrt();
                    (len, sym_dyad(&c.jump, &c.normal).expect("dims"))
                })
                .collect(),
        }
    }
}

/// Per-crack admissibility record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentReport {
    pub segment: usize,
    pub eta: SymTensor,
    pub polar_residual: f64,
    pub admissible: bool,
}

/// Screen every crack strain against the homogenized cone: the projection
/// of `jump (.) nu` onto the orthogonal cone must vanish.
pub fn admissible(
    field: &MacroField,
    k_hom: &ConeSpec,
    tol: f64,
) -> Result<(bool, Vec<SegmentReport>)> {
    field.validate()?;
    let mut reports = Vec::new();
    let mut all = true;
    for (i, (_, eta)) in field.crack_strains().iter().enumerate() {
        let residual = if eta.norm() == 0.0 {
            0.0
        } else {
            project_polar(k_hom, eta, 1e-12)?.norm()
        };
        let ok = residual <= tol * eta.norm().max(1.0);
        all &= ok;
        reports.push(SegmentReport {
            segment: i,
            eta: *eta,
            polar_residual: residual,
            admissible: ok,
        });
    }
    Ok((all, reports))
}

/// Source of homogenized density values for the evaluator.
pub trait DensitySource: Sync {
    fn dim(&self) -> usize;
    /// Bulk density at a strain.
    fn f(&self, xi: &SymTensor) -> Result<f64>;
    /// Recession value along a unit direction (`None` encodes infinite).
    fn recession(&self, dir: &SymTensor) -> Result<Option<f64>>;
}

/// Exact one-dimensional closed form.
pub struct Analytic1dSource;

impl DensitySource for Analytic1dSource {
    fn dim(&self) -> usize {
        1
    }

    fn f(&self, xi: &SymTensor) -> Result<f64> {
        Ok(analytic_1d(xi.entry(0, 0)).0)
    }

    fn recession(&self, dir: &SymTensor) -> Result<Option<f64>> {
        let r = analytic_1d(dir.entry(0, 0)).1;
        Ok(if r.is_finite() { Some(r) } else { None })
    }
}

/// Density source backed by memoized cell solves with a node table:
/// queries within the trust radius of a tabulated strain interpolate by a
/// local affine (barycentric) fit, anything farther triggers an exact solve
/// that is added to the table.
pub struct CellDensitySource {
    template: ProblemTemplate,
    cache: Arc<SolveCache>,
    table: std::sync::Mutex<Vec<(SymTensor, f64)>>,
    pub trust_radius: f64,
    ladder: Vec<f64>,
}

impl CellDensitySource {
    pub fn new(template: ProblemTemplate, cache: Arc<SolveCache>) -> Self {
        CellDensitySource {
            template,
            cache,
            table: std::sync::Mutex::new(Vec::new()),
            trust_radius: 0.0,
            ladder: crate::density::DEFAULT_LADDER.to_vec(),
        }
    }

    pub fn with_trust_radius(mut self, r: f64) -> Self {
        self.trust_radius = r;
        self
    }

    /// Pre-tabulate nodes (e.g. from a density sweep).
    pub fn seed_table(&self, nodes: &[(SymTensor, f64)]) {
        self.table.lock().unwrap().extend_from_slice(nodes);
    }

    fn interpolate(&self, xi: &SymTensor) -> Option<f64> {
        if self.trust_radius <= 0.0 {
            return None;
        }
        let table = self.table.lock().unwrap();
        let v = xi.mandel().len();
        let mut near: Vec<(f64, &(SymTensor, f64))> = table
            .iter()
            .map(|ent| (ent.0.sub(xi).norm(), ent))
            .filter(|(d, _)| *d <= self.trust_radius)
            .collect();
        if near.len() < v + 1 {
            return None;
        }
        near.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        near.truncate((v + 1).max(2 * v));
        // local affine fit f ~ a + <b, xi>
        let n = near.len();
        let mut m = nalgebra::DMatrix::zeros(n, v + 1);
        let mut rhs = nalgebra::DVector::zeros(n);
        for (r, (_, (node, val))) in near.iter().enumerate() {
            m[(r, 0)] = 1.0;
            for (c, comp) in node.mandel().iter().enumerate() {
                m[(r, c + 1)] = *comp;
            }
            rhs[r] = *val;
        }
        let coef = m.svd(true, true).solve(&rhs, 1e-12).ok()?;
        let mut out = coef[0];
        for (c, comp) in xi.mandel().iter().enumerate() {
            out += coef[c + 1] * comp;
        }
        Some(out)
    }
}

impl DensitySource for CellDensitySource {
    fn dim(&self) -> usize {
        self.template.dim()
    }

    fn f(&self, xi: &SymTensor) -> Result<f64> {
        if let Some(v) = self.interpolate(xi) {
            return Ok(v);
        }
        let sol = self.cache.get_or_solve(&self.template.problem(*xi))?;
        self.table.lock().unwrap().push((*xi, sol.value));
        Ok(sol.value)
    }

    fn recession(&self, dir: &SymTensor) -> Result<Option<f64>> {
        let est = estimate_recession(&self.template, &self.cache, dir, &self.ladder)?;
        Ok(est.value)
    }
}

/// Evaluation result: bulk and singular parts with per-element and
/// per-segment breakdowns. `total` is infinite for inadmissible fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MacroEnergy {
    pub format_version: u32,
    pub total: f64,
    pub bulk: f64,
    pub singular: f64,
    pub admissible: bool,
    pub per_element: Vec<f64>,
    pub per_segment: Vec<f64>,
    pub segment_reports: Vec<SegmentReport>,
}

/// Evaluate the homogenized functional on a macroscopic field.
///
/// Bulk: `sum_T |T| f_hom(E u_T)`. Singular: `sum_segments measure *
/// |jump (.) nu| * f_inf(direction)`. Contributions are reduced with a
/// pairwise tree for reproducibility.
pub fn evaluate(
    field: &MacroField,
    source: &dyn DensitySource,
    k_hom: &ConeSpec,
    tol: f64,
) -> Result<MacroEnergy> {
    let (ok, reports) = admissible(field, k_hom, tol)?;
    if !ok {
        return Ok(MacroEnergy {
            format_version: 1,
            total: f64::INFINITY,
            bulk: 0.0,
            singular: 0.0,
            admissible: false,
            per_element: Vec::new(),
            per_segment: Vec::new(),
            segment_reports: reports,
        });
    }

    let per_element: Vec<f64> = match field {
        MacroField::OneD(f) => f
            .elements
            .iter()
            .map(|e| -> Result<f64> {
                Ok((e.x1 - e.x0) * source.f(&SymTensor::scalar(e.slope))?)
            })
            .collect::<Result<Vec<_>>>()?,
        MacroField::TwoD(f) => f
            .elements
            .iter()
            .map(|e| -> Result<f64> { Ok(e.area() * source.f(&e.strain())?) })
            .collect::<Result<Vec<_>>>()?,
    };

    let mut per_segment = Vec::new();
    for (measure, eta) in field.crack_strains() {
        let n = eta.norm();
        if n == 0.0 {
            per_segment.push(0.0);
            continue;
        }
        let dir = eta.scale(1.0 / n);
        match source.recession(&dir)? {
            Some(r) => per_segment.push(measure * n * r),
            None => {
                // admissible within tolerance yet infinite recession: the
                // strain sits on the cone boundary; surface cost blows up
                return Ok(MacroEnergy {
                    format_version: 1,
                    total: f64::INFINITY,
                    bulk: 0.0,
                    singular: 0.0,
                    admissible: false,
                    per_element,
                    per_segment,
                    segment_reports: reports,
                });
            }
        }
    }

    let bulk = pairwise_sum(&per_element);
    let singular = pairwise_sum(&per_segment);
    Ok(MacroEnergy {
        format_version: 1,
        total: bulk + singular,
        bulk,
        singular,
        admissible: true,
        per_element,
        per_segment,
        segment_reports: reports,
    })
}

/// The 1D homogenized cone `[0, +inf)` as a generated cone.
pub fn k_hom_1d() -> ConeSpec {
    ConeSpec::new("K_hom", 1, &[SymTensor::scalar(1.0)])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MacroConfig {
    pub format_version: u32,
    pub field: MacroField,
    /// Cone used for admissibility; defaults to the 1D cone for 1D fields.
    pub k_hom: Option<ConeSpec>,
    /// Cell template for 2D density values (unused for 1D fields).
    pub template: Option<ProblemTemplate>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub trust_radius: f64,
    #[serde(default)]
    pub solver: Option<SolverParams>,
}

fn default_tol() -> f64 {
    1e-8
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bulk_field_1d(slope: f64) -> MacroField {
        MacroField::OneD(MacroField1d {
            elements: vec![Element1d { x0: 0.0, x1: 1.0, u0: 0.0, slope }],
            cracks: vec![],
        })
    }

    fn jump_field_1d(jump: f64) -> MacroField {
        MacroField::OneD(MacroField1d {
            elements: vec![
                Element1d { x0: 0.0, x1: 0.5, u0: 0.0, slope: 0.0 },
                Element1d { x0: 0.5, x1: 1.0, u0: jump, slope: 0.0 },
            ],
            cracks: vec![Crack1d { x: 0.5, jump }],
        })
    }

    #[test]
    fn bulk_only_quadratic_branch() {
        let e = evaluate(&bulk_field_1d(0.5), &Analytic1dSource, &k_hom_1d(), 1e-8).unwrap();
        assert_relative_eq!(e.total, 0.125, epsilon = 1e-9);
        assert_eq!(e.singular, 0.0);
    }

    #[test]
    fn jump_only_linear_cost() {
        let e = evaluate(&jump_field_1d(0.2), &Analytic1dSource, &k_hom_1d(), 1e-8).unwrap();
        assert_relative_eq!(e.total, 0.2, epsilon = 1e-9);
        assert_eq!(e.bulk, 0.0);
    }

    #[test]
    fn negative_jump_is_inadmissible() {
        let e = evaluate(&jump_field_1d(-0.2), &Analytic1dSource, &k_hom_1d(), 1e-8).unwrap();
        assert!(e.total.is_infinite());
        assert!(!e.admissible);
        assert!(!e.segment_reports[0].admissible);
    }

    #[test]
    fn no_cracks_is_admissible() {
        let (ok, reports) = admissible(&bulk_field_1d(1.0), &k_hom_1d(), 1e-8).unwrap();
        assert!(ok);
        assert!(reports.is_empty());
    }

    #[test]
    fn admissibility_signs_1d() {
        let (ok, _) = admissible(&jump_field_1d(0.3), &k_hom_1d(), 1e-8).unwrap();
        assert!(ok);
        let (ok, _) = admissible(&jump_field_1d(-0.3), &k_hom_1d(), 1e-8).unwrap();
        assert!(!ok);
    }

    #[test]
    fn inconsistent_jump_rejected() {
        let field = MacroField::OneD(MacroField1d {
            elements: vec![
                Element1d { x0: 0.0, x1: 0.5, u0: 0.0, slope: 0.0 },
                Element1d { x0: 0.5, x1: 1.0, u0: 0.2, slope: 0.0 },
            ],
            cracks: vec![Crack1d { x: 0.5, jump: 0.1 }],
        });
        assert!(field.validate().is_err());
    }

    #[test]
    fn singular_part_is_one_homogeneous() {
        // no bulk strain: scaling the field scales the energy linearly
        let base = jump_field_1d(0.2);
        let e1 = evaluate(&base, &Analytic1dSource, &k_hom_1d(), 1e-8).unwrap();
        for t in [2.0, 5.0, 0.25] {
            let scaled = jump_field_1d(0.2 * t);
            let et = evaluate(&scaled, &Analytic1dSource, &k_hom_1d(), 1e-8).unwrap();
            assert_relative_eq!(et.total, t * e1.total, max_relative = 1e-12);
        }
    }

    #[test]
    fn jump_to_zero_vanishes_linearly() {
        let mut prev = f64::INFINITY;
        for k in 1..6 {
            let jump = 0.1f64.powi(k);
            let e = evaluate(&jump_field_1d(jump), &Analytic1dSource, &k_hom_1d(), 1e-8)
                .unwrap();
            assert_relative_eq!(e.total / jump, 1.0, max_relative = 1e-9);
            assert!(e.total < prev);
            prev = e.total;
        }
    }

    #[test]
    fn convex_along_admissible_segments() {
        // fields sharing the same crack geometry; midpoint inequality
        let make = |slope: f64, jump: f64| {
            MacroField::OneD(MacroField1d {
                elements: vec![
                    Element1d { x0: 0.0, x1: 0.5, u0: 0.0, slope },
                    Element1d {
                        x0: 0.5,
                        x1: 1.0,
                        u0: 0.5 * slope + jump,
                        slope,
                    },
                ],
                cracks: vec![Crack1d { x: 0.5, jump }],
            })
        };
        let mut rng_state = 123u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((rng_state >> 33) as f64 / (1u64 << 31) as f64) * 4.0 - 2.0
        };
        for _ in 0..200 {
            let (s1, s2) = (next(), next());
            let (j1, j2) = (next().abs(), next().abs());
            let e1 = evaluate(&make(s1, j1), &Analytic1dSource, &k_hom_1d(), 1e-8)
                .unwrap()
                .total;
            let e2 = evaluate(&make(s2, j2), &Analytic1dSource, &k_hom_1d(), 1e-8)
                .unwrap()
                .total;
            let em = evaluate(
                &make(0.5 * (s1 + s2), 0.5 * (j1 + j2)),
                &Analytic1dSource,
                &k_hom_1d(),
                1e-8,
            )
            .unwrap()
            .total;
            assert!(em <= 0.5 * (e1 + e2) + 1e-10);
        }
    }

    #[test]
    fn twod_crack_consistency_and_energy() {
        // two triangles of the unit square separated by a vertical crack
        // with constant opening jump
        let jump = [0.1, 0.0];
        let field = MacroField::TwoD(MacroField2d {
            elements: vec![
                Element2d {
                    vertices: [[0.0, 0.0], [0.5, 0.0], [0.0, 1.0]],
                    offset: [0.0, 0.0],
                    grad: [[0.0, 0.0], [0.0, 0.0]],
                },
                Element2d {
                    vertices: [[0.5, 0.0], [1.0, 0.0], [0.5, 1.0]],
                    offset: [jump[0], jump[1]],
                    grad: [[0.0, 0.0], [0.0, 0.0]],
                },
            ],
            cracks: vec![Crack2d {
                a: [0.5, 0.0],
                b: [0.5, 1.0],
                normal: [1.0, 0.0],
                jump,
                left: 0,
                right: 1,
            }],
        });
        field.validate().unwrap();
        let k_hom = ConeSpec::new(
            "K_hom",
            2,
            &[
                SymTensor::from_entries_2d(1.0, 0.0, 0.0),
                SymTensor::from_entries_2d(0.0, 1.0, 0.0),
            ],
        );
        struct Linear;
        impl DensitySource for Linear {
            fn dim(&self) -> usize {
                2
            }
            fn f(&self, xi: &SymTensor) -> Result<f64> {
                Ok(0.5 * xi.norm().powi(2))
            }
            fn recession(&self, _d: &SymTensor) -> Result<Option<f64>> {
                Ok(Some(1.0))
            }
        }
        let e = evaluate(&field, &Linear, &k_hom, 1e-8).unwrap();
        assert!(e.admissible);
        assert_relative_eq!(e.bulk, 0.0);
        // |jump (.) nu| = |0.1 e1 (x) e1| = 0.1, length 1, recession 1
        assert_relative_eq!(e.singular, 0.1, max_relative = 1e-12);
    }
}
