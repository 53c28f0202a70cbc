//! Strain-space exploration of the homogenized densities: tabulation of
//! `f_hom` and `g_hom`, the recession function, detection of the tensile
//! cones `H_hom` and `K_hom`, and growth/convexity audits. Includes the
//! exact one-dimensional closed form used as an oracle throughout.

use crate::cache::SolveCache;
use crate::cellsolver::{CellProblem, SolverParams};
use crate::cones::{ConeSpec, JumpCone};
use crate::error::Result;
use crate::microgeometry::GeometrySpec;
use crate::tensors::{ElasticityOperator, ElasticitySpec, SymTensor};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Kernel-detection tolerance base: a strain is classified in the tensile
/// cone when `g_hom <= TOL_ZERO_BASE * max(1, |xi|^2)`.
pub const TOL_ZERO_BASE: f64 = 1e-6;

/// Infinite-recession threshold: the ratio `f(t xi) / t` must grow by more
/// than this factor across the ladder to classify the direction as outside
/// the homogenized cone.
pub const THETA_INF: f64 = 4.0;

/// Agreement required between the last two slope extrapolations for the
/// recession estimate to be flagged converged.
pub const TOL_REC: f64 = 1e-3;

/// Default scaling ladder for recession estimates.
pub const DEFAULT_LADDER: [f64; 4] = [8.0, 32.0, 128.0, 512.0];

/// Exact 1D homogenized density and its recession function: quadratic up to
/// the cracking threshold, affine beyond it, infinite recession under
/// compression.
pub fn analytic_1d(xi: f64) -> (f64, f64) {
    let f = if xi <= 1.0 { 0.5 * xi * xi } else { xi - 0.5 };
    let f_inf = if xi >= 0.0 { xi } else { f64::INFINITY };
    (f, f_inf)
}

/// Cell problem with the strain left open; the unit shared by sweeps,
/// recession ladders and cone detection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemTemplate {
    pub geometry: GeometrySpec,
    pub elasticity: ElasticitySpec,
    pub cone: JumpCone,
    pub refinement: usize,
    pub params: SolverParams,
}

impl ProblemTemplate {
    pub fn new(geometry: GeometrySpec, cone: JumpCone) -> Self {
        ProblemTemplate {
            geometry,
            elasticity: ElasticitySpec::identity(),
            cone,
            refinement: 0,
            params: SolverParams::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    pub fn problem(&self, xi: SymTensor) -> CellProblem {
        CellProblem {
            geometry: self.geometry.clone(),
            elasticity: self.elasticity.clone(),
            cone: self.cone,
            xi,
            include_surface: true,
            surface_scale: 1.0,
            refinement: self.refinement,
            params: self.params.clone(),
        }
    }

    pub fn dry_problem(&self, xi: SymTensor) -> CellProblem {
        let mut p = self.problem(xi);
        p.include_surface = false;
        p
    }

    /// Cohesive density at `t * xi`, solved at unit scale through the exact
    /// identity `f(t xi) = t^2 f_[surface/t](xi)`.
    pub fn f_at_scaled(&self, cache: &SolveCache, xi: &SymTensor, t: f64) -> Result<f64> {
        let mut p = self.problem(*xi);
        p.surface_scale = 1.0 / t;
        Ok(t * t * cache.get_or_solve(&p)?.value)
    }
}

/// Strain classification: inside the detected tensile cone (vanishing dry
/// density) or elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    TensileCone,
    Elsewhere,
}

/// One row of a density sweep. `recession = None` encodes an infinite
/// recession value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensitySample {
    pub xi: SymTensor,
    pub f_value: f64,
    pub g_value: f64,
    pub recession: Option<f64>,
    pub recession_converged: bool,
    pub classification: Classification,
    pub converged: bool,
}

/// Recession estimate along one ray.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecessionEstimate {
    /// `None` encodes `+inf`.
    pub value: Option<f64>,
    /// Last two slope extrapolations agreed to within [`TOL_REC`].
    pub converged: bool,
    /// `(t, f(t xi)/t)` along the ladder.
    pub ladder: Vec<(f64, f64)>,
}

/// Estimate the recession `lim f(t xi)/t` along the ladder.
///
/// The ratio grows proportionally to `t` on directions of quadratic growth
/// (classified infinite via [`THETA_INF`]); otherwise the affine tail is
/// removed by differencing consecutive rungs.
pub fn estimate_recession(
    template: &ProblemTemplate,
    cache: &SolveCache,
    xi: &SymTensor,
    t_ladder: &[f64],
) -> Result<RecessionEstimate> {
    assert!(t_ladder.len() >= 2, "recession ladder needs at least two rungs");
    assert!(xi.norm() > 0.0, "recession direction must be nonzero");
    let mut values = Vec::with_capacity(t_ladder.len());
    let mut ladder = Vec::with_capacity(t_ladder.len());
    for &t in t_ladder {
        let f_t = template.f_at_scaled(cache, xi, t)?;
        values.push((t, f_t));
        ladder.push((t, f_t / t));
    }
    let r_first = ladder.first().unwrap().1;
    let r_last = ladder.last().unwrap().1;
    if r_first > 0.0 && r_last / r_first > THETA_INF {
        return Ok(RecessionEstimate {
            value: None,
            converged: true,
            ladder,
        });
    }
    // slope extrapolation: f(t xi) ~ a t + b, a = recession
    let mut slopes = Vec::new();
    for w in values.windows(2) {
        let (t0, f0) = w[0];
        let (t1, f1) = w[1];
        slopes.push((f1 - f0) / (t1 - t0));
    }
    let s_last = *slopes.last().unwrap();
    let s_prev = slopes[slopes.len() - 2];
    let converged = (s_last - s_prev).abs() <= TOL_REC * s_last.abs().max(1.0);
    Ok(RecessionEstimate {
        value: Some(s_last),
        converged,
        ladder,
    })
}

/// Deterministic unit directions in the space of symmetric tensors.
///
/// 1D: alternating signs. 2D: an eigenframe sweep, `xi(theta, psi) =
/// cos(psi) u(theta) (x) u(theta) + sin(psi) v(theta) (x) v(theta)` on a
/// low-discrepancy-offset angle grid; the seed rotates the grid.
pub fn direction_set(dim: usize, n: usize, seed: u64) -> Vec<SymTensor> {
    if dim == 1 {
        return (0..n)
            .map(|i| SymTensor::scalar(if i % 2 == 0 { 1.0 } else { -1.0 }))
            .collect();
    }
    let (o_theta, o_psi) = if seed == 0 {
        (0.0, 0.0)
    } else {
        let mut s = splitmix64(seed);
        let a = (s >> 11) as f64 / (1u64 << 53) as f64;
        s = splitmix64(s);
        let b = (s >> 11) as f64 / (1u64 << 53) as f64;
        (a, b)
    };
    let n_theta = (n as f64).sqrt().round().max(1.0) as usize;
    let n_psi = n.div_ceil(n_theta);
    let mut dirs = Vec::with_capacity(n);
    'outer: for i in 0..n_theta {
        for j in 0..n_psi {
            if dirs.len() >= n {
                break 'outer;
            }
            let theta = (i as f64 + o_theta) * std::f64::consts::PI / n_theta as f64;
            let psi = (j as f64 + o_psi) * std::f64::consts::TAU / n_psi as f64;
            let u = [theta.cos(), theta.sin()];
            let v = [-theta.sin(), theta.cos()];
            let uu = crate::tensors::sym_dyad(&u, &u).expect("dims");
            let vv = crate::tensors::sym_dyad(&v, &v).expect("dims");
            dirs.push(uu.scale(psi.cos()).add(&vv.scale(psi.sin())));
        }
    }
    dirs
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Outcome of tensile-cone detection over a direction set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeDetection {
    pub h_hom: ConeSpec,
    pub k_hom: ConeSpec,
    pub h_member: Vec<bool>,
    pub k_member: Vec<bool>,
    /// Direction indices where kernel and recession memberships disagree.
    pub symmetric_difference: Vec<usize>,
}

/// Detect `H_hom` (kernel of the dry density) and `K_hom` (finite
/// recession) over the given directions and report their agreement.
pub fn detect_cones(
    template: &ProblemTemplate,
    cache: &SolveCache,
    directions: &[SymTensor],
    t_ladder: &[f64],
) -> Result<ConeDetection> {
    let results: Vec<(bool, bool)> = directions
        .par_iter()
        .map(|dir| -> Result<(bool, bool)> {
            let g = cache.get_or_solve(&template.dry_problem(*dir))?.value;
            let tol_zero = TOL_ZERO_BASE * dir.norm().powi(2).max(1.0);
            let in_h = g <= tol_zero;
            let rec = estimate_recession(template, cache, dir, t_ladder)?;
            Ok((in_h, rec.value.is_some()))
        })
        .collect::<Result<Vec<_>>>()?;
    let h_member: Vec<bool> = results.iter().map(|r| r.0).collect();
    let k_member: Vec<bool> = results.iter().map(|r| r.1).collect();
    let symmetric_difference = (0..directions.len())
        .filter(|&i| h_member[i] != k_member[i])
        .collect();
    let dim = template.dim();
    let h_gens: Vec<SymTensor> = directions
        .iter()
        .zip(&h_member)
        .filter(|(_, &m)| m)
        .map(|(d, _)| *d)
        .collect();
    let k_gens: Vec<SymTensor> = directions
        .iter()
        .zip(&k_member)
        .filter(|(_, &m)| m)
        .map(|(d, _)| *d)
        .collect();
    Ok(ConeDetection {
        h_hom: ConeSpec::new("H_hom", dim, &h_gens),
        k_hom: ConeSpec::new("K_hom", dim, &k_gens),
        h_member,
        k_member,
        symmetric_difference,
    })
}

/// Sweep the cell solver over a strain list, memoized and in parallel.
pub fn density_sweep(
    template: &ProblemTemplate,
    cache: &SolveCache,
    xis: &[SymTensor],
    with_recession: bool,
    t_ladder: &[f64],
) -> Result<Vec<DensitySample>> {
    xis.par_iter()
        .map(|xi| -> Result<DensitySample> {
            let f_sol = cache.get_or_solve(&template.problem(*xi))?;
            let g_sol = cache.get_or_solve(&template.dry_problem(*xi))?;
            let tol_zero = TOL_ZERO_BASE * xi.norm().powi(2).max(1.0);
            let classification = if g_sol.value <= tol_zero {
                Classification::TensileCone
            } else {
                Classification::Elsewhere
            };
            let (recession, recession_converged) = if with_recession && xi.norm() > 0.0 {
                let est = estimate_recession(template, cache, xi, t_ladder)?;
                (est.value, est.converged)
            } else {
                (None, false)
            };
            Ok(DensitySample {
                xi: *xi,
                f_value: f_sol.value,
                g_value: g_sol.value,
                recession,
                recession_converged,
                classification,
                converged: f_sol.converged && g_sol.converged,
            })
        })
        .collect()
}

/// Per-sample growth audit against the proof-level constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    pub format_version: u32,
    pub n_samples: usize,
    /// `min over samples of f - (min(sqrt(alpha),1) |xi| - 1/2)`.
    pub worst_lower_margin: f64,
    /// `min over samples of (M^2/2) |xi|^2 - f`.
    pub worst_upper_margin: f64,
    /// `min over samples of (1/2) ||xi||^2 - f` (affine test-field bound).
    pub worst_elastic_margin: f64,
    /// Samples with `A xi` negative semidefinite must attain `f = 1/2
    /// ||xi||^2`.
    pub kperp_samples: usize,
    pub kperp_max_rel_err: f64,
    /// Sublinearity constant `max f/|xi|` over tensile-cone samples, or a
    /// note when the orthogonal-cone interior assumption fails and the
    /// audit is skipped.
    pub sublinearity: SublinearityAudit,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SublinearityAudit {
    Checked { samples: usize, c_max: f64 },
    Skipped { note: String },
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Numerically test whether the orthogonal cone of the convex hull of `K0`
/// has nonempty interior: search for a unit direction uniformly negative
/// against sampled generators.
pub fn polar_interior_nonempty(cone: JumpCone, dim: usize) -> bool {
    let gens = cone.matrix_cone_generators(dim, 32);
    let probes = direction_set(dim, 128, 0);
    for eta in &probes {
        let max_inner = gens
            .iter()
            .map(|g| eta.dot(g))
            .fold(f64::NEG_INFINITY, f64::max);
        if max_inner < -1e-3 {
            return true;
        }
    }
    false
}

/// Audit the growth sandwich, the attainment on the compressive orthogonal
/// cone and the sublinear growth over the detected tensile cone.
pub fn audit_growth(
    samples: &[DensitySample],
    a_op: &ElasticityOperator,
    cone: JumpCone,
) -> AuditReport {
    let c_low = a_op.alpha().sqrt().min(1.0);
    let m2 = a_op.m_const().powi(2);
    let mut worst_lower = f64::INFINITY;
    let mut worst_upper = f64::INFINITY;
    let mut worst_elastic = f64::INFINITY;
    let mut violations = Vec::new();
    let mut kperp_samples = 0usize;
    let mut kperp_max_rel = 0.0f64;
    let mut sub_c: f64 = 0.0;
    let mut sub_n = 0usize;

    for s in samples {
        let n_xi = s.xi.norm();
        let lower = s.f_value - (c_low * n_xi - 0.5);
        let upper = 0.5 * m2 * n_xi * n_xi - s.f_value;
        let elastic = 0.5 * a_op.energy_norm(&s.xi).powi(2) - s.f_value;
        worst_lower = worst_lower.min(lower);
        worst_upper = worst_upper.min(upper);
        worst_elastic = worst_elastic.min(elastic);
        if lower < -1e-7 {
            violations.push(format!(
                "lower growth bound violated at xi = {:?} (margin {lower:.3e})",
                s.xi.raw()
            ));
        }
        if elastic < -1e-7 {
            violations.push(format!(
                "elastic upper bound violated at xi = {:?} (margin {elastic:.3e})",
                s.xi.raw()
            ));
        }

        // compressive orthogonal cone of K0 (in the A-weighted pairing the
        // attainment argument needs): for the opening cone this is A xi
        // negative semidefinite; for the frictionless cone the hull of K0
        // is the trace-nonnegative halfspace, whose orthogonal is only the
        // ray of negative multiples of the identity
        let a_xi = a_op.apply(&s.xi);
        let in_kperp = n_xi > 1e-9
            && match cone {
                JumpCone::Opening => a_xi.eigenvalues().iter().all(|&e| e <= 1e-12),
                JumpCone::NonInterpenetration => {
                    let dim = s.xi.dim();
                    let tr: f64 = (0..dim).map(|i| a_xi.entry(i, i)).sum();
                    let mean = tr / dim as f64;
                    let identity = match dim {
                        1 => SymTensor::scalar(1.0),
                        _ => SymTensor::from_entries_2d(1.0, 1.0, 0.0),
                    };
                    let dev = a_xi.sub(&identity.scale(mean));
                    mean <= 1e-12 && dev.norm() <= 1e-9 * a_xi.norm().max(1.0)
                }
            };
        if in_kperp {
            kperp_samples += 1;
            let expected = 0.5 * a_op.energy_norm(&s.xi).powi(2);
            let rel = (s.f_value - expected).abs() / expected.max(1e-300);
            kperp_max_rel = kperp_max_rel.max(rel);
            if rel > 1e-6 {
                violations.push(format!(
                    "K0-orthogonal attainment violated at xi = {:?} (rel err {rel:.3e})",
                    s.xi.raw()
                ));
            }
        }

        if s.classification == Classification::TensileCone && n_xi > 1e-9 {
            sub_n += 1;
            sub_c = sub_c.max(s.f_value / n_xi);
            if s.recession.is_none() && s.recession_converged {
                violations.push(format!(
                    "tensile-cone sample with infinite recession at xi = {:?}",
                    s.xi.raw()
                ));
            }
        }
    }

    let sublinearity = if polar_interior_nonempty(cone, samples.first().map_or(2, |s| s.xi.dim()))
    {
        SublinearityAudit::Checked {
            samples: sub_n,
            c_max: sub_c,
        }
    } else {
        SublinearityAudit::Skipped {
            note: "orthogonal cone of conv(K0) has empty interior; sublinearity \
                   assumption fails and the audit is skipped"
                .into(),
        }
    };

    AuditReport {
        format_version: 1,
        n_samples: samples.len(),
        worst_lower_margin: worst_lower,
        worst_upper_margin: worst_upper,
        worst_elastic_margin: worst_elastic,
        kperp_samples,
        kperp_max_rel_err: kperp_max_rel,
        sublinearity,
        violations,
    }
}

/// Deterministic compressive strains in the discrete orthogonal cone of the
/// opening cone: `A xi` negative semidefinite with spread eigenframes.
pub fn kperp_compressive_samples(a_op: &ElasticityOperator, count: usize) -> Vec<SymTensor> {
    let mut out = Vec::with_capacity(count);
    let a_inv = a_op
        .matrix()
        .clone()
        .try_inverse()
        .expect("positive definite operators are invertible");
    for k in 0..count {
        let theta = std::f64::consts::PI * (k as f64 + 0.3) / count as f64;
        let mu1 = 0.4 + 1.6 * ((k * 7919) % 97) as f64 / 97.0;
        let mu2 = 0.1 + 1.2 * ((k * 104729) % 89) as f64 / 89.0;
        let u = [theta.cos(), theta.sin()];
        let v = [-theta.sin(), theta.cos()];
        let uu = crate::tensors::sym_dyad(&u, &u).expect("dims");
        let vv = crate::tensors::sym_dyad(&v, &v).expect("dims");
        let eta = uu.scale(-mu1).add(&vv.scale(-mu2));
        let xi_m = &a_inv * nalgebra::DVector::from_column_slice(eta.mandel());
        out.push(SymTensor::from_mandel(2, xi_m.as_slice()).expect("components"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn analytic_branches() {
        let (f, _) = analytic_1d(1.0);
        assert_relative_eq!(f, 0.5); // branches agree at the threshold
        let (f, fi) = analytic_1d(2.0);
        assert_relative_eq!(f, 1.5);
        assert_relative_eq!(fi, 2.0);
        let (f, fi) = analytic_1d(-1.0);
        assert_relative_eq!(f, 0.5);
        assert!(fi.is_infinite());
    }

    #[test]
    fn solver_matches_analytic_on_coarse_grid() {
        let template = ProblemTemplate::new(GeometrySpec::Chain1d, JumpCone::Opening);
        let cache = SolveCache::in_memory();
        for k in -6..=6 {
            let xi = 0.5 * k as f64;
            let sol = cache
                .get_or_solve(&template.problem(SymTensor::scalar(xi)))
                .unwrap();
            let (expected, _) = analytic_1d(xi);
            assert!(
                (sol.value - expected).abs() < 1e-6,
                "xi = {xi}: {} vs {expected}",
                sol.value
            );
        }
    }

    #[test]
    fn recession_1d_values() {
        let template = ProblemTemplate::new(GeometrySpec::Chain1d, JumpCone::Opening);
        let cache = SolveCache::in_memory();
        let est =
            estimate_recession(&template, &cache, &SymTensor::scalar(1.0), &DEFAULT_LADDER)
                .unwrap();
        assert!(est.converged);
        assert_relative_eq!(est.value.unwrap(), 1.0, epsilon = 1e-3);
        let est =
            estimate_recession(&template, &cache, &SymTensor::scalar(-1.0), &DEFAULT_LADDER)
                .unwrap();
        assert!(est.value.is_none());
    }

    #[test]
    fn recession_estimator_one_homogeneous() {
        let template = ProblemTemplate::new(GeometrySpec::Chain1d, JumpCone::Opening);
        let cache = SolveCache::in_memory();
        let base =
            estimate_recession(&template, &cache, &SymTensor::scalar(1.0), &DEFAULT_LADDER)
                .unwrap()
                .value
                .unwrap();
        for t in [2.0, 4.0] {
            let scaled =
                estimate_recession(&template, &cache, &SymTensor::scalar(t), &DEFAULT_LADDER)
                    .unwrap()
                    .value
                    .unwrap();
            assert_relative_eq!(scaled / t, base, epsilon = 1e-4);
        }
    }

    #[test]
    fn recession_2d_opening_uniaxial() {
        // explicit opening field: jumps t/nx across the nx vertical joint
        // lines of total measure 1 each give surface energy t, so the
        // recession along e1 (x) e1 is 1 for the identity operator
        let template = ProblemTemplate::new(
            GeometrySpec::StackBond { nx: 2, ny: 2 },
            JumpCone::Opening,
        );
        let cache = SolveCache::in_memory();
        let xi = SymTensor::from_entries_2d(1.0, 0.0, 0.0);
        let est = estimate_recession(&template, &cache, &xi, &DEFAULT_LADDER).unwrap();
        let explicit_cost = 1.0;
        let v = est.value.expect("finite recession along uniaxial tension");
        assert!((v - explicit_cost).abs() < 0.05 * explicit_cost);
    }

    #[test]
    fn detect_cones_1d() {
        let template = ProblemTemplate::new(GeometrySpec::Chain1d, JumpCone::Opening);
        let cache = SolveCache::in_memory();
        let dirs = [SymTensor::scalar(1.0), SymTensor::scalar(-1.0)];
        let det = detect_cones(&template, &cache, &dirs, &DEFAULT_LADDER).unwrap();
        assert_eq!(det.h_member, vec![true, false]);
        assert_eq!(det.k_member, vec![true, false]);
        assert!(det.symmetric_difference.is_empty());
        // both cones reduce to the nonnegative half-line
        assert_eq!(det.h_hom.generators, vec![vec![1.0]]);
        assert_eq!(det.k_hom.generators, vec![vec![1.0]]);
    }

    #[test]
    fn direction_set_is_deterministic_and_unit() {
        let a = direction_set(2, 64, 0);
        let b = direction_set(2, 64, 0);
        assert_eq!(a.len(), 64);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.raw(), y.raw());
            assert_relative_eq!(x.norm(), 1.0, max_relative = 1e-12);
        }
        let c = direction_set(2, 64, 7);
        assert!(a.iter().zip(&c).any(|(x, y)| x.raw() != y.raw()));
    }

    #[test]
    fn polar_interior_by_cone_kind() {
        // opening: hull is the PSD cone, polar has interior (negative
        // definite matrices); frictionless: hull is a halfspace, polar is a
        // ray
        assert!(polar_interior_nonempty(JumpCone::Opening, 2));
        assert!(!polar_interior_nonempty(JumpCone::NonInterpenetration, 2));
    }

    #[test]
    fn audit_1d_tight_cases() {
        let template = ProblemTemplate::new(GeometrySpec::Chain1d, JumpCone::Opening);
        let cache = SolveCache::in_memory();
        let xis = vec![
            SymTensor::scalar(2.0),
            SymTensor::scalar(-3.0),
            SymTensor::scalar(0.0),
        ];
        let samples = density_sweep(&template, &cache, &xis, false, &DEFAULT_LADDER).unwrap();
        let a = ElasticityOperator::identity(1);
        let report = audit_growth(&samples, &a, JumpCone::Opening);
        assert!(report.passed(), "violations: {:?}", report.violations);
        // xi = 2 meets the lower bound exactly: f = 1.5 = |xi| - 1/2
        assert!(report.worst_lower_margin.abs() < 1e-6);
        // xi = -3 attains the elastic bound: f = 4.5 = xi^2/2
        assert!(report.worst_elastic_margin.abs() < 1e-6);
    }

    #[test]
    fn kperp_samples_are_a_weighted_nsd() {
        let m = nalgebra::DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 0.8],
        );
        let a = ElasticityOperator::new(2, m).unwrap();
        for xi in kperp_compressive_samples(&a, 20) {
            let eigs = a.apply(&xi).eigenvalues();
            assert!(eigs.iter().all(|&e| e <= 1e-10), "eigs {eigs:?}");
        }
    }
}
