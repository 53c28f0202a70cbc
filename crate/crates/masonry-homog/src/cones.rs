//! Constraint cones: jump cones at interfaces, finitely generated matrix
//! cones, projections and the proximal kernel used by the cell solver.
//!
//! Matrix cones (convex hulls of jump strains, estimated tensile cones) are
//! represented by finite generator lists. Projection onto such a cone is a
//! small nonnegative least-squares problem solved by an active-set method;
//! the orthogonal (polar) cone is reached through the Moreau decomposition
//! `eta = P_C(eta) + P_C_perp(eta)`.

use crate::error::{Error, Result};
use crate::tensors::{sym_components, sym_dyad, SymTensor};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Unilateral condition on the displacement jump across an interface with
/// unit normal `nu`.
///
/// `Opening` admits jumps `lambda * nu` with `lambda >= 0` (infinitesimal
/// no-sliding); `NonInterpenetration` admits any jump with nonnegative
/// normal component (vanishing friction).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JumpCone {
    Opening,
    NonInterpenetration,
}

impl JumpCone {
    /// Whether the jump `j` is admissible at normal `nu`, up to `tol`.
    pub fn admits(&self, dim: usize, nu: [f64; 2], j: [f64; 2], tol: f64) -> bool {
        let jn = dot2(j, nu);
        match self {
            JumpCone::Opening => {
                let tang = sub2(j, scale2(nu, jn));
                jn >= -tol && norm2(tang) <= tol * (1.0 + norm2(j))
            }
            JumpCone::NonInterpenetration => {
                let _ = dim;
                jn >= -tol
            }
        }
    }

    /// Euclidean projection of `z` onto the admissible jump set at `nu`.
    pub fn project(&self, nu: [f64; 2], z: [f64; 2]) -> [f64; 2] {
        let zn = dot2(z, nu);
        match self {
            JumpCone::Opening => scale2(nu, zn.max(0.0)),
            JumpCone::NonInterpenetration => {
                if zn >= 0.0 {
                    z
                } else {
                    sub2(z, scale2(nu, zn))
                }
            }
        }
    }

    /// Matrix cone `K0` induced at all normals, sampled as a generator list.
    ///
    /// For `Opening` the generators are rank-one tensors `a (x) a`; for
    /// `NonInterpenetration` they are `a (.) b` with `<a, b> >= 0`.
    pub fn matrix_cone_generators(&self, dim: usize, n_angles: usize) -> Vec<SymTensor> {
        let mut gens = Vec::new();
        if dim == 1 {
            gens.push(SymTensor::scalar(1.0));
            return gens;
        }
        for i in 0..n_angles {
            let th = std::f64::consts::PI * i as f64 / n_angles as f64;
            let a = [th.cos(), th.sin()];
            match self {
                JumpCone::Opening => {
                    gens.push(sym_dyad(&a, &a).expect("dims"));
                }
                JumpCone::NonInterpenetration => {
                    // b sweeps the closed half-circle <a, b> >= 0
                    for k in 0..n_angles {
                        let ph = th - std::f64::consts::FRAC_PI_2
                            + std::f64::consts::PI * k as f64 / (n_angles - 1).max(1) as f64;
                        let b = [ph.cos(), ph.sin()];
                        if let Some(g) = sym_dyad(&a, &b).expect("dims").normalized() {
                            gens.push(g);
                        }
                    }
                }
            }
        }
        gens
    }
}

/// Proximal map of `j -> 1/2 |j - z|^2 + weight * |j|` restricted to the
/// admissible jump set of `cone` at unit normal `nu`.
///
/// For `Opening` the problem collapses to scalar shrinkage along the normal.
/// For `NonInterpenetration` the unconstrained shrinkage is kept when its
/// normal component is nonnegative; otherwise the problem restricted to the
/// halfspace boundary (tangential shrinkage) is solved, and the better of
/// the feasible candidates by objective value is returned.
pub fn jump_prox(cone: JumpCone, dim: usize, nu: [f64; 2], z: [f64; 2], weight: f64) -> [f64; 2] {
    debug_assert!((norm2(nu) - 1.0).abs() < 1e-9, "normal must be unit");
    debug_assert!(weight >= 0.0);
    match cone {
        JumpCone::Opening => {
            let lam = (dot2(z, nu) - weight).max(0.0);
            scale2(nu, lam)
        }
        JumpCone::NonInterpenetration => {
            let zn = dot2(z, nu);
            let shrink = |v: [f64; 2]| -> [f64; 2] {
                let n = norm2(v);
                if n <= weight {
                    [0.0, 0.0]
                } else {
                    scale2(v, 1.0 - weight / n)
                }
            };
            let objective = |j: [f64; 2]| -> f64 {
                let d = sub2(j, z);
                0.5 * dot2(d, d) + weight * norm2(j)
            };
            let mut best = None;
            let cand1 = shrink(z);
            if dot2(cand1, nu) >= 0.0 {
                best = Some((objective(cand1), cand1));
            }
            let zt = sub2(z, scale2(nu, zn));
            let cand2 = shrink(zt);
            let o2 = objective(cand2);
            match best {
                Some((o1, c1)) if o1 <= o2 => c1,
                _ => {
                    let _ = dim;
                    cand2
                }
            }
        }
    }
}

/// Finitely generated cone of symmetric matrices.
///
/// Generators are kept normalized to unit Frobenius norm; the cone is the
/// set of nonnegative combinations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeSpec {
    pub format_version: u32,
    pub label: String,
    pub dim: usize,
    /// Raw matrix entries per generator: `[xx]` (1D) or `[xx, yy, xy]` (2D).
    pub generators: Vec<Vec<f64>>,
}

impl ConeSpec {
    pub fn new(label: &str, dim: usize, gens: &[SymTensor]) -> Self {
        let mut seen: Vec<SymTensor> = Vec::new();
        for g in gens {
            if let Some(u) = g.normalized() {
                if !seen.iter().any(|s| s.sub(&u).norm() < 1e-9) {
                    seen.push(u);
                }
            }
        }
        ConeSpec {
            format_version: 1,
            label: label.to_string(),
            dim,
            generators: seen.iter().map(|g| g.raw()).collect(),
        }
    }

    pub fn generator_tensors(&self) -> Result<Vec<SymTensor>> {
        self.generators
            .iter()
            .map(|g| SymTensor::from_raw(self.dim, g))
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Generator matrix with Mandel columns, used by the projection QP.
    fn generator_matrix(&self) -> Result<DMatrix<f64>> {
        let gens = self.generator_tensors()?;
        let v = sym_components(self.dim);
        let mut m = DMatrix::zeros(v, gens.len());
        for (k, g) in gens.iter().enumerate() {
            for (i, c) in g.mandel().iter().enumerate() {
                m[(i, k)] = *c;
            }
        }
        Ok(m)
    }
}

/// Projection of `eta` onto the cone spanned by `spec`'s generators.
///
/// Solves the nonnegative least-squares problem
/// `min |eta - sum_i lambda_i g_i|, lambda >= 0` with an active-set method.
pub fn project_cone(spec: &ConeSpec, eta: &SymTensor, tol: f64) -> Result<SymTensor> {
    if spec.dim != eta.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim,
            got: eta.dim(),
        });
    }
    if spec.is_empty() {
        return Err(Error::InvalidInput("cone has no generators".into()));
    }
    let g = spec.generator_matrix()?;
    let b = DVector::from_column_slice(eta.mandel());
    let lam = nnls(&g, &b, tol)?;
    let p = g * lam;
    SymTensor::from_mandel(spec.dim, p.as_slice())
}

/// Projection of `eta` onto the orthogonal (polar) cone of `spec`, via the
/// Moreau decomposition.
pub fn project_polar(spec: &ConeSpec, eta: &SymTensor, tol: f64) -> Result<SymTensor> {
    Ok(eta.sub(&project_cone(spec, eta, tol)?))
}

/// Whether `eta` belongs to the cone within `tol * max(1, |eta|)`.
pub fn membership(spec: &ConeSpec, eta: &SymTensor, tol: f64) -> Result<bool> {
    let p = project_cone(spec, eta, tol.min(1e-10))?;
    Ok(eta.sub(&p).norm() <= tol * eta.norm().max(1.0))
}

/// Lawson-Hanson nonnegative least squares: `min |a x - b|, x >= 0`.
///
/// Intended for small systems (a handful of rows, at most a few dozen
/// columns); reports non-convergence instead of looping forever.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
    let n = a.ncols();
    let scale = b.norm().max(1.0) * a.amax().max(1.0);
    let eps = (tol.max(1e-14) * scale).max(1e-14);
    let mut passive = vec![false; n];
    let mut x = DVector::zeros(n);
    let max_outer = 3 * n + 30;

    let solve_passive = |passive: &[bool]| -> DVector<f64> {
        let cols: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
        if cols.is_empty() {
            return DVector::zeros(n);
        }
        let sub = a.select_columns(cols.iter());
        let sol = sub
            .svd(true, true)
            .solve(b, 1e-13)
            .expect("svd solve on small system");
        let mut full = DVector::zeros(n);
        for (k, &i) in cols.iter().enumerate() {
            full[i] = sol[k];
        }
        full
    };

    let mut last_resid = f64::INFINITY;
    let mut stagnant = 0usize;
    for _outer in 0..max_outer {
        let resid = b - a * &x;
        let resid_norm = resid.norm();
        // Terminate when optimality holds to within roundoff: the active-set
        // loop can otherwise cycle on degenerate generator sets.
        if resid_norm >= last_resid - 1e-14 * scale {
            stagnant += 1;
            if stagnant >= 3 {
                return Ok(x);
            }
        } else {
            stagnant = 0;
        }
        last_resid = resid_norm;
        let w = a.transpose() * &resid;
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if !passive[i] && w[i] > eps {
                if best.map_or(true, |(_, bw)| w[i] > bw) {
                    best = Some((i, w[i]));
                }
            }
        }
        let Some((enter, _)) = best else {
            return Ok(x);
        };
        passive[enter] = true;

        // Inner loop: restore feasibility of the passive-set solution.
        let mut inner = 0usize;
        loop {
            inner += 1;
            if inner > n + 10 {
                return Err(Error::QpNonConvergence {
                    iterations: inner,
                    residual: (b - a * &x).norm(),
                });
            }
            let z = solve_passive(&passive);
            let mut alpha = 1.0f64;
            let mut blocker = None;
            for i in 0..n {
                if passive[i] && z[i] <= 0.0 {
                    let denom = x[i] - z[i];
                    if denom > 0.0 {
                        let step = x[i] / denom;
                        if step < alpha {
                            alpha = step;
                            blocker = Some(i);
                        }
                    } else {
                        alpha = 0.0;
                        blocker = Some(i);
                    }
                }
            }
            if blocker.is_none() {
                x = z;
                break;
            }
            x = &x + (&z - &x) * alpha;
            for i in 0..n {
                if passive[i] && x[i] <= eps * 1e-2 {
                    x[i] = 0.0;
                    if z[i] <= 0.0 {
                        passive[i] = false;
                    }
                }
            }
        }
    }
    Err(Error::QpNonConvergence {
        iterations: max_outer,
        residual: (b - a * &x).norm(),
    })
}

fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm2(a: [f64; 2]) -> f64 {
    dot2(a, a).sqrt()
}

fn scale2(a: [f64; 2], t: f64) -> [f64; 2] {
    [a[0] * t, a[1] * t]
}

fn sub2(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}
