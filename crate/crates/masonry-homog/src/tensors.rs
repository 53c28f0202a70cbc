//! Dense algebra for symmetric matrices in dimensions 1 and 2.
//!
//! Symmetric tensors are stored in Mandel (weighted Voigt) components,
//! `[s11]` in 1D and `[s11, s22, sqrt(2)*s12]` in 2D, so that the plain dot
//! product of component vectors equals the Frobenius inner product of the
//! full matrices. The anisotropic energy norm induced by a positive definite
//! operator `A` is then a quadratic form on those components.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Number of independent components of a symmetric `dim x dim` matrix.
pub fn sym_components(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Symmetric strain-like matrix in dimension 1 or 2.
///
/// Only the independent components are stored, so symmetry holds by
/// construction. Serializes as raw matrix entries, `{dim, raw: [xx]}` or
/// `{dim, raw: [xx, yy, xy]}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymTensor {
    dim: usize,
    c: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct SymTensorRepr {
    dim: usize,
    raw: Vec<f64>,
}

impl Serialize for SymTensor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SymTensorRepr {
            dim: self.dim,
            raw: self.raw(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymTensor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SymTensorRepr::deserialize(d)?;
        SymTensor::from_raw(repr.dim, &repr.raw).map_err(serde::de::Error::custom)
    }
}

impl SymTensor {
    pub fn zero(dim: usize) -> Self {
        assert!(dim == 1 || dim == 2, "only dimensions 1 and 2 are supported");
        SymTensor { dim, c: [0.0; 3] }
    }

    /// 1D tensor (a scalar).
    pub fn scalar(x: f64) -> Self {
        SymTensor { dim: 1, c: [x, 0.0, 0.0] }
    }

    /// 2D tensor from raw matrix entries `[[xx, xy], [xy, yy]]`.
    pub fn from_entries_2d(xx: f64, yy: f64, xy: f64) -> Self {
        SymTensor {
            dim: 2,
            c: [xx, yy, SQRT2 * xy],
        }
    }

    /// Build from Mandel components (`[xx]` or `[xx, yy, sqrt(2)*xy]`).
    pub fn from_mandel(dim: usize, c: &[f64]) -> Result<Self> {
        if c.len() != sym_components(dim) {
            return Err(Error::DimensionMismatch {
                expected: sym_components(dim),
                got: c.len(),
            });
        }
        let mut out = SymTensor::zero(dim);
        out.c[..c.len()].copy_from_slice(c);
        Ok(out)
    }

    /// Build from raw matrix entries `[xx]` (1D) or `[xx, yy, xy]` (2D).
    pub fn from_raw(dim: usize, raw: &[f64]) -> Result<Self> {
        match (dim, raw.len()) {
            (1, 1) => Ok(SymTensor::scalar(raw[0])),
            (2, 3) => Ok(SymTensor::from_entries_2d(raw[0], raw[1], raw[2])),
            _ => Err(Error::DimensionMismatch {
                expected: sym_components(dim),
                got: raw.len(),
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Mandel component slice (length 1 or 3).
    pub fn mandel(&self) -> &[f64] {
        &self.c[..sym_components(self.dim)]
    }

    /// Raw matrix entries, `[xx]` or `[xx, yy, xy]`.
    pub fn raw(&self) -> Vec<f64> {
        match self.dim {
            1 => vec![self.c[0]],
            _ => vec![self.c[0], self.c[1], self.c[2] / SQRT2],
        }
    }

    /// Matrix entry `(i, j)`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.dim && j < self.dim);
        if i == j {
            self.c[i]
        } else {
            self.c[2] / SQRT2
        }
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &SymTensor) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.mandel()
            .iter()
            .zip(other.mandel())
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, t: f64) -> SymTensor {
        let mut out = *self;
        for v in &mut out.c {
            *v *= t;
        }
        out
    }

    pub fn add(&self, other: &SymTensor) -> SymTensor {
        assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for (v, w) in out.c.iter_mut().zip(other.c.iter()) {
            *v += w;
        }
        out
    }

    pub fn sub(&self, other: &SymTensor) -> SymTensor {
        self.add(&other.scale(-1.0))
    }

    /// Eigenvalues in increasing order (closed form; the 1D case returns the
    /// scalar itself).
    pub fn eigenvalues(&self) -> Vec<f64> {
        match self.dim {
            1 => vec![self.c[0]],
            _ => {
                let (a, b, c) = (self.c[0], self.c[1], self.c[2] / SQRT2);
                let mean = 0.5 * (a + b);
                let r = (0.25 * (a - b) * (a - b) + c * c).sqrt();
                vec![mean - r, mean + r]
            }
        }
    }

    /// Normalized copy, or `None` for the zero tensor.
    pub fn normalized(&self) -> Option<SymTensor> {
        let n = self.norm();
        if n == 0.0 {
            None
        } else {
            Some(self.scale(1.0 / n))
        }
    }
}

/// Symmetric tensor product `a (.) b = (a (x) b + b (x) a) / 2`.
///
/// Satisfies `|a (.) b|^2 = (|a|^2 |b|^2 + <a,b>^2) / 2`.
pub fn sym_dyad(a: &[f64], b: &[f64]) -> Result<SymTensor> {
    if a.len() != b.len() || a.is_empty() || a.len() > 2 {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    match a.len() {
        1 => Ok(SymTensor::scalar(a[0] * b[0])),
        _ => Ok(SymTensor::from_entries_2d(
            a[0] * b[0],
            a[1] * b[1],
            0.5 * (a[0] * b[1] + a[1] * b[0]),
        )),
    }
}

/// Positive definite operator on symmetric tensors together with the
/// equivalence constants of its energy norm.
///
/// The operator acts on Mandel components as a symmetric positive definite
/// matrix, so `<A xi, eta>` is a plain quadratic form. The constants satisfy
/// `sqrt(alpha) |xi| <= ||xi|| <= M |xi|` and come from the extreme
/// eigenvalues of the component matrix.
#[derive(Debug, Clone)]
pub struct ElasticityOperator {
    dim: usize,
    m: DMatrix<f64>,
    alpha: f64,
    m_const: f64,
}

impl ElasticityOperator {
    /// Build from the Mandel component matrix; rejects non-symmetric or
    /// non-positive-definite input.
    pub fn new(dim: usize, m: DMatrix<f64>) -> Result<Self> {
        let n = sym_components(dim);
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: m.nrows(),
            });
        }
        let asym = (&m - m.transpose()).abs().max();
        if asym > 1e-12 * (1.0 + m.abs().max()) {
            return Err(Error::InvalidInput(
                "elasticity operator must be symmetric".into(),
            ));
        }
        let eig = m.clone().symmetric_eigen();
        let lam_min = eig.eigenvalues.min();
        let lam_max = eig.eigenvalues.max();
        if lam_min <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "elasticity operator must be positive definite (min eigenvalue {lam_min:.3e})"
            )));
        }
        Ok(ElasticityOperator {
            dim,
            m,
            alpha: lam_min,
            m_const: lam_max.sqrt(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        let n = sym_components(dim);
        ElasticityOperator {
            dim,
            m: DMatrix::identity(n, n),
            alpha: 1.0,
            m_const: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Component matrix (Mandel basis).
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// `alpha` in the norm equivalence `sqrt(alpha) |xi| <= ||xi||`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `M` in the norm equivalence `||xi|| <= M |xi|`.
    pub fn m_const(&self) -> f64 {
        self.m_const
    }

    /// `A xi` as a tensor.
    pub fn apply(&self, xi: &SymTensor) -> SymTensor {
        assert_eq!(self.dim, xi.dim());
        let v = self.m.clone() * DVector::from_column_slice(xi.mandel());
        SymTensor::from_mandel(self.dim, v.as_slice()).expect("component count")
    }

    /// `<A xi, eta>`.
    pub fn inner(&self, xi: &SymTensor, eta: &SymTensor) -> f64 {
        self.apply(xi).dot(eta)
    }

    /// Energy norm `||xi|| = <A xi, xi>^(1/2)`.
    pub fn energy_norm(&self, xi: &SymTensor) -> f64 {
        self.inner(xi, xi).max(0.0).sqrt()
    }
}

/// Serializable description of an elasticity operator: `"identity"` or an
/// explicit Mandel component matrix.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ElasticitySpec {
    Named(String),
    Matrix(Vec<Vec<f64>>),
}

impl ElasticitySpec {
    pub fn identity() -> Self {
        ElasticitySpec::Named("identity".into())
    }

    pub fn build(&self, dim: usize) -> Result<ElasticityOperator> {
        match self {
            ElasticitySpec::Named(name) if name == "identity" => {
                Ok(ElasticityOperator::identity(dim))
            }
            ElasticitySpec::Named(name) => Err(Error::InvalidInput(format!(
                "unknown elasticity operator '{name}' (expected \"identity\" or a matrix)"
            ))),
            ElasticitySpec::Matrix(rows) => {
                let n = sym_components(dim);
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidInput(format!(
                        "elasticity matrix must be {n}x{n} for dim {dim}"
                    )));
                }
                let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
                ElasticityOperator::new(dim, m)
            }
        }
    }
}
