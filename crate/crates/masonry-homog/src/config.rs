//! Run-configuration plumbing shared by the command-line interface:
//! argument parsing helpers, file-format wrappers and cache-directory
//! resolution. Every output format carries a `format_version` and echoes
//! the configuration it was produced from.

use crate::cache::SolveCache;
use crate::cones::JumpCone;
use crate::error::{Error, Result};
use crate::microgeometry::UnitCellMesh;
use crate::tensors::SymTensor;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Environment variable overriding the on-disk solve-cache directory.
pub const CACHE_ENV_VAR: &str = "MASONRY_HOMOG_CACHE";

/// Resolve the solve cache: explicit flag beats the environment variable;
/// without either the cache stays in memory.
pub fn resolve_cache(flag: Option<PathBuf>) -> Result<SolveCache> {
    let dir = flag.or_else(|| std::env::var_os(CACHE_ENV_VAR).map(PathBuf::from));
    match dir {
        Some(d) => SolveCache::on_disk(d),
        None => Ok(SolveCache::in_memory()),
    }
}

/// Parse an inclusive scalar grid `START:STEP:END`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::InvalidInput(format!(
            "expected START:STEP:END, got '{s}'"
        )));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad grid start '{}'", parts[0])))?;
    let step: f64 = parts[1]
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad grid step '{}'", parts[1])))?;
    let end: f64 = parts[2]
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad grid end '{}'", parts[2])))?;
    if step <= 0.0 || end < start {
        return Err(Error::InvalidInput(format!("degenerate grid '{s}'")));
    }
    let n = ((end - start) / step).round() as usize;
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

/// Parse comma-separated raw strain entries (`x` in 1D, `xx,yy,xy` in 2D).
pub fn parse_xi(dim: usize, s: &str) -> Result<SymTensor> {
    let vals: std::result::Result<Vec<f64>, _> =
        s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|_| Error::InvalidInput(format!("bad strain components '{s}'")))?;
    SymTensor::from_raw(dim, &vals)
}

/// Parse a cone name.
pub fn parse_cone(s: &str) -> Result<JumpCone> {
    match s.to_ascii_lowercase().as_str() {
        "opening" | "no-sliding" => Ok(JumpCone::Opening),
        "non-interpenetration" | "noninterpenetration" | "frictionless" => {
            Ok(JumpCone::NonInterpenetration)
        }
        _ => Err(Error::InvalidInput(format!(
            "unknown cone '{s}' (expected 'opening' or 'non-interpenetration')"
        ))),
    }
}

/// Comma-separated increasing integer ladder (e.g. `1,2,4,8`).
pub fn parse_ladder(s: &str) -> Result<Vec<usize>> {
    let vals: std::result::Result<Vec<usize>, _> =
        s.split(',').map(|t| t.trim().parse::<usize>()).collect();
    vals.map_err(|_| Error::InvalidInput(format!("bad ladder '{s}'")))
}

/// Geometry dump written by the `geometry` subcommand: the mesh plus
/// midpoint quadrature, with the producing config echoed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshDump {
    pub format_version: u32,
    pub config: serde_json::Value,
    pub mesh: UnitCellMesh,
    /// Midpoint quadrature per facet: `(facet id, point, weight)`.
    pub quadrature: Vec<(usize, [f64; 2], f64)>,
}

impl MeshDump {
    pub fn new(config: serde_json::Value, mesh: UnitCellMesh) -> Self {
        let quadrature = mesh
            .facets
            .iter()
            .map(|f| (f.id, f.midpoint, f.measure))
            .collect();
        MeshDump {
            format_version: 1,
            config,
            mesh,
            quadrature,
        }
    }
}

/// Envelope for JSON outputs: payload plus the echoed config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report<T> {
    pub format_version: u32,
    pub config: serde_json::Value,
    pub result: T,
}

impl<T> Report<T> {
    pub fn new(config: serde_json::Value, result: T) -> Self {
        Report {
            format_version: 1,
            config,
            result,
        }
    }
}
