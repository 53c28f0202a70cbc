//! Content-addressed memoization of cell solves.
//!
//! Keys are SHA-256 hashes of the canonical problem JSON, so identical
//! configurations (geometry, elasticity, cone, strain, refinement, solver
//! parameters) share one entry. Disk entries are written once via
//! temp-file-plus-rename, which makes concurrent writers race-free: the
//! first rename wins and later ones overwrite with identical bytes.

use crate::cellsolver::{CellProblem, CellSolution};
use crate::error::Result;
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

/// In-memory (and optionally on-disk) solve cache.
pub struct SolveCache {
    mem: Mutex<HashMap<String, Arc<CellSolution>>>,
    dir: Option<PathBuf>,
}

impl SolveCache {
    /// Memory-only cache.
    pub fn in_memory() -> Self {
        SolveCache {
            mem: Mutex::new(HashMap::new()),
            dir: None,
        }
    }

    /// Cache backed by a directory of JSON files named by content hash.
    pub fn on_disk(dir: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&dir)?;
        Ok(SolveCache {
            mem: Mutex::new(HashMap::new()),
            dir: Some(dir),
        })
    }

    /// Content hash of a problem's canonical JSON.
    pub fn key(problem: &CellProblem) -> String {
        let mut hasher = Sha256::new();
        hasher.update(problem.canonical_json().as_bytes());
        hex::encode(hasher.finalize())
    }

    /// Fetch a solution, solving and storing on a miss.
    pub fn get_or_solve(&self, problem: &CellProblem) -> Result<Arc<CellSolution>> {
        let key = Self::key(problem);
        if let Some(hit) = self.mem.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{key}.json"));
            if let Ok(bytes) = std::fs::read(&path) {
                if let Ok(sol) = serde_json::from_slice::<CellSolution>(&bytes) {
                    let arc = Arc::new(sol);
                    self.mem.lock().unwrap().insert(key, arc.clone());
                    return Ok(arc);
                }
            }
        }
        let sol = Arc::new(problem.solve()?);
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{key}.json"));
            if !path.exists() {
                let bytes = serde_json::to_vec_pretty(sol.as_ref())?;
                crate::io::write_atomic(&path, &bytes)?;
            }
        }
        self.mem.lock().unwrap().insert(key, sol.clone());
        Ok(sol)
    }

    pub fn len(&self) -> usize {
        self.mem.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
