//! Output plumbing: atomic file writes, CSV emission with config echoes,
//! deterministic reductions.

use crate::error::Result;
use std::io::Write;
use std::path::Path;

/// Write bytes to `path` atomically (temp file in the same directory, then
/// rename). Partial files never become visible under the target name.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    if !dir.as_os_str().is_empty() {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension(format!(
        "tmp.{}.{}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.subsec_nanos())
            .unwrap_or(0)
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// CSV writer that prefixes `#`-comment header lines echoing the run
/// configuration, so every output file is reproducible from its own header.
pub struct CsvWriter {
    buf: String,
}

impl CsvWriter {
    pub fn new(tool: &str, config_json: &str, columns: &[&str]) -> Self {
        let mut buf = String::new();
        buf.push_str(&format!("# {tool} format_version=1\n"));
        buf.push_str(&format!("# config: {config_json}\n"));
        buf.push_str(&columns.join(","));
        buf.push('\n');
        CsvWriter { buf }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn into_string(self) -> String {
        self.buf
    }

    pub fn write(self, path: &Path) -> Result<()> {
        write_atomic(path, self.buf.as_bytes())
    }
}

/// Deterministic float formatting for CSV cells (shortest round-trip form,
/// infinities spelled out).
pub fn fmt_float(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x.is_nan() {
        "nan".into()
    } else {
        format!("{x}")
    }
}

/// Pairwise (tree) summation: deterministic and accurate regardless of how
/// the addends were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}
