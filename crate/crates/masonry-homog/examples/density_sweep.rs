//! Sweep the homogenized densities over a deterministic direction set and
//! audit the growth bounds.
//!
//! ```bash
//! cargo run --release --example density_sweep
//! ```

use masonry_homog::cache::SolveCache;
use masonry_homog::cones::JumpCone;
use masonry_homog::density::{
    audit_growth, density_sweep, direction_set, Classification, ProblemTemplate, DEFAULT_LADDER,
};
use masonry_homog::microgeometry::GeometrySpec;

fn main() -> masonry_homog::Result<()> {
    let template = ProblemTemplate::new(
        GeometrySpec::StackBond { nx: 2, ny: 2 },
        JumpCone::Opening,
    );
    let cache = SolveCache::in_memory();
    let dirs = direction_set(2, 16, 0);
    let samples = density_sweep(&template, &cache, &dirs, true, &DEFAULT_LADDER)?;

    println!(
        "{:>7} {:>7} {:>7}  {:>10} {:>10} {:>10}  class",
        "xi_xx", "xi_yy", "xi_xy", "f", "g", "recession"
    );
    for s in &samples {
        let raw = s.xi.raw();
        let rec = s
            .recession
            .map_or("inf".to_string(), |r| format!("{r:.6}"));
        println!(
            "{:>7.3} {:>7.3} {:>7.3}  {:>10.6} {:>10.6} {:>10}  {:?}",
            raw[0], raw[1], raw[2], s.f_value, s.g_value, rec, s.classification
        );
    }

    let tensile = samples
        .iter()
        .filter(|s| s.classification == Classification::TensileCone)
        .count();
    println!("\n{tensile} of {} directions fall in the tensile cone", samples.len());

    let a_op = template.elasticity.build(2)?;
    let report = audit_growth(&samples, &a_op, template.cone);
    println!("growth audit: passed = {}", report.passed());
    println!("  worst lower margin   {:+.3e}", report.worst_lower_margin);
    println!("  worst elastic margin {:+.3e}", report.worst_elastic_margin);
    println!("  sublinearity         {:?}", report.sublinearity);
    Ok(())
}
