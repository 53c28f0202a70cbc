//! Compare the cell solver against the exact one-dimensional density on a
//! strain grid.
//!
//! ```bash
//! cargo run --release --example oned_sweep
//! ```

use masonry_homog::cache::SolveCache;
use masonry_homog::cones::JumpCone;
use masonry_homog::density::{analytic_1d, ProblemTemplate};
use masonry_homog::microgeometry::GeometrySpec;
use masonry_homog::tensors::SymTensor;

fn main() -> masonry_homog::Result<()> {
    let template = ProblemTemplate::new(GeometrySpec::Chain1d, JumpCone::Opening);
    let cache = SolveCache::in_memory();

    println!("{:>6}  {:>12}  {:>12}  {:>9}", "xi", "analytic", "solver", "abs err");
    let mut max_err = 0.0f64;
    for k in -12..=12 {
        let xi = 0.25 * k as f64;
        let sol = cache.get_or_solve(&template.problem(SymTensor::scalar(xi)))?;
        let (exact, _) = analytic_1d(xi);
        let err = (sol.value - exact).abs();
        max_err = max_err.max(err);
        println!("{xi:>6.2}  {exact:>12.8}  {:>12.8}  {err:>9.2e}", sol.value);
    }
    println!("\nmax abs error: {max_err:.2e}");
    println!("branches: 0.5*xi^2 up to the cracking threshold, xi - 0.5 beyond it");
    Ok(())
}
