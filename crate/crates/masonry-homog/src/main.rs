//! Command-line interface over the homogenization library: one subcommand
//! per capability, JSON configs in, CSV/JSON artifacts out (written
//! atomically), deterministic given config and seed.

use clap::{Parser, Subcommand};
use masonry_homog::cellsolver::CellProblem;
use masonry_homog::config::{
    parse_cone, parse_grid, parse_ladder, parse_xi, resolve_cache, MeshDump, Report,
};
use masonry_homog::density::{
    analytic_1d, audit_growth, density_sweep, detect_cones, direction_set, ProblemTemplate,
    DEFAULT_LADDER,
};
use masonry_homog::error::Error;
use masonry_homog::harness::{run_sweep, EpsilonExperiment};
use masonry_homog::io::{fmt_float, write_atomic, CsvWriter};
use masonry_homog::macroeval::{
    evaluate, k_hom_1d, Analytic1dSource, CellDensitySource, MacroConfig, MacroField,
};
use masonry_homog::microgeometry::GeometrySpec;
use masonry_homog::tensors::{ElasticitySpec, SymTensor};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(
    name = "masonry-homog",
    version,
    about = "Homogenized energy densities for periodic block/mortar microstructures"
)]
struct Cli {
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// On-disk solve cache directory (overrides MASONRY_HOMOG_CACHE).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// 1D sweep: solver density against the closed form on a strain grid.
    Oned {
        /// Inclusive grid START:STEP:END.
        #[arg(long, default_value = "-3:0.1:3", allow_hyphen_values = true)]
        xi_grid: String,
        /// Output CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one cell problem from a JSON config.
    Cell {
        #[arg(long)]
        config: PathBuf,
        /// Solution JSON (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional per-quadrature-point jump CSV.
        #[arg(long)]
        jumps_csv: Option<PathBuf>,
    },
    /// Density sweep over a direction set with growth audit.
    Density {
        #[arg(long)]
        geometry: String,
        #[arg(long)]
        cone: String,
        #[arg(long, default_value_t = 64)]
        directions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        refinement: usize,
        /// Elasticity operator: "identity" or a JSON file with the
        /// component matrix.
        #[arg(long, default_value = "identity")]
        elasticity: String,
        #[arg(long)]
        out_csv: Option<PathBuf>,
        #[arg(long)]
        out_audit: Option<PathBuf>,
    },
    /// Detect the tensile cones (dry-density kernel vs finite recession).
    Cone {
        #[arg(long)]
        geometry: String,
        #[arg(long)]
        cone: String,
        #[arg(long, default_value_t = 64)]
        directions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        refinement: usize,
        #[arg(long, default_value = "identity")]
        elasticity: String,
        /// Detection report JSON (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Bare cone JSON for the dry-density kernel.
        #[arg(long)]
        out_h: Option<PathBuf>,
        /// Bare cone JSON for the finite-recession cone.
        #[arg(long)]
        out_k: Option<PathBuf>,
    },
    /// Evaluate the homogenized functional on a macroscopic field.
    Macro {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite-size scaling experiment against the cell value.
    Gamma {
        /// Experiment JSON (alternative to the flags below).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        geometry: Option<String>,
        #[arg(long)]
        cone: Option<String>,
        /// Strain components: `x` (1D) or `xx,yy,xy` (2D).
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<String>,
        /// Assembly sizes, e.g. `1,2,4,8`.
        #[arg(long)]
        n_ladder: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump a unit-cell mesh as JSON for plotting.
    Geometry {
        #[arg(long)]
        geometry: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .is_err()
        {
            eprintln!("warning: thread pool already initialized; --jobs ignored");
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(RunError::Solver(msg)) => {
            eprintln!("solver error: {msg}");
            ExitCode::from(3)
        }
    }
}

enum RunError {
    Config(Error),
    Solver(String),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::QpNonConvergence { .. } | Error::NumericalBreakdown(_) => {
                RunError::Solver(e.to_string())
            }
            other => RunError::Config(other),
        }
    }
}

fn emit(out: Option<&PathBuf>, content: &str) -> Result<(), RunError> {
    match out {
        Some(path) => write_atomic(path, content.as_bytes()).map_err(RunError::from),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn load_elasticity(spec: &str) -> Result<ElasticitySpec, RunError> {
    if spec == "identity" {
        return Ok(ElasticitySpec::identity());
    }
    let bytes = std::fs::read(spec).map_err(|e| RunError::Config(e.into()))?;
    let rows: Vec<Vec<f64>> =
        serde_json::from_slice(&bytes).map_err(|e| RunError::Config(e.into()))?;
    Ok(ElasticitySpec::Matrix(rows))
}

fn template_from_flags(
    geometry: &str,
    cone: &str,
    elasticity: &str,
    refinement: usize,
) -> Result<ProblemTemplate, RunError> {
    let geometry = GeometrySpec::parse(geometry).map_err(RunError::Config)?;
    let cone = parse_cone(cone).map_err(RunError::Config)?;
    let mut t = ProblemTemplate::new(geometry, cone);
    t.elasticity = load_elasticity(elasticity)?;
    t.refinement = refinement;
    Ok(t)
}

fn run(cli: Cli) -> Result<(), RunError> {
    let cache = resolve_cache(cli.cache_dir.clone())?;
    match cli.cmd {
        Cmd::Oned { xi_grid, out } => {
            let grid = parse_grid(&xi_grid)?;
            let template = ProblemTemplate::new(
                GeometrySpec::Chain1d,
                masonry_homog::cones::JumpCone::Opening,
            );
            let config = serde_json::json!({"subcommand": "oned", "xi_grid": xi_grid});
            let mut csv = CsvWriter::new(
                "oned",
                &config.to_string(),
                &["xi", "f_analytic", "f_solver", "abs_err"],
            );
            let mut nonconv = 0usize;
            for &xi in &grid {
                let sol = cache
                    .get_or_solve(&template.problem(SymTensor::scalar(xi)))
                    .map_err(RunError::from)?;
                if !sol.converged {
                    nonconv += 1;
                }
                let (fa, _) = analytic_1d(xi);
                csv.row(&[
                    fmt_float(xi),
                    fmt_float(fa),
                    fmt_float(sol.value),
                    fmt_float((sol.value - fa).abs()),
                ]);
            }
            emit(out.as_ref(), &csv.into_string())?;
            if nonconv > 0 {
                return Err(RunError::Solver(format!(
                    "{nonconv} grid solves not converged"
                )));
            }
            Ok(())
        }

        Cmd::Cell { config, out, jumps_csv } => {
            let bytes = std::fs::read(&config).map_err(|e| RunError::Config(e.into()))?;
            let problem: CellProblem =
                serde_json::from_slice(&bytes).map_err(|e| RunError::Config(e.into()))?;
            let sol = cache.get_or_solve(&problem).map_err(RunError::from)?;
            let echo = serde_json::to_value(&problem).map_err(|e| RunError::Config(e.into()))?;
            let report = Report::new(echo.clone(), sol.as_ref().clone());
            let json =
                serde_json::to_string_pretty(&report).map_err(|e| RunError::Config(e.into()))?;
            emit(out.as_ref(), &(json + "\n"))?;
            if let Some(path) = jumps_csv {
                let mut csv = CsvWriter::new(
                    "cell-jumps",
                    &echo.to_string(),
                    &[
                        "facet",
                        "x",
                        "y",
                        "nu_x",
                        "nu_y",
                        "weight",
                        "jump_x",
                        "jump_y",
                        "jump_norm",
                        "normal_component",
                    ],
                );
                for j in &sol.jumps {
                    let jn = (j.jump[0] * j.jump[0] + j.jump[1] * j.jump[1]).sqrt();
                    let nc = j.jump[0] * j.normal[0] + j.jump[1] * j.normal[1];
                    csv.row(&[
                        j.facet.to_string(),
                        fmt_float(j.point[0]),
                        fmt_float(j.point[1]),
                        fmt_float(j.normal[0]),
                        fmt_float(j.normal[1]),
                        fmt_float(j.weight),
                        fmt_float(j.jump[0]),
                        fmt_float(j.jump[1]),
                        fmt_float(jn),
                        fmt_float(nc),
                    ]);
                }
                csv.write(&path).map_err(RunError::from)?;
            }
            if !sol.converged {
                return Err(RunError::Solver(format!(
                    "cell solve not converged after {} iterations (primal {:.3e}, dual {:.3e})",
                    sol.iterations, sol.primal_residual, sol.dual_residual
                )));
            }
            Ok(())
        }

        Cmd::Density {
            geometry,
            cone,
            directions,
            seed,
            refinement,
            elasticity,
            out_csv,
            out_audit,
        } => {
            let template = template_from_flags(&geometry, &cone, &elasticity, refinement)?;
            let config = serde_json::json!({
                "subcommand": "density",
                "template": &template,
                "directions": directions,
                "seed": seed,
            });
            let dirs = direction_set(template.dim(), directions, seed);
            let samples = density_sweep(&template, &cache, &dirs, true, &DEFAULT_LADDER)
                .map_err(RunError::from)?;
            let dim = template.dim();
            let cols: Vec<&str> = if dim == 1 {
                vec!["xi_x", "f", "g", "recession", "class"]
            } else {
                vec!["xi_xx", "xi_yy", "xi_xy", "f", "g", "recession", "class"]
            };
            let mut csv = CsvWriter::new("density", &config.to_string(), &cols);
            for s in &samples {
                let mut row: Vec<String> = s.xi.raw().iter().map(|v| fmt_float(*v)).collect();
                row.push(fmt_float(s.f_value));
                row.push(fmt_float(s.g_value));
                row.push(fmt_float(s.recession.unwrap_or(f64::INFINITY)));
                row.push(format!("{:?}", s.classification));
                csv.row(&row);
            }
            emit(out_csv.as_ref(), &csv.into_string())?;
            let a_op = template
                .elasticity
                .build(template.dim())
                .map_err(RunError::Config)?;
            let audit = audit_growth(&samples, &a_op, template.cone);
            let report = Report::new(config, &audit);
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| RunError::Config(e.into()))?
                + "\n";
            match out_audit {
                Some(path) => write_atomic(&path, json.as_bytes()).map_err(RunError::from)?,
                None => print!("{json}"),
            }
            if samples.iter().any(|s| !s.converged) {
                return Err(RunError::Solver("non-converged samples in sweep".into()));
            }
            Ok(())
        }

        Cmd::Cone {
            geometry,
            cone,
            directions,
            seed,
            refinement,
            elasticity,
            out,
            out_h,
            out_k,
        } => {
            let template = template_from_flags(&geometry, &cone, &elasticity, refinement)?;
            let config = serde_json::json!({
                "subcommand": "cone",
                "template": &template,
                "directions": directions,
                "seed": seed,
            });
            let dirs = direction_set(template.dim(), directions, seed);
            let det =
                detect_cones(&template, &cache, &dirs, &DEFAULT_LADDER).map_err(RunError::from)?;
            if let Some(path) = out_h {
                let json = serde_json::to_string_pretty(&det.h_hom)
                    .map_err(|e| RunError::Config(e.into()))?;
                write_atomic(&path, (json + "\n").as_bytes()).map_err(RunError::from)?;
            }
            if let Some(path) = out_k {
                let json = serde_json::to_string_pretty(&det.k_hom)
                    .map_err(|e| RunError::Config(e.into()))?;
                write_atomic(&path, (json + "\n").as_bytes()).map_err(RunError::from)?;
            }
            let report = Report::new(config, &det);
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| RunError::Config(e.into()))?
                + "\n";
            emit(out.as_ref(), &json)
        }

        Cmd::Macro { config, out } => {
            let bytes = std::fs::read(&config).map_err(|e| RunError::Config(e.into()))?;
            let mc: MacroConfig =
                serde_json::from_slice(&bytes).map_err(|e| RunError::Config(e.into()))?;
            let echo = serde_json::to_value(&mc).map_err(|e| RunError::Config(e.into()))?;
            let result = match &mc.field {
                MacroField::OneD(_) => {
                    let k = mc.k_hom.clone().unwrap_or_else(k_hom_1d);
                    evaluate(&mc.field, &Analytic1dSource, &k, mc.tol)
                }
                MacroField::TwoD(_) => {
                    let template = mc.template.clone().ok_or_else(|| {
                        RunError::Config(Error::InvalidInput(
                            "2D macro fields need a cell template".into(),
                        ))
                    })?;
                    let k = mc.k_hom.clone().ok_or_else(|| {
                        RunError::Config(Error::InvalidInput(
                            "2D macro fields need an explicit tensile cone".into(),
                        ))
                    })?;
                    let source = CellDensitySource::new(template, Arc::new(cache))
                        .with_trust_radius(mc.trust_radius);
                    evaluate(&mc.field, &source, &k, mc.tol)
                }
            }
            .map_err(RunError::from)?;
            let report = Report::new(echo, &result);
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| RunError::Config(e.into()))?
                + "\n";
            emit(out.as_ref(), &json)
        }

        Cmd::Gamma {
            config,
            geometry,
            cone,
            xi,
            n_ladder,
            out,
        } => {
            let exp: EpsilonExperiment = match config {
                Some(path) => {
                    let bytes = std::fs::read(&path).map_err(|e| RunError::Config(e.into()))?;
                    serde_json::from_slice(&bytes).map_err(|e| RunError::Config(e.into()))?
                }
                None => {
                    let geometry = geometry.ok_or_else(|| {
                        RunError::Config(Error::InvalidInput(
                            "gamma needs --config or --geometry/--cone/--xi/--n-ladder".into(),
                        ))
                    })?;
                    let template = template_from_flags(
                        &geometry,
                        &cone.unwrap_or_else(|| "opening".into()),
                        "identity",
                        0,
                    )?;
                    let dim = template.dim();
                    let xi = parse_xi(
                        dim,
                        &xi.ok_or_else(|| {
                            RunError::Config(Error::InvalidInput("--xi required".into()))
                        })?,
                    )?;
                    EpsilonExperiment {
                        template,
                        xi,
                        n_ladder: parse_ladder(&n_ladder.unwrap_or_else(|| "1,2,4,8".into()))?,
                    }
                }
            };
            let config_echo =
                serde_json::to_value(&exp).map_err(|e| RunError::Config(e.into()))?;
            let table = run_sweep(&exp, &cache).map_err(RunError::from)?;
            let mut csv = CsvWriter::new(
                "gamma",
                &config_echo.to_string(),
                &["N", "epsilon", "energy", "gap_to_fhom"],
            );
            for row in &table.rows {
                csv.row(&[
                    row.n.to_string(),
                    fmt_float(row.epsilon),
                    fmt_float(row.energy),
                    fmt_float(row.gap_to_fhom),
                ]);
            }
            emit(out.as_ref(), &csv.into_string())?;
            if table.rows.iter().any(|r| !r.converged) {
                return Err(RunError::Solver("non-converged assembly solves".into()));
            }
            Ok(())
        }

        Cmd::Geometry { geometry, out } => {
            let spec = GeometrySpec::parse(&geometry).map_err(RunError::Config)?;
            let mesh = spec.build().map_err(RunError::Config)?;
            let config = serde_json::json!({"subcommand": "geometry", "geometry": geometry});
            let dump = MeshDump::new(config, mesh);
            let json = serde_json::to_string_pretty(&dump)
                .map_err(|e| RunError::Config(e.into()))?
                + "\n";
            emit(out.as_ref(), &json)
        }
    }
}
