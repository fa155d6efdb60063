#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gravfield::{GravError, PhysicalConstants, SyntheticScene};
use gravfield_cli::bench::{crossover_table, run_bench, write_bench, write_crossover};
use gravfield_cli::convergence::{rates_csv, run_convergence, write_convergence};
use gravfield_cli::forward::{run_forward, RunManifest};
use gravfield_cli::{init_threads, HarnessError, Method, MethodParams, Result, RunConfig, StationSpec};

#[derive(Parser)]
#[command(name = "gravfield", version, about = "Forward gravity of voxel density models")]
struct Cli {
    /// Worker threads for the kernels.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Multigrid levels (FEM) or octree depth (FMM).
    #[arg(long)]
    levels: Option<usize>,

    /// FMM expansion degree.
    #[arg(long = "order-p", default_value_t = 8)]
    order_p: usize,

    /// FGMRES relative tolerance.
    #[arg(long, default_value_t = 1e-10)]
    rtol: f64,
}

impl SolverArgs {
    fn params(&self) -> MethodParams {
        MethodParams { levels: self.levels, order_p: self.order_p, rtol: self.rtol }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Gravity on a surface station grid, written as CSV plus a JSON manifest.
    Forward {
        #[arg(long, required_unless_present = "manifest")]
        method: Option<Method>,

        /// Cells per axis of the synthetic cube.
        #[arg(long)]
        cells: Option<usize>,

        /// Density model as JSON instead of the synthetic cube.
        #[arg(long)]
        scene: Option<PathBuf>,

        #[arg(long, default_value = "150x150")]
        stations: StationSpec,

        /// Keep stations away from the domain edges.
        #[arg(long)]
        no_edges: bool,

        #[command(flatten)]
        solver: SolverArgs,

        /// Repeat the run recorded in a manifest.
        #[arg(long, conflicts_with_all = ["method", "cells", "scene"])]
        manifest: Option<PathBuf>,

        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Error norms and rates on the synthetic cube over several grids.
    Convergence {
        #[arg(long, value_delimiter = ',', required = true)]
        method: Vec<Method>,

        #[arg(long, value_delimiter = ',', default_value = "12,24,48")]
        cells: Vec<usize>,

        /// Domain side over anomaly side (6 is the standard cube).
        #[arg(long)]
        aspect_ratio: Option<f64>,

        #[command(flatten)]
        solver: SolverArgs,

        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Wall-clock times per method and grid.
    Bench {
        #[arg(long, value_delimiter = ',', required = true)]
        method: Vec<Method>,

        #[arg(long, value_delimiter = ',', default_value = "12,24,48")]
        cells: Vec<usize>,

        #[arg(long, default_value = "150x150")]
        stations: StationSpec,

        #[command(flatten)]
        solver: SolverArgs,

        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Station counts at which summation stops beating fem-gt and fmm.
    Crossover {
        #[arg(long, value_delimiter = ',', default_value = "12,24,48")]
        cells: Vec<usize>,

        #[arg(long, default_value = "150x150")]
        stations: StationSpec,

        #[command(flatten)]
        solver: SolverArgs,

        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    init_threads(cli.threads)?;
    let constants = PhysicalConstants::default();
    match cli.command {
        Command::Forward { method, cells, scene, stations, no_edges, solver, manifest, out } => {
            let config = match manifest {
                Some(path) => RunManifest::read(&path)?.config,
                None => RunConfig {
                    method: method.expect("clap enforces --method"),
                    cells,
                    params: solver.params(),
                    stations,
                    include_edges: !no_edges,
                    threads: cli.threads,
                    scene,
                },
            };
            let outcome = run_forward(&config)?;
            let (csv, manifest) = outcome.write(&out)?;
            if let Some(s) = &outcome.manifest.solve {
                println!("{}: {} iterations", config.method, s.iterations);
            }
            println!("wrote {} and {}", csv.display(), manifest.display());
        }
        Command::Convergence { method, cells, aspect_ratio, solver, out } => {
            let scene = aspect_ratio.map(SyntheticScene::with_aspect_ratio).unwrap_or_default();
            if !(scene.domain_side > 0.0) {
                return Err(HarnessError::Usage("aspect ratio must be positive".into()));
            }
            let reports = run_convergence(&method, &cells, &solver.params(), &scene, constants)?;
            write_convergence(&out, &reports)?;
            print!("{}", rates_csv(&reports));
        }
        Command::Bench { method, cells, stations, solver, out } => {
            let records = run_bench(&method, &cells, stations, &solver.params(), constants)?;
            for f in write_bench(&out, &records)? {
                println!("wrote {}", f.display());
            }
        }
        Command::Crossover { cells, stations, solver, out } => {
            let methods = [Method::SumG1z, Method::SumAn, Method::FemGt, Method::Fmm];
            let records = run_bench(&methods, &cells, stations, &solver.params(), constants)?;
            let rows = crossover_table(&records);
            for f in write_crossover(&out, &records, &rows)? {
                println!("wrote {}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let HarnessError::Compute(GravError::NotConverged { residual_history, .. }) = &e {
                let tail = residual_history.len().saturating_sub(5);
                eprintln!("last residuals: {:?}", &residual_history[tail..]);
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
