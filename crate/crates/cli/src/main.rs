//! Command-line surface wiring the pipeline: ingest data and configuration,
//! assemble the system, evaluate, analyze, certify, render.
//!
//! Exit codes: 0 success, 1 validation/configuration error, 2 convergence
//! failure, 3 stability-bound violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hvrfif_core::error::Error;
use hvrfif_core::evaluator::{
    chaos_game, solve_fixed_point, sup_norm_bound, SolverOptions,
};
use hvrfif_core::io;
use hvrfif_core::smoothness::{compute_constants, empirical_holder};
use hvrfif_core::stability::{harness, PerturbationKind};
use hvrfif_core::svg::render_curve;

#[derive(Parser)]
#[command(
    name = "hvrfif",
    about = "Build, evaluate and analyze hidden-variable recurrent fractal interpolation systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate inputs, assemble the system and write a model file.
    Build(BuildArgs),
    /// Solve for the interpolant on a grid; write a curve CSV and optionally
    /// an SVG, or emit chaos-game scatter samples.
    Eval(EvalArgs),
    /// Compute the Holder smoothness certificate and the empirical exponent.
    Holder(HolderArgs),
    /// Certify a stability bound on seeded random perturbations.
    Stability(StabilityArgs),
    /// Render the curve to SVG from a model file.
    Render(RenderArgs),
}

#[derive(Args)]
struct BuildArgs {
    /// Dataset CSV with header x,y,z.
    #[arg(long)]
    data: PathBuf,
    /// Partition and factor configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output model file (JSON).
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Grid resolution, a power of two plus one.
    #[arg(long, default_value_t = (1 << 12) + 1)]
    resolution: usize,
    /// Residual tolerance for the fixed-point iteration.
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
    #[arg(long, default_value_t = 400)]
    max_iters: usize,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            resolution: self.resolution,
            tolerance: self.tolerance,
            max_iters: self.max_iters,
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    /// Curve CSV output path (columns x,f1,f2).
    #[arg(long)]
    output: PathBuf,
    /// Optional SVG rendering of f1.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Emit this many chaos-game samples instead of the grid curve.
    #[arg(long)]
    chaos: Option<usize>,
    /// Random seed; required with --chaos.
    #[arg(long, requires = "chaos")]
    seed: Option<u64>,
}

#[derive(Args)]
struct HolderArgs {
    #[arg(long)]
    model: PathBuf,
    /// Grid resolution, a power of two plus one. The default is finer than
    /// eval's so the oscillation scan has clean scales to regress over.
    #[arg(long, default_value_t = (1 << 14) + 1)]
    resolution: usize,
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
    #[arg(long, default_value_t = 400)]
    max_iters: usize,
    /// Exponent knob for the critical case, in (0, 1).
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Comma-separated dyadic exponents e; oscillation scales are 2^-e.
    #[arg(long, default_value = "7,8,9,10,11,12,13,14")]
    scales: String,
    /// Reuse a previously written curve CSV instead of re-solving.
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Use measured grid sups instead of the a priori sup-norm bound.
    #[arg(long, default_value_t = false)]
    measured_sups: bool,
    /// Optional JSON report output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct StabilityArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    /// Which bound to certify: 4 abscissa, 5 ordinate, 6 hidden, 7 combined.
    #[arg(long)]
    theorem: u8,
    #[arg(long, default_value_t = 0.0)]
    max_dx: f64,
    #[arg(long, default_value_t = 0.0)]
    max_dy: f64,
    #[arg(long, default_value_t = 0.0)]
    max_dz: f64,
    #[arg(long)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    /// JSON report output.
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    svg: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build(args) => cmd_build(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Holder(args) => cmd_holder(args),
        Command::Stability(args) => cmd_stability(args),
        Command::Render(args) => cmd_render(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::NoConvergence { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn cmd_build(args: BuildArgs) -> Result<ExitCode, Error> {
    let nodes = io::read_dataset_csv(&args.data)?;
    let config = io::read_system_config(&args.config)?;
    let model = io::model_from_inputs(&nodes, &config)?;
    io::write_model_file(&args.output, &model, &config)?;
    println!("nodes: {}", model.dataset.node_count());
    println!("regions: {}", model.n_regions());
    println!("domains: {}", model.partition.n_domains());
    println!("S_bar = {} (contraction requires < 1)", model.s_bar);
    println!("L_L = {} (largest region/domain ratio)", model.metadata.ratio_max);
    println!("l_L = {} (smallest region/domain ratio)", model.metadata.ratio_min);
    println!("connection matrix (rows sum to 1):");
    for row in model.connection.to_strings() {
        println!("  [{}]", row.join(", "));
    }
    println!("model written to {}", args.output.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(args: EvalArgs) -> Result<ExitCode, Error> {
    let (model, _) = io::load_model_file(&args.model)?;
    if let Some(n_points) = args.chaos {
        let seed = args.seed.expect("clap enforces --seed with --chaos");
        let samples = chaos_game(&model, n_points, seed)?;
        io::write_samples_csv(&args.output, &samples, &model.dataset)?;
        println!(
            "{} chaos-game samples written to {}",
            samples.len(),
            args.output.display()
        );
        return Ok(ExitCode::SUCCESS);
    }
    let grid = solve_fixed_point(&model, &args.solver.options())?;
    io::write_curve_csv(&args.output, &grid, &model.dataset)?;
    println!(
        "converged in {} iterations, residual {}",
        grid.iterations, grid.residual
    );
    if grid.tolerance_below_grid_floor {
        println!(
            "note: tolerance {} is below the grid discretization floor (~{:.3e}); \
             the grid curve is converged but its distance to the true curve is \
             limited by the resolution",
            grid.tolerance,
            grid.interp_error_estimate / (1.0 - model.s_bar)
        );
    }
    println!("curve written to {}", args.output.display());
    if let Some(svg_path) = args.svg {
        std::fs::write(&svg_path, render_curve(&grid, &model.dataset))?;
        println!("svg written to {}", svg_path.display());
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct HolderOutput {
    certificate: hvrfif_core::smoothness::SmoothnessReport,
    empirical: hvrfif_core::smoothness::HolderEstimate,
}

fn cmd_holder(args: HolderArgs) -> Result<ExitCode, Error> {
    let (model, _) = io::load_model_file(&args.model)?;
    let opts = SolverOptions {
        resolution: args.resolution,
        tolerance: args.tolerance,
        max_iters: args.max_iters,
    };
    let grid = match &args.curve {
        Some(path) => io::read_curve_csv(path, &model.dataset)?,
        None => solve_fixed_point(&model, &opts)?,
    };
    let f_bounds = if args.measured_sups {
        let sup = |vs: &[f64]| vs.iter().map(|v| v.abs()).fold(0.0, f64::max);
        (sup(&grid.f1), sup(&grid.f2))
    } else {
        sup_norm_bound(&model)
    };
    let report = compute_constants(&model, f_bounds, args.alpha)?;
    let exponents: Result<Vec<u32>, Error> = args
        .scales
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| Error::Config(format!("bad scale exponent '{t}'")))
        })
        .collect();
    let exponents = exponents?;
    let scales: Vec<f64> = exponents.iter().map(|&e| 0.5f64.powi(e as i32)).collect();
    let empirical = empirical_holder(&grid, &scales)?;

    println!("{:<22} {}", "case", format!("{:?}", report.case).to_lowercase());
    println!("{:<22} {:.17}", "delta", report.delta);
    println!("{:<22} {:.17}", "tau1", report.tau1);
    println!("{:<22} {:.6e}", "L1", report.l1);
    println!("{:<22} {:.17}", "tau2", report.tau2);
    println!("{:<22} {:.6e}", "L2", report.l2);
    println!("{:<22} {:.6e}", "D", report.intermediate.d);
    println!("{:<22} {:.6e}", "M", report.intermediate.m);
    println!("{:<22} {}", "L_L", report.intermediate.ratio_max);
    println!("{:<22} {}", "l_L", report.intermediate.ratio_min);
    println!(
        "{:<22} {:.4}{}",
        "empirical tau1",
        empirical.tau1,
        if empirical.degenerate_f1 { " (flat)" } else { "" }
    );
    println!(
        "{:<22} {:.4}{}",
        "empirical tau2",
        empirical.tau2,
        if empirical.degenerate_f2 { " (flat)" } else { "" }
    );
    let out = HolderOutput {
        certificate: report,
        empirical,
    };
    let json = serde_json::to_string_pretty(&out)?;
    match &args.output {
        Some(path) => std::fs::write(path, &json)?,
        None => println!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_stability(args: StabilityArgs) -> Result<ExitCode, Error> {
    let kind = PerturbationKind::from_theorem_tag(args.theorem).ok_or_else(|| {
        Error::Config(format!(
            "--theorem must be 4, 5, 6 or 7; got {}",
            args.theorem
        ))
    })?;
    let (model, _) = io::load_model_file(&args.model)?;
    let smoothness = compute_constants(&model, sup_norm_bound(&model), 0.1)?;
    let magnitudes = [(args.max_dx, args.max_dy, args.max_dz)];
    let report = harness(
        &model,
        &smoothness,
        kind,
        &magnitudes,
        args.trials,
        args.seed,
        &args.solver.options(),
    )?;
    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(&args.report, json)?;
    let worst = report
        .trials
        .iter()
        .map(|t| t.margin)
        .fold(f64::INFINITY, f64::min);
    println!(
        "{} trials, worst margin {} (budget {})",
        report.trials.len(),
        worst,
        report.tolerance_budget
    );
    println!("report written to {}", args.report.display());
    if report.all_within {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("bound violated beyond the comparison budget");
        Ok(ExitCode::from(3))
    }
}

fn cmd_render(args: RenderArgs) -> Result<ExitCode, Error> {
    let (model, _) = io::load_model_file(&args.model)?;
    let grid = solve_fixed_point(&model, &args.solver.options())?;
    std::fs::write(&args.svg, render_curve(&grid, &model.dataset))?;
    println!("svg written to {}", args.svg.display());
    Ok(ExitCode::SUCCESS)
}
