//! Command-line front end: synthesize test fields, denoise, score, extract
//! fingerprint orientations, or run a full experiment config.
//!
//! Exit codes: 0 success, 1 input error, 2 numerical failure.

use clap::{Args, Parser, Subcommand};
use dgm_core::experiment::{parse_target, run_experiment, ExperimentSpec, Generator};
use dgm_core::io::orientation::extract_orientation_field;
use dgm_core::io::ppm::{read_pgm, read_ppm, write_pgm, write_ppm};
use dgm_core::io::tvf::{read_tvf, write_tvf};
use dgm_core::metrics::{
    frobenius_error, geodesic_error_s2, interior_loop, line_field_index, min_eigenvalue_field,
    psnr_report, MetricReport,
};
use dgm_core::solver::{solve, SolverConfig};
use dgm_core::synth::{add_noise, NoiseModel, NoiseSpec};
use dgm_core::{Error, Field, HeatOperator, Result};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dgm", about = "Diffusion generated denoising of target-valued images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic test field, optionally with noise
    Synth(SynthArgs),
    /// Denoise a field or image onto a target set
    Denoise(DenoiseArgs),
    /// Score a field against a reference
    Metrics(MetricsArgs),
    /// Extract a blockwise line-direction field from a grayscale image
    ExtractOrientation(OrientationArgs),
    /// Run a full experiment from a config file
    Run(RunArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// lemniscate | sphere-image | spd-image | rp1-field
    #[arg(long)]
    generator: String,
    /// Grid size per axis (generator default when omitted)
    #[arg(long)]
    n: Option<usize>,
    /// tangent | rician | additive | coordinate
    #[arg(long)]
    noise_model: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output field file (.tvf)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DenoiseArgs {
    /// Input field (.tvf) or image (.ppm/.pgm)
    #[arg(long)]
    input: PathBuf,
    /// box | ball | sphere | spd:n | orth:n | hsv | rp1
    #[arg(long)]
    target: String,
    #[arg(long)]
    tau: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    rel_tol: f64,
    /// Output field or image, format by extension
    #[arg(long)]
    out: PathBuf,
    /// Per-iteration diagnostics CSV
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    input: PathBuf,
    /// Reference field; required for all metrics except min-eig and index
    #[arg(long)]
    reference: Option<PathBuf>,
    /// psnr | geodesic | frobenius | min-eig | index
    #[arg(long)]
    metric: String,
    #[arg(long, default_value_t = 1.0)]
    peak: f64,
    /// Write the result as a CSV row instead of stdout only
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OrientationArgs {
    /// Grayscale input image (.pgm)
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 8)]
    block: usize,
    /// Output line-direction field (.tvf)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (flat key = value)
    config: PathBuf,
}

fn ext(path: &Path) -> &str {
    path.extension().and_then(|e| e.to_str()).unwrap_or("")
}

fn read_field(path: &Path) -> Result<Field> {
    match ext(path) {
        "ppm" => read_ppm(path),
        "pgm" => read_pgm(path),
        _ => read_tvf(path),
    }
}

fn write_field(path: &Path, u: &Field) -> Result<()> {
    match ext(path) {
        "ppm" => write_ppm(path, u),
        "pgm" => write_pgm(path, u),
        _ => write_tvf(path, u),
    }
}

fn parse_generator(name: &str) -> Result<Generator> {
    match name {
        "lemniscate" => Ok(Generator::Lemniscate),
        "sphere-image" => Ok(Generator::SphereImage),
        "spd-image" => Ok(Generator::SpdImage),
        "rp1-field" => Ok(Generator::Rp1Field),
        other => Err(Error::parse(
            "generator",
            format!("unknown generator {}", other),
        )),
    }
}

fn run_synth(args: &SynthArgs) -> Result<()> {
    let generator = parse_generator(&args.generator)?;
    let n = args.n.unwrap_or_else(|| generator.default_size());
    let clean = generator.build(n)?;
    let field = match args.noise_model.as_deref() {
        Some(model) => {
            let model = match model {
                "tangent" => NoiseModel::TangentGaussianSphere { sigma: args.sigma },
                "rician" => NoiseModel::RicianSPD { sigma: args.sigma },
                "additive" => NoiseModel::AdditiveGaussian { sigma: args.sigma },
                "coordinate" => NoiseModel::CoordinateGaussian { sigma: args.sigma },
                other => {
                    return Err(Error::parse(
                        "noise-model",
                        format!("unknown model {}", other),
                    ))
                }
            };
            add_noise(
                &clean,
                &NoiseSpec {
                    model,
                    seed: args.seed,
                },
            )?
        }
        None => clean,
    };
    write_field(&args.out, &field)?;
    println!(
        "wrote {} ({} nodes, k={})",
        args.out.display(),
        field.grid().node_count(),
        field.k()
    );
    Ok(())
}

fn run_denoise(args: &DenoiseArgs) -> Result<()> {
    let target = parse_target(&args.target)?;
    let input = read_field(&args.input)?;
    let mut cfg = SolverConfig::new(args.tau, args.lambda);
    cfg.max_iter = args.max_iter;
    cfg.rel_tol = args.rel_tol;
    cfg.track_energy = args.diagnostics.is_some();
    let heat = HeatOperator::new(input.grid().clone(), cfg.tau)?;
    let result = solve(&cfg, &target, &heat, &input, None)?;
    write_field(&args.out, &result.u)?;
    if let Some(path) = &args.diagnostics {
        std::fs::write(path, result.diagnostics_csv())
            .map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    println!(
        "{} iterations, converged = {}",
        result.iterations, result.converged
    );
    Ok(())
}

fn run_metrics(args: &MetricsArgs) -> Result<()> {
    let input = read_field(&args.input)?;
    let reference = || -> Result<Field> {
        let path = args
            .reference
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("--reference is required".into()))?;
        read_field(path)
    };
    let report = match args.metric.as_str() {
        "psnr" => psnr_report(&input, &reference()?, args.peak)?,
        "geodesic" => MetricReport::new("geodesic", geodesic_error_s2(&input, &reference()?)?),
        "frobenius" => MetricReport::new("frobenius", frobenius_error(&input, &reference()?)?),
        "min-eig" => MetricReport::new("min-eig", min_eigenvalue_field(&input)?),
        "index" => {
            let loop_nodes = interior_loop(input.grid())?;
            MetricReport::new("index", line_field_index(&input, &loop_nodes)?)
        }
        other => {
            return Err(Error::parse(
                "metric",
                format!("unknown metric {}", other),
            ))
        }
    };
    println!("{}", report.to_csv_row());
    if let Some(path) = &args.out {
        std::fs::write(path, format!("name,value\n{}\n", report.to_csv_row()))
            .map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(())
}

fn run_orientation(args: &OrientationArgs) -> Result<()> {
    let img = read_field(&args.input)?;
    let (field, low_confidence) = extract_orientation_field(&img, args.block)?;
    write_field(&args.out, &field)?;
    println!(
        "{}x{} blocks, {} low-confidence",
        field.grid().dims()[0],
        field.grid().dims()[1],
        low_confidence
    );
    Ok(())
}

fn run_run(args: &RunArgs) -> Result<()> {
    let spec = ExperimentSpec::from_file(&args.config)?;
    // echo the resolved config so the run can be reproduced exactly
    print!("{}", spec.to_config_string());
    let report = run_experiment(&spec)?;
    for m in &report.metrics {
        println!("{}", m.to_csv_row());
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(args) => run_synth(args),
        Command::Denoise(args) => run_denoise(args),
        Command::Metrics(args) => run_metrics(args),
        Command::ExtractOrientation(args) => run_orientation(args),
        Command::Run(args) => run_run(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
