//! End-to-end experiment runs driven by a flat `key = value` config.
//!
//! Pipeline: source, optional noise, optional squaring for line fields,
//! solve, decode, metrics, outputs. Line-field sources are denoised in
//! the doubled-angle representation and decoded against the noisy input.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::heat::HeatOperator;
use crate::io::color::{hsv_to_rgb_field, rgb_to_hsv_field};
use crate::io::ppm::{read_ppm, write_ppm};
use crate::io::tensor::read_raw_tensor;
use crate::io::tvf::write_tvf;
use crate::metrics::{
    frobenius_error, geodesic_error_s2, interior_loop, line_field_index, min_eigenvalue_field,
    psnr, MetricReport,
};
use crate::solver::{solve, SolveResult, SolverConfig};
use crate::synth::{add_noise, lemniscate_signal, rp1_field, spd_image, sphere_image, NoiseModel, NoiseSpec};
use crate::targets::{rp1_decode, rp1_encode, TargetSpec};
use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Lemniscate,
    SphereImage,
    SpdImage,
    Rp1Field,
}

impl Generator {
    pub fn default_size(self) -> usize {
        match self {
            Generator::Lemniscate => 512,
            Generator::SphereImage => 64,
            Generator::SpdImage => 25,
            Generator::Rp1Field => 20,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Generator::Lemniscate => "lemniscate",
            Generator::SphereImage => "sphere-image",
            Generator::SpdImage => "spd-image",
            Generator::Rp1Field => "rp1-field",
        }
    }

    pub fn build(self, n: usize) -> Result<Field> {
        match self {
            Generator::Lemniscate => lemniscate_signal(n),
            Generator::SphereImage => sphere_image(n),
            Generator::SpdImage => spd_image(n),
            Generator::Rp1Field => rp1_field(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorSpace {
    Rgb,
    Hsv,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Synth { generator: Generator, n: usize },
    Image { path: PathBuf, colorspace: ColorSpace },
    Tensor { path: PathBuf, dims: Vec<usize> },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputSpec {
    pub field: Option<PathBuf>,
    pub image: Option<PathBuf>,
    pub diagnostics: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub name: String,
    pub source: Source,
    pub noise: Option<NoiseSpec>,
    pub target: TargetSpec,
    pub solver: SolverConfig,
    pub outputs: OutputSpec,
}

/// Parses `box|ball|sphere|spd:n|orth:n|hsv|rp1`.
pub fn parse_target(s: &str) -> Result<TargetSpec> {
    let (head, arg) = match s.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (s, None),
    };
    let n_arg = || -> Result<usize> {
        arg.and_then(|a| a.parse().ok())
            .ok_or_else(|| Error::parse("target", format!("{} needs a size, e.g. {}:3", head, head)))
    };
    match head {
        "box" => Ok(TargetSpec::Box {
            lo: vec![0.0; 3],
            hi: vec![1.0; 3],
        }),
        "ball" => Ok(TargetSpec::UnitBall(3)),
        "sphere" => Ok(TargetSpec::Sphere(3)),
        "spd" => Ok(TargetSpec::Spd(n_arg()?)),
        "orth" => Ok(TargetSpec::Orthogonal(n_arg()?)),
        "hsv" => Ok(TargetSpec::hsv()),
        "rp1" => Ok(TargetSpec::Rp1ViaSquare),
        other => Err(Error::parse("target", format!("unknown target {}", other))),
    }
}

pub fn target_to_string(t: &TargetSpec) -> String {
    match t {
        TargetSpec::Box { .. } => "box".into(),
        TargetSpec::UnitBall(_) => "ball".into(),
        TargetSpec::Sphere(_) => "sphere".into(),
        TargetSpec::Spd(n) => format!("spd:{}", n),
        TargetSpec::Orthogonal(n) => format!("orth:{}", n),
        TargetSpec::Product(_) => "hsv".into(),
        TargetSpec::Rp1ViaSquare => "rp1".into(),
    }
}

fn parse_noise_model(model: &str, sigma: f64) -> Result<NoiseModel> {
    match model {
        "tangent" => Ok(NoiseModel::TangentGaussianSphere { sigma }),
        "rician" => Ok(NoiseModel::RicianSPD { sigma }),
        "additive" => Ok(NoiseModel::AdditiveGaussian { sigma }),
        "coordinate" => Ok(NoiseModel::CoordinateGaussian { sigma }),
        other => Err(Error::parse("noise.model", format!("unknown model {}", other))),
    }
}

fn noise_model_name(m: &NoiseModel) -> &'static str {
    match m {
        NoiseModel::TangentGaussianSphere { .. } => "tangent",
        NoiseModel::RicianSPD { .. } => "rician",
        NoiseModel::AdditiveGaussian { .. } => "additive",
        NoiseModel::CoordinateGaussian { .. } => "coordinate",
    }
}

impl ExperimentSpec {
    /// Parses the flat `key = value` config text. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse("config", format!("line {}: expected key = value", lineno + 1))
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        let get = |key: &str| -> Option<&String> { map.get(key) };
        let require = |key: &str| -> Result<&String> {
            get(key).ok_or_else(|| Error::parse("config", format!("missing key {}", key)))
        };
        let parse_f64 = |key: &str| -> Result<f64> {
            require(key)?
                .parse()
                .map_err(|_| Error::parse("config", format!("bad number for {}", key)))
        };

        let name = get("name").cloned().unwrap_or_else(|| "experiment".into());
        let source = match require("source.kind")?.as_str() {
            "synth" => {
                let generator = match require("source.generator")?.as_str() {
                    "lemniscate" => Generator::Lemniscate,
                    "sphere-image" => Generator::SphereImage,
                    "spd-image" => Generator::SpdImage,
                    "rp1-field" => Generator::Rp1Field,
                    other => {
                        return Err(Error::parse(
                            "config",
                            format!("unknown generator {}", other),
                        ))
                    }
                };
                let n = match get("source.n") {
                    Some(v) => v.parse().map_err(|_| {
                        Error::parse("config", "bad number for source.n")
                    })?,
                    None => generator.default_size(),
                };
                Source::Synth { generator, n }
            }
            "image" => {
                let colorspace = match get("source.colorspace").map(|s| s.as_str()) {
                    None | Some("rgb") => ColorSpace::Rgb,
                    Some("hsv") => ColorSpace::Hsv,
                    Some(other) => {
                        return Err(Error::parse(
                            "config",
                            format!("unknown colorspace {}", other),
                        ))
                    }
                };
                Source::Image {
                    path: PathBuf::from(require("source.path")?),
                    colorspace,
                }
            }
            "tensor" => {
                let dims = require("source.dims")?
                    .split('x')
                    .map(|t| t.trim().parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::parse("config", "bad source.dims, want e.g. 112x112"))?;
                Source::Tensor {
                    path: PathBuf::from(require("source.path")?),
                    dims,
                }
            }
            other => {
                return Err(Error::parse(
                    "config",
                    format!("unknown source.kind {}", other),
                ))
            }
        };
        let noise = match get("noise.model") {
            Some(model) => Some(NoiseSpec {
                model: parse_noise_model(model, parse_f64("noise.sigma")?)?,
                seed: match get("noise.seed") {
                    Some(v) => v
                        .parse()
                        .map_err(|_| Error::parse("config", "bad noise.seed"))?,
                    None => 0,
                },
            }),
            None => None,
        };
        let target = parse_target(require("target")?)?;
        let mut solver = SolverConfig::new(parse_f64("solver.tau")?, parse_f64("solver.lambda")?);
        if let Some(v) = get("solver.max_iter") {
            solver.max_iter = v
                .parse()
                .map_err(|_| Error::parse("config", "bad solver.max_iter"))?;
        }
        if let Some(v) = get("solver.rel_tol") {
            solver.rel_tol = v
                .parse()
                .map_err(|_| Error::parse("config", "bad solver.rel_tol"))?;
        }
        if let Some(v) = get("solver.track_energy") {
            solver.track_energy = v
                .parse()
                .map_err(|_| Error::parse("config", "bad solver.track_energy"))?;
        }
        let path_of = |key: &str| get(key).map(PathBuf::from);
        let outputs = OutputSpec {
            field: path_of("output.field"),
            image: path_of("output.image"),
            diagnostics: path_of("output.diagnostics"),
            metrics: path_of("output.metrics"),
        };
        Ok(ExperimentSpec {
            name,
            source,
            noise,
            target,
            solver,
            outputs,
        })
    }

    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    /// The fully resolved config, suitable for re-running the experiment.
    pub fn to_config_string(&self) -> String {
        let mut s = format!("name = {}\n", self.name);
        match &self.source {
            Source::Synth { generator, n } => {
                s.push_str("source.kind = synth\n");
                s.push_str(&format!("source.generator = {}\n", generator.name()));
                s.push_str(&format!("source.n = {}\n", n));
            }
            Source::Image { path, colorspace } => {
                s.push_str("source.kind = image\n");
                s.push_str(&format!("source.path = {}\n", path.display()));
                s.push_str(&format!(
                    "source.colorspace = {}\n",
                    match colorspace {
                        ColorSpace::Rgb => "rgb",
                        ColorSpace::Hsv => "hsv",
                    }
                ));
            }
            Source::Tensor { path, dims } => {
                s.push_str("source.kind = tensor\n");
                s.push_str(&format!("source.path = {}\n", path.display()));
                let dims: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
                s.push_str(&format!("source.dims = {}\n", dims.join("x")));
            }
        }
        if let Some(noise) = &self.noise {
            s.push_str(&format!("noise.model = {}\n", noise_model_name(&noise.model)));
            s.push_str(&format!("noise.sigma = {}\n", noise.model.sigma()));
            s.push_str(&format!("noise.seed = {}\n", noise.seed));
        }
        s.push_str(&format!("target = {}\n", target_to_string(&self.target)));
        s.push_str(&format!("solver.tau = {}\n", self.solver.tau));
        s.push_str(&format!("solver.lambda = {}\n", self.solver.lambda));
        s.push_str(&format!("solver.max_iter = {}\n", self.solver.max_iter));
        s.push_str(&format!("solver.rel_tol = {}\n", self.solver.rel_tol));
        s.push_str(&format!(
            "solver.track_energy = {}\n",
            self.solver.track_energy
        ));
        for (key, path) in [
            ("output.field", &self.outputs.field),
            ("output.image", &self.outputs.image),
            ("output.diagnostics", &self.outputs.diagnostics),
            ("output.metrics", &self.outputs.metrics),
        ] {
            if let Some(p) = path {
                s.push_str(&format!("{} = {}\n", key, p.display()));
            }
        }
        s
    }
}

#[derive(Debug)]
pub struct RunReport {
    pub result: SolveResult,
    /// The field in its natural representation (decoded for line fields,
    /// RGB for images denoised in the hue-saturation-value space).
    pub output: Field,
    pub metrics: Vec<MetricReport>,
}

fn write_metrics_csv(path: &PathBuf, metrics: &[MetricReport]) -> Result<()> {
    let mut text = String::from("name,value\n");
    for m in metrics {
        text.push_str(&m.to_csv_row());
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunReport> {
    // source stage: clean reference (when synthetic) and raw input
    let (clean, input): (Option<Field>, Field) = match &spec.source {
        Source::Synth { generator, n } => {
            let f = generator.build(*n)?;
            (Some(f.clone()), f)
        }
        Source::Image { path, .. } => (None, read_ppm(path)?),
        Source::Tensor { path, dims } => (None, read_raw_tensor(path, dims)?.0),
    };
    let noisy = match &spec.noise {
        Some(noise) => add_noise(&input, noise)?,
        None => input.clone(),
    };

    let is_rp1 = spec.target == TargetSpec::Rp1ViaSquare;
    let is_hsv = matches!(
        spec.source,
        Source::Image {
            colorspace: ColorSpace::Hsv,
            ..
        }
    );
    // encode stage: line fields are squared, images optionally move to HSV
    let solver_input = if is_rp1 {
        rp1_encode(&noisy)?
    } else if is_hsv {
        rgb_to_hsv_field(&noisy)?
    } else {
        noisy.clone()
    };

    let heat = HeatOperator::new(solver_input.grid().clone(), spec.solver.tau)?;
    let result = solve(&spec.solver, &spec.target, &heat, &solver_input, None)?;

    // decode stage
    let output = if is_rp1 {
        rp1_decode(&result.u, &noisy)?.0
    } else if is_hsv {
        hsv_to_rgb_field(&result.u)?
    } else {
        result.u.clone()
    };

    let mut metrics = Vec::new();
    metrics.push(MetricReport::new("iterations", result.iterations as f64));
    metrics.push(MetricReport::new(
        "converged",
        if result.converged { 1.0 } else { 0.0 },
    ));
    if let Some(clean) = &clean {
        match spec.target {
            TargetSpec::Sphere(3) => {
                metrics.push(MetricReport::new(
                    "geodesic_error_noisy",
                    geodesic_error_s2(&noisy, clean)?,
                ));
                metrics.push(MetricReport::new(
                    "geodesic_error_denoised",
                    geodesic_error_s2(&output, clean)?,
                ));
            }
            TargetSpec::Spd(3) => {
                metrics.push(MetricReport::new(
                    "frobenius_error_noisy",
                    frobenius_error(&noisy, clean)?,
                ));
                metrics.push(MetricReport::new(
                    "frobenius_error_denoised",
                    frobenius_error(&output, clean)?,
                ));
                metrics.push(MetricReport::new(
                    "min_eigenvalue",
                    min_eigenvalue_field(&output)?,
                ));
            }
            _ => {
                metrics.push(MetricReport::new("psnr_noisy", psnr(&noisy, clean, 1.0)?));
                metrics.push(MetricReport::new(
                    "psnr_denoised",
                    psnr(&output, clean, 1.0)?,
                ));
            }
        }
    }
    if is_rp1 {
        let loop_nodes = interior_loop(result.u.grid())?;
        metrics.push(MetricReport::new(
            "index",
            line_field_index(&result.u, &loop_nodes)?,
        ));
    }

    // output stage
    if let Some(path) = &spec.outputs.field {
        write_tvf(path, &output)?;
    }
    if let Some(path) = &spec.outputs.image {
        write_ppm(path, &output)?;
    }
    if let Some(path) = &spec.outputs.diagnostics {
        fs::write(path, result.diagnostics_csv())
            .map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    if let Some(path) = &spec.outputs.metrics {
        write_metrics_csv(path, &metrics)?;
    }
    Ok(RunReport {
        result,
        output,
        metrics,
    })
}
