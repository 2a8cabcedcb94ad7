//! `rayvote` command line: synthesize test scenes, aggregate features into
//! point clouds, evaluate scheme quality, and benchmark throughput.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure, 2 usage or validation
//! failure.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Environment variable overriding the default worker count.
const THREADS_ENV: &str = "RAYVOTE_THREADS";

#[derive(Parser)]
#[command(name = "rayvote", version, about = "TSDF-guided multi-view feature aggregation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PresetArg {
    Plane,
    TwoWalls,
    BoxRoom,
    SphereClutter,
}

impl From<PresetArg> for rayvote::ScenePreset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Plane => rayvote::ScenePreset::Plane,
            PresetArg::TwoWalls => rayvote::ScenePreset::TwoWalls,
            PresetArg::BoxRoom => rayvote::ScenePreset::BoxRoom,
            PresetArg::SphereClutter => rayvote::ScenePreset::SphereClutter,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Rma,
    Da,
    Va,
}

impl SchemeArg {
    fn name(self) -> &'static str {
        match self {
            SchemeArg::Rma => "rma",
            SchemeArg::Da => "da",
            SchemeArg::Va => "va",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SamplingArg {
    Nearest,
    Bilinear,
}

impl From<SamplingArg> for rayvote::SampleMode {
    fn from(s: SamplingArg) -> Self {
        match s {
            SamplingArg::Nearest => rayvote::SampleMode::Nearest,
            SamplingArg::Bilinear => rayvote::SampleMode::Bilinear,
        }
    }
}

fn parse_dims(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected W,H,D, got {s:?}"));
    }
    let mut dims = [0usize; 3];
    for (slot, part) in dims.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("invalid dimension {part:?}"))?;
        if *slot == 0 {
            return Err("dimensions must be at least 1".into());
        }
    }
    Ok(dims)
}

#[derive(Args)]
struct SynthArgs {
    /// Analytic scene preset.
    #[arg(long, value_enum)]
    preset: PresetArg,
    /// Number of camera views.
    #[arg(long, default_value_t = 8)]
    views: usize,
    /// Grid dimensions as W,H,D voxels.
    #[arg(long, value_parser = parse_dims, default_value = "64,64,32")]
    dims: [usize; 3],
    /// Voxel edge length in meters.
    #[arg(long, default_value_t = rayvote::defaults::AGGREGATION_VOXEL_SIZE)]
    voxel: f64,
    /// TSDF truncation in meters; defaults to 3 x voxel.
    #[arg(long)]
    truncation: Option<f64>,
    /// Feature-map width and height in pixels.
    #[arg(long, default_value_t = 64)]
    image_size: u32,
    /// Feature channels per pixel.
    #[arg(long, default_value_t = 8)]
    channels: u32,
    /// Seed for feature fields and camera jitter.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for grid, trajectory, feature maps, and manifest.
    #[arg(long)]
    out: std::path::PathBuf,
}

#[derive(Args)]
struct SchemeOverrides {
    /// Weight retention threshold (rma).
    #[arg(long)]
    theta: Option<f64>,
    /// Samples per pixel ray (rma/da).
    #[arg(long)]
    samples: Option<usize>,
    /// Maximum ray distance in meters; grid diagonal when omitted.
    #[arg(long)]
    t_max: Option<f64>,
    /// TSDF sharpness before the sigmoid, in 1/m (rma).
    #[arg(long)]
    scale: Option<f64>,
    /// Feature sampling mode (rma/da).
    #[arg(long, value_enum)]
    sampling: Option<SamplingArg>,
    /// Window half-count around the first hitting point (da).
    #[arg(long)]
    k: Option<usize>,
    /// Surface band in meters for the va cloud; grid truncation when
    /// omitted.
    #[arg(long)]
    band: Option<f64>,
}

#[derive(Args)]
struct AggregateArgs {
    /// Scene manifest to aggregate.
    #[arg(long)]
    manifest: std::path::PathBuf,
    /// Aggregation scheme.
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    /// Output PLY path; defaults to the manifest's output entry.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// Also merge the cloud into sparse voxels and write a second PLY
    /// alongside the output; the optional value is the cell size in meters.
    #[arg(long, num_args = 0..=1, default_missing_value = "0.01")]
    merge_voxel: Option<f64>,
    /// Worker threads; defaults to RAYVOTE_THREADS or all cores.
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    overrides: SchemeOverrides,
}

#[derive(Args)]
struct EvalArgs {
    /// Scene manifest to evaluate (must carry a preset for the oracle).
    #[arg(long)]
    manifest: std::path::PathBuf,
    /// Comma-separated schemes to evaluate.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [SchemeArg::Rma, SchemeArg::Da, SchemeArg::Va])]
    schemes: Vec<SchemeArg>,
    /// Write the machine-readable report to this TOML file.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// Worker threads; defaults to RAYVOTE_THREADS or all cores.
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    overrides: SchemeOverrides,
}

#[derive(Args)]
struct BenchArgs {
    /// Scene manifest to benchmark.
    #[arg(long)]
    manifest: std::path::PathBuf,
    /// Worker threads; defaults to RAYVOTE_THREADS or all cores.
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    overrides: SchemeOverrides,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic scene: TSDF grid, trajectory, feature maps, and a
    /// manifest.
    Synth(SynthArgs),
    /// Aggregate features into a PLY point cloud.
    Aggregate(AggregateArgs),
    /// Compare schemes against the analytic oracle.
    Eval(EvalArgs),
    /// Report ray-marching throughput.
    Bench(BenchArgs),
}

/// Failures sorted by exit code.
enum Failure {
    /// Invalid flags or parameters: exit 2.
    Usage(String),
    /// Runtime or I/O problems: exit 1.
    Runtime(anyhow::Error),
}

impl From<rayvote::Error> for Failure {
    fn from(e: rayvote::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => commands::synth(args),
        Command::Aggregate(args) => commands::aggregate(args),
        Command::Eval(args) => commands::eval(args),
        Command::Bench(args) => commands::bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
